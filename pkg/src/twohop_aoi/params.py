"""Link parameters and the scheme identifiers shared by every module."""

from __future__ import annotations

import enum
import math
from dataclasses import dataclass


class Scheme(str, enum.Enum):
    SINGLE_NOARQ = "single-noarq"
    SINGLE_ARQ = "single-arq"
    TWO_NOARQ = "two-noarq"
    TWO_ARQ = "two-arq"

    @property
    def two_hop(self) -> bool:
        return self in (Scheme.TWO_NOARQ, Scheme.TWO_ARQ)

    @property
    def arq(self) -> bool:
        return self in (Scheme.SINGLE_ARQ, Scheme.TWO_ARQ)

    @classmethod
    def parse(cls, value: "str | Scheme") -> "Scheme":
        if isinstance(value, Scheme):
            return value
        key = str(value).strip().lower().replace("_", "-")
        aliases = {
            "noarq": cls.TWO_NOARQ,
            "non-arq": cls.TWO_NOARQ,
            "arq": cls.TWO_ARQ,
            "single-non-arq": cls.SINGLE_NOARQ,
            "two-non-arq": cls.TWO_NOARQ,
        }
        if key in aliases:
            return aliases[key]
        try:
            return cls(key)
        except ValueError:
            choices = ", ".join(s.value for s in cls)
            raise ValueError(f"unknown scheme {value!r}; expected one of {choices}") from None

    def __str__(self) -> str:
        return self.value


SCHEME_ORDER = {s: i for i, s in enumerate(Scheme)}


def check_probability(name: str, value: float) -> float:
    """Return ``value`` as float, raising ValueError unless it lies in (0, 1]."""
    value = float(value)
    if math.isnan(value) or not 0.0 < value <= 1.0:
        raise ValueError(f"{name} must lie in (0, 1], got {value!r}")
    return value


@dataclass(frozen=True)
class LinkParams:
    """Per-hop decode success probabilities.

    A single-hop link is represented with ``p2`` left at 1; the hop
    probability is then ``q`` (an alias of ``p1``).
    """

    p1: float
    p2: float = 1.0

    def __post_init__(self) -> None:
        object.__setattr__(self, "p1", check_probability("p1", self.p1))
        object.__setattr__(self, "p2", check_probability("p2", self.p2))

    @classmethod
    def single(cls, q: float) -> "LinkParams":
        return cls(p1=q, p2=1.0)

    @property
    def q(self) -> float:
        return self.p1
