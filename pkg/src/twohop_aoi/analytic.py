"""Closed-form average AoI for one-hop and two-hop links, with and without ARQ.

All quantities are in slots. Nothing here touches the chain solver; the
two routes are kept apart so that comparing them means something.
"""

from __future__ import annotations

from dataclasses import dataclass

from .params import LinkParams, Scheme, check_probability

__all__ = [
    "AoIResult",
    "LinkParams",
    "SchemeMoments",
    "aoi",
    "aoi_from_moments",
    "aoi_gap",
    "aoi_gap_factored",
    "aoi_single_arq",
    "aoi_single_noarq",
    "aoi_two_arq",
    "aoi_two_noarq",
]

_MOMENT_TOL = 1e-9


@dataclass(frozen=True)
class SchemeMoments:
    """Renewal-cycle moments: E[Z], E[Z^2] and E[tau Z]."""

    e_z: float
    e_z2: float
    e_tau_z: float

    def check(self) -> None:
        slack = _MOMENT_TOL * max(1.0, abs(self.e_z2))
        if not self.e_z >= 1.0 - _MOMENT_TOL:
            raise ValueError(f"e_z must be >= 1, got {self.e_z}")
        if not self.e_z2 >= self.e_z**2 - slack:
            raise ValueError(f"e_z2={self.e_z2} is below e_z^2={self.e_z ** 2}")
        if not self.e_tau_z >= self.e_z - _MOMENT_TOL * max(1.0, self.e_z):
            raise ValueError(f"e_tau_z={self.e_tau_z} is below e_z={self.e_z}")


@dataclass(frozen=True)
class AoIResult:
    average_aoi: float
    moments: SchemeMoments


def aoi_from_moments(m: SchemeMoments) -> float:
    """Time-average age of a sawtooth built from i.i.d. renewal cycles."""
    m.check()
    return m.e_tau_z / m.e_z + m.e_z2 / (2.0 * m.e_z)


def _result(moments: SchemeMoments, closed_form: float) -> AoIResult:
    # the closed form is what we report; the moments are carried alongside
    moments.check()
    return AoIResult(average_aoi=closed_form, moments=moments)


def aoi_single_noarq(q: float) -> AoIResult:
    q = check_probability("q", q)
    e_z = 1.0 / q
    moments = SchemeMoments(e_z=e_z, e_z2=(2.0 - q) / q**2, e_tau_z=e_z)
    return _result(moments, 0.5 + 1.0 / q)


def aoi_single_arq(q: float) -> AoIResult:
    """Single hop with retransmission: the delivered packet is as old as the
    previous inter-delivery interval, so E[tau Z] = E[Z]^2."""
    q = check_probability("q", q)
    e_z = 1.0 / q
    moments = SchemeMoments(e_z=e_z, e_z2=(2.0 - q) / q**2, e_tau_z=e_z * e_z)
    return _result(moments, (0.5 + 1.0 / q) + (1.0 / q - 1.0))


def aoi_two_noarq(params: LinkParams) -> AoIResult:
    p1, p2 = params.p1, params.p2
    e_z = (1.0 + p1) / (p1 * p2)
    e_z2 = 2.0 * (1.0 + p1) ** 2 / (p1 * p2) ** 2 - 1.0 / p2 - 3.0 / (p1 * p2)
    # every delivered packet crossed both hops in consecutive slots: tau = 2
    moments = SchemeMoments(e_z=e_z, e_z2=e_z2, e_tau_z=2.0 * e_z)
    return _result(moments, 1.5 + (1.0 + p1) / (p1 * p2) - 1.0 / (1.0 + p1))


def aoi_two_arq(params: LinkParams) -> AoIResult:
    p1, p2 = params.p1, params.p2
    e_z = 1.0 / p1 + 1.0 / p2
    e_z2 = 2.0 / p1**2 + 2.0 / p2**2 + 2.0 / (p1 * p2) - (1.0 / p1 + 1.0 / p2)
    # tau = 1 + X with X ~ Geom(p2) independent of the following cycle
    e_x = 1.0 / p2
    moments = SchemeMoments(e_z=e_z, e_z2=e_z2, e_tau_z=(1.0 + e_x) * e_z)
    return _result(moments, 0.5 + 1.0 / p1 + 2.0 / p2 - 1.0 / (p1 + p2))


def aoi_gap_factored(params: LinkParams) -> float:
    p1, p2 = params.p1, params.p2
    numerator = (1.0 - p2) * ((p1**2 - 1.0) * (p1 + p2) - p1 * p2)
    return numerator / ((p1 + p2) * (p1 * p2) * (1.0 + p1))


def aoi_gap(params: LinkParams) -> float:
    """ARQ minus non-ARQ average AoI on a two-hop link; never positive.

    Computed by subtraction and cross-checked against the factored form.
    """
    arq = aoi_two_arq(params).average_aoi
    noarq = aoi_two_noarq(params).average_aoi
    gap = arq - noarq
    factored = aoi_gap_factored(params)
    if abs(gap - factored) > 1e-12 * max(1.0, abs(noarq)):
        raise ArithmeticError(
            f"gap forms disagree at {params}: subtraction {gap!r}, factored {factored!r}"
        )
    return gap


def aoi(scheme, params: LinkParams) -> AoIResult:
    """Dispatch to the closed form for ``scheme``."""
    scheme = Scheme.parse(scheme)
    if scheme is Scheme.SINGLE_NOARQ:
        return aoi_single_noarq(params.q)
    if scheme is Scheme.SINGLE_ARQ:
        return aoi_single_arq(params.q)
    if scheme is Scheme.TWO_NOARQ:
        return aoi_two_noarq(params)
    return aoi_two_arq(params)
