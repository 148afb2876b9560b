"""Average age of information for one- and two-hop status-update links, with and without ARQ."""

__version__ = "0.1.0"

from .params import LinkParams, Scheme  # noqa: E402

__all__ = ["LinkParams", "Scheme", "__version__"]
