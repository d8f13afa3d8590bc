"""Exact F2 computations for embedded contact homology of open books."""

__version__ = "0.1.0"

from .errors import EchobdError  # noqa: E402,F401
