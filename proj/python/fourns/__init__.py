"""Truncated fourth-order NLS, normal form expansion and measure experiments."""

from ._fourns import *  # noqa: F401,F403
from ._fourns import FormKind, FourierState, GaussianSampler  # noqa: F401

__all__ = [name for name in dir() if not name.startswith("_")]
