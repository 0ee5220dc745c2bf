"""Numerical toolkit for the quantum Heisenberg manifold spectral triple."""

__version__ = "0.1.0"

from .algebra import AlgebraElement, ModelParams, Window, star  # noqa: E402,F401
from .errors import QHMError  # noqa: E402,F401
