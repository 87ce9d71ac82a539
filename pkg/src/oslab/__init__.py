"""Numerical certificates for operator-space norms, interpolation and coarse-embedding constructions."""

from ._jit import USE_NUMBA

__version__ = "0.1.0"

__all__ = ["USE_NUMBA", "__version__"]
