"""Minimal graph sheets meeting along a common free boundary.

Modules: ``metric`` (ambient metric, G and chi), ``graph_mse`` (grid
residuals), ``legendre`` (hodograph transform), ``linearize`` (principal
linearization at the junction), ``adn`` (ellipticity and complementing
checks), ``junction`` (discrete weighted-area minimiser) and ``cli``.
"""
from ._accel import HAVE_NUMBA, backend
from .errors import FreeJunctionError

__version__ = "0.1.0"

__all__ = ["HAVE_NUMBA", "backend", "FreeJunctionError", "__version__"]
