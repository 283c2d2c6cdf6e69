"""Numerical toolkit for bubbles of the Poincare-Sobolev equation on the hyperbolic ball."""

__version__ = "0.1.0"

from .errors import HyperbubbleError  # noqa: E402
from .family import BubbleFamily  # noqa: E402
from .geometry import Params, dist, translate, validate_params  # noqa: E402
from .ground_state import RadialProfile, ground_state, solve_ground_state  # noqa: E402

__all__ = ["BubbleFamily", "HyperbubbleError", "Params", "RadialProfile", "dist", "ground_state",
           "solve_ground_state", "translate", "validate_params", "__version__"]
