"""Self-similar solutions of the Landau-Lifshitz-Gilbert equation with a jump initial datum.

The profile m(s / sqrt(t)) is governed by a Serret-Frenet system with
Gaussian curvature and linear torsion; this package integrates it, extracts
its asymptotics, maps (c0, alpha) to the limit vectors A+/- and checks the
resulting solution of the LLG equation.
"""

from .errors import LLGError
from .model import DEFAULT_TOLERANCES, Frame, ModelParams, ToleranceConfig

__version__ = "0.1.0"

__all__ = ["DEFAULT_TOLERANCES", "Frame", "LLGError", "ModelParams", "ToleranceConfig", "__version__"]
