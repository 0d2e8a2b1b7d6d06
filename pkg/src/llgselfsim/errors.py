"""Exception hierarchy shared by the integrators, fitters and the CLI."""


class LLGError(Exception):
    """Base class for every failure raised by this package."""


class StepSizeUnderflow(LLGError):
    """The adaptive step controller could not meet the requested tolerance."""


class FrameDrift(LLGError):
    """Orthonormality of the integrated trihedron degraded past tolerance."""


class EnergyDrift(LLGError):
    """The conserved energy of the f-equation drifted past tolerance."""


class OutOfRange(LLGError):
    """Evaluation requested outside the integrated interval."""


class NotConverged(LLGError):
    """A fixed-point or root iteration did not settle."""


class DegenerateAmplitude(LLGError):
    """Oscillation amplitude is too small for its phase to be defined."""


class ZeroCrossing(LLGError):
    """|f|^2 came too close to zero for a polar phase to be tracked."""


class NoRoot(LLGError):
    """No sign change of the target function was bracketed."""


class TailNotNegligible(LLGError):
    """The analytic tail majorant is not small next to the computed part."""


class InfiniteEnergy(LLGError):
    """The requested energy is infinite (undamped case)."""


class PoleError(LLGError, ValueError):
    """Gamma function evaluated at a non-positive integer."""
