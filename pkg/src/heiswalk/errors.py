"""Exception types shared across the library."""


class HeiswalkError(Exception):
    """Base class for all library-specific errors."""


class DegenerateGradient(HeiswalkError):
    """Horizontal gradient below the floor where a normalized quantity is needed."""


class GaugeZero(HeiswalkError):
    """Gauge-power jet requested at the group origin."""


class ConstraintViolation(HeiswalkError):
    """Scaling exponents off the admissible curve, or an exponent out of range."""


class ConfigInvalid(HeiswalkError):
    """Malformed or inconsistent solver / experiment configuration."""


class NonConvergence(HeiswalkError):
    """Fixed-point iteration hit its sweep budget before reaching tolerance."""

    def __init__(self, iterations: int, residual: float):
        self.iterations = iterations
        self.residual = residual
        super().__init__(
            f"no convergence after {iterations} sweeps (residual {residual:.3e})"
        )


class NotOnBoundary(HeiswalkError):
    """A boundary-point precondition failed."""
