"""Exception types raised by the simulator."""


class ParameterError(ValueError):
    """A physical or numerical parameter is outside its allowed range."""


class DegenerateSteadyState(ArithmeticError):
    """The write-phase steady state is not unique."""

    def __init__(self, null_dim, message=None):
        self.null_dim = null_dim
        super().__init__(message or f"steady state is degenerate (null-space dimension {null_dim})")


class UndefinedCoherence(ArithmeticError):
    """Closed-form coherence has a vanishing denominator."""


class IntegrationDiverged(ArithmeticError):
    """A fixed-step trajectory left the physical state space."""

    def __init__(self, step, time, reason):
        self.step = step
        self.time = time
        self.reason = reason
        super().__init__(f"integration diverged at step {step} (t={time:.6g}): {reason}; try a smaller dt")


class TruncatedPulse(ValueError):
    """A pulse does not fall below half maximum on one side of its peak."""

    def __init__(self, side, context=""):
        self.side = side
        msg = f"pulse truncated on the {side} side: no half-maximum crossing"
        if context:
            msg += f" ({context})"
        super().__init__(msg)


class TraceFormatError(ValueError):
    """Malformed trace or table file."""

    def __init__(self, message, line=None):
        self.line = line
        if line is not None:
            message = f"line {line}: {message}"
        super().__init__(message)
