"""Exception hierarchy shared by every module."""

from __future__ import annotations


class LagMmseError(Exception):
    """Base class for all errors raised by lagmmse."""


class InvalidParameter(LagMmseError, ValueError):
    def __init__(self, name: str, reason: str):
        self.name = name
        self.reason = reason
        super().__init__(f"{name}: {reason}")


class ReducibleChain(InvalidParameter):
    def __init__(self, reason: str = "transition matrix is not irreducible"):
        super().__init__("transition", reason)


class NumericalFailure(LagMmseError, ArithmeticError):
    pass


class QuadratureFailure(NumericalFailure):
    pass


class RootFindingFailure(NumericalFailure):
    pass


class MarginalRoot(RootFindingFailure):
    """A spectral root sits on (or numerically next to) the imaginary axis."""


class RepeatedPole(NumericalFailure):
    pass


class GridResolutionError(NumericalFailure):
    pass


class NonConvergence(NumericalFailure):
    pass


class DegenerateCase(LagMmseError):
    pass


class NoSolution(LagMmseError):
    pass


class InsufficientData(LagMmseError):
    pass


class McBudgetExceeded(LagMmseError):
    def __init__(self, stderr: float, target: float, samples: int):
        self.stderr = stderr
        self.target = target
        self.samples = samples
        super().__init__(
            f"standard error {stderr:.3g} above target {target:.3g} after {samples} samples"
        )


class AssertionFailed(LagMmseError):
    def __init__(self, failures):
        self.failures = list(failures)
        lines = [f"{f['path']}: observed {f['observed']!r}, expected {f['expected']} ± {f['tolerance']}"
                 for f in self.failures]
        super().__init__("manifest assertions failed:\n  " + "\n  ".join(lines))
