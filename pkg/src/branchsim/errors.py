"""Exception types raised across the package."""

from __future__ import annotations


class BranchSimError(Exception):
    """Base class for every error raised by branchsim."""


class SpecError(BranchSimError, ValueError):
    pass


class EmptySpec(SpecError):
    pass


class ZeroNorm(SpecError):
    pass


class NegativeNorm(SpecError):
    pass


class ShapeMismatch(BranchSimError, ValueError):
    pass


class DimensionMismatch(BranchSimError, ValueError):
    pass


class NotUnitary(BranchSimError, ValueError):
    pass


class TooLargeForExplicit(BranchSimError, ValueError):
    pass


class EnumerationOverflow(BranchSimError, OverflowError):
    pass


class DegenerateSpec(BranchSimError, ValueError):
    pass


class EndpointCount(BranchSimError, ValueError):
    pass


class OutOfDomain(BranchSimError, ValueError):
    pass


class AllZeroPropensity(BranchSimError, ValueError):
    pass


class KernelNotMonotone(BranchSimError, ValueError):
    pass


class StepTooCoarse(BranchSimError, ValueError):
    pass


class InvalidArgument(BranchSimError, ValueError):
    """A numeric argument is outside the range an operation accepts."""


class ParseError(BranchSimError):
    def __init__(self, message: str, line: int | None = None, key: str | None = None):
        where = []
        if line is not None:
            where.append(f"line {line}")
        if key is not None:
            where.append(f"key {key!r}")
        if where:
            message = f"{message} ({', '.join(where)})"
        super().__init__(message)
        self.line = line
        self.key = key


class ValidationError(BranchSimError):
    """Config failed a precondition; ``reason`` names the violated check."""

    def __init__(self, reason: str, message: str = ""):
        super().__init__(f"{reason}: {message}" if message else reason)
        self.reason = reason
