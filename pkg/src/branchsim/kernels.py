"""Perception kernels: monotone maps from a branch norm to a propensity to perceive it.

Three forms are supported: the Born identity ``s(x) = x``, the cubic
``s(x) = x + 0.1 x (1 - x) (0.5 - x)`` and arbitrary user polynomials given
as coefficient lists, constant term first.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Sequence

import numpy as np
from numpy.polynomial import polynomial as P

from .errors import AllZeroPropensity, InvalidArgument, OutOfDomain

FORMS = ("born", "cubic", "polynomial")
CUBIC_STRENGTH = 0.1
# 1.05 x - 0.15 x^2 + 0.1 x^3, the expanded cubic
CUBIC_COEFFICIENTS = (0.0, 1.0 + 0.5 * CUBIC_STRENGTH, -1.5 * CUBIC_STRENGTH, CUBIC_STRENGTH)
CHECK_TOL = 1e-12
DEFAULT_GRID = 10_000


@dataclass(frozen=True)
class PerceptionKernel:
    form: str
    coefficients: tuple[float, ...] = ()

    def __post_init__(self) -> None:
        if self.form not in FORMS:
            raise InvalidArgument(f"unknown kernel form {self.form!r}")
        coeffs = tuple(float(c) for c in self.coefficients)
        if self.form == "polynomial":
            if not coeffs:
                raise InvalidArgument("polynomial kernel needs coefficients")
            if not all(math.isfinite(c) for c in coeffs):
                raise InvalidArgument("polynomial coefficients must be finite")
        elif coeffs:
            raise InvalidArgument(f"{self.form} kernel takes no coefficients")
        object.__setattr__(self, "coefficients", coeffs)

    @property
    def id(self) -> str:
        if self.form == "polynomial":
            return "poly:[" + ",".join(repr(c) for c in self.coefficients) + "]"
        return self.form

    def __call__(self, x):
        """Vectorised evaluation without domain checks."""
        if self.form == "born":
            return x * 1.0
        if self.form == "cubic":
            return x + CUBIC_STRENGTH * x * (1.0 - x) * (0.5 - x)
        return P.polyval(x, self.coefficients)

    def eval(self, x: float) -> float:
        x = float(x)
        if not 0.0 <= x <= 1.0:
            raise OutOfDomain(f"kernel argument {x!r} outside [0, 1]")
        return float(self(x))

    def as_polynomial(self) -> tuple[float, ...]:
        if self.form == "born":
            return (0.0, 1.0)
        if self.form == "cubic":
            return CUBIC_COEFFICIENTS
        return self.coefficients


BORN = PerceptionKernel("born")
CUBIC = PerceptionKernel("cubic")


def polynomial(coefficients: Sequence[float]) -> PerceptionKernel:
    return PerceptionKernel("polynomial", tuple(coefficients))


@dataclass(frozen=True)
class ValidityReport:
    kernel_id: str
    grid_points: int
    s0: float
    s1: float
    min_slope: float
    max_complement_violation: float

    @property
    def boundary_ok(self) -> bool:
        return abs(self.s0) <= CHECK_TOL and abs(self.s1 - 1.0) <= CHECK_TOL

    @property
    def monotone(self) -> bool:
        return self.min_slope > 0.0

    @property
    def complement_ok(self) -> bool:
        return self.max_complement_violation <= CHECK_TOL

    @property
    def valid_2_outcome(self) -> bool:
        return self.boundary_ok and self.monotone and self.complement_ok

    @property
    def verdict(self) -> str:
        return "valid-2-outcome" if self.valid_2_outcome else "invalid"

    def failures(self) -> list[str]:
        out = []
        if not self.boundary_ok:
            out.append(f"boundary: s(0)={self.s0!r}, s(1)={self.s1!r}")
        if not self.monotone:
            out.append(f"not strictly increasing: min slope {self.min_slope!r}")
        if not self.complement_ok:
            out.append(f"s(x)+s(1-x) off by {self.max_complement_violation!r}")
        return out


def validate(kernel: PerceptionKernel, grid_points: int = DEFAULT_GRID) -> ValidityReport:
    if grid_points < 1000:
        raise InvalidArgument(f"grid_points must be >= 1000, got {grid_points}")
    x = np.linspace(0.0, 1.0, grid_points)
    s = np.asarray(kernel(x), dtype=float)
    slope = np.diff(s) / np.diff(x)
    complement = np.abs(s + np.asarray(kernel(1.0 - x)) - 1.0)
    return ValidityReport(
        kernel_id=kernel.id,
        grid_points=grid_points,
        s0=float(kernel(0.0)),
        s1=float(kernel(1.0)),
        min_slope=float(slope.min()),
        max_complement_violation=float(complement.max()),
    )


def kernel_select(kernel: PerceptionKernel, norms: Sequence[float]) -> np.ndarray:
    """Selection probabilities s(x_i) / sum_j s(x_j) over the given branch norms."""
    x = np.asarray(norms, dtype=float)
    if x.ndim != 1 or len(x) < 1:
        raise InvalidArgument("norms must be a non-empty vector")
    if np.any(x < 0.0) or np.any(x > 1.0):
        raise OutOfDomain("norms must lie in [0, 1]")
    if x.sum() > 1.0 + 1e-9:
        raise OutOfDomain(f"norms sum to {x.sum()!r} > 1")
    if kernel.form == "born":
        s = x.copy()
    else:
        s = np.asarray(kernel(x), dtype=float)
    total = math.fsum(s)
    if not total > 0.0:
        raise AllZeroPropensity("every branch has zero propensity")
    if kernel.form == "born" and abs(total - 1.0) <= 1e-12:
        return s
    return s / total


def random_complement_kernel(
    rng: np.random.Generator, grid_points: int = DEFAULT_GRID, max_tries: int = 100
) -> PerceptionKernel:
    """Draw a random polynomial kernel that passes :func:`validate`.

    Built as ``x + g(x) (c0 + c1 x(1-x) + c2 (x(1-x))^2)`` with
    ``g(x) = x(1-x)(1/2-x)``; ``g`` is odd about 1/2 and ``x(1-x)`` is even,
    so the complement identity holds for any coefficients.  Draws that break
    monotonicity are rejected.
    """
    g = P.polymul(P.polymul([0.0, 1.0], [1.0, -1.0]), [0.5, -1.0])
    sym = np.array([0.0, 1.0, -1.0])
    for _ in range(max_tries):
        c0 = rng.uniform(-1.5, 3.0)
        c1, c2 = rng.uniform(-4.0, 4.0, size=2)
        bump = P.polyadd(P.polyadd([c0], c1 * sym), c2 * P.polymul(sym, sym))
        coeffs = P.polyadd([0.0, 1.0], P.polymul(g, bump))
        kernel = polynomial(coeffs)
        if validate(kernel, grid_points).valid_2_outcome:
            return kernel
    raise RuntimeError("no valid random kernel found")
