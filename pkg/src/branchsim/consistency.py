"""Coarse-graining consistency checks for candidate probability functionals f(|a|^2).

A candidate is consistent when merging two branches adds their
probabilities, f(x + y) = f(x) + f(y), and the probabilities of a complete
outcome set sum to one.  Both are checked on random samples plus the fixed
witnesses x = y = 1/2 and the outcome norms (1/2, 1/2).
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Sequence

import numpy as np
from numpy.polynomial import polynomial as P

from .errors import InvalidArgument

VERDICT_TOL = 1e-9
MIN_SAMPLES = 1000
LAW_FORMS = ("identity", "power", "polynomial")


@dataclass(frozen=True)
class CandidateLaw:
    form: str
    exponent: float = 1.0
    coefficients: tuple[float, ...] = ()

    def __post_init__(self) -> None:
        if self.form not in LAW_FORMS:
            raise InvalidArgument(f"unknown law form {self.form!r}")
        object.__setattr__(self, "coefficients", tuple(float(c) for c in self.coefficients))
        if self.form == "power" and not (math.isfinite(self.exponent) and self.exponent > 0):
            raise InvalidArgument(f"power exponent must be finite and positive, got {self.exponent!r}")
        if self.form == "polynomial" and not self.coefficients:
            raise InvalidArgument("polynomial law needs coefficients")
        if abs(float(self(0.0))) > 1e-12:
            raise InvalidArgument("a probability law must have f(0) = 0")
        if not math.isfinite(float(self(1.0))):
            raise InvalidArgument("f(1) must be finite")

    def __call__(self, x):
        if self.form == "identity":
            return x * 1.0
        if self.form == "power":
            return np.power(x, self.exponent)
        return P.polyval(x, self.coefficients)

    @property
    def name(self) -> str:
        if self.form == "identity":
            return "identity"
        if self.form == "power":
            return f"power:{self.exponent!r}"
        return "poly:[" + ",".join(repr(c) for c in self.coefficients) + "]"


IDENTITY = CandidateLaw("identity")


def power_law(exponent: float) -> CandidateLaw:
    return CandidateLaw("power", exponent=float(exponent))


def polynomial_law(coefficients: Sequence[float]) -> CandidateLaw:
    return CandidateLaw("polynomial", coefficients=tuple(coefficients))


@dataclass(frozen=True)
class ConsistencyReport:
    law: str
    max_additivity_violation: float
    max_normalization_violation: float
    samples: int
    seed: int

    @property
    def max_violation(self) -> float:
        return max(self.max_additivity_violation, self.max_normalization_violation)

    @property
    def verdict(self) -> str:
        return "inconsistent" if self.max_violation > VERDICT_TOL else "consistent"


def sample_pairs(rng: np.random.Generator, samples: int) -> tuple[np.ndarray, np.ndarray]:
    """Uniform points of the triangle x, y >= 0, x + y <= 1, led by the witness (1/2, 1/2)."""
    u, v = rng.random(samples - 1), rng.random(samples - 1)
    flip = u + v > 1.0
    u[flip], v[flip] = 1.0 - u[flip], 1.0 - v[flip]
    return np.concatenate([[0.5], u]), np.concatenate([[0.5], v])


def sample_specs(rng: np.random.Generator, samples: int) -> list[np.ndarray]:
    """Random outcome-norm vectors with K in 2..6, led by the witness (1/2, 1/2)."""
    specs = [np.array([0.5, 0.5])]
    for k in rng.integers(2, 7, size=samples - 1):
        specs.append(rng.dirichlet(np.ones(k)))
    return specs


def test_consistency(law: CandidateLaw, samples: int = MIN_SAMPLES, seed: int = 0) -> ConsistencyReport:
    if samples < MIN_SAMPLES:
        raise InvalidArgument(f"samples must be >= {MIN_SAMPLES}, got {samples}")
    rng = np.random.default_rng(seed)
    x, y = sample_pairs(rng, samples)
    additivity = np.abs(law(x + y) - law(x) - law(y))
    normalization = [abs(math.fsum(law(p)) - 1.0) for p in sample_specs(rng, samples)]
    return ConsistencyReport(
        law=law.name,
        max_additivity_violation=float(additivity.max()),
        max_normalization_violation=float(max(normalization)),
        samples=samples,
        seed=seed,
    )


# not a pytest test despite the name
test_consistency.__test__ = False


def scan_power_laws(
    exponents: Sequence[float], samples: int = MIN_SAMPLES, seed: int = 0
) -> list[tuple[float, float]]:
    """(exponent, worst violation) for each power law f(x) = x**exponent."""
    table = []
    for e in exponents:
        report = test_consistency(power_law(e), samples, seed)
        table.append((float(e), report.max_violation))
    return table
