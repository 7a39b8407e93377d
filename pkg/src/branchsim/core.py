"""Experiments, branch records, log-space weights and unitary audits.

Branch weights are kept as natural logs throughout; at N = 10**4 runs with an
outcome norm of 1e-4 the linear-space values underflow a double.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Sequence

import numpy as np

from .errors import (
    DimensionMismatch,
    EmptySpec,
    NegativeNorm,
    NotUnitary,
    ShapeMismatch,
    ZeroNorm,
)

NORM_SUM_TOL = 1e-12
UNITARY_TOL = 1e-10


@dataclass(frozen=True)
class ExperimentSpec:
    """A single-run experiment with K >= 2 outcomes.

    ``outcome_norms`` holds the squared amplitudes |a_i|^2 (not the
    amplitudes) and must sum to one.
    """

    outcome_norms: tuple[float, ...]
    labels: tuple[str, ...] | None = None

    def __post_init__(self) -> None:
        norms = tuple(float(x) for x in self.outcome_norms)
        object.__setattr__(self, "outcome_norms", norms)
        if len(norms) < 2:
            raise EmptySpec(f"need at least 2 outcomes, got {len(norms)}")
        for x in norms:
            if not math.isfinite(x):
                raise NegativeNorm(f"non-finite norm {x!r}")
            if x < 0:
                raise NegativeNorm(f"negative norm {x!r}")
            if x == 0:
                raise ZeroNorm("zero-norm outcomes are not carried")
            if x > 1:
                raise NegativeNorm(f"norm {x!r} exceeds 1")
        total = math.fsum(norms)
        if abs(total - 1.0) > NORM_SUM_TOL:
            raise ZeroNorm(f"norms sum to {total!r}, not 1")
        if self.labels is not None:
            labels = tuple(str(s) for s in self.labels)
            if len(labels) != len(norms):
                raise ShapeMismatch("labels and norms differ in length")
            object.__setattr__(self, "labels", labels)

    @property
    def k(self) -> int:
        return len(self.outcome_norms)

    @property
    def log_norms(self) -> np.ndarray:
        return np.log(np.asarray(self.outcome_norms))

    def outcome_labels(self) -> tuple[str, ...]:
        if self.labels is not None:
            return self.labels
        return tuple(str(i + 1) for i in range(self.k))

    def swapped(self) -> ExperimentSpec:
        """Reverse the outcome order (relabeling)."""
        labels = None if self.labels is None else self.labels[::-1]
        return ExperimentSpec(self.outcome_norms[::-1], labels)


def make_spec(raw_norms: Sequence[float], labels: Sequence[str] | None = None) -> ExperimentSpec:
    """Build an :class:`ExperimentSpec` from unnormalized non-negative weights.

    Inputs already summing to one within 1e-12 are kept bit-for-bit, which
    makes ``make_spec`` idempotent on its own output.
    """
    raw = [float(x) for x in raw_norms]
    if len(raw) < 2:
        raise EmptySpec(f"need at least 2 outcomes, got {len(raw)}")
    if any(not math.isfinite(x) for x in raw):
        raise NegativeNorm(f"non-finite entry in {raw!r}")
    if any(x < 0 for x in raw):
        raise NegativeNorm(f"negative entry in {raw!r}")
    if any(x == 0 for x in raw):
        raise ZeroNorm(f"zero entry in {raw!r}")
    total = math.fsum(raw)
    if abs(total - 1.0) > NORM_SUM_TOL:
        raw = [x / total for x in raw]
    return ExperimentSpec(tuple(raw), None if labels is None else tuple(labels))


@dataclass(frozen=True)
class BranchRecord:
    """One branch of the N-run tree.

    In aggregate mode ``log_weight`` already includes the multinomial factor
    and ``multiplicity`` counts the explicit paths merged into the record.
    Explicit-mode records carry their outcome ``path``.
    """

    counts: tuple[int, ...]
    log_weight: float
    multiplicity: int = 1
    path: tuple[int, ...] | None = None

    @property
    def weight(self) -> float:
        return math.exp(self.log_weight)

    @property
    def runs(self) -> int:
        return sum(self.counts)


def log_multinomial(counts: Sequence[int]) -> float:
    """log( N! / prod(m_k!) ) via log-gamma."""
    n = sum(counts)
    return math.lgamma(n + 1) - math.fsum(math.lgamma(m + 1) for m in counts)


def branch_log_weight(spec: ExperimentSpec, counts: Sequence[int]) -> float:
    """Natural log of the aggregate branch norm for ``counts``.

    Equals log[ N!/prod(m_k!) * prod(p_k^m_k) ].
    """
    counts = [int(c) for c in counts]
    if len(counts) != spec.k:
        raise ShapeMismatch(f"expected {spec.k} counts, got {len(counts)}")
    if any(c < 0 for c in counts):
        raise ShapeMismatch(f"negative count in {counts!r}")
    if sum(counts) < 1:
        raise ShapeMismatch("counts must sum to at least 1")
    terms = [m * math.log(p) for m, p in zip(counts, spec.outcome_norms) if m]
    value = log_multinomial(counts) + math.fsum(terms)
    return min(value, 0.0)


def log_weights_array(logp: np.ndarray, counts: np.ndarray, aggregate: bool) -> np.ndarray:
    """Vectorised log weights for a (records, K) count matrix."""
    from scipy.special import gammaln

    counts = np.asarray(counts)
    lw = (counts * logp).sum(axis=1)
    if aggregate:
        n = counts.sum(axis=1)
        lw = lw + gammaln(n + 1.0) - gammaln(counts + 1.0).sum(axis=1)
    return np.minimum(lw, 0.0)


# --- complex vectors and unitary audits -------------------------------------


@dataclass(frozen=True)
class ComplexVector:
    components: tuple[tuple[float, float], ...]

    def __post_init__(self) -> None:
        comps = tuple((float(re), float(im)) for re, im in self.components)
        if not comps:
            raise DimensionMismatch("vector must have dimension >= 1")
        if not all(math.isfinite(re) and math.isfinite(im) for re, im in comps):
            raise ValueError("vector entries must be finite")
        object.__setattr__(self, "components", comps)

    @classmethod
    def from_array(cls, values) -> ComplexVector:
        arr = np.asarray(values, dtype=complex).ravel()
        return cls(tuple((z.real, z.imag) for z in arr))

    def to_array(self) -> np.ndarray:
        return np.array([complex(re, im) for re, im in self.components])

    def __len__(self) -> int:
        return len(self.components)


@dataclass(frozen=True)
class UnitaryAudit:
    linearity_residual: float
    inner_product_drift: float
    alpha: complex
    beta: complex
    tolerance: float = 1e-12

    @property
    def passed(self) -> bool:
        return self.linearity_residual < self.tolerance and self.inner_product_drift < self.tolerance


def _as_vector(v) -> np.ndarray:
    if isinstance(v, ComplexVector):
        return v.to_array()
    return np.asarray(v, dtype=complex).ravel()


def check_unitary(u: np.ndarray, tol: float = UNITARY_TOL) -> np.ndarray:
    u = np.asarray(u, dtype=complex)
    if u.ndim != 2 or u.shape[0] != u.shape[1]:
        raise DimensionMismatch(f"operator must be square, got shape {u.shape}")
    err = np.abs(u.conj().T @ u - np.eye(u.shape[0])).max()
    if err > tol:
        raise NotUnitary(f"max |U^dagger U - I| = {err:.3e}")
    return u


def unitary_audit(
    v: ComplexVector | np.ndarray,
    w: ComplexVector | np.ndarray,
    u: np.ndarray,
    alpha: complex = 0.6 + 0.8j,
    beta: complex = -0.28 + 0.96j,
) -> UnitaryAudit:
    """Measure how far ``u`` departs from linear, inner-product preserving evolution.

    Returns the linearity residual ||U(a v + b w) - a U v - b U w|| and the
    drift |<Uv, Uw> - <v, w>|.
    """
    u = check_unitary(u)
    va, wa = _as_vector(v), _as_vector(w)
    dim = u.shape[0]
    if va.shape != (dim,) or wa.shape != (dim,):
        raise DimensionMismatch(f"vectors must have dimension {dim}")
    uv, uw = u @ va, u @ wa
    lin = float(np.linalg.norm(u @ (alpha * va + beta * wa) - alpha * uv - beta * uw))
    drift = float(abs(np.vdot(uv, uw) - np.vdot(va, wa)))
    return UnitaryAudit(lin, drift, complex(alpha), complex(beta))


def gram_schmidt(columns: np.ndarray) -> np.ndarray:
    """Modified Gram-Schmidt on the columns of a complex matrix."""
    a = np.array(columns, dtype=complex)
    q = np.zeros_like(a)
    for j in range(a.shape[1]):
        col = a[:, j].copy()
        for i in range(j):
            col -= np.vdot(q[:, i], col) * q[:, i]
        # second pass keeps orthogonality at machine precision
        for i in range(j):
            col -= np.vdot(q[:, i], col) * q[:, i]
        q[:, j] = col / np.linalg.norm(col)
    return q


def random_unitary(dim: int, rng: np.random.Generator) -> np.ndarray:
    z = rng.normal(size=(dim, dim)) + 1j * rng.normal(size=(dim, dim))
    return gram_schmidt(z)


def random_orthogonal_pair(dim: int, rng: np.random.Generator) -> tuple[np.ndarray, np.ndarray]:
    """Two orthonormal vectors of dimension ``dim`` (needs dim >= 2)."""
    if dim < 2:
        raise DimensionMismatch("an orthogonal pair needs dimension >= 2")
    z = rng.normal(size=(dim, 2)) + 1j * rng.normal(size=(dim, 2))
    q = gram_schmidt(z)
    return q[:, 0], q[:, 1]
