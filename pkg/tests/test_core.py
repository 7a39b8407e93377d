import math
from fractions import Fraction

import mpmath
import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from branchsim.core import (
    BranchRecord,
    ComplexVector,
    ExperimentSpec,
    branch_log_weight,
    gram_schmidt,
    make_spec,
    random_orthogonal_pair,
    random_unitary,
    unitary_audit,
)
from branchsim.errors import (
    DimensionMismatch,
    EmptySpec,
    NegativeNorm,
    NotUnitary,
    ShapeMismatch,
    ZeroNorm,
)

from oracles import exact_aggregate_weight, exact_log, explicit_paths


def test_make_spec_rescales():
    spec = make_spec([2, 1])
    assert spec.outcome_norms == pytest.approx((2 / 3, 1 / 3), abs=1e-15)
    assert math.fsum(spec.outcome_norms) == pytest.approx(1.0, abs=1e-12)


def test_make_spec_keeps_normalized_input_exactly():
    spec = make_spec([0.9999, 0.0001])
    assert spec.outcome_norms == (0.9999, 0.0001)
    assert make_spec(spec.outcome_norms) == spec


@pytest.mark.parametrize(
    "raw, exc",
    [([1], EmptySpec), ([], EmptySpec), ([1, 0], ZeroNorm), ([0, 0], ZeroNorm), ([1, -1, 2], NegativeNorm)],
)
def test_make_spec_rejects(raw, exc):
    with pytest.raises(exc):
        make_spec(raw)


def test_spec_constructor_checks_sum():
    with pytest.raises(ZeroNorm):
        ExperimentSpec((0.5, 0.4))
    with pytest.raises(ShapeMismatch):
        ExperimentSpec((0.5, 0.5), labels=("up",))


def test_branch_log_weight_two_thirds_mixed():
    spec = make_spec([2, 1])
    # oracle: the two mixed paths of N=2 out of the four explicit ones
    mixed = sum(w for path, w in explicit_paths(spec.outcome_norms, 2) if sorted(path) == [0, 1])
    assert exact_log(mixed) == pytest.approx(math.log(4 / 9), rel=1e-14)
    assert branch_log_weight(spec, (1, 1)) == pytest.approx(exact_log(mixed), rel=1e-12)


@pytest.mark.parametrize("p", [0.1, 0.5, 2 / 3, 0.9999])
@pytest.mark.parametrize("n", [1, 5, 17])
def test_branch_log_weight_single_path(p, n):
    spec = make_spec([p, 1 - p])
    assert branch_log_weight(spec, (n, 0)) == pytest.approx(n * math.log(spec.outcome_norms[0]), rel=1e-13)


def test_branch_log_weight_near_certain_top():
    spec = make_spec([0.9999, 0.0001])
    expected = float(mpmath.log(mpmath.mpf(0.9999) ** 10))
    assert math.exp(expected) == pytest.approx(0.9990005, abs=1e-6)
    got = branch_log_weight(spec, (10, 0))
    assert got == pytest.approx(expected, rel=1e-12)
    assert math.exp(got) == pytest.approx(0.9990005, abs=1e-6)


def test_branch_log_weight_matches_rational_oracle():
    rng = np.random.default_rng(11)
    for _ in range(40):
        k = int(rng.integers(2, 5))
        spec = make_spec(rng.uniform(0.05, 1.0, size=k))
        n = int(rng.integers(1, 21))
        counts = rng.multinomial(n, np.full(k, 1.0 / k))
        got = branch_log_weight(spec, counts)
        want = exact_log(exact_aggregate_weight(spec.outcome_norms, counts))
        assert got == pytest.approx(want, rel=1e-12, abs=1e-14)
        assert got <= 0.0


def test_branch_log_weight_shape_errors():
    spec = make_spec([1, 1])
    with pytest.raises(ShapeMismatch):
        branch_log_weight(spec, (1, 1, 1))
    with pytest.raises(ShapeMismatch):
        branch_log_weight(spec, (0, 0))
    with pytest.raises(ShapeMismatch):
        branch_log_weight(spec, (-1, 2))


def test_branch_record_weight():
    rec = BranchRecord((1, 1), math.log(0.5), multiplicity=2)
    assert rec.weight == pytest.approx(0.5)
    assert rec.runs == 2


@st.composite
def specs(draw, max_k=4):
    k = draw(st.integers(2, max_k))
    raw = draw(st.lists(st.floats(0.01, 1.0), min_size=k, max_size=k))
    return make_spec(raw)


@settings(max_examples=40, deadline=None)
@given(specs(max_k=3), st.integers(1, 8))
def test_completeness_over_explicit_paths(spec, n):
    from branchsim.branching import enumerate_branches

    enum = enumerate_branches(spec, n, "explicit")
    assert len(enum) == spec.k**n
    assert math.fsum(np.exp(enum.log_weights)) == pytest.approx(1.0, abs=1e-10)


# --- unitary audits ---------------------------------------------------------


def test_audit_identity_is_exact():
    v = ComplexVector.from_array([1 + 2j, -0.5j, 3])
    w = ComplexVector.from_array([0.1, 0.2 + 0.2j, -1])
    audit = unitary_audit(v, w, np.eye(3))
    # zero up to the rounding of alpha*v + beta*w itself
    assert audit.linearity_residual <= 1e-15
    assert audit.inner_product_drift == 0.0
    assert audit.passed


def test_audit_hadamard_keeps_orthogonality():
    h = np.array([[1, 1], [1, -1]]) / math.sqrt(2)
    v, w = np.array([1, 0]), np.array([0, 1])
    assert abs(np.vdot(h @ v, h @ w)) <= 1e-15
    audit = unitary_audit(v, w, h)
    assert audit.inner_product_drift <= 1e-15


def test_audit_seeded_8d_unitary_orthogonal_pair():
    rng = np.random.default_rng(2024)
    u = random_unitary(8, rng)
    v, w = random_orthogonal_pair(8, rng)
    assert abs(np.vdot(v, w)) < 1e-15
    audit = unitary_audit(v, w, u)
    assert audit.inner_product_drift < 1e-12
    assert audit.linearity_residual < 1e-12


def test_gram_schmidt_matches_qr_span():
    rng = np.random.default_rng(5)
    a = rng.normal(size=(6, 6)) + 1j * rng.normal(size=(6, 6))
    q = gram_schmidt(a)
    np.testing.assert_allclose(q.conj().T @ q, np.eye(6), atol=1e-13)
    # same column spaces as numpy's QR, up to unit phases per column
    q_ref, _ = np.linalg.qr(a)
    phases = np.diag(q_ref.conj().T @ q)
    np.testing.assert_allclose(np.abs(phases), 1.0, atol=1e-12)


def test_audit_rejects_non_unitary_and_bad_dims():
    with pytest.raises(NotUnitary):
        unitary_audit([1, 0], [0, 1], np.array([[2, 0], [0, 1]]))
    with pytest.raises(DimensionMismatch):
        unitary_audit([1, 0, 0], [0, 1], np.eye(2))
    with pytest.raises(DimensionMismatch):
        unitary_audit([1, 0], [0, 1], np.ones((2, 3)))


def test_complex_vector_round_trip():
    arr = np.array([1 + 1j, -2.5, 3j])
    v = ComplexVector.from_array(arr)
    assert len(v) == 3
    np.testing.assert_array_equal(v.to_array(), arr)
    with pytest.raises(DimensionMismatch):
        ComplexVector(())
    with pytest.raises(ValueError):
        ComplexVector(((math.inf, 0.0),))


def test_audit_over_100_seeded_triples():
    rng = np.random.default_rng(99)
    worst = 0.0
    for _ in range(100):
        dim = int(rng.integers(1, 9))
        u = random_unitary(dim, rng)
        v = rng.normal(size=dim) + 1j * rng.normal(size=dim)
        w = rng.normal(size=dim) + 1j * rng.normal(size=dim)
        audit = unitary_audit(v / np.linalg.norm(v), w / np.linalg.norm(w), u)
        worst = max(worst, audit.linearity_residual, audit.inner_product_drift)
    assert worst < 1e-12


def test_exact_fraction_of_float_norm_is_used():
    # oracle sanity: Fraction(0.1) is the binary value, not 1/10
    assert Fraction(0.1) != Fraction(1, 10)
