from itertools import combinations

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from conftest import sym_matrices
from jetpot.errors import CapabilityError, HyperbolicityError, PreconditionError
from jetpot.garding import (GardingPolynomial, branch_margin, derive, det_polynomial,
                            elementary_symmetric, garding_eigs, garding_from_name,
                            lift_gradient_free, sigma_polynomial, strict_monotone_check,
                            tau_polynomial)
from jetpot.jets import Jet, make_rng, random_symmetric


def brute_tau(lam, k):
    """Product of k-fold eigenvalue sums, enumerated directly."""
    return np.prod([sum(c) for c in combinations(lam, k)])


def test_examples():
    assert np.allclose(garding_eigs(det_polynomial(2), np.diag([1.0, -3.0])), [-3, 1])
    assert np.allclose(garding_eigs(tau_polynomial(3, 2), np.diag([1.0, 2.0, 3.0])), [3, 4, 5])
    lifted = lift_gradient_free(det_polynomial(2))
    assert np.allclose(garding_eigs(lifted, (1.0, np.diag([1.0, -3.0]))), [-4, 0])


def test_branch_examples():
    g = det_polynomial(2)
    assert np.isclose(branch_margin(g, 1, np.diag([1.0, 2.0])), 1.0)
    assert np.isclose(branch_margin(g, 2, np.diag([-1.0, 2.0])), 2.0)
    with pytest.raises(PreconditionError):
        branch_margin(g, 3, np.eye(2))


def test_lift_examples():
    g = det_polynomial(3)
    h = lift_gradient_free(g)
    A = random_symmetric(make_rng(0), 3)
    assert np.allclose(h.eigenvalues((0.0, A)), np.linalg.eigvalsh(A), atol=1e-8)
    shifted = h.eigenvalues((0.7, A + 0.7 * np.eye(3)))
    assert np.allclose(shifted, np.linalg.eigvalsh(A), atol=1e-8)
    assert h.in_closed_cone(Jet(-1.0, np.zeros(3), np.eye(3)))
    assert np.isclose(h.cone_margin(Jet(-1.0, np.zeros(3), np.eye(3))), 2.0)


def test_normalization():
    for g in (det_polynomial(3), sigma_polynomial(4, 2), tau_polynomial(4, 2)):
        assert np.isclose(g(g.direction), 1.0)


def test_derived_constructions():
    A = random_symmetric(make_rng(1), 4)
    lam = np.linalg.eigvalsh(A)
    tau = derive(det_polynomial(4), "II", 2)
    assert np.isclose(tau(A), brute_tau(lam, 2), rtol=1e-7)
    assert np.allclose(derive(det_polynomial(4), "II", 1).eigenvalues(A), lam, atol=1e-8)
    trace_like = derive(det_polynomial(4), "I", 3)
    assert trace_like.degree == 1
    assert np.isclose(trace_like(A), np.trace(A) / 4)
    reg = derive(det_polynomial(4), "III", 1e-9)
    assert np.isclose(reg(A) * reg._raw(reg.direction), np.linalg.det(A), rtol=1e-6)


def test_derived_parameter_errors():
    with pytest.raises(PreconditionError):
        derive(det_polynomial(3), "II", 5)
    with pytest.raises(PreconditionError):
        derive(det_polynomial(3), "III", -1.0)
    with pytest.raises(PreconditionError):
        derive(det_polynomial(3), "IV", 1)


def test_name_parsing():
    assert garding_from_name("tau_2", 3).degree == 3
    assert garding_from_name("lifted:det", 2).lifted
    assert garding_from_name("derived:II:2", 3).degree == 3
    with pytest.raises(CapabilityError):
        garding_from_name("lagrangian", 2)
    with pytest.raises(PreconditionError):
        garding_from_name("nonsense", 2)


def test_hyperbolicity_violation():
    # x^2 + y^2 on diagonal entries is not hyperbolic in the direction I
    g = GardingPolynomial("sum_of_squares", 2, 2, lambda A: A[0, 0] ** 2 + A[1, 1] ** 2,
                          np.eye(2), lambda A: 1 + np.abs(A).sum())
    with pytest.raises(HyperbolicityError):
        g.eigenvalues(np.diag([1.0, -1.0]))


def test_clustered_and_repeated_roots():
    g = tau_polynomial(4, 2)
    for c in (0.0, 1e-5, 1.0, 100.0):
        assert np.allclose(g.eigenvalues(c * np.eye(4)), 2 * c, atol=1e-9 * (1 + c))
    A = 100.0 * np.eye(5) + 1e-3 * random_symmetric(make_rng(2), 5)
    t3 = tau_polynomial(5, 3)
    lam = np.linalg.eigvalsh(A)
    expected = np.sort([sum(c) for c in combinations(lam, 3)])
    assert np.allclose(t3.eigenvalues(A), expected, atol=1e-7)


def test_sigma_eigenvalues_reproduce_polynomial():
    g = sigma_polynomial(4, 2)
    A = random_symmetric(make_rng(3), 4)
    lam = g.eigenvalues(A)
    t = 0.37
    assert np.isclose(np.prod(t + lam), g(A + t * np.eye(4)), rtol=1e-8)


def test_strict_monotone_reports():
    for g in (det_polynomial(3), tau_polynomial(3, 2)):
        rep = strict_monotone_check(g, 200, seed=4)
        assert rep.passed and rep.worst_margin > 0


def test_branch_duality():
    g = det_polynomial(3)
    rng = make_rng(5)
    m = g.degree
    for _ in range(50):
        A = random_symmetric(rng, 3)
        for k in range(1, m + 1):
            # -lam_k(-A) = lam_{m-k+1}(A)
            assert np.isclose(-g.branch_margin(k, -A), g.branch_margin(m - k + 1, A), atol=1e-8)


POLYS = [det_polynomial(3), tau_polynomial(3, 2), sigma_polynomial(3, 2), sigma_polynomial(4, 3)]


@settings(max_examples=40, deadline=None)
@given(st.sampled_from(POLYS), st.data())
def test_product_identity(g, data):
    A = data.draw(sym_matrices(n=g.n))
    lam = g.eigenvalues(A)
    value = g(A)
    assert abs(np.prod(lam) - value) <= 1e-7 * max(1.0, abs(value), np.prod(np.abs(lam)))


@settings(max_examples=40, deadline=None)
@given(st.sampled_from(POLYS), st.data(), st.floats(-20, 20))
def test_shift_equivariance(g, data, s):
    A = data.draw(sym_matrices(n=g.n))
    scale = 1 + np.abs(A).max() + abs(s)
    assert np.allclose(g.eigenvalues(A + s * g.direction), g.eigenvalues(A) + s, atol=1e-7 * scale)


@settings(max_examples=40, deadline=None)
@given(sym_matrices(n=3))
def test_det_matches_symmetric_eigenvalues(A):
    assert np.allclose(det_polynomial(3).eigenvalues(A), np.linalg.eigvalsh(A),
                       atol=1e-8 * (1 + np.abs(A).max()))


@settings(max_examples=40, deadline=None)
@given(sym_matrices(n=3), st.floats(-10, 10))
def test_lifted_shift(A, r):
    g = sigma_polynomial(3, 2)
    h = lift_gradient_free(g)
    tol = 1e-8 * (1 + np.abs(A).max() + abs(r))
    assert np.allclose(h.eigenvalues((r, A)), g.eigenvalues(A) - r, atol=tol)


@settings(max_examples=40, deadline=None)
@given(sym_matrices(n=3))
def test_branches_nested(A):
    lam = sigma_polynomial(3, 2).eigenvalues(A)
    assert np.all(np.diff(lam) >= -1e-12)


@settings(max_examples=25, deadline=None)
@given(sym_matrices(n=3))
def test_elementary_symmetric_against_enumeration(A):
    lam = np.linalg.eigvalsh(A)
    for k in range(4):
        brute = sum(np.prod(c) for c in combinations(lam, k)) if k else 1.0
        assert np.isclose(elementary_symmetric(lam, k), brute, rtol=1e-9, atol=1e-9)


def test_subnormal_input():
    s = 2.225073858507203e-309
    for g in (det_polynomial(3), tau_polynomial(3, 2)):
        assert np.allclose(g.eigenvalues(s * g.direction) / s, 1.0)
    assert np.array_equal(det_polynomial(2).eigenvalues(np.diag([5e-324, -1e-310])), [-1e-310, 5e-324])
