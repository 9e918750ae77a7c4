import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from conftest import jets, sym_matrices
from jetpot.errors import DomainError, EvaluationError, PreconditionError
from jetpot.jets import (Jet, RadialProfile, exp_profile, fd_jet, make_rng, power_profile,
                         projections, quadratic, radial_jet, random_jets, random_symmetric,
                         sym_eigh, sym_eigs)


def test_sym_eigs_identity_and_diagonal():
    assert np.allclose(sym_eigs(np.eye(3)), [1, 1, 1])
    assert np.allclose(sym_eigs(np.diag([3.0, -1.0, 2.0])), [-1, 2, 3])


def test_sym_eigs_matches_companion_roots():
    rng = make_rng(0)
    A = random_symmetric(rng, 5)
    # characteristic polynomial from the Faddeev-LeVerrier recursion, roots by companion matrix
    n = 5
    coeffs = [1.0]
    M = np.zeros((n, n))
    for k in range(1, n + 1):
        M = A @ M + coeffs[-1] * np.eye(n)
        coeffs.append(-np.trace(A @ M) / k)
    companion_roots = np.sort(np.roots(coeffs).real)
    assert np.allclose(sym_eigs(A), companion_roots, atol=1e-8)


def test_sym_eigs_rejects_asymmetric():
    with pytest.raises(PreconditionError):
        sym_eigs(np.array([[1.0, 2.0], [0.0, 1.0]]))


def test_reconstruction_residual():
    A = random_symmetric(make_rng(1), 4)
    lam, Q = sym_eigh(A)
    assert np.linalg.norm(Q @ np.diag(lam) @ Q.T - A) <= 1e-10 * (1 + np.linalg.norm(A))


def test_projections_examples():
    P, Pp = projections(np.array([1.0, 0.0]))
    assert np.allclose(P, np.diag([1, 0])) and np.allclose(Pp, np.diag([0, 1]))
    P, _ = projections(np.array([1.0, 1.0]))
    assert np.allclose(P, 0.5)
    with pytest.raises(DomainError):
        projections(np.zeros(3))


@given(st.lists(st.floats(-5, 5), min_size=2, max_size=4).filter(lambda v: np.linalg.norm(v) > 1e-3))
def test_projection_algebra(x):
    P, Pp = projections(np.array(x))
    assert np.allclose(P @ P, P, atol=1e-12)
    assert np.allclose(P @ Pp, 0, atol=1e-12)
    assert np.allclose(P + Pp, np.eye(len(x)))


def test_radial_jet_examples():
    x = np.array([0.3, -1.2, 0.5])
    J = radial_jet(power_profile(2, 0.5), x)
    assert np.isclose(J.r, x @ x / 2) and np.allclose(J.p, x) and np.allclose(J.A, np.eye(3))
    y = np.array([0.6, 0.8])
    _, Pp = projections(y)
    assert np.allclose(radial_jet(power_profile(1), y).A, Pp)
    with pytest.raises(DomainError):
        radial_jet(power_profile(2), np.zeros(2))


def test_radial_exponential_against_fd():
    alpha = 1.3
    x = np.array([0.4, -0.7])
    J = radial_jet(exp_profile(alpha), x)
    K = fd_jet(lambda z: np.exp(alpha * np.linalg.norm(z)), x, h=1e-3)
    t = np.linalg.norm(x)
    assert np.isclose(J.r, np.exp(alpha * t))
    assert np.allclose(J.p, alpha * np.exp(alpha * t) * x / t)
    assert J.allclose(K, atol=1e-5)


def test_fd_jet_examples():
    rng = make_rng(3)
    J = random_jets(rng, 3)
    K = fd_jet(quadratic(J), np.zeros(3))
    assert K.allclose(J, atol=1e-6)
    S = fd_jet(lambda z: np.sin(z[0]), np.zeros(2), h=1e-3)
    assert S.allclose(Jet(0.0, np.array([1.0, 0.0]), np.zeros((2, 2))), atol=1e-6)
    cube = fd_jet(lambda z: np.linalg.norm(z) ** 3, np.array([1.0, 0.0]), h=1e-3)
    assert cube.allclose(radial_jet(power_profile(3), np.array([1.0, 0.0])), atol=1e-5)


def test_fd_jet_non_finite():
    with pytest.raises(EvaluationError):
        fd_jet(lambda z: np.inf, np.zeros(2))
    with pytest.raises(PreconditionError):
        fd_jet(lambda z: 0.0, np.zeros(2), h=-1.0)


def test_profile_non_finite():
    blows_up = lambda t: np.where(t < 1.0, np.nan, t)  # noqa: E731
    prof = RadialProfile(blows_up, blows_up, blows_up)
    with pytest.raises(EvaluationError):
        radial_jet(prof, np.array([0.5, 0.0]))


def test_jet_serialization_roundtrip():
    J = random_jets(make_rng(4), 2)
    assert Jet.from_dict(J.to_dict()).allclose(J, atol=0)


@settings(max_examples=50)
@given(sym_matrices(), st.floats(-100, 100))
def test_eigs_shift_equivariant(A, t):
    n = A.shape[0]
    tol = 1e-10 * (1 + abs(t) + np.abs(A).max())
    assert np.allclose(sym_eigs(A + t * np.eye(n)), sym_eigs(A) + t, atol=tol)


@settings(max_examples=50)
@given(sym_matrices(), st.randoms())
def test_eigs_permutation_invariant(A, rnd):
    perm = list(range(A.shape[0]))
    rnd.shuffle(perm)
    B = A[np.ix_(perm, perm)]
    assert np.allclose(sym_eigs(A), sym_eigs(B), atol=1e-10 * (1 + np.abs(A).max()))


@settings(max_examples=50)
@given(st.floats(0.5, 3.0), st.lists(st.floats(-3, 3), min_size=2, max_size=4)
       .filter(lambda v: np.linalg.norm(v) > 0.1))
def test_radial_hessian_spectrum(k, x):
    x = np.array(x)
    t = np.linalg.norm(x)
    lam = sym_eigs(radial_jet(power_profile(k), x).A)
    expected = np.sort(np.r_[np.full(len(x) - 1, k * t ** (k - 2)), k * (k - 1) * t ** (k - 2)])
    assert np.allclose(lam, expected, atol=1e-9 * (1 + np.abs(expected).max()))


@settings(max_examples=25, deadline=None)
@given(st.floats(1.5, 3.0), st.lists(st.floats(-2, 2), min_size=2, max_size=3)
       .filter(lambda v: np.linalg.norm(v) > 0.3))
def test_fd_agrees_with_radial(k, x):
    x = np.array(x)
    J = radial_jet(power_profile(k), x)
    K = fd_jet(lambda z: np.linalg.norm(z) ** k, x, h=1e-3)
    assert J.allclose(K, atol=1e-5 * (1 + float(J.norm())))


@given(jets())
def test_jet_arithmetic(J):
    assert (J + (-J)).allclose(Jet.zero(J.n), atol=0)
    assert np.isclose(J.inner(J), J.norm() ** 2)
