from itertools import combinations

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from conftest import jets, sym_matrices
from jetpot.cones import cone_R
from jetpot.errors import ConstraintViolation, PreconditionError
from jetpot.jets import Jet, identity_jet, make_rng, random_jets
from jetpot.operators import (admissible_levels, alpha_shift, catalog, catalog_names,
                              duality_relation_check, eval_operator, operator_checks,
                              sigma_cone_margin)

E1 = np.array([1.0, 0.0])


def hess(*diag):
    return Jet(0.0, np.zeros(len(diag)), np.diag(np.array(diag, dtype=float)))


def test_catalog_examples():
    assert np.isclose(eval_operator(catalog("truncated_laplacian", 3, k=2), hess(-3, 1, 5)), -2.0)
    assert np.isclose(eval_operator(catalog("special_lagrangian", 2), hess(1, 1)), np.pi / 2)
    assert np.isclose(eval_operator(catalog("det_MA", 2), hess(2, 3)), 6.0)
    assert np.isclose(eval_operator(catalog("affine_sphere", 2), Jet(-1.0, np.ones(2), np.eye(2))), 1.0)
    assert np.isclose(eval_operator(catalog("eigen_gradient_minus", 2, k=1, R=1.0),
                                    Jet(0.0, E1, np.eye(2))), 0.0)
    assert np.isclose(eval_operator(catalog("sigma_k", 3, k=2), hess(1, 2, 3)), 11.0)
    assert np.isclose(eval_operator(catalog("geometric_k_convexity", 3, k=2), hess(1, 2, 3)),
                      3 * 4 * 5)


def test_unknown_and_invalid_entries():
    with pytest.raises(PreconditionError):
        catalog("no_such_operator")
    with pytest.raises(PreconditionError):
        catalog("sigma_k", 3, k=4)
    with pytest.raises(PreconditionError):
        catalog("alpha_family_F", 2, alpha=1.0)
    with pytest.raises(PreconditionError):
        catalog("eigen_gradient_plus", 2, R=0.0)
    with pytest.raises(PreconditionError):
        catalog("linear", 2, a=1.0)
    with pytest.raises(PreconditionError):
        catalog("parabolic_heat", 1)


def test_constrained_entries_reject_outside_jets():
    with pytest.raises(ConstraintViolation):
        eval_operator(catalog("det_MA", 2), hess(-1, 2))
    assert np.isclose(eval_operator(catalog("det_MA", 2), hess(-1, 2), check=False), -2.0)
    with pytest.raises(PreconditionError):
        eval_operator(catalog("det_MA", 2), hess(1, 2, 3))


def test_alpha_shift_structure():
    assert np.allclose(alpha_shift(np.zeros(2), 2.0), 0)
    p = np.array([3.0, 4.0])
    B = alpha_shift(p, 3.0)
    w = 5.0 ** (2 / 3)
    assert np.allclose(B @ p, 3 * w * p)
    q = np.array([-4.0, 3.0])
    assert np.allclose(B @ q, w * q)


def test_sigma_cone_margin_matches_garding_cone():
    # closed Garding cone: sigma_1, ..., sigma_k all nonnegative
    rng = make_rng(0)
    lam = rng.normal(size=(5000, 4)) + 0.5
    for k in (1, 2, 3):
        sig = np.array([[sum(np.prod(c) for c in combinations(row, j)) for j in range(1, k + 1)]
                        for row in lam])
        inside = np.all(sig > 1e-6, -1)
        outside = np.any(sig < -1e-6, -1)
        m = sigma_cone_margin(lam, k)
        assert np.all(m[inside] > 0) and np.all(m[outside] < 0)


def test_admissible_levels_analytic_and_sampled():
    sl = admissible_levels(catalog("special_lagrangian", 2))
    assert np.isclose(sl.lo, -np.pi) and np.isclose(sl.hi, np.pi) and not sl.approximate
    det = admissible_levels(catalog("det_MA", 2))
    assert det.lo == 0.0 and det.lo_closed and det.hi == np.inf
    spec = catalog("det_MA", 2)
    spec.pair.levels = None
    approx = admissible_levels(spec, samples=500, seed=1)
    assert approx.approximate and approx.lo >= 0.0


@pytest.mark.parametrize("n,k", [(2, 1), (3, 1), (3, 2), (4, 3)])
def test_duality_relation_reflected_index(n, k):
    rep = duality_relation_check(n, k, R=0.7, samples=500, seed=2)
    assert rep.passed
    cands = rep.details["candidates"]
    assert cands["reflected"]["index"] == n - k + 1
    # the unreflected index only coincides on the middle branch
    if 2 * k != n + 1:
        assert not cands["same"]["holds"]


@pytest.mark.parametrize("name", catalog_names())
def test_operator_checks_pass(name):
    n = 3 if name == "parabolic_constrained" else 2
    rep = operator_checks(catalog(name, n), samples=1000, seed=3)
    assert rep.passed, rep.details


def test_operator_checks_detect_wrong_cone():
    spec = catalog("eigen_gradient_plus", 2, R=1.0)
    spec.claimed_cone = cone_R(2, 2.0)
    rep = operator_checks(spec, samples=20_000, seed=4)
    assert not rep.passed and rep.witness is not None


def test_spec_serialization():
    d = catalog("sigma_k", 3, k=2).to_dict()
    assert d["name"] == "sigma_k" and d["params"] == {"k": 2} and d["constrained"]
    assert d["degree"] == 2


@settings(max_examples=40, deadline=None)
@given(sym_matrices(n=3), st.floats(0.1, 5.0))
def test_det_homogeneity(A, t):
    spec = catalog("det_MA", 3)
    J = Jet(0.0, np.zeros(3), A)
    assert np.isclose(spec(J * t), t ** 3 * spec(J), rtol=1e-9, atol=1e-9 * (1 + np.abs(A).max()) ** 3)


@settings(max_examples=40, deadline=None)
@given(jets(n=3), st.sampled_from(["lambda_min", "lambda_max", "truncated_laplacian",
                                   "eigen_gradient_plus", "eigen_gradient_minus"]),
       st.floats(-10, 10))
def test_translation_along_axis(J, name, t):
    spec = catalog(name, 3) if name in ("lambda_min", "lambda_max") else catalog(name, 3, k=2)
    tol = 1e-9 * (1 + float(J.norm()) + abs(t))
    assert np.isclose(spec(J + spec.axis * t), spec(J) + t, atol=tol)


@settings(max_examples=40, deadline=None)
@given(jets(n=2), st.sampled_from(["lambda_min", "special_lagrangian", "eigen_gradient_minus",
                                   "alpha_family_F", "alpha_family_G", "linear"]))
def test_monotone_along_claimed_cone(J, name):
    spec = catalog(name, 2)
    P = spec.claimed_cone.sample(make_rng(5), 50)
    base = spec(J)
    tol = 1e-9 * (1 + float(J.norm()) + P.norm())
    Jb = Jet(np.full(50, J.r), np.tile(J.p, (50, 1)), np.tile(J.A, (50, 1, 1)))
    assert np.all(spec(Jb + P) >= base - tol)
