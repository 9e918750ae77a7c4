import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from conftest import jet_pairs, jets
from jetpot.cones import cone_P, cone_R
from jetpot.errors import LevelError
from jetpot.jets import Jet, identity_jet, make_rng, random_jets
from jetpot.operators import catalog
from jetpot.subeq import (CompatiblePair, ConstraintSet, Interval, compatibility_check,
                          dual_margin, jet_addition_check, level_set, monotonicity_check,
                          tameness_check)


def P_set(n):
    return ConstraintSet(lambda J: np.linalg.eigvalsh(J.A)[..., 0], n, "P", monotone_cone=cone_P(n))


def eigen_gradient_plus(n, k, R):
    return ConstraintSet(lambda J: np.linalg.eigvalsh(J.A)[..., k - 1]
                         + np.linalg.norm(J.p, axis=-1) / R, n, "F+")


def test_dual_of_P_is_lambda_max():
    J = random_jets(make_rng(0), 3, 200)
    assert np.allclose(dual_margin(P_set(3)).margin(J), np.linalg.eigvalsh(J.A)[:, -1])


def test_dual_of_halfspace_is_itself():
    Jp = random_jets(make_rng(1), 2)
    H = ConstraintSet(lambda J: Jp.inner(J), 2, "halfspace")
    J = random_jets(make_rng(2), 2, 200)
    assert np.allclose(dual_margin(H).margin(J), H.margin(J))


def test_double_dual_exact():
    S = P_set(3)
    J = random_jets(make_rng(3), 3, 1000)
    assert S.dual().dual() is S
    fresh = ConstraintSet(lambda K: -S.dual().margin(-K), 3)
    assert np.array_equal(fresh.margin(J), S.margin(J))


def test_non_tame_dual_warns():
    S = ConstraintSet.from_predicate(lambda J: J.r <= 0, 2)
    with pytest.warns(RuntimeWarning):
        dual_margin(S)


def test_level_set_examples():
    sl = catalog("special_lagrangian", 2)
    assert np.isclose(level_set(sl.pair, 0.0).margin(Jet(0.0, np.zeros(2), np.zeros((2, 2)))), 0.0)
    det = catalog("det_MA", 2)
    assert np.isclose(level_set(det.pair, 1.0).margin(Jet(0.0, np.zeros(2), np.diag([2.0, 1.0]))), 1.0)
    with pytest.raises(LevelError):
        level_set(det.pair, -1.0)
    with pytest.raises(LevelError):
        level_set(sl.pair, 4.0)


def test_monotonicity_examples():
    assert monotonicity_check(P_set(2), cone_P(2), 2000, seed=4).passed
    F = eigen_gradient_plus(2, 1, 1.0)
    assert monotonicity_check(F, cone_R(2, 1.0), 2000, seed=5).passed
    bad = monotonicity_check(F, cone_R(2, 2.0), 20_000, seed=6)
    assert not bad.passed and bad.witness is not None


def test_monotonicity_starvation_is_inconclusive():
    empty = ConstraintSet(lambda J: -1.0 - J.norm(), 2, "empty")
    rep = monotonicity_check(empty, cone_P(2), 100, seed=7)
    assert rep.inconclusive and not rep.passed


def test_tameness_examples():
    sl = catalog("special_lagrangian", 2)
    assert tameness_check(sl.pair, identity_jet(2), 500, seed=8).passed
    const = CompatiblePair(lambda J: np.zeros(np.shape(J.r)), None, -np.inf, Interval(), 2, "const")
    assert not tameness_check(const, identity_jet(2), 200, seed=9).passed


def test_compatibility_examples():
    assert compatibility_check(catalog("det_MA", 2).pair, 2000, seed=10).passed
    assert compatibility_check(catalog("gradient_free_garding", 2, g="det", h="neg_r").pair,
                               2000, seed=11).passed


def test_jet_addition_examples():
    n = 2
    F = P_set(n)
    H = ConstraintSet.from_cone(cone_P(n)).dual()
    rep = jet_addition_check(F, H, 2000, seed=12)
    assert rep.passed and rep.details["F_plus_dualF_in_H"]


@settings(max_examples=50)
@given(jets(), st.floats(-5, 5), st.floats(-5, 5))
def test_level_set_nesting(J, c1, c2):
    c1, c2 = sorted((c1, c2))
    sl = catalog("lambda_min", J.n)
    assert level_set(sl.pair, c2).margin(J) <= level_set(sl.pair, c1).margin(J)


@settings(max_examples=50)
@given(jet_pairs())
def test_duality_reverses_order(pair):
    J, K = pair
    n = J.n
    # lam_min <= tr(A) / n pointwise, so the dual margins come in the reverse order
    small = P_set(n)
    big = ConstraintSet(lambda X: np.trace(X.A, axis1=-2, axis2=-1) / n, n)
    tol = 1e-9 * (1 + float(J.norm() + K.norm()))
    assert small.margin(J) <= big.margin(J) + tol
    assert big.dual().margin(K) <= small.dual().margin(K) + tol


@settings(max_examples=50)
@given(jet_pairs())
def test_dual_translation(pair):
    J, K = pair
    S = P_set(J.n)
    lhs = S.shifted(J).dual().margin(K)
    rhs = S.dual().shifted(-J).margin(K)
    assert np.isclose(lhs, rhs, atol=1e-12 * (1 + float(J.norm() + K.norm())))


@settings(max_examples=50)
@given(jets())
def test_monotone_membership_preserved(J):
    """Adding a member of the minimal cone keeps members inside."""
    S = P_set(J.n)
    shift = Jet(-1.0, np.zeros(J.n), np.eye(J.n))
    if S.member(J):
        assert S.member(J + shift)
