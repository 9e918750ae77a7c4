import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from conftest import jets
from jetpot.canonical import (LinearFamily, Hyperplane, canonical_catalog, canonical_eval,
                              canonical_operator, drift_family, dual_canonical_eval,
                              eigen_gradient_family, family_op, graphing, lipschitz_seminorm,
                              pointedness_check, solve_ray, traceless_hyperplane)
from jetpot.cones import cone_P
from jetpot.errors import GeometryError, PreconditionError, StructureError
from jetpot.jets import Jet, identity_jet, make_rng, random_jets
from jetpot.subeq import ConstraintSet


def traceless(J):
    n = J.n
    A = J.A - np.trace(J.A, axis1=-2, axis2=-1)[..., None, None] * np.eye(n) / n
    return Jet(J.r, J.p, A)


def test_lambda_min_examples():
    P = canonical_catalog(2)["lambda_min"]
    J = Jet(0.0, np.zeros(2), np.diag([1.0, 3.0]))
    assert np.isclose(canonical_eval(P.constraint, P.J0, J), 1.0, atol=1e-12)
    assert np.isclose(dual_canonical_eval(P.constraint, P.J0, J), 3.0, atol=1e-12)


def test_truncated_laplacian_example():
    e = canonical_catalog(3, k=2)["truncated_laplacian"]
    J = Jet(0.0, np.zeros(3), np.diag([-3.0, 1.0, 5.0]))
    assert np.isclose(canonical_eval(e.constraint, e.J0, J), -2.0, atol=1e-10)


@pytest.mark.parametrize("name", list(canonical_catalog(3)))
def test_catalog_closed_forms(name):
    e = canonical_catalog(3, k=2, R=0.7)[name]
    J = random_jets(make_rng(0), 3, 300)
    F = canonical_eval(e.constraint, e.J0, J)
    tol = 1e-9 * (1 + J.norm())
    assert np.all(np.abs(F - e.closed_form(J)) <= tol)
    G = dual_canonical_eval(e.constraint, e.J0, J)
    assert np.all(np.abs(G - e.dual_closed_form(J)) <= tol)


def test_ray_solution_fields():
    P = canonical_catalog(2)["lambda_min"]
    J = random_jets(make_rng(1), 2)
    sol = solve_ray(P.constraint, P.J0, J)
    assert np.isclose(sol.value, -sol.t_J)
    lo, hi = sol.bracket
    assert lo <= sol.t_J <= hi and sol.iterations > 0
    assert abs(float(sol.residual)) <= 1e-10 * (1 + float(J.norm()))


def test_axis_must_be_interior():
    P = canonical_catalog(2)["lambda_min"]
    with pytest.raises(PreconditionError):
        solve_ray(P.constraint, Jet(0.0, np.zeros(2), np.diag([1.0, 0.0])), random_jets(make_rng(2), 2))


def test_no_crossing_is_structure_error():
    bounded = ConstraintSet(lambda J: 1.0 - J.norm(), 2, "ball")
    with pytest.raises(StructureError):
        solve_ray(bounded, identity_jet(2), Jet(0.0, np.zeros(2), 10 * np.eye(2)))


def test_canonical_operator_callable_batch():
    P = canonical_catalog(3)["lambda_min"]
    F = canonical_operator(P.constraint, P.J0)
    J = random_jets(make_rng(3), 3, 50)
    assert np.allclose(F(J), np.linalg.eigvalsh(J.A)[:, 0], atol=1e-9)


def test_graphing_on_traceless_hyperplane():
    P = canonical_catalog(3)["lambda_min"]
    W0 = traceless_hyperplane(3)
    J = traceless(random_jets(make_rng(4), 3, 100))
    g = graphing(P.constraint, P.J0, W0, J)
    assert np.allclose(g, -np.linalg.eigvalsh(J.A)[:, 0], atol=1e-9)
    boundary = J + P.J0 * g
    assert np.all(np.abs(P.constraint.margin(boundary)) <= 1e-9 * (1 + J.norm()))


def test_graphing_rejects_off_plane_and_tangent():
    P = canonical_catalog(2)["lambda_min"]
    W0 = traceless_hyperplane(2)
    with pytest.raises(PreconditionError):
        graphing(P.constraint, P.J0, W0, identity_jet(2))
    tangent = Hyperplane(Jet(1.0, np.zeros(2), np.zeros((2, 2))))
    with pytest.raises(GeometryError):
        graphing(P.constraint, P.J0, tangent, Jet(0.0, np.ones(2), np.eye(2)))


def test_lipschitz_seminorm_of_P():
    M = cone_P(3)
    W0 = traceless_hyperplane(3)
    J = traceless(random_jets(make_rng(5), 3))
    plus, minus = lipschitz_seminorm(M, identity_jet(3), W0, J)
    lam = np.linalg.eigvalsh(J.A)
    assert np.isclose(plus, -lam[0], atol=1e-9) and np.isclose(minus, lam[-1], atol=1e-9)
    assert plus >= 0 and minus >= 0


def test_pointedness_fails_for_antipodal_family():
    K = random_jets(make_rng(6), 2)
    fam = LinearFamily(Jet(np.array([0.0, 0.0]), np.stack([K.p, -K.p]), np.zeros((2, 2, 2))),
                       check_elliptic=False)
    res = pointedness_check(fam)
    assert not res.pointed and res.violating_index is not None
    with pytest.raises(PreconditionError):
        family_op(fam, "inf", identity_jet(2), K)


def test_drift_family_inf_sup():
    fam = drift_family(-1.0, [[1.0, 0.0], [0.0, 1.0]], [np.eye(2), 2 * np.eye(2)])
    J0 = identity_jet(2, r=-1.0)
    res = pointedness_check(fam, J0)
    assert res.pointed and res.epsilon > 0
    J = Jet(1.0, np.array([2.0, -1.0]), np.diag([1.0, 3.0]))
    vals = [(-1 + 2 + 4) / 3, (-1 - 1 + 8) / 5]
    assert np.isclose(family_op(fam, "inf", J0, J), min(vals))
    assert np.isclose(family_op(fam, "sup", J0, J), max(vals))
    with pytest.raises(PreconditionError):
        family_op(fam, "median", J0, J)


def test_family_rejects_non_elliptic():
    with pytest.raises(PreconditionError):
        LinearFamily(Jet(1.0, np.zeros(2), np.eye(2)))


def test_eigen_gradient_family_approximates_closed_form():
    R = 0.8
    fam = eigen_gradient_family(2, R, N=720)
    J = random_jets(make_rng(7), 2, 40)
    F = family_op(fam, "inf", identity_jet(2), J)
    exact = np.linalg.eigvalsh(J.A)[:, 0] - np.linalg.norm(J.p, axis=-1) / R
    # angular spacing h = 2 pi / 720 gives an O(h^2) gap from above
    assert np.all(F >= exact - 1e-9)
    assert np.all(F - exact <= 1e-3 * (1 + J.norm()))


@settings(max_examples=40, deadline=None)
@given(jets(), st.floats(-10, 10))
def test_canonical_translation(J, t):
    e = canonical_catalog(J.n)["lambda_min_minus_gradient"]
    F = canonical_eval(e.constraint, e.J0, J)
    Ft = canonical_eval(e.constraint, e.J0, J + e.J0 * t)
    assert np.isclose(Ft, F + t, atol=1e-9 * (1 + float(J.norm()) + abs(t)))


@settings(max_examples=40, deadline=None)
@given(jets())
def test_canonical_zero_level_is_constraint(J):
    e = canonical_catalog(J.n)["min_neg_r_lambda_min"]
    F = canonical_eval(e.constraint, e.J0, J)
    m = float(e.constraint.margin(J))
    tol = 1e-9 * (1 + float(J.norm()))
    assert (F >= -tol) == (m >= -tol) or min(abs(F), abs(m)) <= tol


@settings(max_examples=40, deadline=None)
@given(jets(), st.sampled_from(["inf", "sup"]))
def test_family_inf_sup_duality(J, mode):
    fam = drift_family(-1.0, [[1.0, 0.0], [0.0, -1.0], [0.5, 0.5]],
                       [np.eye(2), np.diag([2.0, 1.0]), np.diag([1.0, 3.0])])
    J = Jet(J.r, J.p[:2], J.A[:2, :2])
    J0 = identity_jet(2, r=-1.0)
    other = "sup" if mode == "inf" else "inf"
    assert np.isclose(family_op(fam, mode, J0, J), -family_op(fam, other, J0, -J))
