import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from jetpot.cones import (FREE, INF, DirectionalCone, FundamentalCone, SubRCone, SuperRCone,
                          cone_dual_member, cone_from_dict, cone_gamma, cone_interior, cone_member,
                          cone_N, cone_NP, cone_P, cone_R, fundamental_embed, minimal_cone,
                          polar_member, smallest_exponent, strict_approximator)
from jetpot.errors import CapabilityError, InfeasibleError, PreconditionError, SearchFailure
from jetpot.grid import GridDomain
from jetpot.jets import Jet, identity_jet, make_rng

E1 = np.array([1.0, 0.0])


def full(n=2):
    return DirectionalCone.full(n)


def family(n=2):
    """A spread of fundamental cones used by the sampled property tests."""
    b = np.eye(n)[-1]
    return [cone_P(n), cone_NP(n), cone_N(n), cone_gamma(n, 0.5), cone_R(n, 1.0), minimal_cone(n),
            FundamentalCone(1.0, full(n), 1.0),
            FundamentalCone(0.3, DirectionalCone.halfspace(b), 2.0),
            FundamentalCone(FREE, DirectionalCone.circular(b, 0.7), INF)]


def test_membership_examples():
    J = Jet(-1.0, np.zeros(2), np.eye(2))
    for M in family():
        assert cone_member(M, J)
    M = FundamentalCone(1.0, full(), 1.0)
    assert cone_member(M, Jet(-2.0, E1, 2 * np.eye(2)))
    assert not cone_member(cone_gamma(2, 1.0), Jet(-0.5, E1, np.eye(2)))


def test_interior_examples():
    J = Jet(-1.0, np.zeros(2), np.eye(2))
    assert cone_interior(FundamentalCone(1.0, full(), 1.0), J)
    assert not cone_interior(FundamentalCone(1.0, DirectionalCone.halfspace(E1), 1.0), J)
    assert not cone_interior(FundamentalCone(1.0, full(), 1.0), identity_jet(2))


def test_dual_membership_examples():
    M = cone_R(2, 1.0)
    J = Jet(0.0, np.array([0.0, 2.0]), -np.eye(2))  # lam_max + |p|/R = 1
    assert cone_dual_member(M, J)
    assert not cone_dual_member(M, Jet(0.0, np.zeros(2), -np.eye(2)))


def test_polar_examples():
    P = cone_P(3)
    assert polar_member(P, identity_jet(3))
    assert not polar_member(P, identity_jet(3, r=1.0))
    Mg = cone_gamma(2, 2.0)
    assert polar_member(Mg, Jet(-1.0, np.array([1.2, -1.4]) / np.hypot(1.2, 1.4) * 2, np.zeros((2, 2))))
    assert not polar_member(Mg, Jet(-1.0, np.array([2.5, 0.0]), np.zeros((2, 2))))


def test_polar_capability_error():
    with pytest.raises(CapabilityError):
        polar_member(SubRCone(2, 1.0), identity_jet(2))


def test_parameter_validation():
    with pytest.raises(PreconditionError):
        FundamentalCone(-1.0, full(), 1.0)
    with pytest.raises(PreconditionError):
        FundamentalCone(0.0, full(), 0.0)
    with pytest.raises(PreconditionError):
        DirectionalCone.circular(E1, 2.0)


def test_serialization_roundtrip():
    rng = make_rng(5)
    for M in family():
        J = M.sample(rng, 50)
        assert np.array_equal(cone_from_dict(M.to_dict()).margin(J), M.margin(J))


@pytest.mark.parametrize("M", family(), ids=lambda M: M.describe())
def test_cone_axioms_sampled(M):
    rng = make_rng(6)
    J = M.sample(rng, 2000)
    K = M.sample(rng, 2000)
    assert np.all(M.member(J))
    # contains the minimal cone, closed under sums and positive scaling
    M0 = minimal_cone(M.n).sample(rng, 2000)
    assert np.all(M.member(M0))
    assert np.all(M.member(J + K))
    assert np.all(M.member(J * rng.uniform(0.01, 100, 2000)))
    # interior points of M negate to non-members of the dual
    inner = M.interior(J)
    assert not np.any(M.dual_member(-J[np.nonzero(inner)[0]], tol=0.0))


@pytest.mark.parametrize("M", [cone_P(3), cone_NP(3), cone_gamma(3, 0.5), cone_N(3),
                               FundamentalCone(1.0, full(3), 1.0)], ids=lambda M: M.describe())
def test_bipolar_sampled(M):
    rng = make_rng(7)
    J = M.sample(rng, 5000)
    K = M.polar_sample(rng, 5000)
    assert np.all(M.polar_member(K))
    assert np.min(J.inner(K) / (J.norm() * K.norm() + 1e-300)) >= -1e-9


def test_interior_consistency():
    rng = make_rng(8)
    for M in family():
        J = M.sample(rng, 2000)
        J = J[np.nonzero(M.interior(J))[0]]
        assert np.all(M.member(J))
        # a step back along a fixed interior direction, small against the margin, stays inside
        J0 = M.interior_point()
        eps = M.margin(J) / (100 * (1 + float(J0.norm())))
        assert np.all(M.member(J - J0 * eps))


def test_nesting_in_gamma_and_R():
    rng = make_rng(9)
    strong = FundamentalCone(2.0, full(), 0.5)
    J = strong.sample(rng, 5000)
    assert np.all(FundamentalCone(1.0, full(), 0.5).member(J))
    assert np.all(FundamentalCone(2.0, full(), 1.0).member(J))


def test_enlarged_cones_contain_M_R():
    rng = make_rng(10)
    R = 1.0
    J = cone_R(2, R).sample(rng, 5000)
    assert np.all(SubRCone(2, R).member(J))
    assert np.all(SuperRCone(2, R).member(J))
    # M(R') for R' > R is not contained: witness (0, p, (|p|/R') I)
    p = np.array([1.0, 0.0])
    W = Jet(0.0, p, np.eye(2) / 1.5)
    assert cone_R(2, 1.5).member(W)
    assert not SubRCone(2, R).member(W) and not SuperRCone(2, R).member(W)


def test_fundamental_embed_product():
    M = cone_NP(2)
    E = fundamental_embed(M, seed=11)
    J = E.sample(make_rng(11), 10_000)
    assert np.all(M.member(J))


def test_fundamental_embed_from_zero_gradient_probe():
    M = FundamentalCone(0.5, DirectionalCone.halfspace(E1), 2.0)
    E = fundamental_embed(M, probe=Jet(-1.0, np.zeros(2), np.eye(2)), seed=12)
    J = E.sample(make_rng(12), 10_000)
    assert np.all(M.member(J))


def test_fundamental_embed_search_failure():
    class Empty:
        n = 2

        def interior(self, J):
            return np.zeros(np.shape(J.r), dtype=bool)

    with pytest.raises(SearchFailure):
        fundamental_embed(Empty(), budget=2000)


def test_strict_approximator_quadratic():
    grid = GridDomain.ball(np.zeros(2), 0.5, 0.05)
    approx, rep = strict_approximator(FundamentalCone(0.0, full(), 1.0), grid)
    assert rep.passed and rep.details["fraction_interior"] == 1.0
    assert np.isclose(approx.params["c"], 0.5 ** 2 / 2 + 1.0, atol=0.1)


def test_smallest_exponent_rule():
    assert smallest_exponent(SubRCone(2, 1.0), 2.0) == 5


def test_strict_approximator_infeasible():
    with pytest.raises(InfeasibleError):
        strict_approximator(cone_R(2, 1.0), GridDomain.ball(np.zeros(2), 2.0, 0.2))


@settings(max_examples=30, deadline=None)
@given(st.floats(0.0, 3.0), st.floats(0.0, 3.0), st.floats(0.2, 5.0), st.floats(0.2, 5.0))
def test_monotone_nesting(g1, g2, R1, R2):
    g1, g2 = sorted((g1, g2))
    R1, R2 = sorted((R1, R2))
    J = FundamentalCone(g2, full(), R1).sample(make_rng(13), 500)
    assert np.all(FundamentalCone(g1, full(), R2).member(J))
