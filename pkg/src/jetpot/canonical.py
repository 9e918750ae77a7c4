"""Canonical operators from ray solving, graphing functions and pointed linear families.

For a constraint set ``F`` with monotonicity cone ``M`` and an axis ``J0``
in the interior of ``M``, each ray ``J + t J0`` enters ``F`` at a single
parameter ``t_J``. The canonical operator is ``F(J) = -t_J``; it satisfies
``F(J + t J0) = F(J) + t`` and ``{F >= 0} = F``.
"""
from __future__ import annotations

from dataclasses import dataclass, field
from math import comb

import numpy as np

from .errors import GeometryError, PreconditionError, StructureError
from .jets import Jet, identity_jet, make_rng, sym_eigs
from .subeq import ConstraintSet, ray_solve


@dataclass
class RaySolution:
    """Result of a ray solve, possibly batched.

    ``residual`` is the margin at ``J + t_J J0``.
    """

    t_J: np.ndarray
    bracket: tuple[np.ndarray, np.ndarray]
    iterations: int
    residual: np.ndarray

    @property
    def value(self) -> np.ndarray:
        return -self.t_J

    def to_dict(self) -> dict:
        return {"value": self.value, "t_J": self.t_J, "iterations": self.iterations,
                "residual": self.residual}


def _margin_of(S):
    if hasattr(S, "margin"):
        return S.margin
    if callable(S):
        return S
    raise PreconditionError("expected a constraint set, cone or margin function")


def _check_axis(S, J0: Jet):
    M = getattr(S, "monotone_cone", None)
    if M is None and hasattr(S, "interior") and hasattr(S, "sample"):
        M = S
    if M is not None and not bool(M.interior(J0)):
        raise PreconditionError(f"J0 is not interior to the monotonicity cone {M.describe()}")


def solve_ray(S, J0: Jet, J: Jet, tol: float | None = None, check_axis: bool = True) -> RaySolution:
    """Find ``t_J`` with ``J + t_J J0`` on the boundary of ``S``.

    Parameters
    ----------
    S : ConstraintSet, MonotonicityCone or callable margin
    tol : float, optional
        Relative bracket width, default ``1e-13`` (absolute width
        ``tol * (1 + ||J||) / ||J0||``).

    Raises
    ------
    StructureError
        If no crossing is bracketed within ``2**60``.
    PreconditionError
        If ``J0`` is not interior to the claimed monotonicity cone.
    """
    if check_axis:
        _check_axis(S, J0)
    margin = _margin_of(S)
    t, hi, its, ok = ray_solve(margin, J, J0, rel_tol=1e-13 if tol is None else tol)
    if not np.all(ok):
        raise StructureError("ray never crosses the boundary: the set is not monotone along J0 "
                             "or J0 is not interior to its cone")
    lo = 2 * t - hi
    res = margin(J + J0 * t) if J.batch_shape else margin(J + J0 * float(t))
    return RaySolution(t, (lo, hi), its, np.asarray(res))


def canonical_eval(S, J0: Jet, J: Jet, tol: float | None = None):
    """Canonical operator ``-t_J`` of ``S`` with axis ``J0``."""
    v = solve_ray(S, J0, J, tol).value
    return float(v) if np.ndim(v) == 0 else v


def dual_canonical_eval(S, J0: Jet, J: Jet, tol: float | None = None):
    """Dual canonical operator ``-F(-J)``."""
    v = -np.asarray(canonical_eval(S, J0, -J, tol))
    return float(v) if np.ndim(v) == 0 else v


def canonical_operator(S, J0: Jet):
    """Batch-aware callable ``J -> F(J)``."""
    _check_axis(S, J0)

    def F(J):
        return solve_ray(S, J0, J, check_axis=False).value

    return F


@dataclass(frozen=True)
class Hyperplane:
    """The hyperplane ``{J: <normal, J> = 0}``."""

    normal: Jet

    def contains(self, J: Jet, rtol: float = 1e-9) -> np.ndarray:
        return np.abs(self.normal.inner(J)) <= rtol * float(self.normal.norm()) * (1 + J.norm())

    def project(self, J: Jet) -> Jet:
        nn = float(self.normal.inner(self.normal))
        return J - self.normal * (self.normal.inner(J) / nn)


def traceless_hyperplane(n: int) -> Hyperplane:
    """Hyperplane with normal ``(0, 0, I)``: trace-free Hessian slot."""
    return Hyperplane(identity_jet(n))


def _check_transversal(W0: Hyperplane, J0: Jet):
    if not float(W0.normal.inner(J0)) > 0:
        raise GeometryError("hyperplane is not transversal to J0: need <normal, J0> > 0")


def graphing(S, J0: Jet, W0: Hyperplane, Jprime: Jet):
    """Graphing function ``g(J') = -F(J')`` on ``W0``; ``J' + g(J') J0`` lies on the boundary."""
    _check_transversal(W0, J0)
    if not np.all(W0.contains(Jprime)):
        raise PreconditionError("J' does not lie in the hyperplane")
    v = -np.asarray(canonical_eval(S, J0, Jprime))
    return float(v) if v.ndim == 0 else v


def relative_interior_check(M, normal: Jet, samples: int = 1000, seed: int | None = 42,
                            rtol: float = 1e-9) -> bool:
    """Sampled test that ``normal`` lies in the relative interior of the polar of ``M``.

    The normal must pair nonnegatively with cone members, and members
    orthogonal to it must lie in the edge ``M ∩ -M``.
    """
    J = M.sample(make_rng(seed), samples)
    v = normal.inner(J)
    scale = rtol * float(normal.norm()) * (1 + J.norm())
    if np.any(v < -scale):
        return False
    flat = np.nonzero(v <= scale)[0]
    if flat.size == 0:
        return True
    return bool(np.all(M.member(-J[flat])))


def lipschitz_seminorm(M, J0: Jet, W0: Hyperplane, Jprime: Jet, check: bool = True,
                       seed: int | None = 42):
    """``(||J'||+, ||J'||-)``: the graphing function of the cone boundary at ``J'`` and ``-J'``.

    Raises
    ------
    GeometryError
        If ``W0`` is not transversal to ``J0`` or its normal fails the sampled
        relative-interior test for the polar of ``M``.
    """
    _check_transversal(W0, J0)
    if check and not relative_interior_check(M, W0.normal, seed=seed):
        raise GeometryError("hyperplane normal is not in the relative interior of the polar cone")
    plus = -np.asarray(canonical_eval(M, J0, Jprime))
    minus = -np.asarray(canonical_eval(M, J0, -Jprime))
    if plus.ndim == 0:
        return float(plus), float(minus)
    return plus, minus


# linear families

def _constant(d: np.ndarray) -> bool:
    return bool(np.ptp(d) <= 1e-14 * (1 + np.abs(d).max()))


def _pick_axis(axis, family):
    if axis is not None:
        return axis
    if family.axis is not None:
        return family.axis
    return family.default_axis()

def _flatten(J: Jet) -> np.ndarray:
    """Jets as vectors whose dot product is the jet inner product."""
    n = J.n
    return np.concatenate([J.r[..., None], J.p, J.A.reshape(J.A.shape[:-2] + (n * n,))], axis=-1)


@dataclass
class PointednessResult:
    pointed: bool
    axis: Jet
    epsilon: float
    violating_index: int | tuple | None = None

    def to_dict(self) -> dict:
        return {"pointed": self.pointed, "axis": self.axis.to_dict(), "epsilon": self.epsilon,
                "violating_index": self.violating_index}


class LinearFamily:
    """Coefficient jets ``J_s = (a_s, b_s, E_s)`` of linear operators ``<J_s, J>``.

    Parameters
    ----------
    members : Jet
        Batched jet of shape ``(N,)``.
    axis : Jet, optional
    check_elliptic : bool
        Require ``a_s <= 0`` and ``E_s >= 0`` (proper ellipticity).
    """

    def __init__(self, members: Jet, axis: Jet | None = None, check_elliptic: bool = True):
        if members.batch_shape == ():
            members = Jet(members.r[None], members.p[None], members.A[None])
        if np.any(members.norm() == 0):
            raise PreconditionError("family members must be nonzero")
        if check_elliptic:
            tol = 1e-9 * (1 + members.norm())
            if np.any(members.r > tol) or np.any(sym_eigs(members.A)[..., 0] < -tol):
                raise PreconditionError("members must satisfy a <= 0 and E >= 0")
        self.members = members
        self.axis = axis
        self.n = members.n

    def __len__(self) -> int:
        return len(self.members)

    def default_axis(self) -> Jet:
        unit = self.members * (1.0 / self.members.norm())
        return Jet(unit.r.mean(0), unit.p.mean(0), unit.A.mean(0))

    def pointedness(self, axis: Jet | None = None) -> PointednessResult:
        J0 = _pick_axis(axis, self)
        ratios = self.members.inner(J0) / self.members.norm()
        i = int(np.argmin(ratios))
        eps = float(ratios[i])
        return PointednessResult(eps > 0, J0, eps, None if eps > 0 else i)

    def op(self, mode: str, J0: Jet, J: Jet) -> np.ndarray:
        den = self.members.inner(J0)
        if np.any(den <= 0):
            raise PreconditionError("family is not pointed with this axis")
        vals = _flatten(J) @ _flatten(self.members).T / den
        return vals.min(-1) if mode == "inf" else vals.max(-1)


class SumFamily:
    """All pairwise sums ``J_i + K_j`` of two families, evaluated in chunks.

    This represents product index sets such as pairs of unit vectors without
    materializing ``N1 * N2`` jets.
    """

    def __init__(self, first: Jet, second: Jet, axis: Jet | None = None, chunk: int = 256):
        self.first = first
        self.second = second
        self.axis = axis
        self.n = first.n
        self.chunk = chunk

    def __len__(self) -> int:
        return len(self.first) * len(self.second)

    def _blocks(self):
        for s in range(0, len(self.first), self.chunk):
            yield s, self.first[s:s + self.chunk]

    def default_axis(self) -> Jet:
        F2 = _flatten(self.second)
        acc = np.zeros(F2.shape[1])
        for _, blk in self._blocks():
            S = _flatten(blk)[:, None, :] + F2[None, :, :]
            acc += (S / np.linalg.norm(S, axis=-1, keepdims=True)).sum((0, 1))
        acc /= len(self)
        n = self.n
        return Jet(acc[0], acc[1:1 + n], acc[1 + n:].reshape(n, n))

    def pointedness(self, axis: Jet | None = None) -> PointednessResult:
        J0 = _pick_axis(axis, self)
        F2 = _flatten(self.second)
        g2 = np.sum(F2 * F2, -1)
        d2 = self.second.inner(J0)
        best, where = np.inf, None
        for s, blk in self._blocks():
            F1 = _flatten(blk)
            nrm = np.sqrt(np.sum(F1 * F1, -1)[:, None] + g2[None, :] + 2 * F1 @ F2.T)
            ratio = (blk.inner(J0)[:, None] + d2[None, :]) / nrm
            k = int(np.argmin(ratio))
            if ratio.flat[k] < best:
                best = float(ratio.flat[k])
                where = (s + k // ratio.shape[1], k % ratio.shape[1])
        return PointednessResult(best > 0, J0, best, None if best > 0 else where)

    def op(self, mode: str, J0: Jet, J: Jet) -> np.ndarray:
        d1 = self.first.inner(J0)
        d2 = self.second.inner(J0)
        single = J.batch_shape == ()
        FJ = np.atleast_2d(_flatten(J))
        u = FJ @ _flatten(self.first).T
        v = FJ @ _flatten(self.second).T
        pick = np.min if mode == "inf" else np.max
        if _constant(d1) and _constant(d2):
            den = d1.mean() + d2.mean()
            if den <= 0:
                raise PreconditionError("family is not pointed with this axis")
            out = (pick(u, -1) + pick(v, -1)) / den
        else:
            out = np.full(len(FJ), np.inf if mode == "inf" else -np.inf)
            for s in range(0, len(d1), self.chunk):
                den = d1[s:s + self.chunk, None] + d2[None, :]
                if np.any(den <= 0):
                    raise PreconditionError("family is not pointed with this axis")
                vals = (u[:, s:s + self.chunk, None] + v[:, None, :]) / den
                blk = pick(vals.reshape(len(FJ), -1), -1)
                out = np.minimum(out, blk) if mode == "inf" else np.maximum(out, blk)
        return float(out[0]) if single else out


def pointedness_check(S, axis: Jet | None = None) -> PointednessResult:
    """Pointedness ``<J_s, J0> >= eps ||J_s||`` with the supplied or mean axis."""
    return S.pointedness(axis)


def family_op(S, mode: str, J0: Jet, J: Jet):
    """``inf`` or ``sup`` of ``<J_s, J> / <J_s, J0>`` over the family."""
    if mode not in ("inf", "sup"):
        raise PreconditionError("mode must be 'inf' or 'sup'")
    res = S.pointedness(J0)
    if not res.pointed:
        raise PreconditionError(f"family is not pointed with this axis (eps = {res.epsilon:.3g})")
    out = S.op(mode, J0, J)
    return float(out) if np.ndim(out) == 0 else out


def circle_directions(N: int) -> np.ndarray:
    """``N`` equally spaced unit vectors in the plane."""
    ang = 2 * np.pi * np.arange(N) / N
    return np.stack([np.cos(ang), np.sin(ang)], axis=-1)


def unit_directions(n: int, N: int) -> np.ndarray:
    if n == 1:
        return np.array([[1.0], [-1.0]])
    if n == 2:
        return circle_directions(N)
    if n == 3:
        from .grid import fibonacci_sphere

        return fibonacci_sphere(N)
    raise PreconditionError("direction grids are provided for n <= 3")


def eigen_gradient_family(n: int, R: float, N: int = 4096) -> SumFamily:
    """Coefficients ``(0, eta / R, xi xi^T)`` over pairs of unit vectors.

    With axis ``(0, 0, I)`` the infimum operator is ``lam_1(A) - |p| / R``
    up to the discretization of the sphere, which is reported as
    ``O(N^(-2/(n-1)))`` for the Hessian term and ``O(N^(-2/(n-1)))`` for the
    gradient term (both are quadratic in the angular spacing).
    """
    dirs = unit_directions(n, N)
    k = len(dirs)
    hess = Jet(np.zeros(k), np.zeros((k, n)), dirs[:, :, None] * dirs[:, None, :])
    grad = Jet(np.zeros(k), dirs / R, np.zeros((k, n, n)))
    return SumFamily(hess, grad, axis=identity_jet(n))


def drift_family(c: float, drifts, volatilities) -> LinearFamily:
    """Controlled-diffusion coefficients ``(c, b_s, E_s)`` with ``c <= 0``, ``E_s >= 0``."""
    drifts = np.asarray(drifts, dtype=float)
    vols = np.asarray(volatilities, dtype=float)
    return LinearFamily(Jet(np.full(len(drifts), float(c)), drifts, vols))


# catalog of canonical operators with closed forms

@dataclass
class CanonicalEntry:
    """A constraint set with its axis and the closed form of its canonical operator."""

    name: str
    constraint: ConstraintSet
    J0: Jet
    closed_form: object
    dual_closed_form: object = None
    notes: str = ""


def canonical_catalog(n: int, k: int | None = None, R: float = 1.0) -> dict[str, CanonicalEntry]:
    """Constraint sets whose canonical operators have closed forms."""
    from .cones import cone_N, cone_NP, cone_P, cone_R

    k = max(1, n - 1) if k is None else k

    def lmin(J):
        return sym_eigs(J.A)[..., 0]

    def lmax(J):
        return sym_eigs(J.A)[..., -1]

    def trunc(J):
        return sym_eigs(J.A)[..., :k].sum(-1)

    def trunc_top(J):
        return sym_eigs(J.A)[..., n - k:].sum(-1)

    pn = lambda J: np.linalg.norm(J.p, axis=-1)  # noqa: E731
    P = ConstraintSet(lmin, n, "P", monotone_cone=cone_P(n))
    NP = ConstraintSet(lambda J: np.minimum(-J.r, lmin(J)), n, "N x P", monotone_cone=cone_NP(n))
    PK = ConstraintSet(trunc, n, f"P({k})", monotone_cone=cone_P(n))
    N = ConstraintSet(lambda J: -J.r, n, "N", monotone_cone=cone_N(n))
    MR = ConstraintSet(lambda J: lmin(J) - pn(J) / R, n, f"M(R={R:g})", monotone_cone=cone_R(n, R))
    return {
        "lambda_min": CanonicalEntry("lambda_min", P, identity_jet(n), lmin, lmax),
        "min_neg_r_lambda_min": CanonicalEntry(
            "min_neg_r_lambda_min", NP, identity_jet(n, r=-1.0),
            lambda J: np.minimum(-J.r, lmin(J)), lambda J: np.maximum(-J.r, lmax(J))),
        "truncated_laplacian": CanonicalEntry(
            "truncated_laplacian", PK, identity_jet(n, scale=1.0 / k), trunc, trunc_top,
            notes="axis (0, 0, I/k) so that the operator is the sum of the k smallest eigenvalues"),
        "neg_r": CanonicalEntry("neg_r", N, Jet(-1.0, np.zeros(n), np.zeros((n, n))),
                                lambda J: -J.r, lambda J: -J.r),
        "lambda_min_minus_gradient": CanonicalEntry(
            "lambda_min_minus_gradient", MR, identity_jet(n), lambda J: lmin(J) - pn(J) / R,
            lambda J: lmax(J) + pn(J) / R),
    }
