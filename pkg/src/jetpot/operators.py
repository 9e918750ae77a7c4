"""Catalog of named operators with their constraint sets, claimed cones and levels.

Every entry is batch-aware: operators and margins accept batched jets.
"""
from __future__ import annotations

from dataclasses import dataclass, field
from math import comb
from typing import Callable

import numpy as np

from .cones import (DirectionalCone, FundamentalCone, ParabolicCone, FREE, INF, cone_NP, cone_P,
                    cone_R)
from .errors import ConstraintViolation, PreconditionError
from .garding import elementary_symmetric, k_fold_sums
from .jets import Jet, identity_jet, make_rng, random_jets, sym_eigs
from .report import VerificationReport
from .subeq import (CompatiblePair, ConstraintSet, Interval, compatibility_check, level_set,
                    monotonicity_check, sample_members, tameness_check)

REALS = Interval()
NONNEG = Interval(0.0, np.inf, lo_closed=True)


def _eigs(J: Jet) -> np.ndarray:
    return sym_eigs(J.A)


def _pnorm(J: Jet) -> np.ndarray:
    return np.linalg.norm(J.p, axis=-1)


def sigma_cone_margin(lam: np.ndarray, k: int) -> np.ndarray:
    """Smallest Garding eigenvalue of ``sigma_k``; nonnegative exactly on the closed cone.

    The roots of ``t -> sigma_k(lam + t)`` are found from a batched
    companion matrix; its coefficients are
    ``C(n - j, k - j) sigma_j(lam)`` for ``t^(k - j)``.
    """
    lam = np.asarray(lam, dtype=float)
    n = lam.shape[-1]
    if k == 1:
        return lam.sum(-1) / n
    coef = np.stack([comb(n - j, k - j) * elementary_symmetric(lam, j) for j in range(k + 1)],
                    axis=-1)
    monic = coef[..., 1:] / coef[..., :1]
    comp = np.zeros(lam.shape[:-1] + (k, k))
    comp[..., 0, :] = -monic
    comp[..., np.arange(1, k), np.arange(k - 1)] = 1.0
    roots = np.linalg.eigvals(comp).real
    return -roots.max(-1)


# profiles and gradient factors

H_PROFILES = {
    "one": (lambda r, n: np.ones_like(r), 0, "h(r) = 1"),
    "neg_r": (lambda r, n: -r, 1, "h(r) = -r"),
    "affine_sphere": (lambda r, n: (-r) ** (n + 2), None, "h(r) = (-r)^(n+2)"),
}


def _h_degree(name: str, n: int) -> int:
    deg = H_PROFILES[name][1]
    return n + 2 if deg is None else deg


def gradient_factor(kind: str, n: int, k: int | None = None):
    """``(d, D, degree)`` for ``d(p) = p_n`` on a half-space or ``p_1 ... p_k`` on an orthant."""
    if kind == "halfspace":
        e = np.zeros(n)
        e[-1] = 1.0
        return (lambda p: p[..., -1]), DirectionalCone.halfspace(e), 1
    if kind == "orthant":
        k = n if k is None else int(k)
        if not 1 <= k <= n:
            raise PreconditionError("orthant factor needs 1 <= k <= n")
        return (lambda p: np.prod(p[..., :k], axis=-1)), DirectionalCone.orthant(n, k), k
    raise PreconditionError(f"unknown gradient factor {kind!r}; use 'halfspace' or 'orthant'")


def _garding_factor(name: str, n: int, k: int | None):
    """``(value(lam), cone_margin(lam), degree)`` for a pure second-order factor."""
    if name == "det":
        return (lambda lam: np.prod(lam, -1)), (lambda lam: lam[..., 0]), n
    if name == "sigma_k":
        k = _check_k(n, k)
        return (lambda lam: elementary_symmetric(lam, k)), (lambda lam: sigma_cone_margin(lam, k)), k
    if name == "tau_k":
        k = _check_k(n, k)
        return ((lambda lam: np.prod(k_fold_sums(lam, k), -1)),
                (lambda lam: lam[..., :k].sum(-1)), comb(n, k))
    raise PreconditionError(f"unknown Garding factor {name!r}; use det, sigma_k or tau_k")


def _check_k(n: int, k) -> int:
    if k is None or not 1 <= int(k) <= n:
        raise PreconditionError(f"need 1 <= k <= n = {n}")
    return int(k)


def alpha_shift(p: np.ndarray, alpha: float) -> np.ndarray:
    """``|p|^((alpha-1)/alpha) (P_perp + alpha P_p)``, zero at ``p = 0``."""
    p = np.asarray(p, dtype=float)
    n = p.shape[-1]
    norm = np.linalg.norm(p, axis=-1)
    w = norm ** ((alpha - 1) / alpha)
    safe = np.where(norm > 0, norm, 1.0)
    u = p / safe[..., None]
    proj = u[..., :, None] * u[..., None, :]
    return w[..., None, None] * (np.eye(n) + (alpha - 1) * proj)


@dataclass
class OperatorSpec:
    """A named operator wired to its compatible pair and claimed monotonicity cone.

    Attributes
    ----------
    axis : Jet
        Interior direction of the claimed cone used for tameness checks.
    gradient_free : bool
        True when the operator ignores ``p``.
    parabolic : bool
        True for entries whose last coordinate is time.
    """

    name: str
    params: dict
    pair: CompatiblePair
    claimed_cone: object
    axis: Jet
    description: str = ""
    gradient_free: bool = False
    parabolic: bool = False
    tame: bool = True
    canonical: bool = False

    @property
    def n(self) -> int:
        return self.pair.n

    @property
    def constraint(self) -> ConstraintSet | None:
        return self.pair.constraint

    @property
    def levels(self) -> Interval:
        return self.pair.levels

    def __call__(self, J: Jet) -> np.ndarray:
        return self.pair(J)

    def check_set(self) -> ConstraintSet:
        """The set used for monotonicity checks: the constraint, or ``{F >= 0}``."""
        if self.constraint is not None:
            return self.constraint
        c = 0.0 if self.levels.contains(0.0) else _interior_level(self.levels)
        return level_set(self.pair, c)

    def to_dict(self) -> dict:
        return {"name": self.name, "params": self.params, "description": self.description,
                "n": self.n, "constrained": self.pair.constrained, "c0": self.pair.c0,
                "levels": self.levels.to_dict(), "claimed_cone": self.claimed_cone.to_dict(),
                "claimed_cone_name": self.claimed_cone.describe(), "axis": self.axis.to_dict(),
                "gradient_free": self.gradient_free, "parabolic": self.parabolic,
                "tame": self.tame, "canonical": self.canonical, "degree": self.pair.degree}


def _interior_level(iv: Interval) -> float:
    lo, hi = iv.lo, iv.hi
    if np.isfinite(lo) and np.isfinite(hi):
        return 0.5 * (lo + hi)
    if np.isfinite(lo):
        return lo + 1.0
    if np.isfinite(hi):
        return hi - 1.0
    return 0.0


def _spec(name, params, n, operator, constraint, c0, levels, cone, axis, degree=1.0, **kw):
    pair = CompatiblePair(operator, constraint, c0, levels, n, name=name, cone=cone, J0=axis,
                          degree=degree)
    return OperatorSpec(name, params, pair, cone, axis, **kw)


def _constraint(margin, n, name, cone, reduced=()):
    return ConstraintSet(margin, n, name=name, monotone_cone=cone, reduced_axes=reduced)


# builders

def _lambda_min(n, **_):
    P = cone_P(n)
    return _spec("lambda_min", {}, n, lambda J: _eigs(J)[..., 0], None, -np.inf, REALS, P,
                 identity_jet(n), description="smallest Hessian eigenvalue",
                 gradient_free=True, canonical=True)


def _lambda_max(n, **_):
    P = cone_P(n)
    return _spec("lambda_max", {}, n, lambda J: _eigs(J)[..., -1], None, -np.inf, REALS, P,
                 identity_jet(n), description="largest Hessian eigenvalue",
                 gradient_free=True, canonical=True)


def _truncated_laplacian(n, k=None, **_):
    k = _check_k(n, 1 if k is None else k)
    return _spec("truncated_laplacian", {"k": k}, n, lambda J: _eigs(J)[..., :k].sum(-1), None,
                 -np.inf, REALS, cone_P(n), identity_jet(n, scale=1.0 / k),
                 description="sum of the k smallest Hessian eigenvalues",
                 gradient_free=True, canonical=True)


def _det_MA(n, **_):
    P = cone_P(n)
    S = _constraint(lambda J: _eigs(J)[..., 0], n, "P", P)
    return _spec("det_MA", {}, n, lambda J: np.prod(_eigs(J), -1), S, 0.0, NONNEG, P,
                 identity_jet(n), degree=n, description="Monge-Ampere det(A) on the convex cone",
                 gradient_free=True)


def _sigma_k(n, k=None, **_):
    k = _check_k(n, 2 if k is None and n >= 2 else k)
    P = cone_P(n)
    S = _constraint(lambda J: sigma_cone_margin(_eigs(J), k), n, f"Gamma_{k}", P)
    return _spec("sigma_k", {"k": k}, n, lambda J: elementary_symmetric(_eigs(J), k), S, 0.0,
                 NONNEG, P, identity_jet(n), degree=k,
                 description="k-Hessian sigma_k(A) on its Garding cone", gradient_free=True)


def _geometric_k_convexity(n, k=None, **_):
    k = _check_k(n, 1 if k is None else k)
    P = cone_P(n)
    S = _constraint(lambda J: _eigs(J)[..., :k].sum(-1), n, f"P({k})", P)
    return _spec("geometric_k_convexity", {"k": k}, n,
                 lambda J: np.prod(k_fold_sums(_eigs(J), k), -1), S, 0.0, NONNEG, P,
                 identity_jet(n), degree=comb(n, k),
                 description="product of all k-fold eigenvalue sums on P(k)", gradient_free=True)


def _special_lagrangian(n, **_):
    half = n * np.pi / 2
    return _spec("special_lagrangian", {}, n, lambda J: np.arctan(_eigs(J)).sum(-1), None,
                 -np.inf, Interval(-half, half), cone_P(n), identity_jet(n),
                 description="sum of arctangents of the Hessian eigenvalues", gradient_free=True)


def _gradient_free_garding(n, g="det", h="neg_r", k=None, **_):
    if h not in H_PROFILES:
        raise PreconditionError(f"unknown profile {h!r}; use one of {sorted(H_PROFILES)}")
    gval, gmarg, gdeg = _garding_factor(g, n, k)
    hfun, _, hdesc = H_PROFILES[h]
    NP = cone_NP(n)
    if h == "one":
        def margin(J):
            return gmarg(_eigs(J))
    else:
        def margin(J):
            return np.minimum(-J.r, gmarg(_eigs(J)))

    S = _constraint(margin, n, f"{'R' if h == 'one' else 'N'} x R^n x Gamma({g})", NP)
    params = {"g": g, "h": h}
    if k is not None:
        params["k"] = int(k)
    return _spec("gradient_free_garding", params, n,
                 lambda J: hfun(J.r, n) * gval(_eigs(J)), S, 0.0, NONNEG, NP,
                 identity_jet(n, r=-1.0), degree=gdeg + _h_degree(h, n),
                 description=f"{hdesc} times {g}(A)", gradient_free=True)


def _affine_sphere(n, **_):
    spec = _gradient_free_garding(n, g="det", h="affine_sphere")
    spec.name = spec.pair.name = "affine_sphere"
    spec.params = {}
    spec.description = "(-r)^(n+2) det(A) on N x R^n x P"
    return spec


def _directional_garding(n, g="det", h="neg_r", d="halfspace", k=None, dk=None, **_):
    gval, gmarg, gdeg = _garding_factor(g, n, k)
    hfun, _, hdesc = H_PROFILES[h] if h in H_PROFILES else (None, None, None)
    if hfun is None:
        raise PreconditionError(f"unknown profile {h!r}")
    dfun, D, ddeg = gradient_factor(d, n, dk)
    cone = FundamentalCone(0.0, D, INF)
    r_part = h != "one"

    def margin(J):
        m = np.minimum(D.margin(J.p), gmarg(_eigs(J)))
        return np.minimum(-J.r, m) if r_part else m

    S = _constraint(margin, n, f"{'N' if r_part else 'R'} x D({d}) x Gamma({g})", cone)
    params = {"g": g, "h": h, "d": d}
    if k is not None:
        params["k"] = int(k)
    if dk is not None:
        params["dk"] = int(dk)
    return _spec("directional_garding", params, n,
                 lambda J: hfun(J.r, n) * dfun(J.p) * gval(_eigs(J)), S, 0.0, NONNEG, cone,
                 cone.interior_point(), degree=gdeg + ddeg + _h_degree(h, n),
                 description=f"{hdesc} times d(p) times {g}(A) with a {d} gradient cone")


def _optimal_transport(n, d="halfspace", dk=None, **_):
    spec = _directional_garding(n, g="det", h="one", d=d, dk=dk)
    spec.name = spec.pair.name = "optimal_transport"
    spec.params = {"d": d} if dk is None else {"d": d, "dk": int(dk)}
    spec.description = "d(p) det(A) with a directed target density"
    return spec


def _eigen_gradient(sign):
    def build(n, k=None, R=1.0, **_):
        k = _check_k(n, 1 if k is None else k)
        R = float(R)
        if not R > 0:
            raise PreconditionError("need R > 0")
        name = f"eigen_gradient_{'plus' if sign > 0 else 'minus'}"
        return _spec(name, {"k": k, "R": R}, n,
                     lambda J: _eigs(J)[..., k - 1] + sign * _pnorm(J) / R, None, -np.inf, REALS,
                     cone_R(n, R), identity_jet(n),
                     description=f"lam_k(A) {'+' if sign > 0 else '-'} |p|/R")
    return build


def _alpha_family(which):
    def build(n, alpha=2.0, **_):
        alpha = float(alpha)
        if not alpha > 1:
            raise PreconditionError("the alpha family needs alpha > 1; alpha = 1 is pure "
                                    "second order and is not part of this family")
        pick = 0 if which == "F" else -1
        cone = FundamentalCone(FREE, DirectionalCone.zero(n), INF)
        return _spec(f"alpha_family_{which}", {"alpha": alpha}, n,
                     lambda J: sym_eigs(J.A + alpha_shift(J.p, alpha))[..., pick], None, -np.inf,
                     REALS, cone, identity_jet(n),
                     description=f"lam_{'min' if which == 'F' else 'max'}(B(p, A)) with "
                                 "B = A + |p|^((alpha-1)/alpha) (P_perp + alpha P_p)")
    return build


def _linear(n, a=-1.0, b=None, E=None, **_):
    b = np.zeros(n) if b is None else np.asarray(b, dtype=float)
    E = np.eye(n) if E is None else np.asarray(E, dtype=float)
    coeff = Jet(float(a), b, E)
    if a > 0 or sym_eigs(E)[0] < -1e-12 * (1 + np.abs(E).max()):
        raise PreconditionError("linear operator must be proper elliptic: a <= 0 and E >= 0")
    if coeff.norm() == 0:
        raise PreconditionError("coefficient jet must be nonzero")
    D = DirectionalCone.full(n) if not np.any(b) else DirectionalCone.halfspace(b)
    cone = FundamentalCone(0.0, D, INF)
    return _spec("linear", {"a": float(a), "b": b.tolist(), "E": E.tolist()}, n,
                 lambda J: coeff.inner(J), None, -np.inf, REALS, cone, cone.interior_point(),
                 description="<J', J> for a proper elliptic coefficient jet J'")


def _parabolic_heat(n, gamma=1.0, **_):
    if n < 2:
        raise PreconditionError("parabolic entries need n >= 2 (space plus time)")
    cone = ParabolicCone(DirectionalCone.parabolic(n, float(gamma)))
    return _spec("parabolic_heat", {"gamma": float(gamma)}, n,
                 lambda J: np.trace(J.A[..., :-1, :-1], axis1=-2, axis2=-1) - J.p[..., -1], None,
                 -np.inf, REALS, cone, cone.interior_point(),
                 description="G(r, p', A') - tau with G = tr(A')", parabolic=True)


def _parabolic_constrained(n, **_):
    if n < 2:
        raise PreconditionError("parabolic entries need n >= 2 (space plus time)")
    e = np.zeros(n)
    e[-1] = 1.0
    cone = ParabolicCone(DirectionalCone.halfspace(e))

    def margin(J):
        return np.minimum(J.p[..., -1], sym_eigs(J.A[..., :-1, :-1])[..., 0])

    S = _constraint(margin, n, "tau >= 0, A' >= 0", cone)
    return _spec("parabolic_constrained", {}, n,
                 lambda J: J.p[..., -1] * np.prod(sym_eigs(J.A[..., :-1, :-1]), -1), S, 0.0,
                 NONNEG, cone, cone.interior_point(), degree=n,
                 description="tau det(A') on {tau >= 0, A' >= 0}", parabolic=True)


CATALOG: dict[str, tuple[Callable, str]] = {
    "lambda_min": (_lambda_min, "n"),
    "lambda_max": (_lambda_max, "n"),
    "truncated_laplacian": (_truncated_laplacian, "n, k"),
    "det_MA": (_det_MA, "n"),
    "sigma_k": (_sigma_k, "n, k"),
    "geometric_k_convexity": (_geometric_k_convexity, "n, k"),
    "special_lagrangian": (_special_lagrangian, "n"),
    "gradient_free_garding": (_gradient_free_garding, "n, g in {det, sigma_k, tau_k}, "
                                                      "h in {one, neg_r, affine_sphere}, k"),
    "affine_sphere": (_affine_sphere, "n"),
    "directional_garding": (_directional_garding, "n, g, h, d in {halfspace, orthant}, k, dk"),
    "optimal_transport": (_optimal_transport, "n, d, dk"),
    "eigen_gradient_plus": (_eigen_gradient(+1), "n, k, R"),
    "eigen_gradient_minus": (_eigen_gradient(-1), "n, k, R"),
    "alpha_family_F": (_alpha_family("F"), "n, alpha > 1"),
    "alpha_family_G": (_alpha_family("G"), "n, alpha > 1"),
    "linear": (_linear, "n, a <= 0, b, E >= 0"),
    "parabolic_heat": (_parabolic_heat, "n >= 2, gamma"),
    "parabolic_constrained": (_parabolic_constrained, "n >= 2"),
}


def catalog_names() -> list[str]:
    return list(CATALOG)


def catalog(name: str, n: int = 2, **params) -> OperatorSpec:
    """Build a catalog entry.

    Raises
    ------
    PreconditionError
        Unknown name or invalid parameters.
    """
    if name not in CATALOG:
        raise PreconditionError(f"unknown operator {name!r}; known: {', '.join(CATALOG)}")
    n = int(n)
    if n < 1:
        raise PreconditionError("n must be positive")
    params = {k: v for k, v in params.items() if v is not None}
    return CATALOG[name][0](n, **params)


def eval_operator(spec: OperatorSpec, J: Jet, check: bool = True):
    """Operator value; constrained entries reject jets outside the constraint.

    Raises
    ------
    ConstraintViolation
        If ``check`` and some jet lies outside the constraint set.
    """
    if J.n != spec.n:
        raise PreconditionError(f"{spec.name}: expected jets with n={spec.n}")
    if check and spec.constraint is not None:
        bad = ~np.asarray(spec.constraint.member(J))
        if np.any(bad):
            raise ConstraintViolation(f"{spec.name}: jet outside the constraint "
                                      f"{spec.constraint.name}")
    v = spec(J)
    return float(v) if np.ndim(v) == 0 else v


def admissible_levels(spec: OperatorSpec, samples: int = 2000, seed: int | None = 42) -> Interval:
    """Analytic admissible levels, or a sampled range flagged approximate."""
    if spec.levels is not None:
        return spec.levels
    rng = make_rng(seed)
    if spec.constraint is not None:
        J, _ = sample_members(spec.constraint, rng, samples)
    else:
        J = random_jets(rng, spec.n, samples)
    v = spec(J)
    return Interval(float(np.min(v)), float(np.max(v)), True, True, approximate=True)


def duality_relation_check(n: int, k: int, R: float = 1.0, samples: int = 1000,
                           seed: int | None = 42, tol: float = 1e-9) -> VerificationReport:
    """Which index ``k'`` makes the dual of ``lam_k + |p|/R >= 0`` equal to ``lam_k' - |p|/R >= 0``.

    Tests the reflected index ``n - k + 1`` and the alternative ``n + k - 1``
    (when it is a valid index) on sampled jets, and also the unreflected
    index ``k``, which holds only when ``2k = n + 1``. The report passes
    when the reflected index holds and records each candidate's verdict.
    """
    k = _check_k(n, k)
    rng = make_rng(seed)
    J = random_jets(rng, n, samples)
    plus = catalog("eigen_gradient_plus", n, k=k, R=R)
    dual = -plus(-J)
    out = {}
    witness = None
    for label, idx in (("reflected", n - k + 1), ("alternative", n + k - 1), ("same", k)):
        if not 1 <= idx <= n:
            out[label] = {"index": idx, "valid_index": False}
            continue
        other = catalog("eigen_gradient_minus", n, k=idx, R=R)(J)
        diff = np.abs(dual - other)
        sign_ok = np.sign(np.where(np.abs(dual) < tol, 0, dual)) == \
            np.sign(np.where(np.abs(other) < tol, 0, other))
        holds = bool(np.all(diff <= tol * (1 + J.norm())))
        out[label] = {"index": idx, "valid_index": True, "holds": holds,
                      "max_value_gap": float(diff.max()),
                      "sign_agreement": float(np.mean(sign_ok))}
        if label == "same" and not holds:
            out[label]["witness"] = J[int(np.argmax(diff))].to_dict()
    ref = out["reflected"]
    holds_ref = ref["holds"]
    if not holds_ref:
        witness = J[0]
    numerically = [lbl for lbl in ("reflected", "alternative") if out[lbl].get("holds")]
    details = {"n": n, "k": k, "R": R, "candidates": out,
               "holding_indices": [out[lbl]["index"] for lbl in numerically]}
    return VerificationReport(holds_ref, samples, -ref["max_value_gap"], witness, seed,
                              details=details)


def operator_checks(spec: OperatorSpec, samples: int = 2000, seed: int | None = 42
                    ) -> VerificationReport:
    """Monotonicity, tameness and (for constrained entries) compatibility of a catalog entry.

    The combined report passes when every sub-check passes and is
    inconclusive when any sub-check is.
    """
    S = spec.check_set()
    parts = {"monotonicity": monotonicity_check(S, spec.claimed_cone, samples, seed,
                                                operator=spec.pair),
             "tameness": tameness_check(spec.pair, spec.axis, min(samples, 1000), seed)}
    if spec.pair.constrained:
        parts["compatibility"] = compatibility_check(spec.pair, samples, seed)
    passed = all(r.passed for r in parts.values())
    inconclusive = any(r.inconclusive for r in parts.values())
    worst = min(parts.values(), key=lambda r: r.worst_margin
                if np.isfinite(r.worst_margin) else np.inf)
    details = {"operator": spec.name, "n": spec.n, "params": spec.params,
               "checks": {k: {"passed": r.passed, "inconclusive": r.inconclusive,
                              "n_samples": r.n_samples, "worst_margin": r.worst_margin,
                              "details": r.details} for k, r in parts.items()}}
    failed = next((r for r in parts.values() if not r.passed and r.witness is not None), None)
    return VerificationReport(passed, sum(r.n_samples for r in parts.values()), worst.worst_margin,
                              None if failed is None else failed.witness, seed, details=details,
                              inconclusive=inconclusive and not passed)
