"""Grid verification of sub/super/harmonic conditions, radial reductions and scenarios.

Functions come with closed-form jets where possible (``FunctionOracle``);
finite-difference jets are the fallback. Scenario reports carry an
``anchor`` string naming the statement they reproduce.
"""
from __future__ import annotations

from dataclasses import dataclass, field
from typing import Callable

import numpy as np

from .errors import DomainError, EvaluationError, PreconditionError, ResolutionError
from .grid import GridDomain
from .jets import (Jet, RadialProfile, fd_jet, make_rng, power_profile, radial_jet, random_orthogonal,
                   sym_eigs)
from .report import VerificationReport
from .subeq import ConstraintSet


@dataclass
class FunctionOracle:
    """A function of ``x`` (shape ``(..., n)``) with optional closed-form jets."""

    value: Callable[[np.ndarray], np.ndarray]
    jet: Callable[[np.ndarray], Jet] | None = None
    name: str = "u"

    def __call__(self, x) -> np.ndarray:
        return np.asarray(self.value(np.asarray(x, dtype=float)), dtype=float)

    @classmethod
    def radial(cls, profile: RadialProfile, center=None, name: str | None = None) -> "FunctionOracle":
        """``x -> psi(|x - center|)``; jets are undefined at the center."""
        c = None if center is None else np.asarray(center, dtype=float)

        def value(x):
            y = x if c is None else x - c
            return profile(np.linalg.norm(y, axis=-1))

        return cls(value, lambda x: radial_jet(profile, x, c), name or f"radial({profile.name})")

    @classmethod
    def quadratic(cls, J: Jet, x0=None, name: str = "quadratic") -> "FunctionOracle":
        """``r + <p, x - x0> + <A (x - x0), x - x0> / 2``."""
        x0 = np.zeros(J.n) if x0 is None else np.asarray(x0, dtype=float)

        def value(x):
            d = x - x0
            return J.r + d @ J.p + 0.5 * np.einsum("...i,ij,...j->...", d, J.A, d)

        def jet(x):
            d = x - x0
            m = d.shape[:-1]
            return Jet(value(x), J.p + d @ J.A, np.broadcast_to(J.A, m + J.A.shape).copy())

        return cls(value, jet, name)

    @classmethod
    def constant(cls, c: float, n: int, name: str | None = None) -> "FunctionOracle":
        def value(x):
            return np.full(x.shape[:-1], float(c))

        def jet(x):
            m = x.shape[:-1]
            return Jet(np.full(m, float(c)), np.zeros(m + (n,)), np.zeros(m + (n, n)))

        return cls(value, jet, name or f"const({c:g})")

    @classmethod
    def affine(cls, a0: float, b, name: str = "affine") -> "FunctionOracle":
        b = np.atleast_1d(np.asarray(b, dtype=float))
        n = b.size
        return cls.quadratic(Jet(float(a0), b, np.zeros((n, n))), name=name)

    def jets(self, points: np.ndarray, use_fd: bool = False, step: float | None = None) -> Jet:
        """Jets at ``points``; finite differences when asked or when no closed form exists."""
        points = np.atleast_2d(np.asarray(points, dtype=float))
        if self.jet is not None and not use_fd:
            return self.jet(points)

        def f(z):
            return float(self(z[None])[0])

        js = [fd_jet(f, x, step) for x in points]
        return Jet.stack(js)


def grid_tolerance(h: float, scale: float = 1.0, length: float = 1.0) -> float:
    """``max(1e-9, C h^2)`` with ``C = scale / length^2`` (a second-derivative scale)."""
    C = abs(float(scale)) / max(float(length), 1e-300) ** 2
    return max(1e-9, C * h * h)


FD_BUDGET = 1e-5


def _point_rows(points, margins, verdicts):
    return [{"x": [float(c) for c in x], "margin": float(m), "verdict": str(v)}
            for x, m, v in zip(points, margins, verdicts)]


def _function_scale(u: FunctionOracle, grid: GridDomain) -> float:
    pts = np.concatenate([grid.points, grid.boundary, grid.excluded])
    return float(np.max(np.abs(u(pts)))) if len(pts) else 1.0


def jet_inclusion_check(S: ConstraintSet, u: FunctionOracle, grid: GridDomain, mode: str = "sub",
                        use_fd: bool = False, gridtol: float | None = None,
                        keep_rows: bool = False) -> VerificationReport:
    """Check ``J_x u`` against ``S`` at every interior grid point.

    Modes: ``sub`` needs margin ``>= -tol``; ``harmonic`` needs
    ``|margin| <= tol``; ``super`` needs the dual margin of ``-J_x u`` to be
    ``>= -tol``. The tolerance is ``gridtol + 1e-9 (1 + ||J||)``, plus the
    finite-difference budget when jets come from finite differences.

    Raises
    ------
    EvaluationError
        When a jet cannot be evaluated at a non-excluded point.
    """
    if mode not in ("sub", "harmonic", "super"):
        raise PreconditionError("mode must be 'sub', 'harmonic' or 'super'")
    pts = grid.points
    if len(pts) == 0:
        raise PreconditionError("grid has no interior points")
    try:
        J = u.jets(pts, use_fd=use_fd)
    except DomainError as exc:
        raise EvaluationError(f"{u.name}: jet evaluation failed at a grid point ({exc})") from exc
    if gridtol is None:
        gridtol = grid_tolerance(grid.h, _function_scale(u, grid), grid.bounding_radius)
    tol = gridtol + 1e-9 * (1 + J.norm())
    if use_fd or u.jet is None:
        tol = tol + FD_BUDGET * (1 + J.norm())
    m = S.margin(J)
    if mode == "sub":
        slack = m + tol
    elif mode == "harmonic":
        slack = tol - np.abs(m)
    else:
        slack = S.dual().margin(-J) + tol
    worst = int(np.argmin(slack))
    passed = bool(slack[worst] >= 0)
    details = {"mode": mode, "set": S.name, "function": u.name, "n_points": int(len(pts)),
               "n_excluded": int(len(grid.excluded)), "gridtol": gridtol,
               "min_margin": float(m.min()), "max_margin": float(m.max()),
               "max_abs_margin": float(np.abs(m).max()), "worst_point": pts[worst].tolist(),
               "jets": "finite differences" if (use_fd or u.jet is None) else "closed form"}
    rows = None
    if keep_rows:
        rows = _point_rows(pts, m, np.where(slack >= 0, "ok", "violation"))
    return VerificationReport(passed, len(pts), float(slack[worst]), None if passed else J[worst],
                              None, details=details, rows=rows)


# radial reductions

@dataclass
class RadialDescriptor:
    """Inequalities in ``(t, psi', psi'')`` for radial functions ``psi(|x|)`` in ``n >= 2``.

    ``combine="all"`` takes the minimum of the terms (conjunction),
    ``"any"`` the maximum (disjunction).
    """

    name: str
    terms: Callable[[np.ndarray, np.ndarray, np.ndarray], list]
    combine: str
    params: dict = field(default_factory=dict)

    def margin(self, t, d1, d2) -> np.ndarray:
        T = np.stack(self.terms(t, d1, d2))
        return T.min(0) if self.combine == "all" else T.max(0)


def radial_descriptor(name: str, **params) -> RadialDescriptor:
    """Named radial reductions.

    ``alpha_F``/``alpha_G``: the sets ``lam_min(B) >= 0`` and
    ``lam_max(B) >= 0`` of the alpha family; ``*_dual`` are their duals.
    ``MR`` and ``MR_dual``: ``lam_min(A) >= |p|/R`` and
    ``lam_max(A) + |p|/R >= 0``.
    """
    if name.startswith("alpha_"):
        alpha = float(params.get("alpha", 2.0))
        if not alpha > 1:
            raise PreconditionError("alpha must exceed 1")
        e = (alpha - 1) / alpha
        sign = -1.0 if name.endswith("_dual") else 1.0

        def terms(t, d1, d2):
            w = np.abs(d1) ** e
            return [d1 / t + sign * w, d2 + sign * alpha * w]

        base = name.removesuffix("_dual")
        if base not in ("alpha_F", "alpha_G"):
            raise PreconditionError(f"unknown radial descriptor {name!r}")
        conj = (base == "alpha_F") != (sign < 0)
        return RadialDescriptor(name, terms, "all" if conj else "any", {"alpha": alpha})
    if name in ("MR", "MR_dual"):
        R = float(params.get("R", 1.0))
        if name == "MR":
            return RadialDescriptor(name, lambda t, d1, d2: [d1 / t - np.abs(d1) / R,
                                                             d2 - np.abs(d1) / R], "all", {"R": R})
        return RadialDescriptor(name, lambda t, d1, d2: [d1 / t + np.abs(d1) / R,
                                                         d2 + np.abs(d1) / R], "any", {"R": R})
    raise PreconditionError(f"unknown radial descriptor {name!r}")


def radial_check(descriptor: RadialDescriptor, profile: RadialProfile, t_grid, mode: str = "sub",
                 tol: float = 1e-9) -> VerificationReport:
    """Evaluate a radial descriptor on ``t_grid``.

    Modes: ``sub`` (margin ``>= -tol``), ``strict`` (margin ``> tol``) and
    ``harmonic`` (every term within ``tol`` of zero).
    """
    t = np.asarray(t_grid, dtype=float)
    if np.any(t <= 0):
        raise PreconditionError("radial grid must lie in t > 0")
    _, d1, d2 = profile.derivatives(t)
    T = np.stack(descriptor.terms(t, d1, d2))
    m = T.min(0) if descriptor.combine == "all" else T.max(0)
    if mode == "sub":
        slack = m + tol
    elif mode == "strict":
        slack = m - tol
    elif mode == "harmonic":
        slack = tol - np.abs(T).max(0)
    else:
        raise PreconditionError("mode must be 'sub', 'strict' or 'harmonic'")
    worst = int(np.argmin(slack))
    passed = bool(slack[worst] >= 0) if mode != "strict" else bool(slack[worst] > 0)
    return VerificationReport(passed, len(t), float(slack[worst]), None, None,
                              details={"descriptor": descriptor.name, "profile": profile.name,
                                       "mode": mode, "t_at_worst": float(t[worst]),
                                       "min_margin": float(m.min()),
                                       "max_abs_term": float(np.abs(T).max())})


# bad test jets

def _shell_points(rng, n: int, radius: float, levels: int, per_shell: int) -> np.ndarray:
    radii = radius * 10.0 ** (-np.arange(levels) / 2)
    if n == 1:
        dirs = np.array([[1.0], [-1.0]])
    else:
        g = rng.standard_normal((per_shell, n))
        dirs = np.concatenate([g / np.linalg.norm(g, axis=1, keepdims=True), np.eye(n), -np.eye(n)])
    return (radii[:, None, None] * dirs[None]).reshape(-1, n)


def bad_test_jet_search(u, x0, radius: float, candidate_budget: int = 2000, seed: int | None = 42,
                        eps: float = 1e-3, levels: int = 17, per_shell: int = 64) -> list[Jet]:
    """Random quadratic upper contact jets ``J`` with ``u - Q_J <= -eps |x - x0|^2``.

    Sample points lie on shells of radii ``radius * 10^(-k/2)``, down to
    ``1e-8 * radius``. Candidates are the flat jet ``(u(x0), 0, 0)``, the
    closed-form or finite-difference jet at ``x0`` plus positive
    semidefinite perturbations, and random jets. Passing all samples makes a
    jet an empirical upper test jet; an empty result is evidence of absence,
    not a proof.
    """
    rng = make_rng(seed)
    x0 = np.atleast_1d(np.asarray(x0, dtype=float))
    n = x0.size
    f = u if callable(u) else None
    if f is None:
        raise PreconditionError("u must be callable")
    u0 = float(f(x0[None])[0])
    offs = _shell_points(rng, n, radius, levels, per_shell)
    vals = f(x0 + offs)
    base = None
    if isinstance(u, FunctionOracle) and u.jet is not None:
        try:
            base = u.jet(x0[None])[0]
        except DomainError:
            base = None
    if base is None:
        try:
            base = fd_jet(lambda z: float(f(z[None])[0]), x0)
        except EvaluationError:
            base = None
    k = max(1, candidate_budget)
    n_pert = k // 2 if base is not None else 0
    n_rand = k - 1 - n_pert
    rs = np.full(k, u0)
    ps = np.zeros((k, n))
    As = np.zeros((k, n, n))
    if n_pert:
        Q = random_orthogonal(rng, n, (n_pert,))
        lam = rng.uniform(0, 1, (n_pert, n)) * 10.0 ** rng.uniform(-2, 2, (n_pert, 1)) / radius
        ps[1:1 + n_pert] = base.p
        As[1:1 + n_pert] = base.A + np.einsum("kij,kj,klj->kil", Q, lam, Q)
    if n_rand > 0:
        sl = slice(1 + n_pert, k)
        ps[sl] = rng.uniform(-1, 1, (n_rand, n)) * 10.0 ** rng.uniform(-2, 1, (n_rand, 1))
        Q = random_orthogonal(rng, n, (n_rand,))
        lam = rng.uniform(-1, 1, (n_rand, n)) * 10.0 ** rng.uniform(-1, 2, (n_rand, 1)) / radius
        As[sl] = np.einsum("kij,kj,klj->kil", Q, lam, Q)
    quad = ps @ offs.T + 0.5 * np.einsum("si,kij,sj->ks", offs, As, offs)
    gap = (vals[None, :] - u0 - quad) + eps * np.sum(offs * offs, axis=1)[None, :]
    ok = np.all(gap <= 1e-15 * (1 + abs(u0)), axis=1)
    return [Jet(rs[i], ps[i], As[i]) for i in np.nonzero(ok)[0]]


# comparison

def comparison_check(S: ConstraintSet, u: FunctionOracle, w: FunctionOracle, grid: GridDomain,
                     boundary: str = "full", gridtol: float | None = None,
                     use_fd: bool = False, keep_rows: bool = False) -> VerificationReport:
    """Grid test of ``u <= w`` on the boundary implying ``u <= w`` inside.

    ``u`` must pass the sub check and ``w`` the super check first. The
    verdict is in ``details["verdict"]``: ``comparison holds``,
    ``comparison fails`` (a witness where ``u > w + 10 gridtol``) or
    ``precondition failed``. ``boundary="parabolic"`` uses only the part of
    a box boundary below the top time face.
    """
    if boundary not in ("full", "parabolic"):
        raise PreconditionError("boundary must be 'full' or 'parabolic'")
    if boundary == "parabolic" and not (grid.kind == "box" and grid.parabolic):
        raise PreconditionError("parabolic comparison needs a box grid built with parabolic=True")
    if gridtol is None:
        scale = max(_function_scale(u, grid), _function_scale(w, grid))
        gridtol = grid_tolerance(grid.h, scale, grid.bounding_radius)
    sub = jet_inclusion_check(S, u, grid, "sub", use_fd=use_fd, gridtol=gridtol)
    sup = jet_inclusion_check(S, w, grid, "super", use_fd=use_fd, gridtol=gridtol)
    bd = grid.active_boundary if boundary == "parabolic" else grid.boundary
    bgap = u(bd) - w(bd)
    details = {"set": S.name, "u": u.name, "w": w.name, "boundary": boundary, "gridtol": gridtol,
               "sub_check": sub.passed, "super_check": sup.passed,
               "max_boundary_gap": float(bgap.max()) if len(bd) else None,
               "n_boundary": int(len(bd))}
    if not sub.passed or not sup.passed or (len(bd) and bgap.max() > gridtol):
        details["verdict"] = "precondition failed"
        details["sub_worst"] = sub.worst_margin
        details["super_worst"] = sup.worst_margin
        return VerificationReport(False, len(grid.points), float("nan"), None, None,
                                  details=details, inconclusive=True)
    pts = np.concatenate([grid.points, grid.excluded])
    gap = u(pts) - w(pts)
    worst = int(np.argmax(gap))
    details["max_interior_gap"] = float(gap[worst])
    details["point_of_max_gap"] = pts[worst].tolist()
    fails = gap[worst] > 10 * gridtol
    details["verdict"] = "comparison fails" if fails else "comparison holds"
    rows = None
    if keep_rows:
        rows = _point_rows(pts, -gap, np.where(gap > 10 * gridtol, "violation", "ok"))
    witness = None
    if fails:
        details["witness_point"] = pts[worst].tolist()
        details["witness_gap"] = float(gap[worst])
    return VerificationReport(not fails, len(pts), float(-gap[worst]), witness, None,
                              details=details, rows=rows)


# strict approximating sequences

def strict_sequence_check(S: ConstraintSet, family: Callable[[float], FunctionOracle],
                          target: FunctionOracle, grid: GridDomain,
                          eps_values=(1e-1, 3e-2, 1e-2, 3e-3, 1e-3)) -> VerificationReport:
    """Each member is strictly ``S``-subharmonic and the sequence converges at rate ``O(eps)``.

    Strictness means the smallest grid margin ``delta(eps)`` is positive.
    The rate is the least-squares slope of ``log sup|u_eps - target|``
    against ``log eps``; it must be at least 0.9.
    """
    pts_all = np.concatenate([grid.points, grid.boundary, grid.excluded])
    tv = target(pts_all)
    deltas, gaps = [], []
    worst_pt = None
    for e in eps_values:
        ue = family(float(e))
        m = S.margin(ue.jets(grid.points))
        i = int(np.argmin(m))
        deltas.append(float(m[i]))
        if m[i] <= 0 and worst_pt is None:
            worst_pt = (float(e), grid.points[i].tolist())
        gaps.append(float(np.max(np.abs(ue(pts_all) - tv))))
    slope = float(np.polyfit(np.log(eps_values), np.log(gaps), 1)[0])
    strict = all(d > 0 for d in deltas)
    passed = strict and slope >= 0.9
    details = {"set": S.name, "target": target.name, "eps": list(map(float, eps_values)),
               "delta": deltas, "sup_gap": gaps, "rate": slope, "strict": strict}
    if worst_pt is not None:
        details["strictness_violation"] = {"eps": worst_pt[0], "point": worst_pt[1]}
    return VerificationReport(passed, len(eps_values) * len(grid.points), min(deltas), None, None,
                              details=details)


# constraint sets used by scenarios

def alpha_family_set(n: int, alpha: float, which: str = "F") -> ConstraintSet:
    from .operators import catalog

    spec = catalog(f"alpha_family_{which}", n, alpha=alpha)
    return ConstraintSet(spec.pair.operator, n, name=f"alpha-family {which} (alpha={alpha:g})",
                         monotone_cone=spec.claimed_cone, reduced_axes=("r",))


def dual_MR_set(n: int, R: float) -> ConstraintSet:
    from .cones import cone_R

    M = cone_R(n, R)
    return ConstraintSet.from_cone(M).dual()


# scenarios

def scenario_zmp_failure(R: float = 1.0, Rprime: float = 1.5, n: int = 2, h: float = 0.01,
                         keep_rows: bool = False, seed: int | None = 42) -> VerificationReport:
    """The profile ``t - t^2/(2R)`` on ``B_R'``: dual-``M(R)`` subharmonic with an interior max when ``R' > R``.

    Raises
    ------
    ResolutionError
        When ``2h >= |R' - R|``, so the maximum cannot be told apart from
        the boundary.
    """
    if n < 2:
        raise PreconditionError("needs n >= 2")
    if not (R > 0 and Rprime > 0 and h > 0):
        raise PreconditionError("R, R' and h must be positive")
    if Rprime > R and 2 * h >= Rprime - R:
        raise ResolutionError("grid too coarse to place the maximum away from the boundary")
    grid = GridDomain.ball(np.zeros(n), Rprime, h, exclude_radius=2 * h)
    prof = RadialProfile(lambda t: t - t * t / (2 * R), lambda t: 1 - t / R,
                         lambda t: np.full_like(t, -1.0 / R), name=f"t-t^2/(2*{R:g})")
    u = FunctionOracle.radial(prof, name="u")
    S = dual_MR_set(n, R)
    sub = jet_inclusion_check(S, u, grid, "sub", gridtol=1e-9, keep_rows=keep_rows)
    pts = np.concatenate([grid.points, grid.excluded, grid.boundary])
    vals = u(pts)
    i = int(np.argmax(vals))
    rad = float(np.linalg.norm(pts[i]))
    bmax = float(u(grid.boundary).max())
    interior_max = rad < Rprime - h and vals[i] > bmax + 1e-12
    origin = bad_test_jet_search(u, np.zeros(n), min(R, Rprime) / 2, seed=seed)
    details = {"anchor": "zero maximum principle fails for the dual of M(R) on balls of radius "
                         "R' > R; radial profile t - t^2/(2R)",
               "params": {"R": R, "Rprime": Rprime, "n": n, "h": h},
               "expected": "interior maximum R/2 at |x| = R" if Rprime > R else
                           "maximum on the boundary",
               "max_value": float(vals[i]), "argmax_radius": rad, "boundary_max": bmax,
               "min_interior_margin": sub.details["min_margin"], "sub_check": sub.passed,
               "origin_test_jets_found": len(origin),
               "origin": "consistent with no upper test jets" if not origin else
                         "upper test jets found at the origin",
               "grid": grid.describe()}
    if Rprime > R:
        reproduced = sub.passed and interior_max
        details["verdict"] = "maximum principle fails" if reproduced else "not reproduced"
    else:
        reproduced = sub.passed and not interior_max
        details["verdict"] = "no violation"
    return VerificationReport(reproduced, len(pts), sub.worst_margin, sub.witness, seed,
                              details=details, rows=sub.rows)


def _small_ball_functions(alpha: float, R: float):
    c = R ** (1 + alpha) / (1 + alpha)
    prof = power_profile(1 + alpha, scale=-1.0 / (1 + alpha), shift=c)
    base = FunctionOracle.radial(prof, name="h")

    def jet(x):
        t = np.linalg.norm(x, axis=-1)
        J = radial_jet(prof, np.where(t[..., None] > 0, x, 1.0), None)
        at0 = t == 0
        if np.any(at0):
            J = Jet(np.where(at0, c, J.r), np.where(at0[..., None], 0.0, J.p),
                    np.where(at0[..., None, None], 0.0, J.A))
        return J

    h_fun = FunctionOracle(base.value, jet, "h")
    return h_fun, c


def scenario_small_ball_failure(alpha: float = 2.0, R: float = 0.1, n: int = 2,
                                h: float | None = None, keep_rows: bool = False,
                                seed: int | None = 42) -> VerificationReport:
    """``z = 0`` and ``h = (R^(1+a) - |x|^(1+a)) / (1+a)`` are both F- and G-harmonic on ``B_R``.

    Both vanish on the sphere, so comparison, uniqueness and the maximum
    principle fail on this ball however small ``R`` is.
    """
    if not alpha > 1:
        raise PreconditionError("the alpha family needs alpha > 1")
    if n < 1 or R <= 0:
        raise PreconditionError("need n >= 1 and R > 0")
    h = R / 100 if h is None else float(h)
    if h >= R / 4:
        raise ResolutionError("grid too coarse for the ball")
    grid = GridDomain.ball(np.zeros(n), R, h, exclude_radius=2 * h)
    hf, c = _small_ball_functions(alpha, R)
    z = FunctionOracle.constant(0.0, n, "z")
    F = alpha_family_set(n, alpha, "F")
    G = alpha_family_set(n, alpha, "G")
    harm = {}
    residual = 0.0
    for fname, f in (("z", z), ("h", hf)):
        for sname, S in (("F", F), ("G", G)):
            rep = jet_inclusion_check(S, f, grid, "harmonic", gridtol=1e-9)
            harm[f"{fname}_{sname}"] = rep.passed
            residual = max(residual, rep.details["max_abs_margin"])
    bvals = hf(grid.boundary)
    comp = comparison_check(F, hf, z, grid, gridtol=1e-9, keep_rows=keep_rows)
    origin = bad_test_jet_search(hf, np.zeros(n), R / 2, seed=seed)
    expected_gap = R ** (1 + alpha) / (2 * (1 + alpha))
    reproduced = (all(harm.values()) and comp.details["verdict"] == "comparison fails"
                  and comp.details["max_interior_gap"] >= expected_gap)
    details = {"anchor": "comparison fails on arbitrarily small balls for the alpha family; "
                         "z = 0 and h are two harmonics with zero boundary values",
               "params": {"alpha": alpha, "R": R, "n": n, "h": h},
               "expected": "two distinct harmonics with identical boundary data",
               "harmonic_checks": harm, "max_harmonic_residual": residual,
               "max_boundary_abs_h": float(np.abs(bvals).max()),
               "h_at_center": c, "comparison": comp.details,
               "required_gap": expected_gap,
               "origin_test_jets_found": len(origin), "grid": grid.describe(),
               "verdict": "comparison fails" if reproduced else "not reproduced"}
    return VerificationReport(reproduced, len(grid.points), -residual, None, seed, details=details,
                              rows=comp.rows)


def _q_dual_margin(J: Jet) -> np.ndarray:
    """Margin of the dual of ``N x P`` (gradient free): ``r <= 0`` or ``lam_max(A) >= 0``."""
    return np.maximum(-J.r, sym_eigs(J.A)[..., -1])


def scenario_subaffine_plus(n: int = 2, samples: int = 200, points_per_function: int = 50,
                            seed: int | None = 42, keep_rows: bool = False) -> VerificationReport:
    """Positive part characterization, sampled on quadratics, plus the affine counterexample.

    (i) For random quadratics ``u`` and points ``x0`` away from ``u = 0``,
    the dual-``(N x P)`` jet condition on ``u`` agrees with the subaffine
    jet condition ``lam_max >= 0`` on finite-difference jets of ``u^+``.
    (ii) In one dimension ``u(x) = x`` and ``a(x) = 2(x - 1)`` on ``(0, 2)``
    have ``u = a^+`` on the boundary while ``u(1) = 1 > 0 = a^+(1)``.
    """
    rng = make_rng(seed)
    agree = tested = skipped = 0
    mismatch = None
    rows = [] if keep_rows else None
    for _ in range(samples):
        J = Jet(rng.uniform(-1, 1), rng.uniform(-1, 1, n),
                (lambda B: 0.5 * (B + B.T))(rng.uniform(-1, 1, (n, n))))
        u = FunctionOracle.quadratic(J)
        uplus = FunctionOracle(lambda x, u=u: np.maximum(u(x), 0.0), None, "u+")
        xs = rng.uniform(-1, 1, (points_per_function, n))
        Ju = u.jets(xs)
        for x, jr, jA in zip(xs, Ju.r, Ju.A):
            lam = sym_eigs(jA)[-1]
            if abs(jr) < 1e-2 or abs(lam) < 1e-3:
                skipped += 1
                continue
            q_ok = bool(_q_dual_margin(Jet(jr, np.zeros(n), jA)) >= 0)
            Jp = uplus.jets(x[None], use_fd=True)[0]
            sa_ok = bool(sym_eigs(Jp.A)[-1] >= -FD_BUDGET * (1 + Jp.norm()))
            tested += 1
            if q_ok == sa_ok:
                agree += 1
            elif mismatch is None:
                mismatch = {"x": x.tolist(), "jet": Jet(jr, np.zeros(n), jA).to_dict()}
            if rows is not None:
                rows.append({"x": x.tolist(),
                             "margin": float(_q_dual_margin(Jet(jr, np.zeros(n), jA))),
                             "verdict": "agree" if q_ok == sa_ok else "disagree"})
    # counterexample on a one-dimensional grid
    xs = np.linspace(0.0, 2.0, 201)
    u1 = xs
    a_plus = np.maximum(2 * (xs - 1), 0.0)
    boundary_equal = bool(u1[0] == a_plus[0] and u1[-1] == a_plus[-1])
    mid = int(np.argmin(np.abs(xs - 1.0)))
    counter = {"u(1)": float(u1[mid]), "a+(1)": float(a_plus[mid]),
               "boundary_equal": boundary_equal,
               "max_interior_excess": float(np.max(u1[1:-1] - a_plus[1:-1]))}
    # affine-plus comparisons for the affine u, which is subaffine plus
    ap_ok = True
    for _ in range(50):
        b0, b1 = rng.uniform(-1, 3), rng.uniform(-1, 1)
        alpha_v = b0 + b1 * xs
        if alpha_v.min() < 0:
            continue
        if u1[0] <= alpha_v[0] and u1[-1] <= alpha_v[-1]:
            ap_ok &= bool(np.all(u1 <= alpha_v + 1e-12))
    counter_ok = boundary_equal and counter["u(1)"] == 1.0 and counter["a+(1)"] == 0.0
    passed = agree == tested and tested > 0 and counter_ok and ap_ok
    details = {"anchor": "subaffine plus characterization of the dual of N x P and the affine "
                         "counterexample to comparison against positive parts of affine functions",
               "params": {"n": n, "samples": samples}, "tested_points": tested,
               "agreeing_points": agree, "skipped_near_kinks": skipped,
               "counterexample": counter, "affine_plus_property": ap_ok,
               "verdict": "reproduced" if passed else "not reproduced"}
    if mismatch is not None:
        details["mismatch"] = mismatch
    return VerificationReport(passed, tested, float(agree - tested), None, seed, details=details,
                              rows=rows)


def scenario_comparison_convex(n: int = 2, h: float = 0.05, keep_rows: bool = False,
                               seed: int | None = 42) -> VerificationReport:
    """Convex ``u = (|x|^2 - 1)/2`` against ``w = 0`` on the unit ball: comparison holds."""
    from .cones import cone_P

    grid = GridDomain.ball(np.zeros(n), 1.0, h)
    S = ConstraintSet.from_cone(cone_P(n))
    u = FunctionOracle.quadratic(Jet(-0.5, np.zeros(n), np.eye(n)), name="(|x|^2-1)/2")
    w = FunctionOracle.constant(0.0, n, "0")
    rep = comparison_check(S, u, w, grid, keep_rows=keep_rows)
    rep.seed = seed
    rep.details["anchor"] = "comparison for the convex cone P on the unit ball"
    rep.details["expected"] = "comparison holds"
    rep.details["params"] = {"n": n, "h": h}
    return rep


def scenario_comparison_fkr(n: int = 2, k: int | None = None, R: float = 1.0, Rprime: float = 1.5,
                            h: float = 0.02, keep_rows: bool = False,
                            seed: int | None = 42) -> VerificationReport:
    """``lam_k(A) + |p|/R >= 0`` with ``k >= 2`` on ``B_R'``: comparison fails.

    ``u`` is the profile ``t - t^2/(2R)`` and ``w`` the constant equal to the
    boundary maximum of ``u``.
    """
    from .operators import catalog

    k = n if k is None else int(k)
    if not 2 <= k <= n:
        raise PreconditionError("needs 2 <= k <= n")
    if not Rprime > R:
        raise PreconditionError("needs R' > R")
    spec = catalog("eigen_gradient_plus", n, k=k, R=R)
    S = ConstraintSet(spec.pair.operator, n, name=f"lam_{k} + |p|/{R:g} >= 0",
                      monotone_cone=spec.claimed_cone)
    grid = GridDomain.ball(np.zeros(n), Rprime, h, exclude_radius=2 * h)
    prof = RadialProfile(lambda t: t - t * t / (2 * R), lambda t: 1 - t / R,
                         lambda t: np.full_like(t, -1.0 / R), name=f"t-t^2/(2*{R:g})")
    u = FunctionOracle.radial(prof, name="u")
    w = FunctionOracle.constant(float(u(grid.boundary).max()), n, "boundary max of u")
    rep = comparison_check(S, u, w, grid, keep_rows=keep_rows)
    rep.seed = seed
    rep.details["anchor"] = ("maximum principle failure transfers to lam_k(A) + |p|/R >= 0 for "
                             "k >= 2 on balls of radius R' > R")
    rep.details["expected"] = "comparison fails"
    rep.details["params"] = {"n": n, "k": k, "R": R, "Rprime": Rprime, "h": h}
    return rep


def scenario_parabolic_heat(h: float = 0.05, keep_rows: bool = False,
                            seed: int | None = 42) -> VerificationReport:
    """Heat operator ``u_xx - u_t`` on ``[-1, 1] x [0, 1]`` with the parabolic boundary.

    ``u = x^2/2 + t - 2`` and ``w = u + 1/10 + t/20`` are sub and super
    solutions ordered on the parabolic boundary; comparison holds.
    """
    from .operators import catalog

    spec = catalog("parabolic_heat", 2)
    S = ConstraintSet(spec.pair.operator, 2, name="u_xx - u_t >= 0",
                      monotone_cone=spec.claimed_cone)
    grid = GridDomain.box([-1.0, 0.0], [1.0, 1.0], h, parabolic=True)
    base = Jet(-2.0, np.array([0.0, 1.0]), np.diag([1.0, 0.0]))
    u = FunctionOracle.quadratic(base, name="x^2/2 + t - 2")
    w = FunctionOracle.quadratic(Jet(-1.9, np.array([0.0, 1.05]), np.diag([1.0, 0.0])),
                                 name="x^2/2 + 1.05 t - 1.9")
    rep = comparison_check(S, u, w, grid, boundary="parabolic", keep_rows=keep_rows)
    rep.seed = seed
    rep.details["anchor"] = "parabolic comparison uses only the boundary below the top time face"
    rep.details["expected"] = "comparison holds"
    rep.details["params"] = {"h": h}
    return rep


def strict_family(name: str, alpha: float = 2.0, n: int = 2):
    """``(S, family, target)`` for the named strict approximating sequences.

    ``z_eps``: ``eps |x|^2 / 2`` for the F set, target ``0``.
    ``psi_eps``: ``(1+eps)(|x|+eps)^(1+a)/(1+a)`` for the dual of the G
    set, target ``|x|^(1+a)/(1+a)``.
    """
    if name == "z_eps":
        S = alpha_family_set(n, alpha, "F")

        def family(e):
            return FunctionOracle.quadratic(Jet(0.0, np.zeros(n), e * np.eye(n)), name=f"z_{e:g}")

        return S, family, FunctionOracle.constant(0.0, n, "z")
    if name == "psi_eps":
        S = alpha_family_set(n, alpha, "G").dual()
        a1 = 1 + alpha

        def family(e):
            prof = RadialProfile(lambda t: (1 + e) * (t + e) ** a1 / a1,
                                 lambda t: (1 + e) * (t + e) ** alpha,
                                 lambda t: (1 + e) * alpha * (t + e) ** (alpha - 1),
                                 name=f"psi_{e:g}")
            return FunctionOracle.radial(prof)

        return S, family, FunctionOracle.radial(power_profile(a1, 1 / a1), name="|x|^(1+a)/(1+a)")
    raise PreconditionError(f"unknown strict family {name!r}; use 'z_eps' or 'psi_eps'")


def scenario_strict_sequences(alpha: float = 2.0, R: float = 0.1, n: int = 2, h: float | None = None,
                              seed: int | None = 42, keep_rows: bool = False) -> VerificationReport:
    """Both strict approximating sequences of the small-ball extremals on ``B_R``."""
    h = R / 50 if h is None else float(h)
    grid = GridDomain.ball(np.zeros(n), R, h, exclude_radius=2 * h)
    out = {}
    passed = True
    worst = np.inf
    for name in ("z_eps", "psi_eps"):
        S, fam, target = strict_family(name, alpha, n)
        rep = strict_sequence_check(S, fam, target, grid)
        out[name] = rep.details
        passed &= rep.passed
        worst = min(worst, rep.worst_margin)
    details = {"anchor": "strict approximating sequences for the two small-ball extremals",
               "params": {"alpha": alpha, "R": R, "n": n, "h": h}, "sequences": out,
               "verdict": "reproduced" if passed else "not reproduced"}
    return VerificationReport(passed, len(grid.points), worst, None, seed, details=details)


@dataclass(frozen=True)
class Scenario:
    """Registry entry: runner, anchor statement, default parameters and expected verdict."""

    run: Callable[..., VerificationReport]
    anchor: str
    defaults: dict
    expected: str


SCENARIOS: dict[str, Scenario] = {
    "zmp-failure": Scenario(scenario_zmp_failure,
                            "zero maximum principle fails for the dual of M(R) on large balls",
                            {"R": 1.0, "Rprime": 1.5, "n": 2, "h": 0.01},
                            "maximum principle fails"),
    "small-ball-failure": Scenario(scenario_small_ball_failure,
                                   "comparison fails on small balls for the alpha family",
                                   {"alpha": 2.0, "R": 0.1, "n": 2, "h": None},
                                   "comparison fails"),
    "subaffine-plus": Scenario(scenario_subaffine_plus,
                               "subaffine plus characterization and its affine counterexample",
                               {"n": 2, "samples": 200}, "reproduced"),
    "comparison-convex": Scenario(scenario_comparison_convex,
                                  "comparison for the convex cone on the unit ball",
                                  {"n": 2, "h": 0.05}, "comparison holds"),
    "comparison-fkr": Scenario(scenario_comparison_fkr,
                               "comparison fails for lam_k + |p|/R with k >= 2 on large balls",
                               {"n": 2, "k": None, "R": 1.0, "Rprime": 1.5, "h": 0.02},
                               "comparison fails"),
    "parabolic-heat": Scenario(scenario_parabolic_heat,
                               "parabolic comparison for the heat operator",
                               {"h": 0.05}, "comparison holds"),
    "strict-sequences": Scenario(scenario_strict_sequences,
                                 "strict approximating sequences for the small-ball extremals",
                                 {"alpha": 2.0, "R": 0.1, "n": 2, "h": None}, "reproduced"),
}


def run_scenario(name: str, seed: int | None = 42, keep_rows: bool = False,
                 **params) -> VerificationReport:
    """Run a registered scenario; the report gains ``scenario``, ``expected`` and ``reproduced``."""
    if name not in SCENARIOS:
        raise PreconditionError(f"unknown scenario {name!r}; known: {', '.join(SCENARIOS)}")
    sc = SCENARIOS[name]
    unknown = set(params) - set(sc.defaults)
    if unknown:
        raise PreconditionError(f"unknown parameters for {name}: {sorted(unknown)}")
    kw = {**sc.defaults, **{k: v for k, v in params.items() if v is not None}}
    rep = sc.run(seed=seed, keep_rows=keep_rows, **kw)
    rep.seed = seed
    rep.details.setdefault("anchor", sc.anchor)
    rep.details["scenario"] = name
    rep.details["expected"] = sc.expected
    rep.details["reproduced"] = rep.details.get("verdict") == sc.expected
    return rep
