"""Constraint sets as signed margins, Dirichlet duality and sampled structure checks.

A constraint set is ``F = {margin >= 0}`` for a batch-aware margin function
on jets. Its Dirichlet dual ``F~ = ~(-Int F)`` has margin ``-margin(-J)``.
"""
from __future__ import annotations

import warnings
from dataclasses import dataclass, field
from typing import Callable

import numpy as np

from .errors import LevelError, PreconditionError, StructureError
from .jets import Jet, identity_jet, make_rng, random_jets
from .report import VerificationReport

Margin = Callable[[Jet], np.ndarray]


class ConstraintSet:
    """A subequation ``F = {margin >= 0}``.

    Parameters
    ----------
    margin : callable
        Batch-aware map from jets to signed margins. Its zero set should be
        the topological boundary of ``F``.
    n : int
    name : str
    monotone_cone : MonotonicityCone, optional
        A claimed monotonicity cone.
    reduced_axes : tuple of str
        Jet slots the set ignores, among ``"r"``, ``"p"``, ``"A"``.
    tame : bool, optional
        False for sets wrapped from Boolean predicates.
    """

    def __init__(self, margin: Margin, n: int, name: str = "F", monotone_cone=None,
                 reduced_axes: tuple = (), tame: bool | None = True):
        self._margin = margin
        self.n = int(n)
        self.name = name
        self.monotone_cone = monotone_cone
        self.reduced_axes = tuple(reduced_axes)
        self.tame = tame
        self.warnings: list[str] = []
        self._dual: ConstraintSet | None = None

    @classmethod
    def from_predicate(cls, predicate: Callable[[Jet], np.ndarray], n: int, name: str = "F",
                       **kw) -> "ConstraintSet":
        """Wrap a Boolean membership test with margin ``+1 / -1``; marked non-tame."""
        def margin(J):
            return np.where(predicate(J), 1.0, -1.0)

        return cls(margin, n, name=name, tame=False, **kw)

    @classmethod
    def from_cone(cls, M) -> "ConstraintSet":
        """A monotonicity cone viewed as a subequation."""
        return cls(M.margin, M.n, name=M.describe(), monotone_cone=M)

    def __call__(self, J: Jet) -> np.ndarray:
        return self.margin(J)

    def margin(self, J: Jet) -> np.ndarray:
        if J.n != self.n:
            raise PreconditionError(f"{self.name}: expected jets with n={self.n}")
        return np.asarray(self._margin(J), dtype=float)

    def member(self, J: Jet, tol=None) -> np.ndarray:
        return self.margin(J) >= -(J.tolerance() if tol is None else tol)

    def interior(self, J: Jet, tol=None) -> np.ndarray:
        return self.margin(J) > (J.tolerance() if tol is None else tol)

    def dual(self) -> "ConstraintSet":
        """Dirichlet dual; the dual of the dual is the original object."""
        if self._dual is None:
            d = ConstraintSet(lambda J: -self.margin(-J), self.n, name=f"dual({self.name})",
                              monotone_cone=self.monotone_cone, reduced_axes=self.reduced_axes,
                              tame=self.tame)
            d._dual = self
            if self.tame is False:
                d.warnings.append("margin is not tame; the dual is only reliable on interiors")
            self._dual = d
        return self._dual

    def shifted(self, J: Jet) -> "ConstraintSet":
        """The translate ``F + J``."""
        return ConstraintSet(lambda K: self.margin(K - J), self.n, name=f"{self.name}+J",
                             monotone_cone=self.monotone_cone, reduced_axes=self.reduced_axes,
                             tame=self.tame)

    def __repr__(self) -> str:
        return f"<ConstraintSet {self.name} n={self.n}>"


def dual_margin(S: ConstraintSet) -> ConstraintSet:
    """The Dirichlet dual of ``S``; warns when ``S`` is not tame."""
    d = S.dual()
    if S.tame is False:
        warnings.warn(f"{S.name}: dual of a non-tame margin", RuntimeWarning, stacklevel=2)
    return d


@dataclass(frozen=True)
class Interval:
    """A real interval with open or closed ends (infinite ends are open).

    ``approximate`` marks intervals estimated from samples.
    """

    lo: float = -np.inf
    hi: float = np.inf
    lo_closed: bool = False
    hi_closed: bool = False
    approximate: bool = False

    def contains(self, c: float) -> bool:
        c = float(c)
        above = c >= self.lo if self.lo_closed else c > self.lo
        below = c <= self.hi if self.hi_closed else c < self.hi
        return bool(above and below)

    def to_dict(self) -> dict:
        return {"lo": self.lo, "hi": self.hi, "lo_closed": self.lo_closed,
                "hi_closed": self.hi_closed, "approximate": self.approximate}

    def __str__(self) -> str:
        return f"{'[' if self.lo_closed else '('}{self.lo:g}, {self.hi:g}{']' if self.hi_closed else ')'}"


@dataclass
class CompatiblePair:
    """An operator with its constraint set and admissible levels.

    ``operator`` must be batch-aware and defined on all jets (it is only
    meaningful on the constraint). ``constraint=None`` marks the
    unconstrained case, where ``c0 = -inf``.
    """

    operator: Callable[[Jet], np.ndarray]
    constraint: ConstraintSet | None
    c0: float
    levels: Interval
    n: int
    name: str = "F"
    cone: object = None
    J0: Jet | None = None
    degree: float = 1.0

    @property
    def constrained(self) -> bool:
        return self.constraint is not None

    def __call__(self, J: Jet) -> np.ndarray:
        return np.asarray(self.operator(J), dtype=float)


def level_set(P: CompatiblePair, c: float) -> ConstraintSet:
    """``F_c = {J in F: F(J) >= c}`` as a constraint set.

    Raises
    ------
    LevelError
        If ``c`` is not an admissible level.
    """
    if not P.levels.contains(c):
        raise LevelError(f"level {c:g} outside the admissible levels {P.levels} of {P.name}")
    c = float(c)
    if P.constrained:
        S = P.constraint

        def margin(J):
            return np.minimum(S.margin(J), P(J) - c)
    else:
        def margin(J):
            return P(J) - c

    return ConstraintSet(margin, P.n, name=f"{P.name}>={c:g}", monotone_cone=P.cone)


# ray solving

def ray_bracket(margin: Margin, J: Jet, J0: Jet, max_doublings: int = 60):
    """Bracket the crossing of ``{margin >= 0}`` along ``J + t J0``.

    Returns ``(lo, hi, ok)`` with ``margin(J + hi J0) >= 0`` and
    ``margin(J + lo J0) < 0`` wherever ``ok``. Starting brackets are
    ``[-1, 1]``, doubled up to ``2**max_doublings``.
    """
    batch = J.batch_shape

    def m_at(t):
        return margin(J + J0 * t) if batch else margin(J + J0 * float(t))

    at0 = np.asarray(m_at(np.zeros(batch))) >= 0
    hi = np.where(at0, 0.0, 1.0)
    lo = np.where(at0, -1.0, 0.0)
    ok_hi = at0.copy()
    ok_lo = ~at0
    for _ in range(max_doublings + 1):
        if np.all(ok_hi):
            break
        good = np.asarray(m_at(hi)) >= 0
        step = ~ok_hi & ~good
        ok_hi |= good
        lo = np.where(step, hi, lo)
        hi = np.where(step, 2 * hi, hi)
    for _ in range(max_doublings + 1):
        if np.all(ok_lo):
            break
        bad = np.asarray(m_at(lo)) < 0
        step = ~ok_lo & ~bad
        ok_lo |= bad
        hi = np.where(step, lo, hi)
        lo = np.where(step, 2 * lo, lo)
    return lo, hi, ok_hi & ok_lo


def ray_solve(margin: Margin, J: Jet, J0: Jet, rel_tol: float = 1e-13, max_iter: int = 400,
              max_doublings: int = 60):
    """Crossing parameter ``t`` with ``J + t J0`` on the boundary of ``{margin >= 0}``.

    Bisection stops when the bracket is shorter than
    ``rel_tol * (1 + ||J||) / ||J0||``. Returns ``(t, t_feasible, iterations,
    ok)``: the bracket midpoint, the end with nonnegative margin, the number
    of bisection steps and a mask of rays that crossed.
    """
    lo, hi, ok = ray_bracket(margin, J, J0, max_doublings)
    batch = J.batch_shape
    width = rel_tol * (1 + J.norm()) / float(J0.norm())
    its = 0
    for its in range(1, max_iter + 1):
        active = ok & (hi - lo > width)
        if not np.any(active):
            break
        mid = 0.5 * (lo + hi)
        good = np.asarray(margin(J + J0 * mid) if batch else margin(J + J0 * float(mid))) >= 0
        hi = np.where(active & good, mid, hi)
        lo = np.where(active & ~good, mid, lo)
    return 0.5 * (lo + hi), hi, its, ok


def project_to_boundary(S, J: Jet, J0: Jet | None = None) -> tuple[Jet, np.ndarray]:
    """Move each jet along ``J0`` (default ``(-1, 0, I)``) onto the boundary of ``S``.

    Returns the projected jets (feasible side) and a mask of rays that crossed.
    """
    J0 = identity_jet(J.n, r=-1.0) if J0 is None else J0
    _, t, _, ok = ray_solve(S.margin if hasattr(S, "margin") else S, J, J0)
    t = np.where(ok, t, 0.0)
    return J + J0 * t, ok


def sample_members(S: ConstraintSet, rng, count: int, budget: int = 100_000,
                   boundary: float = 0.5, J0: Jet | None = None) -> tuple[Jet | None, int]:
    """Members of ``S``: rejection samples mixed with boundary projections.

    Returns ``(jets, draws)``; ``jets`` is None when nothing was found.
    """
    n = S.n
    n_bd = int(round(boundary * count))
    found = []
    draws = 0
    if n_bd:
        raw = random_jets(rng, n, n_bd)
        draws += n_bd
        proj, ok = project_to_boundary(S, raw, J0)
        if np.any(ok):
            proj = proj[np.nonzero(ok)[0]]
            found.append(proj[np.nonzero(S.margin(proj) >= 0)[0]])
    need = count - sum(len(f) for f in found)
    chunk = max(1000, need)
    while need > 0 and draws < budget:
        m = min(chunk, budget - draws)
        raw = random_jets(rng, n, m)
        draws += m
        keep = np.nonzero(S.margin(raw) >= 0)[0][:need]
        if keep.size:
            found.append(raw[keep])
            need -= keep.size
    found = [f for f in found if len(f)]
    if not found:
        return None, draws
    return Jet(np.concatenate([f.r for f in found]), np.concatenate([f.p for f in found]),
               np.concatenate([f.A for f in found])), draws


def _minimal_hessian(M, J: Jet) -> Jet:
    """Replace the Hessian slot by the smallest multiple of ``I`` keeping ``J`` in ``M``."""
    from .cones import _bisect_threshold

    n = J.n
    eye = np.eye(n)
    size = J.batch_shape[0]
    scale = 1.0 + J.norm()
    c = _bisect_threshold(lambda c: M.margin(Jet(J.r, J.p, c[:, None, None] * eye)),
                          -scale, 4 * scale, increasing=True, iters=100)
    c = np.where(np.isneginf(c), 0.0, c)
    keep = np.isfinite(c)
    c = np.where(keep, c, 0.0)
    out = Jet(J.r, J.p, np.where(keep[:, None, None], c[:, None, None] * eye, J.A))
    return out


def monotonicity_check(S: ConstraintSet, M, n_samples: int = 10_000, seed: int | None = 42,
                       operator: Callable | None = None, budget: int = 100_000,
                       guided: float = 1 / 3) -> VerificationReport:
    """Sampled test of ``F + M ⊂ F`` (and ``F(J + J') >= F(J)`` for an operator).

    Pairs ``(J, J')`` come from three sources: members of ``F`` (rejection
    and boundary projection) against cone samples, and guided pairs in which
    ``J'`` has the smallest feasible Hessian ``cI`` and ``J`` is a boundary
    jet whose gradient is ``-2`` times that of ``J'``. The guided pairs make
    ``J + J'`` have gradient antiparallel to ``J'``, which is where cones
    that are too large fail.
    """
    rng = make_rng(seed)
    n = S.n
    n_guided = int(round(guided * n_samples))
    members, draws = sample_members(S, rng, n_samples - n_guided, budget)
    if members is None:
        return VerificationReport(False, 0, float("nan"), None, seed, inconclusive=True,
                                  details={"reason": "no members of the set were found",
                                           "draws": draws})
    cone = M.sample(rng, len(members))
    Js = [members]
    Jps = [cone]
    if n_guided:
        Jp = _minimal_hessian(M, M.sample(rng, n_guided))
        raw = random_jets(rng, n, n_guided)
        raw = Jet(raw.r, -2.0 * Jp.p, raw.A)
        proj, ok = project_to_boundary(S, raw)
        idx = np.nonzero(ok & (S.margin(proj) >= 0))[0]
        if idx.size:
            Js.append(proj[idx])
            Jps.append(Jp[idx])
    J = Jet(np.concatenate([x.r for x in Js]), np.concatenate([x.p for x in Js]),
            np.concatenate([x.A for x in Js]))
    Jp = Jet(np.concatenate([x.r for x in Jps]), np.concatenate([x.p for x in Jps]),
             np.concatenate([x.A for x in Jps]))
    total = J + Jp
    marg = S.margin(total)
    tol = total.tolerance()
    slack = marg + tol
    if operator is not None:
        inc = np.asarray(operator(total)) - np.asarray(operator(J))
        slack = np.minimum(slack, inc + 1e-9 * (1 + np.abs(np.asarray(operator(J)))))
    worst = int(np.argmin(slack))
    passed = bool(slack[worst] >= 0)
    details = {"set": S.name, "cone": M.describe(), "guided_pairs": len(J) - len(members),
               "draws": draws, "worst_sum_margin": float(marg[worst])}
    if not passed:
        details["witness_cone_jet"] = Jp[worst].to_dict()
        details["witness_sum"] = total[worst].to_dict()
    return VerificationReport(passed, len(J), float(slack[worst]), None if passed else J[worst],
                              seed, details=details)


def tameness_check(P: CompatiblePair, J0: Jet, samples: int = 1000, seed: int | None = 42,
                   t_range: tuple = (1e-3, 10.0)) -> VerificationReport:
    """Sampled strict increase ``F(J + t J0) > F(J)`` for ``J`` in the constraint."""
    rng = make_rng(seed)
    if P.constrained:
        J, _ = sample_members(P.constraint, rng, samples)
        if J is None:
            return VerificationReport(False, 0, float("nan"), None, seed, inconclusive=True,
                                      details={"reason": "no constraint members found"})
    else:
        J = random_jets(rng, P.n, samples)
    t = rng.uniform(t_range[0], t_range[1], len(J))
    inc = P(J + J0 * t) - P(J)
    worst = int(np.argmin(inc))
    passed = bool(inc[worst] > 0)
    return VerificationReport(passed, len(J), float(inc[worst]), None if passed else J[worst], seed,
                              details={"pair": P.name, "min_increase": float(inc[worst]),
                                       "t_at_worst": float(t[worst]),
                                       "min_increase_over_t": float(np.min(inc / t))})


def compatibility_check(P: CompatiblePair, samples: int = 5000, seed: int | None = 42,
                        floor: float = -1e6, scales=(1.0, 1e2, 1e4, 1e6, 1e8),
                        level_rtol: float = 1e-6) -> VerificationReport:
    """Sampled test that ``c0 = inf_F F`` is finite and ``boundary F = {F = c0}``.

    Steps: estimate the infimum over members, their positive multiples and
    their translates along the constraint's monotonicity cone and along the
    value and gradient axes (flagged
    divergent below ``floor``; values get a roundoff allowance of
    ``1e-14 (1 + ||J||)^degree``); check ``F ≈ c0`` on boundary
    projections; walk from members along ``-J0`` to the first point where
    ``min(margin, F - c0)`` vanishes and check that both terms vanish there.
    """
    if not P.constrained:
        raise PreconditionError("compatibility_check needs a constrained pair")
    rng = make_rng(seed)
    S = P.constraint
    J0 = P.J0 if P.J0 is not None else identity_jet(P.n, r=-1.0)
    members, draws = sample_members(S, rng, samples)
    if members is None:
        return VerificationReport(False, 0, float("nan"), None, seed, inconclusive=True,
                                  details={"reason": "no constraint members found"})
    n = P.n
    base_allow = 1e-14 * (1 + members.norm()) ** P.degree
    cands = [(members * s, None) for s in scales]
    if S.monotone_cone is not None:
        pushes = S.monotone_cone.sample(rng, len(members))
        cands += [(members + pushes * s, None) for s in scales[1:]]
    # pushes along the value and gradient axes leave the Hessian untouched
    axes = [Jet(sign, np.zeros(n), np.zeros((n, n))) for sign in (1.0, -1.0)]
    for i in range(n):
        e = np.zeros(n)
        e[i] = 1.0
        axes += [Jet(0.0, e, np.zeros((n, n))), Jet(0.0, -e, np.zeros((n, n)))]
    for ax in axes:
        cands += [(members + ax * s, base_allow + 1e-12 * s) for s in scales[1:]]
    inf_val, inf_jet = np.inf, None
    for Js, allow in cands:
        keep = np.nonzero(S.margin(Js) >= 0)[0]
        if keep.size == 0:
            continue
        Js = Js[keep]
        # allowance for roundoff of a degree-d evaluation at large arguments
        allow = 1e-14 * (1 + Js.norm()) ** P.degree if allow is None else allow[keep]
        vals = P(Js) + allow
        i = int(np.argmin(vals))
        if vals[i] < inf_val:
            inf_val, inf_jet = float(vals[i]), Js[i]
    details = {"pair": P.name, "inf_estimate": inf_val, "draws": draws}
    if inf_val < floor:
        details["verdict"] = "divergent infimum"
        return VerificationReport(False, sum(len(c[0]) for c in cands), inf_val, inf_jet, seed,
                                  details=details)
    c0 = P.c0 if np.isfinite(P.c0) else inf_val
    details["c0"] = c0

    def level_tol(J):
        return level_rtol * (1 + J.norm()) ** P.degree

    bd, ok = project_to_boundary(S, random_jets(rng, P.n, samples))
    bd = bd[np.nonzero(ok)[0]]
    gap_b = np.abs(P(bd) - c0) - level_tol(bd)
    worst_b = int(np.argmax(gap_b))
    details["boundary_points"] = len(bd)
    details["worst_boundary_level_gap"] = float(gap_b[worst_b] + level_tol(bd[worst_b]))

    interior = members[np.nonzero(S.margin(members) > members.tolerance())[0]]
    interior = interior[np.nonzero(P(interior) > c0)[0]]
    neg = J0 * -1.0

    def level_margin(J):
        return np.minimum(S.margin(J), P(J) - c0)

    _, t, _, ok = _first_exit(level_margin, interior, neg)
    hit = interior + neg * t
    hit = hit[np.nonzero(ok)[0]]
    m_hit = S.margin(hit)
    f_hit = P(hit) - c0
    mismatch = np.maximum(np.abs(m_hit) - 10 * 1e-9 * (1 + hit.norm()) - 1e-6 * (1 + hit.norm()),
                          np.abs(f_hit) - level_tol(hit))
    worst_l = int(np.argmax(mismatch)) if len(hit) else None
    details["level_points"] = len(hit)
    if worst_l is not None:
        details["worst_level_point"] = {"constraint_margin": float(m_hit[worst_l]),
                                        "operator_minus_c0": float(f_hit[worst_l])}
    bad_b = gap_b[worst_b] > 0
    bad_l = worst_l is not None and mismatch[worst_l] > 0
    passed = not bad_b and not bad_l
    witness = None
    if bad_b:
        witness = bd[worst_b]
        details["verdict"] = "boundary point off the level c0"
    elif bad_l:
        witness = hit[worst_l]
        details["verdict"] = "level c0 reached away from the boundary"
    else:
        details["verdict"] = "compatible"
    worst = max(float(gap_b[worst_b]), float(mismatch[worst_l]) if worst_l is not None else -np.inf)
    return VerificationReport(passed, len(members) + len(bd) + len(hit), worst, witness, seed,
                              details=details)


def _first_exit(margin: Margin, J: Jet, direction: Jet, iters: int = 200):
    """First ``t >= 0`` where ``margin(J + t direction)`` drops to zero.

    Scans geometrically for a step with negative margin, then bisects
    between the last nonnegative step and it.
    """
    batch = len(J)
    lo = np.zeros(batch)
    hi = np.full(batch, np.nan)
    t = np.full(batch, 1e-6)
    for _ in range(120):
        todo = np.isnan(hi)
        if not np.any(todo):
            break
        neg = margin(J + direction * t) < 0
        hi = np.where(todo & neg, t, hi)
        lo = np.where(todo & ~neg, t, lo)
        t = np.where(todo, 1.5 * t, t)
    ok = ~np.isnan(hi)
    hi = np.where(ok, hi, lo)
    for _ in range(iters):
        mid = 0.5 * (lo + hi)
        good = margin(J + direction * mid) >= 0
        lo = np.where(good, mid, lo)
        hi = np.where(good, hi, mid)
    return None, lo, iters, ok


def jet_addition_check(F: ConstraintSet, H: ConstraintSet, samples: int = 5000,
                       seed: int | None = 42) -> VerificationReport:
    """Compare the sampled verdicts of ``F + F~ ⊂ H`` and ``F + H~ ⊂ F``.

    The two inclusions are equivalent, so the report passes when both
    sampled verdicts agree; each verdict is recorded in ``details``.
    """
    rng = make_rng(seed)
    Fd, Hd = F.dual(), H.dual()
    a, _ = sample_members(F, rng, samples)
    b, _ = sample_members(Fd, rng, samples)
    c, _ = sample_members(F, rng, samples)
    d, _ = sample_members(Hd, rng, samples)
    if any(x is None for x in (a, b, c, d)):
        return VerificationReport(False, 0, float("nan"), None, seed, inconclusive=True,
                                  details={"reason": "member sampling starved"})
    k1 = min(len(a), len(b))
    k2 = min(len(c), len(d))
    s1 = a[np.arange(k1)] + b[np.arange(k1)]
    s2 = c[np.arange(k2)] + d[np.arange(k2)]
    m1 = H.margin(s1) + s1.tolerance()
    m2 = F.margin(s2) + s2.tolerance()
    v1 = bool(np.min(m1) >= 0)
    v2 = bool(np.min(m2) >= 0)
    agree = v1 == v2
    worst = float(min(np.min(m1), np.min(m2)))
    witness = None
    if not v1:
        witness = s1[int(np.argmin(m1))]
    elif not v2:
        witness = s2[int(np.argmin(m2))]
    return VerificationReport(agree, k1 + k2, worst, witness, seed,
                              details={"F_plus_dualF_in_H": v1, "F_plus_dualH_in_F": v2,
                                       "worst_first": float(np.min(m1)),
                                       "worst_second": float(np.min(m2)),
                                       "verdicts_agree": agree})
