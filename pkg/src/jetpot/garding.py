"""Hyperbolic (Garding) polynomials on symmetric matrices and their eigenvalues.

A polynomial ``g`` of degree ``m`` is hyperbolic in a direction ``D`` when
``t -> g(X + t D)`` has only real roots for every ``X``. With the
normalization ``g(D) = 1`` this factors as ``prod_k (t + lam_k(X))`` and the
``lam_k`` are the Garding eigenvalues. The Garding cone is ``{lam_1 > 0}``
and the branches are ``{lam_k >= 0}``.

Eigenvalues are always obtained from the polynomial oracle alone, by
interpolating the restriction to the line at Chebyshev nodes and taking the
roots of the interpolant.

Matrix polynomials take symmetric arrays. Polynomials on ``R x S(n)``
(the gradient-free lifts) take :class:`~jetpot.jets.Jet` inputs whose
gradient slot is ignored.
"""
from __future__ import annotations

from itertools import combinations
from math import comb
from typing import Callable

import numpy as np
from numpy.polynomial import chebyshev as cheb

from .errors import CapabilityError, HyperbolicityError, PreconditionError
from .jets import Jet, make_rng, random_jets, random_symmetric, sym_eigs
from .report import VerificationReport

_EPS = np.finfo(float).eps


def elementary_symmetric(lam, k: int) -> np.ndarray:
    """``sigma_k`` of the entries along the last axis."""
    lam = np.asarray(lam, dtype=float)
    if k == 0:
        return np.ones(lam.shape[:-1])
    coeffs = np.ones(lam.shape[:-1] + (1,))
    for j in range(lam.shape[-1]):
        nxt = np.concatenate([coeffs, np.zeros(lam.shape[:-1] + (1,))], axis=-1)
        nxt[..., 1:] += coeffs * lam[..., j:j + 1]
        coeffs = nxt
    return coeffs[..., k]


def k_fold_sums(lam, k: int) -> np.ndarray:
    """All sums of ``k`` distinct entries, in combination order."""
    lam = np.asarray(lam, dtype=float)
    idx = list(combinations(range(lam.shape[-1]), k))
    return np.stack([lam[..., list(c)].sum(-1) for c in idx], axis=-1)


def _axpy(X, t: float, D):
    if isinstance(X, Jet):
        return Jet(X.r + t * D.r, X.p, X.A + t * D.A)
    return X + t * D


def _size(X) -> float:
    if isinstance(X, Jet):
        return float(abs(X.r)) + float(np.linalg.norm(X.A, 2))
    return float(np.linalg.norm(X, 2))


def _linked(z: np.ndarray, radius: np.ndarray, gap: float) -> list[list[int]]:
    """Single-linkage groups: roots within ``gap`` plus twice their summed uncertainty radii."""
    n = len(z)
    parent = list(range(n))

    def find(i):
        while parent[i] != i:
            parent[i] = parent[parent[i]]
            i = parent[i]
        return i

    for i in range(n):
        for j in range(i + 1, n):
            if abs(z[i] - z[j]) <= gap + 2.0 * (radius[i] + radius[j]):
                parent[find(i)] = find(j)
    groups: dict[int, list[int]] = {}
    for i in range(n):
        groups.setdefault(find(i), []).append(i)
    return list(groups.values())


class GardingPolynomial:
    """A normalized hyperbolic polynomial given by an evaluation oracle.

    Parameters
    ----------
    name : str
    degree : int
    n : int
        Matrix dimension.
    evaluate : callable
        ``X -> g(X)`` before normalization.
    direction : ndarray or Jet
        Hyperbolicity direction; ``g`` is rescaled so that ``g(direction) = 1``.
    root_bound : callable
        ``X -> B`` with every eigenvalue in ``[-B, B]``.
    lifted : bool
        True for polynomials on ``R x S(n)`` taking jets.
    """

    def __init__(self, name: str, degree: int, n: int, evaluate: Callable, direction,
                 root_bound: Callable, lifted: bool = False):
        self.name = name
        self.degree = int(degree)
        self.n = int(n)
        self.direction = direction
        self.lifted = lifted
        self._raw = evaluate
        self._root_bound = root_bound
        self._scale = 1.0
        gd = float(evaluate(direction))
        if not np.isfinite(gd) or gd <= 0:
            raise PreconditionError(f"{name}: g(direction) = {gd} is not positive")
        self._scale = 1.0 / gd

    def __repr__(self) -> str:
        return f"<GardingPolynomial {self.name} degree={self.degree} n={self.n}>"

    def _check_input(self, X):
        if self.lifted:
            if not isinstance(X, Jet):
                if isinstance(X, tuple) and len(X) == 2:
                    X = Jet(X[0], np.zeros(self.n), X[1])
                else:
                    raise PreconditionError(f"{self.name} takes (r, A) pairs or jets")
            if X.n != self.n or X.batch_shape:
                raise PreconditionError("expected a single jet of matching dimension")
            return X
        X = np.asarray(X, dtype=float)
        if X.shape != (self.n, self.n):
            raise PreconditionError(f"expected a {self.n}x{self.n} matrix, got {X.shape}")
        return 0.5 * (X + X.T)

    def __call__(self, X) -> float:
        return self._scale * float(self._raw(self._check_input(X)))

    def restriction_coefficients(self, X, center: float = 0.0, s: float | None = None
                                 ) -> tuple[np.ndarray, float]:
        """Chebyshev coefficients of ``u -> g(X + (center + s u) D)`` on ``[-1, 1]`` and ``s``.

        ``s`` defaults to twice one plus the root bound.
        """
        X = self._check_input(X)
        m = self.degree
        if s is None:
            s = 2.0 * (1.0 + float(self._root_bound(X)))
        nodes = np.cos(np.pi * (np.arange(m + 1) + 0.5) / (m + 1))
        vals = np.array([self._scale * float(self._raw(_axpy(X, center + s * u, self.direction)))
                         for u in nodes])
        if not np.all(np.isfinite(vals)):
            raise HyperbolicityError(f"{self.name}: non-finite values on the line")
        return cheb.chebfit(nodes, vals, m), s

    def _local_roots(self, X, center: float, s: float):
        """Roots and per-root error estimates in the local coordinate ``u``."""
        coef, _ = self.restriction_coefficients(X, center, s)
        roots = np.asarray(cheb.chebroots(coef), dtype=complex)
        if roots.size != self.degree:
            raise HyperbolicityError(f"{self.name}: degree dropped on the line")
        slope = np.abs(cheb.chebval(roots, cheb.chebder(coef)))
        err = 10 * _EPS * np.sum(np.abs(coef)) / np.maximum(slope, 1e-300)
        return roots, err

    def _solve(self, X, c: float, s: float, k: int, floor: float, depth: int) -> np.ndarray:
        """The ``k`` roots nearest ``c`` from a fit of half-width ``s``.

        Roots are grouped by proximity and uncertainty (the larger of the
        imaginary part and the error estimate). A group whose roots are all
        real with error estimates below ``1e-11`` of ``s`` is accepted.
        Otherwise it is refit on an interval centred at its centroid,
        shrunk by a factor between two and four and never below twice the
        group's distance from the centroid, so that no root of the group
        leaves the new interval. Clusters still unresolved at the size
        floor are reported at their centroid.
        """
        raw, err = self._local_roots(X, c, s)
        idx = np.argsort(np.abs(raw))[:k]
        u, e = raw[idx], err[idx]
        radius = np.maximum(np.abs(u.imag), np.minimum(e, 0.1))
        out = []
        for grp in _linked(u, radius, 0.05):
            ug = u[grp]
            if np.all(e[grp] <= 1e-11) and np.all(np.abs(ug.imag) <= 1e-9):
                out.append(c + s * ug.real)
                continue
            if depth < self._depth and np.max(np.abs(ug.imag)) > 2.0:
                raise HyperbolicityError(f"{self.name}: complex roots that refinement does not resolve")
            cg = complex(np.mean(ug))
            if depth == 0 or s <= floor:
                if abs(cg.imag) > 1e-6:
                    raise HyperbolicityError(f"{self.name}: complex roots at the resolution floor")
                out.append(np.full(len(grp), c + s * cg.real))
                continue
            spread = 2.0 * float(np.max(np.abs(ug - cg.real)))
            if len(grp) == 1:
                others = np.delete(raw, idx[grp[0]])
                if len(others):
                    spread = max(spread, 0.5 * float(np.min(np.abs(others - ug[0]))))
            sg = min(max(spread, 0.25), 0.5)
            out.append(self._solve(X, c + s * cg.real, max(s * sg, floor), len(grp), floor, depth - 1))
        return np.concatenate(out)

    def eigenvalues(self, X, depth: int = 40) -> np.ndarray:
        """Ascending Garding eigenvalues: negatives of the roots of ``g(X + t D)``.

        The input is first scaled to unit root bound ``B`` (hyperbolic
        polynomials are homogeneous), so the first fit spans ``[-2, 2]``. Groups
        of roots that are not yet resolved (complex from roundoff, or with
        large error estimates) are refit on successively smaller intervals
        around their centroid, which is accurate even when the individual
        roots of a cluster are not. Exactly repeated roots stay unresolved
        down to a floor of ``1e3 eps`` and are reported at the centroid.

        Raises
        ------
        HyperbolicityError
            When roots stay genuinely complex under refinement.
        """
        if self.degree == 0:
            return np.zeros(0)
        X = self._check_input(X)
        bound = float(self._root_bound(X))
        if not np.isfinite(bound):
            raise PreconditionError(f"{self.name}: non-finite input")
        if bound == 0.0:
            return np.zeros(self.degree)
        # homogeneity: work at unit scale so that values neither underflow nor overflow
        lift = 1.0
        if bound < 2.0 ** -900:
            # 1 / bound overflows for subnormal input; lift by an exact power of two first
            lift = 2.0 ** 600
            X = X * lift
            bound = float(self._root_bound(X))
        X = X * (1.0 / bound)
        self._depth = depth
        roots = self._solve(X, 0.0, 2.0, self.degree, 1e3 * _EPS, depth)
        return (bound / lift) * np.sort(-np.asarray(roots, dtype=float))

    def branch_margin(self, k: int, X) -> float:
        """``lam_k(X)``; the branch ``{lam_k >= 0}`` has this as margin."""
        if not 1 <= k <= self.degree:
            raise PreconditionError(f"branch index must be in 1..{self.degree}")
        return float(self.eigenvalues(X)[k - 1])

    def cone_margin(self, X) -> float:
        """``lam_1(X)``: positive on the open Garding cone."""
        return self.branch_margin(1, X)

    def in_closed_cone(self, X, tol: float = 1e-9) -> bool:
        return self.cone_margin(X) >= -tol * (1 + _size(X))

    def in_cone(self, X, tol: float = 1e-9) -> bool:
        return self.cone_margin(X) > tol * (1 + _size(X))

    def root_bound(self, X) -> float:
        return float(self._root_bound(self._check_input(X)))

    def random_input(self, rng, psd: bool = False):
        if self.lifted:
            J = random_jets(rng, self.n)
            A = random_symmetric(rng, self.n, psd=psd)
            return Jet(J.r, np.zeros(self.n), A)
        return random_symmetric(rng, self.n, psd=psd)


# catalog

def det_polynomial(n: int) -> GardingPolynomial:
    """``det``, direction ``I``: Garding eigenvalues are the ordinary ones."""
    return GardingPolynomial("det", n, n, np.linalg.det, np.eye(n),
                             lambda A: np.linalg.norm(A, 2))


def sigma_polynomial(n: int, k: int) -> GardingPolynomial:
    """``sigma_k`` of the eigenvalues (the ``k``-Hessian), direction ``I``."""
    if not 1 <= k <= n:
        raise PreconditionError("need 1 <= k <= n")
    return GardingPolynomial(f"sigma_{k}", k, n, lambda A: elementary_symmetric(sym_eigs(A), k),
                             np.eye(n), lambda A: np.linalg.norm(A, 2))


def tau_polynomial(n: int, k: int) -> GardingPolynomial:
    """Product of all ``k``-fold eigenvalue sums, direction ``I / k``.

    With this direction the Garding eigenvalues are exactly the ``k``-fold
    sums of the ordinary eigenvalues.
    """
    if not 1 <= k <= n:
        raise PreconditionError("need 1 <= k <= n")
    return GardingPolynomial(f"tau_{k}", comb(n, k), n,
                             lambda A: np.prod(k_fold_sums(sym_eigs(A), k)), np.eye(n) / k,
                             lambda A: k * np.linalg.norm(A, 2))


def lift_gradient_free(g: GardingPolynomial) -> GardingPolynomial:
    """``g~(r, A) = g(A - r D)`` on ``R x S(n)``, direction ``(-1/2, D/2)``.

    Its eigenvalues are ``lam_k(A) - r`` and its closed cone is
    ``{r <= lam_1(A)}``.
    """
    if g.lifted:
        raise PreconditionError("polynomial is already lifted")
    D = g.direction
    n = g.n
    direction = Jet(-0.5, np.zeros(n), 0.5 * D)
    return GardingPolynomial(
        f"lifted:{g.name}", g.degree, n, lambda J: g._raw(J.A - J.r * D), direction,
        lambda J: g._root_bound(J.A) + abs(float(J.r)), lifted=True)


def derive(g: GardingPolynomial, construction: str, param) -> GardingPolynomial:
    """New hyperbolic polynomials built from the eigenvalues of ``g``.

    Parameters
    ----------
    construction : {"I", "II", "III"}
        ``I``: ``k`` derivatives along the direction, i.e.
        ``sigma_{m-k}(lam) / C(m, m-k)`` (degree ``m - k``). ``II``: product
        of all ``k``-fold sums of ``lam`` (direction scaled by ``1/k``).
        ``III``: ``prod_j (lam_j + eps sum(lam))`` (direction scaled by
        ``1 / (1 + m eps)``).
    param : int or float
        ``k`` for I and II, ``eps`` for III.
    """
    m = g.degree
    D = g.direction
    if construction == "I":
        k = int(param)
        if not 0 <= k < m:
            raise PreconditionError(f"need 0 <= k < {m}")
        deg = m - k
        c = comb(m, deg)
        return GardingPolynomial(
            f"derived:I:{k}:{g.name}", deg, g.n,
            lambda X: elementary_symmetric(g.eigenvalues(X), deg) / c, D, g._root_bound,
            lifted=g.lifted)
    if construction == "II":
        k = int(param)
        if not 1 <= k <= m:
            raise PreconditionError(f"need 1 <= k <= {m}")
        return GardingPolynomial(
            f"derived:II:{k}:{g.name}", comb(m, k), g.n,
            lambda X: np.prod(k_fold_sums(g.eigenvalues(X), k)), _scale_dir(D, 1.0 / k),
            lambda X: k * g._root_bound(X), lifted=g.lifted)
    if construction == "III":
        eps = float(param)
        if not eps > 0:
            raise PreconditionError("eps must be positive")

        def ev(X):
            lam = g.eigenvalues(X)
            return np.prod(lam + eps * lam.sum())

        return GardingPolynomial(
            f"derived:III:{eps:g}:{g.name}", m, g.n, ev, _scale_dir(D, 1.0 / (1 + m * eps)),
            lambda X: (1 + m * eps) * g._root_bound(X), lifted=g.lifted)
    raise PreconditionError(f"unknown construction {construction!r}")


def _scale_dir(D, c: float):
    return D * c


CATALOG_NAMES = ("det", "sigma_k", "tau_k", "lifted:<name>", "derived:<I|II|III>:<param>[:<base>]",
                 "lagrangian")


def garding_from_name(name: str, n: int) -> GardingPolynomial:
    """Parse a catalog name.

    Accepted forms: ``det``, ``sigma_<k>``, ``tau_<k>``, ``lifted:<name>``,
    ``derived:<I|II|III>:<param>[:<base>]`` (base defaults to ``det``).
    ``lagrangian`` is listed but has no evaluator.
    """
    name = name.strip()
    if name == "det":
        return det_polynomial(n)
    if name.startswith("sigma_"):
        return sigma_polynomial(n, int(name[6:]))
    if name.startswith("tau_"):
        return tau_polynomial(n, int(name[4:]))
    if name.startswith("lifted:"):
        return lift_gradient_free(garding_from_name(name[7:], n))
    if name.startswith("derived:"):
        parts = name.split(":", 3)
        if len(parts) < 3:
            raise PreconditionError("derived names look like derived:II:2[:det]")
        base = garding_from_name(parts[3], n) if len(parts) == 4 else det_polynomial(n)
        param = float(parts[2]) if parts[1] == "III" else int(parts[2])
        return derive(base, parts[1], param)
    if name == "lagrangian":
        raise CapabilityError("the Lagrangian Monge-Ampere polynomial is catalogued by name only")
    raise PreconditionError(f"unknown polynomial {name!r}")


# functional interface

def garding_eigs(g: GardingPolynomial, X) -> np.ndarray:
    return g.eigenvalues(X)


def branch_margin(g: GardingPolynomial, k: int, X) -> float:
    return g.branch_margin(k, X)


def strict_monotone_check(g: GardingPolynomial, samples: int = 1000, seed: int | None = 42,
                          eps: float = 0.1) -> VerificationReport:
    """Check ``lam_k(X + B) > lam_k(X)`` for all ``k`` with ``B`` in the open cone.

    ``B`` is built as ``C - lam_1(C) D + eps D``: a random ``C`` moved onto the
    cone boundary and then pushed inside along the direction.
    """
    rng = make_rng(seed)
    D = g.direction
    worst = np.inf
    witness = None
    for _ in range(samples):
        X = g.random_input(rng)
        C = g.random_input(rng)
        C = _axpy(C, -g.cone_margin(C), D)
        B = _axpy(C, eps, D)
        XB = _axpy(X, 1.0, B) if not isinstance(X, Jet) else Jet(X.r + B.r, X.p, X.A + B.A)
        gap = float(np.min(g.eigenvalues(XB) - g.eigenvalues(X)))
        if gap < worst:
            worst = gap
            witness = (X, B)
    passed = worst > 0
    w = None
    if not passed and witness is not None:
        X, B = witness
        w = X if isinstance(X, Jet) else Jet(0.0, np.zeros(g.n), X)
    return VerificationReport(passed, samples, worst, w, seed,
                              details={"polynomial": g.name, "eps": eps})
