"""Monotonicity cones on the jet space.

Every cone is described by a signed margin function: a jet belongs to the
cone when its margin is at least ``-tol`` and lies in the interior when the
margin exceeds ``+tol``, with ``tol = 1e-9 * (1 + ||J||)``. Dual membership
uses ``-margin(-J)``.

Slots of the fundamental family can be switched off with :data:`FREE` and
an infinite radius is written :data:`INF`.
"""
from __future__ import annotations

from dataclasses import dataclass, field
from enum import Enum
from math import asin, atan, cos, pi, sin, sqrt
from typing import Any, Callable

import numpy as np

from .errors import (CapabilityError, InfeasibleError, PreconditionError, SearchFailure)
from .grid import GridDomain
from .jets import (Jet, lambda_min, random_jets, random_symmetric, radial_jet,
                   RadialProfile, sym_eigh, sym_eigs, make_rng)
from .report import VerificationReport


class Bound(Enum):
    """Explicit states for absent or infinite cone parameters."""

    FREE = "free"
    INF = "inf"


FREE = Bound.FREE
INF = Bound.INF

_BIG = 1e12


def _norm(q) -> np.ndarray:
    return np.linalg.norm(q, axis=-1)


def _unit(b) -> np.ndarray:
    b = np.asarray(b, dtype=float)
    nb = np.linalg.norm(b)
    if nb <= 0:
        raise PreconditionError("axis must be nonzero")
    return b / nb


def _mags(rng, size):
    return 10.0 ** rng.uniform(-1.0, 1.0, size)


def _random_units(rng, n, size) -> np.ndarray:
    g = rng.standard_normal(size + (n,))
    nrm = np.linalg.norm(g, axis=-1, keepdims=True)
    nrm[nrm == 0] = 1.0
    return g / nrm


def _cone_directions(rng, axis: np.ndarray, angle: float, size: tuple,
                     boundary: np.ndarray | None = None) -> np.ndarray:
    """Unit vectors at angle at most ``angle`` from ``axis``."""
    n = axis.size
    if n == 1:
        return np.broadcast_to(axis, size + (1,)).copy()
    v = _random_units(rng, n, size)
    v = v - (v @ axis)[..., None] * axis
    nv = np.linalg.norm(v, axis=-1, keepdims=True)
    nv[nv == 0] = 1.0
    v = v / nv
    a = angle * rng.uniform(0.0, 1.0, size)
    if boundary is not None:
        a = np.where(boundary, angle, a)
    return np.cos(a)[..., None] * axis + np.sin(a)[..., None] * v


# directional cones

@dataclass(frozen=True)
class DirectionalCone:
    """A closed convex cone in the gradient slot.

    Variants
    --------
    ``full``: all of R^n. ``halfspace``: ``<b, q> >= 0``. ``orthant``:
    ``q_j >= 0`` for the first ``k`` coordinates. ``circular``:
    ``<b, q> >= cos(theta) |b| |q|``. ``parabolic``: ``-q_n >= gamma |q'|``
    where ``q'`` holds the first ``n - 1`` coordinates. ``zero``: the vertex
    only, and ``coorthant``: the polar of an orthant. The last two have
    empty interior and appear as polars or as claimed minimal cones.
    """

    variant: str
    n: int
    b: tuple | None = None
    theta: float | None = None
    k: int | None = None
    gamma: float | None = None

    VARIANTS = ("full", "halfspace", "orthant", "circular", "parabolic", "zero", "coorthant")

    def __post_init__(self):
        if self.variant not in self.VARIANTS:
            raise PreconditionError(f"unknown directional cone {self.variant!r}")
        if self.n < 1:
            raise PreconditionError("dimension must be positive")
        if self.b is not None:
            object.__setattr__(self, "b", tuple(float(v) for v in _unit(self.b)))
            if len(self.b) != self.n:
                raise PreconditionError("axis length does not match n")
        if self.variant in ("halfspace", "circular") and self.b is None:
            raise PreconditionError(f"{self.variant} cone needs an axis")
        if self.variant == "circular" and not (0.0 <= self.theta <= pi / 2):
            raise PreconditionError("circular half-angle must lie in [0, pi/2]")
        if self.variant in ("orthant", "coorthant") and not (1 <= (self.k or 0) <= self.n):
            raise PreconditionError("orthant index k must satisfy 1 <= k <= n")
        if self.variant == "parabolic" and (self.gamma is None or self.gamma < 0):
            raise PreconditionError("parabolic cone needs gamma >= 0")

    # constructors
    @classmethod
    def full(cls, n: int) -> "DirectionalCone":
        return cls("full", n)

    @classmethod
    def zero(cls, n: int) -> "DirectionalCone":
        return cls("zero", n)

    @classmethod
    def halfspace(cls, b) -> "DirectionalCone":
        b = np.atleast_1d(np.asarray(b, dtype=float))
        return cls("halfspace", b.size, b=tuple(b))

    @classmethod
    def orthant(cls, n: int, k: int | None = None) -> "DirectionalCone":
        return cls("orthant", n, k=n if k is None else k)

    @classmethod
    def circular(cls, b, theta: float) -> "DirectionalCone":
        b = np.atleast_1d(np.asarray(b, dtype=float))
        return cls("circular", b.size, b=tuple(b), theta=float(theta))

    @classmethod
    def parabolic(cls, n: int, gamma: float) -> "DirectionalCone":
        return cls("parabolic", n, gamma=float(gamma))

    @property
    def is_full(self) -> bool:
        return self.variant == "full"

    @property
    def axis_vector(self) -> np.ndarray | None:
        return None if self.b is None else np.array(self.b)

    def margin(self, q) -> np.ndarray:
        """Signed distance-like margin; ``>= 0`` exactly on the cone."""
        q = np.asarray(q, dtype=float)
        v = self.variant
        if v == "full":
            return np.full(q.shape[:-1], np.inf)
        if v == "zero":
            return -_norm(q)
        if v == "halfspace":
            return q @ self.axis_vector
        if v == "circular":
            return q @ self.axis_vector - cos(self.theta) * _norm(q)
        if v == "orthant":
            return np.min(q[..., : self.k], axis=-1)
        if v == "coorthant":
            pos = np.min(q[..., : self.k], axis=-1)
            if self.k == self.n:
                return pos
            return np.minimum(pos, -_norm(q[..., self.k:]))
        # parabolic
        return -q[..., -1] - self.gamma * _norm(q[..., :-1])

    def member(self, q, tol=None) -> np.ndarray:
        q = np.asarray(q, dtype=float)
        tol = 1e-9 * (1 + _norm(q)) if tol is None else tol
        return self.margin(q) >= -tol

    def interior(self, q, tol=None) -> np.ndarray:
        q = np.asarray(q, dtype=float)
        tol = 1e-9 * (1 + _norm(q)) if tol is None else tol
        return self.margin(q) > tol

    def polar(self) -> "DirectionalCone":
        """The polar cone ``{q': <q', q> >= 0 for all q in D}``."""
        v = self.variant
        if v == "full":
            return DirectionalCone.zero(self.n)
        if v == "zero":
            return DirectionalCone.full(self.n)
        if v == "halfspace":
            return DirectionalCone.circular(self.b, 0.0)
        if v == "circular":
            return DirectionalCone.circular(self.b, pi / 2 - self.theta)
        if v == "orthant":
            return DirectionalCone("coorthant", self.n, k=self.k)
        if v == "coorthant":
            return DirectionalCone("orthant", self.n, k=self.k)
        if self.gamma > 0:
            return DirectionalCone.parabolic(self.n, 1.0 / self.gamma)
        e = np.zeros(self.n)
        e[-1] = -1.0
        return DirectionalCone.circular(e, 0.0)

    def polar_margin(self, q) -> np.ndarray:
        return self.polar().margin(q)

    def axis_angle(self) -> tuple[np.ndarray | None, float]:
        """Axis and half-angle of a circular cone inscribed in this cone."""
        v = self.variant
        if v == "full":
            return None, pi
        if v == "halfspace":
            return self.axis_vector, pi / 2
        if v == "circular":
            return self.axis_vector, self.theta
        if v == "orthant":
            a = np.zeros(self.n)
            a[: self.k] = 1.0 / sqrt(self.k)
            return a, asin(1.0 / sqrt(self.k))
        if v == "parabolic":
            a = np.zeros(self.n)
            a[-1] = -1.0
            return a, pi / 2 if self.gamma == 0 else atan(1.0 / self.gamma)
        raise PreconditionError(f"{v} cone has empty interior")

    def sample(self, rng, size: int | tuple, boundary: float = 0.25) -> np.ndarray:
        """Members of the cone, a fraction of them on the boundary."""
        size = (size,) if isinstance(size, int) else tuple(size)
        mag = _mags(rng, size)[..., None]
        on_bd = rng.uniform(size=size) < boundary
        return mag * self.sample_directions(rng, size, on_bd)

    def sample_directions(self, rng, size: tuple, on_bd=None) -> np.ndarray:
        """Unit members (zero vectors for the ``zero`` variant)."""
        n, v = self.n, self.variant
        on_bd = np.zeros(size, dtype=bool) if on_bd is None else on_bd
        if v == "zero":
            return np.zeros(size + (n,))
        if v == "full":
            return _random_units(rng, n, size)
        if v == "halfspace":
            b = self.axis_vector
            q = _random_units(rng, n, size)
            s = q @ b
            q = q - np.where(on_bd, s, np.minimum(s, 0.0) * 2)[..., None] * b
            nq = np.linalg.norm(q, axis=-1, keepdims=True)
            nq[nq == 0] = 1.0
            return q / nq
        if v in ("orthant", "coorthant"):
            q = _random_units(rng, n, size)
            q[..., : self.k] = np.abs(q[..., : self.k])
            if v == "coorthant":
                q[..., self.k:] = 0.0
            hit = rng.integers(0, self.k, size)
            idx = np.nonzero(on_bd)
            q[idx + (hit[idx],)] = 0.0
            nq = np.linalg.norm(q, axis=-1, keepdims=True)
            bad = nq[..., 0] == 0
            q[bad, 0] = 1.0
            nq[bad] = 1.0
            return q / nq
        a, ang = self.axis_angle()
        return _cone_directions(rng, a, ang, size, on_bd)

    def to_dict(self) -> dict:
        d: dict[str, Any] = {"variant": self.variant, "n": self.n}
        if self.b is not None:
            d["b"] = list(self.b)
        for key in ("theta", "k", "gamma"):
            val = getattr(self, key)
            if val is not None:
                d[key] = val
        return d

    @classmethod
    def from_dict(cls, d: dict) -> "DirectionalCone":
        d = dict(d)
        if "b" in d:
            d["b"] = tuple(d["b"])
        return cls(**d)


# monotonicity cones

def _tol(J: Jet, tol):
    return J.tolerance() if tol is None else tol


class MonotonicityCone:
    """Base class: subclasses supply :meth:`margin` and parameters.

    Attributes
    ----------
    n : int
    directional : DirectionalCone
        The constraint placed on the gradient slot.
    """

    n: int
    directional: DirectionalCone
    variant = "cone"

    def margin(self, J: Jet) -> np.ndarray:
        raise NotImplementedError

    def member(self, J: Jet, tol=None) -> np.ndarray:
        return self.margin(J) >= -_tol(J, tol)

    def interior(self, J: Jet, tol=None) -> np.ndarray:
        return self.margin(J) > _tol(J, tol)

    def dual_margin(self, J: Jet) -> np.ndarray:
        """Margin of the Dirichlet dual: ``-margin(-J)``."""
        return -self.margin(-J)

    def dual_member(self, J: Jet, tol=None) -> np.ndarray:
        return self.dual_margin(J) >= -_tol(J, tol)

    def polar_margin(self, J: Jet) -> np.ndarray:
        raise CapabilityError(f"no closed-form polar for {self.describe()}")

    def polar_member(self, J: Jet, tol=None) -> np.ndarray:
        return self.polar_margin(J) >= -_tol(J, tol)

    def polar_sample(self, rng, size: int) -> Jet:
        raise CapabilityError(f"no closed-form polar for {self.describe()}")

    def interior_point(self) -> Jet:
        return Jet(-1.0, np.zeros(self.n), np.eye(self.n))

    def describe(self) -> str:
        return self.variant

    def to_dict(self) -> dict:
        raise NotImplementedError

    def __repr__(self) -> str:
        return f"<{type(self).__name__} {self.describe()}>"

    def sample(self, rng, size: int, boundary: float = 0.25) -> Jet:
        """Members of the cone, boundary-heavy.

        The Hessian slot is a random matrix shifted by a multiple of the
        identity onto or past the boundary, the gradient is a direction of
        the directional cone scaled up to at most the largest feasible
        length, and the value slot is pushed below its largest feasible
        value. Each stage lands exactly on its bound with probability
        ``boundary``.
        """
        n = self.n
        size = int(size)
        low_r = np.full(size, -_BIG)
        psd = rng.uniform(size=size) < 0.5
        A0 = np.where(psd[:, None, None], random_symmetric(rng, n, (size,), psd=True),
                      random_symmetric(rng, n, (size,)))
        zero_p = np.zeros((size, n))
        scale = 1.0 + np.linalg.norm(A0, axis=(-2, -1))
        eye = np.eye(n)

        def a_margin(c):
            return self.margin(Jet(low_r, zero_p, A0 + c[:, None, None] * eye))

        cstar = _bisect_threshold(a_margin, -2 * scale, 2 * scale, increasing=True)
        unconstrained = np.isneginf(cstar)
        on = rng.uniform(size=size) < boundary
        extra = _mags(rng, size) * rng.uniform(size=size)
        c = np.where(on, cstar, np.maximum(cstar, 0.0) + extra)
        c = np.where(unconstrained, 0.0, c)
        A = A0 + c[:, None, None] * eye

        on = rng.uniform(size=size) < boundary
        d = self.directional.sample_directions(rng, (size,), on)
        smax = _bisect_threshold(lambda s: self.margin(Jet(low_r, s[:, None] * d, A)),
                                 np.zeros(size), np.full(size, 1e6), increasing=False)
        unbounded = np.isposinf(smax)
        on = rng.uniform(size=size) < boundary
        s = np.where(on, smax, smax * rng.uniform(size=size))
        s = np.where(unbounded, _mags(rng, size), s)
        s = np.where(np.isneginf(smax), 0.0, s)
        p = s[:, None] * d

        rmax = _bisect_threshold(lambda r: self.margin(Jet(r, p, A)),
                                 np.full(size, -1e6), np.full(size, 1e6), increasing=False)
        free_r = np.isposinf(rmax)
        on = rng.uniform(size=size) < boundary
        r = np.where(on, rmax, rmax - _mags(rng, size) * rng.uniform(size=size))
        r = np.where(free_r, rng.uniform(-1, 1, size) * _mags(rng, size), r)
        r = np.where(np.isneginf(rmax), -1e6, r)
        return Jet(r, p, A)


def _bisect_threshold(fn: Callable[[np.ndarray], np.ndarray], lo, hi, increasing: bool,
                      iters: int = 80) -> np.ndarray:
    """Vectorized boundary search for a monotone margin along a parameter.

    For ``increasing=True`` returns the smallest parameter with
    ``fn >= 0`` (``-inf`` when already feasible at ``lo``), otherwise the
    largest one (``+inf`` when still feasible at ``hi``). Infeasible
    everywhere gives ``+inf`` and ``-inf`` respectively. The returned value
    is on the feasible side.
    """
    lo = np.array(lo, dtype=float)
    hi = np.array(hi, dtype=float)
    f_lo = fn(lo) >= 0
    f_hi = fn(hi) >= 0
    a, b = lo.copy(), hi.copy()
    for _ in range(iters):
        mid = 0.5 * (a + b)
        ok = fn(mid) >= 0
        if increasing:
            b = np.where(ok, mid, b)
            a = np.where(ok, a, mid)
        else:
            a = np.where(ok, mid, a)
            b = np.where(ok, b, mid)
    if increasing:
        out = b
        out = np.where(f_lo, -np.inf, out)
        out = np.where(~f_hi, np.inf, out)
    else:
        out = a
        out = np.where(f_hi, np.inf, out)
        out = np.where(~f_lo, -np.inf, out)
    return out


def _param(x):
    if isinstance(x, Bound):
        return x.value
    return x


def _load_param(x):
    if isinstance(x, str):
        return Bound(x)
    return float(x)


@dataclass(frozen=True, repr=False)
class FundamentalCone(MonotonicityCone):
    """``M(gamma, D, R) = {r <= -gamma |p|, p in D, A >= (|p| / R) I}``.

    ``gamma=FREE`` drops the value constraint, ``R=FREE`` drops the Hessian
    constraint and ``R=INF`` leaves ``A >= 0``. For example
    ``FundamentalCone(0.0, DirectionalCone.full(n), INF)`` is ``N x R^n x P``.
    """

    gamma: float | Bound
    directional: DirectionalCone
    R: float | Bound
    variant = "fundamental"

    def __post_init__(self):
        g, R = self.gamma, self.R
        if g is INF:
            raise PreconditionError("gamma must be finite or FREE")
        if not isinstance(g, Bound):
            object.__setattr__(self, "gamma", float(g))
            if self.gamma < 0:
                raise PreconditionError("gamma must be nonnegative")
        if not isinstance(R, Bound):
            object.__setattr__(self, "R", float(R))
            if not self.R > 0:
                raise PreconditionError("R must be positive")

    @property
    def n(self) -> int:
        return self.directional.n

    @classmethod
    def product(cls, n: int, r_free: bool = False, D: DirectionalCone | None = None,
                A_free: bool = False) -> "FundamentalCone":
        """``N x D x P`` style products; flags replace a factor by the full space."""
        D = DirectionalCone.full(n) if D is None else D
        return cls(FREE if r_free else 0.0, D, FREE if A_free else INF)

    def margin(self, J: Jet) -> np.ndarray:
        pn = _norm(J.p)
        parts = []
        if self.gamma is not FREE:
            parts.append(-self.gamma * pn - J.r)
        if not self.directional.is_full:
            parts.append(self.directional.margin(J.p))
        if self.R is INF:
            parts.append(lambda_min(J.A))
        elif self.R is not FREE:
            parts.append(lambda_min(J.A) - pn / self.R)
        if not parts:
            return np.full(J.batch_shape, np.inf)
        return np.minimum.reduce([np.broadcast_to(x, J.batch_shape) for x in parts])

    # polars
    def _polar_kind(self) -> str:
        if self.directional.is_full:
            return "full"
        if self.gamma in (FREE, 0.0) and self.R in (FREE, INF):
            return "product"
        raise CapabilityError("closed-form polar needs D = R^n or a product cone; "
                              f"got {self.describe()}")

    def polar_margin(self, J: Jet) -> np.ndarray:
        """Margin of ``M°`` (dual cone under the jet inner product)."""
        kind = self._polar_kind()
        s, q, B = J.r, J.p, J.A
        parts = []
        if self.gamma is FREE:
            parts.append(-np.abs(s))
        else:
            parts.append(-s)
        if self.R is FREE:
            parts.append(-np.linalg.norm(B, axis=(-2, -1)))
        else:
            parts.append(lambda_min(B))
        if kind == "product":
            parts.append(self.directional.polar_margin(q))
        else:
            bound = np.zeros(J.batch_shape)
            if self.gamma is not FREE:
                bound = bound - self.gamma * s
            if self.R not in (FREE, INF):
                bound = bound + np.trace(B, axis1=-2, axis2=-1) / self.R
            parts.append(bound - _norm(q))
        return np.minimum.reduce([np.broadcast_to(x, J.batch_shape) for x in parts])

    def polar_sample(self, rng, size: int, boundary: float = 0.25) -> Jet:
        kind = self._polar_kind()
        n = self.n
        if self.gamma is FREE:
            s = np.zeros(size)
        else:
            s = -_mags(rng, size) * rng.uniform(size=size)
            if self.R is not FREE:
                # with a free Hessian slot s = 0 would force the zero jet
                s = np.where(rng.uniform(size=size) < boundary, 0.0, s)
        if self.R is FREE:
            B = np.zeros((size, n, n))
        else:
            B = random_symmetric(rng, n, (size,), psd=True)
        if kind == "product":
            q = self.directional.polar().sample(rng, size, boundary)
        else:
            bound = np.zeros(size)
            if self.gamma is not FREE:
                bound = bound - self.gamma * s
            if self.R not in (FREE, INF):
                bound = bound + np.trace(B, axis1=-2, axis2=-1) / self.R
            u = np.where(rng.uniform(size=size) < boundary, 1.0, rng.uniform(size=size))
            q = (u * bound)[:, None] * _random_units(rng, n, (size,))
        return Jet(s, q, B)

    def interior_point(self) -> Jet:
        n = self.n
        if self.directional.is_full or self.directional.variant in ("zero", "coorthant"):
            p = np.zeros(n)
        else:
            a, _ = self.directional.axis_angle()
            p = a
        pn = float(np.linalg.norm(p))
        r = 0.0 if self.gamma is FREE else -self.gamma * pn - 1.0
        if self.R is FREE:
            A = np.zeros((n, n))
        elif self.R is INF:
            A = np.eye(n)
        else:
            A = (pn / self.R + 1.0) * np.eye(n)
        return Jet(r, p, A)

    def describe(self) -> str:
        D = self.directional
        dd = D.variant if D.variant != "circular" else f"circular(theta={D.theta:.6g})"
        return f"M(gamma={_param(self.gamma)}, D={dd}, R={_param(self.R)})"

    def to_dict(self) -> dict:
        return {"variant": self.variant, "gamma": _param(self.gamma), "R": _param(self.R),
                "D": self.directional.to_dict()}


def _gamma_part(gamma, J: Jet):
    if gamma is FREE:
        return None
    return -gamma * _norm(J.p) - J.r


def _combine(J: Jet, *parts):
    parts = [np.broadcast_to(x, J.batch_shape) for x in parts if x is not None]
    return np.minimum.reduce(parts)


def trust_region_min(A, b) -> np.ndarray:
    """``min_{|e| = 1} e^T A e - <b, e>`` for stacks of symmetric ``A``.

    Uses the concave dual ``h(mu) = mu - sum c_i^2 / (4 (lam_i - mu))`` over
    ``mu < lam_1`` (strong duality holds for this problem). Its maximizer
    solves the secular equation ``sum c_i^2 / (4 (lam_i - mu)^2) = 1``,
    found by geometric bisection on ``lam_1 - mu``. In the hard case the
    supremum is the limit ``mu -> lam_1``.
    """
    A = np.asarray(A, dtype=float)
    b = np.asarray(b, dtype=float)
    lam, Q = sym_eigh(A)
    c2 = np.einsum("...ji,...j->...i", Q, b) ** 2
    lam1 = lam[..., :1]
    gaps = lam - lam1
    scale = 1.0 + np.max(np.abs(lam), axis=-1) + _norm(b)
    dmin = 1e-18 * scale
    dmax = 0.5 * _norm(b) + 1.0

    def phi(d):
        return np.sum(c2 / (4 * (gaps + d[..., None]) ** 2), axis=-1)

    def h(d):
        return lam1[..., 0] - d - np.sum(c2 / (4 * (gaps + d[..., None])), axis=-1)

    lo, hi = np.log(dmin), np.log(dmax)
    lo = np.broadcast_to(lo, lam.shape[:-1]).copy()
    hi = np.broadcast_to(hi, lam.shape[:-1]).copy()
    for _ in range(200):
        mid = 0.5 * (lo + hi)
        big = phi(np.exp(mid)) >= 1.0
        lo = np.where(big, mid, lo)
        hi = np.where(big, hi, mid)
    d = np.exp(0.5 * (lo + hi))
    hard = phi(dmin * np.ones_like(d)) < 1.0
    d = np.where(hard, dmin, d)
    return h(d)


@dataclass(frozen=True, repr=False)
class SubRCone(MonotonicityCone):
    """``A >= 0`` and ``(lam_1 ... lam_n)^(1/n) >= |p| / R``, optionally ``r <= -gamma |p|``."""

    n: int
    R: float
    gamma: float | Bound = FREE
    variant = "sub_R"

    @property
    def directional(self) -> DirectionalCone:
        return DirectionalCone.full(self.n)

    def margin(self, J: Jet) -> np.ndarray:
        lam = sym_eigs(J.A)
        geo = np.prod(np.clip(lam, 0.0, None), axis=-1) ** (1.0 / self.n)
        return _combine(J, lam[..., 0], geo - _norm(J.p) / self.R, _gamma_part(self.gamma, J))

    def describe(self) -> str:
        return f"M_R(R={self.R:g}, gamma={_param(self.gamma)})"

    def to_dict(self) -> dict:
        return {"variant": self.variant, "n": self.n, "R": self.R, "gamma": _param(self.gamma)}


@dataclass(frozen=True, repr=False)
class SuperRCone(MonotonicityCone):
    """``<A e, e> >= |<p, e>| / R`` for all unit ``e``, optionally ``r <= -gamma |p|``."""

    n: int
    R: float
    gamma: float | Bound = FREE
    variant = "super_R"

    @property
    def directional(self) -> DirectionalCone:
        return DirectionalCone.full(self.n)

    def margin(self, J: Jet) -> np.ndarray:
        return _combine(J, trust_region_min(J.A, J.p / self.R), _gamma_part(self.gamma, J))

    def describe(self) -> str:
        return f"M^R(R={self.R:g}, gamma={_param(self.gamma)})"

    def to_dict(self) -> dict:
        return {"variant": self.variant, "n": self.n, "R": self.R, "gamma": _param(self.gamma)}


@dataclass(frozen=True, repr=False)
class PucciCone(MonotonicityCone):
    """``lam tr(A+) + Lam tr(A-) >= lam n |p| / R`` (``tr(A-)`` is the negative part)."""

    n: int
    lam: float
    Lam: float
    R: float
    variant = "pucci_R"

    def __post_init__(self):
        if not (0 < self.lam <= self.Lam):
            raise PreconditionError("need 0 < lam <= Lam")

    @property
    def directional(self) -> DirectionalCone:
        return DirectionalCone.full(self.n)

    def margin(self, J: Jet) -> np.ndarray:
        e = sym_eigs(J.A)
        pucci = self.lam * np.sum(np.clip(e, 0, None), -1) + self.Lam * np.sum(np.clip(e, None, 0), -1)
        return pucci - self.lam * self.n * _norm(J.p) / self.R

    def describe(self) -> str:
        return f"M-(lam={self.lam:g}, Lam={self.Lam:g}, R={self.R:g})"

    def to_dict(self) -> dict:
        return {"variant": self.variant, "n": self.n, "lam": self.lam, "Lam": self.Lam, "R": self.R}


@dataclass(frozen=True, repr=False)
class DeltaRCone(MonotonicityCone):
    """``lam_min(A) + delta tr(A) >= |p| / R``."""

    n: int
    R: float
    delta: float
    variant = "delta_R"

    def __post_init__(self):
        if self.delta <= 0:
            raise PreconditionError("delta must be positive")

    @property
    def directional(self) -> DirectionalCone:
        return DirectionalCone.full(self.n)

    def margin(self, J: Jet) -> np.ndarray:
        e = sym_eigs(J.A)
        return e[..., 0] + self.delta * np.sum(e, -1) - _norm(J.p) / self.R

    def describe(self) -> str:
        return f"M(R={self.R:g})_delta(delta={self.delta:g})"

    def to_dict(self) -> dict:
        return {"variant": self.variant, "n": self.n, "R": self.R, "delta": self.delta}


@dataclass(frozen=True, repr=False)
class StrictEllipticCone(MonotonicityCone):
    """``r <= 0``, ``p in D``, ``A >= 0`` and ``lam tr(A) >= beta |p|``."""

    lam: float
    beta: float
    directional: DirectionalCone
    variant = "strict_elliptic"

    def __post_init__(self):
        if self.lam <= 0 or self.beta < 0:
            raise PreconditionError("need lam > 0 and beta >= 0")

    @property
    def n(self) -> int:
        return self.directional.n

    def margin(self, J: Jet) -> np.ndarray:
        d = None if self.directional.is_full else self.directional.margin(J.p)
        return _combine(J, -J.r, d, lambda_min(J.A),
                        self.lam * np.trace(J.A, axis1=-2, axis2=-1) - self.beta * _norm(J.p))

    def interior_point(self) -> Jet:
        n = self.n
        if self.directional.is_full:
            p = np.zeros(n)
        else:
            a, _ = self.directional.axis_angle()
            p = a * min(1.0, self.lam * n / (2 * self.beta)) if self.beta > 0 else a
        return Jet(-1.0, p, np.eye(n))

    def describe(self) -> str:
        return f"M_(lam={self.lam:g}, beta={self.beta:g})(N, {self.directional.variant}, P)"

    def to_dict(self) -> dict:
        return {"variant": self.variant, "lam": self.lam, "beta": self.beta,
                "D": self.directional.to_dict()}


@dataclass(frozen=True, repr=False)
class ParabolicCone(MonotonicityCone):
    """``N x D x P*``: ``r <= 0``, ``p in D`` and the leading ``(n-1)`` block ``>= 0``.

    The last coordinate plays the role of time.
    """

    directional: DirectionalCone
    variant = "parabolic_star"

    @property
    def n(self) -> int:
        return self.directional.n

    def margin(self, J: Jet) -> np.ndarray:
        d = None if self.directional.is_full else self.directional.margin(J.p)
        return _combine(J, -J.r, d, lambda_min(J.A[..., :-1, :-1]))

    def interior_point(self) -> Jet:
        n = self.n
        p = np.zeros(n)
        if not self.directional.is_full:
            p, _ = self.directional.axis_angle()
        return Jet(-1.0, p, np.eye(n))

    def describe(self) -> str:
        return f"N x {self.directional.variant} x P*"

    def to_dict(self) -> dict:
        return {"variant": self.variant, "D": self.directional.to_dict()}


@dataclass(frozen=True, repr=False)
class CircularJetCone(MonotonicityCone):
    """Circular cone in the jet space: ``<J0, J> >= cos(theta) |J0| |J|``.

    Its polar is the circular cone about the same axis with half-angle
    ``pi/2 - theta``.
    """

    axis: Jet
    theta: float
    variant = "circular_jet"

    def __post_init__(self):
        if not (0.0 <= self.theta <= pi / 2):
            raise PreconditionError("half-angle must lie in [0, pi/2]")
        if float(self.axis.norm()) <= 0:
            raise PreconditionError("axis must be nonzero")

    @property
    def n(self) -> int:
        return self.axis.n

    @property
    def directional(self) -> DirectionalCone:
        return DirectionalCone.full(self.n)

    def _unit_axis(self) -> Jet:
        return self.axis * (1.0 / float(self.axis.norm()))

    def margin(self, J: Jet) -> np.ndarray:
        return self._unit_axis().inner(J) - cos(self.theta) * J.norm()

    def polar(self) -> "CircularJetCone":
        return CircularJetCone(self.axis, pi / 2 - self.theta)

    def polar_margin(self, J: Jet) -> np.ndarray:
        return self.polar().margin(J)

    def interior_point(self) -> Jet:
        return self._unit_axis()

    def sample(self, rng, size: int, boundary: float = 0.25) -> Jet:
        n = self.n
        a = _jet_vector(self._unit_axis())
        on = rng.uniform(size=size) < boundary
        v = _cone_directions(rng, a, self.theta, (size,), on)
        return _vector_jet(v * _mags(rng, size)[:, None], n)

    def polar_sample(self, rng, size: int, boundary: float = 0.25) -> Jet:
        return self.polar().sample(rng, size, boundary)

    def describe(self) -> str:
        return f"C(J0, theta={self.theta:.6g})"

    def to_dict(self) -> dict:
        return {"variant": self.variant, "axis": self.axis.to_dict(), "theta": self.theta}


def _jet_vector(J: Jet) -> np.ndarray:
    """Isometric coordinates of a jet (off-diagonal entries weighted by sqrt 2)."""
    n = J.n
    iu = np.triu_indices(n, 1)
    w = np.sqrt(2.0)
    return np.concatenate([J.r[..., None], J.p, np.diagonal(J.A, axis1=-2, axis2=-1),
                           w * J.A[..., iu[0], iu[1]]], axis=-1)


def _vector_jet(v: np.ndarray, n: int) -> Jet:
    iu = np.triu_indices(n, 1)
    r = v[..., 0]
    p = v[..., 1:1 + n]
    diag = v[..., 1 + n:1 + 2 * n]
    off = v[..., 1 + 2 * n:] / np.sqrt(2.0)
    A = np.zeros(v.shape[:-1] + (n, n))
    A[..., np.arange(n), np.arange(n)] = diag
    A[..., iu[0], iu[1]] = off
    A[..., iu[1], iu[0]] = off
    return Jet(r, p, A)


def cone_from_dict(d: dict) -> MonotonicityCone:
    """Rebuild a cone from :meth:`MonotonicityCone.to_dict` output."""
    v = d.get("variant")
    if v == "fundamental":
        return FundamentalCone(_load_param(d["gamma"]), DirectionalCone.from_dict(d["D"]),
                               _load_param(d["R"]))
    if v == "sub_R":
        return SubRCone(int(d["n"]), float(d["R"]), _load_param(d.get("gamma", "free")))
    if v == "super_R":
        return SuperRCone(int(d["n"]), float(d["R"]), _load_param(d.get("gamma", "free")))
    if v == "pucci_R":
        return PucciCone(int(d["n"]), float(d["lam"]), float(d["Lam"]), float(d["R"]))
    if v == "delta_R":
        return DeltaRCone(int(d["n"]), float(d["R"]), float(d["delta"]))
    if v == "strict_elliptic":
        return StrictEllipticCone(float(d["lam"]), float(d["beta"]),
                                  DirectionalCone.from_dict(d["D"]))
    if v == "parabolic_star":
        return ParabolicCone(DirectionalCone.from_dict(d["D"]))
    if v == "circular_jet":
        return CircularJetCone(Jet.from_dict(d["axis"]), float(d["theta"]))
    raise PreconditionError(f"unknown cone variant {v!r}")


# named shortcuts

def cone_P(n: int) -> FundamentalCone:
    """``R x R^n x P``."""
    return FundamentalCone(FREE, DirectionalCone.full(n), INF)


def cone_NP(n: int) -> FundamentalCone:
    """``N x R^n x P``."""
    return FundamentalCone(0.0, DirectionalCone.full(n), INF)


def cone_N(n: int) -> FundamentalCone:
    """``N x R^n x S(n)``."""
    return FundamentalCone(0.0, DirectionalCone.full(n), FREE)


def cone_gamma(n: int, gamma: float) -> FundamentalCone:
    """``M(gamma)``: only ``r <= -gamma |p|``."""
    return FundamentalCone(gamma, DirectionalCone.full(n), FREE)


def cone_R(n: int, R: float) -> FundamentalCone:
    """``M(R)``: only ``A >= (|p| / R) I``."""
    return FundamentalCone(FREE, DirectionalCone.full(n), R)


def cone_D(D: DirectionalCone) -> FundamentalCone:
    """``M(D) = R x D x S(n)``."""
    return FundamentalCone(FREE, D, FREE)


def minimal_cone(n: int) -> FundamentalCone:
    """``M0 = N x {0} x P``, contained in every monotonicity cone."""
    return FundamentalCone(0.0, DirectionalCone.zero(n), INF)


# functional interface

def cone_member(M: MonotonicityCone, J: Jet, tol=None):
    return M.member(J, tol)


def cone_interior(M: MonotonicityCone, J: Jet, tol=None):
    return M.interior(J, tol)


def cone_dual_member(M: MonotonicityCone, J: Jet, tol=None):
    return M.dual_member(J, tol)


def polar_member(M: MonotonicityCone, J: Jet, tol=None):
    return M.polar_member(J, tol)


# embedding into the fundamental family

def _find_interior(M, rng, budget: int) -> Jet:
    n = M.n
    first = Jet(-1.0, np.zeros(n), np.eye(n))
    if bool(M.interior(first)):
        return first
    tried = 1
    chunk = 1000
    while tried < budget:
        m = min(chunk, budget - tried)
        J = random_jets(rng, n, m)
        ok = np.nonzero(M.interior(J))[0]
        if ok.size:
            return J[int(ok[0])]
        tried += m
    raise SearchFailure(f"no interior jet found in {budget} samples")


def fundamental_embed(M, probe: Jet | None = None, seed: int | None = 42,
                      budget: int = 100_000, n_directions: int = 256) -> FundamentalCone:
    """Find ``(gamma, D, R)`` with ``M(gamma, D, R)`` contained in ``M``.

    Parameters
    ----------
    M : object with ``n`` and a batched ``interior(J)`` predicate
        A monotonicity cone subequation.
    probe : Jet, optional
        An interior jet; when absent or not interior one is searched for,
        starting with ``(-1, 0, I)``.

    Returns
    -------
    FundamentalCone
        ``D`` is the circular cone spanned by a ball ``B_delta(p)`` around
        the gradient of an interior jet, ``R`` is half of
        ``delta / t0`` and ``gamma = 1 / R``.
    """
    rng = make_rng(seed)
    n = M.n
    J = probe if probe is not None and bool(M.interior(probe)) else _find_interior(M, rng, budget)
    r, p, A = float(J.r), np.array(J.p, dtype=float), J.A

    # make the gradient nonzero while staying interior
    if np.linalg.norm(p) <= 1e-12 * (1 + float(J.norm())):
        found = False
        eta = 1.0
        for _ in range(60):
            dirs = _random_units(rng, n, (20,))
            cand = Jet(np.full(20, r), eta * dirs, np.broadcast_to(A, (20, n, n)))
            ok = np.nonzero(M.interior(cand))[0]
            if ok.size:
                p = eta * dirs[ok[0]]
                found = True
                break
            eta /= 2
        if not found:
            raise SearchFailure("could not perturb the probe to a nonzero gradient")

    pn = float(np.linalg.norm(p))
    dirs = np.concatenate([np.eye(n), -np.eye(n), _random_units(rng, n, (n_directions,))])
    k = len(dirs)
    delta = pn / 2
    for _ in range(60):
        cand = Jet(np.full(k, r), p + delta * dirs, np.broadcast_to(A, (k, n, n)))
        if np.all(M.interior(cand)):
            break
        delta /= 2
    else:
        raise SearchFailure("no interior ball around the probe gradient")
    delta /= 2
    t0 = 1.1 * max(float(np.max(sym_eigs(A))), -r, 1e-12)
    eps = delta / t0
    R = eps / 2
    D = DirectionalCone.circular(p, asin(delta / pn))
    return FundamentalCone(1.0 / R, D, R)


# strict approximators

@dataclass
class Approximator:
    """A closed-form function with an exact jet formula.

    ``jet(x)`` accepts points of shape ``(..., n)``.
    """

    kind: str
    params: dict
    center: np.ndarray
    jet: Callable[[np.ndarray], Jet]
    formula: str = ""

    def value(self, x) -> np.ndarray:
        return self.jet(x).r

    def to_dict(self) -> dict:
        return {"kind": self.kind, "params": self.params, "center": self.center.tolist(),
                "formula": self.formula}


def _quadratic_approximator(y: np.ndarray, c: float) -> Approximator:
    n = y.size

    def jet(x):
        d = np.asarray(x, dtype=float) - y
        return Jet(-c + 0.5 * np.sum(d * d, -1), d, np.eye(n))

    return Approximator("quadratic", {"c": c}, y, jet, "-c + |x - y|^2 / 2")


def _monomial_approximator(y: np.ndarray, m: float, shift: float) -> Approximator:
    prof = RadialProfile(lambda t: t ** (m + 1) / (m + 1) - shift, lambda t: t ** m,
                         lambda t: m * t ** (m - 1), name=f"t^{m + 1:g}/{m + 1:g}")
    return Approximator("monomial", {"m": m, "C": shift}, y,
                        lambda x: radial_jet(prof, x, y), "|x - y|^(m+1) / (m+1) - C")


def _exponential_approximator(y: np.ndarray, mu: float, shift: float) -> Approximator:
    prof = RadialProfile(lambda t: np.exp(mu * t) / mu - shift, lambda t: np.exp(mu * t),
                         lambda t: mu * np.exp(mu * t), name=f"exp({mu:g}t)/{mu:g}")
    return Approximator("exponential", {"mu": mu, "m": shift}, y,
                        lambda x: radial_jet(prof, x, y), "exp(mu |x - y|) / mu - m")


def _apex_for(D: DirectionalCone, grid: GridDomain) -> tuple[np.ndarray, float]:
    """Apex ``y`` with the domain inside ``y + Int D`` and the largest distance from it."""
    rho = grid.bounding_radius
    if D.is_full:
        return grid.center.copy(), rho
    a, ang = D.axis_angle()
    s = 1.05 * rho / sin(min(ang, pi / 2))
    return grid.center - s * a, s + rho


def smallest_exponent(M: MonotonicityCone, rho: float) -> float:
    """Smallest integer exponent making the radial monomial strict on ``B_rho``."""
    n = M.n
    if isinstance(M, SubRCone):
        thr = (rho / M.R) ** n
    elif isinstance(M, SuperRCone):
        thr = 1.0 + rho ** 2 / (4 * M.R ** 2)
    elif isinstance(M, PucciCone):
        thr = 1.0 + n * (rho / M.R - 1.0)
    elif isinstance(M, DeltaRCone):
        thr = 1.0 - n + (rho - M.R) / (M.delta * M.R)
    else:
        raise CapabilityError(f"no radial monomial rule for {M.describe()}")
    return float(max(1, np.floor(thr) + 1))


def strict_approximator(M: MonotonicityCone, grid: GridDomain, m: float | None = None
                        ) -> tuple[Approximator, VerificationReport]:
    """Build a strict approximator for ``M`` and check it on the grid.

    Quadratics serve the fundamental family, radial monomials the enlarged
    ``R`` cones and a radial exponential the strictly elliptic cones.
    Radial formulas are singular at their center; grid points there are
    skipped and counted in the report. A grid jet counts as strictly
    interior when its margin is positive; radial monomials of high degree
    have tiny margins near the center, so the report also records the
    fraction clearing the usual membership tolerance.

    Raises
    ------
    InfeasibleError
        When a finite-``R`` fundamental cone cannot cover the domain: the
        domain must fit in ``y + D`` inside a ball of radius ``R`` around
        ``y``.
    CapabilityError
        For cone variants without a construction.
    """
    if grid.n != M.n:
        raise PreconditionError("grid and cone dimensions differ")
    if isinstance(M, FundamentalCone):
        y, rho_b = _apex_for(M.directional, grid)
        if M.R not in (FREE, INF) and rho_b > M.R:
            raise InfeasibleError(
                f"domain needs radius {rho_b:.6g} from the apex but R = {M.R:.6g}; "
                "comparison for this cone is only available on small domains")
        g = 0.0 if M.gamma is FREE else M.gamma
        approx = _quadratic_approximator(y, rho_b ** 2 / 2 + g * rho_b + 1.0)
    elif isinstance(M, (SubRCone, SuperRCone, PucciCone, DeltaRCone)):
        y = grid.center.copy()
        rho = grid.bounding_radius
        if m is None:
            m = smallest_exponent(M, rho)
        g = getattr(M, "gamma", FREE)
        shift = 0.0 if g is FREE else rho ** (m + 1) / (m + 1) + g * rho ** m + 1.0
        approx = _monomial_approximator(y, float(m), shift)
    elif isinstance(M, StrictEllipticCone):
        y, rho_b = _apex_for(M.directional, grid)
        mu = M.beta / M.lam + 1.0
        approx = _exponential_approximator(y, mu, np.exp(mu * rho_b) / mu + 1.0)
    else:
        raise CapabilityError(f"no strict approximator construction for {M.describe()}")

    pts = grid.points
    dist = np.linalg.norm(pts - approx.center, axis=-1)
    singular = dist <= 0 if approx.kind != "quadratic" else np.zeros(len(pts), bool)
    pts = pts[~singular]
    J = approx.jet(pts)
    marg = M.margin(J)
    interior = marg > 0
    above_tol = marg > J.tolerance()
    worst = int(np.argmin(marg)) if len(pts) else None
    report = VerificationReport(
        passed=bool(np.all(interior)) and len(pts) > 0,
        n_samples=len(pts),
        worst_margin=float(marg[worst]) if worst is not None else float("nan"),
        witness=None if worst is None or interior[worst] else J[worst],
        details={"cone": M.describe(), "approximator": approx.to_dict(),
                 "domain": grid.describe(), "skipped_center_points": int(singular.sum()),
                 "fraction_interior": float(np.mean(interior)) if len(pts) else 0.0,
                 "fraction_above_tolerance": float(np.mean(above_tol)) if len(pts) else 0.0},
        rows=[{"x": x, "margin": float(mg), "verdict": "interior" if ok else "not_interior"}
              for x, mg, ok in zip(pts, marg, interior)],
    )
    return approx, report
