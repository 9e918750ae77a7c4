"""Second order jets, symmetric eigenvalues and radial or finite-difference jets.

A :class:`Jet` stores a value ``r``, a gradient ``p`` and a symmetric Hessian
``A``. Every field may carry leading batch dimensions, so one object can hold
the jets of a function at all points of a grid.
"""
from __future__ import annotations

from dataclasses import dataclass
from typing import Callable, Iterable, Sequence

import numpy as np

from .errors import DomainError, EvaluationError, PreconditionError

SYM_RTOL = 1e-9


def sym_tolerance(A: np.ndarray) -> np.ndarray:
    """Symmetry tolerance ``1e-9 * (1 + ||A||)`` for a matrix or a stack."""
    A = np.asarray(A, dtype=float)
    return SYM_RTOL * (1.0 + np.linalg.norm(A, axis=(-2, -1)))


def symmetrize(A, check: bool = True) -> np.ndarray:
    """Return ``(A + A^T) / 2`` after checking near symmetry.

    Raises
    ------
    PreconditionError
        If ``A`` is not square or is asymmetric beyond the tolerance.
    """
    A = np.asarray(A, dtype=float)
    if A.ndim < 2 or A.shape[-1] != A.shape[-2]:
        raise PreconditionError(f"expected square matrices, got shape {A.shape}")
    At = np.swapaxes(A, -1, -2)
    if check:
        skew = np.max(np.abs(A - At), axis=(-2, -1)) if A.size else np.zeros(A.shape[:-2])
        if np.any(skew > sym_tolerance(A)):
            raise PreconditionError("matrix is not symmetric within tolerance")
    return 0.5 * (A + At)


def sym_eigs(A) -> np.ndarray:
    """Ascending eigenvalues of a symmetric matrix (or a stack of them)."""
    return np.linalg.eigvalsh(symmetrize(A))


def sym_eigh(A) -> tuple[np.ndarray, np.ndarray]:
    """Ascending eigenvalues and orthonormal eigenvectors (columns)."""
    return np.linalg.eigh(symmetrize(A))


def lambda_min(A) -> np.ndarray:
    return sym_eigs(A)[..., 0]


def lambda_max(A) -> np.ndarray:
    return sym_eigs(A)[..., -1]


def projections(x) -> tuple[np.ndarray, np.ndarray]:
    """Orthogonal projections onto the line through ``x`` and its complement.

    Parameters
    ----------
    x : array_like, shape (..., n)
        Nonzero vectors.

    Returns
    -------
    P_x, P_perp : ndarray, shape (..., n, n)
    """
    x = np.asarray(x, dtype=float)
    norm2 = np.sum(x * x, axis=-1)
    if np.any(norm2 <= 0.0):
        raise DomainError("projection onto the span of the zero vector")
    P = x[..., :, None] * x[..., None, :] / norm2[..., None, None]
    eye = np.eye(x.shape[-1])
    return P, eye - P


@dataclass(frozen=True)
class Jet:
    """A 2-jet ``(r, p, A)`` in R x R^n x S(n), possibly batched.

    Construct with ``Jet(r, p, A)``; inputs are converted to float arrays,
    checked for consistent shapes and symmetrized.
    """

    r: np.ndarray
    p: np.ndarray
    A: np.ndarray

    def __post_init__(self):
        r = np.asarray(self.r, dtype=float)
        p = np.asarray(self.p, dtype=float)
        A = np.asarray(self.A, dtype=float)
        if p.ndim < 1:
            raise PreconditionError("gradient slot must be a vector")
        n = p.shape[-1]
        if A.shape[-2:] != (n, n):
            raise PreconditionError(f"Hessian shape {A.shape} does not match n={n}")
        batch = np.broadcast_shapes(r.shape, p.shape[:-1], A.shape[:-2])
        object.__setattr__(self, "r", np.broadcast_to(r, batch).copy() if r.shape != batch else r)
        object.__setattr__(self, "p", np.broadcast_to(p, batch + (n,)).copy() if p.shape[:-1] != batch else p)
        A = np.broadcast_to(A, batch + (n, n)) if A.shape[:-2] != batch else A
        object.__setattr__(self, "A", symmetrize(A))

    # construction helpers
    @classmethod
    def zero(cls, n: int) -> "Jet":
        return cls(0.0, np.zeros(n), np.zeros((n, n)))

    @classmethod
    def stack(cls, jets: Sequence["Jet"]) -> "Jet":
        return cls(np.stack([j.r for j in jets]), np.stack([j.p for j in jets]),
                   np.stack([j.A for j in jets]))

    @property
    def n(self) -> int:
        return self.p.shape[-1]

    @property
    def batch_shape(self) -> tuple:
        return self.r.shape

    def __len__(self) -> int:
        if not self.batch_shape:
            raise TypeError("a single jet has no length")
        return self.batch_shape[0]

    def __getitem__(self, idx) -> "Jet":
        if not self.batch_shape:
            raise TypeError("a single jet is not indexable")
        return Jet(self.r[idx], self.p[idx], self.A[idx])

    def __iter__(self):
        for i in range(len(self)):
            yield self[i]

    # linear structure
    def __add__(self, other: "Jet") -> "Jet":
        return Jet(self.r + other.r, self.p + other.p, self.A + other.A)

    def __sub__(self, other: "Jet") -> "Jet":
        return Jet(self.r - other.r, self.p - other.p, self.A - other.A)

    def __neg__(self) -> "Jet":
        return Jet(-self.r, -self.p, -self.A)

    def __mul__(self, t) -> "Jet":
        t = np.asarray(t, dtype=float)
        return Jet(t * self.r, t[..., None] * self.p, t[..., None, None] * self.A)

    __rmul__ = __mul__

    def inner(self, other: "Jet") -> np.ndarray:
        """Inner product ``r s + <p, q> + tr(A B)``."""
        return (self.r * other.r + np.sum(self.p * other.p, axis=-1)
                + np.sum(self.A * other.A, axis=(-2, -1)))

    def norm(self) -> np.ndarray:
        return np.sqrt(self.inner(self))

    def tolerance(self, rel: float = 1e-9) -> np.ndarray:
        """Membership tolerance ``rel * (1 + ||J||)``."""
        return rel * (1.0 + self.norm())

    def allclose(self, other: "Jet", atol: float = 1e-12) -> bool:
        return (np.allclose(self.r, other.r, atol=atol) and np.allclose(self.p, other.p, atol=atol)
                and np.allclose(self.A, other.A, atol=atol))

    def to_dict(self) -> dict:
        return {"r": self.r.tolist(), "p": self.p.tolist(), "A": self.A.tolist()}

    @classmethod
    def from_dict(cls, d: dict) -> "Jet":
        try:
            return cls(d["r"], d["p"], d["A"])
        except KeyError as exc:
            raise PreconditionError(f"jet dictionary is missing key {exc}") from None

    def __repr__(self) -> str:
        if self.batch_shape:
            return f"Jet(batch={self.batch_shape}, n={self.n})"
        return f"Jet(r={float(self.r):.6g}, p={np.array2string(self.p, precision=6)}, A={np.array2string(self.A, precision=6)})"


@dataclass(frozen=True)
class RadialProfile:
    """A profile ``psi`` with its first two derivatives, evaluated on ``t > 0``.

    The callables must accept numpy arrays.
    """

    psi: Callable[[np.ndarray], np.ndarray]
    dpsi: Callable[[np.ndarray], np.ndarray]
    d2psi: Callable[[np.ndarray], np.ndarray]
    name: str = "profile"

    def __call__(self, t):
        return self.psi(np.asarray(t, dtype=float))

    def derivatives(self, t) -> tuple[np.ndarray, np.ndarray, np.ndarray]:
        t = np.asarray(t, dtype=float)
        vals = self.psi(t), self.dpsi(t), self.d2psi(t)
        vals = tuple(np.broadcast_to(np.asarray(v, dtype=float), t.shape) for v in vals)
        if not all(np.all(np.isfinite(v)) for v in vals):
            raise EvaluationError(f"{self.name}: non-finite profile values")
        return vals


def power_profile(k: float, scale: float = 1.0, shift: float = 0.0) -> RadialProfile:
    """``psi(t) = scale * t**k + shift``."""
    return RadialProfile(
        lambda t: scale * t ** k + shift,
        lambda t: scale * k * t ** (k - 1),
        lambda t: scale * k * (k - 1) * t ** (k - 2),
        name=f"{scale:g}*t^{k:g}+{shift:g}",
    )


def exp_profile(alpha: float, scale: float = 1.0, shift: float = 0.0) -> RadialProfile:
    """``psi(t) = scale * exp(alpha t) + shift``."""
    return RadialProfile(
        lambda t: scale * np.exp(alpha * t) + shift,
        lambda t: scale * alpha * np.exp(alpha * t),
        lambda t: scale * alpha ** 2 * np.exp(alpha * t),
        name=f"{scale:g}*exp({alpha:g}t)+{shift:g}",
    )


def radial_jet(profile: RadialProfile, x, center=None) -> Jet:
    """Jet of ``u(x) = psi(|x - center|)`` at ``x`` (shape ``(..., n)``).

    Raises
    ------
    DomainError
        At the center, where the radial formulas are singular.
    """
    x = np.asarray(x, dtype=float)
    y = x if center is None else x - np.asarray(center, dtype=float)
    t = np.linalg.norm(y, axis=-1)
    if np.any(t <= 0.0):
        raise DomainError("radial jet requested at the center")
    P, Pperp = projections(y)
    f, df, d2f = profile.derivatives(t)
    p = (df / t)[..., None] * y
    A = (df / t)[..., None, None] * Pperp + d2f[..., None, None] * P
    return Jet(f, p, A)


def quadratic(J: Jet, x0=None) -> Callable[[np.ndarray], float]:
    """The quadratic ``Q_J(x) = r + <p, x - x0> + <A (x - x0), x - x0> / 2``."""
    x0 = np.zeros(J.n) if x0 is None else np.asarray(x0, dtype=float)

    def Q(x):
        d = np.asarray(x, dtype=float) - x0
        return J.r + d @ J.p + 0.5 * np.einsum("...i,ij,...j->...", d, J.A, d)

    return Q


def default_step(x) -> float:
    return 1e-4 * (1.0 + float(np.linalg.norm(x)))


def fd_jet(f: Callable[[np.ndarray], float], x, h: float | None = None) -> Jet:
    """Central-difference jet of a scalar function at a single point.

    Parameters
    ----------
    f : callable
        Scalar function of an ``n``-vector.
    x : array_like, shape (n,)
    h : float, optional
        Step; defaults to ``1e-4 * (1 + |x|)``.
    """
    x = np.asarray(x, dtype=float)
    n = x.shape[-1]
    h = default_step(x) if h is None else float(h)
    if h <= 0:
        raise PreconditionError("finite-difference step must be positive")
    eye = np.eye(n) * h

    def ev(z):
        v = float(f(z))
        if not np.isfinite(v):
            raise EvaluationError(f"non-finite sample at {z}")
        return v

    f0 = ev(x)
    plus = np.array([ev(x + eye[i]) for i in range(n)])
    minus = np.array([ev(x - eye[i]) for i in range(n)])
    p = (plus - minus) / (2 * h)
    A = np.empty((n, n))
    for i in range(n):
        A[i, i] = (plus[i] - 2 * f0 + minus[i]) / h ** 2
        for j in range(i + 1, n):
            fpp = ev(x + eye[i] + eye[j])
            fpm = ev(x + eye[i] - eye[j])
            fmp = ev(x - eye[i] + eye[j])
            fmm = ev(x - eye[i] - eye[j])
            A[i, j] = A[j, i] = (fpp - fpm - fmp + fmm) / (4 * h ** 2)
    return Jet(f0, p, A)


# sampling

def random_orthogonal(rng: np.random.Generator, n: int, size: tuple = ()) -> np.ndarray:
    """Haar-distributed orthogonal matrices via QR of Gaussian samples."""
    G = rng.standard_normal(size + (n, n))
    Q, R = np.linalg.qr(G)
    d = np.sign(np.diagonal(R, axis1=-2, axis2=-1))
    d[d == 0] = 1.0
    return Q * d[..., None, :]


def _magnitudes(rng, size):
    return 10.0 ** rng.uniform(-1.0, 1.0, size)


def random_symmetric(rng: np.random.Generator, n: int, size: tuple = (), psd: bool = False) -> np.ndarray:
    """Random symmetric matrices ``Q diag(lam) Q^T`` with random scale."""
    lam = rng.uniform(0.0 if psd else -1.0, 1.0, size + (n,)) * _magnitudes(rng, size)[..., None]
    Q = random_orthogonal(rng, n, size)
    return np.einsum("...ij,...j,...kj->...ik", Q, lam, Q)


def random_jets(rng: np.random.Generator, n: int, size: int | tuple = ()) -> Jet:
    """Random jets: r and p entries uniform in [-1, 1] times 10**U[-1, 1]."""
    size = (size,) if isinstance(size, int) else tuple(size)
    r = rng.uniform(-1.0, 1.0, size) * _magnitudes(rng, size)
    p = rng.uniform(-1.0, 1.0, size + (n,)) * _magnitudes(rng, size)[..., None]
    return Jet(r, p, random_symmetric(rng, n, size))


def make_rng(seed: int | None = 42) -> np.random.Generator:
    return np.random.default_rng(seed)


def identity_jet(n: int, r: float = 0.0, scale: float = 1.0) -> Jet:
    """``(r, 0, scale * I)``."""
    return Jet(r, np.zeros(n), scale * np.eye(n))


def as_jets(items: Iterable[Jet]) -> Jet:
    return Jet.stack(list(items))
