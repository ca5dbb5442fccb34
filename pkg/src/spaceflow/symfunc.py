"""Elementary symmetric functions, Newton tensors and Garding cones.

All functions accept a trailing axis of principal curvatures and broadcast
over any leading batch axes, so a whole grid of nodes is processed at once.
"""

from __future__ import annotations

from dataclasses import dataclass
from math import comb
from typing import NamedTuple

import numpy as np

__all__ = [
    "ConeViolation",
    "ShapeOperator",
    "sigma_all",
    "sigma",
    "H_k",
    "H_all",
    "sigma_deleted",
    "gamma_cone",
    "newton_tensor",
    "newton_maclaurin_check",
    "quotient_derivative",
    "quotient_derivative_pd",
    "EQUALITY_GAP_TOL",
    "ISOTROPY_TOL",
]

EQUALITY_GAP_TOL = 1e-12
ISOTROPY_TOL = 1e-6


class ConeViolation(ValueError):
    """Curvatures lie outside the Garding cone required by an operation."""


def _as_kappa(kappa):
    kappa = np.asarray(kappa, dtype=float)
    if kappa.ndim == 0 or kappa.shape[-1] < 2:
        raise ValueError("need at least two principal curvatures")
    if not np.all(np.isfinite(kappa)):
        raise ValueError("principal curvatures must be finite")
    return kappa


def sigma_all(kappa):
    """Coefficients ``sigma_0..sigma_m`` of ``prod_i (1 + t kappa_i)``.

    One pass of the polynomial-expansion recurrence per curvature; shape
    ``(..., m)`` in, ``(..., m + 1)`` out.
    """
    return _sigma_raw(_as_kappa(kappa))


def _sigma_raw(kappa):
    m = kappa.shape[-1]
    e = np.zeros(kappa.shape[:-1] + (m + 1,))
    e[..., 0] = 1.0
    for i in range(m):
        e[..., 1:i + 2] = e[..., 1:i + 2] + kappa[..., i, None] * e[..., 0:i + 1]
    return e


def sigma(kappa, k: int):
    """``sigma_k``; zero for ``k > m`` and one for ``k == 0``."""
    kappa = _as_kappa(kappa)
    m = kappa.shape[-1]
    if k < 0:
        raise ValueError("order must be non-negative")
    if k > m:
        return np.zeros(kappa.shape[:-1])
    return sigma_all(kappa)[..., k]


def H_all(kappa):
    """Normalized mean curvatures ``H_0..H_m`` with ``H_k = sigma_k / C(m, k)``."""
    s = sigma_all(kappa)
    m = s.shape[-1] - 1
    return s / np.array([comb(m, k) for k in range(m + 1)], dtype=float)


def H_k(kappa, k: int):
    kappa = _as_kappa(kappa)
    m = kappa.shape[-1]
    if int(k) != k or not 0 <= k <= m:
        raise ValueError(f"order k must be an integer in [0, {m}], got {k!r}")
    return sigma_all(kappa)[..., k] / comb(m, k)


def sigma_deleted(kappa):
    """``out[..., i, j] = sigma_j(kappa with kappa_i removed)``, ``j = 0..m-1``."""
    kappa = _as_kappa(kappa)
    m = kappa.shape[-1]
    parts = [_sigma_raw(np.delete(kappa, i, axis=-1)) for i in range(m)]
    return np.stack(parts, axis=-2)


class ConeMembership(NamedTuple):
    member: bool | np.ndarray
    margin: float | np.ndarray


def gamma_cone(kappa, k: int) -> ConeMembership:
    """Membership in ``Gamma_k^+`` (``sigma_1..sigma_k > 0``) with margin ``min_j sigma_j``."""
    kappa = _as_kappa(kappa)
    m = kappa.shape[-1]
    if not 1 <= k <= m:
        raise ValueError(f"cone order must lie in [1, {m}]")
    margin = sigma_all(kappa)[..., 1:k + 1].min(axis=-1)
    member = margin > 0
    if margin.ndim == 0:
        return ConeMembership(bool(member), float(margin))
    return ConeMembership(member, margin)


@dataclass(frozen=True)
class ShapeOperator:
    """Weingarten map ``h_i^j = g^{jk} h_ik`` as a mixed-index matrix.

    ``metric`` is the induced metric in the same coordinates; ``None`` means
    an orthonormal frame, in which case ``matrix`` must be symmetric.
    """

    matrix: np.ndarray
    metric: np.ndarray | None = None

    def __post_init__(self):
        S = np.asarray(self.matrix, dtype=float)
        if S.ndim != 2 or S.shape[0] != S.shape[1] or S.shape[0] < 2:
            raise ValueError("shape operator must be a square matrix of size >= 2")
        object.__setattr__(self, "matrix", S)
        if self.metric is not None:
            object.__setattr__(self, "metric", np.asarray(self.metric, dtype=float))

    @property
    def dim(self) -> int:
        return self.matrix.shape[0]

    def symmetrized(self) -> np.ndarray:
        """Representation in a ``g``-orthonormal frame, symmetric to rounding."""
        S = self.matrix
        if self.metric is not None:
            L = np.linalg.cholesky(self.metric)
            S = L.T @ S @ np.linalg.inv(L.T)
        scale = max(np.abs(S).max(), 1e-300)
        defect = np.abs(S - S.T).max() / scale
        if defect > 1e-10:
            raise ValueError(f"operator is not self-adjoint (defect {defect:.2e})")
        return 0.5 * (S + S.T)

    def eigenvalues(self) -> np.ndarray:
        return np.linalg.eigvalsh(self.symmetrized())


def _matrix(S):
    if isinstance(S, ShapeOperator):
        return S.matrix, S.eigenvalues()
    S = ShapeOperator(S)
    return S.matrix, S.eigenvalues()


def newton_tensor(S, k: int) -> np.ndarray:
    """Newton transformation ``T_k`` by ``T_k = sigma_k I - T_{k-1} S``, ``T_0 = I``."""
    M, kappa = _matrix(S)
    m = M.shape[0]
    if int(k) != k or not 0 <= k <= m - 1:
        raise ValueError(f"Newton tensor order must lie in [0, {m - 1}]")
    s = sigma_all(kappa)
    eye = np.eye(m)
    T = eye.copy()
    for j in range(1, k + 1):
        T = s[j] * eye - T @ M
    return T


class NewtonMaclaurin(NamedTuple):
    holds: bool
    gap: float
    equality: bool


def newton_maclaurin_check(kappa, l: int, k: int, gap_tol: float = EQUALITY_GAP_TOL,
                           iso_tol: float = ISOTROPY_TOL) -> NewtonMaclaurin:
    """Check ``H_l H_k >= H_{l-1} H_{k+1}`` for ``kappa`` in ``Gamma_k^+``.

    ``gap`` is ``H_l H_k - H_{l-1} H_{k+1}``.  Equality is flagged when the
    gap is within ``gap_tol`` of zero relative to ``max|kappa|^(k+l)`` and
    all curvatures agree with their mean to ``iso_tol``.
    """
    kappa = _as_kappa(kappa)
    if kappa.ndim != 1:
        raise ValueError("expects a single curvature vector")
    m = kappa.size
    if not 1 <= l <= k <= m:
        raise ValueError(f"need 1 <= l <= k <= {m}")
    member, margin = gamma_cone(kappa, k)
    if not member:
        raise ConeViolation(f"curvatures not in Gamma_{k}^+ (min sigma_j = {margin:.3e})")
    H = np.append(H_all(kappa), 0.0)
    gap = float(H[l] * H[k] - H[l - 1] * H[k + 1])
    scale = float(np.abs(kappa).max()) ** (k + l)
    mean = kappa.mean()
    isotropic = bool(np.all(np.abs(kappa - mean) <= iso_tol * abs(mean)))
    equality = bool(abs(gap) <= gap_tol * scale and isotropic)
    return NewtonMaclaurin(gap >= -1e-14 * scale, gap, equality)


def quotient_derivative(S, k: int) -> np.ndarray:
    """Matrix ``d(H_k / H_{k-1}) / dS[a, b]`` from ``d sigma_j / dS = T_{j-1}^T``."""
    M, kappa = _matrix(S)
    m = M.shape[0]
    if not 1 <= k <= m:
        raise ValueError(f"order must lie in [1, {m}]")
    member, margin = gamma_cone(kappa, k)
    if not member:
        raise ConeViolation(f"curvatures not in Gamma_{k}^+ (min sigma_j = {margin:.3e})")
    H = H_all(kappa)
    dHk = newton_tensor(M, k - 1).T / comb(m, k)
    dHk1 = newton_tensor(M, k - 2).T / comb(m, k - 1) if k >= 2 else np.zeros((m, m))
    return (dHk * H[k - 1] - H[k] * dHk1) / H[k - 1] ** 2


class QuotientReport(NamedTuple):
    derivative: np.ndarray
    min_eigenvalue: float
    positive_definite: bool


def quotient_derivative_pd(S, k: int) -> QuotientReport:
    """Derivative of ``H_k / H_{k-1}`` and whether it is positive definite."""
    D = quotient_derivative(S, k)
    Ds = 0.5 * (D + D.T)
    lo = float(np.linalg.eigvalsh(Ds).min())
    return QuotientReport(Ds, lo, lo > 0)
