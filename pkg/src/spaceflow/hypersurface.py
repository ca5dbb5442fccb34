"""Discrete radial-graph hypersurfaces over the unit sphere in ``N^n(eps)``.

A star-shaped hypersurface is written as ``{(rho(x), x) : x in S^(n-1)}``.
With ``phi' = rho'/lam(rho)`` and ``v = sqrt(1 + |D phi|^2)`` (norms in the
round metric ``sigma``) the standard warped-product graph formulas are

    g_ij = lam^2 (sigma_ij + phi_i phi_j)
    h_ij = (lam / v) (lam' (sigma_ij + phi_i phi_j) - phi_;ij)
    u    = lam / v,       d(mu) = lam^(n-1) v d(sigma)

where ``phi_;ij`` is the covariant Hessian on the round sphere.  Two
representations are provided:

* :class:`ProfileGraph`: a rotationally symmetric profile ``rho(theta)`` on a
  uniform grid of ``[0, pi]``, any ``n >= 3``.  The meridian curvature is
  simple, the azimuthal one has multiplicity ``n - 2``.  Derivatives use
  fourth-order central differences with even reflection across the poles
  (or a cosine-series derivative), integrals a polar quadrature that is
  exact for cosine polynomials of degree ``N`` against ``sin^(n-2)``.
* :class:`SphereGraph`: a full latitude-longitude grid over ``S^2`` (``n = 3``)
  with second-order differences and a product trapezoid rule; used as an
  independent cross-check of the profile pipeline.
"""

from __future__ import annotations

import json
import math
from dataclasses import dataclass, field
from functools import lru_cache
from math import comb
from pathlib import Path
from typing import NamedTuple

import numpy as np
from scipy import fft

from .spaceform import SpaceForm, radial_integral, sphere_area
from .symfunc import gamma_cone, sigma_all, sigma_deleted

__all__ = [
    "ProfileGraph",
    "SphereGraph",
    "PointwiseGeometry",
    "ConvexityReport",
    "BulkIntegrals",
    "geometry",
    "curvature_integral",
    "weighted_curvature_integral",
    "quermassintegrals",
    "bulk_integrals",
    "convexity_classify",
    "minkowski_residual",
    "divergence_identity_residual",
    "hessian_identity_residual",
    "gradient_identity_residual",
    "polar_weights",
    "save_shape",
    "load_shape",
    "shape_to_dict",
    "shape_from_dict",
    "RHO_FLOOR",
]

# Smallest admissible radius: the origin must be strictly enclosed.
RHO_FLOOR = 1e-6


# ---------------------------------------------------------------------------
# one-dimensional machinery on [0, pi]
# ---------------------------------------------------------------------------

def _polar_moments(N: int, n: int) -> np.ndarray:
    """``int_0^pi cos(m t) sin(t)^(n-2) dt`` for ``m = 0..N``, exactly."""
    m = np.arange(N + 1)
    p = n - 2
    if p % 2 == 1:
        # x = cos t turns the integrand into the polynomial T_m(x) (1 - x^2)^((p-1)/2)
        q = (N + p) // 2 + 2
        x, w = np.polynomial.legendre.leggauss(q)
        t = np.arccos(x)
        vals = np.cos(np.outer(m, t)) * (1 - x * x) ** ((p - 1) // 2)
        return vals @ w
    # even power: trig polynomial of degree m + p, trapezoid on the full circle is exact
    M = 2 * (N + p) + 4
    t = 2 * np.pi * np.arange(M) / M
    vals = np.cos(np.outer(m, t)) * np.sin(t) ** p
    return 0.5 * vals.sum(axis=1) * (2 * np.pi / M)


@lru_cache(maxsize=64)
def polar_weights(N: int, n: int) -> np.ndarray:
    """Weights ``w_j`` on ``theta_j = j pi / N`` with ``sum w_j F_j = int_0^pi F sin^(n-2)``.

    Exact whenever ``F`` is a cosine polynomial of degree ``<= N``, hence
    spectrally accurate for smooth functions on ``S^(n-1)`` that depend on
    the polar angle only.
    """
    mu = _polar_moments(N, n)
    mu[0] *= 0.5
    mu[N] *= 0.5
    theta = np.pi * np.arange(N + 1) / N
    w = (2.0 / N) * (np.cos(np.outer(theta, np.arange(N + 1))) @ mu)
    w[0] *= 0.5
    w[N] *= 0.5
    w.setflags(write=False)
    return w


def _fd4_even(f: np.ndarray, h: float):
    """First and second derivatives of an even-about-both-poles grid function."""
    ext = np.concatenate([f[2:0:-1], f, f[-2:-4:-1]])
    fm2, fm1, f0, fp1, fp2 = ext[:-4], ext[1:-3], ext[2:-2], ext[3:-1], ext[4:]
    # differences first, so constants differentiate to exactly zero
    d1 = (8 * (fp1 - fm1) - (fp2 - fm2)) / (12 * h)
    d2 = (16 * ((fp1 - f0) + (fm1 - f0)) - ((fp2 - f0) + (fm2 - f0))) / (12 * h * h)
    return d1, d2


def _spectral_even(f: np.ndarray):
    """Cosine-series first and second derivatives on ``theta_j = j pi / N``."""
    N = f.size - 1
    a = fft.dct(f, type=1) / N
    m = np.arange(N + 1, dtype=float)
    a[N] = 0.0  # drop the Nyquist mode
    d2 = 0.5 * fft.dct(-m * m * a, type=1)
    d1 = np.zeros_like(f)
    d1[1:-1] = -0.5 * fft.dst(m[1:-1] * a[1:-1], type=1)
    return d1, d2


def _derivatives(f: np.ndarray, method: str):
    N = f.size - 1
    if method == "fd4":
        return _fd4_even(f, np.pi / N)
    if method == "spectral":
        return _spectral_even(f)
    raise ValueError(f"unknown derivative method {method!r}")


def _cot_times(x: np.ndarray, dx: np.ndarray, theta: np.ndarray) -> np.ndarray:
    """``cot(theta) * x`` for ``x`` vanishing at the poles, with the limit ``x'`` there."""
    out = np.empty_like(x)
    out[1:-1] = x[1:-1] / np.tan(theta[1:-1])
    out[0] = dx[0]
    out[-1] = dx[-1]
    return out


def _check_rho(rho: np.ndarray, form: SpaceForm):
    if not np.all(np.isfinite(rho)):
        raise ValueError("radial values must be finite")
    if rho.min() < RHO_FLOOR:
        raise ValueError(f"radial values must stay above {RHO_FLOOR} (origin enclosed), min {rho.min()!r}")
    if form.epsilon == 1 and rho.max() >= form.r_upper:
        raise ValueError("radial values reach the antipode of the origin")


# ---------------------------------------------------------------------------
# pointwise geometry
# ---------------------------------------------------------------------------

@dataclass(eq=False)
class PointwiseGeometry:
    """Per-node geometry of a discrete hypersurface.

    ``kappa`` has one column per principal direction (``n - 1`` columns);
    ``grad_phi`` holds the components of the tangential gradient of ``Phi``
    in the same orthonormal principal frame.  ``area_weight`` integrates
    against ``d(mu)``; ``sphere_weight`` is the weight of the underlying
    node on the unit sphere, used for radial volume integrals.
    """

    n: int
    form: SpaceForm
    representation: str
    rho: np.ndarray
    lam: np.ndarray
    dlam: np.ndarray
    Phi: np.ndarray
    u: np.ndarray
    v: np.ndarray
    kappa: np.ndarray
    area_weight: np.ndarray
    sphere_weight: np.ndarray
    grad_phi: np.ndarray
    sigma: np.ndarray = field(init=False)
    H: np.ndarray = field(init=False)

    def __post_init__(self):
        self.sigma = sigma_all(self.kappa)
        m = self.n - 1
        self.H = self.sigma / np.array([comb(m, k) for k in range(m + 1)], dtype=float)

    @property
    def area(self) -> float:
        return float(self.area_weight.sum())

    def H_ext(self, k: int) -> np.ndarray:
        """``H_k`` with the convention ``H_k = 0`` for ``k >= n``."""
        if k < 0:
            raise ValueError("order must be non-negative")
        if k > self.n - 1:
            return np.zeros_like(self.u)
        return self.H[:, k]

    @property
    def grad_phi_sq(self) -> np.ndarray:
        return np.sum(self.grad_phi ** 2, axis=1)

    def newton_form(self, j: int) -> np.ndarray:
        """``T_j(grad Phi, grad Phi)`` using ``T_j = diag(sigma_j(kappa | i))`` in the principal frame."""
        if j < 0:
            return np.zeros_like(self.u)
        sd = sigma_deleted(self.kappa)[..., j]
        return np.sum(sd * self.grad_phi ** 2, axis=1)

    def integrate(self, values) -> float:
        return float(np.dot(np.asarray(values, dtype=float), self.area_weight))


# ---------------------------------------------------------------------------
# rotationally symmetric profile graphs
# ---------------------------------------------------------------------------

@dataclass(eq=False)
class ProfileGraph:
    """Rotationally symmetric radial graph ``rho(theta)`` on ``N + 1`` uniform nodes of ``[0, pi]``."""

    n: int
    form: SpaceForm
    rho: np.ndarray
    method: str = "fd4"
    metadata: dict = field(default_factory=dict)

    representation = "profile"

    def __post_init__(self):
        self.rho = np.array(self.rho, dtype=float)
        if self.rho.ndim != 1 or self.rho.size < 9:
            raise ValueError("profile needs a 1-D array of at least 9 nodes")
        if int(self.n) != self.n or self.n < 3:
            raise ValueError("ambient dimension must be an integer >= 3")
        _check_rho(self.rho, self.form)

    @property
    def N(self) -> int:
        return self.rho.size - 1

    @property
    def theta(self) -> np.ndarray:
        return np.pi * np.arange(self.N + 1) / self.N

    @property
    def spacing(self) -> float:
        return np.pi / self.N

    @classmethod
    def sphere(cls, n: int, form: SpaceForm, r: float, N: int = 512, **kw) -> ProfileGraph:
        return cls(n, form, np.full(N + 1, float(r)), **kw)

    @classmethod
    def from_function(cls, n: int, form: SpaceForm, func, N: int = 512, **kw) -> ProfileGraph:
        theta = np.pi * np.arange(N + 1) / N
        return cls(n, form, func(theta), **kw)

    def with_rho(self, rho) -> ProfileGraph:
        return ProfileGraph(self.n, self.form, rho, self.method, dict(self.metadata))

    def derivatives(self, values=None):
        return _derivatives(self.rho if values is None else np.asarray(values, float), self.method)

    def sphere_weights(self) -> np.ndarray:
        return sphere_area(self.n - 2) * polar_weights(self.N, self.n)

    def geometry(self) -> PointwiseGeometry:
        n, form = self.n, self.form
        rho = self.rho
        theta = self.theta
        d1, d2 = self.derivatives()
        lam, dlam, Phi = form.warp(rho)
        phi1 = d1 / lam
        phi2 = d2 / lam - dlam * d1 * d1 / (lam * lam)
        v2 = 1.0 + phi1 * phi1
        v = np.sqrt(v2)
        k_mer = (dlam - phi2 / v2) / (lam * v)
        k_az = (dlam - _cot_times(phi1, phi2, theta)) / (lam * v)
        kappa = np.empty((rho.size, n - 1))
        kappa[:, 0] = k_mer
        kappa[:, 1:] = k_az[:, None]
        wsph = self.sphere_weights()
        grad = np.zeros_like(kappa)
        grad[:, 0] = d1 / v
        return PointwiseGeometry(
            n=n, form=form, representation="profile", rho=rho.copy(), lam=lam, dlam=dlam, Phi=Phi,
            u=lam / v, v=v, kappa=kappa, area_weight=wsph * lam ** (n - 1) * v, sphere_weight=wsph,
            grad_phi=grad,
        )

    def to_sphere_graph(self, n_phi: int = 64) -> SphereGraph:
        """Resample onto a latitude-longitude grid (requires ``n == 3``)."""
        if self.n != 3:
            raise ValueError("latitude-longitude representation exists only for n = 3")
        return SphereGraph(self.form, np.repeat(self.rho[:, None], n_phi, axis=1), dict(self.metadata))


# ---------------------------------------------------------------------------
# full latitude-longitude graphs over S^2
# ---------------------------------------------------------------------------

@dataclass(eq=False)
class SphereGraph:
    """Radial graph over ``S^2`` sampled on ``(N_theta + 1) x N_phi`` latitude-longitude nodes."""

    form: SpaceForm
    rho: np.ndarray
    metadata: dict = field(default_factory=dict)

    representation = "sphere"
    n = 3

    def __post_init__(self):
        rho = np.array(self.rho, dtype=float)
        if rho.ndim != 2 or rho.shape[0] < 5 or rho.shape[1] < 4 or rho.shape[1] % 2:
            raise ValueError("grid must be (N_theta + 1) x N_phi with N_theta >= 4 and even N_phi >= 4")
        # averaging deviations keeps constant rings bit-exact
        for row in (0, -1):
            rho[row, :] = rho[row, 0] + (rho[row, :] - rho[row, 0]).mean()
        _check_rho(rho, self.form)
        self.rho = rho

    @property
    def N(self) -> tuple[int, int]:
        return self.rho.shape[0] - 1, self.rho.shape[1]

    @property
    def theta(self) -> np.ndarray:
        return np.pi * np.arange(self.rho.shape[0]) / (self.rho.shape[0] - 1)

    @property
    def phi(self) -> np.ndarray:
        return 2 * np.pi * np.arange(self.rho.shape[1]) / self.rho.shape[1]

    @property
    def spacing(self) -> float:
        """Effective node distance for step control of polar-filtered updates.

        With :meth:`polar_filter` applied, the azimuthal stiffness never
        exceeds the polar one, so the five-point stencil alone sets the
        bound (``sqrt(3) / 2`` of the polar step).
        """
        return np.pi / (self.rho.shape[0] - 1) * np.sqrt(0.75)

    def polar_filter(self, values: np.ndarray) -> np.ndarray:
        """Remove azimuthal modes ``m > sqrt(16/3) sin(theta) / h_theta`` row by row.

        Those modes are unresolved near the poles and would otherwise force
        a step proportional to ``sin(h_theta)^2``.
        """
        nt, nphi = self.rho.shape[0] - 1, self.rho.shape[1]
        ht = np.pi / nt
        m = np.arange(nphi // 2 + 1)
        keep = m[None, :] <= np.maximum(1.0, np.sqrt(16.0 / 3.0) * np.sin(self.theta) / ht)[:, None]
        if keep.all():
            return values
        spec = np.fft.rfft(values, axis=1)
        return np.fft.irfft(np.where(keep, spec, 0.0), nphi, axis=1)

    @classmethod
    def sphere(cls, form: SpaceForm, r: float, n_theta: int = 128, n_phi: int = 64) -> SphereGraph:
        return cls(form, np.full((n_theta + 1, n_phi), float(r)))

    @classmethod
    def from_function(cls, form: SpaceForm, func, n_theta: int = 128, n_phi: int = 64) -> SphereGraph:
        """``func(theta, phi)`` evaluated on the grid (broadcast arrays)."""
        th = np.pi * np.arange(n_theta + 1) / n_theta
        ph = 2 * np.pi * np.arange(n_phi) / n_phi
        T, P = np.meshgrid(th, ph, indexing="ij")
        return cls(form, func(T, P) + np.zeros_like(T))

    def with_rho(self, rho) -> SphereGraph:
        return SphereGraph(self.form, rho, dict(self.metadata))

    def _extended(self, f):
        """Append two ghost rows beyond each pole (the great-circle continuation, shifted by ``pi`` in ``phi``)."""
        half = f.shape[1] // 2
        top = np.roll(f[2:0:-1], half, axis=1)
        bottom = np.roll(f[-2:-4:-1], half, axis=1)
        return np.concatenate([top, f, bottom], axis=0)

    def derivatives(self):
        """Fourth-order differences in ``theta`` across the poles, Fourier differentiation in ``phi``."""
        nt, nphi = self.rho.shape[0] - 1, self.rho.shape[1]
        ht = np.pi / nt
        e = self._extended(self.rho)
        m2, m1, c, p1, p2 = e[:-4], e[1:-3], e[2:-2], e[3:-1], e[4:]
        r_t = (8 * (p1 - m1) - (p2 - m2)) / (12 * ht)
        r_tt = (16 * ((p1 - c) + (m1 - c)) - ((p2 - c) + (m2 - c))) / (12 * ht ** 2)
        wave = np.fft.rfftfreq(nphi, 1.0 / nphi)
        ik = 1j * wave
        ik[-1] = 0.0  # Nyquist mode has no odd derivative
        spec = np.fft.rfft(c, axis=1)
        r_p = np.fft.irfft(ik * spec, nphi, axis=1)
        r_pp = np.fft.irfft(-(wave ** 2) * spec, nphi, axis=1)
        r_tp = np.fft.irfft(ik * np.fft.rfft(r_t, axis=1), nphi, axis=1)
        return r_t, r_p, r_tt, r_tp, r_pp

    def sphere_weights(self) -> np.ndarray:
        """Polar weights (exact on the azimuthal mean) times the uniform azimuthal rule."""
        nt, nphi = self.rho.shape[0] - 1, self.rho.shape[1]
        return polar_weights(nt, 3)[:, None] * np.full((1, nphi), 2 * np.pi / nphi)

    def _pole_data(self, r_t, r_tt, row):
        """Gradient and Hessian of ``rho`` at a pole in normal coordinates.

        Along column ``j`` the ghost-row stencil differentiates along the
        great circle leaving the pole in direction ``phi_j``, so ``r_t`` is
        ``grad rho . e(phi_j)`` and ``r_tt`` is ``Hess rho (e, e)``.  Their
        low azimuthal Fourier modes give the Cartesian components.
        """
        ph = self.phi
        nphi = ph.size
        cos1, sin1 = np.cos(ph), np.sin(ph)
        cos2, sin2 = np.cos(2 * ph), np.sin(2 * ph)
        gx = 2.0 / nphi * np.dot(r_t[row], cos1)
        gy = 2.0 / nphi * np.dot(r_t[row], sin1)
        mean = r_tt[row].mean()
        b = 2.0 / nphi * np.dot(r_tt[row], cos2)
        c = 0.0 if nphi == 4 else 2.0 / nphi * np.dot(r_tt[row], sin2)
        return gx, gy, mean + b, c, mean - b

    def geometry(self) -> PointwiseGeometry:
        form = self.form
        rho = self.rho
        r_t, r_p, r_tt, r_tp, r_pp = self.derivatives()
        lam, dlam, Phi = form.warp(rho)
        th = self.theta[:, None] + 0 * rho
        s, c = np.sin(th), np.cos(th)
        inner = slice(1, -1)
        s_in = s[inner]
        sl = (inner, slice(None))
        L, DL = lam[sl], dlam[sl]
        # round-sphere covariant Hessian of rho in (theta, phi) coordinates
        hess = (r_tt[sl], r_tp[sl] - (c[inner] / s_in) * r_p[sl], r_pp[sl] + s_in * c[inner] * r_t[sl])
        kap, grad, v = _shape_operator_2x2(L, DL, r_t[sl], r_p[sl], hess, s_in ** 2)
        nt1, nphi = rho.shape
        kappa = np.empty((nt1, nphi, 2))
        gradf = np.empty((nt1, nphi, 2))
        vv = np.empty_like(rho)
        kappa[inner] = kap
        gradf[inner] = grad
        vv[inner] = v
        for row in (0, -1):
            gx, gy, hxx, hxy, hyy = self._pole_data(r_t, r_tt, row)
            kp, gp, vp = _shape_operator_2x2(lam[row, 0], dlam[row, 0], gx, gy, (hxx, hxy, hyy), 1.0)
            kappa[row] = kp
            gradf[row] = gp
            vv[row] = vp
        wsph = self.sphere_weights()
        return PointwiseGeometry(
            n=3, form=form, representation="sphere", rho=rho.ravel().copy(), lam=lam.ravel(), dlam=dlam.ravel(),
            Phi=Phi.ravel(), u=(lam / vv).ravel(), v=vv.ravel(), kappa=kappa.reshape(-1, 2),
            area_weight=(wsph * lam ** 2 * vv).ravel(), sphere_weight=wsph.ravel(), grad_phi=gradf.reshape(-1, 2),
        )


def _shape_operator_2x2(lam, dlam, r_0, r_1, hess, sig_11):
    """Principal curvatures, eigenframe gradient of ``Phi`` and ``v`` for a radial graph over ``S^2``.

    Coordinates are orthogonal with round metric ``diag(1, sig_11)``;
    ``r_0, r_1`` are the coordinate derivatives of ``rho`` and ``hess`` the
    round-sphere covariant Hessian ``(H_00, H_01, H_11)`` of ``rho``.
    """
    p0, p1 = r_0 / lam, r_1 / lam
    q = dlam / lam ** 2
    p00 = hess[0] / lam - q * r_0 * r_0
    p01 = hess[1] / lam - q * r_0 * r_1
    p11 = hess[2] / lam - q * r_1 * r_1
    v = np.sqrt(1.0 + p0 ** 2 + p1 ** 2 / sig_11)
    # induced metric and second fundamental form
    g00 = lam ** 2 * (1.0 + p0 * p0)
    g01 = lam ** 2 * p0 * p1
    g11 = lam ** 2 * (sig_11 + p1 * p1)
    fac = lam / v
    h00 = fac * (dlam * (1.0 + p0 * p0) - p00)
    h01 = fac * (dlam * p0 * p1 - p01)
    h11 = fac * (dlam * (sig_11 + p1 * p1) - p11)
    # closed-form Cholesky g = C C^T, C = [[a, 0], [b, d]], then S = C^-1 h C^-T
    a = np.sqrt(g00)
    b = g01 / a
    d = np.sqrt(g11 - b * b)
    s00 = h00 / (a * a)
    s01 = (h01 - b / a * h00) / (a * d)
    s11 = (h11 - 2 * b / a * h01 + (b / a) ** 2 * h00) / (d * d)
    mean = 0.5 * (s00 + s11)
    rad = np.hypot(0.5 * (s00 - s11), s01)
    kap = np.stack(np.broadcast_arrays(mean - rad, mean + rad), axis=-1)
    ang = 0.5 * np.arctan2(2 * s01, s00 - s11)
    cs, sn = np.cos(ang), np.sin(ang)
    # gradient of Phi = lam d(rho) in the eigenframe
    y0 = lam * r_0 / a
    y1 = (lam * r_1 - b * y0) / d
    grad = np.stack(np.broadcast_arrays(-sn * y0 + cs * y1, cs * y0 + sn * y1), axis=-1)
    return kap, grad, v


# ---------------------------------------------------------------------------
# integrals
# ---------------------------------------------------------------------------

def geometry(g) -> PointwiseGeometry:
    """Pointwise geometry of either graph representation."""
    return g.geometry()


def _check_order(geo: PointwiseGeometry, k: int, lo: int = 0):
    if int(k) != k or not lo <= k <= geo.n - 1:
        raise ValueError(f"order must be an integer in [{lo}, {geo.n - 1}], got {k!r}")


def curvature_integral(geo: PointwiseGeometry, k: int) -> float:
    """``int_Sigma H_k d(mu)``."""
    _check_order(geo, k)
    return geo.integrate(geo.H[:, k])


def weighted_curvature_integral(geo: PointwiseGeometry, k: int, f) -> float:
    """``int_Sigma f(Phi) H_k d(mu)``."""
    _check_order(geo, k)
    fv = f(geo.Phi)
    if not np.all(np.isfinite(fv)):
        raise ValueError(f"weight {getattr(f, 'name', f)!r} is not finite on the surface")
    return geo.integrate(fv * geo.H[:, k])


def enclosed_volume(g) -> float:
    w = g.sphere_weights().ravel()
    return float(np.dot(w, radial_integral(g.form, g.n, g.rho.ravel())))


def quermassintegrals(g, up_to: int | None = None, geo: PointwiseGeometry | None = None) -> np.ndarray:
    """``W_0 .. W_up_to`` of the enclosed domain."""
    n = g.n
    up_to = n - 1 if up_to is None else up_to
    if int(up_to) != up_to or not 0 <= up_to <= n:
        raise ValueError(f"up_to must lie in [0, {n}]")
    geo = g.geometry() if geo is None else geo
    eps = g.form.epsilon
    W = [enclosed_volume(g), geo.area / (n - 1)]
    for k in range(1, min(up_to, n - 1)):
        W.append(curvature_integral(geo, k) / (n - 1 - k) + eps * k / (n - 1 - k) * W[k - 1])
    if up_to == n:
        W.append(sphere_area(n - 1) / n)
    return np.array(W[:up_to + 1])


class BulkIntegrals(NamedTuple):
    volume: float
    dlam: float
    weighted: float


def bulk_integrals(g, f=None) -> BulkIntegrals:
    """``(Vol(Omega), int_Omega lam' dv, int_Omega f(Phi) dv)``; ``f = None`` means ``f = 1``."""
    w = g.sphere_weights().ravel()
    rho = g.rho.ravel()
    vol = float(np.dot(w, radial_integral(g.form, g.n, rho)))
    dl = float(np.dot(w, g.form.lam(rho) ** g.n)) / g.n
    wf = vol if f is None else float(np.dot(w, radial_integral(g.form, g.n, rho, f)))
    return BulkIntegrals(vol, dl, wf)


# ---------------------------------------------------------------------------
# convexity
# ---------------------------------------------------------------------------

@dataclass
class ConvexityReport:
    strict_margin: float
    static_margin: float
    hconvex_margin: float
    kconvex_margins: dict

    @property
    def strictly_convex(self) -> bool:
        return self.strict_margin > 0

    @property
    def static_convex(self) -> bool:
        return self.static_margin > 0 and self.strict_margin > 0

    @property
    def h_convex(self) -> bool:
        return self.hconvex_margin >= 0

    def k_convex(self, k: int) -> bool:
        return self.kconvex_margins[k] > 0


def convexity_classify(geo: PointwiseGeometry) -> ConvexityReport:
    """Margins for strict, static, horospherical and ``k``-convexity (minimum over nodes)."""
    kmin = geo.kappa.min(axis=1)
    with np.errstate(divide="ignore"):
        static = kmin - geo.u / geo.dlam
    static = np.where(geo.dlam > 0, static, -np.inf)
    kconv = {k: float(np.min(gamma_cone(geo.kappa, k).margin)) for k in range(1, geo.n)}
    return ConvexityReport(float(kmin.min()), float(static.min()), float((kmin - 1).min()), kconv)


# ---------------------------------------------------------------------------
# integral identities
# ---------------------------------------------------------------------------

def minkowski_residual(geo: PointwiseGeometry, k: int) -> float:
    """``|int u H_k - int lam' H_{k-1}| / int |lam' H_{k-1}|``."""
    _check_order(geo, k, 1)
    a = geo.integrate(geo.u * geo.H[:, k])
    b = geo.integrate(geo.dlam * geo.H[:, k - 1])
    return abs(a - b) / geo.integrate(np.abs(geo.dlam * geo.H[:, k - 1]))


def divergence_identity_residual(geo: PointwiseGeometry, k: int) -> float:
    """Integral of ``(n-k) lam' sigma_{k-1} - k sigma_k u`` relative to its first term."""
    _check_order(geo, k, 1)
    n = geo.n
    a = (n - k) * geo.dlam * geo.sigma[:, k - 1]
    b = k * geo.sigma[:, k] * geo.u
    return abs(geo.integrate(a - b)) / geo.integrate(np.abs(a))


def _weighted_rms(values, geo):
    return math.sqrt(geo.integrate(values) / geo.area)


def hessian_identity_residual(g: ProfileGraph) -> float:
    """RMS of ``Hess Phi - (lam' g - u h)`` over the surface, relative to mean ``|lam'|``.

    ``Hess Phi`` is computed directly from the grid function ``Phi(rho(theta))``
    through the Christoffel symbols of the induced metric, independently of
    the curvature formulas.
    """
    if not isinstance(g, ProfileGraph):
        raise TypeError("the Hessian identity is evaluated on profile graphs")
    geo = g.geometry()
    theta = g.theta
    d1, _ = g.derivatives()
    lam = geo.lam
    P_t, P_tt = g.derivatives(geo.Phi)
    G = lam * lam + d1 * d1
    G_t, _ = g.derivatives(G)
    hess_mer = (P_tt - 0.5 * G_t / G * P_t) / G
    hess_az = (geo.dlam * d1 / lam * P_t + _cot_times(P_t, P_tt, theta)) / G
    r_mer = hess_mer - (geo.dlam - geo.u * geo.kappa[:, 0])
    r_az = hess_az - (geo.dlam - geo.u * geo.kappa[:, 1])
    sq = r_mer ** 2 + (g.n - 2) * r_az ** 2
    return _weighted_rms(sq, geo) / (geo.integrate(np.abs(geo.dlam)) / geo.area)


def gradient_identity_residual(g: ProfileGraph) -> float:
    """RMS of ``|grad u - h(grad Phi)|`` relative to mean ``|lam'|``, on profile graphs."""
    if not isinstance(g, ProfileGraph):
        raise TypeError("the gradient identity is evaluated on profile graphs")
    geo = g.geometry()
    d1, _ = g.derivatives()
    u_t, _ = g.derivatives(geo.u)
    G = geo.lam ** 2 + d1 * d1
    r = (u_t - geo.kappa[:, 0] * geo.lam * d1) / np.sqrt(G)
    return _weighted_rms(r * r, geo) / (geo.integrate(np.abs(geo.dlam)) / geo.area)


# ---------------------------------------------------------------------------
# serialization
# ---------------------------------------------------------------------------

def _num(x: float) -> float:
    return float(f"{x:.17g}")


def shape_to_dict(g) -> dict:
    if isinstance(g, ProfileGraph):
        rho = [_num(x) for x in g.rho]
        N = g.N
    else:
        rho = [[_num(x) for x in row] for row in g.rho]
        N = list(g.N)
    out = {"epsilon": g.form.epsilon, "n": g.n, "representation": g.representation, "N": N, "rho": rho,
           "metadata": dict(g.metadata)}
    if isinstance(g, ProfileGraph):
        out["metadata"].setdefault("derivative", g.method)
    return out


def shape_from_dict(d: dict):
    form = SpaceForm(int(d["epsilon"]))
    meta = dict(d.get("metadata", {}))
    if d["representation"] == "profile":
        return ProfileGraph(int(d["n"]), form, np.array(d["rho"], dtype=float), meta.get("derivative", "fd4"), meta)
    if d["representation"] == "sphere":
        if int(d["n"]) != 3:
            raise ValueError("sphere representation requires n = 3")
        return SphereGraph(form, np.array(d["rho"], dtype=float), meta)
    raise ValueError(f"unknown representation {d['representation']!r}")


def save_shape(g, path) -> None:
    Path(path).write_text(json.dumps(shape_to_dict(g), indent=1))


def load_shape(path):
    return shape_from_dict(json.loads(Path(path).read_text()))
