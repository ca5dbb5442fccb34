"""Closed-form ambient geometry of the space forms N^n(eps).

The three simply connected space forms are written as warped products
``dr^2 + lam(r)^2 g_{S^{n-1}}`` with

    eps = -1 :  lam = sinh r,  Phi = cosh r - 1
    eps =  0 :  lam = r,       Phi = r^2 / 2
    eps = +1 :  lam = sin r,   Phi = 1 - cos r

``Phi`` is the primitive of ``lam`` vanishing at the origin, and
``lam' + eps * Phi = 1`` holds identically.  :class:`BallFunctions` collects
every geodesic-ball comparison function that appears on the right-hand side
of the weighted inequalities, plus the scalar inversion used to evaluate
compositions such as ``chi_k(f_l^{-1}(W_l))``.
"""

from __future__ import annotations

import math
import warnings
from dataclasses import dataclass
from typing import Callable

import numpy as np
from scipy import integrate, optimize

__all__ = [
    "SpaceForm",
    "BallFunctions",
    "DomainError",
    "BracketError",
    "NumericFailure",
    "eval_warp",
    "sphere_area",
    "radial_integral",
    "invert_comparison",
    "HYPERBOLIC",
    "EUCLIDEAN",
    "SPHERICAL",
]

# Distance kept from the antipode of the origin in the round sphere.
ANTIPODE_GAP = 1e-6

_GL_NODES, _GL_WEIGHTS = np.polynomial.legendre.leggauss(64)


class DomainError(ValueError):
    """Radial coordinate outside the valid domain of the space form."""


class BracketError(ValueError):
    """Target value not attained inside the inversion bracket."""


class NumericFailure(RuntimeError):
    """A quadrature or root finder did not reach its tolerance."""


@dataclass(frozen=True)
class SpaceForm:
    """Constant-curvature model space selected by its curvature sign.

    Parameters
    ----------
    epsilon : int
        Sectional curvature, one of -1, 0, +1.
    r_max : float
        Upper radial cap used to bracket inversions when ``epsilon <= 0``.
    """

    epsilon: int
    r_max: float = 10.0

    def __post_init__(self):
        if self.epsilon not in (-1, 0, 1):
            raise ValueError(f"epsilon must be -1, 0 or 1, got {self.epsilon!r}")
        if not self.r_max > 0:
            raise ValueError("r_max must be positive")

    @property
    def name(self) -> str:
        return {-1: "hyperbolic", 0: "euclidean", 1: "spherical"}[self.epsilon]

    @property
    def r_upper(self) -> float:
        """Largest admissible radius."""
        if self.epsilon == 1:
            return math.pi - ANTIPODE_GAP
        return self.r_max

    def check_radius(self, r):
        r = np.asarray(r, dtype=float)
        if not np.all(np.isfinite(r)):
            raise DomainError("radius must be finite")
        if np.any(r < 0):
            raise DomainError(f"radius must be non-negative, got min {r.min()!r}")
        if self.epsilon == 1 and np.any(r >= math.pi):
            raise DomainError(f"radius must be < pi in the sphere, got max {r.max()!r}")
        return r

    def lam(self, r):
        r = np.asarray(r, dtype=float)
        if self.epsilon == -1:
            return np.sinh(r)
        if self.epsilon == 0:
            return r.copy() if r.ndim else r + 0.0
        return np.sin(r)

    def dlam(self, r):
        r = np.asarray(r, dtype=float)
        if self.epsilon == -1:
            return np.cosh(r)
        if self.epsilon == 0:
            return np.ones_like(r)
        return np.cos(r)

    def Phi(self, r):
        r = np.asarray(r, dtype=float)
        if self.epsilon == -1:
            # cosh r - 1 without cancellation near the origin
            return 2.0 * np.sinh(0.5 * r) ** 2
        if self.epsilon == 0:
            return 0.5 * r * r
        return 2.0 * np.sin(0.5 * r) ** 2

    def warp(self, r):
        """Return ``(lam, lam', Phi)`` at ``r`` without domain checks."""
        return self.lam(r), self.dlam(r), self.Phi(r)


HYPERBOLIC = SpaceForm(-1)
EUCLIDEAN = SpaceForm(0)
SPHERICAL = SpaceForm(1)


def eval_warp(form: SpaceForm, r):
    """Evaluate ``(lam, lam', Phi)`` at ``r`` after checking the radial domain."""
    r = form.check_radius(r)
    lam, dlam, Phi = form.warp(r)
    if r.ndim == 0:
        return float(lam), float(dlam), float(Phi)
    return lam, dlam, Phi


def sphere_area(dim: int) -> float:
    """Area of the unit sphere ``S^dim``, i.e. ``omega_dim``."""
    if dim < 0:
        raise ValueError("dimension must be non-negative")
    return 2.0 * math.pi ** ((dim + 1) / 2.0) / math.gamma((dim + 1) / 2.0)


def radial_integral(form: SpaceForm, n: int, rho, weight: Callable | None = None):
    """Integrate ``weight(Phi(s)) * lam(s)^(n-1)`` over ``[0, rho]`` per entry of ``rho``.

    Uses a 64-point Gauss-Legendre rule mapped onto each interval, which is
    exact to rounding for the smooth radial integrands met here.
    """
    rho = np.asarray(rho, dtype=float)
    half = 0.5 * rho[..., None]
    s = half * (_GL_NODES + 1.0)
    vals = form.lam(s) ** (n - 1)
    if weight is not None:
        vals = vals * weight(form.Phi(s))
    return np.sum(vals * _GL_WEIGHTS, axis=-1) * half[..., 0]


def invert_comparison(fn: Callable[[float], float], y: float, bracket: tuple[float, float]) -> float:
    """Solve ``fn(r) = y`` for a strictly increasing ``fn`` on ``bracket``.

    Brent's method (bisection safeguarded by secant / inverse quadratic
    steps) is run to full floating point resolution in ``r``; the result
    satisfies ``|fn(r) - y| <= 1e-12 * max(1, |y|)`` unless the function is
    too steep for double precision, in which case :class:`NumericFailure`
    is raised.
    """
    lo, hi = bracket
    flo, fhi = fn(lo), fn(hi)
    tol = 1e-12 * max(1.0, abs(y))
    if not (math.isfinite(y) and flo - tol <= y <= fhi + tol):
        raise BracketError(f"target {y!r} outside [{flo!r}, {fhi!r}] on [{lo}, {hi}]")
    if abs(flo - y) <= tol and flo <= y:
        return float(lo)
    if abs(fhi - y) <= tol and fhi >= y:
        return float(hi)
    r, info = optimize.brentq(lambda s: fn(s) - y, lo, hi, xtol=1e-300, rtol=4 * np.finfo(float).eps,
                              maxiter=200, full_output=True)
    if not info.converged:
        raise NumericFailure(f"inversion did not converge: {info.flag}")
    if abs(fn(r) - y) > tol:
        # one secant polish from the two floating point neighbours
        a, b = np.nextafter(r, lo), np.nextafter(r, hi)
        fa, fb = fn(a) - y, fn(b) - y
        if fb != fa:
            r2 = b - fb * (b - a) / (fb - fa)
            if abs(fn(r2) - y) < abs(fn(r) - y):
                r = r2
        if abs(fn(r) - y) > tol * 1e3:
            raise NumericFailure(f"inversion residual {abs(fn(r) - y):.3e} exceeds tolerance")
    return float(r)


@dataclass(frozen=True)
class BallFunctions:
    """Comparison functions of centered geodesic balls ``B_r`` in ``N^n(eps)``."""

    n: int
    form: SpaceForm

    def __post_init__(self):
        if int(self.n) != self.n or self.n < 3:
            raise ValueError("ambient dimension n must be an integer >= 3")

    @property
    def omega(self) -> float:
        """Area of the unit sphere ``S^(n-1)``."""
        return sphere_area(self.n - 1)

    @property
    def bracket(self) -> tuple[float, float]:
        """Radial interval on which every comparison function increases."""
        if self.form.epsilon == 1:
            return (0.0, 0.5 * math.pi)
        return (0.0, self.form.r_max)

    def _r(self, r):
        r = self.form.check_radius(r)
        return r

    def volume(self, r):
        r = self._r(r)
        if self.form.epsilon == 0:
            return self.omega * r ** self.n / self.n
        return self.omega * radial_integral(self.form, self.n, r)

    def curvature_integral(self, k: int, r):
        """``int_{dB_r} H_k`` = ``omega lam^(n-1) (lam'/lam)^k``."""
        r = self._r(r)
        lam, dlam, _ = self.form.warp(r)
        return self.omega * lam ** (self.n - 1 - k) * dlam ** k

    def quermassintegral(self, l: int, r):
        """Quermassintegral ``W_l(B_r)`` from the recursion in ``l``."""
        n = self.n
        if int(l) != l or not 0 <= l <= n:
            raise ValueError(f"order l must be an integer in [0, {n}], got {l!r}")
        r = self._r(r)
        if l == n:
            return self.omega / n + 0.0 * r
        if l == 0:
            return self.volume(r)
        lam = self.form.lam(r)
        if l == 1:
            return self.omega * lam ** (n - 1) / (n - 1)
        eps = self.form.epsilon
        W = [self.volume(r), self.omega * lam ** (n - 1) / (n - 1)]
        for k in range(1, l):
            W.append(self.curvature_integral(k, r) / (n - 1 - k) + eps * k / (n - 1 - k) * W[k - 1])
        return W[l]

    def chi_k(self, k: int, f, r):
        """``int_{dB_r} f(Phi) H_k`` on the geodesic sphere of radius ``r``."""
        if not 0 <= k <= self.n - 1:
            raise ValueError(f"order k must lie in [0, {self.n - 1}]")
        r = self._r(r)
        return self.curvature_integral(k, r) * f(self.form.Phi(r))

    def weighted_volume(self, r):
        """``h(r) = int_{B_r} lam' dv = omega lam(r)^n / n``."""
        r = self._r(r)
        return self.omega * self.form.lam(r) ** self.n / self.n

    def xi(self, r):
        """Area ``omega lam(r)^(n-1)`` of the geodesic sphere."""
        r = self._r(r)
        return self.omega * self.form.lam(r) ** (self.n - 1)

    def bulk_weight_integral(self, f, r: float) -> float:
        """``int_{B_r} f(Phi) dv`` by adaptive quadrature."""
        r = float(self._r(r))
        lam, Phi, n = self.form.lam, self.form.Phi, self.n

        def integrand(s):
            return float(f(Phi(s)) * lam(s) ** (n - 1))

        with warnings.catch_warnings():
            warnings.simplefilter("error", integrate.IntegrationWarning)
            try:
                val, _ = integrate.quad(integrand, 0.0, r, epsabs=1e-14, epsrel=1e-12, limit=200)
            except integrate.IntegrationWarning as exc:
                raise NumericFailure(f"ball quadrature failed at r={r}: {exc}") from exc
        return self.omega * val

    def chi_minkowski(self, f, r: float) -> float:
        """``int_{dB_r} f(Phi) H_1 + eps int_{B_r} f(Phi) dv``."""
        r = float(self._r(r))
        surface = float(self.chi_k(1, f, r))
        if self.form.epsilon == 0:
            return surface
        return surface + self.form.epsilon * self.bulk_weight_integral(f, r)

    def invert(self, fn: Callable[[float], float], y: float) -> float:
        """Invert one of the comparison functions on :attr:`bracket`."""
        lo, hi = self.bracket
        return invert_comparison(lambda s: float(fn(s)), y, (lo, hi))
