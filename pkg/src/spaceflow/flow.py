"""Locally constrained inverse curvature flow ``dX/dt = (H_{k-1}/H_k - u/lam') nu``.

For a radial graph the normal speed ``F`` moves the radius at rate
``d(rho)/dt = F v`` because ``<d_r, nu> = 1/v``.  Time stepping is explicit
RK4 with a parabolic step bound; every step is guarded against loss of
positivity, of the Garding cone and of the convexity hypothesis, and
rejected steps are retried with half the step.
"""

from __future__ import annotations

import csv
import json
import logging
import math
from dataclasses import asdict, dataclass, field
from math import comb
from pathlib import Path
from typing import NamedTuple, Sequence

import numpy as np

from .hypersurface import (
    PointwiseGeometry,
    ProfileGraph,
    SphereGraph,
    bulk_integrals,
    convexity_classify,
    quermassintegrals,
    weighted_curvature_integral,
)
from .spaceform import sphere_area
from .symfunc import ConeViolation, sigma_all, sigma_deleted
from .weights import WeightFunction, admissibility, power

__all__ = [
    "FlowConfig",
    "FlowRun",
    "HypothesisError",
    "StepRejected",
    "speed",
    "step",
    "run",
    "stable_dt",
    "roundness",
    "monitor",
    "expected_directions",
    "evolution_residual",
    "variational_residual",
    "check_monotone",
]

log = logging.getLogger(__name__)

# Speeds below this are treated as an exactly stationary surface.
STATIONARY_TOL = 1e-12


class HypothesisError(ValueError):
    """The initial surface does not satisfy the convexity hypothesis of the flow."""


class StepRejected(RuntimeError):
    """A time step produced an inadmissible surface."""


@dataclass
class FlowConfig:
    k: int
    weights: Sequence[WeightFunction] = (power(2.0),)
    dt_init: float = 1e-2
    cfl: float = 0.4
    t_max: float = 40.0
    sample_every: int = 10
    monotonicity_slack: float = 1e-8
    roundness_stop: float = 1e-3
    guard_tol: float = 1e-9
    hemisphere_margin: float = 0.05
    max_steps: int = 200_000

    def __post_init__(self):
        if self.k < 1:
            raise ValueError("flow order k must be >= 1")
        for name in ("dt_init", "cfl", "t_max", "monotonicity_slack", "roundness_stop", "guard_tol"):
            if not getattr(self, name) > 0:
                raise ValueError(f"{name} must be positive")
        if self.sample_every < 1:
            raise ValueError("sample_every must be >= 1")
        self.weights = tuple(self.weights)

    def to_dict(self) -> dict:
        d = asdict(self)
        d["weights"] = [w.name for w in self.weights]
        return d


def speed(geo: PointwiseGeometry, k: int) -> np.ndarray:
    """Normal speed ``H_{k-1}/H_k - u/lam'`` at every node."""
    if not 1 <= k <= geo.n - 1:
        raise ValueError(f"flow order must lie in [1, {geo.n - 1}]")
    Hk = geo.H[:, k]
    bad = np.flatnonzero(~(Hk > 0))
    if bad.size:
        raise ConeViolation(f"H_{k} <= 0 at nodes {bad[:20].tolist()}")
    if np.any(geo.dlam <= 0):
        raise ConeViolation("lam' <= 0 on the surface; speed undefined")
    return geo.H[:, k - 1] / Hk - geo.u / geo.dlam


def _quotient_gradient(kappa: np.ndarray, k: int) -> np.ndarray:
    """``d(H_k / H_{k-1}) / d kappa_i`` per node."""
    m = kappa.shape[1]
    sd = sigma_deleted(kappa)
    s = sigma_all(kappa)
    Hk, Hk1 = s[:, k] / comb(m, k), s[:, k - 1] / comb(m, k - 1)
    dHk = sd[..., k - 1] / comb(m, k)
    dHk1 = sd[..., k - 2] / comb(m, k - 1) if k >= 2 else np.zeros_like(dHk)
    return (dHk * Hk1[:, None] - Hk[:, None] * dHk1) / Hk1[:, None] ** 2


def stable_dt(g, geo: PointwiseGeometry, cfg: FlowConfig) -> float:
    """Explicit step bound ``cfl * h^2 / D`` with ``D`` the largest effective diffusivity."""
    k = cfg.k
    Q = geo.H[:, k - 1] / geo.H[:, k]
    q = np.abs(_quotient_gradient(geo.kappa, k)).sum(axis=1)
    D = float(np.max(Q * Q * q / (geo.lam ** 2 * geo.v ** 2)))
    h = g.spacing
    if getattr(g, "method", "fd4") == "spectral":
        h *= 0.5
    return min(cfg.dt_init, cfg.cfl * h * h / max(D, 1e-300))


def _hypothesis_margin(geo: PointwiseGeometry, k: int) -> float:
    """Margin of the convexity hypothesis the flow must preserve (cheap form of :func:`convexity_classify`)."""
    eps = geo.form.epsilon
    if eps == 0:
        return float(geo.sigma[:, 1:k + 1].min())
    kmin = geo.kappa.min(axis=1)
    if eps == 1:
        return float(kmin.min())
    if np.any(geo.dlam <= 0):
        return -math.inf
    return float(min(kmin.min(), (kmin - geo.u / geo.dlam).min()))


def _rate(g, geo, k):
    rate = speed(geo, k) * geo.v
    if isinstance(g, SphereGraph):
        rate = g.polar_filter(rate.reshape(g.rho.shape))
    return rate


def _stage(rho, g):
    if not np.all(np.isfinite(rho)):
        raise StepRejected("non-finite radius")
    try:
        return g.with_rho(rho)
    except ValueError as exc:
        raise StepRejected(str(exc)) from exc


def _advance(g, cfg: FlowConfig, dt: float, geo: PointwiseGeometry | None = None):
    """RK4 update returning the new graph and its geometry."""
    if not dt > 0:
        raise ValueError("time step must be positive")
    rho0 = g.rho
    k = cfg.k
    try:
        k1 = _rate(g, g.geometry() if geo is None else geo, k)
        g2 = _stage(rho0 + 0.5 * dt * k1, g)
        k2 = _rate(g2, g2.geometry(), k)
        g3 = _stage(rho0 + 0.5 * dt * k2, g)
        k3 = _rate(g3, g3.geometry(), k)
        g4 = _stage(rho0 + dt * k3, g)
        k4 = _rate(g4, g4.geometry(), k)
    except ConeViolation as exc:
        raise StepRejected(f"cone violation inside stage: {exc}") from exc
    new = _stage(rho0 + dt / 6.0 * (k1 + 2 * k2 + 2 * k3 + k4), g)
    new_geo = new.geometry()
    margin = _hypothesis_margin(new_geo, k)
    if margin < -cfg.guard_tol:
        raise StepRejected(f"convexity margin {margin:.3e} after step")
    return new, new_geo


def step(g, cfg: FlowConfig, dt: float):
    """One explicit RK4 step of ``d(rho)/dt = F v``; raises :class:`StepRejected` on guard trips.

    Pole regularity is restored by the graph constructor (ring averaging
    for latitude-longitude grids, even symmetry for profiles).
    """
    return _advance(g, cfg, dt)[0]


def roundness(geo: PointwiseGeometry) -> tuple[float, float]:
    """Curvature pinching ``max kappa / min kappa - 1`` and radial oscillation ``rho_max - rho_min``."""
    kmin = geo.kappa.min()
    pinch = float(geo.kappa.max() / kmin - 1.0) if kmin > 0 else math.inf
    return pinch, float(geo.rho.max() - geo.rho.min())


def monitor(g, geo: PointwiseGeometry, k: int, weights: Sequence[WeightFunction]) -> dict:
    """All functionals recorded along a run, keyed by column name."""
    n, eps = g.n, g.form.epsilon
    W = quermassintegrals(g, geo=geo)
    rec = {f"W{l}": float(W[l]) for l in range(n)}
    bulk0 = bulk_integrals(g)
    rec["volume"] = bulk0.volume
    rec["bulk_dlam"] = bulk0.dlam
    rec["area"] = geo.area
    for w in weights:
        bw = bulk_integrals(g, w).weighted
        fH1 = weighted_curvature_integral(geo, 1, w)
        rec[f"fHk[{w.name}]"] = weighted_curvature_integral(geo, k, w)
        rec[f"fH1[{w.name}]"] = fH1
        rec[f"bulk_f[{w.name}]"] = bw
        rec[f"mink[{w.name}]"] = fH1 + eps * bw
    rep = convexity_classify(geo)
    rec["strict_margin"] = rep.strict_margin
    rec["static_margin"] = rep.static_margin
    rec["hconvex_margin"] = rep.hconvex_margin
    pinch, osc = roundness(geo)
    rec["pinching"] = pinch
    rec["oscillation"] = osc
    try:
        rec["max_speed"] = float(np.abs(speed(geo, k)).max())
    except ConeViolation:
        rec["max_speed"] = math.nan
    return rec


def working_range(form, rho) -> tuple[float, float]:
    """Sampling range for weight hypotheses: ``[0.9 Phi(rho_min), 1.1 Phi(rho_max)]``."""
    rho = np.asarray(rho)
    return 0.9 * float(form.Phi(rho.min())), 1.1 * float(form.Phi(rho.max()))


def expected_directions(form, n: int, k: int, weights: Sequence[WeightFunction],
                        s_range: tuple[float, float]) -> dict:
    """Proven monotonicity directions for the series recorded by :func:`monitor`."""
    eps = form.epsilon
    out = {"bulk_dlam": "nondecreasing"}
    if eps in (-1, 0):
        for l in range(1, k + 1):
            out[f"W{l}"] = "nondecreasing"
    if eps == -1 and k >= 2:
        for w in weights:
            if admissibility(w, k, s_range, epsilon=-1).admissible:
                out[f"fHk[{w.name}]"] = "nonincreasing"
    if eps in (-1, 1) and k == 1:
        for w in weights:
            if admissibility(w, 1, s_range, epsilon=eps).admissible:
                out[f"mink[{w.name}]"] = "nonincreasing"
    return out


def check_monotone(times, values, direction: str, slack: float) -> list[dict]:
    """Intervals on which ``values`` moves against ``direction`` by more than ``slack * |value|``."""
    values = np.asarray(values, dtype=float)
    sign = 1.0 if direction == "nonincreasing" else -1.0
    out = []
    for i in range(len(values) - 1):
        excess = sign * (values[i + 1] - values[i]) - slack * abs(values[i])
        if excess > 0:
            out.append({"t0": float(times[i]), "t1": float(times[i + 1]),
                        "excess": float(excess / max(abs(values[i]), 1e-300))})
    return out


@dataclass
class FlowRun:
    """Sampled time series of one flow integration."""

    config: dict
    shape: dict
    times: list = field(default_factory=list)
    records: list = field(default_factory=list)
    terminal: dict = field(default_factory=dict)
    directions: dict = field(default_factory=dict)
    violations: list = field(default_factory=list)
    final_graph: object = field(default=None, repr=False)

    def series(self, name: str) -> np.ndarray:
        return np.array([r[name] for r in self.records], dtype=float)

    @property
    def columns(self) -> list[str]:
        return list(self.records[0].keys()) if self.records else []

    def to_csv(self, path) -> None:
        cols = self.columns
        with open(path, "w", newline="") as fh:
            w = csv.writer(fh, lineterminator="\n")
            w.writerow(cols)
            for r in self.records:
                w.writerow([_fmt(r[c]) for c in cols])

    def manifest(self) -> dict:
        return {"config": self.config, "shape": self.shape, "terminal": self.terminal,
                "directions": self.directions, "violations": self.violations}

    def to_manifest(self, path) -> None:
        Path(path).write_text(json.dumps(self.manifest(), indent=1, sort_keys=True))


def _fmt(x) -> str:
    if isinstance(x, (int, np.integer)):
        return str(int(x))
    return f"{float(x):.17g}"


def _check_hypothesis(g, geo, cfg):
    eps = g.form.epsilon
    if not 1 <= cfg.k <= g.n - 1:
        raise HypothesisError(f"flow order {cfg.k} outside [1, {g.n - 1}]")
    rep = convexity_classify(geo)
    if eps == -1 and not rep.static_convex:
        raise HypothesisError(f"initial surface is not static convex (margin {rep.static_margin:.3e})")
    if eps == 1:
        if cfg.k != 1:
            raise HypothesisError("in the sphere only the k = 1 flow is supported")
        if not rep.strictly_convex:
            raise HypothesisError(f"initial surface is not strictly convex (margin {rep.strict_margin:.3e})")
        if g.rho.max() >= 0.5 * math.pi - cfg.hemisphere_margin:
            raise HypothesisError("initial surface leaves the hemisphere rho < pi/2 - margin")
    if eps == 0 and not rep.k_convex(cfg.k):
        raise HypothesisError(f"initial surface is not {cfg.k}-convex")


def run(g, cfg: FlowConfig) -> FlowRun:
    """Integrate the flow from ``g`` until the pinching drops below ``roundness_stop`` or ``t_max``."""
    from .hypersurface import shape_to_dict

    geo = g.geometry()
    _check_hypothesis(g, geo, cfg)
    s_range = working_range(g.form, g.rho)
    out = FlowRun(config=cfg.to_dict(), shape=shape_to_dict(g))
    out.directions = expected_directions(g.form, g.n, cfg.k, cfg.weights, s_range)

    t, nstep, scale, streak = 0.0, 0, 1.0, 0
    first_loss = None

    def sample(gg, gg_geo, dt):
        rec = {"t": t, "step": nstep, "dt": dt}
        rec.update(monitor(gg, gg_geo, cfg.k, cfg.weights))
        out.times.append(t)
        out.records.append(rec)

    sample(g, geo, 0.0)
    reason = "t_max reached"
    converged = False
    dt = 0.0
    while True:
        pinch, _ = roundness(geo)
        if pinch < cfg.roundness_stop:
            converged, reason = True, "pinching below roundness_stop"
            break
        if t >= cfg.t_max:
            break
        if nstep >= cfg.max_steps:
            reason = "max_steps reached"
            break
        dt = min(stable_dt(g, geo, cfg) * scale, cfg.t_max - t)
        try:
            g_new, geo_new = _advance(g, cfg, dt, geo)
        except StepRejected as exc:
            scale *= 0.5
            streak = 0
            log.debug("step rejected at t=%g (dt=%g): %s", t, dt, exc)
            if scale < 1e-6:
                first_loss = t
                reason = f"persistent step rejection at t={t:.6g}: {exc}"
                break
            continue
        g, geo, t, nstep = g_new, geo_new, t + dt, nstep + 1
        streak += 1
        if scale < 1.0 and streak >= 10:
            scale, streak = min(1.0, 2 * scale), 0
        if nstep % cfg.sample_every == 0:
            sample(g, geo, dt)
    if out.times[-1] != t:
        sample(g, geo, dt)
    w = g.sphere_weights().ravel()
    r_inf = float(np.dot(w, g.rho.ravel()) / w.sum())
    out.terminal = {"converged": converged, "r_inf": r_inf, "reason": reason, "t_final": float(t), "steps": nstep,
                    "convexity_loss_time": first_loss}
    for name, direction in out.directions.items():
        for v in check_monotone(out.times, out.series(name), direction, cfg.monotonicity_slack):
            out.violations.append({"series": name, "direction": direction, **v})
    out.final_graph = g
    return out


# ---------------------------------------------------------------------------
# evolution-equation checks
# ---------------------------------------------------------------------------

class EvolutionCheck(NamedTuple):
    finite_difference: float
    predicted: float
    residual: float


def _relative(a: float, b: float, floor: float = 0.0) -> float:
    """``|a - b|`` over ``max(|a|, |b|, floor)``.

    ``floor`` is the integral of the absolute integrand, so conserved
    quantities (whose derivative vanishes by cancellation) are compared on
    their natural scale instead of against zero.
    """
    scale = max(abs(a), abs(b), floor)
    return abs(a - b) / scale if scale > 0 else 0.0


def _variation(g, k: int, dt: float):
    geo = g.geometry()
    F = speed(geo, k)
    if np.abs(F).max() <= STATIONARY_TOL:
        F = np.zeros_like(F)
    drho = (F * geo.v).reshape(g.rho.shape)
    return geo, F, g.with_rho(g.rho + dt * drho), g.with_rho(g.rho - dt * drho)


def variational_residual(g, cfg: FlowConfig, l: int, dt: float = 1e-4) -> EvolutionCheck:
    """Centered difference of ``W_l`` along the flow against ``int F H_l d(mu)``."""
    geo, F, gp, gm = _variation(g, cfg.k, dt)
    fd = (quermassintegrals(gp, l)[l] - quermassintegrals(gm, l)[l]) / (2 * dt)
    pred = geo.integrate(F * geo.H[:, l])
    return EvolutionCheck(float(fd), float(pred), _relative(fd, pred, geo.integrate(np.abs(F * geo.H[:, l]))))


def _evolution_integrand(geo: PointwiseGeometry, k: int, f: WeightFunction, with_bulk: bool) -> np.ndarray:
    n = geo.n
    Phi = geo.Phi
    fv, d1, d2 = f(Phi), f.derivative(Phi), f.second_derivative(Phi)
    if with_bulk:
        if k != 1:
            raise ValueError("the bulk-corrected form exists for k = 1 only")
        integrand = ((n - 2) * fv * geo.H_ext(2) + 2 * d1 * geo.u * geo.H[:, 1] - d1 * geo.dlam
                     - d2 * geo.grad_phi_sq / (n - 1))
    else:
        integrand = ((n - 1 - k) * fv * geo.H_ext(k + 1) + (k + 1) * d1 * geo.u * geo.H[:, k]
                     - k * (d1 - fv / Phi) * geo.dlam * geo.H[:, k - 1] - k * (fv / Phi) * geo.H[:, k - 1]
                     - d2 * geo.newton_form(k - 1) / comb(n - 1, k))
    return integrand


def evolution_rhs(geo: PointwiseGeometry, F: np.ndarray, k: int, f: WeightFunction, with_bulk: bool = False) -> float:
    """Predicted ``d/dt int f(Phi) H_k`` (plus ``eps int_Omega f`` when ``with_bulk``, ``k = 1``)."""
    return geo.integrate(_evolution_integrand(geo, k, f, with_bulk) * F)


def evolution_residual(g, cfg: FlowConfig, dt: float = 1e-4, weight: WeightFunction | None = None,
                       with_bulk: bool = False) -> EvolutionCheck:
    """Centered difference of the weighted curvature integral along the flow against its evolution formula."""
    f = cfg.weights[0] if weight is None else weight
    k = cfg.k
    geo, F, gp, gm = _variation(g, k, dt)

    def functional(gg):
        gg_geo = gg.geometry()
        val = weighted_curvature_integral(gg_geo, k, f)
        if with_bulk:
            val += gg.form.epsilon * bulk_integrals(gg, f).weighted
        return val

    fd = (functional(gp) - functional(gm)) / (2 * dt)
    integrand = _evolution_integrand(geo, k, f, with_bulk) * F
    pred = geo.integrate(integrand)
    return EvolutionCheck(float(fd), float(pred), _relative(fd, pred, geo.integrate(np.abs(integrand))))


def sphere_mean(g) -> float:
    w = g.sphere_weights().ravel()
    return float(np.dot(w, g.rho.ravel()) / sphere_area(g.n - 1))
