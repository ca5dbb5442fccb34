"""Both sides of the weighted geometric inequalities, gap reports and flow audits.

Every inequality compares a weighted curvature integral over a closed
hypersurface with the same quantity on the centered geodesic sphere that
matches one geometric invariant of the enclosed domain (a
quermassintegral, the area, or ``int_Omega lam' dv``).  The right-hand
side is therefore a composition ``chi(g^{-1}(invariant))`` with ball
comparison functions from :class:`~spaceflow.spaceform.BallFunctions`.

Identifiers
-----------
``af-quermass``   weighted ``H_k`` integral, ``2 <= k``, hyperbolic space,
                  static convex domains, ``f' >= k/(k-1) f/s``;
``af-power``      the same with ``f(s) = s^alpha``, ``alpha >= k/(k-1)``;
``minkowski-h``   ``int f H_1 - int_Omega f`` in hyperbolic space, static
                  convex, ``(f/s)' >= 0``;
``minkowski-s``   ``int f H_1 + int_Omega f`` in the sphere, strictly
                  convex inside the open hemisphere;
``volume-aux``    ``int_Omega lam' dv >= h(f_0^{-1}(Vol))``, the auxiliary
                  step used for ``l = 0`` (star-shaped domains).
"""

from __future__ import annotations

import csv
import json
import math
from dataclasses import asdict, dataclass, field
from pathlib import Path

import numpy as np

from .flow import FlowRun, check_monotone, working_range
from .hypersurface import (
    bulk_integrals,
    convexity_classify,
    quermassintegrals,
    weighted_curvature_integral,
)
from .spaceform import BallFunctions
from .weights import (  # noqa: F401  (re-exported)
    AdmissibilityReport,
    WeightFunction,
    admissibility,
    condition_for,
    constant,
    exp_times_power,
    from_spec,
    linear_times_power,
    power,
)

__all__ = [
    "GapReport",
    "HypothesisFailure",
    "AuditEntry",
    "AuditReport",
    "GAP_TOL",
    "EQUALITY_TOL",
    "verify_quermass_af",
    "verify_power_weight_af",
    "verify_hyperbolic_minkowski",
    "verify_spherical_minkowski",
    "verify_volume_auxiliary",
    "verify",
    "THEOREMS",
    "monotonicity_audit",
    "reports_to_csv",
    "reports_to_json",
    "weight_registry",
]

GAP_TOL = 1e-6
EQUALITY_TOL = 1e-8


class HypothesisFailure(ValueError):
    """The input does not satisfy the hypotheses of the requested inequality."""

    def __init__(self, theorem: str, reason: str):
        super().__init__(f"{theorem}: {reason}")
        self.theorem = theorem
        self.reason = reason


@dataclass
class GapReport:
    theorem: str
    variant: str
    k: int
    l: int | None
    weight: str
    lhs: float
    rhs: float
    gap: float
    relative_gap: float
    equality: bool
    passed: bool
    shape: dict = field(default_factory=dict)

    @classmethod
    def build(cls, theorem, variant, k, l, weight, lhs, rhs, shape, tol=GAP_TOL):
        gap = lhs - rhs
        rel = gap / abs(lhs) if lhs != 0 else gap
        return cls(theorem, variant, k, l, weight, float(lhs), float(rhs), float(gap), float(rel),
                   bool(abs(rel) <= EQUALITY_TOL), bool(rel >= -tol), shape)

    def to_dict(self) -> dict:
        return asdict(self)


def _shape_meta(g) -> dict:
    meta = {"epsilon": g.form.epsilon, "n": g.n, "representation": g.representation,
            "N": g.N if isinstance(g.N, int) else list(g.N),
            "rho_min": float(g.rho.min()), "rho_max": float(g.rho.max())}
    if "corpus" in g.metadata:
        meta["seed"] = g.metadata["corpus"]["seed"]
        meta["draw"] = g.metadata["corpus"]["draw"]
        meta["amplitude"] = g.metadata["corpus"]["amplitude"]
    return meta


def _require(cond: bool, theorem: str, reason: str):
    if not cond:
        raise HypothesisFailure(theorem, reason)


def _check_weight(theorem, f, k, g, eps):
    rep = admissibility(f, k, working_range(g.form, g.rho), epsilon=eps)
    _require(rep.admissible, theorem,
             f"weight {f.name} fails the '{rep.condition}' condition for k={k} (margin {rep.margin:.3e})")


def verify_quermass_af(g, k: int, l: int, f: WeightFunction, tol: float = GAP_TOL) -> list[GapReport]:
    """``int f(Phi) H_k >= chi_k(f_l^{-1}(W_l))`` and ``>= chi_k(h^{-1}(int_Omega lam'))``.

    Hyperbolic space with static convex domains.  Euclidean space is
    accepted as a sanity configuration (``k``-convex domains), where the
    comparison functions reduce to powers of ``r``.
    """
    th = "af-quermass"
    eps = g.form.epsilon
    _require(eps in (-1, 0), th, "defined in hyperbolic space (Euclidean space as a sanity case)")
    _require(2 <= k <= g.n - 1, th, f"need 2 <= k <= {g.n - 1}")
    _require(0 <= l <= k, th, f"need 0 <= l <= k, got l={l}")
    geo = g.geometry()
    rep = convexity_classify(geo)
    if eps == -1:
        _require(rep.static_convex, th, f"not static convex (margin {rep.static_margin:.3e})")
    else:
        _require(rep.k_convex(k), th, f"not {k}-convex")
    _check_weight(th, f, k, g, -1)
    ball = BallFunctions(g.n, g.form)
    lhs = weighted_curvature_integral(geo, k, f)
    W = quermassintegrals(g, up_to=l, geo=geo)[l]
    r_a = ball.invert(lambda r: ball.quermassintegral(l, r), W)
    r_b = ball.invert(ball.weighted_volume, bulk_integrals(g).dlam)
    meta = _shape_meta(g)
    return [
        GapReport.build(th, "quermassintegral", k, l, f.name, lhs, float(ball.chi_k(k, f, r_a)), meta, tol),
        GapReport.build(th, "weighted-volume", k, l, f.name, lhs, float(ball.chi_k(k, f, r_b)), meta, tol),
    ]


def verify_power_weight_af(g, k: int, l: int, alpha: float, tol: float = GAP_TOL) -> list[GapReport]:
    """:func:`verify_quermass_af` for ``f(s) = s^alpha``; requires ``alpha >= k/(k-1)``."""
    if k < 2:
        raise HypothesisFailure("af-power", "need k >= 2")
    threshold = k / (k - 1)
    if alpha < threshold * (1 - 1e-12):
        raise HypothesisFailure("af-power", f"alpha={alpha} below k/(k-1)={threshold}")
    reports = verify_quermass_af(g, k, l, power(alpha), tol)
    for r in reports:
        r.theorem = "af-power"
    return reports


def verify_hyperbolic_minkowski(g, f: WeightFunction, tol: float = GAP_TOL) -> list[GapReport]:
    """``int f H_1 - int_Omega f >= chi(xi^{-1}(|Sigma|))`` and ``>= chi(h^{-1}(int_Omega lam'))``."""
    th = "minkowski-h"
    _require(g.form.epsilon == -1, th, "defined in hyperbolic space")
    geo = g.geometry()
    rep = convexity_classify(geo)
    _require(rep.static_convex, th, f"not static convex (margin {rep.static_margin:.3e})")
    _check_weight(th, f, 1, g, -1)
    ball = BallFunctions(g.n, g.form)
    lhs = weighted_curvature_integral(geo, 1, f) - bulk_integrals(g, f).weighted
    r_a = ball.invert(ball.xi, geo.area)
    r_b = ball.invert(ball.weighted_volume, bulk_integrals(g).dlam)
    meta = _shape_meta(g)
    return [
        GapReport.build(th, "area", 1, None, f.name, lhs, ball.chi_minkowski(f, r_a), meta, tol),
        GapReport.build(th, "weighted-volume", 1, None, f.name, lhs, ball.chi_minkowski(f, r_b), meta, tol),
    ]


def verify_spherical_minkowski(g, f: WeightFunction, tol: float = GAP_TOL,
                               hemisphere_margin: float = 0.0) -> list[GapReport]:
    """``int f H_1 + int_Omega f >= chi(h^{-1}(int_Omega lam'))`` for convex hypersurfaces of the sphere."""
    th = "minkowski-s"
    _require(g.form.epsilon == 1, th, "defined in the sphere")
    geo = g.geometry()
    rep = convexity_classify(geo)
    _require(rep.strictly_convex, th, f"not strictly convex (margin {rep.strict_margin:.3e})")
    _require(float(g.rho.max()) < 0.5 * math.pi - hemisphere_margin, th, "surface leaves the open hemisphere")
    _check_weight(th, f, 1, g, 1)
    ball = BallFunctions(g.n, g.form)
    lhs = weighted_curvature_integral(geo, 1, f) + bulk_integrals(g, f).weighted
    r_b = ball.invert(ball.weighted_volume, bulk_integrals(g).dlam)
    return [GapReport.build(th, "weighted-volume", 1, None, f.name, lhs, ball.chi_minkowski(f, r_b),
                            _shape_meta(g), tol)]


def verify_volume_auxiliary(g, tol: float = GAP_TOL) -> list[GapReport]:
    """``int_Omega lam' dv >= h(f_0^{-1}(Vol(Omega)))`` for star-shaped domains (every radial graph)."""
    th = "volume-aux"
    _require(g.form.epsilon in (-1, 0), th, "checked in hyperbolic and Euclidean space")
    ball = BallFunctions(g.n, g.form)
    b = bulk_integrals(g)
    r = ball.invert(ball.volume, b.volume)
    return [GapReport.build(th, "volume", 0, 0, "none", b.dlam, float(ball.weighted_volume(r)),
                            _shape_meta(g), tol)]


THEOREMS = {
    "af-quermass": verify_quermass_af,
    "af-power": verify_power_weight_af,
    "minkowski-h": verify_hyperbolic_minkowski,
    "minkowski-s": verify_spherical_minkowski,
    "volume-aux": verify_volume_auxiliary,
}


def verify(theorem: str, g, k: int | None = None, l: int | None = None, weight: WeightFunction | None = None,
           alpha: float | None = None, tol: float = GAP_TOL) -> list[GapReport]:
    """Dispatch on the inequality identifier."""
    if theorem == "af-quermass":
        return verify_quermass_af(g, k, l, weight, tol)
    if theorem == "af-power":
        return verify_power_weight_af(g, k, l, alpha, tol)
    if theorem == "minkowski-h":
        return verify_hyperbolic_minkowski(g, weight, tol)
    if theorem == "minkowski-s":
        return verify_spherical_minkowski(g, weight, tol)
    if theorem == "volume-aux":
        return verify_volume_auxiliary(g, tol)
    raise ValueError(f"unknown inequality {theorem!r}; known: {', '.join(THEOREMS)}")


# ---------------------------------------------------------------------------
# flow audits
# ---------------------------------------------------------------------------

@dataclass
class AuditEntry:
    series: str
    expected: str
    max_violation: float
    interval: tuple | None
    passed: bool


@dataclass
class AuditReport:
    entries: list
    slack: float

    @property
    def passed(self) -> bool:
        return all(e.passed for e in self.entries)

    def to_dict(self) -> dict:
        return {"slack": self.slack, "passed": self.passed, "entries": [asdict(e) for e in self.entries]}


def monotonicity_audit(run: FlowRun, slack: float | None = None) -> AuditReport:
    """Verdict per monitored series with a proven direction.

    ``max_violation`` is the largest relative move against the expected
    direction over one sample interval (negative when every interval
    moves the right way); ``interval`` cites where it happened.
    """
    slack = run.config.get("monotonicity_slack", 1e-8) if slack is None else slack
    entries = []
    times = np.asarray(run.times)
    for name, direction in sorted(run.directions.items()):
        vals = run.series(name)
        sign = 1.0 if direction == "nonincreasing" else -1.0
        if len(vals) < 2:
            entries.append(AuditEntry(name, direction, -math.inf, None, True))
            continue
        moves = sign * np.diff(vals) / np.maximum(np.abs(vals[:-1]), 1e-300)
        i = int(np.argmax(moves))
        bad = check_monotone(times, vals, direction, slack)
        interval = (float(times[i]), float(times[i + 1]))
        entries.append(AuditEntry(name, direction, float(moves[i]), interval, not bad))
    return AuditReport(entries, slack)


# ---------------------------------------------------------------------------
# serialization
# ---------------------------------------------------------------------------

CSV_COLUMNS = ["theorem", "variant", "k", "l", "weight", "lhs", "rhs", "gap", "relative_gap", "equality", "passed",
               "epsilon", "n", "representation", "N", "seed", "draw", "amplitude", "rho_min", "rho_max"]


def _cell(x) -> str:
    if x is None:
        return ""
    if isinstance(x, bool):
        return "true" if x else "false"
    if isinstance(x, (int, np.integer)):
        return str(int(x))
    if isinstance(x, (float, np.floating)):
        return f"{float(x):.17g}"
    if isinstance(x, list):
        return "x".join(str(v) for v in x)
    return str(x)


def reports_to_csv(reports, path) -> None:
    """One row per (shape, inequality, variant, weight, k, l), 17 significant digits."""
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(CSV_COLUMNS)
        for r in reports:
            d = r.to_dict()
            d.update(d.pop("shape"))
            w.writerow([_cell(d.get(c)) for c in CSV_COLUMNS])


def reports_to_json(reports, path=None):
    data = [r.to_dict() for r in reports]
    if path is not None:
        Path(path).write_text(json.dumps(data, indent=1, sort_keys=True))
    return data


def weight_registry(s_range: tuple[float, float], n: int, alphas=(1.0, 1.5, 2.0, 3.0)) -> dict:
    """Built-in weights with the ``(condition, k)`` pairs each satisfies on ``s_range``."""
    out = {}
    for a in alphas:
        for maker in (power, linear_times_power, exp_times_power):
            w = maker(a)
            out[w.name] = {"weight": w, "admissible_for": sorted(w.admissible_for(s_range, n))}
    return out
