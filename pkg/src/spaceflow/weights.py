"""Weight functions ``f`` applied to ``Phi`` and their admissibility conditions."""

from __future__ import annotations

import json
import math
from dataclasses import dataclass, field
from pathlib import Path
from typing import Callable, NamedTuple

import numpy as np

__all__ = [
    "WeightFunction",
    "AdmissibilityReport",
    "admissibility",
    "condition_for",
    "power",
    "linear_times_power",
    "exp_times_power",
    "constant",
    "from_expression",
    "from_spec",
    "REGISTRY_IDS",
]


@dataclass(frozen=True)
class WeightFunction:
    """Scalar weight ``f`` together with ``f'`` and ``f''``.

    All three callables must accept numpy arrays of positive arguments.
    """

    name: str
    f: Callable = field(repr=False)
    df: Callable = field(repr=False)
    d2f: Callable = field(repr=False)

    def __call__(self, s):
        return self.f(np.asarray(s, dtype=float))

    def derivative(self, s):
        return self.df(np.asarray(s, dtype=float))

    def second_derivative(self, s):
        return self.d2f(np.asarray(s, dtype=float))

    def derivative_defect(self, s_range: tuple[float, float], samples: int = 1000) -> float:
        """Largest relative mismatch between central differences and the supplied derivatives."""
        s = np.linspace(*s_range, samples)
        h = 1e-5 * np.maximum(1.0, s)
        fd1 = (self.f(s + h) - self.f(s - h)) / (2 * h)
        fd2 = (self.df(s + h) - self.df(s - h)) / (2 * h)
        d1, d2 = self.df(s), self.d2f(s)
        e1 = np.abs(fd1 - d1) / np.maximum(np.abs(d1), np.abs(self.f(s)) / np.maximum(s, 1e-300))
        e2 = np.abs(fd2 - d2) / np.maximum(np.abs(d2), np.abs(d1) / np.maximum(s, 1e-300))
        return float(max(e1.max(), e2.max()))

    def admissible_for(self, s_range: tuple[float, float], n: int) -> set[tuple[str, int]]:
        """Conditions ``(name, k)`` this weight satisfies on ``s_range``."""
        out = set()
        for k in range(1, n):
            for eps in (-1, 1):
                if k > 1 and eps == 1:
                    continue
                rep = admissibility(self, k, s_range, epsilon=eps)
                if rep.admissible:
                    out.add((rep.condition, k))
        return out


class AdmissibilityReport(NamedTuple):
    admissible: bool
    condition: str
    margin: float
    checks: dict


def condition_for(k: int, epsilon: int) -> tuple[str, float | None]:
    """Name of the growth condition and its exponent ``c`` in ``f'(s) >= c f(s)/s``."""
    if k >= 2:
        return "af", k / (k - 1)
    if epsilon == 1:
        return "convex", None
    return "ratio", 1.0


def admissibility(f: WeightFunction, k: int, s_range: tuple[float, float], epsilon: int = -1,
                  samples: int = 1000, tol: float = 1e-12) -> AdmissibilityReport:
    """Sampled check of the hypotheses a weight must satisfy for order ``k``.

    Every weight must be positive, non-decreasing and convex.  On top of that:

    * ``k >= 2``: ``f'(s) >= k/(k-1) f(s)/s``, equivalently ``f(s)/s^(k/(k-1))``
      non-decreasing;
    * ``k == 1`` in hyperbolic space: ``(f(s)/s)' >= 0``;
    * ``k == 1`` in the sphere: nothing further.

    ``margin`` is the smallest normalized value of the order-specific
    condition, ``(f' - c f/s) / (f' + c f/s)``, or of ``min(f', f'')/f``
    when only convexity is required.
    """
    lo, hi = s_range
    if not (0 < lo < hi and math.isfinite(hi)):
        raise ValueError(f"degenerate sampling range {s_range!r}")
    if k < 1:
        raise ValueError("order must be >= 1")
    s = np.linspace(lo, hi, samples)
    fv, d1, d2 = f(s), f.derivative(s), f.second_derivative(s)
    scale = np.maximum(np.abs(fv), 1e-300)
    checks = {
        "positive": bool(np.all(fv > 0)),
        "nondecreasing": bool(np.all(d1 >= -tol * scale / s)),
        "convex": bool(np.all(d2 >= -tol * scale / s ** 2)),
    }
    cond, c = condition_for(k, epsilon)
    if c is None:
        margin = float(np.min(np.minimum(d1 * s, d2 * s * s) / scale))
        ok = True
    else:
        lhs, rhs = d1, c * fv / s
        margin = float(np.min((lhs - rhs) / np.maximum(np.abs(lhs) + np.abs(rhs), 1e-300)))
        ratio = fv / s ** c
        steps = np.diff(ratio)
        checks["equivalent_form"] = bool(np.all(steps >= -1e-12 * np.abs(ratio[:-1])))
        ok = margin >= -tol and checks["equivalent_form"]
        checks["growth"] = margin >= -tol
    admissible = ok and checks["positive"] and checks["nondecreasing"] and checks["convex"]
    return AdmissibilityReport(bool(admissible), cond, margin, checks)


def power(alpha: float) -> WeightFunction:
    """``f(s) = s^alpha``."""
    a = float(alpha)
    return WeightFunction(
        f"pow:{alpha:g}",
        lambda s: s ** a,
        lambda s: a * s ** (a - 1),
        lambda s: a * (a - 1) * s ** (a - 2),
    )


def linear_times_power(alpha: float) -> WeightFunction:
    """``f(s) = (1 + s) s^alpha``."""
    a = float(alpha)
    return WeightFunction(
        f"lin_pow:{alpha:g}",
        lambda s: (1 + s) * s ** a,
        lambda s: s ** a + a * (1 + s) * s ** (a - 1),
        lambda s: 2 * a * s ** (a - 1) + a * (a - 1) * (1 + s) * s ** (a - 2),
    )


def exp_times_power(alpha: float) -> WeightFunction:
    """``f(s) = e^s s^alpha``."""
    a = float(alpha)
    return WeightFunction(
        f"exp_pow:{alpha:g}",
        lambda s: np.exp(s) * s ** a,
        lambda s: np.exp(s) * (s ** a + a * s ** (a - 1)),
        lambda s: np.exp(s) * (s ** a + 2 * a * s ** (a - 1) + a * (a - 1) * s ** (a - 2)),
    )


def constant(c: float = 1.0) -> WeightFunction:
    c = float(c)
    if c <= 0:
        raise ValueError("constant weight must be positive")
    return WeightFunction(
        f"const:{c:g}",
        lambda s: np.full_like(np.asarray(s, dtype=float), c),
        lambda s: np.zeros_like(np.asarray(s, dtype=float)),
        lambda s: np.zeros_like(np.asarray(s, dtype=float)),
    )


def from_expression(expr: str, name: str | None = None) -> WeightFunction:
    """Build a weight from a sympy expression in the variable ``s``."""
    import sympy

    s = sympy.Symbol("s", positive=True)
    e = sympy.sympify(expr, locals={"s": s})
    funcs = [sympy.lambdify(s, d, "numpy") for d in (e, sympy.diff(e, s), sympy.diff(e, s, 2))]

    def wrap(fn):
        return lambda x: np.asarray(fn(x), dtype=float) + np.zeros_like(np.asarray(x, dtype=float))

    return WeightFunction(name or f"expr:{expr}", *[wrap(fn) for fn in funcs])


REGISTRY_IDS = ("pow:<alpha>", "lin_pow:<alpha>", "exp_pow:<alpha>", "const:<c>", "expr:<sympy in s>",
                "<path>.json")


def from_spec(spec: str) -> WeightFunction:
    """Resolve a registry id such as ``pow:2`` or a JSON weight file."""
    if spec.endswith(".json") and Path(spec).exists():
        data = json.loads(Path(spec).read_text())
        return from_expression(data["expr"], data.get("name"))
    kind, _, arg = spec.partition(":")
    makers = {"pow": power, "lin_pow": linear_times_power, "exp_pow": exp_times_power, "const": constant}
    if kind == "expr":
        return from_expression(arg)
    if kind in makers:
        return makers[kind](float(arg) if arg else 1.0)
    raise ValueError(f"unknown weight {spec!r}; known forms: {', '.join(REGISTRY_IDS)}")
