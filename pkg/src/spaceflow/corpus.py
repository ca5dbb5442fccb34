"""Random perturbed spheres that satisfy a prescribed convexity hypothesis.

Profile shapes are ``rho = r0 (1 + amplitude * sum_j c_j P_j(cos theta))``
with ``c_j`` uniform in ``[-1, 1]``; latitude-longitude shapes use real
spherical harmonics of low degree instead.  Samples are drawn from a
seeded generator and kept only when the hypothesis margin reaches the
requested floor, so the same seed always yields the same corpus.  Because
the amplitude multiplies a unit-box coefficient vector, rescaling the
amplitude with a fixed seed moves every shape along a fixed direction.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np
from scipy.special import eval_legendre, lpmv

from .hypersurface import ProfileGraph, SphereGraph, convexity_classify
from .spaceform import SpaceForm

__all__ = ["CorpusError", "CorpusShape", "Corpus", "hypothesis_margin", "generate", "legendre_shape",
           "harmonic_shape", "harmonic_modes", "rescaled", "default_hypothesis"]


class CorpusError(RuntimeError):
    """The rejection budget ran out before enough shapes were accepted."""


@dataclass
class CorpusShape:
    graph: object
    margins: dict
    provenance: dict


@dataclass
class Corpus:
    shapes: list
    attempts: int
    config: dict = field(default_factory=dict)

    @property
    def acceptance_rate(self) -> float:
        return len(self.shapes) / self.attempts if self.attempts else 1.0

    def __len__(self):
        return len(self.shapes)

    def __iter__(self):
        return iter(self.shapes)


def hypothesis_margin(g, hypothesis: str, hemisphere_margin: float = 0.05) -> float:
    """Margin of ``"static"``, ``"strict"``, ``"hconvex"`` or ``"kconvex:<k>"`` (positive means satisfied)."""
    rep = convexity_classify(g.geometry())
    if hypothesis == "static":
        return min(rep.static_margin, rep.strict_margin)
    if hypothesis == "strict":
        m = rep.strict_margin
        if g.form.epsilon == 1:
            m = min(m, 0.5 * math.pi - hemisphere_margin - float(g.rho.max()))
        return m
    if hypothesis == "hconvex":
        return rep.hconvex_margin
    if hypothesis.startswith("kconvex:"):
        return rep.kconvex_margins[int(hypothesis.split(":")[1])]
    raise ValueError(f"unknown hypothesis {hypothesis!r}")


def default_hypothesis(form: SpaceForm, k: int = 1) -> str:
    return {-1: "static", 0: f"kconvex:{k}", 1: "strict"}[form.epsilon]


def legendre_shape(n: int, form: SpaceForm, r0: float, coeffs, amplitude: float, N: int = 512,
                   method: str = "fd4") -> ProfileGraph:
    """Profile ``r0 (1 + amplitude * sum_j coeffs[j-1] P_j(cos theta))``."""
    theta = np.pi * np.arange(N + 1) / N
    x = np.cos(theta)
    pert = sum(c * eval_legendre(j, x) for j, c in enumerate(coeffs, start=1))
    return ProfileGraph(n, form, r0 * (1.0 + amplitude * pert), method=method)


def _real_harmonic(l: int, m: int, T, P):
    """Real spherical harmonic scaled to unit sup norm in ``theta``."""
    am = abs(m)
    t = np.linspace(0.0, np.pi, 2049)
    scale = np.abs(lpmv(am, l, np.cos(t))).max()
    radial = lpmv(am, l, np.cos(T)) / scale
    if m > 0:
        return radial * np.cos(am * P)
    if m < 0:
        return radial * np.sin(am * P)
    return radial


def harmonic_modes(degree: int) -> list[tuple[int, int]]:
    return [(l, m) for l in range(1, degree + 1) for m in range(-l, l + 1)]


def harmonic_shape(form: SpaceForm, r0: float, coeffs, amplitude: float, degree: int, n_theta: int = 64,
                   n_phi: int = 64) -> SphereGraph:
    """Latitude-longitude shape ``r0 (1 + amplitude * sum c_lm Y_lm)``."""
    modes = harmonic_modes(degree)

    def func(T, P):
        return r0 * (1.0 + amplitude * sum(c * _real_harmonic(l, m, T, P) for c, (l, m) in zip(coeffs, modes)))

    return SphereGraph.from_function(form, func, n_theta=n_theta, n_phi=n_phi)


def generate(n: int, form: SpaceForm, count: int, amplitude: float = 0.05, seed: int = 0, r0: float = 1.0,
             modes: int = 4, hypothesis: str | None = None, margin_floor: float = 0.01, N: int = 512,
             representation: str = "profile", n_phi: int | None = None, budget: int | None = None,
             k: int = 1, method: str = "fd4") -> Corpus:
    """Rejection-sample ``count`` shapes whose hypothesis margin is at least ``margin_floor``.

    ``modes`` is the highest Legendre index (profile) or harmonic degree
    (latitude-longitude grid).  ``budget`` caps the number of draws and
    defaults to ``20 * count + 20``.
    """
    if count < 0 or amplitude < 0:
        raise ValueError("count and amplitude must be non-negative")
    if representation == "sphere" and n != 3:
        raise ValueError("latitude-longitude shapes exist for n = 3 only")
    hypothesis = hypothesis or default_hypothesis(form, k)
    budget = 20 * count + 20 if budget is None else budget
    rng = np.random.default_rng(seed)
    ncoef = modes if representation == "profile" else len(harmonic_modes(modes))
    config = {"n": n, "epsilon": form.epsilon, "count": count, "amplitude": amplitude, "seed": seed, "r0": r0,
              "modes": modes, "hypothesis": hypothesis, "margin_floor": margin_floor, "N": N,
              "representation": representation, "method": method}
    shapes, attempts = [], 0
    while len(shapes) < count:
        if attempts >= budget:
            raise CorpusError(f"accepted {len(shapes)} of {count} shapes after {attempts} draws "
                              f"(acceptance rate {len(shapes) / max(attempts, 1):.3f})")
        coeffs = rng.uniform(-1.0, 1.0, ncoef)
        attempts += 1
        try:
            if representation == "profile":
                g = legendre_shape(n, form, r0, coeffs, amplitude, N=N, method=method)
            else:
                g = harmonic_shape(form, r0, coeffs, amplitude, modes, n_theta=N, n_phi=n_phi or N)
        except ValueError:
            continue
        margin = hypothesis_margin(g, hypothesis)
        if margin < margin_floor:
            continue
        prov = {"seed": seed, "draw": attempts - 1, "amplitude": amplitude, "r0": r0,
                "coefficients": [float(c) for c in coeffs]}
        g.metadata.update({"corpus": prov})
        rep = convexity_classify(g.geometry())
        shapes.append(CorpusShape(g, {"hypothesis": margin, "strict": rep.strict_margin,
                                      "static": rep.static_margin, "hconvex": rep.hconvex_margin}, prov))
    return Corpus(shapes, attempts, config)


def rescaled(shape: CorpusShape, amplitude: float, N: int | None = None):
    """The same coefficient direction at another amplitude."""
    g = shape.graph
    prov = shape.provenance
    if isinstance(g, ProfileGraph):
        return legendre_shape(g.n, g.form, prov["r0"], prov["coefficients"], amplitude, N=N or g.N, method=g.method)
    degree = int(round(math.sqrt(len(prov["coefficients"]) + 1))) - 1
    nt, nphi = g.N
    return harmonic_shape(g.form, prov["r0"], prov["coefficients"], amplitude, degree, n_theta=N or nt, n_phi=nphi)
