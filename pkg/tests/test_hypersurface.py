import json
import math

import numpy as np
import pytest
from scipy import integrate

from spaceflow.hypersurface import (
    ProfileGraph,
    SphereGraph,
    bulk_integrals,
    convexity_classify,
    curvature_integral,
    divergence_identity_residual,
    enclosed_volume,
    gradient_identity_residual,
    hessian_identity_residual,
    load_shape,
    minkowski_residual,
    polar_weights,
    quermassintegrals,
    save_shape,
    shape_from_dict,
    shape_to_dict,
    weighted_curvature_integral,
)
from spaceflow.spaceform import EUCLIDEAN, HYPERBOLIC, SPHERICAL, BallFunctions, SpaceForm, sphere_area
from spaceflow.weights import constant, power

FORMS = (HYPERBOLIC, EUCLIDEAN, SPHERICAL)


def off_center_sphere(R, a):
    """Radial function of the hyperbolic geodesic sphere of radius R centred at distance a on the x axis."""
    def rho(T, P):
        A = np.cosh(a)
        B = np.sinh(a) * np.sin(T) * np.cos(P)
        return np.arctanh(B / A) + np.arccosh(np.cosh(R) / np.sqrt(A * A - B * B))
    return rho


def ellipsoid(a, c):
    """Euclidean spheroid x^2/a^2 + y^2/a^2 + z^2/c^2 = 1 as rho(theta)."""
    return lambda t: 1.0 / np.sqrt(np.sin(t) ** 2 / a ** 2 + np.cos(t) ** 2 / c ** 2)


@pytest.mark.parametrize("N", [8, 16, 40])
def test_polar_weights_exact_on_cosines(N):
    for n in (3, 4, 5, 6):
        w = polar_weights(N, n)
        theta = np.pi * np.arange(N + 1) / N
        for m in range(N + 1):
            ref, _ = integrate.quad(lambda t: np.cos(m * t) * np.sin(t) ** (n - 2), 0, np.pi, limit=200)
            assert np.dot(w, np.cos(m * theta)) == pytest.approx(ref, abs=1e-12)


def test_input_validation():
    with pytest.raises(ValueError):
        ProfileGraph(3, HYPERBOLIC, np.ones(5))
    with pytest.raises(ValueError):
        ProfileGraph(3, HYPERBOLIC, np.full(33, -1.0))
    with pytest.raises(ValueError):
        ProfileGraph(3, HYPERBOLIC, np.full(33, 1e-9))
    with pytest.raises(ValueError):
        ProfileGraph(2, HYPERBOLIC, np.ones(33))
    with pytest.raises(ValueError):
        SphereGraph(HYPERBOLIC, np.ones((9, 7)))


@pytest.mark.parametrize("form", FORMS)
@pytest.mark.parametrize("n", [3, 4, 6])
def test_geodesic_sphere_pointwise(form, n):
    r = 0.8
    geo = ProfileGraph.sphere(n, form, r, N=64).geometry()
    lam, dlam, _ = form.warp(r)
    assert np.allclose(geo.kappa, dlam / lam, rtol=1e-12)
    assert np.allclose(geo.u, lam, rtol=1e-14)
    assert np.allclose(geo.v, 1.0, rtol=1e-15)
    assert geo.area == pytest.approx(sphere_area(n - 1) * lam ** (n - 1), rel=1e-12)


def test_geodesic_sphere_examples():
    geo = ProfileGraph.sphere(3, HYPERBOLIC, 1.0, N=128).geometry()
    assert np.allclose(geo.kappa, 1.313035, atol=1e-6)
    assert curvature_integral(geo, 1) == pytest.approx(2 * math.pi * math.sinh(2), rel=1e-12)
    assert curvature_integral(geo, 1) == pytest.approx(22.788, abs=1e-3)
    geo0 = ProfileGraph.sphere(3, EUCLIDEAN, 1.0, N=128).geometry()
    assert curvature_integral(geo0, 2) == pytest.approx(4 * math.pi, rel=1e-12)
    assert np.allclose(geo0.kappa, 1.0) and np.allclose(geo0.u, 1.0)
    rep = convexity_classify(geo)
    assert rep.static_margin == pytest.approx(1 / math.tanh(1) - math.tanh(1), rel=1e-12)
    assert rep.hconvex_margin == pytest.approx(1 / math.tanh(1) - 1, rel=1e-12)
    assert rep.strictly_convex and rep.static_convex and rep.h_convex and rep.k_convex(2)


def test_eccentric_shape_not_static_convex():
    g = ProfileGraph.from_function(3, HYPERBOLIC, lambda t: 1 + 0.9 * np.cos(2 * t), N=256)
    assert convexity_classify(g.geometry()).static_margin < 0


@pytest.mark.parametrize("form", FORMS)
def test_geodesic_sphere_integrals(form):
    n, r = 4, 0.7
    g = ProfileGraph.sphere(n, form, r, N=512)
    b = BallFunctions(n, form)
    W = quermassintegrals(g, up_to=n)
    ref = [b.quermassintegral(l, r) for l in range(n + 1)]
    assert np.allclose(W, ref, rtol=1e-12)
    geo = g.geometry()
    for k in range(n):
        assert weighted_curvature_integral(geo, k, power(2)) == pytest.approx(b.chi_k(k, power(2), r), rel=1e-10)
        assert weighted_curvature_integral(geo, k, constant(1)) == pytest.approx(curvature_integral(geo, k))
    bulk = bulk_integrals(g, power(3))
    assert bulk.volume == pytest.approx(b.volume(r), rel=1e-12)
    assert bulk.dlam == pytest.approx(b.weighted_volume(r), rel=1e-12)
    assert bulk.weighted == pytest.approx(b.bulk_weight_integral(power(3), r), rel=1e-10)
    assert bulk_integrals(g).weighted == bulk.volume


def test_hyperbolic_sphere_quermass_examples():
    W = quermassintegrals(ProfileGraph.sphere(3, HYPERBOLIC, 1.0, N=128))
    assert W[0] == pytest.approx(math.pi * (math.sinh(2) - 2), rel=1e-12)
    assert W[1] == pytest.approx(2 * math.pi * math.sinh(1) ** 2, rel=1e-12)
    assert W[2] == pytest.approx(math.pi * (math.sinh(2) + 2), rel=1e-12)


def test_tiny_sphere_bulk_vanishes():
    b = bulk_integrals(ProfileGraph.sphere(3, HYPERBOLIC, 1e-4, N=32), power(1))
    assert max(b) < 1e-11


def test_euclidean_spheroid_oracle():
    # closed forms: Gauss curvature integrates to 4 pi; area and volume of a prolate spheroid
    a, c = 1.0, 1.3
    e = math.sqrt(1 - a * a / (c * c))
    area = 2 * math.pi * a * a * (1 + c / (a * e) * math.asin(e))
    errs = []
    for N in (64, 128, 256):
        g = ProfileGraph.from_function(3, EUCLIDEAN, ellipsoid(a, c), N=N)
        geo = g.geometry()
        errs.append(abs(geo.area / area - 1))
        assert curvature_integral(geo, 2) == pytest.approx(4 * math.pi, rel=1e-5)
        assert enclosed_volume(g) == pytest.approx(4 * math.pi / 3 * a * a * c, rel=1e-12)
        # principal curvatures at the poles: c / a^2 (both); at the equator: 1/a and a / c^2
        assert geo.kappa[0] == pytest.approx([c / a ** 2] * 2, rel=1e-5)
        assert sorted(geo.kappa[N // 2]) == pytest.approx(sorted([1 / a, a / c ** 2]), rel=1e-5)
    assert errs[-1] < 1e-8


def test_off_center_sphere_sphere_graph():
    R, a = 1.0, 0.3
    errs = []
    for nt in (16, 32, 64):
        geo = SphereGraph.from_function(HYPERBOLIC, off_center_sphere(R, a), n_theta=nt, n_phi=2 * nt).geometry()
        errs.append(np.abs(geo.kappa - 1 / math.tanh(R)).max())
        assert geo.area == pytest.approx(4 * math.pi * math.sinh(R) ** 2, rel=1e-4)
    assert errs[1] < errs[0] / 6 and errs[2] < errs[1] / 6


def test_off_center_sphere_profile():
    # an off-centre sphere along the polar axis is rotationally symmetric
    R, a = 0.9, 0.25
    g = ProfileGraph.from_function(3, HYPERBOLIC, lambda t: _axial(R, a, t), N=256)
    geo = g.geometry()
    assert np.abs(geo.kappa - 1 / math.tanh(R)).max() < 1e-6
    assert geo.area == pytest.approx(4 * math.pi * math.sinh(R) ** 2, rel=1e-9)
    assert quermassintegrals(g)[0] == pytest.approx(BallFunctions(3, HYPERBOLIC).volume(R), rel=1e-9)


def _axial(R, a, t):
    A = np.cosh(a)
    B = np.sinh(a) * np.cos(t)
    return np.arctanh(B / A) + np.arccosh(np.cosh(R) / np.sqrt(A * A - B * B))


def test_cross_representation_agreement():
    f = lambda t: 1 + 0.05 * np.cos(2 * t) + 0.03 * np.cos(t)
    p = ProfileGraph.from_function(3, HYPERBOLIC, f, N=256)
    s = SphereGraph.from_function(HYPERBOLIC, lambda T, P: f(T), n_theta=128, n_phi=16)
    gp, gs = p.geometry(), s.geometry()
    assert gs.area == pytest.approx(gp.area, rel=1e-6)
    assert np.allclose(quermassintegrals(s), quermassintegrals(p), rtol=1e-6)
    for k in (0, 1, 2):
        assert weighted_curvature_integral(gs, k, power(2)) == pytest.approx(
            weighted_curvature_integral(gp, k, power(2)), rel=1e-6)
    assert bulk_integrals(s, power(2)).weighted == pytest.approx(bulk_integrals(p, power(2)).weighted, rel=1e-9)


def test_sphere_graph_longitude_rotation_invariance(rng):
    f = off_center_sphere(0.8, 0.2)
    g = SphereGraph.from_function(HYPERBOLIC, lambda T, P: f(T, P) * (1 + 0.02 * np.sin(T) ** 2 * np.sin(3 * P)),
                                  n_theta=32, n_phi=32)
    a0 = g.geometry().area
    for shift in (1, 5, 16):
        assert g.with_rho(np.roll(g.rho, shift, axis=1)).geometry().area == pytest.approx(a0, rel=1e-13)
    assert a0 > 0


def test_sphere_graph_pole_synchronization():
    rho = np.ones((17, 8))
    rho[0] = np.linspace(0.9, 1.1, 8)
    g = SphereGraph(HYPERBOLIC, rho)
    assert np.ptp(g.rho[0]) == 0 and g.rho[0, 0] == pytest.approx(1.0)


def perturbed(N, n=3, form=HYPERBOLIC, method="fd4"):
    return ProfileGraph.from_function(n, form, lambda t: 1 + 0.06 * np.cos(2 * t) + 0.03 * np.cos(t)
                                      - 0.02 * np.cos(3 * t), N=N, method=method)


@pytest.mark.parametrize("form", FORMS)
@pytest.mark.parametrize("n", [3, 5])
def test_identity_residuals_converge(form, n):
    ratios = []
    for N in (32, 64, 128):
        g = perturbed(N, n, form)
        geo = g.geometry()
        res = [minkowski_residual(geo, k) for k in range(1, n)]
        res += [divergence_identity_residual(geo, k) for k in range(1, n)]
        res += [hessian_identity_residual(g), gradient_identity_residual(g)]
        ratios.append(np.array(res))
    assert np.all(ratios[1] / ratios[2] >= 3.5)
    assert np.all(ratios[0] / ratios[1] >= 3.5)


def test_divergence_k1_consistency():
    geo = perturbed(64).geometry()
    a = divergence_identity_residual(geo, 1)
    b = minkowski_residual(geo, 1)
    assert a == pytest.approx(b, rel=1e-9)


def test_residuals_vanish_on_spheres():
    for form in FORMS:
        g = ProfileGraph.sphere(4, form, 0.6, N=64)
        geo = g.geometry()
        for k in (1, 2, 3):
            assert minkowski_residual(geo, k) < 1e-14
            assert divergence_identity_residual(geo, k) < 1e-14
        assert hessian_identity_residual(g) < 1e-12
        assert gradient_identity_residual(g) < 1e-12


def test_spectral_derivatives_are_more_accurate():
    ref = perturbed(512).geometry().area
    a4 = perturbed(32).geometry().area
    asp = perturbed(32, method="spectral").geometry().area
    assert abs(asp - ref) < abs(a4 - ref)


def test_quermass_between_inscribed_and_circumscribed_balls():
    g = perturbed(128)
    b = BallFunctions(3, HYPERBOLIC)
    W = quermassintegrals(g)
    lo, hi = g.rho.min(), g.rho.max()
    for l in range(3):
        assert b.quermassintegral(l, lo) < W[l] < b.quermassintegral(l, hi)


def test_serialization_roundtrip(tmp_path):
    g = perturbed(64)
    g.metadata["tag"] = "x"
    save_shape(g, tmp_path / "s.json")
    h = load_shape(tmp_path / "s.json")
    assert np.array_equal(h.rho, g.rho) and h.metadata["tag"] == "x" and h.n == 3
    s = SphereGraph.from_function(SPHERICAL, lambda T, P: 0.5 + 0.01 * np.sin(T) * np.cos(P), 8, 8)
    d = json.loads(json.dumps(shape_to_dict(s)))
    assert np.array_equal(shape_from_dict(d).rho, s.rho)
    with pytest.raises(ValueError):
        shape_from_dict({**d, "representation": "mesh"})


def test_spherical_antipode_guard():
    with pytest.raises(ValueError):
        ProfileGraph.sphere(3, SPHERICAL, math.pi - 1e-9, N=16)


def test_to_sphere_graph_resample():
    p = perturbed(64)
    s = p.to_sphere_graph(n_phi=8)
    assert s.rho.shape == (65, 8)
    assert quermassintegrals(s)[1] == pytest.approx(quermassintegrals(p)[1], rel=1e-6)
