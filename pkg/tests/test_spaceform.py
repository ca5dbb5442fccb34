import math

import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st
from scipy import integrate

from spaceflow.spaceform import (
    EUCLIDEAN,
    HYPERBOLIC,
    SPHERICAL,
    BallFunctions,
    BracketError,
    DomainError,
    SpaceForm,
    eval_warp,
    invert_comparison,
    radial_integral,
    sphere_area,
)
from spaceflow.weights import constant, power

FORMS = (HYPERBOLIC, EUCLIDEAN, SPHERICAL)


def test_rejects_bad_epsilon():
    with pytest.raises(ValueError):
        SpaceForm(2)


@pytest.mark.parametrize("form", FORMS)
def test_warp_identity_random(form, rng):
    hi = 3.0 if form.epsilon == 1 else 8.0
    r = rng.uniform(0, hi, 10_000)
    lam, dlam, Phi = eval_warp(form, r)
    assert np.max(np.abs(dlam + form.epsilon * Phi - 1.0)) < 1e-14 * np.maximum(1, np.abs(dlam)).max()


def test_warp_examples():
    assert eval_warp(HYPERBOLIC, 0.0) == (0.0, 1.0, 0.0)
    lam, dlam, Phi = eval_warp(HYPERBOLIC, 1.0)
    assert lam == pytest.approx(1.175201, abs=1e-6)
    assert dlam == pytest.approx(1.543081, abs=1e-6)
    assert Phi == pytest.approx(0.543081, abs=1e-6)
    lam, dlam, Phi = eval_warp(SPHERICAL, math.pi / 2)
    assert (lam, Phi) == pytest.approx((1.0, 1.0), abs=1e-15)
    assert abs(dlam) < 1e-15


def test_warp_domain_errors():
    with pytest.raises(DomainError):
        eval_warp(HYPERBOLIC, -0.1)
    with pytest.raises(DomainError):
        eval_warp(SPHERICAL, math.pi)
    with pytest.raises(DomainError):
        eval_warp(EUCLIDEAN, float("nan"))


@pytest.mark.parametrize("form", FORMS)
def test_phi_is_primitive_of_lambda(form, rng):
    r = rng.uniform(0.05, 2.5, 200)
    h = 1e-5 * np.maximum(1.0, r)
    fd = (form.Phi(r + h) - form.Phi(r - h)) / (2 * h)
    assert np.max(np.abs(fd / form.lam(r) - 1)) < 1e-8


def test_sphere_area_values():
    assert sphere_area(1) == pytest.approx(2 * math.pi, rel=1e-15)
    assert sphere_area(2) == pytest.approx(4 * math.pi, rel=1e-15)
    assert sphere_area(3) == pytest.approx(2 * math.pi ** 2, rel=1e-15)
    assert sphere_area(4) == pytest.approx(8 * math.pi ** 2 / 3, rel=1e-15)


def test_radial_integral_against_quad(rng):
    f = power(2.5)
    for form in FORMS:
        for rho in rng.uniform(0.1, 1.4, 5):
            ref, _ = integrate.quad(lambda s: f(form.Phi(s)) * form.lam(s) ** 4, 0, rho, epsrel=1e-13)
            assert radial_integral(form, 5, rho, f) == pytest.approx(ref, rel=1e-12)


def test_ball_quermassintegral_examples():
    b = BallFunctions(3, HYPERBOLIC)
    assert b.quermassintegral(3, 0.7) == pytest.approx(4 * math.pi / 3, rel=1e-15)
    assert b.quermassintegral(1, 1.0) == pytest.approx(2 * math.pi * math.sinh(1) ** 2, rel=1e-14)
    assert b.quermassintegral(2, 1.0) == pytest.approx(math.pi * (math.sinh(2) + 2), rel=1e-13)
    assert b.quermassintegral(0, 1.0) == pytest.approx(math.pi * (math.sinh(2) - 2), rel=1e-13)
    with pytest.raises(ValueError):
        b.quermassintegral(4, 1.0)


@pytest.mark.parametrize("n", [3, 4, 5, 6])
@pytest.mark.parametrize("form", FORMS)
def test_ball_quermass_small_radius_is_euclidean(n, form):
    # Euclidean balls: W_l = omega r^(n-l) / (n-l) for l < n, W_n = omega / n
    b = BallFunctions(n, form)
    r = 1e-3
    for l in range(n + 1):
        eucl = sphere_area(n - 1) * r ** (n - l) / (n - l if l < n else n)
        assert b.quermassintegral(l, r) / eucl == pytest.approx(1.0, rel=1e-2)


@pytest.mark.parametrize("form", FORMS)
def test_ball_quermass_recursion_matches_direct_sum(form):
    # independent oracle: direct expansion of the recursion written out for n = 5
    n, r = 5, 0.9
    b = BallFunctions(n, form)
    lam, dlam, _ = form.warp(r)
    w = sphere_area(n - 1)
    I = [w * lam ** (n - 1 - k) * dlam ** k for k in range(n)]
    eps = form.epsilon
    W0 = b.volume(r)
    W1 = I[0] / 4
    W2 = I[1] / 3 + eps * W0 / 3
    W3 = I[2] / 2 + eps * 2 / 2 * W1
    W4 = I[3] / 1 + eps * 3 * W2
    for l, ref in enumerate([W0, W1, W2, W3, W4]):
        assert b.quermassintegral(l, r) == pytest.approx(ref, rel=1e-13)
    # in every form W_n = omega / n
    assert b.quermassintegral(5, r) == pytest.approx(w / 5)


def test_chi_examples():
    b = BallFunctions(3, HYPERBOLIC)
    s1, c1 = math.sinh(1), math.cosh(1)
    assert b.chi_k(0, power(1), 1.0) == pytest.approx(4 * math.pi * s1 ** 2 * (c1 - 1), rel=1e-14)
    assert b.chi_k(2, power(2), 1.0) == pytest.approx(4 * math.pi * s1 ** 2 * (c1 - 1) ** 2 * (c1 / s1) ** 2,
                                                      rel=1e-14)
    assert b.chi_k(2, power(2), 1.0) == pytest.approx(8.8250, abs=1e-4)
    assert BallFunctions(3, EUCLIDEAN).chi_k(0, constant(1), 2.0) == pytest.approx(16 * math.pi)


def test_weighted_volume_and_xi():
    b = BallFunctions(3, HYPERBOLIC)
    assert b.weighted_volume(1.0) == pytest.approx(4 * math.pi / 3 * math.sinh(1) ** 3, rel=1e-14)
    assert b.weighted_volume(1.0) == pytest.approx(6.7987, abs=1e-4)
    assert b.weighted_volume(0.0) == 0.0
    assert BallFunctions(3, SPHERICAL).weighted_volume(math.pi / 2) == pytest.approx(4 * math.pi / 3)
    assert b.xi(1.0) == pytest.approx(4 * math.pi * math.sinh(1) ** 2, rel=1e-14)
    assert BallFunctions(4, EUCLIDEAN).xi(1.0) == pytest.approx(2 * math.pi ** 2)


@pytest.mark.parametrize("form", FORMS)
@pytest.mark.parametrize("n", [3, 5])
def test_weighted_volume_matches_radial_quadrature(form, n):
    b = BallFunctions(n, form)
    for r in (0.3, 0.8, 1.3):
        ref, _ = integrate.quad(lambda s: form.dlam(s) * form.lam(s) ** (n - 1), 0, r, epsrel=1e-13)
        assert b.weighted_volume(r) == pytest.approx(b.omega * ref, rel=1e-10)


def test_chi_minkowski_examples():
    b = BallFunctions(3, HYPERBOLIC)
    f = power(1)
    ref_bulk, _ = integrate.quad(lambda s: (math.cosh(s) - 1) * math.sinh(s) ** 2, 0, 1, epsrel=1e-14)
    expected = 4 * math.pi * math.sinh(1) * math.cosh(1) * (math.cosh(1) - 1) - 4 * math.pi * ref_bulk
    assert b.chi_minkowski(f, 1.0) == pytest.approx(expected, rel=1e-10)
    # O(r^3) at the origin
    small = [abs(b.chi_minkowski(f, r)) for r in (1e-2, 5e-3)]
    assert small[0] / small[1] == pytest.approx(8.0, rel=0.05)
    bs = BallFunctions(3, SPHERICAL)
    assert bs.chi_minkowski(constant(1), math.pi / 2) == pytest.approx(math.pi ** 2, rel=1e-10)


def test_bulk_weight_integral_against_fixed_rule():
    # oracle: Gauss-Legendre at two resolutions
    b = BallFunctions(4, HYPERBOLIC)
    f = power(3)
    x, w = np.polynomial.legendre.leggauss(200)
    s = 0.75 * (x + 1)
    ref = b.omega * 0.75 * np.sum(w * f(HYPERBOLIC.Phi(s)) * np.sinh(s) ** 3)
    assert b.bulk_weight_integral(f, 1.5) == pytest.approx(ref, rel=1e-12)


@pytest.mark.parametrize("form", FORMS)
@given(r=st.floats(0.05, 1.4), d=st.floats(1e-3, 0.1))
def test_comparison_functions_increase(form, r, d):
    b = BallFunctions(3, form)
    # the functions that get inverted increase on the whole bracket; chi_k (k >= 1) is
    # not monotone in the sphere because lam' = cos r vanishes on the equator
    fns = [b.volume, b.weighted_volume, b.xi, lambda t: b.quermassintegral(1, t),
           lambda t: b.quermassintegral(2, t)]
    if form.epsilon != 1:
        fns += [lambda t: b.chi_k(1, power(2), t), lambda t: b.chi_minkowski(power(1), t)]
    for fn in fns:
        assert fn(r + d) > fn(r)


@pytest.mark.parametrize("form", FORMS)
@given(r=st.floats(0.05, 1.5))
def test_inversion_roundtrip(form, r):
    b = BallFunctions(3, form)
    for fn in (b.xi, b.weighted_volume, b.volume, lambda t: b.quermassintegral(2, t)):
        y = float(fn(r))
        rr = b.invert(fn, y)
        assert abs(rr - r) <= 1e-10
        assert abs(fn(rr) - y) <= 1e-12 * max(1.0, abs(y))


def test_inversion_examples_and_errors():
    b = BallFunctions(3, HYPERBOLIC)
    assert b.invert(b.xi, 4 * math.pi * math.sinh(1) ** 2) == pytest.approx(1.0, abs=1e-10)
    assert b.invert(b.weighted_volume, 4 * math.pi / 3 * math.sinh(2) ** 3) == pytest.approx(2.0, abs=1e-10)
    with pytest.raises(BracketError):
        b.invert(b.xi, -1.0)
    with pytest.raises(BracketError):
        invert_comparison(lambda t: t, 5.0, (0.0, 1.0))


def test_spherical_bracket_stays_in_hemisphere():
    b = BallFunctions(3, SPHERICAL)
    assert b.bracket == (0.0, math.pi / 2)
    with pytest.raises(BracketError):
        b.invert(b.weighted_volume, b.weighted_volume(math.pi / 2) * 1.01)
