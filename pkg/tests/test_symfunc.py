import itertools
import math
from math import comb

import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st
from hypothesis.extra import numpy as hnp

from spaceflow.symfunc import (
    ConeViolation,
    H_all,
    H_k,
    ShapeOperator,
    gamma_cone,
    newton_maclaurin_check,
    newton_tensor,
    quotient_derivative,
    quotient_derivative_pd,
    sigma,
    sigma_all,
    sigma_deleted,
)


def sigma_enum(kappa, k):
    """Oracle: sum over k-subsets."""
    return sum(math.prod(c) for c in itertools.combinations(kappa, k))


def faddeev_sigma(S):
    """Oracle: characteristic polynomial coefficients by Faddeev-LeVerrier (works for complex S)."""
    m = S.shape[0]
    c = [1.0 + 0j]
    M = np.zeros_like(S, dtype=complex)
    eye = np.eye(m)
    for k in range(1, m + 1):
        M = S @ M + c[-1] * eye
        c.append(-np.trace(S @ M) / k)
    # det(tI - S) = sum c_k t^(m-k); sigma_k = (-1)^k c_k
    return np.array([(-1) ** k * c[k] for k in range(m + 1)])


def random_cone(rng, m, k, size):
    """Rejection-sample curvature vectors in Gamma_k."""
    out = []
    while len(out) < size:
        kap = rng.normal(1.0, 1.2, m)
        if gamma_cone(kap, k).member:
            out.append(kap)
    return np.array(out)


def random_symmetric_with(kappa, rng):
    Q, _ = np.linalg.qr(rng.normal(size=(kappa.size, kappa.size)))
    return Q @ np.diag(kappa) @ Q.T


def test_sigma_examples():
    assert np.allclose(sigma_all([1, 2, 3]), [1, 6, 11, 6])
    assert np.allclose(sigma_all([0, 0, 0, 0]), [1, 0, 0, 0, 0])
    assert sigma([1, 2, 3], 5) == 0.0
    assert H_k([1, 2, 3], 2) == pytest.approx(11 / 3)
    assert H_k([1, 2, 3], 0) == 1.0
    with pytest.raises(ValueError):
        H_k([1, 2, 3], 4)
    with pytest.raises(ValueError):
        sigma_all([1.0])
    with pytest.raises(ValueError):
        sigma_all([1.0, np.inf])


@given(c=st.floats(-3, 3), m=st.integers(2, 7))
def test_isotropic_sigma(c, m):
    s = sigma_all(np.full(m, c))
    for k in range(m + 1):
        assert s[k] == pytest.approx(comb(m, k) * c ** k, rel=1e-12, abs=1e-12)
    assert np.allclose(H_all(np.full(m, c)), [c ** k for k in range(m + 1)], rtol=1e-12, atol=1e-12)


def test_sigma_matches_subset_enumeration(rng):
    for _ in range(1000):
        m = int(rng.integers(2, 7))
        kap = rng.normal(0, 2, m)
        s = sigma_all(kap)
        for k in range(m + 1):
            ref = sigma_enum(kap, k)
            assert abs(s[k] - ref) <= 1e-12 * max(1.0, sum(abs(x) for x in itertools.chain([ref]))) * 10 ** k


def test_sigma_batched_matches_single(rng):
    kap = rng.normal(size=(7, 5, 4))
    batch = sigma_all(kap)
    assert batch.shape == (7, 5, 5)
    assert np.allclose(batch[3, 2], sigma_all(kap[3, 2]), rtol=0, atol=1e-14)


def test_gamma_cone_examples():
    assert gamma_cone([1, 2, 3], 3) == (True, 6.0)
    assert gamma_cone([1, 1, -1], 1).member
    assert not gamma_cone([1, 1, -1], 2).member
    assert not gamma_cone([0, 0, 0], 1).member


def test_newton_tensor_examples():
    assert np.allclose(newton_tensor(np.diag([1.0, 2, 3]), 1), np.diag([5.0, 4, 3]))
    assert np.allclose(newton_tensor(np.diag([1.0, 2, 3]), 0), np.eye(3))
    S = np.diag([1.0, 2, 3])
    assert np.trace(newton_tensor(S, 1) @ S) == pytest.approx(22.0)
    with pytest.raises(ValueError):
        newton_tensor(S, 3)


@given(c=st.floats(0.1, 3), m=st.integers(2, 6), data=st.data())
def test_newton_tensor_isotropic_trace(c, m, data):
    k = data.draw(st.integers(0, m - 1))
    T = newton_tensor(c * np.eye(m), k)
    assert np.trace(T) == pytest.approx((m - k) * comb(m, k) * c ** k, rel=1e-12)


def test_newton_tensor_deleted_formula(rng):
    for _ in range(200):
        m = int(rng.integers(2, 7))
        kap = rng.normal(0, 1.5, m)
        sd = sigma_deleted(kap)
        for k in range(m):
            T = newton_tensor(np.diag(kap), k)
            assert np.allclose(np.diag(T), sd[:, k], rtol=1e-12, atol=1e-12)
            assert np.allclose(T - np.diag(np.diag(T)), 0, atol=1e-12)


def test_newton_trace_identities(rng):
    count = 0
    while count < 1000:
        m = int(rng.integers(2, 7))
        k = int(rng.integers(1, m))
        kap = random_cone(rng, m, min(k + 1, m), 1)[0]
        S = random_symmetric_with(kap, rng)
        s = np.append(sigma_all(kap), 0.0)
        T = newton_tensor(S, k - 1)
        scale = max(1.0, np.abs(kap).max()) ** (k + 1)
        assert abs(np.trace(T @ S) - k * s[k]) <= 1e-10 * scale
        assert abs(np.trace(T @ S @ S) - (s[1] * s[k] - (k + 1) * s[k + 1])) <= 1e-10 * scale * max(1, np.abs(kap).max())
        count += 1


def test_newton_tensor_positive_definite_in_cone(rng):
    for _ in range(1000):
        m = int(rng.integers(2, 6))
        k = int(rng.integers(0, m))
        kap = random_cone(rng, m, k + 1, 1)[0] if k + 1 <= m else None
        if kap is None:
            continue
        T = newton_tensor(random_symmetric_with(kap, rng), k)
        assert np.linalg.eigvalsh(0.5 * (T + T.T)).min() > 0


def test_shape_operator_with_metric(rng):
    # h_i^j = g^{jk} h_ik is self-adjoint w.r.t. g; eigenvalues must match the generalized problem
    A = rng.normal(size=(3, 3))
    g = A @ A.T + 3 * np.eye(3)
    h = rng.normal(size=(3, 3))
    h = h + h.T
    S = np.linalg.solve(g, h)
    op = ShapeOperator(S, g)
    from scipy.linalg import eigh
    assert np.allclose(op.eigenvalues(), eigh(h, g, eigvals_only=True), rtol=1e-12, atol=1e-12)
    with pytest.raises(ValueError):
        ShapeOperator(np.array([[1.0, 2.0], [0.0, 1.0]])).eigenvalues()


def test_newton_maclaurin_examples():
    r = newton_maclaurin_check([1.0, 2, 3], 1, 2)
    assert r.holds and r.gap == pytest.approx(4 / 3) and not r.equality
    r = newton_maclaurin_check([2.0, 2, 2], 1, 2)
    assert r.holds and r.equality
    with pytest.raises(ConeViolation):
        newton_maclaurin_check([1.0, 1, -1], 2, 2)


@given(kap=hnp.arrays(float, st.integers(2, 5), elements=st.floats(0.05, 5)), t=st.floats(0.1, 10),
       data=st.data())
def test_newton_maclaurin_scale_sign(kap, t, data):
    m = kap.size
    k = data.draw(st.integers(1, m))
    l = data.draw(st.integers(1, k))
    a = newton_maclaurin_check(kap, l, k)
    b = newton_maclaurin_check(t * kap, l, k)
    assert a.holds and b.holds
    assert b.gap == pytest.approx(t ** (k + l) * a.gap, rel=1e-9, abs=1e-12 * t ** (k + l) * np.max(kap) ** (k + l))


def test_quotient_derivative_examples():
    rep = quotient_derivative_pd(np.diag([1.0, 2, 3]), 2)
    assert rep.positive_definite and rep.min_eigenvalue > 0
    iso = quotient_derivative_pd(1.7 * np.eye(3), 2)
    assert iso.positive_definite
    assert np.allclose(iso.derivative, iso.derivative[0, 0] * np.eye(3))
    with pytest.raises(ConeViolation):
        quotient_derivative_pd(np.diag([1.0, 1, -1]), 2)


def complex_step_quotient(S, k, h=1e-30):
    m = S.shape[0]
    D = np.empty((m, m))
    for a in range(m):
        for b in range(m):
            E = np.zeros((m, m))
            E[a, b] = 1.0
            s = faddeev_sigma(S + 1j * h * E)
            q = (s[k] / comb(m, k)) / (s[k - 1] / comb(m, k - 1))
            D[a, b] = q.imag / h
    return D


def test_quotient_derivative_complex_step_and_key_identity(rng):
    n_checked = 0
    while n_checked < 1000:
        m = int(rng.integers(2, 6))
        k = int(rng.integers(1, m + 1))
        kap = random_cone(rng, m, k, 1)[0]
        S = random_symmetric_with(kap, rng) if n_checked % 2 else np.diag(kap)
        D = quotient_derivative(S, k)
        scale = np.abs(D).max()
        if n_checked < 200:
            assert np.allclose(D, complex_step_quotient(S, k), rtol=0, atol=1e-10 * scale)
        # key identity: T_{k-1} H_{k-1}/(C_k H_k) - T_{k-2}/C_{k-1} = (H_{k-1}^2 / H_k) dQ
        H = H_all(kap)
        T1 = newton_tensor(S, k - 1)
        T2 = newton_tensor(S, k - 2) if k >= 2 else np.zeros((m, m))
        lhs = T1.T * H[k - 1] / (comb(m, k) * H[k]) - T2.T / comb(m, k - 1)
        rhs = H[k - 1] ** 2 / H[k] * D
        assert np.abs(lhs - rhs).max() <= 1e-10 * np.abs(lhs).max()
        n_checked += 1


def test_quotient_derivative_pd_in_cone(rng):
    for _ in range(300):
        m = int(rng.integers(2, 6))
        k = int(rng.integers(1, m + 1))
        kap = random_cone(rng, m, k, 1)[0]
        assert quotient_derivative_pd(np.diag(kap), k).positive_definite
