import math

import mpmath
import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from evoeq import density2 as d2
from evoeq.estimate import ConvergenceError
from evoeq.quad import QuadConfig


def _conv(p, q):
    out = [0] * (len(p) + len(q) - 1)
    for i, a in enumerate(p):
        for j, b in enumerate(q):
            out[i + j] += a * b
    return out


def brute_force_a(d):
    """(A_d M_d - B_d^2) / (d-1)^2 by exact integer polynomial arithmetic in t."""
    def m(dd):
        c = [0] * (2 * dd - 1)
        for k in range(dd):
            c[2 * k] = math.comb(dd - 1, k) ** 2
        return c
    M = m(d)
    A = [(d - 1) ** 2 * c for c in m(d - 1)] if d > 2 else [1]
    B = [0] * (2 * d - 2)
    for k in range(1, d):
        B[2 * k - 1] = k * math.comb(d - 1, k) ** 2
    AM, BB = _conv(A, M), _conv(B, B)
    size = max(len(AM), len(BB))
    diff = [(AM[i] if i < len(AM) else 0) - (BB[i] if i < len(BB) else 0) for i in range(size)]
    while len(diff) > 1 and diff[-1] == 0:
        diff.pop()
    assert all(c == 0 for c in diff[1::2])
    assert all(c % (d - 1) ** 2 == 0 for c in diff)
    return [c // (d - 1) ** 2 for c in diff[::2]]


def test_a_examples():
    assert d2.a_coefficients(2) == [1]
    assert d2.a_coefficients(3) == [1, 1, 1]
    a5 = d2.a_coefficients(5)
    assert len(a5) == 7 and a5 == a5[::-1]


@pytest.mark.parametrize("d", list(range(2, 16)) + [23, 40])
def test_a_matches_polynomial_expansion(d):
    assert d2.a_coefficients(d) == brute_force_a(d)


def test_a_sign_mutation_breaks_palindrome():
    assert d2._a_raw(3, second_sign=+1) != d2._a_raw(3, second_sign=+1)[::-1]


@pytest.mark.parametrize("d", [2, 3, 5, 8, 12])
def test_m_and_b_identities(d):
    ctx = d2.density_context(d)
    assert d2.m_poly(ctx, 0.0) == 1.0
    assert d2.m_poly(ctx, 1.0) == pytest.approx(math.comb(2 * (d - 1), d - 1), rel=1e-13)
    assert d2.b_poly(ctx, 1.0) == pytest.approx((d - 1) / 2 * math.comb(2 * (d - 1), d - 1), rel=1e-13)


def test_b3_at_one():
    # 1*C(2,1)^2 + 2*C(2,2)^2 = 6 = (3-1)/2 * C(4,2)
    assert d2.b_poly(d2.density_context(3), 1.0) == pytest.approx(6.0, rel=1e-15)


@pytest.mark.parametrize("d", [2, 3, 4, 7, 20, 60])
def test_f_at_zero_and_one(d):
    ctx = d2.density_context(d)
    assert d2.density_f(ctx, 0.0) == pytest.approx((d - 1) / math.pi, rel=1e-14)
    assert d2.density_f(ctx, 1.0) == pytest.approx((d - 1) / (2 * math.pi * math.sqrt(2 * d - 3)), rel=1e-13)


@pytest.mark.parametrize("t", [0.0, 0.5, 2.0])
def test_f_d2_is_cauchy(t):
    assert d2.density_f(d2.density_context(2), t) == pytest.approx(1 / (math.pi * (1 + t * t)), rel=1e-14)


@settings(max_examples=60, deadline=None)
@given(st.integers(2, 25), st.floats(0.0, 4.0))
def test_positive_form_matches_direct_form(d, t):
    ctx = d2.density_context(d)
    assert d2.density_f(ctx, t) == pytest.approx(d2.density_f_direct(ctx, t), rel=1e-8)


@settings(max_examples=80, deadline=None)
@given(st.integers(2, 40), st.floats(1e-3, 1e3))
def test_inversion_symmetry(d, t):
    ctx = d2.density_context(d)
    assert d2.density_f(ctx, 1 / t) == pytest.approx(t * t * d2.density_f(ctx, t), rel=1e-10)


def test_f_stays_finite_for_extreme_arguments():
    ctx = d2.density_context(200)
    vals = d2.density_f(ctx, np.array([0.0, 1e-200, 1e-5, 1e5, 1e200]))
    assert np.all(np.isfinite(vals)) and np.all(vals >= 0)


def test_f_rejects_negative_t():
    with pytest.raises(ValueError):
        d2.density_f(d2.density_context(3), -0.1)


@pytest.mark.parametrize("d", range(3, d2.MAX_ROOT_DEGREE + 1))
def test_root_representation(d):
    ctx = d2.density_context(d)
    r = d2.m_roots(ctx)
    assert np.all(r > 0)
    t = np.linspace(0, 4, 41)
    assert np.allclose(d2.density_sq_from_roots(r, t), (2 * math.pi * d2.density_f(ctx, t)) ** 2, rtol=1e-6)
    assert np.prod(r) == pytest.approx(1.0, rel=1e-6)
    assert sum(np.prod(np.delete(r, i)) for i in range(len(r))) == pytest.approx((d - 1) ** 2, rel=1e-6)


def test_roots_refuse_large_degree():
    with pytest.raises(ValueError):
        d2.m_roots(d2.density_context(d2.MAX_ROOT_DEGREE + 1))


def test_e2d_examples():
    assert d2.e2d(2).value == pytest.approx(0.5, abs=1e-6)
    assert d2.e2d(3).value == pytest.approx(0.77, abs=5e-3)
    assert d2.e2d(10).value == pytest.approx(1.84, abs=5e-3)


@pytest.mark.parametrize("d", [3, 6, 15])
def test_e2d_against_mpmath(d):
    mpmath.mp.dps = 30
    ctx = d2.density_context(d)
    M = lambda t: sum(c * t ** (2 * k) for k, c in enumerate(ctx.binom_sq))
    num = lambda t: mpmath.sqrt(sum(c * t ** (2 * k) for k, c in enumerate(ctx.a_coeffs)))
    ref = 2 * (d - 1) / mpmath.pi * mpmath.quad(lambda t: num(t) / M(t), [0, 1])
    assert d2.e2d(d).value == pytest.approx(float(ref), rel=1e-9)


def test_e2d_reports_convergence_failure():
    with pytest.raises(ConvergenceError):
        d2.e2d(40, QuadConfig(rel_tol=1e-15, abs_tol=1e-300, max_depth=1))


def test_bounds_examples():
    lo, hi = d2.bounds_e2d(2)
    assert lo == pytest.approx(1 / math.pi) and lo <= 0.5 <= hi
    lo, hi = d2.bounds_e2d(3)
    assert lo < 0.77 < hi
    assert d2.bounds_e2d(10_000)[0] > d2.bounds_e2d(100)[0] > 2


def test_stable_interval():
    assert d2.stable_e2d_interval(2)[0] <= 0.25 <= d2.stable_e2d_interval(2)[1]
    assert d2.stable_e2d_interval(3)[0] <= 0.385 <= d2.stable_e2d_interval(3)[1]
    for d in range(2, 101):
        assert d2.stable_e2d_interval(d)[0] == d2.bounds_e2d(d)[0] / 2


def test_p_max_bound():
    assert d2.p_max_bound(7, 1) == d2.bounds_e2d(7)[1]
    assert d2.p_max_bound(10, 9) == pytest.approx(d2.bounds_e2d(10)[1] / 9)
    tail = [d2.p_max_bound(d, d - 1) for d in range(10, 400)]
    assert all(a > b for a, b in zip(tail, tail[1:]))
    assert tail[-1] < 0.5
    with pytest.raises(ValueError):
        d2.p_max_bound(5, 5)
