"""Two-strategy games: the root density f(t) of E(2,d) = int_0^inf f(t) dt.

With M_d(t) = sum_k C(d-1,k)^2 t^{2k}, A_d = (d-1)^2 M_{d-1} and B_d = M_d'/2,

    f(t) = sqrt(A_d M_d - B_d^2) / (pi M_d)
         = (d-1)/pi * sqrt(sum_k a_k t^{2k}) / M_d(t),

where the a_k are positive integers (palindromic, a_0 = 1). All evaluators
work in log space so that large d and large t neither overflow nor underflow.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field
from functools import lru_cache

import numpy as np

from .estimate import ConvergenceError, EstimateReport
from .quad import QuadConfig, integrate_1d

MAX_ROOT_DEGREE = 12


def _a_raw(d: int, second_sign: int = -1) -> list[int]:
    # Double-sum formula: first sum pairs C(d-1,i)^2 C(d-2,j)^2 over i+j=k,
    # second pairs C(d-2,i)C(d-1,i+1)C(d-2,j)C(d-1,j+1) over i+j=k-1.
    top = 2 * d - 4
    out = []
    for k in range(top + 1):
        first = sum(math.comb(d - 1, i) ** 2 * math.comb(d - 2, k - i) ** 2
                    for i in range(max(0, k - (d - 2)), min(d - 1, k) + 1))
        second = sum(math.comb(d - 2, i) * math.comb(d - 1, i + 1)
                     * math.comb(d - 2, k - 1 - i) * math.comb(d - 1, k - i)
                     for i in range(max(0, k - 1 - (d - 2)), min(d - 2, k - 1) + 1))
        out.append(first + second_sign * second)
    return out


@lru_cache(maxsize=None)
def _a_exact(d: int) -> tuple[int, ...]:
    if d < 2:
        raise ValueError(f"d must be >= 2, got {d}")
    return tuple(_a_raw(d))


def a_coefficients(d: int) -> list[int]:
    """Exact integer coefficients a_0..a_{2d-4} of the numerator polynomial in t^2."""
    return list(_a_exact(d))


def _logsumexp(logs: np.ndarray, axis: int = -1) -> np.ndarray:
    m = np.max(logs, axis=axis, keepdims=True)
    m = np.where(np.isfinite(m), m, 0.0)
    return np.squeeze(m, axis) + np.log(np.sum(np.exp(logs - m), axis=axis))


def _log_poly_t2(log_coeffs: np.ndarray, t: np.ndarray) -> np.ndarray:
    """log sum_k exp(log_coeffs[k]) t^{2k} for t >= 0, vectorised over t."""
    t = np.asarray(t, dtype=float)
    k = np.arange(len(log_coeffs))
    with np.errstate(divide="ignore", invalid="ignore"):
        logt = np.log(t)[..., None]
        expo = np.where(k == 0, 0.0, 2.0 * k * logt)
    return _logsumexp(log_coeffs + expo)


@dataclass(frozen=True, eq=False)
class DensityContext:
    d: int
    binom_sq: tuple[int, ...] = field(repr=False)
    a_coeffs: tuple[int, ...] = field(repr=False)
    log_binom_sq: np.ndarray = field(repr=False)
    log_a: np.ndarray = field(repr=False)


@lru_cache(maxsize=256)
def density_context(d: int) -> DensityContext:
    if d < 2:
        raise ValueError(f"d must be >= 2, got {d}")
    binom_sq = tuple(math.comb(d - 1, k) ** 2 for k in range(d))
    a = _a_exact(d)
    return DensityContext(
        d=d,
        binom_sq=binom_sq,
        a_coeffs=a,
        log_binom_sq=np.array([math.log(b) for b in binom_sq]),
        log_a=np.array([math.log(x) for x in a]),
    )


def log_m_poly(ctx: DensityContext, t):
    return _log_poly_t2(ctx.log_binom_sq, t)


def m_poly(ctx: DensityContext, t):
    return np.exp(log_m_poly(ctx, t))


def a_poly(ctx: DensityContext, t):
    """A_d(t) = (d-1)^2 M_{d-1}(t); A_2 is the constant 1."""
    if ctx.d == 2:
        return np.ones_like(np.asarray(t, dtype=float))
    return (ctx.d - 1) ** 2 * m_poly(density_context(ctx.d - 1), t)


def b_poly(ctx: DensityContext, t):
    """B_d(t) = M_d'(t)/2 = sum_{k>=1} k C(d-1,k)^2 t^{2k-1}."""
    t = np.asarray(t, dtype=float)
    if ctx.d == 2:
        return t
    # B_d(t) = t * sum_{k>=1} k C^2 t^{2(k-1)}
    logs = np.array([math.log(k * ctx.binom_sq[k]) for k in range(1, ctx.d)])
    return t * np.exp(_log_poly_t2(logs, t))


def density_f(ctx: DensityContext, t):
    """f(t) from the all-positive a_k representation."""
    t = np.asarray(t, dtype=float)
    if np.any(t < 0):
        raise ValueError("density_f is defined for t >= 0")
    log_num = 0.5 * _log_poly_t2(ctx.log_a, t)
    out = (ctx.d - 1) / math.pi * np.exp(log_num - log_m_poly(ctx, t))
    return float(out) if out.ndim == 0 else out


def density_f_direct(ctx: DensityContext, t):
    """f(t) = sqrt(A M - B^2) / (pi M) evaluated literally (loses precision for large t)."""
    a, m, b = a_poly(ctx, t), m_poly(ctx, t), b_poly(ctx, t)
    out = np.sqrt(np.maximum(a * m - b * b, 0.0)) / (math.pi * m)
    return float(out) if np.ndim(out) == 0 else out


def m_roots(ctx: DensityContext) -> np.ndarray:
    """r_i > 0 with M_d(t) = prod_i (t^2 + r_i), from companion-matrix eigenvalues in s = t^2."""
    if ctx.d > MAX_ROOT_DEGREE:
        raise ValueError(f"root factorisation is only supported for d <= {MAX_ROOT_DEGREE}")
    if ctx.d == 2:
        return np.array([1.0])
    coeffs = np.array(ctx.binom_sq, dtype=float)
    s_roots = np.polynomial.polynomial.polyroots(coeffs)
    return np.sort(-s_roots.real)


def density_sq_from_roots(roots: np.ndarray, t) -> np.ndarray:
    """(2 pi f(t))^2 = sum_i 4 r_i / (t^2 + r_i)^2."""
    t2 = np.asarray(t, dtype=float)[..., None] ** 2
    return np.sum(4.0 * roots / (t2 + roots) ** 2, axis=-1)


def e2d(d: int, quad: QuadConfig = QuadConfig()) -> EstimateReport:
    """E(2,d) = 2 int_0^1 f(t) dt."""
    ctx = density_context(d)
    try:
        half, err = integrate_1d(lambda t: density_f(ctx, t), 0.0, 1.0, quad)
    except ConvergenceError as exc:
        raise ConvergenceError(f"E(2,{d}): {exc}", 2 * exc.value, 2 * exc.err_estimate) from exc
    return EstimateReport(
        value=2.0 * half, method="quadrature", err_estimate=2.0 * err, n=2, d=d,
        budgets={"rel_tol": quad.rel_tol, "abs_tol": quad.abs_tol, "max_depth": quad.max_depth},
    )


def bounds_e2d(d: int) -> tuple[float, float]:
    if d < 2:
        raise ValueError(f"d must be >= 2, got {d}")
    lower = (d - 1) / (math.pi * math.sqrt(2 * d - 3))
    upper = math.sqrt(d - 1) * math.sqrt(1 + 0.5 * math.pi * math.sqrt(d - 1)) / math.pi
    return lower, upper


def stable_e2d_interval(d: int) -> tuple[float, float]:
    # each internal equilibrium of a two-strategy game is stable with probability 1/2
    lower, upper = bounds_e2d(d)
    return lower / 2, upper / 2


def p_max_bound(d: int, m: int) -> float:
    """Upper bound on the probability of exactly m internal equilibria (Markov on E(2,d))."""
    if not 1 <= m <= d - 1:
        raise ValueError(f"m must be in [1, {d - 1}], got {m}")
    return bounds_e2d(d)[1] / m
