"""Kostlan-type integral for the expected number of positive roots E(n, d).

The random system has covariance kernel

    K(x, y) = v(x)^T C v(y) = sum_k multinomial(d-1; k)^2 prod_l (x_l y_l)^{k_l},

and E(n, d) = pi^{-n/2} Gamma(n/2) int_{[0,inf)^{n-1}} sqrt(det L(t)) dt with
L_ij(t) = d^2/dx_i dy_j log K(x, y) at x = y = t.

Writing p_k(t) for the normalised weights multinomial^2 prod t^{2k} / K(t, t),
L(t) = D^{-1} Cov_p(k) D^{-1} with D = diag(t): the covariance of the exponent
vector under p, rescaled. That form is evaluated with a centred two-pass sum,
which avoids the cancellation of the raw two-term ratio at large t.
"""
from __future__ import annotations

import math
import warnings
from dataclasses import dataclass, field
from functools import lru_cache
from typing import Sequence

import numpy as np

from .estimate import ConvergenceError, EstimateReport, UnsupportedDimensionError
from .game_model import GameSpec, enumerate_indices, index_weights
from .quad import QuadConfig, integrate_semiinf_nd_levels

MAX_N = 4
# below this a coordinate is treated through the analytic t_i -> 0 limit
_TINY = 1e-100
_NEG_DET_TOL = 1e-9
# cap on (points x indices) per vectorised block
_BLOCK = 1 << 21


class NumericalQualityWarning(RuntimeWarning):
    pass


@dataclass(frozen=True, eq=False)
class KernelContext:
    spec: GameSpec
    indices: np.ndarray = field(repr=False)      # (K, n-1) integer exponents
    weights: tuple[int, ...] = field(repr=False)  # multinomial^2, exact
    log_weights: np.ndarray = field(repr=False)

    @property
    def order(self) -> int:
        return self.spec.n - 1


@dataclass(frozen=True, eq=False)
class LMatrix:
    order: int
    entries: np.ndarray
    point: np.ndarray


@lru_cache(maxsize=64)
def _cached_context(n: int, d: int) -> KernelContext:
    return kernel_context(GameSpec(n, d))


def kernel_context(spec: GameSpec, variance: float = 1.0) -> KernelContext:
    """Kernel of the weighted coefficients; ``variance`` scales every weight (payoff sigma^2)."""
    idx = np.array(enumerate_indices(spec), dtype=np.int64).reshape(-1, spec.n - 1)
    w = tuple(m * m for m in index_weights(spec))
    logw = np.array([math.log(x) for x in w]) + math.log(variance)
    return KernelContext(spec, idx, w, logw)


def _log_monomials(expo: np.ndarray, logt: np.ndarray) -> np.ndarray:
    """sum_l expo[k, l] * logt[n, l] with 0 * log(0) taken as 0; shape (N, K)."""
    with np.errstate(invalid="ignore"):
        terms = expo[None, :, :] * logt[:, None, :]
    terms = np.where(expo[None, :, :] == 0, 0.0, terms)
    return terms.sum(axis=-1)


def _logs(t: np.ndarray) -> np.ndarray:
    with np.errstate(divide="ignore"):
        return np.log(t)


def kernel(ctx: KernelContext, x: Sequence[float], y: Sequence[float]) -> float:
    xy = np.asarray(x, dtype=float) * np.asarray(y, dtype=float)
    if xy.shape != (ctx.order,):
        raise ValueError(f"x and y must have length {ctx.order}")
    if np.any(xy < 0):
        raise ValueError("kernel arguments must be non-negative")
    logs = ctx.log_weights + _log_monomials(ctx.indices.astype(float), _logs(xy)[None, :])[0]
    top = logs.max()
    return float(math.exp(top) * np.exp(logs - top).sum())


def _l_centred(ctx: KernelContext, T: np.ndarray) -> np.ndarray:
    K = ctx.indices.astype(float)
    logp = ctx.log_weights[None, :] + (2.0 * np.log(T)) @ K.T
    logp -= logp.max(axis=1, keepdims=True)
    p = np.exp(logp)
    p /= p.sum(axis=1, keepdims=True)
    mu = p @ K
    dk = K[None, :, :] - mu[:, None, :]
    cov = np.matmul((p[:, :, None] * dk).transpose(0, 2, 1), dk)
    return cov / (T[:, :, None] * T[:, None, :])


def _l_limit(ctx: KernelContext, T: np.ndarray) -> np.ndarray:
    # t_i -> 0 is handled by dividing t_i out of the k_i >= 1 sums before
    # evaluating, so every exponent stays non-negative.
    K = ctx.indices.astype(float)
    m = ctx.order
    logt = _logs(T)
    base = ctx.log_weights[None, :] + _log_monomials(2.0 * K, logt)
    shift = base.max(axis=1, keepdims=True)
    s0 = np.exp(base - shift).sum(axis=1)
    first = np.zeros((len(T), m))
    for i in range(m):
        e = 2.0 * K
        e[:, i] -= 1.0
        live = K[:, i] >= 1
        logs = ctx.log_weights[None, live] + _log_monomials(e[live], logt)
        first[:, i] = (K[live, i] * np.exp(logs - shift)).sum(axis=1)
    L = np.empty((len(T), m, m))
    for i in range(m):
        for j in range(i, m):
            e = 2.0 * K
            e[:, i] -= 1.0
            e[:, j] -= 1.0
            live = (K[:, i] >= 1) & (K[:, j] >= 1)
            if i == j:
                live = K[:, i] >= 1
            logs = ctx.log_weights[None, live] + _log_monomials(e[live], logt)
            second = (K[live, i] * K[live, j] * np.exp(logs - shift)).sum(axis=1)
            L[:, i, j] = L[:, j, i] = second / s0 - first[:, i] * first[:, j] / s0 ** 2
    return L


def l_matrix_batch(ctx: KernelContext, T: np.ndarray) -> np.ndarray:
    """L(t) for each row of T (shape (N, n-1)); entries with t_i = 0 use the limit."""
    T = np.atleast_2d(np.asarray(T, dtype=float))
    if T.shape[1] != ctx.order:
        raise ValueError(f"points must have {ctx.order} coordinates")
    if np.any(T < 0):
        raise ValueError("points must be non-negative")
    out = np.empty((len(T), ctx.order, ctx.order))
    small = T.min(axis=1) < _TINY
    step = max(1, _BLOCK // len(ctx.indices))
    interior = np.flatnonzero(~small)
    for start in range(0, len(interior), step):
        rows = interior[start:start + step]
        out[rows] = _l_centred(ctx, T[rows])
    if small.any():
        rows = np.flatnonzero(small)
        out[rows] = _l_limit(ctx, T[rows])
    return out


def l_matrix(ctx: KernelContext, t: Sequence[float]) -> LMatrix:
    t = np.asarray(t, dtype=float)
    return LMatrix(ctx.order, l_matrix_batch(ctx, t[None, :])[0], t.copy())


def _scaled_det(L: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
    scale = np.abs(L).max(axis=2)
    safe = np.where(scale > 0, scale, 1.0)
    unit_det = np.linalg.det(L / safe[:, :, None])
    unit_det = np.where((scale > 0).all(axis=1), unit_det, 0.0)
    return unit_det, np.prod(scale, axis=1)


def integrand_batch(ctx: KernelContext, T: np.ndarray) -> tuple[np.ndarray, int]:
    """sqrt(max(det L, 0)) per point, plus the number of clearly negative determinants."""
    unit_det, scale = _scaled_det(l_matrix_batch(ctx, T))
    negative = int(np.count_nonzero(unit_det < -_NEG_DET_TOL))
    if negative:
        warnings.warn(f"{negative} determinant(s) below -{_NEG_DET_TOL} after row scaling",
                      NumericalQualityWarning, stacklevel=2)
    return np.sqrt(np.maximum(unit_det, 0.0) * scale), negative


def integrand(ctx: KernelContext, t: Sequence[float]) -> float:
    values, _ = integrand_batch(ctx, np.asarray(t, dtype=float)[None, :])
    return float(values[0])


def det_l_closed_d2(n: int, t: Sequence[float]) -> float:
    """det L at d = 2: (1 + sum t_k^2)^(-n)."""
    t = np.asarray(t, dtype=float)
    if t.shape != (n - 1,):
        raise ValueError(f"t must have length {n - 1}")
    if np.any(t < 0):
        raise ValueError("t must be non-negative")
    return float((1.0 + np.dot(t, t)) ** (-n))


def e_n2_closed(n: int) -> float:
    if n < 2:
        raise ValueError(f"n must be >= 2, got {n}")
    return 2.0 ** (1 - n)


def kostlan_prefactor(n: int) -> float:
    return math.gamma(n / 2) * math.pi ** (-n / 2)


def e_nd_quadrature(n: int, d: int, quad: QuadConfig = QuadConfig()) -> EstimateReport:
    """Integrate sqrt(det L) over [0, inf)^(n-1), with no closed-form shortcut."""
    spec = GameSpec(n, d)
    if n > MAX_N:
        raise UnsupportedDimensionError(f"n={n} exceeds the supported maximum {MAX_N}")
    ctx = _cached_context(spec.n, spec.d)
    negatives = []

    def f(T: np.ndarray) -> np.ndarray:
        with warnings.catch_warnings():
            warnings.simplefilter("ignore", NumericalQualityWarning)
            vals, neg = integrand_batch(ctx, T)
        negatives.append(neg)
        return vals

    pre = kostlan_prefactor(n)
    try:
        raw, err, levels = integrate_semiinf_nd_levels(f, n - 1, quad, symmetric=n > 2)
    except ConvergenceError as exc:
        scaled = {k: (pre * v if isinstance(k, int) else v) for k, v in exc.levels.items()}
        raise ConvergenceError(f"E({n},{d}): {exc}", pre * exc.value, pre * exc.err_estimate, scaled) from exc
    return EstimateReport(
        value=pre * raw,
        method="quadrature",
        err_estimate=pre * err,
        n=n,
        d=d,
        evaluations=levels["evaluations"],
        budgets={"nodes_per_dim": quad.nodes_per_dim, "verify_nodes_per_dim": quad.verify_nodes_per_dim,
                 "cubature_rel_tol": quad.cubature_rel_tol},
        diagnostics={"levels": {str(k): pre * v for k, v in levels.items() if isinstance(k, int)},
                     "negative_determinants": int(sum(negatives))},
    )


def e_nd(n: int, d: int, quad: QuadConfig = QuadConfig()) -> EstimateReport:
    """E(n, d): exact 2^(1-n) for two players, cubature otherwise (n <= 4)."""
    spec = GameSpec(n, d)
    if spec.d == 2:
        return EstimateReport(value=e_n2_closed(n), method="closed-form", err_estimate=0.0, n=n, d=2)
    return e_nd_quadrature(n, d, quad)
