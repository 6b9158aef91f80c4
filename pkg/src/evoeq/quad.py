"""Adaptive 1D Gauss-Kronrod quadrature and tensor Gauss-Legendre cubature on [0, inf)^dims."""
from __future__ import annotations

import heapq
import itertools
import math
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass
from typing import Callable

import numpy as np

from .estimate import ConvergenceError, DomainError

# 15-point Kronrod extension of the 7-point Gauss rule (QUADPACK qk15 constants).
_XGK = np.array([
    0.991455371120812639206854697526329,
    0.949107912342758524526189684047851,
    0.864864423359769072789712788640926,
    0.741531185599394439863864773280788,
    0.586087235467691130294144845693013,
    0.405845151377397166906606412076961,
    0.207784955007898467600689403773245,
    0.000000000000000000000000000000000,
])
_WGK = np.array([
    0.022935322010529224963732008058970,
    0.063092092629978553290700663189204,
    0.104790010322250183839876322541518,
    0.140653259715525918745189590510238,
    0.169004726639267902826583426598550,
    0.190350578064785409913256402421014,
    0.204432940075298892414161999234649,
    0.209482141084727828012999174891714,
])
_WG = np.array([
    0.129484966168869693270611432679082,
    0.279705391489276667901467771423780,
    0.381830050505118944950369775488975,
    0.417959183673469387755102040816327,
])
_NODES = np.concatenate([-_XGK[:-1], _XGK[::-1]])          # 15 nodes, ascending
_KRONROD = np.concatenate([_WGK[:-1], _WGK[::-1]])
_GAUSS = np.zeros(15)
_GAUSS[1:7:2] = _WG[:3]
_GAUSS[7] = _WG[3]
_GAUSS[9:15:2] = _WG[2::-1]

_MAX_INTERVALS = 20000
_CHUNK = 16384


@dataclass(frozen=True)
class QuadConfig:
    rel_tol: float = 1e-8
    abs_tol: float = 1e-10
    max_depth: int = 30
    nodes_per_dim: int = 80
    verify_nodes_per_dim: int = 60
    # relative tolerance on the two-level cubature difference
    cubature_rel_tol: float = 1e-3
    threads: int = 1

    def __post_init__(self) -> None:
        if not (self.rel_tol > 0 and self.abs_tol > 0 and self.cubature_rel_tol > 0):
            raise ValueError("tolerances must be positive")
        if self.max_depth < 1:
            raise ValueError("max_depth must be >= 1")
        if not 1 <= self.verify_nodes_per_dim < self.nodes_per_dim:
            raise ValueError("need 1 <= verify_nodes_per_dim < nodes_per_dim")
        if self.threads < 1:
            raise ValueError("threads must be >= 1")


def _gk15(f: Callable, a: float, b: float) -> tuple[float, float]:
    half = 0.5 * (b - a)
    mid = 0.5 * (a + b)
    x = mid + half * _NODES
    try:
        fx = np.asarray(f(x), dtype=float)
    except TypeError:
        fx = None
    if fx is None or fx.shape != x.shape:
        fx = np.array([float(f(xi)) for xi in x])
    if not np.all(np.isfinite(fx)):
        bad = x[~np.isfinite(fx)][0]
        raise DomainError(f"integrand is not finite at t={bad!r}")
    k = half * float(_KRONROD @ fx)
    g = half * float(_GAUSS @ fx)
    return k, abs(k - g)


def integrate_1d(f: Callable, a: float, b: float, cfg: QuadConfig = QuadConfig()) -> tuple[float, float]:
    """Globally adaptive G7/K15 bisection of f over [a, b].

    ``f`` may be vectorised (array in, array out) or scalar. Returns
    (value, err_estimate) with err_estimate <= max(rel_tol*|value|, abs_tol).
    """
    if not a < b:
        raise ValueError(f"need a < b, got [{a}, {b}]")
    value, err = _gk15(f, a, b)
    # heap of (-err, tiebreak, a, b, value, err, depth)
    counter = itertools.count()
    heap = [(-err, next(counter), a, b, value, err, 0)]
    total_val, total_err = value, err
    while True:
        target = max(cfg.rel_tol * abs(total_val), cfg.abs_tol)
        if total_err <= target:
            return total_val, total_err
        _, _, lo, hi, v, e, depth = heapq.heappop(heap)
        if depth >= cfg.max_depth or len(heap) >= _MAX_INTERVALS:
            raise ConvergenceError(
                f"adaptive quadrature exhausted its budget on [{a}, {b}] (depth {depth})",
                total_val, total_err,
            )
        mid = 0.5 * (lo + hi)
        v1, e1 = _gk15(f, lo, mid)
        v2, e2 = _gk15(f, mid, hi)
        total_val += v1 + v2 - v
        total_err += e1 + e2 - e
        heapq.heappush(heap, (-e1, next(counter), lo, mid, v1, e1, depth + 1))
        heapq.heappush(heap, (-e2, next(counter), mid, hi, v2, e2, depth + 1))
        # re-sum occasionally to stop drift in the running totals
        if len(heap) % 64 == 0:
            total_val = math.fsum(item[4] for item in heap)
            total_err = math.fsum(item[5] for item in heap)


def gauss_legendre_unit(m: int) -> tuple[np.ndarray, np.ndarray]:
    """m-point Gauss-Legendre nodes and weights on (0, 1)."""
    x, w = np.polynomial.legendre.leggauss(m)
    return 0.5 * (x + 1.0), 0.5 * w


def _semiinf_nodes(m: int) -> tuple[np.ndarray, np.ndarray]:
    u, w = gauss_legendre_unit(m)
    t = u / (1.0 - u)
    return t, w / (1.0 - u) ** 2


def _orbit_sizes(combos: np.ndarray) -> np.ndarray:
    # rows are sorted, so equal coordinates form runs; orbit = dims! / prod(run!)
    dims = combos.shape[1]
    sizes = np.full(len(combos), float(math.factorial(dims)))
    run = np.ones(len(combos))
    for j in range(1, dims):
        same = combos[:, j] == combos[:, j - 1]
        run = np.where(same, run + 1, 1)
        sizes /= np.where(same, run, 1)
    return sizes


def _grid(m: int, dims: int, symmetric: bool) -> tuple[np.ndarray, np.ndarray]:
    t, w = _semiinf_nodes(m)
    if symmetric:
        # one representative per orbit of the coordinate permutations, weighted
        # by the orbit size
        combos = np.array(list(itertools.combinations_with_replacement(range(m), dims)), dtype=np.int64)
        mult = _orbit_sizes(combos)
    else:
        combos = np.array(list(itertools.product(range(m), repeat=dims)), dtype=np.int64)
        mult = np.ones(len(combos))
    points = t[combos]
    weights = mult * np.prod(w[combos], axis=1)
    return points, weights


def tensor_rule(f: Callable[[np.ndarray], np.ndarray], dims: int, m: int,
                threads: int = 1, symmetric: bool = False) -> tuple[float, int]:
    """Apply the m^dims transformed Gauss-Legendre rule; returns (value, evaluations)."""
    points, weights = _grid(m, dims, symmetric)
    chunks = [slice(i, i + _CHUNK) for i in range(0, len(points), _CHUNK)]

    def run(s: slice) -> np.ndarray:
        return np.asarray(f(points[s]), dtype=float)

    if threads > 1 and len(chunks) > 1:
        with ThreadPoolExecutor(max_workers=threads) as pool:
            parts = list(pool.map(run, chunks))
    else:
        parts = [run(s) for s in chunks]
    values = np.concatenate(parts)
    if not np.all(np.isfinite(values)):
        bad = points[np.flatnonzero(~np.isfinite(values))[0]]
        raise DomainError(f"integrand is not finite at t={bad.tolist()}")
    # np.sum is pairwise and independent of how the evaluations were chunked
    return float(np.sum(weights * values)), len(points)


def integrate_semiinf_nd(f: Callable[[np.ndarray], np.ndarray], dims: int, cfg: QuadConfig = QuadConfig(),
                         symmetric: bool = False) -> tuple[float, float]:
    """Integrate f over [0, inf)^dims via t = u/(1-u) and tensor Gauss-Legendre.

    ``f`` takes an (N, dims) array of points and returns N values. With
    ``symmetric=True`` f must be invariant under permutations of coordinates;
    only one point per permutation orbit is evaluated. The error estimate is
    the difference between the nodes_per_dim and verify_nodes_per_dim rules.
    """
    value, err, _ = integrate_semiinf_nd_levels(f, dims, cfg, symmetric)
    return value, err


def integrate_semiinf_nd_levels(f, dims: int, cfg: QuadConfig = QuadConfig(),
                                symmetric: bool = False) -> tuple[float, float, dict]:
    if not 1 <= dims <= 3:
        raise ValueError(f"dims must be in [1, 3], got {dims}")
    hi, n_hi = tensor_rule(f, dims, cfg.nodes_per_dim, cfg.threads, symmetric)
    lo, n_lo = tensor_rule(f, dims, cfg.verify_nodes_per_dim, cfg.threads, symmetric)
    err = abs(hi - lo)
    levels = {cfg.nodes_per_dim: hi, cfg.verify_nodes_per_dim: lo, "evaluations": n_hi + n_lo}
    if err > max(cfg.cubature_rel_tol * abs(hi), cfg.abs_tol):
        raise ConvergenceError(
            f"cubature levels disagree: {cfg.nodes_per_dim} nodes -> {hi!r}, "
            f"{cfg.verify_nodes_per_dim} nodes -> {lo!r}",
            hi, err, levels,
        )
    return hi, err, levels
