"""Monte Carlo oracle: sample random games and count internal equilibria directly.

Two-strategy games reduce to counting the distinct positive roots of
P(y) = sum_k beta_k C(d-1,k) y^k (Sturm sequences). Two-player games reduce
to a linear system whose unique solution ray is internal iff all of its
coordinates are positive.
"""
from __future__ import annotations

import enum
import json
import logging
import math
import time
from concurrent.futures import ThreadPoolExecutor
from dataclasses import asdict, dataclass, field
from fractions import Fraction
from typing import Any, Optional, Sequence

import numpy as np

from .game_model import GameSpec, draw_betas, enumerate_indices, index_weights, philox_stream

log = logging.getLogger(__name__)

CHUNK = 4096
LEAD_TOL = 1e-12
# relative size below which a float Sturm step is considered unreliable
_FLOAT_TRUST = 1e-9
_RESIDUAL_TOL = 1e-8
_MARGINAL_TOL = 1e-10
_COND_MAX = 1e12


class Stability(str, enum.Enum):
    STABLE = "stable"
    UNSTABLE = "unstable"
    MARGINAL = "marginal"


class _Untrusted(Exception):
    pass


# ---------------------------------------------------------------- Sturm chains
# Polynomials are coefficient arrays, lowest degree first.

def _prepare(coeffs: Sequence[float]) -> np.ndarray:
    c = np.asarray(coeffs, dtype=float)
    if c.ndim != 1 or len(c) == 0:
        raise ValueError("coefficients must be a non-empty vector")
    if not np.all(np.isfinite(c)):
        raise ValueError("coefficients must be finite")
    top = np.max(np.abs(c))
    if top == 0:
        raise ValueError("the zero polynomial has no isolated roots")
    c = c / top
    keep = len(c)
    while keep > 1 and abs(c[keep - 1]) < LEAD_TOL:
        keep -= 1
    return c[:keep]


def _rem(a, b):
    r = list(a)
    db = len(b) - 1
    for i in range(len(r) - 1, db - 1, -1):
        q = r[i] / b[-1]
        for j in range(db + 1):
            r[i - db + j] -= q * b[j]
    return r[:db]


def _derivative(p):
    return [k * p[k] for k in range(1, len(p))]


def _trim_exact(p):
    p = list(p)
    while len(p) > 1 and p[-1] == 0:
        p.pop()
    return p


def _chain_float(p: np.ndarray) -> list[np.ndarray]:
    chain = [p]
    dp = np.arange(1, len(p)) * p[1:]
    if len(dp) == 0:
        return chain
    chain.append(dp / np.max(np.abs(dp)))
    while len(chain[-1]) > 1:
        r = -np.asarray(_rem(chain[-2], chain[-1]))
        size = np.max(np.abs(r))
        if size == 0:
            break
        if size < _FLOAT_TRUST or abs(r[-1]) < _FLOAT_TRUST * size:
            raise _Untrusted
        chain.append(r / size)
    return chain


def _exact_coeffs(coeffs: Sequence[float]) -> list[int]:
    """The caller's doubles as one integer polynomial (common power-of-two scale).

    Truncated to the degree _prepare settles on, so both paths see the same
    polynomial.
    """
    keep = len(_prepare(coeffs))
    fr = [Fraction(float(c)) for c in coeffs[:keep]]
    den = max(f.denominator for f in fr)  # all powers of two
    return [int(f * den) for f in fr]


def _primitive(p: list[int]) -> list[int]:
    g = math.gcd(*p)
    return [x // g for x in p] if g > 1 else p


def _neg_prem(a: list[int], b: list[int]) -> list[int]:
    """-rem(a, b) up to a positive factor, in integers (sign-preserving pseudo-remainder)."""
    r = list(a)
    db, lead = len(b) - 1, b[-1]
    steps = len(a) - db
    for i in range(len(r) - 1, db - 1, -1):
        q = r[i]
        r = [x * lead for x in r]
        for j in range(db + 1):
            r[i - db + j] -= q * b[j]
    r = _trim_exact(r[:db])
    # prem = lead^steps * rem; undo a negative factor so only the sign of rem survives
    sign = -1 if (lead < 0 and steps % 2) else 1
    return _primitive([-sign * x for x in r]) if any(r) else [0]


def _chain_exact(p: Sequence[int]) -> list[list[int]]:
    chain = [_primitive(_trim_exact(list(p)))]
    if len(chain[0]) == 1:
        return chain
    chain.append(_primitive(_derivative(chain[0])))
    while len(chain[-1]) > 1:
        r = _neg_prem(chain[-2], chain[-1])
        if not any(r):
            break
        chain.append(r)
    return chain


def _sign_at_zero_plus(p) -> int:
    for c in p:
        if c != 0:
            return 1 if c > 0 else -1
    return 0


def _variations(signs: Sequence[int]) -> int:
    s = [x for x in signs if x != 0]
    return sum(1 for a, b in zip(s, s[1:]) if a != b)


def _profile_from_chain(chain) -> tuple[int, int, int]:
    at0 = _variations([_sign_at_zero_plus(p) for p in chain])
    at1 = _variations([int(np.sign(sum(p))) for p in chain])
    atinf = _variations([int(np.sign(p[-1])) for p in chain])
    return at0 - atinf, at0 - at1, at1 - atinf


def root_profile(coeffs: Sequence[float]) -> tuple[int, int, int]:
    """(roots in (0, inf), roots in (0, 1), roots in (1, inf)), distinct, via Sturm.

    Runs in double precision and repeats the chain in exact rational
    arithmetic (on the same double coefficients) when a step is ill-conditioned.
    """
    p = _prepare(coeffs)
    try:
        chain = _chain_float(p)
    except _Untrusted:
        log.debug("float Sturm chain ill-conditioned; retrying exactly for %s", p)
        chain = _chain_exact(_exact_coeffs(coeffs))
    return _profile_from_chain(chain)


def count_positive_roots(coeffs: Sequence[float]) -> int:
    return root_profile(coeffs)[0]


def count_positive_roots_exact(coeffs: Sequence[float]) -> int:
    return _profile_from_chain(_chain_exact(_exact_coeffs(coeffs)))[0]


def count_positive_roots_eig(coeffs: Sequence[float], imag_tol: float = 1e-7, pos_tol: float = 1e-9) -> int:
    """Second opinion: companion-matrix eigenvalues that are real and positive."""
    p = _prepare(coeffs)
    if len(p) == 1:
        return 0
    roots = np.polynomial.polynomial.polyroots(p)
    real = roots[np.abs(roots.imag) <= imag_tol * np.maximum(1.0, np.abs(roots))].real
    return int(np.count_nonzero(real > pos_tol))


def _profile_batch(C: np.ndarray) -> tuple[np.ndarray, np.ndarray, np.ndarray, np.ndarray]:
    """Vectorised Sturm counts for rows of C (all of the same degree).

    Rows whose chain is not generic (some step drops more than one degree or
    loses too much magnitude) are recomputed one at a time with root_profile.
    """
    B, size = C.shape
    P = C / np.max(np.abs(C), axis=1, keepdims=True)
    odd = np.abs(P[:, -1]) < LEAD_TOL
    chain = [P]
    if size > 1:
        D = P[:, 1:] * np.arange(1, size)
        chain.append(D / np.max(np.abs(D), axis=1, keepdims=True))
    while chain[-1].shape[1] > 1:
        A, Q = chain[-2], chain[-1]
        lead = Q[:, -1]
        with np.errstate(divide="ignore", invalid="ignore"):
            q1 = A[:, -1] / lead
            R = A[:, :-1].copy()
            R[:, 1:] -= q1[:, None] * Q[:, :-1]
            q0 = R[:, -1] / lead
            R = R[:, :-1] - q0[:, None] * Q[:, :-1]
        mag = np.max(np.abs(R), axis=1)
        odd |= ~np.isfinite(mag) | (mag < _FLOAT_TRUST) | (np.abs(R[:, -1]) < _FLOAT_TRUST * mag)
        safe = np.where((mag > 0) & np.isfinite(mag), mag, 1.0)
        chain.append(-R / safe[:, None])
    sig0 = np.stack([np.sign(p[:, 0]) for p in chain], axis=1)
    sig1 = np.stack([np.sign(p.sum(axis=1)) for p in chain], axis=1)
    siginf = np.stack([np.sign(p[:, -1]) for p in chain], axis=1)
    odd |= (sig0 == 0).any(axis=1) | (sig1 == 0).any(axis=1)

    def variations(s):
        return np.count_nonzero(s[:, 1:] != s[:, :-1], axis=1)

    v0, v1, vinf = variations(sig0), variations(sig1), variations(siginf)
    total, below, above = v0 - vinf, v0 - v1, v1 - vinf
    for i in np.flatnonzero(odd):
        total[i], below[i], above[i] = root_profile(C[i])
    return total, below, above, odd


def stable_root_count(coeffs: Sequence[float], positive_roots: int) -> int:
    """Number of stable equilibria among `positive_roots` simple positive roots.

    Each simple root flips the sign of P, so P' alternates in sign along the
    roots, starting opposite to the sign of P at 0+.
    """
    s0 = _sign_at_zero_plus(_prepare(coeffs))
    return (positive_roots + 1) // 2 if s0 > 0 else positive_roots // 2


def stability_classify(coeffs: Sequence[float], root: float) -> Stability:
    """Stability of the equilibrium x = y/(1+y) of a two-strategy game at root y.

    The fitness difference is (1-x)^(d-1) P(y) and dy/dx > 0, so the
    equilibrium is stable exactly when P'(y) < 0.
    """
    if not root > 0:
        raise ValueError("root must be positive")
    p = _prepare(coeffs)
    k = np.arange(len(p))
    powers = float(root) ** k
    value = float(p @ powers)
    scale = float(np.abs(p) @ powers)
    if abs(value) > _RESIDUAL_TOL * scale:
        raise ValueError(f"{root!r} is not a root (relative residual {abs(value) / scale:.2e})")
    deriv = float((k[1:] * p[1:]) @ powers[:-1]) if len(p) > 1 else 0.0
    if abs(deriv) < _MARGINAL_TOL:
        return Stability.MARGINAL
    return Stability.STABLE if deriv < 0 else Stability.UNSTABLE


# ----------------------------------------------------------------- Monte Carlo

@dataclass
class McReport:
    n: int
    d: int
    samples: int
    seed: int
    sigma: float
    mean_count: float
    std_err: float
    histogram: list[int]
    stable_fraction: Optional[float] = None
    stable_std_err: Optional[float] = None
    split_counts: Optional[tuple[float, float]] = None
    split_std_err: Optional[float] = None
    diagnostics: dict[str, Any] = field(default_factory=dict)
    counts: Optional[np.ndarray] = field(default=None, repr=False)

    def p(self, i: int) -> float:
        """Empirical probability of exactly i internal equilibria."""
        return self.histogram[i] / self.samples if 0 <= i < len(self.histogram) else 0.0

    def to_dict(self) -> dict[str, Any]:
        out = asdict(self)
        out.pop("counts")
        if out["split_counts"] is not None:
            out["split_counts"] = list(out["split_counts"])
        return out

    def to_json(self, **kwargs) -> str:
        return json.dumps(self.to_dict(), **kwargs)


def _chunks(samples: int) -> list[tuple[int, int]]:
    return [(c, min(CHUNK, samples - c * CHUNK)) for c in range(math.ceil(samples / CHUNK))]


def _run_chunks(work, samples: int, threads: int) -> list:
    chunks = _chunks(samples)
    if threads > 1 and len(chunks) > 1:
        with ThreadPoolExecutor(max_workers=threads) as pool:
            return list(pool.map(lambda c: work(*c), chunks))
    return [work(*c) for c in chunks]


def _mean_and_err(x: np.ndarray) -> tuple[float, float]:
    if len(x) < 2:
        return float(np.mean(x)), float("nan")
    return float(np.mean(x)), float(np.std(x, ddof=1) / math.sqrt(len(x)))


def mc_e2d(d: int, samples: int, seed: int, sigma: float = 1.0, threads: int = 1) -> McReport:
    """Sample two-strategy d-player games and count their internal equilibria."""
    spec = GameSpec(2, d)
    if samples < 1:
        raise ValueError("samples must be >= 1")
    weights = np.array(index_weights(spec), dtype=float)
    start = time.perf_counter()

    def work(chunk: int, size: int):
        beta = draw_betas(spec, philox_stream(seed, chunk), size, sigma)[:, 0, :]
        C = beta * weights
        total, below, above, odd = _profile_batch(C)
        s0 = np.sign(C[:, 0])
        stable = np.where(s0 > 0, (total + 1) // 2, total // 2)
        return total, below, above, stable, int(np.count_nonzero(odd))

    parts = _run_chunks(work, samples, threads)
    total = np.concatenate([p[0] for p in parts])
    below = np.concatenate([p[1] for p in parts])
    above = np.concatenate([p[2] for p in parts])
    stable = np.concatenate([p[3] for p in parts])
    fallbacks = sum(p[4] for p in parts)

    mean, err = _mean_and_err(total)
    hist = np.bincount(total, minlength=d)[:d]
    if int(hist.sum()) != samples:
        raise RuntimeError("root counts exceeded the degree bound")
    n_roots = int(total.sum())
    n_stable = int(stable.sum())
    frac = n_stable / n_roots if n_roots else float("nan")
    frac_err = math.sqrt(frac * (1 - frac) / n_roots) if n_roots else float("nan")
    _, split_err = _mean_and_err(below - above)
    return McReport(
        n=2, d=d, samples=samples, seed=seed, sigma=sigma,
        mean_count=mean, std_err=err, histogram=[int(h) for h in hist],
        stable_fraction=frac, stable_std_err=frac_err,
        split_counts=(float(below.mean()), float(above.mean())), split_std_err=split_err,
        diagnostics={
            "equilibria": n_roots, "stable": n_stable, "marginal": 0,
            "sturm_fallbacks": fallbacks,
            "threads": threads, "wall_time": time.perf_counter() - start,
        },
        counts=total,
    )


def _positive_ray(M: np.ndarray, b: np.ndarray) -> np.ndarray:
    # solve M y = -b for each sample; internal iff every y_j > 0
    y = np.linalg.solve(M, -b[..., None])[..., 0]
    return np.all(y > 0, axis=1)


def mc_en2(n: int, samples: int, seed: int, sigma: float = 1.0, threads: int = 1) -> McReport:
    """Sample two-player n-strategy games (linear systems) and count internal equilibria."""
    spec = GameSpec(n, 2)
    if samples < 1:
        raise ValueError("samples must be >= 1")
    start = time.perf_counter()
    # index order: (0,..,0) is the constant term, then unit vectors e_{n-1}, ..., e_1
    idx = [tuple(int(v) for v in k) for k in np.eye(n - 1, dtype=int)]
    order = enumerate_indices(spec)
    const_col = order.index(tuple([0] * (n - 1)))
    var_cols = [order.index(k) for k in idx]

    def work(chunk: int, size: int):
        rng = philox_stream(seed, chunk)
        beta = draw_betas(spec, rng, size, sigma)
        M = beta[:, :, var_cols]
        cond = np.linalg.cond(M)
        bad = ~(cond <= _COND_MAX)
        redraws = 0
        while bad.any():
            k = int(np.count_nonzero(bad))
            redraws += k
            beta[bad] = draw_betas(spec, rng, k, sigma)
            M = beta[:, :, var_cols]
            cond = np.linalg.cond(M)
            bad = ~(cond <= _COND_MAX)
        hit = _positive_ray(M, beta[:, :, const_col])
        return hit.astype(np.int64), redraws

    parts = _run_chunks(work, samples, threads)
    total = np.concatenate([p[0] for p in parts])
    mean, err = _mean_and_err(total)
    hist = np.bincount(total, minlength=2)[:2]
    return McReport(
        n=n, d=2, samples=samples, seed=seed, sigma=sigma,
        mean_count=mean, std_err=err, histogram=[int(h) for h in hist],
        diagnostics={
            "resampled_near_singular": int(sum(p[1] for p in parts)),
            "threads": threads, "wall_time": time.perf_counter() - start,
        },
        counts=total,
    )
