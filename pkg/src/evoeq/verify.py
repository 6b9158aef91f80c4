"""Self-check suites behind ``evoeq verify quick|full``."""
from __future__ import annotations

import math
import time
from dataclasses import dataclass
from typing import Callable, Optional

import numpy as np

from . import density2, kostlan, oracle
from .game_model import GameSpec
from .quad import QuadConfig, integrate_1d

SEED = 20160101


@dataclass
class CheckResult:
    name: str
    passed: bool
    detail: str
    seconds: float = 0.0


def check_a_coefficients(a_fn: Optional[Callable[[int], list]] = None, d_max: int = 50) -> tuple[bool, str]:
    a_fn = a_fn or density2.a_coefficients
    for d in range(2, d_max + 1):
        a = list(a_fn(d))
        if len(a) != max(1, 2 * d - 3):
            return False, f"d={d}: expected {max(1, 2 * d - 3)} coefficients, got {len(a)}"
        if a[0] != 1 or a[-1] != 1:
            return False, f"d={d}: end coefficients {a[0]}, {a[-1]} != 1"
        if a != a[::-1]:
            return False, f"d={d}: not palindromic"
        if min(a) < 1:
            return False, f"d={d}: min a_k = {min(a)} < 1"
    return True, f"d=2..{d_max}"


def check_f_symmetry(n_points: int = 100, seed: int = SEED) -> tuple[bool, str]:
    rng = np.random.default_rng(seed)
    worst = 0.0
    for d in range(2, 21):
        ctx = density2.density_context(d)
        t = rng.uniform(0.0, 10.0, n_points)
        t = np.where(t == 0, 1.0, t)
        lhs = density2.density_f(ctx, 1 / t)
        rhs = t ** 2 * density2.density_f(ctx, t)
        worst = max(worst, float(np.max(np.abs(lhs - rhs) / np.abs(rhs))))
    return worst <= 1e-10, f"max relative gap {worst:.2e}"


def check_half_interval(d_values=range(2, 21)) -> tuple[bool, str]:
    cfg = QuadConfig(rel_tol=1e-12, abs_tol=1e-14)
    worst = 0.0
    for d in d_values:
        ctx = density2.density_context(d)
        inner, _ = integrate_1d(lambda t: density2.density_f(ctx, t), 0.0, 1.0, cfg)
        # int_1^inf f(t) dt via t = 1/s
        outer, _ = integrate_1d(lambda s: density2.density_f(ctx, 1 / s) / s ** 2, 0.0, 1.0, cfg)
        worst = max(worst, abs(inner - outer))
    return worst <= 1e-8, f"max |int_0^1 f - int_1^inf f| = {worst:.2e}"


def check_det_l_oracle(n_points: int = 100, seed: int = SEED) -> tuple[bool, str]:
    rng = np.random.default_rng(seed)
    worst = 0.0
    for n in (2, 3, 4):
        ctx = kostlan.kernel_context(GameSpec(n, 2))
        T = rng.uniform(0.0, 10.0, (n_points, n - 1))
        got = np.linalg.det(kostlan.l_matrix_batch(ctx, T))
        want = np.array([kostlan.det_l_closed_d2(n, t) for t in T])
        worst = max(worst, float(np.max(np.abs(got - want) / want)))
    return worst <= 1e-10, f"max relative gap {worst:.2e}"


def check_n2_reduction(n_points: int = 100, seed: int = SEED) -> tuple[bool, str]:
    rng = np.random.default_rng(seed)
    worst = 0.0
    for d in range(2, 21):
        ctx = kostlan.kernel_context(GameSpec(2, d))
        T = rng.uniform(0.0, 10.0, (n_points, 1))
        got, _ = kostlan.integrand_batch(ctx, T)
        want = math.pi * density2.density_f(density2.density_context(d), T[:, 0])
        worst = max(worst, float(np.max(np.abs(got - want) / want)))
    return worst <= 1e-10, f"max relative gap {worst:.2e}"


def check_gamma_chain(n_values=(2, 3, 4)) -> tuple[bool, str]:
    gaps = {}
    for n in n_values:
        est = kostlan.e_nd_quadrature(n, 2)
        gaps[n] = abs(est.value - 2.0 ** (1 - n))
    ok = all(g <= 1e-4 for g in gaps.values())
    return ok, ", ".join(f"n={n}: {g:.1e}" for n, g in gaps.items())


def check_sandwich(d_max: int = 100) -> tuple[bool, str]:
    bad = []
    for d in range(2, d_max + 1):
        lo, hi = density2.bounds_e2d(d)
        e = density2.e2d(d).value
        if not lo <= e <= hi:
            bad.append(d)
    return not bad, f"violations at d={bad}" if bad else f"d=2..{d_max}"


def check_root_representation(d_max: int = density2.MAX_ROOT_DEGREE) -> tuple[bool, str]:
    t = np.linspace(0.0, 5.0, 201)
    worst_f = worst_v = 0.0
    for d in range(2, d_max + 1):
        ctx = density2.density_context(d)
        r = density2.m_roots(ctx)
        direct = (2 * math.pi * density2.density_f(ctx, t)) ** 2
        worst_f = max(worst_f, float(np.max(np.abs(density2.density_sq_from_roots(r, t) / direct - 1))))
        prod = float(np.prod(r))
        elem = float(sum(np.prod(np.delete(r, i)) for i in range(len(r))))
        worst_v = max(worst_v, abs(prod - 1), abs(elem / (d - 1) ** 2 - 1))
    ok = worst_f <= 1e-6 and worst_v <= 1e-6
    return ok, f"density {worst_f:.1e}, Vieta {worst_v:.1e}"


def check_mc_agreement(d_values, samples: int, seed: int = SEED, threads: int = 1) -> tuple[bool, str]:
    bad = []
    for d in d_values:
        rep = oracle.mc_e2d(d, samples, seed, threads=threads)
        ref = density2.e2d(d).value
        if abs(rep.mean_count - ref) > 3 * rep.std_err:
            bad.append(f"d={d}: {rep.mean_count:.4f} vs {ref:.4f}")
    return not bad, "; ".join(bad) or f"d in {list(d_values)} within 3 s.e."


def check_mc_en2(n_values, samples: int, seed: int = SEED, threads: int = 1) -> tuple[bool, str]:
    bad = []
    for n in n_values:
        rep = oracle.mc_en2(n, samples, seed, threads=threads)
        if abs(rep.mean_count - 2.0 ** (1 - n)) > 3 * rep.std_err:
            bad.append(f"n={n}: {rep.mean_count:.4f}")
    return not bad, "; ".join(bad) or f"n in {list(n_values)} within 3 s.e."


def check_stability(d_values=(3, 5, 10), samples: int = 100_000, seed: int = SEED) -> tuple[bool, str]:
    fracs = {d: oracle.mc_e2d(d, samples, seed).stable_fraction for d in d_values}
    ok = all(abs(f - 0.5) <= 0.01 for f in fracs.values())
    return ok, ", ".join(f"d={d}: {f:.4f}" for d, f in fracs.items())


def _suite(level: str) -> list[tuple[str, Callable[[], tuple[bool, str]]]]:
    checks = [
        ("a_k palindrome", check_a_coefficients),
        ("f(1/t) = t^2 f(t)", check_f_symmetry),
        ("half-interval identity", check_half_interval),
        ("det L oracle at d=2", check_det_l_oracle),
        ("n=2 integrand reduction", check_n2_reduction),
        ("Gamma chain E(n,2)", check_gamma_chain),
        ("E(2,d) bounds sandwich", check_sandwich),
        ("MC agreement (quick)", lambda: check_mc_agreement((2, 3, 5), 20_000)),
    ]
    if level == "full":
        checks += [
            ("root representation", check_root_representation),
            ("MC agreement E(2,d)", lambda: check_mc_agreement(range(2, 11), 100_000)),
            ("MC agreement E(n,2)", lambda: check_mc_en2((2, 3, 4), 100_000)),
            ("stable fraction", check_stability),
        ]
    return checks


def run_checks(level: str = "quick") -> list[CheckResult]:
    if level not in ("quick", "full"):
        raise ValueError(f"unknown verify level {level!r}")
    results = []
    for name, fn in _suite(level):
        start = time.perf_counter()
        try:
            ok, detail = fn()
        except Exception as exc:  # a crashing check is a failing check
            ok, detail = False, f"{type(exc).__name__}: {exc}"
        results.append(CheckResult(name, bool(ok), detail, time.perf_counter() - start))
    return results
