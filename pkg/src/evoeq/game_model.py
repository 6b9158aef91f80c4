"""Random d-player n-strategy games and their polynomial equilibrium systems.

Internal equilibria of the replicator dynamics correspond to strictly positive
solutions y = (x_1/x_n, ..., x_{n-1}/x_n) of n-1 polynomial equations

    sum_k  beta^i_k * multinomial(d-1; k_1, ..., k_n) * prod_l y_l^{k_l} = 0,

one per strategy i < n, where k_n = d-1 - (k_1 + ... + k_{n-1}).
"""
from __future__ import annotations

import itertools
import math
from dataclasses import dataclass, field
from functools import lru_cache
from typing import Sequence

import numpy as np

MultiIndex = tuple[int, ...]


@dataclass(frozen=True)
class GameSpec:
    n: int
    d: int

    def __post_init__(self) -> None:
        for name in ("n", "d"):
            value = getattr(self, name)
            if isinstance(value, bool) or not isinstance(value, (int, np.integer)):
                raise TypeError(f"{name} must be an integer, got {value!r}")
            if value < 2:
                raise ValueError(f"{name} must be >= 2, got {value}")
        object.__setattr__(self, "n", int(self.n))
        object.__setattr__(self, "d", int(self.d))

    def max_equilibria(self) -> int:
        return (self.d - 1) ** (self.n - 1)

    @property
    def num_indices(self) -> int:
        return math.comb(self.d - 1 + self.n - 1, self.n - 1)


def multinomial(dm1: int, parts: Sequence[int]) -> int:
    """Exact multinomial coefficient (dm1; parts), built from binomials."""
    parts = [int(p) for p in parts]
    if dm1 < 0 or any(p < 0 for p in parts):
        raise ValueError("multinomial arguments must be non-negative")
    if sum(parts) != dm1:
        raise ValueError(f"parts {parts} do not sum to {dm1}")
    result = 1
    remaining = dm1
    for p in parts:
        result *= math.comb(remaining, p)
        remaining -= p
    return result


@lru_cache(maxsize=None)
def _indices(n: int, d: int) -> tuple[MultiIndex, ...]:
    return tuple(k for k in itertools.product(range(d), repeat=n - 1) if sum(k) <= d - 1)


def enumerate_indices(spec: GameSpec) -> list[MultiIndex]:
    """All exponent vectors (k_1..k_{n-1}) with sum <= d-1, lexicographic."""
    return list(_indices(spec.n, spec.d))


def index_weights(spec: GameSpec) -> list[int]:
    """multinomial(d-1; k_1..k_n) for each index, in enumerate_indices order."""
    dm1 = spec.d - 1
    return [multinomial(dm1, list(k) + [dm1 - sum(k)]) for k in _indices(spec.n, spec.d)]


def philox_stream(seed: int, counter: int) -> np.random.Generator:
    """Counter-based stream number `counter` under `seed`.

    Streams are independent of each other and of the order in which they are
    created, so chunked parallel sampling stays reproducible.
    """
    ss = np.random.SeedSequence(int(seed), spawn_key=(int(counter),))
    return np.random.Generator(np.random.Philox(ss))


@dataclass(frozen=True, eq=False)
class CoeffSystem:
    """One sampled polynomial system: rows[i-1, j] = beta * multinomial weight."""

    spec: GameSpec
    indices: tuple[MultiIndex, ...]
    weights: tuple[int, ...]
    rows: np.ndarray = field(repr=False)
    sigma: float
    seed: int

    def __post_init__(self) -> None:
        rows = np.array(self.rows, dtype=float)
        expected = (self.spec.n - 1, self.spec.num_indices)
        if rows.shape != expected:
            raise ValueError(f"rows must have shape {expected}, got {rows.shape}")
        rows.flags.writeable = False
        object.__setattr__(self, "rows", rows)

    def coefficients(self, row: int) -> np.ndarray:
        """Weighted coefficients of equation `row` (1-based)."""
        if not 1 <= row <= self.spec.n - 1:
            raise ValueError(f"row must be in [1, {self.spec.n - 1}], got {row}")
        return self.rows[row - 1]


def draw_betas(spec: GameSpec, rng: np.random.Generator, size: int, sigma: float = 1.0) -> np.ndarray:
    """Standardised draws scaled by sigma, shape (size, n-1, num_indices)."""
    z = rng.standard_normal((size, spec.n - 1, spec.num_indices))
    return sigma * z


def sample_system(spec: GameSpec, sigma: float, seed: int) -> CoeffSystem:
    if not sigma > 0:
        raise ValueError(f"sigma must be positive, got {sigma}")
    weights = index_weights(spec)
    beta = draw_betas(spec, philox_stream(seed, 0), 1, sigma)[0]
    rows = beta * np.array(weights, dtype=float)
    return CoeffSystem(spec, _indices(spec.n, spec.d), tuple(weights), rows, float(sigma), int(seed))


def eval_poly(system: CoeffSystem, row: int, y: Sequence[float]) -> float:
    coeffs = system.coefficients(row)
    y = [float(v) for v in np.atleast_1d(y)]
    if len(y) != system.spec.n - 1:
        raise ValueError(f"y must have length {system.spec.n - 1}")
    if any(not v > 0 for v in y):
        raise ValueError("y must be strictly positive")
    terms = []
    for c, k in zip(coeffs, system.indices):
        mono = 1.0
        for yl, kl in zip(y, k):
            mono *= yl ** kl
        terms.append(float(c) * mono)
    return math.fsum(terms)
