import math

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st
from scipy import integrate

from evoeq.estimate import ConvergenceError, DomainError
from evoeq.kostlan import kostlan_prefactor
from evoeq.quad import QuadConfig, _grid, integrate_1d, integrate_semiinf_nd, integrate_semiinf_nd_levels


@pytest.mark.parametrize("f, expected", [
    (lambda t: np.ones_like(t), 1.0),
    (lambda t: 2 / (math.pi * (1 + t * t)), 0.5),
    (lambda t: 4 * t ** 3, 1.0),
])
def test_integrate_1d_examples(f, expected):
    value, err = integrate_1d(f, 0.0, 1.0)
    assert value == pytest.approx(expected, abs=1e-12)
    assert err <= 1e-8


def test_integrate_1d_accepts_scalar_callables():
    value, _ = integrate_1d(lambda t: math.exp(t), 0.0, 1.0)
    assert value == pytest.approx(math.e - 1, rel=1e-12)


@settings(max_examples=30, deadline=None)
@given(st.floats(0.1, 20.0), st.floats(-3.0, 3.0))
def test_integrate_1d_against_scipy(k, shift):
    f = lambda t: np.sin(k * t + shift) * np.exp(-t)
    value, _ = integrate_1d(f, 0.0, 2.0, QuadConfig(rel_tol=1e-10, abs_tol=1e-12))
    ref, _ = integrate.quad(f, 0.0, 2.0, epsabs=1e-13, epsrel=1e-12)
    assert value == pytest.approx(ref, abs=1e-9)


def test_integrate_1d_sqrt_endpoint_singularity():
    value, _ = integrate_1d(lambda t: 1 / np.sqrt(t + 1e-300), 0.0, 1.0, QuadConfig(rel_tol=1e-6, max_depth=60))
    assert value == pytest.approx(2.0, rel=1e-5)


def test_integrate_1d_budget_exhaustion():
    with pytest.raises(ConvergenceError) as info:
        integrate_1d(lambda t: np.sin(1 / (t + 1e-9)), 0.0, 1.0, QuadConfig(max_depth=3))
    assert math.isfinite(info.value.value)


def test_integrate_1d_rejects_nonfinite():
    with pytest.raises(DomainError):
        integrate_1d(lambda t: np.where(t > 0.5, np.inf, 1.0), 0.0, 1.0)


def test_quadconfig_validation():
    with pytest.raises(ValueError):
        QuadConfig(rel_tol=0)
    with pytest.raises(ValueError):
        QuadConfig(nodes_per_dim=40, verify_nodes_per_dim=40)
    with pytest.raises(ValueError):
        QuadConfig(threads=0)


def test_semiinf_1d_arctan():
    value, _ = integrate_semiinf_nd(lambda T: 1 / (1 + T[:, 0] ** 2), 1)
    assert value == pytest.approx(math.pi / 2, rel=1e-10)


def test_semiinf_2d_chain():
    value, err = integrate_semiinf_nd(lambda T: (1 + (T ** 2).sum(axis=1)) ** -1.5, 2)
    assert value == pytest.approx(math.pi / 2, rel=1e-3)
    assert kostlan_prefactor(3) * value == pytest.approx(0.25, rel=1e-3)


def test_semiinf_3d_chain():
    value, _ = integrate_semiinf_nd(lambda T: (1 + (T ** 2).sum(axis=1)) ** -2, 3, symmetric=True)
    assert kostlan_prefactor(4) * value == pytest.approx(0.125, rel=1e-3)


@pytest.mark.parametrize("dims", [2, 3])
def test_symmetric_grid_equals_full_grid(dims):
    f = lambda T: np.exp(-(T ** 2).sum(axis=1)) * (1 + T.prod(axis=1))
    cfg = QuadConfig(nodes_per_dim=24, verify_nodes_per_dim=16)
    full, _ = integrate_semiinf_nd(f, dims, cfg)
    sym, _ = integrate_semiinf_nd(f, dims, cfg, symmetric=True)
    assert sym == pytest.approx(full, rel=1e-12)
    pts, w = _grid(24, dims, True)
    assert len(pts) == math.comb(24 + dims - 1, dims)
    assert w.sum() == pytest.approx(_grid(24, dims, False)[1].sum(), rel=1e-12)


def test_refinement_improves_error():
    f = lambda T: (1 + (T ** 2).sum(axis=1)) ** -1.5
    errs = []
    for m in (20, 40, 80):
        value, _ = integrate_semiinf_nd(f, 2, QuadConfig(nodes_per_dim=m, verify_nodes_per_dim=m // 2,
                                                         cubature_rel_tol=1.0))
        errs.append(abs(value - math.pi / 2))
    assert errs[0] > errs[1] > errs[2]


def test_cubature_disagreement_raises():
    cfg = QuadConfig(nodes_per_dim=6, verify_nodes_per_dim=3, cubature_rel_tol=1e-8)
    with pytest.raises(ConvergenceError) as info:
        integrate_semiinf_nd_levels(lambda T: (1 + (T ** 2).sum(axis=1)) ** -1.5, 2, cfg)
    assert 6 in info.value.levels and 3 in info.value.levels


def test_threads_do_not_change_cubature():
    f = lambda T: (1 + (T ** 2).sum(axis=1)) ** -2
    a, _ = integrate_semiinf_nd(f, 3, QuadConfig(threads=1))
    b, _ = integrate_semiinf_nd(f, 3, QuadConfig(threads=4))
    assert a == b


def test_semiinf_dims_guard():
    with pytest.raises(ValueError):
        integrate_semiinf_nd(lambda T: T[:, 0], 4)
