import time

import pytest

from evoeq import density2, verify


def test_quick_suite_passes_fast():
    start = time.perf_counter()
    results = verify.run_checks("quick")
    assert time.perf_counter() - start < 10
    assert all(r.passed for r in results), [r for r in results if not r.passed]


def test_sign_mutation_is_caught():
    ok, detail = verify.check_a_coefficients(lambda d: density2._a_raw(d, second_sign=+1))
    assert not ok and "d=3" in detail


def test_unknown_level():
    with pytest.raises(ValueError):
        verify.run_checks("medium")


def test_crashing_check_is_reported(monkeypatch):
    def boom():
        raise RuntimeError("broken")
    monkeypatch.setattr(verify, "_suite", lambda level: [("boom", boom)])
    (res,) = verify.run_checks("quick")
    assert not res.passed and "broken" in res.detail


@pytest.mark.slow
def test_full_suite_passes():
    start = time.perf_counter()
    results = verify.run_checks("full")
    assert time.perf_counter() - start < 600
    assert all(r.passed for r in results), [r for r in results if not r.passed]
