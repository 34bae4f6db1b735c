import numpy as np
import pytest

from sh2d.verify import (
    SuiteResult,
    random_bandlimited,
    random_localized,
    random_nonnegative,
    run_all,
    suite_polya_szego,
    suite_self_adjoint,
)


def test_bandlimited_support(grid64, rng):
    u = random_bandlimited(grid64, rng, kmax=1.0)
    u_hat = grid64.to_frequency(u)
    assert np.all(np.abs(u_hat[grid64.xi2 > 1.0]) < 1e-12)
    assert np.isrealobj(u)
    assert grid64.l2_norm(u) == pytest.approx(1.0)


def test_nonnegative_and_localized(grid64, rng):
    assert random_nonnegative(grid64, rng).min() >= 0
    v = random_localized(grid64, rng)
    assert np.iscomplexobj(v) and grid64.l2_norm(v) == pytest.approx(1.0)


def test_suite_result_summary():
    r = SuiteResult("riesz_bfll", 100, 99, 1.0004, 1.001, 99)
    assert r.ok
    assert r.summary() == "riesz_bfll: 99/100 within tolerance (ok, worst 1.0004)"
    assert not SuiteResult("gn", 10, 9, 1.1, 1.0, 10).ok
    assert r.to_dict()["ok"] is True


def test_suites_on_small_grid(op128, grid128):
    rng = np.random.default_rng(0)
    assert suite_polya_szego(grid128, rng, 10).ok
    sa = suite_self_adjoint(op128, 1.0, rng, 10)
    assert sa.ok and sa.worst <= 1e-12


def test_run_all_seeded(op128, gauss128):
    a, gn_a = run_all(op128, gauss128, 2.0, seed=4, trials=8)
    b, gn_b = run_all(op128, gauss128, 2.0, seed=4, trials=8)
    assert [r.to_dict() for r in a] == [r.to_dict() for r in b]
    assert gn_a.C_gn == gn_b.C_gn
    assert [r.name for r in a] == ["riesz_bfll", "polya_szego", "weinstein_symmetrization", "gn", "self_adjoint"]
    assert all(r.ok for r in a)
