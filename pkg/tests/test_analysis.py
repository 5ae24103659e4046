from fractions import Fraction

import pytest

from zenclock.analysis import (
    SweepSpec,
    accuracy_sweep,
    amplitude_table,
    cell_seed,
    flatten,
    limit_check,
    resolve_policy,
)
from zenclock.analytic import amplitude
from zenclock.errors import CapacityError, ConfigError

GRID = [0.3 + 0.25 * i for i in range(11)]


def test_amplitude_table_rows():
    rows = {r.n: r for r in amplitude_table(2, 100)}
    assert (rows[4].a0_w, rows[4].a0_opt, rows[4].ratio) == (0.25, 1 / 3, 4 / 3)
    assert (rows[2].a0_w, rows[2].a0_opt, rows[2].ratio) == (0.5, 0.5, 1.0)
    assert rows[100].a0_opt == float(Fraction(2500, 9900))
    assert rows[100].ratio == float(Fraction(2500, 99))
    assert rows[100].ratio == pytest.approx(25.25, abs=0.01)
    assert all(r.ratio >= 1 for r in rows.values())
    assert all(r.ratio > 1 for n, r in rows.items() if n >= 4)


def test_amplitude_table_range():
    with pytest.raises(ValueError):
        amplitude_table(10, 2)
    with pytest.raises(ValueError):
        amplitude_table(1, 5)


def test_limit_check():
    rep = limit_check(1000)
    assert rep.ok
    gaps = dict(zip(rep.n_values, rep.gap))
    assert 1000 in gaps and 4 in gaps
    assert gaps[1000] == pytest.approx(float(Fraction(500 * 500, 999000) - Fraction(1, 4)), rel=1e-9)
    assert abs(limit_check(10).gap[-1] - 1 / 36) < 1e-15
    with pytest.raises(ValueError):
        limit_check(3)


@pytest.mark.parametrize("policy,n,k", [("w_state", 7, 1), ("optimal", 7, 3), ("fixed:2", 7, 2)])
def test_resolve_policy(policy, n, k):
    assert resolve_policy(policy, n) == k


@pytest.mark.parametrize("policy", ["best", "fixed:x", "fixed:9"])
def test_resolve_policy_rejects(policy):
    with pytest.raises(ValueError):
        resolve_policy(policy, 4)


class TestSpec:
    def test_empty_n(self):
        with pytest.raises(ConfigError) as e:
            SweepSpec([], ["optimal"], GRID, 10, 0)
        assert e.value.field == "n_values"

    def test_zero_amplitude_policy(self):
        with pytest.raises(ConfigError) as e:
            SweepSpec([2, 4], ["fixed:2"], GRID, 10, 0)
        assert e.value.field == "policies[0]"

    def test_unidentifiable_grid(self):
        with pytest.raises(ConfigError):
            SweepSpec([4], ["optimal"], [4.0], 10, 0)

    def test_mc_cap(self):
        with pytest.raises(CapacityError):
            SweepSpec([13], ["optimal"], GRID, 10, 0)
        SweepSpec([13], ["optimal"], GRID, 10, 0, exact=True)

    def test_round_trip(self):
        s = SweepSpec([4, 6], ["optimal", "w_state"], GRID, 100, 5)
        assert SweepSpec.from_dict(s.to_dict()) == s

    def test_unknown_field(self):
        d = dict(SweepSpec([4], ["optimal"], GRID, 100, 5).to_dict(), shotz=3)
        with pytest.raises(ConfigError):
            SweepSpec.from_dict(d)


def test_exact_mode_zero_error():
    rows = accuracy_sweep(SweepSpec([2, 3, 4, 7, 40], ["w_state", "optimal"], GRID, 1, 0, exact=True))
    for r in rows:
        assert r.a0 == amplitude(r.k_used, r.n)
        assert max(r.abs_err) <= 1e-12
        assert r.rmse <= 1e-12


def test_n2_policies_coincide():
    rows = accuracy_sweep(SweepSpec([2], ["w_state", "optimal"], [0.5, 1.5, 2.5], 20_000, 8))
    assert rows[0].k_used == rows[1].k_used == 1
    assert rows[0].estimates == rows[1].estimates


def test_optimal_beats_w_state_at_four():
    rows = accuracy_sweep(SweepSpec([4], ["w_state", "optimal"], GRID, 100_000, 77))
    w, opt = rows
    assert opt.rmse < w.rmse


def test_rmse_follows_amplitude_order():
    # k=1, 2, 3 at n=6 have a0 = 1/6, 4/15, 3/10
    rows = accuracy_sweep(SweepSpec([6], ["fixed:1", "fixed:2", "fixed:3"], GRID, 100_000, 31))
    rmses = [r.rmse for r in rows]
    assert rmses[0] > rmses[1] > rmses[2]


def test_deterministic_and_flattened():
    spec = SweepSpec([4], ["optimal"], GRID[:3], 5000, 3)
    a, b = accuracy_sweep(spec), accuracy_sweep(spec, jobs=4)
    assert flatten(a) == flatten(b)
    flat = flatten(a)
    assert len(flat) == 3 and {r["rmse"] for r in flat} == {a[0].rmse}


def test_cell_seed_ignores_policy_but_not_cell():
    assert cell_seed(1, 4, 0) != cell_seed(1, 4, 1) != cell_seed(1, 6, 1)
    assert cell_seed(1, 4, 0) == cell_seed(1, 4, 0)
    assert 0 <= cell_seed(2**64 - 1, 8, 10) < 2**64
