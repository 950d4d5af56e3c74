import numpy as np
import pytest

from sharing_pricing import network as nv
from sharing_pricing.poi import LOWER_BOUND, UPPER_BOUND, estimate_poi, poi_bounds_general, profit_estimates
from sharing_pricing.valuation import UNIFORM


def sqrt_limit():
    # maximise t (1 - t)^(3/2): t = 2/5; complete profit ~ n^(3/2)/2
    t = 0.4
    return 0.5 / (t * (1 - t) ** 1.5)


def test_sqrt_limit_oracle():
    grid = np.linspace(0, 1, 1_000_001)
    assert grid[np.argmax(grid * (1 - grid) ** 1.5)] == pytest.approx(0.4, abs=1e-6)
    assert sqrt_limit() == pytest.approx(2.6896, abs=1e-4)


def test_report_fields():
    rep = estimate_poi(UNIFORM, nv.metcalfe(), 0.0, 200, replicates=500, seed=0)
    assert rep.poi_estimate == rep.complete_profit.mean / rep.uniform_profit
    assert rep.closed_form == pytest.approx(27 / 8)
    assert rep.model == "metcalfe"
    assert rep.n == 200
    assert rep.poi_estimate >= 1.0


def test_bounded_poi_near_two():
    rep = estimate_poi(UNIFORM, nv.bounded(0.5), 0.5, 100_000, replicates=30, seed=1)
    assert rep.poi_estimate == pytest.approx(2.0, rel=0.05)


def test_uniform_vs_optimal_denominator_at_ten_thousand():
    rep = estimate_poi(UNIFORM, nv.metcalfe(), 0.0, 10_000, replicates=100, seed=2)
    assert abs(rep.poi_estimate - rep.poi_vs_diff) / rep.poi_estimate < 0.05


def test_poi_decreases_in_n_bounded():
    values = [estimate_poi(UNIFORM, nv.bounded(0.9), 0.0, n, replicates=2000, seed=3).poi_estimate
              for n in (10, 100, 1000)]
    assert values[0] > values[1] > values[2] >= 1.0


def test_general_bracket_sqrt():
    fn = nv.general_concave(np.sqrt, "sqrt")
    lo, hi, reports = poi_bounds_general(fn, [1000, 10_000], UNIFORM, replicates=100, seed=4)
    assert (lo, hi) == (LOWER_BOUND, UPPER_BOUND)
    for rep in reports:
        assert lo - 0.05 <= rep.poi_estimate <= hi + 0.05
    assert reports[-1].poi_estimate == pytest.approx(sqrt_limit(), rel=0.02)
    assert reports[-1].closed_form is None


def test_general_bracket_rejects_convex():
    fn = nv.general_concave(lambda m: np.asarray(m, float) ** 1.5, "convex")
    with pytest.raises(ValueError):
        poi_bounds_general(fn, [100], UNIFORM)


def test_zero_uniform_profit_is_numeric_failure():
    with pytest.raises(ArithmeticError):
        estimate_poi(UNIFORM, nv.zipf(), 5.0, 10, replicates=10, seed=0)


def test_profit_estimates_share_draws():
    complete, diff, m_c, m_d = profit_estimates(UNIFORM, nv.metcalfe(), 0.0, 50, 300, seed=5)
    assert complete.mean >= diff.mean
    assert m_c.mean == 50.0
    assert 0 < m_d.mean < 50
