import numpy as np
import pytest

from gridbatt import BatteryParams, DayEvaluator, DispatchSchedule, MixConfig, ObjectiveWeights, evaluate_day, normalized_weights, scenario_baseline, solve, synthetic_profiles
from gridbatt.errors import ConfigurationError
from gridbatt.profiles import HOURS


@pytest.fixture(scope="module")
def setup():
    from gridbatt import ieee33

    net = ieee33()
    prof = synthetic_profiles(net)
    return net, prof, MixConfig.for_alpha(net, 0.7)


def test_loss_only_weights_give_daily_loss(setup):
    net, prof, _ = setup
    grid_only = MixConfig.for_alpha(net, 0.0)
    bd = scenario_baseline(net, prof, grid_only, ObjectiveWeights.raw(1.0, 0.0), include_ev=False, include_solar=False)
    # flat residential profile: every hour is the nominal snapshot
    assert bd.cost == pytest.approx(24 * solve(net).p_loss_kw, rel=1e-9)
    assert bd.p_loss_total_kw == pytest.approx(bd.cost)
    assert bd.failed_hours == 0


def test_deviation_only_weights(setup):
    net, prof, _ = setup
    bd = scenario_baseline(net, prof, MixConfig.for_alpha(net, 0.0), ObjectiveWeights.raw(0.0, 1.0), False, False)
    sol = solve(net)
    assert bd.cost == pytest.approx(24 * np.abs(1.0 - sol.v_pu[1:]).sum(), rel=1e-9)
    assert bd.avg_v_dev_pct == pytest.approx(100 * bd.v_dev_total / (33 * 24))


def test_normalized_grid_only_costs_weight_sum(setup):
    net, prof, _ = setup
    w = normalized_weights(net, prof, 0.3, 0.7)
    bd = scenario_baseline(net, prof, MixConfig.for_alpha(net, 0.0), w, False, False)
    assert bd.cost == pytest.approx(1.0, rel=1e-12)
    assert w.failure_cost == pytest.approx(10.0)
    assert w.normalized


def test_penalty_added_for_infeasible_schedule(setup):
    net, prof, mix = setup
    w = ObjectiveWeights.raw(1.0, 1.0, penalty_coeff=2.0)
    ev = DayEvaluator(net, prof, mix, BatteryParams(), w)
    zero = ev.breakdown(DispatchSchedule.zeros(7))
    p = np.zeros((7, HOURS))
    p[0, :] = 1000.0  # far beyond the 42 kW cap
    bad = ev.breakdown(DispatchSchedule(p))
    assert bad.penalty > 0 and not bad.feasible
    assert zero.penalty == 0
    # cost counts the penalty on top of loss and deviation
    assert bad.cost == pytest.approx(bad.p_loss_total_kw + bad.v_dev_total + 2.0 * bad.penalty)


def test_call_matches_breakdown(setup):
    net, prof, mix = setup
    ev = DayEvaluator(net, prof, mix, BatteryParams(), ObjectiveWeights())
    x = np.random.default_rng(1).uniform(-5, 5, ev.dimension)
    assert ev(x) == ev.breakdown(DispatchSchedule.from_vector(x, 7)).cost
    assert ev.dimension == 168


def test_evaluate_day_pure(setup):
    net, prof, mix = setup
    s = DispatchSchedule(np.full((7, HOURS), 1.0))
    a = evaluate_day(net, prof, mix, BatteryParams(), s, ObjectiveWeights())
    b = evaluate_day(net, prof, mix, BatteryParams(), s, ObjectiveWeights())
    assert a == b


def test_failed_hours_cost(setup):
    net, prof, mix = setup
    huge = prof.scaled(res=30.0)
    w = ObjectiveWeights.raw(1.0, 1.0, failure_cost=1000.0)
    bd = scenario_baseline(net, huge, mix, w, include_ev=False, include_solar=False)
    assert bd.failed_hours == 24
    assert bd.cost == pytest.approx(24 * 1000.0)
    assert not bd.feasible


def test_band_coefficient(setup):
    net, prof, mix = setup
    w = ObjectiveWeights.raw(1.0, 1.0, band_coeff=5.0)
    bd = scenario_baseline(net, prof, MixConfig.for_alpha(net, 0.0), w, False, False)
    # 11 kV nominal loading dips below 0.9 p.u.
    assert bd.band_excess > 0
    assert bd.cost == pytest.approx(bd.p_loss_total_kw + bd.v_dev_total + 5.0 * bd.band_excess)


def test_weight_validation():
    with pytest.raises(ConfigurationError):
        ObjectiveWeights(0.0, 0.0)
    with pytest.raises(ConfigurationError):
        ObjectiveWeights(penalty_coeff=0.0)
    with pytest.raises(ConfigurationError):
        ObjectiveWeights(band=0.0)
