"""One test per acceptance criterion; each records a PASS/FAIL line for the summary."""

import time
from statistics import median

import numpy as np
import pytest

from gridbatt import (
    BatteryParams,
    BusInjection,
    DayEvaluator,
    DispatchSchedule,
    MixConfig,
    ObjectiveWeights,
    ScenarioSpec,
    SearchSpace,
    SwarmConfig,
    ieee33,
    normalized_weights,
    optimize,
    optimize_schedule,
    run_scenario,
    simulate_schedule,
    solve,
    sweep_alpha_beta,
    synthetic_profiles,
)
from gridbatt.battery import bus_power_caps
from gridbatt.cli import main
from gridbatt.profiles import HOURS
from gridbatt.reports import RunResults, render_reports

from conftest import record, small_net
from oracles import newton_power_flow, two_bus_voltage


def test_criterion_1_base_case_losses():
    net = ieee33(11.0)
    t = time.perf_counter()
    sol = solve(net)
    elapsed = time.perf_counter() - t
    err_p = abs(sol.p_loss_kw - 281.58) / 281.58
    err_q = abs(sol.q_loss_kvar - 187.95) / 187.95
    # canonical-base cross-check against an independent nodal solve
    net12 = ieee33(12.66)
    v_ref = newton_power_flow(net12, net12.p_load_kw, net12.q_load_kvar)
    dv = float(np.max(np.abs(solve(net12).v_pu - np.abs(v_ref))))
    ok = err_p <= 0.02 and err_q <= 0.02 and elapsed < 1.0 and dv < 1e-7
    record(1, ok, f"P={sol.p_loss_kw:.2f} kW ({err_p:.2%}), Q={sol.q_loss_kvar:.2f} kVAR ({err_q:.2%}), "
                  f"{elapsed * 1e3:.1f} ms; 12.66 kV vs nodal oracle max|dV|={dv:.1e}")
    assert ok


def test_criterion_2_closed_form_oracle():
    worst = 0.0
    cases = [(1000, 0, 1.0, 0.0), (800, 600, 2.0, 3.0), (2500, 1200, 0.7, 1.1)]
    for p, q, r, x in cases:
        net = small_net([(1, 0, 0, 0), (2, p, q, 1)], [(1, 2, r, x, 400)])
        zb = net.z_base_ohm
        worst = max(worst, abs(solve(net).v_pu[1] - two_bus_voltage(r / zb, x / zb, p / 1e3, q / 1e3)))
    star = small_net([(1, 0, 0, 0), (2, 500, 200, 1), (3, 1200, 400, 1)],
                     [(1, 2, 1.0, 2.0, 200), (1, 3, 3.0, 1.0, 200)])
    s = solve(star)
    zb = star.z_base_ohm
    worst = max(worst, abs(s.v_pu[1] - two_bus_voltage(1 / zb, 2 / zb, 0.5, 0.2)),
                abs(s.v_pu[2] - two_bus_voltage(3 / zb, 1 / zb, 1.2, 0.4)))
    chain = small_net([(1, 0, 0, 0), (2, 0, 0, 1), (3, 900, 450, 1)],
                      [(1, 2, 1.5, 1.0, 200), (2, 3, 2.5, 3.0, 200)])
    worst = max(worst, abs(solve(chain).v_pu[2] - two_bus_voltage(4 / zb, 4 / zb, 0.9, 0.45)))
    ok = worst <= 1e-8
    record(2, ok, f"2-bus and 3-bus max |V - V_closed_form| = {worst:.1e} p.u. (tol 1e-8)")
    assert ok


def test_criterion_3_power_conservation():
    net = ieee33(11.0)
    rng = np.random.default_rng(2024)
    tol = 1e-6 * net.base_mva * 1000.0
    worst = 0.0
    for _ in range(100):
        p = net.p_load_kw * rng.uniform(-0.5, 1.8, net.n_buses)
        q = net.q_load_kvar * rng.uniform(-0.5, 1.8, net.n_buses)
        p[0] = q[0] = 0.0
        sol = solve(net, BusInjection(dict(zip(net.bus_ids, p)), dict(zip(net.bus_ids, q))))
        assert sol.converged
        worst = max(worst, abs(sol.p_slack_kw - p.sum() - sol.p_loss_kw),
                    abs(sol.q_slack_kvar - q.sum() - sol.q_loss_kvar))
    ok = worst <= tol
    record(3, ok, f"100 random injections, max balance error {worst:.1e} kW (tol {tol:.0e})")
    assert ok


def _crossed(e0, e_max, cap, cmds):
    """Reference check: does the clipped trajectory hit a power or energy bound?"""
    e = e0
    for p in cmds:
        if abs(p) > cap:
            return True
        if e + p > e_max or e + p < 0:
            return True
        e += p
    return False


def test_criterion_4_battery_bookkeeping():
    net = ieee33(11.0)
    rng = np.random.default_rng(7)
    free_runs = telescoping_fail = soc_fail = iff_fail = 0
    for k in range(1000):
        # dyadic values keep the arithmetic exact, so the identity is checked with ==
        beta = float(rng.choice([0.125, 0.25, 0.5]))
        alpha = float(rng.choice([0.0, 0.5, 0.75]))
        params = BatteryParams(beta=beta, soc_init_pct=float(rng.choice([0, 25, 50, 100])))
        mix = MixConfig.for_alpha(net, alpha)
        amp = float(rng.choice([0.5, 2.0, 8.0]))
        p = np.round(rng.uniform(-amp, amp, (7, HOURS)) * 4) / 4
        traj = simulate_schedule(net, net.sectors, mix, params, DispatchSchedule(p))
        if np.any(traj.soc_pct < 0) or np.any(traj.soc_pct > 100):
            soc_fail += 1
        caps = bus_power_caps(net, mix, params)
        sec = net.sectors.index_vector(net)
        crossed = False
        for i in range(1, net.n_buses):
            cmds = p[sec[i] - 1]
            if _crossed(traj.energy_kwh[i, 0], traj.e_max_kwh[i], caps[i], cmds):
                crossed = True
            if traj.penalty == 0.0:
                if traj.energy_kwh[i, -1] - traj.energy_kwh[i, 0] != 1.0 * cmds.sum():
                    telescoping_fail += 1
        if (traj.penalty > 0) != crossed:
            iff_fail += 1
        free_runs += traj.penalty == 0.0
    ok = telescoping_fail == 0 and soc_fail == 0 and iff_fail == 0 and 0 < free_runs < 1000
    record(4, ok, f"1000 schedules ({free_runs} penalty-free): telescoping failures {telescoping_fail}, "
                  f"SOC range failures {soc_fail}, penalty/bound mismatches {iff_fail}")
    assert ok


def test_criterion_5_pso_sanity():
    sphere = lambda x: float(np.sum(np.asarray(x) ** 2))  # noqa: E731
    space = SearchSpace.box(-5.12, 5.12, 10)
    res = optimize(sphere, space, SwarmConfig())
    again = optimize(sphere, space, SwarmConfig())
    identical = (res.best_cost == again.best_cost and res.history == again.history
                 and np.array_equal(res.best_position, again.best_position))
    monotone = True
    for seed in range(10):
        h = optimize(sphere, space, SwarmConfig(particles=10, iterations=60, seed=seed)).history
        monotone &= all(b <= a for a, b in zip(h, h[1:]))
    monotone &= all(b <= a for a, b in zip(res.history, res.history[1:]))
    ok = res.best_cost < 1e-6 and identical and monotone
    record(5, ok, f"sphere D=10 best {res.best_cost:.1e}; bit-identical rerun {identical}; "
                  f"non-increasing history {monotone}")
    assert ok


def test_criterion_6_small_instance_optimality():
    net = small_net(
        [(1, 0, 0, 0), (2, 400, 150, 20), (3, 300, 120, 20)],
        [(1, 2, 1.2, 0.8, 200), (2, 3, 1.6, 1.1, 200)],
        sectors={2: 1, 3: 1},
    )
    prof = synthetic_profiles(net)
    mix = MixConfig.for_alpha(net, 0.5)
    params = BatteryParams(beta=0.3)
    weights = ObjectiveWeights.raw(1.0, 1.0)
    hours = (18, 19)
    cap = 0.3 * 10 * 5.0

    t = time.perf_counter()
    _, bd, _ = optimize_schedule(net, prof, mix, params, weights, SwarmConfig(particles=20, iterations=50),
                                 hours=hours)
    elapsed = time.perf_counter() - t

    ev = DayEvaluator(net, prof, mix, params, weights)
    grid = np.linspace(-cap, cap, 11)
    best_grid = np.inf
    for a in grid:
        for b in grid:
            p = np.zeros((1, HOURS))
            p[0, hours[0]], p[0, hours[1]] = a, b
            best_grid = min(best_grid, ev.breakdown(DispatchSchedule(p)).cost)
    gap = (bd.cost - best_grid) / best_grid
    ok = gap <= 0.02 and elapsed < 10.0
    record(6, ok, f"PSO {bd.cost:.6f} vs 121-point grid {best_grid:.6f} (gap {gap:+.3%}), {elapsed:.2f} s")
    assert ok


def test_criterion_7_never_do_harm():
    net = ieee33(11.0)
    prof = synthetic_profiles(net)
    w = normalized_weights(net, prof)
    alphas, betas = (0.0, 0.5, 0.7), (0.0, 0.15, 0.3)
    swarm = SwarmConfig(particles=20, iterations=50)
    t = time.perf_counter()
    zero = {a: run_scenario(ScenarioSpec("grid_ev_nbbsr", a, 0.0), net, prof, BatteryParams(), w).breakdown.cost
            for a in alphas}
    sweeps = [sweep_alpha_beta(alphas, betas, net, prof, BatteryParams(), w, swarm, base_seed=s) for s in range(3)]
    elapsed = time.perf_counter() - t
    harm = [(c.alpha, c.beta) for sw in sweeps for c in sw.cells if c.failed or c.breakdown.cost > zero[c.alpha]]
    trend = []
    for a in alphas:
        m0 = median(sw.cell(a, 0.0).breakdown.cost for sw in sweeps)
        m3 = median(sw.cell(a, 0.3).breakdown.cost for sw in sweeps)
        trend.append(m3 <= m0)
    ok = not harm and all(trend) and elapsed < 600
    record(7, ok, f"27 runs: cells worse than zero schedule {harm or 'none'}; "
                  f"median(beta=0.3) <= median(beta=0) for each alpha {trend}; {elapsed:.0f} s")
    assert ok


def test_criterion_8_voltage_band_when_feasible():
    runs = []
    for kv, band_coeff, alpha in [(11.0, 0.0, 0.7), (12.66, 100.0, 0.7), (12.66, 100.0, 0.5), (12.66, 0.0, 0.7)]:
        net = ieee33(kv)
        prof = synthetic_profiles(net)
        w = normalized_weights(net, prof, band_coeff=band_coeff)
        res = run_scenario(ScenarioSpec("proposed", alpha, 0.3, SwarmConfig(particles=20, iterations=50)),
                           net, prof, BatteryParams(), w)
        summary = render_reports(RunResults(scenarios={"proposed": res}))["summary.txt"]
        claims = res.feasible
        assert ("True" in summary.splitlines()[2]) == claims
        v = np.delete(res.v_pu, net.slack_index, axis=0)
        assert v.shape == (32, 24)
        runs.append((kv, alpha, claims, float(np.max(np.abs(v - 1.0)))))
    bad = [r for r in runs if r[2] and r[3] > 0.10]
    n_claim = sum(r[2] for r in runs)
    ok = not bad and n_claim > 0
    detail = "; ".join(f"{kv} kV a={a}: feasible={c}, max|V-1|={d:.4f}" for kv, a, c, d in runs)
    record(8, ok, f"{n_claim} runs claim feasibility, violations among them: {len(bad)} ({detail})")
    assert ok


def test_criterion_9_references_are_labelled_not_asserted():
    net = ieee33(11.0)
    prof = synthetic_profiles(net)
    w = normalized_weights(net, prof)
    fast = SwarmConfig(particles=4, iterations=2)
    runs = {n: run_scenario(ScenarioSpec(n, swarm=fast), net, prof, BatteryParams(), w)
            for n in ("grid_only", "grid_ev", "grid_ev_nbbsr", "proposed")}
    sweep = sweep_alpha_beta([0.7], [0.3], net, prof, BatteryParams(), w, fast)
    text = render_reports(RunResults(scenarios=runs, sweep=sweep))["summary.txt"]
    needed = ["published reference (inputs unpublished)", "6758.1", "7541.6", "5314.7", "3527.4", "16.55407"]
    missing = [s for s in needed if s not in text]
    ok = not missing
    record(9, ok, f"summary prints labelled table values beside computed ones; missing {missing or 'none'} "
                  f"(values not asserted by design)")
    assert ok


@pytest.mark.parametrize(
    "argv",
    [
        ["loadflow", "--hour-load", "nominal"],
        ["loadflow", "--hour-load", "19", "--base-kv", "12.66"],
        ["scenario", "--name", "grid_ev"],
        ["optimize", "--particles", "6", "--iterations", "5", "--seed", "3"],
        ["sweep", "--alphas", "0.5,0.7", "--betas", "0,0.3", "--particles", "4", "--iterations", "3"],
    ],
    ids=["loadflow", "loadflow-hour", "scenario", "optimize", "sweep"],
)
def test_criterion_10_reproducibility(tmp_path, argv, capsys):
    outs = []
    for run in ("a", "b"):
        out = tmp_path / run
        assert main(argv + ["--out", str(out)]) == 0
        outs.append({p.name: p.read_bytes() for p in sorted(out.iterdir())})
    capsys.readouterr()
    ok = outs[0] == outs[1] and len(outs[0]) > 0
    record(10, ok, f"`{argv[0]}` rerun gives byte-identical files {sorted(outs[0])}")
    assert ok
