import json

import pytest

from gridbatt import BatteryParams, ScenarioSpec, SwarmConfig, normalized_weights, run_scenario, solve, sweep_alpha_beta, synthetic_profiles
from gridbatt.reports import RunResults, emit_reports, render_reports

FAST = SwarmConfig(particles=6, iterations=5)


@pytest.fixture(scope="module")
def ctx():
    from gridbatt import ieee33

    net = ieee33()
    prof = synthetic_profiles(net)
    return net, prof, normalized_weights(net, prof)


def test_empty_results_write_nothing(tmp_path):
    out = tmp_path / "out"
    assert emit_reports(RunResults(), out) == []
    assert not out.exists()


def test_scenario_manifest(tmp_path, ctx):
    net, prof, w = ctx
    res = run_scenario(ScenarioSpec("proposed", swarm=FAST), net, prof, BatteryParams(), w)
    names = emit_reports(RunResults(config={"x": 1}, scenarios={"proposed": res}), tmp_path)
    assert {"summary.txt", "scenario.json", "voltages.csv", "run_meta.json", "schedule.csv"} <= set(names)
    rows = (tmp_path / "voltages.csv").read_text().splitlines()
    assert rows[0] == "bus,hour,v_pu"
    assert len(rows) == 1 + 2 * 24
    body = json.loads((tmp_path / "scenario.json").read_text())
    assert body["scenarios"]["proposed"]["alpha"] == 0.7
    assert "published reference (inputs unpublished)" in (tmp_path / "summary.txt").read_text()


def test_several_scenarios_get_separate_voltage_files(ctx):
    net, prof, w = ctx
    runs = {n: run_scenario(ScenarioSpec(n), net, prof, BatteryParams(), w) for n in ("grid_only", "grid_ev")}
    files = render_reports(RunResults(scenarios=runs))
    assert "voltages_grid_only.csv" in files and "voltages_grid_ev.csv" in files
    assert "voltages.csv" not in files


def test_sweep_table_shape(ctx):
    net, prof, w = ctx
    alphas = [round(0.1 * i, 1) for i in range(11)]
    betas = [0.0, 0.3]
    sw = sweep_alpha_beta(alphas, betas, net, prof, BatteryParams(), w, SwarmConfig(particles=2, iterations=0))
    text = render_reports(RunResults(sweep=sw))
    rows = text["sweep.csv"].splitlines()
    assert len(rows) == 12
    assert all(len(r.split(",")) == 3 for r in rows)
    assert "16.55407" in text["summary.txt"]


def test_loadflow_summary_compares_reference(ctx):
    net = ctx[0]
    files = render_reports(RunResults(loadflow=solve(net), loadflow_extra={"base_kv": 11.0, "nominal": True}))
    assert "281.58 kW" in files["summary.txt"]
    assert json.loads(files["loadflow.json"])["p_loss_kw"] == pytest.approx(283.2, abs=0.1)


def test_byte_identical_reruns(tmp_path, ctx):
    net, prof, w = ctx

    def run(out):
        res = run_scenario(ScenarioSpec("proposed", swarm=FAST), net, prof, BatteryParams(), w)
        emit_reports(RunResults(config={"seed": 0}, scenarios={"proposed": res}), out)
        return {p.name: p.read_bytes() for p in out.iterdir()}

    assert run(tmp_path / "a") == run(tmp_path / "b")


def test_unwritable_directory(tmp_path, ctx):
    blocker = tmp_path / "file"
    blocker.write_text("")
    with pytest.raises(OSError):
        emit_reports(RunResults(loadflow=solve(ctx[0])), blocker / "sub")
