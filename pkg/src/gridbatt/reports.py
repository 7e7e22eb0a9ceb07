"""Report files: JSON/CSV data plus a plain-text summary.

Every file body is rendered in memory before anything touches the disk, so
a failure while formatting never leaves a partial set of outputs. Data
files carry no timestamps and use fixed float formatting, so identical
inputs give byte-identical files.
"""

from __future__ import annotations

import json
import os
from dataclasses import dataclass, field
from pathlib import Path

from .loadflow import PowerFlowSolution
from .scenarios import ScenarioResult, SweepResult, improvement_report, reference_values

LABEL = "published reference (inputs unpublished)"


@dataclass
class RunResults:
    config: dict = field(default_factory=dict)
    loadflow: PowerFlowSolution | None = None
    loadflow_extra: dict = field(default_factory=dict)
    scenarios: dict[str, ScenarioResult] = field(default_factory=dict)
    sweep: SweepResult | None = None

    @property
    def empty(self) -> bool:
        return self.loadflow is None and not self.scenarios and self.sweep is None


def _json(obj) -> str:
    return json.dumps(obj, indent=2, sort_keys=True) + "\n"


def _voltages_csv(res: ScenarioResult) -> str:
    lines = ["bus,hour,v_pu"]
    for b, series in sorted(res.voltages.items()):
        lines.extend(f"{b},{h},{v:.6f}" for h, v in enumerate(series))
    return "\n".join(lines) + "\n"


def _schedule_csv(res: ScenarioResult) -> str:
    p = res.schedule.p_bt
    lines = ["sector,hour,p_kw"]
    lines.extend(f"{s + 1},{h},{p[s, h]:.6f}" for s in range(p.shape[0]) for h in range(p.shape[1]))
    return "\n".join(lines) + "\n"


def _pct(x) -> str:
    return "undefined" if x is None else f"{x:.2f}%"


def summary_text(results: RunResults) -> str:
    ref = reference_values()
    out: list[str] = []
    if results.loadflow is not None:
        lf = results.loadflow
        kv = results.loadflow_extra.get("base_kv")
        out.append("Load flow")
        out.append(f"  base voltage           : {kv} kV")
        out.append(f"  converged              : {lf.converged} ({lf.iterations} iterations)")
        out.append(f"  active loss            : {lf.p_loss_kw:.5f} kW")
        out.append(f"  reactive loss          : {lf.q_loss_kvar:.5f} kVAR")
        out.append(f"  minimum voltage        : {lf.v_pu.min():.5f} p.u.")
        if results.loadflow_extra.get("nominal"):
            bc = ref["base_case"]
            dp = (lf.p_loss_kw - bc["p_loss_kw"]) / bc["p_loss_kw"] * 100
            dq = (lf.q_loss_kvar - bc["q_loss_kvar"]) / bc["q_loss_kvar"] * 100
            out.append(
                f"  {LABEL} at {bc['base_kv']} kV: {bc['p_loss_kw']} kW ({dp:+.2f}%), "
                f"{bc['q_loss_kvar']} kVAR ({dq:+.2f}%)"
            )
        n_amp = len(results.loadflow_extra.get("ampacity_violations", []))
        n_band = len(results.loadflow_extra.get("voltage_violations", []))
        out.append(f"  ampacity violations    : {n_amp}")
        out.append(f"  voltage band violations: {n_band}")
        out.append("")

    if results.scenarios:
        t2 = ref["scenarios"]
        out.append("Scenarios (24 h)")
        out.append(f"  {'scenario':<15}{'loss kW':>12}{'avg dev %':>11}{'cost':>12}{'feasible':>10}")
        for name, res in results.scenarios.items():
            bd = res.breakdown
            out.append(
                f"  {name:<15}{bd.p_loss_total_kw:>12.1f}{bd.avg_v_dev_pct:>11.2f}{bd.cost:>12.5f}{str(res.feasible):>10}"
            )
            if name in t2:
                r = t2[name]
                out.append(f"    {LABEL}: loss {r['p_loss_kw']} kW, avg dev {r['avg_v_dev_pct']}%, cost {r['cost']}")
        if "proposed" in results.scenarios:
            base = {n: r.breakdown for n, r in results.scenarios.items() if n != "proposed"}
            if base:
                out.append("  reduction achieved by the optimised schedule:")
                for imp in improvement_report(base, results.scenarios["proposed"].breakdown):
                    line = (
                        f"    vs {imp.baseline:<14} loss {_pct(imp.loss_pct)}, dev {_pct(imp.dev_pct)}, "
                        f"cost {_pct(imp.cost_pct)}"
                    )
                    r = ref["improvement_pct"].get(imp.baseline)
                    if r:
                        line += f"   [{LABEL}: {r['loss']}%, {r['dev']}%, {r['cost']}%]"
                    out.append(line)
        out.append("")

    if results.sweep is not None:
        sw = results.sweep
        t1 = ref["sweep"]
        out.append("Alpha/beta sweep (cost)")
        out.append("  alpha\\beta " + "".join(f"{b:>10.2f}" for b in sw.betas))
        costs = sw.costs
        for i, a in enumerate(sw.alphas):
            out.append(f"  {a:>10.2f} " + "".join(f"{c:>10.5f}" for c in costs[i]))
        am = sw.argmin
        out.append(f"  argmin: alpha={am[0]:.2f}, beta={am[1]:.2f}" if am else "  argmin: none (all cells failed)")
        failed = [c for c in sw.cells if c.failed]
        if failed:
            out.append(f"  failed cells: {len(failed)}")
        out.append(f"  {LABEL} for the same cells:")
        for i, a in enumerate(sw.alphas):
            row = []
            for b in sw.betas:
                try:
                    v = t1["cost"][_index(t1["alphas"], a)][_index(t1["betas"], b)]
                    row.append(f"{v:>10.5f}")
                except ValueError:
                    row.append(f"{'-':>10}")
            out.append(f"  {a:>10.2f} " + "".join(row))
        out.append("")
    return "\n".join(out)


def _index(values, x) -> int:
    for i, v in enumerate(values):
        if abs(v - x) < 1e-9:
            return i
    raise ValueError(x)


def render_reports(results: RunResults) -> dict[str, str]:
    """File name -> contents for everything ``emit_reports`` would write."""
    if results.empty:
        return {}
    files: dict[str, str] = {}
    if results.loadflow is not None:
        body = results.loadflow.to_dict()
        body.update(results.loadflow_extra)
        files["loadflow.json"] = _json(body)
    if results.scenarios:
        single = len(results.scenarios) == 1
        files["scenario.json"] = _json(
            {
                "scenarios": {n: r.to_dict() for n, r in results.scenarios.items()},
                "battery": {n: r.trajectory.to_dict() for n, r in results.scenarios.items() if n == "proposed"},
                "reference": {"label": LABEL, **reference_values()["scenarios"]},
            }
        )
        for name, res in results.scenarios.items():
            files["voltages.csv" if single else f"voltages_{name}.csv"] = _voltages_csv(res)
            if name == "proposed":
                files["schedule.csv"] = _schedule_csv(res)
    if results.sweep is not None:
        files["sweep.csv"] = results.sweep.to_csv()
        files["sweep.json"] = _json(results.sweep.to_dict())
    files["summary.txt"] = summary_text(results)
    files["run_meta.json"] = _json(results.config)
    return files


def emit_reports(results: RunResults, outdir) -> list[str]:
    """Write all report files into ``outdir`` and return their names (sorted)."""
    files = render_reports(results)
    if not files:
        return []
    out = Path(outdir)
    out.mkdir(parents=True, exist_ok=True)
    if not os.access(out, os.W_OK):
        raise PermissionError(f"output directory {out} is not writable")
    for name in sorted(files):
        (out / name).write_text(files[name], encoding="utf-8", newline="\n")
    return sorted(files)
