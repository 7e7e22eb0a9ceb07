"""Scenario comparison, alpha/beta sweeps and improvement percentages."""

from __future__ import annotations

import json
import math
from dataclasses import dataclass, field, replace
from functools import partial
from importlib import resources
from typing import Callable, Sequence

import numpy as np

from .battery import BatteryParams, DispatchSchedule, ScheduleTrajectory
from .errors import ConfigurationError
from .network import RadialNetwork, SectorMap
from .objective import CostBreakdown, DayEvaluator, ObjectiveWeights
from .profiles import HourlyProfileSet, MixConfig
from .swarm import SwarmConfig, SwarmResult, optimize_schedule

SCENARIOS = ("grid_only", "grid_ev", "grid_ev_nbbsr", "proposed")
LOAD_FLAGS = {
    "grid_only": (False, False),
    "grid_ev": (True, False),
    "grid_ev_nbbsr": (True, True),
    "proposed": (True, True),
}
DEFAULT_ALPHAS = tuple(round(0.1 * i, 2) for i in range(11))
DEFAULT_BETAS = tuple(round(0.05 * i, 2) for i in range(7))
END_BUSES = (18, 33)


@dataclass(frozen=True)
class ScenarioSpec:
    name: str
    alpha: float = 0.7
    beta: float = 0.3
    swarm: SwarmConfig = field(default_factory=SwarmConfig)

    def __post_init__(self):
        if self.name not in SCENARIOS:
            raise ConfigurationError(f"unknown scenario {self.name!r}; expected one of {SCENARIOS}")
        if not (0.0 <= self.alpha <= 1.0 and 0.0 <= self.beta <= 1.0):
            raise ConfigurationError("alpha and beta must lie in [0, 1]")


@dataclass(frozen=True, eq=False)
class ScenarioResult:
    spec: ScenarioSpec
    breakdown: CostBreakdown
    voltages: dict[int, np.ndarray]
    schedule: DispatchSchedule
    trajectory: ScheduleTrajectory
    v_pu: np.ndarray  # (buses, 24) for every bus
    bus_ids: tuple[int, ...]
    swarm: SwarmResult | None = None

    @property
    def feasible(self) -> bool:
        return self.breakdown.feasible

    def to_dict(self) -> dict:
        d = {
            "scenario": self.spec.name,
            "alpha": self.spec.alpha,
            "beta": self.spec.beta,
            "breakdown": self.breakdown.to_dict(),
            "feasible": self.feasible,
            "voltages": {str(b): [float(v) for v in vs] for b, vs in self.voltages.items()},
            "schedule_kw": [[float(x) for x in row] for row in self.schedule.p_bt],
            "battery_penalty_kwh": self.trajectory.penalty,
        }
        if self.swarm is not None:
            d["swarm"] = self.swarm.to_dict()
        return d


def run_scenario(
    spec: ScenarioSpec,
    net: RadialNetwork,
    profiles: HourlyProfileSet,
    params: BatteryParams,
    weights: ObjectiveWeights,
    sectors: SectorMap | None = None,
    buses: Sequence[int] = END_BUSES,
    map_fn: Callable = map,
    progress=None,
) -> ScenarioResult:
    """Evaluate one scenario; baselines use the zero schedule, ``proposed`` runs the swarm."""
    include_ev, include_solar = LOAD_FLAGS[spec.name]
    mix = MixConfig.for_alpha(net, spec.alpha)
    params = replace(params, beta=spec.beta)
    evaluator = DayEvaluator(net, profiles, mix, params, weights, sectors, include_ev, include_solar)
    swarm = None
    if spec.name == "proposed":
        schedule, _, swarm = optimize_schedule(
            net, profiles, mix, params, weights, spec.swarm, evaluator.sectors,
            map_fn=map_fn, progress=progress,
        )
    else:
        schedule = DispatchSchedule.zeros(evaluator.sectors.sector_count)
    breakdown, batch, traj = evaluator.run(schedule)
    missing = [b for b in buses if b not in net.index]
    if missing:
        raise ConfigurationError(f"buses {missing} are not in the network")
    v_pu = batch.v_pu
    voltages = {int(b): v_pu[net.index[b]].copy() for b in buses}
    return ScenarioResult(spec, breakdown, voltages, schedule, traj, v_pu, net.bus_ids, swarm)


def run_all_scenarios(
    net, profiles, params, weights, alpha=0.7, beta=0.3, swarm=SwarmConfig(), **kw
) -> dict[str, ScenarioResult]:
    return {
        name: run_scenario(ScenarioSpec(name, alpha, beta, swarm), net, profiles, params, weights, **kw)
        for name in SCENARIOS
    }


# -- sweep --------------------------------------------------------------------


def cell_seed(base_seed: int, alpha: float, beta: float) -> int:
    """Seed for one sweep cell, derived from the base seed and the cell coordinates."""
    ss = np.random.SeedSequence([int(base_seed), int(round(alpha * 1e6)), int(round(beta * 1e6))])
    return int(ss.generate_state(1)[0])


@dataclass(frozen=True, eq=False)
class SweepCell:
    alpha: float
    beta: float
    seed: int
    breakdown: CostBreakdown | None
    error: str | None = None

    @property
    def failed(self) -> bool:
        return self.breakdown is None


@dataclass(frozen=True, eq=False)
class SweepResult:
    alphas: tuple[float, ...]
    betas: tuple[float, ...]
    cells: tuple[SweepCell, ...]  # alpha-major order

    @property
    def costs(self) -> np.ndarray:
        c = np.array([np.nan if cell.failed else cell.breakdown.cost for cell in self.cells])
        return c.reshape(len(self.alphas), len(self.betas))

    def cell(self, alpha: float, beta: float) -> SweepCell:
        i = self.alphas.index(alpha)
        j = self.betas.index(beta)
        return self.cells[i * len(self.betas) + j]

    @property
    def argmin(self) -> tuple[float, float] | None:
        c = self.costs
        if np.all(np.isnan(c)):
            return None
        i, j = np.unravel_index(np.nanargmin(c), c.shape)
        return self.alphas[i], self.betas[j]

    def to_csv(self) -> str:
        lines = ["alpha," + ",".join(f"{b:.5f}" for b in self.betas)]
        c = self.costs
        for i, a in enumerate(self.alphas):
            vals = ["failed" if math.isnan(x) else f"{x:.5f}" for x in c[i]]
            lines.append(f"{a:.5f}," + ",".join(vals))
        return "\n".join(lines) + "\n"

    def to_dict(self) -> dict:
        return {
            "alphas": list(self.alphas),
            "betas": list(self.betas),
            "argmin": list(self.argmin) if self.argmin else None,
            "cells": [
                {
                    "alpha": c.alpha,
                    "beta": c.beta,
                    "seed": c.seed,
                    "breakdown": None if c.failed else c.breakdown.to_dict(),
                    "error": c.error,
                }
                for c in self.cells
            ],
        }


def _run_cell(coords, net, profiles, params, weights, swarm, sectors, base_seed) -> SweepCell:
    alpha, beta = coords
    seed = cell_seed(base_seed, alpha, beta)
    try:
        spec = ScenarioSpec("proposed", alpha, beta, replace(swarm, seed=seed))
        res = run_scenario(spec, net, profiles, params, weights, sectors, buses=())
        return SweepCell(alpha, beta, seed, res.breakdown)
    except Exception as exc:  # a failed cell must not abort the sweep
        return SweepCell(alpha, beta, seed, None, f"{type(exc).__name__}: {exc}")


def sweep_alpha_beta(
    alphas: Sequence[float],
    betas: Sequence[float],
    net: RadialNetwork,
    profiles: HourlyProfileSet,
    params: BatteryParams,
    weights: ObjectiveWeights,
    swarm: SwarmConfig = SwarmConfig(),
    sectors: SectorMap | None = None,
    base_seed: int = 0,
    map_fn: Callable = map,
) -> SweepResult:
    """Run the optimised scenario on every (alpha, beta) cell.

    Cells are independent; ``map_fn`` may run them concurrently. Results
    are always ordered alpha-major.
    """
    alphas = tuple(float(a) for a in alphas)
    betas = tuple(float(b) for b in betas)
    if not alphas or not betas:
        raise ConfigurationError("alphas and betas must be non-empty")
    for v in alphas + betas:
        if not 0.0 <= v <= 1.0:
            raise ConfigurationError(f"sweep value {v} outside [0, 1]")
    coords = [(a, b) for a in alphas for b in betas]
    work = partial(
        _run_cell, net=net, profiles=profiles, params=params, weights=weights,
        swarm=swarm, sectors=sectors, base_seed=base_seed,
    )
    cells = tuple(map_fn(work, coords))
    return SweepResult(alphas, betas, cells)


# -- improvements ---------------------------------------------------------------


@dataclass(frozen=True)
class Improvement:
    baseline: str
    loss_pct: float | None
    dev_pct: float | None
    cost_pct: float | None

    @property
    def undefined(self) -> list[str]:
        return [k for k in ("loss_pct", "dev_pct", "cost_pct") if getattr(self, k) is None]


def _reduction(base: float, new: float) -> float | None:
    if base == 0:
        return None
    return (base - new) / base * 100.0


def improvement_report(baselines: dict[str, CostBreakdown], proposed: CostBreakdown) -> list[Improvement]:
    """Percentage reduction of loss, average deviation and cost against each baseline.

    A zero baseline value yields ``None`` for that metric.
    """
    return [
        Improvement(
            name,
            _reduction(b.p_loss_total_kw, proposed.p_loss_total_kw),
            _reduction(b.avg_v_dev_pct, proposed.avg_v_dev_pct),
            _reduction(b.cost, proposed.cost),
        )
        for name, b in baselines.items()
    ]


def reference_values() -> dict:
    """Published loss, deviation and cost reference values shipped with the package."""
    text = (resources.files("gridbatt") / "data" / "reference_values.json").read_text(encoding="utf-8")
    return json.loads(text)
