"""Daily cost of a dispatch schedule: active loss plus voltage deviation.

For every hour the bus injections are composed, the feeder is solved, and
I^2 R loss and |V_rated - V| over the load buses are accumulated. The cost
is ``w1 * loss / loss_ref + w2 * dev / dev_ref`` plus penalty terms. With
both references left at 1 the weights apply to raw kW and p.u. totals.
"""

from __future__ import annotations

from dataclasses import asdict, dataclass

import numpy as np

from .battery import BatteryParams, DispatchSchedule, ScheduleTrajectory, simulate_schedule
from .errors import ConfigurationError
from .loadflow import DEFAULT_MAX_ITER, DEFAULT_TOL, BatchSolution, solve_batch
from .network import RadialNetwork, SectorMap, default_sector_map
from .profiles import HOURS, HourlyProfileSet, MixConfig, compose_injections


@dataclass(frozen=True)
class ObjectiveWeights:
    w1: float = 0.5
    w2: float = 0.5
    penalty_coeff: float = 1.0  # per kWh of battery bound overshoot
    band_coeff: float = 0.0  # per p.u.-bus-hour outside the voltage band
    p_loss_ref: float = 1.0
    v_dev_ref: float = 1.0
    failure_cost: float = 1e6  # per hour whose load flow fails
    band: float = 0.10

    def __post_init__(self):
        if self.w1 < 0 or self.w2 < 0 or (self.w1 == 0 and self.w2 == 0):
            raise ConfigurationError("weights must be non-negative and not both zero")
        if not self.penalty_coeff > 0:
            raise ConfigurationError("penalty_coeff must be positive")
        if self.band_coeff < 0 or self.failure_cost < 0:
            raise ConfigurationError("band_coeff and failure_cost must be non-negative")
        if not (self.p_loss_ref > 0 and self.v_dev_ref > 0):
            raise ConfigurationError("reference values must be positive")
        if not 0 < self.band < 1:
            raise ConfigurationError("band must lie in (0, 1)")

    @classmethod
    def raw(cls, w1: float, w2: float, **kw) -> ObjectiveWeights:
        return cls(w1=w1, w2=w2, **kw)

    @property
    def normalized(self) -> bool:
        return self.p_loss_ref != 1.0 or self.v_dev_ref != 1.0


@dataclass(frozen=True)
class CostBreakdown:
    p_loss_total_kw: float
    q_loss_total_kvar: float
    v_dev_total: float
    avg_v_dev_pct: float
    penalty: float
    band_excess: float
    failed_hours: int
    cost: float
    min_v_pu: float
    max_v_pu: float

    @property
    def feasible(self) -> bool:
        return self.penalty == 0.0 and self.failed_hours == 0 and self.band_excess == 0.0

    def to_dict(self) -> dict:
        d = asdict(self)
        d["feasible"] = self.feasible
        return d


class DayEvaluator:
    """Precomputed 24-hour evaluation for a fixed network, profile set and mix.

    Calling the instance with a flat decision vector (sectors * 24) returns
    the scalar cost; ``breakdown`` returns the full accounting. Instances
    hold no mutable state after construction.
    """

    def __init__(
        self,
        net: RadialNetwork,
        profiles: HourlyProfileSet,
        mix: MixConfig,
        params: BatteryParams,
        weights: ObjectiveWeights,
        sectors: SectorMap | None = None,
        include_ev: bool = True,
        include_solar: bool = True,
        tol: float = DEFAULT_TOL,
        max_iter: int = DEFAULT_MAX_ITER,
    ):
        self.net = net
        self.mix = mix
        self.params = params
        self.weights = weights
        self.sectors = sectors or net.sectors or default_sector_map(net)
        self.tol = tol
        self.max_iter = max_iter
        self.p_base, self.q = compose_injections(
            net, profiles, mix, include_ev=include_ev, include_solar=include_solar
        )
        self.load_rows = np.array([i for i in range(net.n_buses) if i != net.slack_index])

    @property
    def dimension(self) -> int:
        return self.sectors.sector_count * HOURS

    def run(self, schedule: DispatchSchedule) -> tuple[CostBreakdown, BatchSolution, ScheduleTrajectory]:
        traj = simulate_schedule(self.net, self.sectors, self.mix, self.params, schedule)
        p = self.p_base + traj.grid_kw
        batch = solve_batch(self.net, p, self.q, tol=self.tol, max_iter=self.max_iter)
        return self._account(batch, traj), batch, traj

    def breakdown(self, schedule: DispatchSchedule) -> CostBreakdown:
        return self.run(schedule)[0]

    def __call__(self, x) -> float:
        return self.breakdown(DispatchSchedule.from_vector(x, self.sectors.sector_count)).cost

    def _account(self, batch: BatchSolution, traj: ScheduleTrajectory) -> CostBreakdown:
        w = self.weights
        ok = batch.ok
        v = batch.v_pu[self.load_rows][:, ok]
        dev = np.abs(self.net.v_rated_pu - v)
        p_loss = float(batch.p_loss_kw[ok].sum())
        q_loss = float(batch.q_loss_kvar[ok].sum())
        v_dev = float(dev.sum())
        band_excess = float(np.maximum(np.abs(1.0 - v) - w.band, 0.0).sum())
        failed = int((~ok).sum())
        penalty = traj.penalty
        cost = (
            w.w1 * p_loss / w.p_loss_ref
            + w.w2 * v_dev / w.v_dev_ref
            + w.penalty_coeff * penalty
            + w.band_coeff * band_excess
            + w.failure_cost * failed
        )
        n_snap = max(int(ok.sum()), 1)
        return CostBreakdown(
            p_loss_total_kw=p_loss,
            q_loss_total_kvar=q_loss,
            v_dev_total=v_dev,
            avg_v_dev_pct=100.0 * v_dev / (self.net.n_buses * n_snap),
            penalty=penalty,
            band_excess=band_excess,
            failed_hours=failed,
            cost=float(cost),
            min_v_pu=float(v.min()) if v.size else float("nan"),
            max_v_pu=float(v.max()) if v.size else float("nan"),
        )


def evaluate_day(
    net: RadialNetwork,
    profiles: HourlyProfileSet,
    mix: MixConfig,
    params: BatteryParams,
    schedule: DispatchSchedule,
    weights: ObjectiveWeights,
    sectors: SectorMap | None = None,
    include_ev: bool = True,
    include_solar: bool = True,
) -> CostBreakdown:
    ev = DayEvaluator(net, profiles, mix, params, weights, sectors, include_ev, include_solar)
    return ev.breakdown(schedule)


def scenario_baseline(
    net: RadialNetwork,
    profiles: HourlyProfileSet,
    mix: MixConfig,
    weights: ObjectiveWeights,
    include_ev: bool = True,
    include_solar: bool = True,
    params: BatteryParams | None = None,
    sectors: SectorMap | None = None,
) -> CostBreakdown:
    """Zero-schedule evaluation with only the flagged load components."""
    params = params or BatteryParams()
    ev = DayEvaluator(net, profiles, mix, params, weights, sectors, include_ev, include_solar)
    return ev.breakdown(DispatchSchedule.zeros(ev.sectors.sector_count))


def normalized_weights(
    net: RadialNetwork,
    profiles: HourlyProfileSet,
    w1: float = 0.5,
    w2: float = 0.5,
    penalty_coeff: float = 1.0,
    band_coeff: float = 0.0,
    band: float = 0.10,
) -> ObjectiveWeights:
    """Weights whose references are the grid-only day, so that day costs ``w1 + w2``.

    A failed load-flow hour costs ten times the grid-only day.
    """
    mix = MixConfig.for_alpha(net, 0.0)
    base = scenario_baseline(net, profiles, mix, ObjectiveWeights.raw(1.0, 1.0), include_ev=False, include_solar=False)
    if base.failed_hours:
        raise ConfigurationError("grid-only reference day does not solve")
    return ObjectiveWeights(
        w1=w1,
        w2=w2,
        penalty_coeff=penalty_coeff,
        band_coeff=band_coeff,
        p_loss_ref=base.p_loss_total_kw if base.p_loss_total_kw > 0 else 1.0,
        v_dev_ref=base.v_dev_total if base.v_dev_total > 0 else 1.0,
        failure_cost=10.0 * (w1 + w2),
        band=band,
    )
