"""Utility-dispatchable share of residential battery storage.

Each bus pools the permitted fraction ``beta`` of its battery homes'
capacity. The optimiser issues one kW command per sector and hour; every
bus in the sector follows it. Commands that would push stored energy out of
[0, e_max] are clipped and the overshoot is returned as a penalty so an
optimiser can keep exploring infeasible schedules.
"""

from __future__ import annotations

import csv
from dataclasses import dataclass

import numpy as np

from .errors import BoundsViolation, ConfigurationError, SchemaError
from .network import RadialNetwork, SectorMap
from .profiles import DT_H, HOURS, MixConfig

N_USER_MODES = ("bbsr", "all")


@dataclass(frozen=True)
class BatteryParams:
    beta: float = 0.3
    e_bt_user_kwh: float = 10.0
    p_max_kw_per_home: float = 5.0
    soc_init_pct: float = 50.0
    # "bbsr": only battery homes contribute capacity; "all": every home at the bus
    n_user_mode: str = "bbsr"
    charge_efficiency: float = 1.0
    discharge_efficiency: float = 1.0

    def __post_init__(self):
        if not 0.0 <= self.beta <= 1.0:
            raise ConfigurationError(f"beta must lie in [0, 1], got {self.beta}")
        if self.e_bt_user_kwh < 0:
            raise ConfigurationError("e_bt_user_kwh must be non-negative")
        if not self.p_max_kw_per_home > 0:
            raise ConfigurationError("p_max_kw_per_home must be positive")
        if not 0.0 <= self.soc_init_pct <= 100.0:
            raise ConfigurationError("soc_init_pct must lie in [0, 100]")
        if self.n_user_mode not in N_USER_MODES:
            raise ConfigurationError(f"n_user_mode must be one of {N_USER_MODES}")
        for eff in (self.charge_efficiency, self.discharge_efficiency):
            if not 0.0 < eff <= 1.0:
                raise ConfigurationError("efficiencies must lie in (0, 1]")


def capacity(params: BatteryParams, n_users: int) -> float:
    """Dispatchable energy (kWh) pooled at one bus."""
    if n_users < 0:
        raise ConfigurationError("n_users must be non-negative")
    return params.beta * n_users * params.e_bt_user_kwh


def n_users(params: BatteryParams, mix: MixConfig, net: RadialNetwork) -> np.ndarray:
    """Homes per bus whose batteries count towards the pooled capacity."""
    if params.n_user_mode == "all":
        return net.n_residences.copy()
    return np.asarray(mix.n_bbsr, dtype=int).copy()


@dataclass(frozen=True)
class BusBatteryState:
    e_max_kwh: float
    e_kwh: float

    def __post_init__(self):
        if self.e_max_kwh < 0:
            raise ConfigurationError("e_max_kwh must be non-negative")
        if not -1e-9 <= self.e_kwh <= self.e_max_kwh + 1e-9:
            raise ConfigurationError(f"stored energy {self.e_kwh} outside [0, {self.e_max_kwh}]")

    @classmethod
    def initial(cls, e_max_kwh: float, soc_init_pct: float) -> BusBatteryState:
        return cls(e_max_kwh, e_max_kwh * soc_init_pct / 100.0)

    @property
    def soc_pct(self) -> float:
        return soc(self)


def soc(state: BusBatteryState) -> float:
    if state.e_max_kwh == 0:
        return 0.0
    return 100.0 * state.e_kwh / state.e_max_kwh


def _stored_delta(p_kw, dt_h, charge_eff, discharge_eff):
    return np.where(p_kw > 0, p_kw * charge_eff, p_kw / discharge_eff) * dt_h


def step_energy(
    state: BusBatteryState,
    p_bt_kw: float,
    dt_h: float = DT_H,
    charge_efficiency: float = 1.0,
    discharge_efficiency: float = 1.0,
) -> BusBatteryState:
    """Advance stored energy by one interval; positive power charges.

    Raises BoundsViolation (carrying the clipped state and the overshoot in
    kWh) when the update would leave [0, e_max].
    """
    if not dt_h > 0:
        raise ConfigurationError("dt_h must be positive")
    e = state.e_kwh + float(_stored_delta(p_bt_kw, dt_h, charge_efficiency, discharge_efficiency))
    if e > state.e_max_kwh:
        raise BoundsViolation(BusBatteryState(state.e_max_kwh, state.e_max_kwh), e - state.e_max_kwh)
    if e < 0:
        raise BoundsViolation(BusBatteryState(state.e_max_kwh, 0.0), -e)
    return BusBatteryState(state.e_max_kwh, e)


@dataclass(frozen=True, eq=False)
class DispatchSchedule:
    """Per-bus battery command (kW, positive = charge) for each sector and hour."""

    p_bt: np.ndarray

    def __post_init__(self):
        arr = np.asarray(self.p_bt, dtype=float)
        if arr.ndim != 2 or arr.shape[1] != HOURS:
            raise ConfigurationError(f"schedule must have shape (sectors, {HOURS}), got {arr.shape}")
        if not np.all(np.isfinite(arr)):
            raise ConfigurationError("schedule holds non-finite values")
        object.__setattr__(self, "p_bt", arr)

    @property
    def sectors(self) -> int:
        return self.p_bt.shape[0]

    @classmethod
    def zeros(cls, sectors: int) -> DispatchSchedule:
        return cls(np.zeros((sectors, HOURS)))

    @classmethod
    def from_vector(cls, x, sectors: int) -> DispatchSchedule:
        return cls(np.asarray(x, dtype=float).reshape(sectors, HOURS))

    def to_vector(self) -> np.ndarray:
        return self.p_bt.ravel().copy()

    def to_csv(self, path) -> None:
        with open(path, "w", newline="", encoding="utf-8") as fh:
            fh.write("sector,hour,p_kw\n")
            for s in range(self.sectors):
                for h in range(HOURS):
                    fh.write(f"{s + 1},{h},{self.p_bt[s, h]:.6f}\n")

    @classmethod
    def from_csv(cls, path) -> DispatchSchedule:
        with open(path, newline="", encoding="utf-8") as fh:
            rows = list(csv.DictReader(fh))
        if not rows or not {"sector", "hour", "p_kw"} <= set(rows[0]):
            raise SchemaError("schedule CSV needs columns sector,hour,p_kw")
        cells = {(int(r["sector"]), int(r["hour"])): float(r["p_kw"]) for r in rows}
        n = max(s for s, _ in cells)
        gaps = [(s, h) for s in range(1, n + 1) for h in range(HOURS) if (s, h) not in cells]
        if gaps:
            raise SchemaError(f"schedule CSV missing (sector, hour) cells {gaps}")
        return cls(np.array([[cells[(s, h)] for h in range(HOURS)] for s in range(1, n + 1)]))


def bus_power_caps(net: RadialNetwork, mix: MixConfig, params: BatteryParams) -> np.ndarray:
    """Charge/discharge limit per bus (kW): the permitted share of the homes' inverter rating."""
    caps = params.beta * n_users(params, mix, net) * params.p_max_kw_per_home
    caps = caps.astype(float)
    caps[net.slack_index] = 0.0
    return caps


def sector_power_caps(
    net: RadialNetwork, sectors: SectorMap, mix: MixConfig, params: BatteryParams
) -> np.ndarray:
    """Largest per-bus command every bus of a sector can follow."""
    caps = bus_power_caps(net, mix, params)
    sec = sectors.index_vector(net)
    return np.array([caps[sec == s].min() for s in range(1, sectors.sector_count + 1)])


@dataclass(frozen=True, eq=False)
class ScheduleTrajectory:
    """Per-bus results of following a schedule; energy/soc hold 25 points (hour 0..24)."""

    bus_ids: tuple[int, ...]
    e_max_kwh: np.ndarray
    energy_kwh: np.ndarray
    soc_pct: np.ndarray
    grid_kw: np.ndarray
    overshoot_kwh: np.ndarray

    @property
    def penalty(self) -> float:
        return float(self.overshoot_kwh.sum())

    @property
    def feasible(self) -> bool:
        return self.penalty == 0.0

    def to_dict(self) -> dict:
        return {
            "penalty_kwh": self.penalty,
            "buses": [
                {
                    "bus": int(b),
                    "e_max_kwh": float(self.e_max_kwh[i]),
                    "energy_kwh": [float(x) for x in self.energy_kwh[i]],
                    "soc_pct": [float(x) for x in self.soc_pct[i]],
                }
                for i, b in enumerate(self.bus_ids)
            ],
        }


def simulate_schedule(
    net: RadialNetwork,
    sectors: SectorMap,
    mix: MixConfig,
    params: BatteryParams,
    schedule: DispatchSchedule,
    dt_h: float = DT_H,
) -> ScheduleTrajectory:
    """Apply sector commands to every bus and track stored energy hour by hour.

    Commands beyond the bus power limit or the energy bounds are clipped;
    the clipped amount (kWh) is accumulated per bus and hour.
    """
    if schedule.sectors != sectors.sector_count:
        raise ConfigurationError(
            f"schedule has {schedule.sectors} sectors, sector map has {sectors.sector_count}"
        )
    sec = sectors.index_vector(net)
    e_max = np.array([capacity(params, int(n)) for n in n_users(params, mix, net)])
    e_max[net.slack_index] = 0.0
    caps = bus_power_caps(net, mix, params)

    cmd = np.zeros((net.n_buses, HOURS))
    load = sec > 0
    cmd[load] = schedule.p_bt[sec[load] - 1]
    cmd[~load] = 0.0

    ce, de = params.charge_efficiency, params.discharge_efficiency
    energy = np.zeros((net.n_buses, HOURS + 1))
    energy[:, 0] = e_max * params.soc_init_pct / 100.0
    grid = np.zeros((net.n_buses, HOURS))
    over = np.zeros((net.n_buses, HOURS))

    for t in range(HOURS):
        p = np.clip(cmd[:, t], -caps, caps)
        over[:, t] = np.abs(cmd[:, t] - p) * dt_h
        e = energy[:, t] + _stored_delta(p, dt_h, ce, de)
        over[:, t] += np.maximum(e - e_max, 0.0) + np.maximum(-e, 0.0)
        e = np.clip(e, 0.0, e_max)
        stored = e - energy[:, t]
        grid[:, t] = np.where(stored > 0, stored / ce, stored * de) / dt_h
        energy[:, t + 1] = e

    soc_pct = np.divide(100.0 * energy, e_max[:, None], out=np.zeros_like(energy), where=e_max[:, None] > 0)
    return ScheduleTrajectory(net.bus_ids, e_max, energy, soc_pct, grid, over)
