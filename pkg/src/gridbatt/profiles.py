"""Hourly demand profiles: residential load, EV charging and rooftop solar.

Net consumption at a bus is residential load plus EV charging minus the
solar exported by homes without batteries, plus the battery command
(positive = charging). Only residential load carries reactive power.
"""

from __future__ import annotations

import csv
from dataclasses import dataclass, field
from typing import Sequence

import numpy as np

from .errors import ConfigurationError, SchemaError
from .network import Bus, RadialNetwork

HOURS = 24
DT_H = 1.0
SOLAR_MAX_KW = 10.0

PROFILE_COLUMNS = ("bus_id", "hour", "p_res_kw", "q_res_kvar", "p_ev_kw")
SOLAR_COLUMNS = ("hour", "p_solar_unit_kw")


@dataclass(frozen=True, eq=False)
class HourlyProfileSet:
    """24-hour series per bus, rows in ``bus_ids`` order."""

    bus_ids: tuple[int, ...]
    p_res: np.ndarray
    q_res: np.ndarray
    p_ev: np.ndarray
    p_solar_unit: np.ndarray
    solar_max_kw: float = SOLAR_MAX_KW

    def __post_init__(self):
        n = len(self.bus_ids)
        for name in ("p_res", "q_res", "p_ev"):
            arr = np.asarray(getattr(self, name), dtype=float)
            if arr.shape != (n, HOURS):
                raise SchemaError(f"{name} must have shape ({n}, {HOURS}), got {arr.shape}")
            if not np.all(np.isfinite(arr)):
                raise SchemaError(f"{name} holds non-finite values")
            object.__setattr__(self, name, arr)
        sol = np.asarray(self.p_solar_unit, dtype=float)
        if sol.shape != (HOURS,):
            raise SchemaError(f"p_solar_unit must have {HOURS} entries")
        if not np.all(np.isfinite(sol)) or np.any(sol < 0):
            raise SchemaError("p_solar_unit must be finite and non-negative")
        if sol.max() > self.solar_max_kw + 1e-12:
            raise SchemaError(f"p_solar_unit peak {sol.max():g} kW exceeds the {self.solar_max_kw:g} kW maximum")
        object.__setattr__(self, "p_solar_unit", sol)

    def aligned(self, net: RadialNetwork) -> HourlyProfileSet:
        """Reorder rows to the network's bus order; buses absent from the set get zero load."""
        if self.bus_ids == net.bus_ids:
            return self
        pos = {b: i for i, b in enumerate(self.bus_ids)}
        unknown = sorted(set(self.bus_ids) - set(net.bus_ids))
        if unknown:
            raise SchemaError(f"profile buses {unknown} are not in the network")

        def take(arr):
            out = np.zeros((net.n_buses, HOURS))
            for j, b in enumerate(net.bus_ids):
                if b in pos:
                    out[j] = arr[pos[b]]
            return out

        return HourlyProfileSet(
            net.bus_ids, take(self.p_res), take(self.q_res), take(self.p_ev), self.p_solar_unit, self.solar_max_kw
        )

    def scaled(self, res: float = 1.0, ev: float = 1.0, solar: float = 1.0) -> HourlyProfileSet:
        return HourlyProfileSet(
            self.bus_ids, self.p_res * res, self.q_res * res, self.p_ev * ev, self.p_solar_unit * solar,
            max(self.solar_max_kw, float((self.p_solar_unit * solar).max())),
        )


@dataclass(frozen=True, eq=False)
class MixConfig:
    """Split of each bus's homes into solar-only (NBBSR) and solar+battery (BBSR) homes."""

    alpha: float
    bus_ids: tuple[int, ...]
    n_nbbsr: np.ndarray
    n_bbsr: np.ndarray

    @classmethod
    def for_alpha(cls, net: RadialNetwork, alpha: float) -> MixConfig:
        """Round ``alpha * N_B`` to the nearest whole number of solar-only homes per bus."""
        if not 0.0 <= alpha <= 1.0:
            raise ConfigurationError(f"alpha must lie in [0, 1], got {alpha}")
        n_b = net.n_residences.astype(float)
        n_nb = np.floor(alpha * n_b + 0.5).astype(int)
        return cls(alpha=float(alpha), bus_ids=net.bus_ids, n_nbbsr=n_nb, n_bbsr=net.n_residences - n_nb)

    @classmethod
    def from_counts(cls, bus_ids: Sequence[int], n_nbbsr, n_bbsr) -> MixConfig:
        n_nb = np.asarray(n_nbbsr, dtype=int)
        n_bb = np.asarray(n_bbsr, dtype=int)
        if np.any(n_nb < 0) or np.any(n_bb < 0):
            raise ConfigurationError("home counts must be non-negative")
        tot = n_nb + n_bb
        alpha = float(n_nb.sum() / tot.sum()) if tot.sum() else 0.0
        return cls(alpha=alpha, bus_ids=tuple(bus_ids), n_nbbsr=n_nb, n_bbsr=n_bb)

    @property
    def effective_alpha(self) -> np.ndarray:
        tot = self.n_nbbsr + self.n_bbsr
        return np.divide(self.n_nbbsr, tot, out=np.zeros(len(tot)), where=tot > 0)

    def alpha_for(self, bus_id: int) -> float:
        return float(self.effective_alpha[self.bus_ids.index(bus_id)])

    def counts_for(self, bus_id: int) -> tuple[int, int]:
        i = self.bus_ids.index(bus_id)
        return int(self.n_nbbsr[i]), int(self.n_bbsr[i])


def alpha_from_counts(n_nbbsr: int, n_bbsr: int) -> float:
    if n_nbbsr < 0 or n_bbsr < 0:
        raise ConfigurationError("home counts must be non-negative")
    total = n_nbbsr + n_bbsr
    if total == 0:
        raise ConfigurationError("degenerate mix: no homes at the bus")
    return n_nbbsr / total


def net_solar(bus: Bus, mix: MixConfig | float, p_solar_unit) -> np.ndarray:
    """Solar exported at a bus: alpha * N_B * per-home generation, hour by hour."""
    alpha = mix.alpha_for(bus.id) if isinstance(mix, MixConfig) else float(mix)
    return alpha * bus.n_residences * np.asarray(p_solar_unit, dtype=float)


def net_consumption(p_res, p_ev, p_solar, battery_kw=0.0):
    """Residential + EV - exported solar + battery charging (kW)."""
    return p_res + p_ev - p_solar + battery_kw


def compose_bus_injection(
    bus: Bus, mix: MixConfig, profiles: HourlyProfileSet, hour: int, battery_kw: float = 0.0
) -> tuple[float, float]:
    """(net kW, kVAR) consumed at one bus in one hour."""
    if not 0 <= hour < HOURS:
        raise ConfigurationError(f"hour must be in 0..{HOURS - 1}")
    i = profiles.bus_ids.index(bus.id)
    solar = net_solar(bus, mix, profiles.p_solar_unit[hour : hour + 1])[0]
    p = net_consumption(profiles.p_res[i, hour], profiles.p_ev[i, hour], solar, battery_kw)
    return float(p), float(profiles.q_res[i, hour])


def compose_injections(
    net: RadialNetwork,
    profiles: HourlyProfileSet,
    mix: MixConfig | None,
    battery_kw: np.ndarray | None = None,
    include_ev: bool = True,
    include_solar: bool = True,
) -> tuple[np.ndarray, np.ndarray]:
    """Net (P, Q) for every bus and hour, each of shape (n_buses, 24)."""
    prof = profiles.aligned(net)
    p = prof.p_res.copy()
    if include_ev:
        p += prof.p_ev
    if include_solar and mix is not None:
        p -= mix.n_nbbsr[:, None] * prof.p_solar_unit[None, :]
    if battery_kw is not None:
        p += battery_kw
    p[net.slack_index] = 0.0
    q = prof.q_res.copy()
    q[net.slack_index] = 0.0
    return p, q


# -- EV charging ------------------------------------------------------------


def _default_ev_pmf() -> np.ndarray:
    # weekday arrivals at home: small morning bump, main peak 17:00-20:00
    w = np.array(
        [0.4, 0.2, 0.1, 0.1, 0.1, 0.2, 0.6, 1.0, 1.2, 1.0, 0.8, 0.8,
         0.9, 0.9, 1.0, 1.4, 2.4, 4.0, 5.0, 4.6, 3.4, 2.2, 1.4, 0.8]
    )
    return w / w.sum()


@dataclass(frozen=True, eq=False)
class EvProfileParams:
    start_hour_pmf: np.ndarray = field(default_factory=_default_ev_pmf)
    charger_kw: float = 6.6
    session_hours: float = 3.0
    vehicles_per_bus: int = 9
    seed: int = 0

    def __post_init__(self):
        pmf = np.asarray(self.start_hour_pmf, dtype=float)
        if pmf.shape != (HOURS,):
            raise ConfigurationError(f"start_hour_pmf must have {HOURS} entries")
        if np.any(pmf < 0) or abs(pmf.sum() - 1.0) > 1e-9:
            raise ConfigurationError("start_hour_pmf must be non-negative and sum to 1")
        if self.charger_kw < 0 or self.vehicles_per_bus < 0:
            raise ConfigurationError("charger_kw and vehicles_per_bus must be non-negative")
        if not 0 < self.session_hours <= HOURS:
            raise ConfigurationError(f"session_hours must be in (0, {HOURS}]")
        object.__setattr__(self, "start_hour_pmf", pmf)


def session_shape(session_hours: float) -> np.ndarray:
    """Fraction of each hour a session started at hour 0 spends charging (wraps at midnight)."""
    shape = np.zeros(HOURS)
    full = int(np.floor(session_hours))
    shape[:full] = 1.0
    if full < HOURS:
        shape[full] = session_hours - full
    return shape


def synth_ev_profile(params: EvProfileParams, n_buses: int = 1) -> np.ndarray:
    """Sample charging start hours and stack fixed-power sessions; returns (n_buses, 24) kW."""
    out = np.zeros((n_buses, HOURS))
    if params.vehicles_per_bus == 0 or n_buses == 0:
        return out
    rng = np.random.default_rng(params.seed)
    starts = rng.choice(HOURS, size=(n_buses, params.vehicles_per_bus), p=params.start_hour_pmf)
    counts = np.stack([np.bincount(row, minlength=HOURS) for row in starts])
    shape = session_shape(params.session_hours)
    # circular convolution of start counts with the session shape
    for lag in range(HOURS):
        if shape[lag]:
            out += np.roll(counts, lag, axis=1) * shape[lag]
    return out * params.charger_kw


# -- synthetic shapes ---------------------------------------------------------


def residential_shape(kind: str = "flat") -> np.ndarray:
    """Hourly multiplier on the nominal spot load (peak = 1)."""
    if kind == "flat":
        return np.ones(HOURS)
    if kind == "double_peak":
        h = np.arange(HOURS)
        morning = 0.25 * np.exp(-0.5 * ((h - 7.5) / 1.5) ** 2)
        evening = 0.45 * np.exp(-0.5 * ((h - 19.0) / 2.0) ** 2)
        s = 0.5 + morning + evening
        return s / s.max()
    raise ConfigurationError(f"unknown residential shape {kind!r}")


def solar_shape(peak_kw: float, sunrise: float = 6.0, sunset: float = 19.0) -> np.ndarray:
    """Clipped sine between sunrise and sunset, sampled at hour midpoints."""
    t = np.arange(HOURS) + 0.5
    s = np.sin(np.pi * (t - sunrise) / (sunset - sunrise))
    s = np.where((t > sunrise) & (t < sunset), np.clip(s, 0.0, None), 0.0)
    return peak_kw * s / s.max()


DEFAULT_SOLAR_PEAK_KW = 2.0


def synthetic_profiles(
    net: RadialNetwork,
    residential: str = "flat",
    solar_peak_kw: float = DEFAULT_SOLAR_PEAK_KW,
    ev: EvProfileParams | None = None,
    solar_max_kw: float = SOLAR_MAX_KW,
) -> HourlyProfileSet:
    """Parameterised stand-in profiles built on the network's spot loads."""
    if not 0 <= solar_peak_kw <= solar_max_kw:
        raise ConfigurationError(f"solar_peak_kw must lie in [0, {solar_max_kw}]")
    ev = ev or EvProfileParams()
    shape = residential_shape(residential)
    p_res = net.p_load_kw[:, None] * shape[None, :]
    q_res = net.q_load_kvar[:, None] * shape[None, :]
    p_ev = np.zeros((net.n_buses, HOURS))
    load_rows = [i for i, b in enumerate(net.buses) if b.id != net.slack_id]
    p_ev[load_rows] = synth_ev_profile(ev, len(load_rows))
    return HourlyProfileSet(net.bus_ids, p_res, q_res, p_ev, solar_shape(solar_peak_kw), solar_max_kw)


# -- CSV ----------------------------------------------------------------------


def _read_csv(path, required, what):
    with open(path, newline="", encoding="utf-8") as fh:
        reader = csv.DictReader(fh)
        header = [h.strip() for h in (reader.fieldnames or [])]
        missing = [c for c in required if c not in header]
        if missing:
            raise SchemaError(f"{what} file is missing columns {missing}")
        return [{k.strip(): (v or "").strip() for k, v in row.items() if k is not None} for row in reader]


def load_profiles_csv(path, solar_path, bus_ids: Sequence[int] | None = None,
                      solar_max_kw: float = SOLAR_MAX_KW) -> HourlyProfileSet:
    """Read per-bus hourly loads and the shared per-home solar series.

    Every (bus, hour) pair for hours 0..23 must be present; the error lists
    any gaps.
    """
    rows = _read_csv(path, PROFILE_COLUMNS, "profile")
    sol_rows = _read_csv(solar_path, SOLAR_COLUMNS, "solar")
    try:
        recs = {}
        for r in rows:
            key = (int(r["bus_id"]), int(r["hour"]))
            if key in recs:
                raise SchemaError(f"duplicate profile row for bus {key[0]} hour {key[1]}")
            recs[key] = (float(r["p_res_kw"]), float(r["q_res_kvar"]), float(r["p_ev_kw"]))
        solar = {}
        for r in sol_rows:
            solar[int(r["hour"])] = float(r["p_solar_unit_kw"])
    except ValueError as exc:
        raise SchemaError(f"non-numeric profile value: {exc}") from exc

    ids = tuple(bus_ids) if bus_ids is not None else tuple(sorted({b for b, _ in recs}))
    bad_hours = sorted({h for _, h in recs if not 0 <= h < HOURS})
    if bad_hours:
        raise SchemaError(f"hours outside 0..{HOURS - 1}: {bad_hours}")
    gaps = [(b, h) for b in ids for h in range(HOURS) if (b, h) not in recs]
    if gaps:
        raise SchemaError(f"missing profile rows (bus, hour): {gaps}")
    sol_gaps = [h for h in range(HOURS) if h not in solar]
    if sol_gaps:
        raise SchemaError(f"missing solar hours: {sol_gaps}")
    neg = [h for h, v in solar.items() if v < 0]
    if neg:
        raise SchemaError(f"negative p_solar_unit_kw at hours {sorted(neg)}")

    arr = np.array([[recs[(b, h)] for h in range(HOURS)] for b in ids]).reshape(len(ids), HOURS, 3)
    return HourlyProfileSet(
        ids, arr[:, :, 0], arr[:, :, 1], arr[:, :, 2], np.array([solar[h] for h in range(HOURS)]), solar_max_kw
    )


def write_profiles_csv(profiles: HourlyProfileSet, path, solar_path) -> None:
    with open(path, "w", newline="", encoding="utf-8") as fh:
        fh.write(",".join(PROFILE_COLUMNS) + "\n")
        for i, b in enumerate(profiles.bus_ids):
            for h in range(HOURS):
                fh.write(f"{b},{h},{float(profiles.p_res[i, h])!r},{float(profiles.q_res[i, h])!r},{float(profiles.p_ev[i, h])!r}\n")
    with open(solar_path, "w", newline="", encoding="utf-8") as fh:
        fh.write(",".join(SOLAR_COLUMNS) + "\n")
        for h in range(HOURS):
            fh.write(f"{h},{float(profiles.p_solar_unit[h])!r}\n")
