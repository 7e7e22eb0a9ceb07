"""Run configuration: INI file with sections, overridable key by key."""

from __future__ import annotations

import configparser
from dataclasses import asdict, dataclass, field
from importlib import resources
from pathlib import Path

from .battery import BatteryParams
from .errors import ConfigurationError, GridBattError
from .network import RadialNetwork, ieee33, load_network
from .objective import ObjectiveWeights, normalized_weights
from .profiles import EvProfileParams, HourlyProfileSet, load_profiles_csv, synthetic_profiles
from .scenarios import SCENARIOS
from .swarm import SwarmConfig


def default_config_text() -> str:
    return (resources.files("gridbatt") / "data" / "default.ini").read_text(encoding="utf-8")


def _floats(text: str) -> tuple[float, ...]:
    return tuple(float(t) for t in text.replace(" ", "").split(",") if t)


@dataclass(frozen=True)
class RunConfig:
    network_source: str = "ieee33"
    base_kv: float = 11.0
    base_mva: float = 1.0
    profiles_csv: str = ""
    solar_csv: str = ""
    residential: str = "flat"
    solar_peak_kw: float = 2.0
    solar_max_kw: float = 10.0
    ev: dict = field(default_factory=dict)
    battery: BatteryParams = field(default_factory=BatteryParams)
    objective_mode: str = "normalized"
    w1: float = 0.5
    w2: float = 0.5
    penalty_coeff: float = 1.0
    band_coeff: float = 0.0
    band: float = 0.10
    swarm: SwarmConfig = field(default_factory=SwarmConfig)
    scenario: str = "proposed"
    alpha: float = 0.7
    beta: float = 0.3
    alphas: tuple[float, ...] = ()
    betas: tuple[float, ...] = ()
    seed: int = 0

    @classmethod
    def load(cls, path: str | Path | None = None, overrides: dict[str, dict[str, str]] | None = None) -> RunConfig:
        """Read the bundled defaults, then ``path`` (if any), then ``overrides``."""
        cp = configparser.ConfigParser(inline_comment_prefixes=("#",))
        cp.read_string(default_config_text())
        if path is not None:
            p = Path(path)
            if not p.is_file():
                raise ConfigurationError(f"config file {p} does not exist")
            cp.read(p, encoding="utf-8")
            base_dir = p.parent
        else:
            base_dir = Path.cwd()
        for section, items in (overrides or {}).items():
            for k, v in items.items():
                if v is not None:
                    cp[section][k] = str(v)
        try:
            return cls._from_parser(cp, base_dir)
        except (ValueError, KeyError) as exc:
            if isinstance(exc, GridBattError):
                raise
            raise ConfigurationError(f"invalid configuration value: {exc}") from exc

    @classmethod
    def _from_parser(cls, cp: configparser.ConfigParser, base_dir: Path) -> RunConfig:
        def resolve(p: str) -> str:
            if not p or p == "ieee33":
                return p
            path = Path(p)
            return str(path if path.is_absolute() else (base_dir / path))

        net, prof, bat, obj, sw, run = (cp[s] for s in ("network", "profiles", "battery", "objective", "swarm", "run"))
        cfg = cls(
            network_source=resolve(net.get("source", "ieee33")),
            base_kv=net.getfloat("base_kv"),
            base_mva=net.getfloat("base_mva"),
            profiles_csv=resolve(prof.get("csv", "")),
            solar_csv=resolve(prof.get("solar_csv", "")),
            residential=prof.get("residential", "flat"),
            solar_peak_kw=prof.getfloat("solar_peak_kw"),
            solar_max_kw=prof.getfloat("solar_max_kw"),
            ev={
                "vehicles_per_bus": prof.getint("ev_vehicles_per_bus"),
                "charger_kw": prof.getfloat("ev_charger_kw"),
                "session_hours": prof.getfloat("ev_session_hours"),
                "seed": prof.getint("ev_seed"),
            },
            battery=BatteryParams(
                beta=bat.getfloat("beta"),
                e_bt_user_kwh=bat.getfloat("e_bt_user_kwh"),
                p_max_kw_per_home=bat.getfloat("p_max_kw_per_home"),
                soc_init_pct=bat.getfloat("soc_init_pct"),
                n_user_mode=bat.get("n_user_mode", "bbsr"),
            ),
            objective_mode=obj.get("mode", "normalized"),
            w1=obj.getfloat("w1"),
            w2=obj.getfloat("w2"),
            penalty_coeff=obj.getfloat("penalty_coeff"),
            band_coeff=obj.getfloat("band_coeff"),
            band=obj.getfloat("band"),
            swarm=SwarmConfig(
                particles=sw.getint("particles"),
                iterations=sw.getint("iterations"),
                inertia_w=sw.getfloat("inertia_w"),
                c1=sw.getfloat("c1"),
                c2=sw.getfloat("c2"),
                v_max_frac=sw.getfloat("v_max_frac"),
                seed=run.getint("seed"),
                stall_iters=sw.getint("stall_iters"),
            ),
            scenario=run.get("scenario", "proposed"),
            alpha=run.getfloat("alpha"),
            beta=run.getfloat("beta"),
            alphas=_floats(run.get("alphas", "")),
            betas=_floats(run.get("betas", "")),
            seed=run.getint("seed"),
        )
        cfg.check()
        return cfg

    def check(self) -> None:
        """Validate file references and value ranges that the dataclasses above do not cover."""
        if self.network_source != "ieee33":
            d = Path(self.network_source)
            for name in ("buses.csv", "lines.csv"):
                if not (d / name).is_file():
                    raise ConfigurationError(f"network directory {d} lacks {name}")
        if bool(self.profiles_csv) != bool(self.solar_csv):
            raise ConfigurationError("profiles csv and solar_csv must be given together")
        for p in (self.profiles_csv, self.solar_csv):
            if p and not Path(p).is_file():
                raise ConfigurationError(f"profile file {p} does not exist")
        if self.objective_mode not in ("normalized", "raw"):
            raise ConfigurationError("objective mode must be 'normalized' or 'raw'")
        if self.scenario not in SCENARIOS:
            raise ConfigurationError(f"scenario must be one of {SCENARIOS}")
        for v in (self.alpha, self.beta, *self.alphas, *self.betas):
            if not 0.0 <= v <= 1.0:
                raise ConfigurationError(f"alpha/beta value {v} outside [0, 1]")
        if not (self.base_kv > 0 and self.base_mva > 0):
            raise ConfigurationError("base values must be positive")
        EvProfileParams(**self.ev)
        ObjectiveWeights(self.w1, self.w2, self.penalty_coeff, self.band_coeff, band=self.band)

    # -- builders --------------------------------------------------------------

    def build_network(self) -> RadialNetwork:
        if self.network_source == "ieee33":
            return ieee33(self.base_kv, self.base_mva)
        d = Path(self.network_source)
        sectors = d / "sectors.csv"
        return load_network(
            d / "buses.csv", d / "lines.csv", sectors=sectors if sectors.is_file() else None,
            base_kv=self.base_kv, base_mva=self.base_mva, name=d.name,
        )

    def build_profiles(self, net: RadialNetwork) -> HourlyProfileSet:
        if self.profiles_csv:
            prof = load_profiles_csv(self.profiles_csv, self.solar_csv, solar_max_kw=self.solar_max_kw)
            return prof.aligned(net)
        return synthetic_profiles(
            net, self.residential, self.solar_peak_kw, EvProfileParams(**self.ev), self.solar_max_kw
        )

    def build_weights(self, net: RadialNetwork, profiles: HourlyProfileSet) -> ObjectiveWeights:
        if self.objective_mode == "raw":
            return ObjectiveWeights.raw(
                self.w1, self.w2, penalty_coeff=self.penalty_coeff, band_coeff=self.band_coeff, band=self.band
            )
        return normalized_weights(net, profiles, self.w1, self.w2, self.penalty_coeff, self.band_coeff, self.band)

    def to_dict(self) -> dict:
        d = asdict(self)
        d["alphas"] = list(self.alphas)
        d["betas"] = list(self.betas)
        return d
