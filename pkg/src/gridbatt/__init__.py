"""Utility dispatch of residential batteries on radial distribution feeders."""

from .battery import (
    BatteryParams,
    BusBatteryState,
    DispatchSchedule,
    ScheduleTrajectory,
    simulate_schedule,
    soc,
    step_energy,
)
from .config import RunConfig
from .errors import (
    BoundsViolation,
    ConfigurationError,
    GridBattError,
    InfeasibleFlowError,
    SchemaError,
    TopologyError,
)
from .loadflow import (
    BusInjection,
    PowerFlowSolution,
    check_ampacity,
    check_voltage_band,
    solve,
    solve_batch,
)
from .network import (
    Bus,
    Line,
    RadialNetwork,
    SectorMap,
    default_sector_map,
    ieee33,
    load_network,
    to_per_unit,
)
from .objective import (
    CostBreakdown,
    DayEvaluator,
    ObjectiveWeights,
    evaluate_day,
    normalized_weights,
    scenario_baseline,
)
from .profiles import (
    EvProfileParams,
    HourlyProfileSet,
    MixConfig,
    compose_bus_injection,
    load_profiles_csv,
    synthetic_profiles,
)
from .reports import RunResults, emit_reports
from .scenarios import (
    ScenarioSpec,
    improvement_report,
    run_all_scenarios,
    run_scenario,
    sweep_alpha_beta,
)
from .swarm import SearchSpace, SwarmConfig, SwarmResult, optimize, optimize_schedule

__version__ = "0.1.0"
