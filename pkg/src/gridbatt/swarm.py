"""Global-best particle swarm optimisation over a bounded box.

The engine is generic; ``optimize_schedule`` wraps it around the daily
dispatch cost. All random draws come from one generator consumed in a
fixed order in the calling thread, so results depend only on the seed even
when fitness evaluations are farmed out through ``map_fn``.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Callable, Iterable, Sequence

import numpy as np

from .battery import BatteryParams, DispatchSchedule, sector_power_caps
from .errors import ConfigurationError
from .network import RadialNetwork, SectorMap
from .objective import CostBreakdown, DayEvaluator, ObjectiveWeights
from .profiles import HOURS, HourlyProfileSet, MixConfig


@dataclass(frozen=True)
class SwarmConfig:
    particles: int = 50
    iterations: int = 300
    inertia_w: float = 0.72
    c1: float = 1.49
    c2: float = 1.49
    v_max_frac: float = 0.5
    seed: int = 0
    stall_iters: int = 50

    def __post_init__(self):
        if self.particles < 2:
            raise ConfigurationError("particles must be at least 2")
        if self.iterations < 0:
            raise ConfigurationError("iterations must be non-negative")
        if not 0.0 <= self.inertia_w <= 1.0:
            raise ConfigurationError("inertia_w must lie in [0, 1]")
        if self.c1 < 0 or self.c2 < 0:
            raise ConfigurationError("c1 and c2 must be non-negative")
        if not 0.0 < self.v_max_frac <= 1.0:
            raise ConfigurationError("v_max_frac must lie in (0, 1]")
        if self.stall_iters < 1:
            raise ConfigurationError("stall_iters must be at least 1")


@dataclass(frozen=True, eq=False)
class SearchSpace:
    lower: np.ndarray
    upper: np.ndarray

    def __post_init__(self):
        lo = np.atleast_1d(np.asarray(self.lower, dtype=float))
        hi = np.atleast_1d(np.asarray(self.upper, dtype=float))
        if lo.shape != hi.shape or lo.ndim != 1:
            raise ConfigurationError("lower and upper bounds must be 1-D arrays of equal length")
        if not np.all(lo < hi):
            raise ConfigurationError("every dimension needs lower < upper")
        object.__setattr__(self, "lower", lo)
        object.__setattr__(self, "upper", hi)

    @classmethod
    def box(cls, low: float, high: float, dimension: int) -> SearchSpace:
        return cls(np.full(dimension, float(low)), np.full(dimension, float(high)))

    @property
    def dimension(self) -> int:
        return self.lower.size

    @property
    def width(self) -> np.ndarray:
        return self.upper - self.lower


@dataclass(frozen=True, eq=False)
class SwarmResult:
    best_position: np.ndarray
    best_cost: float
    history: list[float] = field(default_factory=list)
    evaluations: int = 0
    iterations: int = 0
    stopped_by: str = "iterations"

    def to_dict(self) -> dict:
        return {
            "best_cost": self.best_cost,
            "evaluations": self.evaluations,
            "iterations": self.iterations,
            "stopped_by": self.stopped_by,
            "history": list(self.history),
        }


def _evaluate(f, xs: np.ndarray, map_fn) -> np.ndarray:
    costs = np.array(list(map_fn(f, list(xs))), dtype=float)
    costs[~np.isfinite(costs)] = np.inf
    return costs


def optimize(
    f: Callable[[np.ndarray], float],
    space: SearchSpace,
    cfg: SwarmConfig = SwarmConfig(),
    initial: Iterable[Sequence[float]] = (),
    map_fn: Callable = map,
    progress=None,
) -> SwarmResult:
    """Minimise ``f`` over ``space``.

    ``initial`` positions replace the first random particles. ``map_fn`` is
    used for population evaluation (e.g. ``executor.map``). ``progress``, if
    given, is a text stream receiving ``iter,best_cost,evals`` lines.
    """
    expected = getattr(f, "dimension", None)
    if expected is not None and expected != space.dimension:
        raise ConfigurationError(f"cost function expects {expected} dimensions, search space has {space.dimension}")

    rng = np.random.default_rng(cfg.seed)
    n, d = cfg.particles, space.dimension
    lo, hi = space.lower, space.upper
    v_max = cfg.v_max_frac * space.width

    x = lo + rng.random((n, d)) * space.width
    seeds = [np.clip(np.asarray(p, dtype=float), lo, hi) for p in initial]
    if len(seeds) > n:
        raise ConfigurationError("more initial positions than particles")
    for i, p in enumerate(seeds):
        if p.shape != (d,):
            raise ConfigurationError(f"initial position {i} has wrong dimension")
        x[i] = p
    v = (2.0 * rng.random((n, d)) - 1.0) * v_max

    cost = _evaluate(f, x, map_fn)
    evaluations = n
    pbest, pcost = x.copy(), cost.copy()
    g = int(np.argmin(pcost))
    gbest, gcost = pbest[g].copy(), float(pcost[g])
    history = [gcost]
    if progress is not None:
        print(f"0,{gcost!r},{evaluations}", file=progress)

    stall = 0
    executed = 0
    stopped_by = "iterations"
    for it in range(1, cfg.iterations + 1):
        r1 = rng.random((n, d))
        r2 = rng.random((n, d))
        v = cfg.inertia_w * v + cfg.c1 * r1 * (pbest - x) + cfg.c2 * r2 * (gbest - x)
        v = np.clip(v, -v_max, v_max)
        x = x + v
        outside = (x < lo) | (x > hi)
        x = np.clip(x, lo, hi)
        v[outside] = 0.0

        cost = _evaluate(f, x, map_fn)
        evaluations += n
        executed = it
        better = cost < pcost
        pbest[better] = x[better]
        pcost[better] = cost[better]
        g = int(np.argmin(pcost))
        if pcost[g] < gcost:
            gbest, gcost = pbest[g].copy(), float(pcost[g])
            stall = 0
        else:
            stall += 1
        history.append(gcost)
        if progress is not None:
            print(f"{it},{gcost!r},{evaluations}", file=progress)
        if stall >= cfg.stall_iters:
            stopped_by = "stall"
            break

    return SwarmResult(gbest, gcost, history, evaluations, executed, stopped_by)


def optimize_schedule(
    net: RadialNetwork,
    profiles: HourlyProfileSet,
    mix: MixConfig,
    params: BatteryParams,
    weights: ObjectiveWeights,
    cfg: SwarmConfig = SwarmConfig(),
    sectors: SectorMap | None = None,
    hours: Sequence[int] | None = None,
    include_ev: bool = True,
    include_solar: bool = True,
    map_fn: Callable = map,
    progress=None,
) -> tuple[DispatchSchedule, CostBreakdown, SwarmResult]:
    """Search sector-hour battery commands minimising the daily cost.

    Each sector's bound is the smallest per-bus power limit in it. Hours not
    listed in ``hours`` stay at zero, as do sectors without dispatchable
    capacity. The zero schedule is part of the initial swarm and the result
    never costs more than it.
    """
    evaluator = DayEvaluator(net, profiles, mix, params, weights, sectors, include_ev, include_solar)
    smap = evaluator.sectors
    hours = list(range(HOURS)) if hours is None else sorted(set(int(h) for h in hours))
    if any(not 0 <= h < HOURS for h in hours):
        raise ConfigurationError(f"hours must lie in 0..{HOURS - 1}")

    caps = sector_power_caps(net, smap, mix, params)
    cells = [(s, h) for s in range(smap.sector_count) for h in hours if caps[s] > 0]
    zero = DispatchSchedule.zeros(smap.sector_count)
    zero_bd = evaluator.breakdown(zero)

    if not cells:
        result = SwarmResult(np.zeros(0), zero_bd.cost, [zero_bd.cost], 1, 0, "no-capacity")
        return zero, zero_bd, result

    rows = np.array([c[0] for c in cells])
    cols = np.array([c[1] for c in cells])
    bound = caps[rows]
    space = SearchSpace(-bound, bound)

    fitness = _EmbeddedCost(evaluator, rows, cols, smap.sector_count)
    result = optimize(fitness, space, cfg, initial=[np.zeros(len(cells))], map_fn=map_fn, progress=progress)
    best = fitness.embed(result.best_position)
    best_bd = evaluator.breakdown(best)
    if best_bd.cost > zero_bd.cost:
        return zero, zero_bd, result
    return best, best_bd, result


class _EmbeddedCost:
    """Picklable cost over the free sector-hour cells only."""

    def __init__(self, evaluator: DayEvaluator, rows, cols, sectors: int):
        self.evaluator = evaluator
        self.rows = rows
        self.cols = cols
        self.sectors = sectors
        self.dimension = len(rows)

    def embed(self, x) -> DispatchSchedule:
        p = np.zeros((self.sectors, HOURS))
        p[self.rows, self.cols] = x
        return DispatchSchedule(p)

    def __call__(self, x) -> float:
        return self.evaluator.breakdown(self.embed(x)).cost
