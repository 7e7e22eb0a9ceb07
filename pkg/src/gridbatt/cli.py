"""Command-line entry point.

    gridbatt loadflow --network ieee33 --hour-load nominal
    gridbatt scenario --name grid_ev --out results/
    gridbatt sweep --alphas 0.7 --betas 0.3
    gridbatt optimize --particles 20 --iterations 50
    gridbatt validate --config run.ini

Exit status is 0 on success, 1 for invalid input or usage, 2 for runtime
or I/O failures. Diagnostics go to standard error.
"""

from __future__ import annotations

import argparse
import json
import sys
from concurrent.futures import ProcessPoolExecutor
from dataclasses import asdict

from .config import RunConfig
from .errors import ConfigurationError, GridBattError, SchemaError, TopologyError
from .loadflow import BusInjection, check_ampacity, check_voltage_band, solve
from .network import default_sector_map
from .profiles import HOURS, MixConfig, compose_injections
from .reports import RunResults, emit_reports
from .scenarios import SCENARIOS, ScenarioSpec, run_scenario, sweep_alpha_beta

VALIDATION_ERRORS = (ConfigurationError, SchemaError, TopologyError)


class UsageError(Exception):
    pass


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        self.print_usage(sys.stderr)
        raise UsageError(f"{self.prog}: error: {message}")


def _floats(text: str) -> list[float]:
    try:
        return [float(t) for t in text.split(",") if t.strip()]
    except ValueError as exc:
        raise argparse.ArgumentTypeError(f"expected comma-separated numbers, got {text!r}") from exc


def _hour_load(text: str):
    if text == "nominal":
        return text
    try:
        h = int(text)
    except ValueError:
        raise argparse.ArgumentTypeError("expected 'nominal' or an hour 0-23") from None
    if not 0 <= h < HOURS:
        raise argparse.ArgumentTypeError("hour must lie in 0..23")
    return h


def build_parser() -> argparse.ArgumentParser:
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--config", help="INI run configuration (defaults are bundled)")
    common.add_argument("--seed", type=int, help="base random seed")
    common.add_argument("--out", help="directory for report files")

    swarm = argparse.ArgumentParser(add_help=False)
    swarm.add_argument("--particles", type=int)
    swarm.add_argument("--iterations", type=int)
    swarm.add_argument("--progress", action="store_true", help="stream swarm progress to stderr")

    mix = argparse.ArgumentParser(add_help=False)
    mix.add_argument("--alpha", type=float, help="NBBSR fraction per bus")
    mix.add_argument("--beta", type=float, help="dispatchable share of BBSR battery capacity")

    p = _Parser(prog="gridbatt", description="Residential battery dispatch on radial feeders.")
    sub = p.add_subparsers(dest="command", required=True, parser_class=_Parser)

    lf = sub.add_parser("loadflow", parents=[common], help="single-hour load flow; JSON on stdout")
    lf.add_argument("--network", help="'ieee33' or a directory with buses.csv and lines.csv")
    lf.add_argument("--hour-load", type=_hour_load, default="nominal",
                    help="'nominal' spot loads or an hour 0-23 of the configured day")
    lf.add_argument("--base-kv", type=float)
    lf.add_argument("--alpha", type=float, help="mix used for --hour-load N")

    sc = sub.add_parser("scenario", parents=[common, swarm, mix], help="one scenario")
    sc.add_argument("--name", choices=SCENARIOS)

    sub.add_parser("optimize", parents=[common, swarm, mix], help="optimised dispatch only")

    sw = sub.add_parser("sweep", parents=[common, swarm], help="alpha/beta grid of optimised runs")
    sw.add_argument("--alphas", type=_floats)
    sw.add_argument("--betas", type=_floats)
    sw.add_argument("--workers", type=int, default=1, help="processes used for independent cells")

    sub.add_parser("validate", parents=[common], help="check configuration and datasets")
    return p


def _overrides(args) -> dict[str, dict]:
    get = lambda k: getattr(args, k, None)  # noqa: E731
    join = lambda v: None if v is None else ",".join(repr(x) for x in v)  # noqa: E731
    return {
        "network": {"source": get("network"), "base_kv": get("base_kv")},
        "swarm": {"particles": get("particles"), "iterations": get("iterations")},
        "run": {
            "seed": get("seed"),
            "scenario": get("name") if args.command == "scenario" else None,
            "alpha": get("alpha"),
            "beta": get("beta"),
            "alphas": join(get("alphas")),
            "betas": join(get("betas")),
        },
    }


def _meta(command: str, cfg: RunConfig) -> dict:
    return {"command": command, "config": cfg.to_dict()}


def _cmd_loadflow(args, cfg: RunConfig) -> RunResults:
    net = cfg.build_network()
    if args.hour_load == "nominal":
        inj = BusInjection.nominal(net)
    else:
        profiles = cfg.build_profiles(net)
        p, q = compose_injections(net, profiles, MixConfig.for_alpha(net, cfg.alpha))
        h = args.hour_load
        inj = BusInjection(
            {b: float(p[i, h]) for i, b in enumerate(net.bus_ids)},
            {b: float(q[i, h]) for i, b in enumerate(net.bus_ids)},
        )
    sol = solve(net, inj)
    extra = {
        "base_kv": cfg.base_kv,
        "hour_load": args.hour_load,
        "nominal": args.hour_load == "nominal",
        "ampacity_violations": [asdict(v) for v in check_ampacity(net, sol)],
        "voltage_violations": [asdict(v) for v in check_voltage_band(sol, cfg.band)],
    }
    body = sol.to_dict()
    body.update(extra)
    sys.stdout.write(json.dumps(body, indent=2, sort_keys=True) + "\n")
    return RunResults(config=_meta("loadflow", cfg), loadflow=sol, loadflow_extra=extra)


def _context(cfg: RunConfig):
    net = cfg.build_network()
    profiles = cfg.build_profiles(net)
    weights = cfg.build_weights(net, profiles)
    return net, profiles, weights


def _cmd_scenario(args, cfg: RunConfig, name: str) -> RunResults:
    net, profiles, weights = _context(cfg)
    spec = ScenarioSpec(name, cfg.alpha, cfg.beta, cfg.swarm)
    res = run_scenario(
        spec, net, profiles, cfg.battery, weights, progress=sys.stderr if args.progress else None
    )
    bd = res.breakdown
    print(
        f"{name}: loss {bd.p_loss_total_kw:.3f} kW, avg deviation {bd.avg_v_dev_pct:.3f}%, "
        f"cost {bd.cost:.5f}, feasible {res.feasible}",
        file=sys.stderr,
    )
    return RunResults(config=_meta(args.command, cfg), scenarios={name: res})


def _cmd_sweep(args, cfg: RunConfig) -> RunResults:
    net, profiles, weights = _context(cfg)
    if args.workers < 1:
        raise ConfigurationError("--workers must be at least 1")
    kw = dict(
        alphas=cfg.alphas, betas=cfg.betas, net=net, profiles=profiles, params=cfg.battery,
        weights=weights, swarm=cfg.swarm, base_seed=cfg.seed,
    )
    if args.workers > 1:
        with ProcessPoolExecutor(args.workers) as pool:
            result = sweep_alpha_beta(**kw, map_fn=pool.map)
    else:
        result = sweep_alpha_beta(**kw)
    for c in result.cells:
        if c.failed:
            print(f"cell alpha={c.alpha} beta={c.beta} failed: {c.error}", file=sys.stderr)
    if args.out is None:
        sys.stdout.write(result.to_csv())
    return RunResults(config=_meta("sweep", cfg), sweep=result)


def _cmd_validate(args, cfg: RunConfig) -> None:
    net = cfg.build_network()
    (net.sectors or default_sector_map(net)).validate(net)
    profiles = cfg.build_profiles(net)
    cfg.build_weights(net, profiles)
    print("OK")


def main(argv=None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except UsageError as exc:
        print(exc, file=sys.stderr)
        return 1
    except SystemExit as exc:  # --help
        return int(exc.code or 0)

    try:
        cfg = RunConfig.load(args.config, _overrides(args))
        if args.command == "loadflow":
            results = _cmd_loadflow(args, cfg)
        elif args.command == "scenario":
            results = _cmd_scenario(args, cfg, cfg.scenario)
        elif args.command == "optimize":
            results = _cmd_scenario(args, cfg, "proposed")
        elif args.command == "sweep":
            results = _cmd_sweep(args, cfg)
        else:
            _cmd_validate(args, cfg)
            return 0
        out = args.out
        if out is None and args.command in ("scenario", "optimize"):
            out = "results"
        if out is not None:
            for name in emit_reports(results, out):
                print(f"wrote {out}/{name}", file=sys.stderr)
    except VALIDATION_ERRORS as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1
    except (GridBattError, OSError, RuntimeError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2
    return 0


if __name__ == "__main__":
    sys.exit(main())
