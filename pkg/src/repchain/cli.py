"""Command-line interface: ``repchain simulate | optimize | analyze``."""
import argparse
import os
import sys
import time
from pathlib import Path

from . import __version__
from ._validation import InvalidParameterError
from .analytics import (
    expected_link_time,
    fidelity_from_qber,
    max_distance_rate_only,
    max_distance_swap_asap,
    purification_waiting_time,
    qber_from_fidelity,
    qber_threshold,
    secret_key_rate,
)
from .config import config_echo, emit_results, load_config
from .links import link_model
from .optimizer import ga_run, hill_climb_detailed
from .simulation import simulate_many, summarize

EXIT_OK = 0
EXIT_VALIDATION = 1
EXIT_RUNTIME = 2


def _threads(value):
    if value == "auto":
        return os.cpu_count() or 1
    n = int(value)
    if n < 1:
        raise argparse.ArgumentTypeError("threads must be >= 1 or 'auto'")
    return n


def build_parser():
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--config", help="INI configuration file")
    common.add_argument("--out", help="output file (default: stdout)")
    common.add_argument("--seed", type=int, help="master seed (overrides the configuration)")
    common.add_argument("--threads", type=_threads, default=1, help="worker processes or 'auto'")
    common.add_argument("--set", action="append", default=[], metavar="KEY=VALUE",
                        help="override a configuration key; repeatable")
    common.add_argument("--format", choices=("json", "csv"), default=None)

    parser = argparse.ArgumentParser(prog="repchain", description=__doc__)
    parser.add_argument("--version", action="version", version=__version__)
    sub = parser.add_subparsers(dest="command", required=True)

    sim = sub.add_parser("simulate", parents=[common], help="simulate the configured chain")
    sim.set_defaults(handler=cmd_simulate)

    opt = sub.add_parser("optimize", parents=[common], help="search for the cheapest hardware")
    opt.add_argument("--no-refine", action="store_true", help="skip the hill climb")
    opt.set_defaults(handler=cmd_optimize)

    ana = sub.add_parser("analyze", help="closed-form estimates")
    asub = ana.add_subparsers(dest="analysis", required=True)
    md = asub.add_parser("max-distance", parents=[common], help="loss-only distance bounds")
    md.add_argument("--repeaters", type=int, nargs="+", default=[0, 1, 3, 7])
    md.add_argument("--p-emd", type=float, default=1.0)
    md.set_defaults(handler=cmd_max_distance)
    skr = asub.add_parser("skr", parents=[common], help="BB84 secret-key rate")
    skr.add_argument("--rate", type=float, required=True, help="entanglement rate in Hz")
    group = skr.add_mutually_exclusive_group(required=True)
    group.add_argument("--qber", type=float)
    group.add_argument("--fidelity", type=float)
    skr.set_defaults(handler=cmd_skr)
    wt = asub.add_parser("waiting-time", parents=[common], help="link and purification waiting times")
    wt.add_argument("--rounds", type=int, default=0)
    wt.add_argument("--p-succ", type=float, nargs="+", default=[0.5])
    wt.add_argument("--p-gen", type=float, help="defaults to the configured link model")
    wt.set_defaults(handler=cmd_waiting_time)
    return parser


def _load(args):
    overrides = list(args.set)
    if args.seed is not None:
        overrides += [f"chain.rng_seed={args.seed}", f"optimizer.rng_seed={args.seed}"]
    return load_config(args.config, overrides)


def _emit(args, record, default="json"):
    text = emit_results(record, args.out, args.format or default)
    if args.out is None:
        sys.stdout.write(text)


def _base_record(command, cfg, ocfg, targets, started):
    return {
        "command": command,
        "config": config_echo(cfg, ocfg, targets),
        "seed": cfg.rng_seed,
        "version": __version__,
        "wall_time": time.perf_counter() - started,
    }


def cmd_simulate(args):
    started = time.perf_counter()
    cfg, ocfg, targets = _load(args)
    fids, durations = simulate_many(cfg, threads=args.threads)
    if (args.format or "json") == "csv":
        rows = [{"realization": i, "fidelity": f, "duration": t}
                for i, (f, t) in enumerate(zip(fids, durations))]
        _emit(args, rows, "csv")
        return EXIT_OK
    m = summarize(fids, durations)
    record = _base_record("simulate", cfg, ocfg, targets, started)
    record.update(
        mean_fidelity=m.mean_fidelity,
        rate_hz=m.rate_hz,
        mean_duration=m.mean_duration,
        std_errors=m.std_errors,
        realizations=m.realizations,
    )
    _emit(args, record)
    return EXIT_OK


def cmd_optimize(args):
    started = time.perf_counter()
    cfg, ocfg, targets = _load(args)
    ocfg = ocfg.replace(threads=args.threads)
    result = ga_run(cfg, ocfg)
    genome, cost = result.best_genome, result.best_cost
    evaluations = 0
    if not args.no_refine:
        hc = hill_climb_detailed(genome, cfg, ocfg)
        evaluations = hc.evaluations
        if hc.cost.total <= hc.start_cost.total:
            genome, cost = hc.genome, hc.cost
    best = _base_record("optimize", cfg, ocfg.replace(threads=1), targets, started)
    best.update(best_genome=genome.to_dict(), cost=cost.to_dict(),
                ga_best_cost=result.best_cost.total, hill_climb_evaluations=evaluations)
    if (args.format or "csv") == "csv":
        _emit(args, result.log, "csv")
        if args.out is not None:
            out = Path(args.out)
            emit_results(best, out.with_name(out.stem + ".best.json"), "json")
    else:
        best["log"] = result.log
        _emit(args, best, "json")
    return EXIT_OK


def cmd_max_distance(args):
    started = time.perf_counter()
    cfg, ocfg, targets = _load(args)
    rows = []
    for n in args.repeaters:
        swap_km, alpha = max_distance_swap_asap(targets, n, cfg.hw, args.p_emd)
        rows.append({
            "repeaters": n,
            "rate_only_km": max_distance_rate_only(targets, n, cfg.hw, args.p_emd),
            "swap_asap_km": swap_km,
            "alpha": alpha,
        })
    if (args.format or "json") == "csv":
        _emit(args, rows, "csv")
        return EXIT_OK
    record = _base_record("analyze max-distance", cfg, ocfg, targets, started)
    record.update(F_t=targets.F_t, R_t=targets.R_t, p_emd=args.p_emd, table=rows)
    _emit(args, record)
    return EXIT_OK


def cmd_skr(args):
    Q = args.qber if args.qber is not None else qber_from_fidelity(args.fidelity)
    record = {
        "command": "analyze skr",
        "rate_hz": args.rate,
        "qber": Q,
        "fidelity": fidelity_from_qber(Q),
        "skr_hz": secret_key_rate(args.rate, Q),
        "qber_threshold": qber_threshold(),
        "version": __version__,
    }
    _emit(args, record if (args.format or "json") == "json" else [record])
    return EXIT_OK


def cmd_waiting_time(args):
    cfg, ocfg, targets = _load(args)
    hw = cfg.hw
    L = cfg.node_distance
    if args.p_gen is None:
        p_gen = link_model(hw, cfg.strategy, L, cfg.alpha).p_succ
    else:
        p_gen = args.p_gen
    T0 = expected_link_time(p_gen, L, hw.T_cycle, hw.c_fiber)
    seq = args.p_succ if len(args.p_succ) > 1 else args.p_succ[0]
    record = {
        "command": "analyze waiting-time",
        "node_distance_km": L,
        "p_gen": p_gen,
        "link_time_s": T0,
        "rounds": args.rounds,
        "purified_time_s": purification_waiting_time(T0, args.rounds, seq),
        "version": __version__,
    }
    _emit(args, record if (args.format or "json") == "json" else [record])
    return EXIT_OK


def main(argv=None):
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        return args.handler(args)
    except InvalidParameterError as exc:
        print(f"repchain: invalid configuration: {exc}", file=sys.stderr)
        return EXIT_VALIDATION
    except Exception as exc:  # noqa: BLE001 - reported as a runtime failure
        print(f"repchain: {type(exc).__name__}: {exc}", file=sys.stderr)
        return EXIT_RUNTIME


if __name__ == "__main__":
    sys.exit(main())
