"""Command-line entry point: validate, gen-traces, train-solar, run, compare.

Exit codes: 0 success, 1 user error (bad input), 2 internal error.
"""

from __future__ import annotations

import argparse
import logging
import math
import os
import sys
from concurrent.futures import ProcessPoolExecutor
from pathlib import Path

from .datacenter import load_cluster
from .errors import GreenDCError
from .forecast import load_irradiance, train_solar_model
from .report import compare, emit_report, format_comparison, load_summary
from .scenario import ConfigInvalid, ScenarioConfig, load_scenario, parse_overrides
from .workload import interactive_demand, load_batch_trace, load_interactive_trace

OUT_ENV = "GREENDC_OUT"

log = logging.getLogger("greendc")


class UserError(GreenDCError):
    pass


def check_scenario(cfg: ScenarioConfig) -> tuple[list[str], list[str]]:
    """Cross-file checks beyond the scalar constraints: (errors, warnings)."""
    errors, warnings = [], []
    for key in ("cluster", "interactive_trace", "batch_trace", "irradiance"):
        if not cfg.path(key).is_file():
            errors.append(f"{key}: file not found: {cfg.path(key)}")
    if errors:
        return errors, warnings
    specs = rates = None
    try:
        specs = load_cluster(cfg.path("cluster"))
    except (GreenDCError, ValueError) as exc:
        errors.append(str(exc))
    try:
        rates = load_interactive_trace(cfg.path("interactive_trace"))
        if len(rates) < cfg.horizon:
            errors.append(
                f"{cfg.path('interactive_trace')}: trace has {len(rates)} intervals but horizon is {cfg.horizon}"
            )
    except GreenDCError as exc:
        errors.append(str(exc))
    try:
        _, rejected = load_batch_trace(cfg.path("batch_trace"), cfg.dt)
        for job_id, reason in rejected:
            warnings.append(f"batch job {job_id} rejected: {reason}")
    except GreenDCError as exc:
        errors.append(str(exc))
    try:
        records = load_irradiance(cfg.path("irradiance"))
        need = math.ceil(cfg.horizon * cfg.dt / 3600.0)
        if len(records) < need:
            errors.append(f"{cfg.path('irradiance')}: {len(records)} hours but horizon needs {need}")
        elif cfg.predictor == "persistence" and len(records) < 2 * need:
            errors.append("persistence predictor needs a full day of irradiance before the simulated day")
        elif cfg.predictor == "svr" and len(records) - need < 48:
            errors.append("svr predictor needs at least 48 hours of irradiance history before the simulated day")
    except GreenDCError as exc:
        errors.append(str(exc))
    if specs is not None and rates is not None and len(rates):
        peak = float(max(rates[: cfg.horizon]))
        cap = sum(s.cpu_capacity for s in specs)
        need_units = interactive_demand(peak, cfg.service_rate, cfg.target_rt) if peak > 0 else 0.0
        if need_units > cap:
            warnings.append(f"peak interactive demand {need_units:.2f} units exceeds cluster capacity {cap:.2f}")
    return errors, warnings


def _load(path: str, sets: list[str]) -> ScenarioConfig:
    return load_scenario(path, parse_overrides(sets or []))


def cmd_validate(args) -> int:
    status = 0
    for path in args.scenario:
        try:
            cfg = _load(path, args.set)
        except ConfigInvalid as exc:
            print(f"error: {exc}", file=sys.stderr)
            status = 1
            continue
        errors, warnings = check_scenario(cfg)
        for w in warnings:
            print(f"warning: {path}: {w}", file=sys.stderr)
        for e in errors:
            print(f"error: {path}: {e}", file=sys.stderr)
        if errors:
            status = 1
        else:
            print(f"{path}: ok")
    return status


def cmd_gen_traces(args) -> int:
    from . import traces

    out = Path(args.out)
    out.mkdir(parents=True, exist_ok=True)
    specs = load_cluster(args.cluster) if args.cluster else None
    if specs is None:
        from .datacenter import default_cluster

        specs = default_cluster()
    capacity = sum(s.cpu_capacity for s in specs)
    horizon = args.horizon
    max_rate = traces.max_rate_for_util(args.peak_interactive_util, capacity, args.service_rate, args.target_rt)
    rates = traces.interactive_rates(horizon, args.dt, max_rate=max_rate, min_rate=max_rate / 2, seed=args.seed)
    traces.write_interactive(out / "interactive.csv", rates)
    rows = traces.batch_jobs(
        horizon, args.dt, n_jobs=args.n_jobs, batch_util=args.batch_util, capacity=capacity,
        deadline_mean_h=args.deadline_mean_h, deadline_std_h=args.deadline_std_h, seed=args.seed,
    )
    traces.write_batch(out / "batch.csv", rows)
    days = args.history_days + math.ceil(horizon * args.dt / 86400.0)
    traces.write_solar(out / f"solar_{args.season}.csv", traces.solar_irradiance(days, args.season, seed=args.seed))
    print(f"wrote interactive.csv ({horizon} intervals, peak {max_rate:.1f} req/s), "
          f"batch.csv ({len(rows)} jobs), solar_{args.season}.csv ({days} days) to {out}")
    return 0


def cmd_train_solar(args) -> int:
    records = load_irradiance(args.irradiance)
    _, rep = train_solar_model(records, split=args.split, C=args.C, epsilon_tube=args.epsilon)
    print(f"train={rep.n_train} test={rep.n_test} R2={rep.r2:.4f} r={rep.r:.4f}")
    return 0


def _run_one(path: str, sets: list[str], out_root: str, plots: bool) -> tuple[str, dict]:
    from .engine import Simulation

    cfg = _load(path, sets)
    errors, _ = check_scenario(cfg)
    if errors:
        raise UserError("; ".join(errors))
    sim = Simulation(cfg)
    report = sim.run()
    out = Path(out_root) / f"{cfg.name}-{cfg.policy}-{cfg.predictor}-s{cfg.seed}"
    extra = {"scenario": cfg.settings()}
    if sim.svr_report is not None:
        extra["svr_r2"] = sim.svr_report.r2
        extra["svr_r"] = sim.svr_report.r
    emit_report(report, out, plots=plots, extra=extra)
    return str(out), report.summary()


def _print_summary(out: str, s: dict) -> None:
    p = s["rt_percentiles"]
    print(
        f"{out}: brown={s['brown_kwh']:.3f} kWh green={s['green_kwh']:.3f} kWh "
        f"rt mean={s['mean_rt_ms']:.1f} p95={p['p95']:.1f} p99={p['p99']:.1f} ms "
        f"deadline misses={s['deadline_violations']} deactivation={100 * s['deactivation_pct']:.1f}%"
    )


def cmd_run(args) -> int:
    out_root = args.out or os.environ.get(OUT_ENV) or "reports"
    jobs = [(p, args.set, out_root, args.plots) for p in args.scenario]
    if args.workers > 1 and len(jobs) > 1:
        with ProcessPoolExecutor(max_workers=args.workers) as pool:
            results = list(pool.map(_run_one_star, jobs))
    else:
        results = [_run_one(*j) for j in jobs]
    for out, summary in results:
        _print_summary(out, summary)
    return 0


def _run_one_star(job):
    return _run_one(*job)


def cmd_compare(args) -> int:
    a, b = load_summary(args.a), load_summary(args.b)
    print(format_comparison(compare(a, b), Path(args.a).name, Path(args.b).name))
    return 0


def build_parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(prog="greendc", description=__doc__.splitlines()[0])
    p.add_argument("-v", "--verbose", action="store_true")
    sub = p.add_subparsers(dest="verb", required=True)

    v = sub.add_parser("validate", help="parse a scenario and cross-check its files")
    v.add_argument("scenario", nargs="+")
    v.add_argument("--set", action="append", default=[], metavar="KEY=VALUE")
    v.set_defaults(func=cmd_validate)

    g = sub.add_parser("gen-traces", help="write synthetic interactive, batch and irradiance traces")
    g.add_argument("--out", default=".")
    g.add_argument("--cluster", default=None)
    g.add_argument("--seed", type=int, default=0)
    g.add_argument("--horizon", type=int, default=288)
    g.add_argument("--dt", type=float, default=300.0)
    g.add_argument("--peak-interactive-util", type=float, default=0.43)
    g.add_argument("--batch-util", type=float, default=0.27)
    g.add_argument("--deadline-mean-h", type=float, default=6.0)
    g.add_argument("--deadline-std-h", type=float, default=1.0)
    g.add_argument("--n-jobs", type=int, default=60)
    g.add_argument("--service-rate", type=float, default=60.0)
    g.add_argument("--target-rt", type=float, default=0.5)
    g.add_argument("--season", default="autumn")
    g.add_argument("--history-days", type=int, default=60)
    g.set_defaults(func=cmd_gen_traces)

    t = sub.add_parser("train-solar", help="fit the irradiance regressor and report R2 and r")
    t.add_argument("irradiance")
    t.add_argument("--split", type=float, default=0.8)
    t.add_argument("--C", type=float, default=4.0)
    t.add_argument("--epsilon", type=float, default=0.0)
    t.set_defaults(func=cmd_train_solar)

    r = sub.add_parser("run", help="run one or more scenarios")
    r.add_argument("scenario", nargs="+")
    r.add_argument("--set", action="append", default=[], metavar="KEY=VALUE")
    r.add_argument("--out", default=None, help=f"output root (default ${OUT_ENV} or ./reports)")
    r.add_argument("--workers", type=int, default=1)
    r.add_argument("--plots", action="store_true")
    r.set_defaults(func=cmd_run)

    c = sub.add_parser("compare", help="signed deltas between two summaries (B minus A)")
    c.add_argument("a")
    c.add_argument("b")
    c.set_defaults(func=cmd_compare)
    return p


def main(argv: list[str] | None = None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return 0 if exc.code == 0 else 1
    logging.basicConfig(level=logging.DEBUG if args.verbose else logging.WARNING, format="%(levelname)s %(message)s")
    try:
        return args.func(args)
    except (GreenDCError, ValueError, OSError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1
    except Exception as exc:  # noqa: BLE001
        log.exception("internal error")
        print(f"internal error: {exc!r}", file=sys.stderr)
        return 2


if __name__ == "__main__":
    sys.exit(main())
