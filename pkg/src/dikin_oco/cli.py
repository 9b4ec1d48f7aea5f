"""Command-line entry point: ``dikin-oco {run,verify,sweep}``.

Exit codes: 0 success, 1 operational error, 2 an interior-point learner's
regret exceeded its first-order bound (or a verify property failed).
"""
import argparse
import csv
import json
import logging
import math
import os
import sys
from concurrent.futures import ProcessPoolExecutor
from pathlib import Path

import numpy as np
import yaml

from .config import dump_config, load_config
from .errors import ConfigParse, DikinOCOError
from .harness import hindsight_optimum, run_experiment, summarize, verify_trajectory_inequalities
from .verify import format_table, run_verify_suite

log = logging.getLogger("dikin_oco")

EXIT_OK, EXIT_ERROR, EXIT_BOUND = 0, 1, 2
SWEEP_COLUMNS = ["T", "seed", "learner", "final_regret", "thm1_bound", "ratio", "error"]


def _fmt(v):
    return "nan" if v is None or (isinstance(v, float) and math.isnan(v)) else format(float(v), ".17g")


def trace_columns(n):
    return ["t", *(f"x_{i}" for i in range(n)), "loss", "grad_norm", "min_slack", "local_step_norm", "cum_regret"]


def write_trace_csv(path, trace, curve):
    n = trace.iterates.shape[1]
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh)
        w.writerow(trace_columns(n))
        gn = trace.grad_norms
        for t in range(len(trace)):
            w.writerow([t + 1, *(_fmt(v) for v in trace.iterates[t]), _fmt(trace.losses[t]), _fmt(gn[t]),
                        _fmt(trace.min_slacks[t]), _fmt(trace.local_step_norms[t]), _fmt(curve.cumulative[t])])


def execute(cfg, out_dir):
    """Run one experiment and write its traces, summary and property report."""
    out = Path(out_dir)
    out.mkdir(parents=True, exist_ok=True)
    losses = cfg.losses()
    barrier = cfg.barrier()
    traces = run_experiment(cfg, losses, barrier)
    x_star = hindsight_optimum(losses, cfg.domain)
    summaries, curves = summarize(cfg, traces, losses, barrier, x_star)
    for name, tr in traces.items():
        write_trace_csv(out / f"trace_{name}.csv", tr, curves[name])

    report = {"comparator": np.asarray(x_star).tolist(), "properties": []}
    interior_comparator = cfg.start_point()
    for name, tr in traces.items():
        if tr.tuning is None or tr.epochs or tr.tuning.step_product > 0.25 * (1 + 1e-12):
            continue
        for r in verify_trajectory_inequalities(tr, barrier, interior_comparator, tr.tuning).values():
            report["properties"].append({"learner": name, **r.to_dict()})
    (out / "report.json").write_text(json.dumps(report, indent=2))

    lines = [f"horizon {cfg.horizon}  seed {cfg.seed}  domain {cfg.domain.kind} (n={cfg.domain.dim})",
             f"theta {barrier.theta:g}  diameter {barrier.diameter:.6g}",
             f"comparator {np.array2string(np.asarray(x_star), precision=6)}", ""]
    lines.append(f"{'learner':<14} {'final_regret':>14} {'thm1_bound':>14} {'ratio':>9}  status")
    for s in summaries.values():
        tr = traces[s.learner]
        checked = tr.tuning is not None
        status = "n/a" if not checked else ("PASS" if s.within_bound else f"FAIL (exceeds at round {s.first_exceed_round})")
        lines.append(f"{s.learner:<14} {s.final_regret:>14.6g} {s.thm1_bound:>14.6g} {s.ratio:>9.4f}  {status}")
    (out / "summary.txt").write_text("\n".join(lines) + "\n")
    return traces, summaries


def cmd_run(args):
    cfg, _ = load_config(args.config)
    if args.horizon is not None and args.horizon < 2:
        raise ConfigParse("horizon", f"must be >= 2, got {args.horizon}")
    cfg = cfg.with_overrides(args.horizon, args.seed)
    out = args.out or cfg.out_dir or "out"
    traces, summaries = execute(cfg, out)
    print(Path(out, "summary.txt").read_text(), end="")
    status = EXIT_OK
    for s in summaries.values():
        if traces[s.learner].tuning is not None and not s.within_bound:
            log.error("%s: regret exceeds the bound %.6g from round %d", s.learner, s.thm1_bound, s.first_exceed_round)
            status = EXIT_BOUND
    return status


def cmd_verify(args):
    opts = {}
    if args.config:
        with open(args.config) as fh:
            opts = (yaml.safe_load(fh) or {}).get("verify", {})
        if not isinstance(opts, dict):
            raise ConfigParse("verify", "expected a mapping")
    samples = args.samples if args.samples is not None else int(opts.get("samples", 1000))
    seed = args.seed if args.seed is not None else int(opts.get("seed", 0))
    if samples < 1:
        raise ConfigParse("samples", "must be >= 1")
    rows = run_verify_suite(samples=samples, seed=seed, gradient_scale=args.fault_gradient_scale,
                            domains=opts.get("domains"))
    table = format_table(rows)
    print(table)
    if args.out:
        out = Path(args.out)
        out.mkdir(parents=True, exist_ok=True)
        (out / "verify.txt").write_text(table + "\n")
        (out / "verify.json").write_text(json.dumps([{"domain": d, **r.to_dict()} for d, r in rows], indent=2))
    return EXIT_OK if all(r.passed for _, r in rows) else EXIT_BOUND


def _sweep_one(job):
    cfg, out_dir = job
    try:
        _, summaries = execute(cfg, out_dir)
        return [[cfg.horizon, cfg.seed, s.learner, s.final_regret, s.thm1_bound, s.ratio, ""] for s in summaries.values()]
    except Exception as exc:  # recorded in the summary, sweep continues
        names = [spec.name for spec in cfg.learners]
        return [[cfg.horizon, cfg.seed, name, math.nan, math.nan, math.nan, f"{type(exc).__name__}: {exc}"] for name in names]


def cmd_sweep(args):
    cfg, sweep = load_config(args.config)
    if not sweep:
        raise ConfigParse("sweep", "sweep needs a `sweep` block with horizons and seeds")
    out = Path(args.out or cfg.out_dir or "out")
    out.mkdir(parents=True, exist_ok=True)
    jobs = [(cfg.with_overrides(T, s), out / f"T{T}_seed{s}") for T in sweep["horizons"] for s in sweep["seeds"]]
    if args.workers and args.workers > 1:
        with ProcessPoolExecutor(max_workers=args.workers) as pool:
            results = list(pool.map(_sweep_one, jobs))
    else:
        results = [_sweep_one(job) for job in jobs]
    with open(out / "summary.csv", "w", newline="") as fh:
        w = csv.writer(fh)
        w.writerow(SWEEP_COLUMNS)
        for rows in results:
            for T, seed, name, reg, bound, ratio, err in rows:
                w.writerow([T, seed, name, _fmt(reg), _fmt(bound), _fmt(ratio), err])
    (out / "config.yaml").write_text(dump_config(cfg, sweep))
    n_err = sum(1 for rows in results for r in rows if r[-1])
    print(f"wrote {sum(len(r) for r in results)} rows to {out / 'summary.csv'} ({n_err} errors)")
    return EXIT_OK if n_err == 0 else EXIT_ERROR


def build_parser():
    p = argparse.ArgumentParser(prog="dikin-oco", description=__doc__.splitlines()[0])
    sub = p.add_subparsers(dest="command", required=True)

    run = sub.add_parser("run", help="run one experiment")
    run.add_argument("--config", required=True)
    run.add_argument("--out")
    run.add_argument("--seed", type=int)
    run.add_argument("--horizon", type=int)
    run.set_defaults(func=cmd_run)

    ver = sub.add_parser("verify", help="run the geometric property suite")
    ver.add_argument("--config", help="YAML with a `verify` block: samples, seed, domains")
    ver.add_argument("--out")
    ver.add_argument("--seed", type=int)
    ver.add_argument("--samples", type=int)
    ver.add_argument("--fault-gradient-scale", type=float, default=1.0, help=argparse.SUPPRESS)
    ver.set_defaults(func=cmd_verify)

    sw = sub.add_parser("sweep", help="run a horizons x seeds cross product")
    sw.add_argument("--config", required=True)
    sw.add_argument("--out")
    sw.add_argument("--workers", type=int, default=1)
    sw.set_defaults(func=cmd_sweep)
    return p


def main(argv=None):
    level = os.environ.get("DIKIN_OCO_LOG", "WARNING").upper()
    logging.basicConfig(level=getattr(logging, level, logging.WARNING), format="%(levelname)s %(name)s: %(message)s")
    args = build_parser().parse_args(argv)
    try:
        return args.func(args)
    except ConfigParse as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return EXIT_ERROR
    except (DikinOCOError, OSError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_ERROR


if __name__ == "__main__":
    sys.exit(main())
