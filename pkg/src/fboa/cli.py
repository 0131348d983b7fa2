"""Command-line harness: ``fboa gen | run | pattern | analyze``."""

from __future__ import annotations

import argparse
import csv
import io
import json
import logging
import os
import sys
import tempfile
from collections import defaultdict
from pathlib import Path

from . import campaign
from .analysis import (
    CampaignStats,
    curve_distance,
    ert_or_none,
    loglog_regression,
    mcnemar,
)
from .eda import EdaConfig, RunTrace
from .nk import NkInstance, generate_instance
from .pattern import UpdatePattern, aggregate, default_pattern

log = logging.getLogger("fboa")

RESULT_FIELDS = [
    "algorithm", "n", "k", "landscape", "t_s", "t_total", "success_rate", "mean_gap",
    "mean_T", "mean_U", "fail_U", "mu", "t_max", "E_T", "E_U", "ert", "flag",
]
RUN_FIELDS = [
    "algorithm", "n", "k", "landscape", "run", "seed", "success", "evals_used",
    "iterations", "adjustments", "best_fitness", "optimum", "gap",
]


class CliError(Exception):
    pass


def atomic_write(path, text):
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    fd, tmp = tempfile.mkstemp(dir=path.parent, prefix=f".{path.name}.", suffix=".tmp")
    try:
        with os.fdopen(fd, "w", encoding="utf-8", newline="") as fh:
            fh.write(text)
        os.replace(tmp, path)
    except BaseException:
        Path(tmp).unlink(missing_ok=True)
        raise


def _fmt(value):
    if value is None:
        return ""
    if isinstance(value, float):
        return repr(value)
    return str(value)


def csv_text(rows, fields):
    buf = io.StringIO()
    writer = csv.DictWriter(buf, fieldnames=fields, lineterminator="\n")
    writer.writeheader()
    for row in rows:
        writer.writerow({f: _fmt(row.get(f)) for f in fields})
    return buf.getvalue()


def read_csv(path):
    with open(path, encoding="utf-8", newline="") as fh:
        return list(csv.DictReader(fh))


def _guard(paths, force):
    existing = [p for p in paths if Path(p).exists()]
    if existing and not force:
        raise CliError(f"{existing[0]} exists; pass --force to overwrite")


def instance_path(out, key):
    return Path(out) / "instances" / f"{key.name}.json"


def load_instances(out, n_filter=None, k_filter=None):
    inst_dir = Path(out) / "instances"
    files = sorted(inst_dir.glob("N*_K*_L*.json"))
    if not files:
        raise CliError(f"no instance files in {inst_dir}; run `fboa gen` first")
    found = {}
    for path in files:
        n, k, i = (int(part[1:]) for part in path.stem.split("_"))
        if n_filter and n not in n_filter or k_filter and k not in k_filter:
            continue
        found[campaign.CellKey(n, k, i)] = (path, NkInstance.load(path))
    if not found:
        raise CliError("no instances match the requested --n/--k filter")
    return found


def cmd_gen(args):
    cells = campaign.feasible_cells(args.n, args.k)
    keys = [campaign.CellKey(n, k, i) for n, k in cells for i in range(args.landscapes)]
    _guard([instance_path(args.out, key) for key in keys], args.force)
    for key in keys:
        seed = campaign.instance_seed(args.seed, key.n, key.k, key.landscape)
        inst = generate_instance(key.n, key.k, seed).with_optimum()
        atomic_write(instance_path(args.out, key), json.dumps(inst.to_dict(), indent=1) + "\n")
    log.info("wrote %d instances to %s", len(keys), Path(args.out) / "instances")
    return 0


def resolve_pattern(source):
    if source is None:
        raise CliError("--algo fboa requires --pattern PATH (or --pattern default)")
    if source == "default":
        return default_pattern()
    if not Path(source).is_file():
        raise CliError(f"pattern file not found: {source}")
    return UpdatePattern.load(source)


def cmd_run(args):
    pattern = resolve_pattern(args.pattern) if args.algo == "fboa" else None
    cfg = EdaConfig(
        mu=args.mu, lam=args.lam, max_evals=args.t_max, gap_eps=args.gap_eps,
        seed=args.seed, k2_order=args.k2_order, max_parents=args.max_parents,
    )
    out = Path(args.out)
    found = load_instances(out, args.n, args.k)
    results_path = out / f"results_{args.algo}.csv"
    runs_path = out / f"runs_{args.algo}.csv"
    _guard([results_path, runs_path], args.force)

    instances = {key: inst for key, (_, inst) in found.items()}
    results = campaign.run_campaign(instances, cfg, args.runs, pattern, args.jobs)

    trace_root = out / "traces" / args.algo
    run_rows = []
    for key, traces in results.items():
        for i, trace in enumerate(traces):
            atomic_write(trace_root / key.name / f"run_{i:03d}.json", json.dumps(trace.to_dict()) + "\n")
            run_rows.append(campaign.run_row(args.algo, key, i, trace))
    stats = campaign.landscape_stats(results, cfg, pattern)
    result_rows = [
        campaign.summary_row(args.algo, st, n=key.n, k=key.k, landscape=key.landscape)
        for key, st in stats.items()
    ]
    atomic_write(runs_path, csv_text(run_rows, RUN_FIELDS))
    atomic_write(results_path, csv_text(result_rows, RESULT_FIELDS))
    manifest = {
        "algorithm": args.algo,
        "config": {"mu": cfg.mu, "lambda": cfg.lam, "t_max": cfg.max_evals, "gap_eps": cfg.gap_eps,
                   "k2_order": cfg.k2_order, "max_parents": cfg.max_parents},
        "campaign_seed": args.seed,
        "runs_per_instance": args.runs,
        "run_seeds": [args.seed + i for i in range(args.runs)],
        "pattern": None if pattern is None else {"source": args.pattern, "length": len(pattern)},
        "instances": [str(path.relative_to(out)) for _, (path, _) in sorted(found.items())],
    }
    atomic_write(out / f"manifest_{args.algo}.json", json.dumps(manifest, indent=2) + "\n")
    n_ok = sum(r["success"] for r in run_rows)
    log.info("%s: %d/%d successful runs; results in %s", args.algo, n_ok, len(run_rows), results_path)
    return 0


def collect_traces(trace_dir, n_filter=None):
    paths = sorted(Path(trace_dir).rglob("*.json"))
    traces = []
    for path in paths:
        try:
            trace = RunTrace.load(path)
        except (json.JSONDecodeError, TypeError, KeyError):
            continue
        if trace.algorithm != "boa":
            continue
        if n_filter and len(trace.best_bits) not in n_filter:
            continue
        traces.append(trace)
    return traces


def cmd_pattern(args):
    traces = collect_traces(args.traces, args.n)
    if not traces:
        raise CliError(f"no BOA traces found under {args.traces}")
    vectors = campaign.shd_vectors(traces)
    if not vectors:
        raise CliError("every BOA run succeeded before its first model adjustment; no SHD data")
    pattern = aggregate(vectors)
    _guard([args.out], args.force)
    atomic_write(args.out, pattern.dumps())
    log.info("pattern of length %d from %d traces written to %s", len(pattern), len(vectors), args.out)
    return 0


def _runs_path(results_path):
    path = Path(results_path)
    return path.with_name(path.name.replace("results", "runs", 1))


def _stats_from_rows(run_rows, fail_u, mu, t_max, n):
    ok = [r for r in run_rows if int(r["success"])]
    return CampaignStats(
        t_s=len(ok),
        t_total=len(run_rows),
        success_T=[int(r["evals_used"]) for r in ok],
        success_U=[int(r["adjustments"]) for r in ok],
        fail_u=fail_u,
        t_max=t_max,
        mu=mu,
        n=n,
        gaps=[float(r["gap"]) for r in run_rows],
    )


def _load_side(results_path):
    results = read_csv(results_path)
    runs_path = _runs_path(results_path)
    if not runs_path.is_file():
        raise CliError(f"per-run file {runs_path} not found next to {results_path}")
    runs = read_csv(runs_path)
    by_landscape = {(int(r["n"]), int(r["k"]), int(r["landscape"])): r for r in results}
    runs_by_cell = defaultdict(list)
    for r in runs:
        runs_by_cell[(int(r["n"]), int(r["k"]))].append(r)
    return by_landscape, runs_by_cell


def _ert_dict(st):
    rep = ert_or_none(st)
    return {
        "t_s": st.t_s,
        "t_total": st.t_total,
        "success_rate": st.success_rate,
        "mean_gap": st.mean_gap,
        "E_T": rep.e_t if rep else None,
        "E_U": rep.e_u if rep else None,
        "ert": rep.ert if rep else None,
    }


def _pairs(runs_a, runs_b):
    a = {(int(r["landscape"]), int(r["run"])): bool(int(r["success"])) for r in runs_a}
    b = {(int(r["landscape"]), int(r["run"])): bool(int(r["success"])) for r in runs_b}
    if a.keys() != b.keys():
        raise CliError("per-run files do not pair up (different landscapes or run counts)")
    return [(a[key], b[key]) for key in sorted(a)]


def analyze(boa_results, fboa_results):
    """Build the comparison report from the two algorithms' result files."""
    boa_l, boa_runs = _load_side(boa_results)
    fboa_l, fboa_runs = _load_side(fboa_results)
    if boa_l.keys() != fboa_l.keys():
        raise CliError("the two result files cover different (N, K, landscape) grids")
    cells = sorted({(n, k) for n, k, _ in boa_l})
    k_by_n = defaultdict(list)
    for n, k in cells:
        k_by_n[n].append(k)
    for n, ks in k_by_n.items():
        if len(ks) < 2:
            raise CliError(f"regression for N={n} needs at least 2 K values, got {ks}")

    report = {"cells": [], "regression": [], "mcnemar_by_n": []}
    for n, k in cells:
        sides = {}
        for algo, land, runs in (("boa", boa_l, boa_runs), ("fboa", fboa_l, fboa_runs)):
            head = next(r for key, r in land.items() if key[:2] == (n, k))
            sides[algo] = _stats_from_rows(runs[(n, k)], float(head["fail_U"]), int(head["mu"]),
                                           int(head["t_max"]), n)
        stat, p = mcnemar(_pairs(boa_runs[(n, k)], fboa_runs[(n, k)]))
        boa_d, fboa_d = _ert_dict(sides["boa"]), _ert_dict(sides["fboa"])
        speedup = boa_d["ert"] / fboa_d["ert"] if boa_d["ert"] and fboa_d["ert"] else None
        report["cells"].append({
            "n": n, "k": k, "boa": boa_d, "fboa": fboa_d, "speedup": speedup,
            "gap_difference": fboa_d["mean_gap"] - boa_d["mean_gap"],
            "mcnemar": {"statistic": stat, "p_value": p},
        })

    for n, ks in sorted(k_by_n.items()):
        entry = {"n": n, "k_values": ks}
        fits = {}
        for algo, land in (("boa", boa_l), ("fboa", fboa_l)):
            pts = [(key[1], float(r["ert"])) for key, r in sorted(land.items())
                   if key[0] == n and r["ert"] not in ("", None)]
            if len({k for k, _ in pts}) < 2:
                entry[algo] = None
                entry.setdefault("notes", []).append(f"{algo}: fewer than 2 K values with a finite ert")
                continue
            fit = loglog_regression(pts)
            fits[algo] = fit
            entry[algo] = {"beta0": fit.beta0, "beta1": fit.beta1, "r2": fit.r2, "points": len(pts)}
        entry["distance"] = curve_distance(fits["boa"], fits["fboa"], ks) if len(fits) == 2 else None
        report["regression"].append(entry)

        pairs = []
        for k in ks:
            pairs += _pairs(boa_runs[(n, k)], fboa_runs[(n, k)])
        stat, p = mcnemar(pairs)
        report["mcnemar_by_n"].append({"n": n, "statistic": stat, "p_value": p})
    return report


def cmd_analyze(args):
    report = analyze(args.boa_results, args.fboa_results)
    text = json.dumps(report, indent=2) + "\n"
    if args.out is None:
        sys.stdout.write(text)
    else:
        _guard([args.out], args.force)
        atomic_write(args.out, text)
        log.info("report written to %s", args.out)
    return 0


def build_parser():
    parser = argparse.ArgumentParser(prog="fboa", description=__doc__)
    parser.add_argument("-v", "--verbose", action="store_true")
    sub = parser.add_subparsers(dest="command", required=True)

    gen = sub.add_parser("gen", help="generate and enumerate NK instances")
    gen.add_argument("--n", type=int, nargs="+", default=list(campaign.N_VALUES))
    gen.add_argument("--k", type=int, nargs="+", default=list(campaign.K_VALUES))
    gen.add_argument("--landscapes", type=int, default=campaign.LANDSCAPES)
    gen.add_argument("--seed", type=int, default=0)
    gen.add_argument("--out", required=True, help="campaign directory")
    gen.add_argument("--force", action="store_true")
    gen.set_defaults(func=cmd_gen)

    run = sub.add_parser("run", help="run BOA or FBOA on every instance")
    run.add_argument("--algo", choices=("boa", "fboa"), default="boa")
    run.add_argument("--out", required=True, help="campaign directory written by `gen`")
    run.add_argument("--n", type=int, nargs="+", help="restrict to these N")
    run.add_argument("--k", type=int, nargs="+", help="restrict to these K")
    run.add_argument("--runs", type=int, default=campaign.RUNS)
    run.add_argument("--mu", type=int, default=100)
    run.add_argument("--lambda", dest="lam", type=int, default=40)
    run.add_argument("--t-max", dest="t_max", type=int, default=50000)
    run.add_argument("--seed", type=int, default=0, help="run i uses seed SEED+i")
    run.add_argument("--pattern", help="update pattern file for fboa, or 'default'")
    run.add_argument("--jobs", type=int, default=1)
    run.add_argument("--gap-eps", dest="gap_eps", type=float, default=None,
                     help="count a run as successful within this relative gap")
    run.add_argument("--k2-order", dest="k2_order", choices=("natural", "random"), default="natural")
    run.add_argument("--max-parents", dest="max_parents", type=int, default=None)
    run.add_argument("--force", action="store_true")
    run.set_defaults(func=cmd_run)

    pat = sub.add_parser("pattern", help="aggregate BOA SHD traces into an update pattern")
    pat.add_argument("traces", help="directory searched recursively for BOA trace files")
    pat.add_argument("--out", required=True, help="pattern file to write")
    pat.add_argument("--n", type=int, nargs="+", help="only use traces with these N")
    pat.add_argument("--force", action="store_true")
    pat.set_defaults(func=cmd_pattern)

    ana = sub.add_parser("analyze", help="compare BOA and FBOA result files")
    ana.add_argument("boa_results")
    ana.add_argument("fboa_results")
    ana.add_argument("--out", help="report JSON path (stdout when omitted)")
    ana.add_argument("--force", action="store_true")
    ana.set_defaults(func=cmd_analyze)
    return parser


def main(argv=None):
    parser = build_parser()
    args = parser.parse_args(argv)
    logging.basicConfig(level=logging.DEBUG if args.verbose else logging.INFO,
                        format="%(levelname)s %(message)s")
    try:
        return args.func(args)
    except CliError as exc:
        log.error("%s", exc)
        return 2


if __name__ == "__main__":
    sys.exit(main())
