"""Command-line interface.

Subcommands write CSV/TSV outputs plus a JSON manifest recording the full
argument vector, the resolved configuration and SHA-256 digests of the
inputs; ``transprop replay MANIFEST`` re-runs a recorded command.

Exit codes: 0 success, 2 input error, 3 non-convergence, 4 internal error.
"""

from __future__ import annotations

import argparse
import csv
import hashlib
import io
import json
import logging
import math
import sys
import time
from fractions import Fraction
from pathlib import Path

import numpy as np

from . import __version__
from .experiments import edge_error_grid, summarize_counts, template_count_grid
from .models import BinaryReadModel, InputError, load_reads, load_score_matrix, score_matrix_from_reads, write_reads
from .prior import blue_fraction_crossing, critical_x_estimate, partition_function_exact, prior_moments
from .simulator import SimConfig, simulate, write_truth
from .solver import SolverConfig, solve
from .types import INFEASIBLE

log = logging.getLogger("transprop")

EXIT_OK, EXIT_INPUT, EXIT_NONCONVERGED, EXIT_INTERNAL = 0, 2, 3, 4

CSV_SCHEMAS = {
    "fig4": "transprop.fig4/1",
    "fig5": "transprop.fig5/1",
    "prior": "transprop.prior/1",
    "critical": "transprop.critical/1",
    "partition": "transprop.partition/1",
}

FIG4_COLUMNS = ["row", "K", "p_e", "sim", "seed", "reads", "sampled_templates", "recovered_clusters",
                "misclassified_edges", "violations", "iterations", "converged"]
FIG5_COLUMNS = ["p_e", "d", "f0", "f1", "pairs_mean", "tp_errors_mean", "baseline_errors_mean"]
PRIOR_COLUMNS = ["x", "N", "Z_log", "Z", "blue_fraction", "mean_clusters", "sd_clusters"]
CRITICAL_COLUMNS = ["N", "x_estimate", "x_crossing"]


class UsageError(Exception):
    pass


def _fmt(v):
    if v is None:
        return ""
    if isinstance(v, (bool, np.bool_)):
        return str(int(v))
    if isinstance(v, (int, np.integer)):
        return str(int(v))
    if isinstance(v, (float, np.floating)):
        v = float(v)
        if math.isinf(v):
            return "inf" if v > 0 else "-inf"
        return format(v, ".12g")
    return str(v)


def _write_csv(path, columns, rows):
    buf = io.StringIO()
    writer = csv.writer(buf, lineterminator="\n")
    writer.writerow(columns)
    for row in rows:
        writer.writerow([_fmt(row.get(c)) for c in columns])
    if path in (None, "-"):
        sys.stdout.write(buf.getvalue())
    else:
        Path(path).write_text(buf.getvalue(), encoding="utf-8")


def _digest(path) -> str:
    return hashlib.sha256(Path(path).read_bytes()).hexdigest()


def _write_manifest(path, args, argv, config, inputs=(), outputs=(), csv_schema=None):
    if path is None:
        return
    doc = {
        "manifest_schema": "transprop.manifest/1",
        "tool": "transprop",
        "version": __version__,
        "subcommand": args.command,
        "argv": list(argv),
        "config": config,
        "inputs": {str(p): _digest(p) for p in inputs},
        "outputs": [str(p) for p in outputs],
        "csv_schema": csv_schema,
    }
    Path(path).write_text(json.dumps(doc, indent=2, sort_keys=True) + "\n", encoding="utf-8")


def _manifest_path(args, default_from):
    if getattr(args, "manifest", None):
        return args.manifest
    if default_from in (None, "-"):
        return None
    return f"{default_from}.manifest.json"


def _solver_config(args) -> SolverConfig:
    return SolverConfig(
        lam=args.lam,
        convergence_goal=args.convergence_goal,
        max_iterations=args.max_iters,
        dtype="float32" if args.f32 else "float64",
        threads=args.threads,
    )


def _solver_dict(cfg: SolverConfig) -> dict:
    return {
        "lambda": cfg.lam,
        "convergence_goal": cfg.convergence_goal,
        "max_iterations": cfg.max_iterations,
        "epsilon_div": cfg.epsilon_div,
        "fast_path": cfg.fast_path,
        "dtype": cfg.dtype,
        "threads": cfg.threads,
    }


def _floats(text):
    try:
        return [float(t) for t in text.split(",") if t.strip()]
    except ValueError:
        raise argparse.ArgumentTypeError(f"expected comma-separated numbers, got {text!r}") from None


def _ints(text):
    try:
        return [int(t) for t in text.split(",") if t.strip()]
    except ValueError:
        raise argparse.ArgumentTypeError(f"expected comma-separated integers, got {text!r}") from None


def cmd_cluster(args, argv):
    if (args.reads is None) == (args.scores is None):
        raise UsageError("give exactly one of --reads or --scores")
    cfg = _solver_config(args)
    if args.reads is not None:
        if args.error_rate is None:
            raise UsageError("--reads requires --error-rate")
        reads = load_reads(args.reads)
        model = BinaryReadModel(reads.length, args.error_rate)
        scores = score_matrix_from_reads(model, reads)
        source = args.reads
    else:
        scores = load_score_matrix(args.scores, has_header=args.header)
        source = args.scores

    start = time.perf_counter()
    result = solve(scores, cfg)
    wall = time.perf_counter() - start

    part = result.partition
    if part.n != scores.n:
        raise AssertionError("solver partition does not cover the input points")
    if (result.violations.count == 0) != (result.objective_value is not INFEASIBLE):
        raise AssertionError("objective and transitivity report disagree")

    labels = part.labels()
    lines = "".join(f"{i}\t{c}\n" for i, c in enumerate(labels.tolist()))
    if args.out in (None, "-"):
        sys.stdout.write(lines)
    else:
        Path(args.out).write_text(lines, encoding="utf-8")

    summary = {
        "points": scores.n,
        "clusters": part.n_blocks,
        "iterations": result.iterations,
        "converged": result.converged,
        "violations": result.violations.count,
        "objective": "-inf" if result.objective_value is INFEASIBLE else result.objective_value,
        "repaired_objective": result.repaired_objective,
        "margin": result.margin if math.isfinite(result.margin) else None,
        "wall_time_s": round(wall, 6),
    }
    if args.summary:
        Path(args.summary).write_text(json.dumps(summary, indent=2, sort_keys=True) + "\n", encoding="utf-8")
    print(
        f"{scores.n} points -> {part.n_blocks} clusters; iterations={result.iterations} "
        f"converged={result.converged} violations={result.violations.count} "
        f"objective={summary['objective']} wall={wall:.3f}s",
        file=sys.stderr,
    )
    outputs = [p for p in (args.out, args.summary) if p not in (None, "-")]
    config = {"solver": _solver_dict(cfg), "error_rate": args.error_rate, "header": args.header}
    _write_manifest(_manifest_path(args, args.out), args, argv, config, [source], outputs, CSV_SCHEMAS["partition"])
    if not result.converged and not args.allow_nonconverged:
        log.error("message passing did not converge in %d iterations", cfg.max_iterations)
        return EXIT_NONCONVERGED
    return EXIT_OK


def cmd_simulate(args, argv):
    cfg = SimConfig(args.templates, args.length, args.reads, args.error_rate, args.seed)
    data = simulate(cfg)
    prefix = args.out_prefix
    reads_path, truth_path = f"{prefix}.reads.txt", f"{prefix}.truth.tsv"
    write_reads(reads_path, data.reads)
    write_truth(truth_path, data.source)
    config = {"template_count": cfg.template_count, "word_length": cfg.word_length, "read_count": cfg.read_count,
              "error_rate": cfg.error_rate, "seed": cfg.seed, "rng": "numpy.PCG64"}
    _write_manifest(args.manifest or f"{prefix}.manifest.json", args, argv, config, (), [reads_path, truth_path])
    print(f"wrote {len(data.reads)} reads from {data.sampled_templates} sampled templates", file=sys.stderr)
    return EXIT_OK


def cmd_fig4(args, argv):
    templates, rates, sims = args.templates, args.error_rates, args.sims
    if args.full_scale:
        templates, rates, sims = [10, 20, 40], [0.01, 0.05, 0.10, 0.15], 100
    if any(pe < 0 or pe >= 0.5 for pe in rates) or any(k < 1 for k in templates) or sims < 1:
        raise UsageError("invalid grid: need K >= 1, 0 <= p_e < 0.5, sims >= 1")
    cfg = _solver_config(args)
    rows = template_count_grid(templates, rates, args.length, args.reads_per_template, sims, args.seed, cfg,
                               args.workers)
    out = [dict(r, row="sim") for r in rows]
    for agg in summarize_counts(rows):
        out.append(dict(agg, row=agg["stat"]))
    _write_csv(args.out, FIG4_COLUMNS, out)
    config = {"templates": templates, "error_rates": rates, "word_length": args.length,
              "reads_per_template": args.reads_per_template, "sims": sims, "seed": args.seed,
              "seed_policy": "seed + sim", "solver": _solver_dict(cfg)}
    _write_manifest(_manifest_path(args, args.out), args, argv, config, (), [args.out], CSV_SCHEMAS["fig4"])
    return EXIT_OK


def cmd_fig5(args, argv):
    k, n, rates, sims = args.templates, args.reads, args.error_rates, args.sims
    if args.full_scale:
        k, n, rates, sims = 50, 250, [0.01, 0.05, 0.10, 0.20], 100
    if any(pe < 0 or pe >= 0.5 for pe in rates) or k < 1 or n < 1 or sims < 1:
        raise UsageError("invalid grid: need K, N >= 1, 0 <= p_e < 0.5, sims >= 1")
    cfg = _solver_config(args)
    rows, _ = edge_error_grid(k, args.length, n, rates, sims, args.seed, cfg, args.workers)
    _write_csv(args.out, FIG5_COLUMNS, rows)
    config = {"templates": k, "reads": n, "error_rates": rates, "word_length": args.length, "sims": sims,
              "seed": args.seed, "seed_policy": "seed + sim", "solver": _solver_dict(cfg)}
    _write_manifest(_manifest_path(args, args.out), args, argv, config, (), [args.out], CSV_SCHEMAS["fig5"])
    return EXIT_OK


def _x_values(args):
    if args.x is not None:
        values = [t.strip() for t in args.x.split(",") if t.strip()]
    elif args.x_range is not None:
        lo, hi, num = float(args.x_range[0]), float(args.x_range[1]), int(args.x_range[2])
        grid = np.geomspace(lo, hi, num) if args.log else np.linspace(lo, hi, num)
        values = [repr(float(v)) for v in grid]
    else:
        values = ["1"]
    out = []
    for v in values:
        try:
            exact = Fraction(v)
        except ValueError:
            raise UsageError(f"bad x value {v!r}") from None
        if exact <= 0:
            raise UsageError("x values must be positive")
        out.append(exact)
    return out


def cmd_prior(args, argv):
    ns = args.n
    if any(n < 1 for n in ns):
        raise UsageError("N values must be positive")
    if args.mode == "critical-x":
        rows = []
        for n in ns:
            if n < 2:
                raise UsageError("critical-x needs N >= 2")
            rows.append({"N": n, "x_estimate": critical_x_estimate(n), "x_crossing": blue_fraction_crossing(n)})
        _write_csv(args.out, CRITICAL_COLUMNS, rows)
        schema = CSV_SCHEMAS["critical"]
    else:
        want = {
            "all": {"Z_log", "Z", "blue_fraction", "mean_clusters", "sd_clusters"},
            "zfun": {"Z_log", "Z"},
            "blue-fraction": {"blue_fraction"},
            "cluster-moments": {"mean_clusters", "sd_clusters"},
        }[args.mode]
        rows = []
        for x in _x_values(args):
            for n in ns:
                mom = prior_moments(float(x), n)
                if x.denominator == 1:
                    z = partition_function_exact(x, n)
                else:
                    z = math.exp(mom.log_z) if mom.log_z < 709.0 else math.inf
                row = {"x": x.numerator if x.denominator == 1 else float(x), "N": n, "Z_log": mom.log_z, "Z": z,
                       "blue_fraction": mom.blue_fraction, "mean_clusters": mom.mean_clusters,
                       "sd_clusters": mom.sd_clusters}
                rows.append({k: v for k, v in row.items() if k in want or k in ("x", "N")})
        _write_csv(args.out, PRIOR_COLUMNS, rows)
        schema = CSV_SCHEMAS["prior"]
    config = {"mode": args.mode, "N": ns, "x": args.x, "x_range": args.x_range, "log": args.log}
    _write_manifest(_manifest_path(args, args.out), args, argv, config, (), [args.out] if args.out else [], schema)
    return EXIT_OK


def cmd_replay(args, argv):
    doc = json.loads(Path(args.manifest_file).read_text(encoding="utf-8"))
    for path, digest in doc.get("inputs", {}).items():
        if not Path(path).exists() or _digest(path) != digest:
            raise InputError(f"{path}: input changed since the manifest was written")
    return main(doc["argv"])


def build_parser() -> argparse.ArgumentParser:
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--lambda", dest="lam", type=float, default=0.5, help="dampening factor in (0, 1)")
    common.add_argument("--convergence-goal", type=int, default=1000, metavar="M",
                        help="stop once no sign flip is projected within M iterations")
    common.add_argument("--max-iters", type=int, default=10000)
    common.add_argument("--threads", type=int, default=None, help="solver threads (default: all cores)")
    common.add_argument("--workers", type=int, default=1, help="processes for experiment grids")
    common.add_argument("--f32", action="store_true", help="32-bit messages")
    common.add_argument("--manifest", default=None, help="manifest path (default: next to the main output)")
    common.add_argument("-v", "--verbose", action="store_true")

    parser = argparse.ArgumentParser(prog="transprop", description="Clustering by transitive propagation.")
    parser.add_argument("--version", action="version", version=f"transprop {__version__}")
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("cluster", parents=[common], help="cluster a reads file or a score matrix")
    p.add_argument("--reads", help="reads file, one 0/1 word per line")
    p.add_argument("--scores", help="N x N CSV of log-likelihood ratios")
    p.add_argument("--error-rate", type=float, help="per-bit error rate of the reads")
    p.add_argument("--header", action="store_true", help="score CSV has a header row")
    p.add_argument("-o", "--out", default="-", help="partition file (default stdout)")
    p.add_argument("--summary", help="write a JSON run summary here")
    p.add_argument("--allow-nonconverged", action="store_true")
    p.set_defaults(func=cmd_cluster)

    p = sub.add_parser("simulate", parents=[common], help="generate templates and noisy reads")
    p.add_argument("--templates", "-K", type=int, required=True)
    p.add_argument("--length", "-L", type=int, default=30)
    p.add_argument("--reads", "-N", type=int, required=True)
    p.add_argument("--error-rate", type=float, required=True)
    p.add_argument("--seed", type=int, required=True)
    p.add_argument("--out-prefix", required=True)
    p.set_defaults(func=cmd_simulate)

    p = sub.add_parser("experiment-fig4", parents=[common], help="template-count recovery grid")
    p.add_argument("--templates", "-K", type=_ints, default=[10])
    p.add_argument("--error-rates", type=_floats, default=[0.01, 0.05])
    p.add_argument("--length", "-L", type=int, default=30)
    p.add_argument("--reads-per-template", type=int, default=10)
    p.add_argument("--sims", type=int, default=20)
    p.add_argument("--seed", type=int, required=True)
    p.add_argument("--full-scale", action="store_true", help="K=10,20,40; p_e=.01,.05,.10,.15; 100 sims")
    p.add_argument("-o", "--out", default="-")
    p.set_defaults(func=cmd_fig4)

    p = sub.add_parser("experiment-fig5", parents=[common], help="incorrect edges by Hamming distance")
    p.add_argument("--templates", "-K", type=int, default=20)
    p.add_argument("--reads", "-N", type=int, default=100)
    p.add_argument("--length", "-L", type=int, default=30)
    p.add_argument("--error-rates", type=_floats, default=[0.10])
    p.add_argument("--sims", type=int, default=20)
    p.add_argument("--seed", type=int, required=True)
    p.add_argument("--full-scale", action="store_true", help="K=50, N=250, p_e=.01,.05,.10,.20; 100 sims")
    p.add_argument("-o", "--out", default="-")
    p.set_defaults(func=cmd_fig5)

    p = sub.add_parser("prior", parents=[common], help="partition-function sweeps of the clustering prior")
    p.add_argument("--mode", choices=["all", "zfun", "blue-fraction", "cluster-moments", "critical-x"], default="all")
    p.add_argument("--x", help="comma-separated x values")
    p.add_argument("--x-range", nargs=3, metavar=("START", "STOP", "NUM"))
    p.add_argument("--log", action="store_true", help="geometric spacing for --x-range")
    p.add_argument("--n", "-N", type=_ints, required=True, help="comma-separated point counts")
    p.add_argument("-o", "--out", default="-")
    p.set_defaults(func=cmd_prior)

    p = sub.add_parser("replay", help="re-run the command recorded in a manifest")
    p.add_argument("manifest_file")
    p.set_defaults(func=cmd_replay)
    return parser


def main(argv=None) -> int:
    argv = list(sys.argv[1:] if argv is None else argv)
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return int(exc.code or 0)
    logging.basicConfig(level=logging.DEBUG if getattr(args, "verbose", False) else logging.WARNING,
                        format="%(levelname)s %(name)s: %(message)s")
    try:
        return args.func(args, argv)
    except (InputError, UsageError) as exc:
        print(f"transprop: error: {exc}", file=sys.stderr)
        return EXIT_INPUT
    except (OSError, ValueError) as exc:
        print(f"transprop: error: {exc}", file=sys.stderr)
        return EXIT_INPUT
    except AssertionError as exc:
        print(f"transprop: internal error: {exc}", file=sys.stderr)
        return EXIT_INTERNAL


if __name__ == "__main__":
    sys.exit(main())
