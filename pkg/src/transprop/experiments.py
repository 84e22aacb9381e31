"""Simulation grids: template-count recovery and per-distance edge errors."""

from __future__ import annotations

import math
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass

import numpy as np

from .models import BinaryReadModel, score_matrix_from_reads
from .simulator import SimConfig, edge_errors, evaluate, simulate
from .solver import SolverConfig, no_prior_solution, solve

# scores need a non-zero error rate; noiseless simulations are scored with this
MIN_MODEL_ERROR = 1e-6


def scoring_model(word_length: int, error_rate: float) -> BinaryReadModel:
    return BinaryReadModel(word_length, max(error_rate, MIN_MODEL_ERROR))


@dataclass(frozen=True)
class Cell:
    templates: int
    error_rate: float
    sim: int
    seed: int
    reads: int
    word_length: int
    solver: SolverConfig


def _run_map(fn, cells, workers):
    if workers and workers > 1:
        with ProcessPoolExecutor(max_workers=workers) as pool:
            return list(pool.map(fn, cells))
    return [fn(c) for c in cells]


def count_cell(cell: Cell) -> dict:
    data = simulate(SimConfig(cell.templates, cell.word_length, cell.reads, cell.error_rate, cell.seed))
    scores = score_matrix_from_reads(scoring_model(cell.word_length, cell.error_rate), data.reads)
    result = solve(scores, cell.solver)
    report = evaluate(result, data.truth)
    return {
        "K": cell.templates,
        "p_e": cell.error_rate,
        "sim": cell.sim,
        "seed": cell.seed,
        "reads": cell.reads,
        "sampled_templates": data.sampled_templates,
        "recovered_clusters": result.partition.n_blocks,
        "misclassified_edges": report.misclassified_edges,
        "violations": result.violations.count,
        "iterations": result.iterations,
        "converged": int(result.converged),
    }


def template_count_grid(templates, error_rates, word_length=30, reads_per_template=10, sims=100,
                        seed=0, solver=None, workers=1):
    """One row per (K, p_e, sim); simulation ``s`` uses seed ``seed + s``."""
    solver = solver or SolverConfig()
    cells = [
        Cell(k, pe, s, seed + s, k * reads_per_template, word_length, solver)
        for k in templates
        for pe in error_rates
        for s in range(sims)
    ]
    return _run_map(count_cell, cells, workers)


def summarize_counts(rows) -> list[dict]:
    """Mean and standard deviation of each numeric column per (K, p_e)."""
    groups: dict = {}
    for r in rows:
        groups.setdefault((r["K"], r["p_e"]), []).append(r)
    out = []
    cols = ("sampled_templates", "recovered_clusters", "misclassified_edges", "violations", "iterations", "converged")
    for (k, pe), rs in groups.items():
        for stat, fn in (("mean", np.mean), ("sd", lambda v: np.std(v, ddof=1) if len(v) > 1 else 0.0)):
            row = {"K": k, "p_e": pe, "sims": len(rs), "stat": stat}
            for c in cols:
                row[c] = float(fn([r[c] for r in rs]))
            out.append(row)
    return out


def distance_cell(cell: Cell) -> dict:
    data = simulate(SimConfig(cell.templates, cell.word_length, cell.reads, cell.error_rate, cell.seed))
    scores = score_matrix_from_reads(scoring_model(cell.word_length, cell.error_rate), data.reads)
    dist = data.reads.hamming_matrix()
    result = solve(scores, cell.solver)
    tp = evaluate(result, data.truth, dist)
    baseline = edge_errors(no_prior_solution(scores).h == 0, data.truth, dist)
    return {
        "p_e": cell.error_rate,
        "sim": cell.sim,
        "pairs": tp.pairs_by_distance,
        "tp": tp.misclassified_by_distance,
        "baseline": baseline.misclassified_by_distance,
        "violations": result.violations.count,
        "converged": result.converged,
    }


def edge_error_grid(templates=50, word_length=30, reads=250, error_rates=(0.01, 0.05, 0.10, 0.20), sims=100,
                    seed=0, solver=None, workers=1):
    """Mean incorrect-edge counts per Hamming distance, per error rate.

    Returns ``(rows, per_sim)``: one aggregate row per (p_e, d) with the
    same-template and different-template likelihoods of ``d``, and the raw
    per-simulation dictionaries.
    """
    solver = solver or SolverConfig()
    cells = [Cell(templates, pe, s, seed + s, reads, word_length, solver) for pe in error_rates for s in range(sims)]
    per_sim = _run_map(distance_cell, cells, workers)
    rows = []
    for pe in error_rates:
        sims_pe = [r for r in per_sim if r["p_e"] == pe]
        x = 2 * pe * (1 - pe)
        for d in range(word_length + 1):
            comb = math.comb(word_length, d)
            rows.append({
                "p_e": pe,
                "d": d,
                "f0": comb * x**d * (1 - x) ** (word_length - d),
                "f1": comb / 2.0**word_length,
                "pairs_mean": float(np.mean([r["pairs"].get(d, 0) for r in sims_pe])),
                "tp_errors_mean": float(np.mean([r["tp"].get(d, 0) for r in sims_pe])),
                "baseline_errors_mean": float(np.mean([r["baseline"].get(d, 0) for r in sims_pe])),
            })
    return rows, per_sim
