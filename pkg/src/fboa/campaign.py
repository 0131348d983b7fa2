"""Experiment grids: landscape sets, batches of runs and their summaries."""

from __future__ import annotations

import logging
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass

import numpy as np

from .analysis import CampaignStats, ert_or_none
from .eda import run_boa, run_fboa, run_seed
from .nk import generate_instance

log = logging.getLogger(__name__)

N_VALUES = (10, 12, 14, 16, 18)
K_VALUES = (2, 4, 6, 8, 10, 12, 14, 16)
LANDSCAPES = 10
RUNS = 100


@dataclass(frozen=True, order=True)
class CellKey:
    n: int
    k: int
    landscape: int

    @property
    def name(self):
        return f"N{self.n}_K{self.k}_L{self.landscape}"


def instance_seed(campaign_seed, n, k, landscape):
    """Per-landscape seed, a pure function of the campaign seed and grid position."""
    seq = np.random.SeedSequence([int(campaign_seed), n, k, landscape])
    return int(seq.generate_state(1, dtype=np.uint32)[0])


def feasible_cells(n_values, k_values):
    cells = []
    for n in n_values:
        for k in k_values:
            if 1 <= k <= n - 1:
                cells.append((n, k))
            else:
                log.warning("skipping infeasible cell N=%d K=%d (need 1 <= K <= N-1)", n, k)
    return cells


def generate_landscapes(n_values, k_values, landscapes, campaign_seed, with_optimum=True):
    """``{CellKey: NkInstance}`` for every feasible grid cell."""
    out = {}
    for n, k in feasible_cells(n_values, k_values):
        for i in range(landscapes):
            inst = generate_instance(n, k, instance_seed(campaign_seed, n, k, i))
            out[CellKey(n, k, i)] = inst.with_optimum() if with_optimum else inst
    return out


def run_landscape(inst, cfg, runs, pattern=None):
    """``runs`` traces on one landscape with seeds ``cfg.seed + i``."""
    traces = []
    for i in range(runs):
        run_cfg = cfg.replace(seed=run_seed(cfg.seed, i))
        if pattern is None:
            traces.append(run_boa(inst, run_cfg))
        else:
            traces.append(run_fboa(inst, run_cfg, pattern))
    return traces


def _task(args):
    inst, cfg, pattern = args
    return run_boa(inst, cfg) if pattern is None else run_fboa(inst, cfg, pattern)


def run_campaign(instances, cfg, runs, pattern=None, jobs=1):
    """Run every landscape; returns ``{CellKey: [RunTrace, ...]}`` in key order."""
    keys = sorted(instances)
    if jobs <= 1:
        return {key: run_landscape(instances[key], cfg, runs, pattern) for key in keys}
    tasks = [
        (instances[key], cfg.replace(seed=run_seed(cfg.seed, i)), pattern)
        for key in keys
        for i in range(runs)
    ]
    with ProcessPoolExecutor(max_workers=jobs) as pool:
        flat = list(pool.map(_task, tasks, chunksize=max(1, len(tasks) // (4 * jobs))))
    return {key: flat[j * runs:(j + 1) * runs] for j, key in enumerate(keys)}


def shd_vectors(traces):
    """SHD series of the runs that made at least one model adjustment."""
    return [t.shd_series for t in traces if t.shd_series]


def landscape_stats(results, cfg, pattern=None):
    return {
        key: CampaignStats.from_traces(traces, cfg, key.n, pattern)
        for key, traces in results.items()
    }


def cell_stats(per_landscape):
    """Pool landscape summaries into one summary per (N, K)."""
    groups = {}
    for key, st in sorted(per_landscape.items()):
        groups.setdefault((key.n, key.k), []).append(st)
    return {cell: CampaignStats.pooled(parts) for cell, parts in groups.items()}


def summary_row(algorithm, st, **ids):
    rep = ert_or_none(st)
    row = dict(algorithm=algorithm, **ids)
    row.update(
        t_s=st.t_s,
        t_total=st.t_total,
        success_rate=st.success_rate,
        mean_gap=st.mean_gap,
        mean_T=float(np.mean(st.success_T)) if st.t_s else None,
        mean_U=float(np.mean(st.success_U)) if st.t_s else None,
        fail_U=st.fail_u,
        mu=st.mu,
        t_max=st.t_max,
        E_T=rep.e_t if rep else None,
        E_U=rep.e_u if rep else None,
        ert=rep.ert if rep else None,
        flag="" if rep else "no_success",
    )
    return row


def run_row(algorithm, key, run_index, trace):
    return dict(
        algorithm=algorithm,
        n=key.n,
        k=key.k,
        landscape=key.landscape,
        run=run_index,
        seed=trace.seed,
        success=int(trace.success),
        evals_used=trace.evals_used,
        iterations=trace.iterations,
        adjustments=trace.n_adjustments,
        best_fitness=trace.best_fitness,
        optimum=trace.optimum,
        gap=trace.gap,
    )

