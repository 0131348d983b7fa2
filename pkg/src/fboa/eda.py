"""The BOA loop and its update-skipping variant FBOA."""

from __future__ import annotations

import json
from dataclasses import asdict, dataclass
from pathlib import Path

import numpy as np
from sklearn.base import BaseEstimator
from sklearn.utils.validation import check_is_fitted

from . import bnet
from .nk import NkInstance, Solution, _evaluate_unchecked, relative_gap
from .pattern import UpdatePattern
from .validation import bits_to_int, check_count

K2_ORDERS = ("natural", "random")


@dataclass(frozen=True)
class EdaConfig:
    """Run parameters. ``gap_eps=None`` means success requires the exact optimum."""

    mu: int = 100
    lam: int = 40
    max_evals: int = 50000
    gap_eps: float | None = None
    seed: int = 0
    k2_order: str = "natural"
    max_parents: int | None = None

    def __post_init__(self):
        check_count(self.mu, "mu", 1)
        check_count(self.lam, "lam", 1)
        check_count(self.max_evals, "max_evals", 1)
        if self.lam > self.mu:
            raise ValueError(f"lam ({self.lam}) must not exceed mu ({self.mu})")
        if self.max_evals < self.mu:
            raise ValueError(f"max_evals ({self.max_evals}) must be at least mu ({self.mu})")
        if self.k2_order not in K2_ORDERS:
            raise ValueError(f"k2_order must be one of {K2_ORDERS}")
        if self.gap_eps is not None and not 0 <= self.gap_eps < 1:
            raise ValueError("gap_eps must lie in [0, 1)")
        if self.max_parents is not None:
            check_count(self.max_parents, "max_parents")

    @property
    def max_iterations(self):
        """Model-adjustment decisions in a run that spends the whole budget."""
        return (self.max_evals - self.mu) // self.mu

    def replace(self, **changes):
        return EdaConfig(**{**asdict(self), **changes})


@dataclass(eq=True)
class RunTrace:
    """Record of one run.

    ``iterations`` counts adjustment decisions; every run also pays for one
    final sampled generation after its last decision, hence
    ``evals_used == (iterations + 1) * mu``. ``best_fitness_series`` holds
    the best-so-far value after each sampled generation.
    """

    algorithm: str
    seed: int
    iterations: int
    evals_used: int
    adjustments: list
    shd_series: list
    best_fitness_series: list
    success: bool
    best_bits: list
    best_fitness: float
    optimum: float | None = None

    @property
    def best(self):
        return Solution(np.asarray(self.best_bits, dtype=np.uint8), self.best_fitness)

    @property
    def n_adjustments(self):
        return int(sum(self.adjustments))

    @property
    def gap(self):
        if self.optimum is None:
            return None
        return relative_gap(self.optimum, self.best_fitness)

    def to_dict(self):
        return asdict(self)

    @classmethod
    def from_dict(cls, doc):
        return cls(**doc)

    def dump(self, path):
        Path(path).write_text(json.dumps(self.to_dict()) + "\n", encoding="utf-8")

    @classmethod
    def load(cls, path):
        return cls.from_dict(json.loads(Path(path).read_text(encoding="utf-8")))


def _require_optimum(inst):
    if inst.optimum is None:
        inst = inst.with_optimum()
    return inst.optimum[0]


def _is_success(optimum, best, gap_eps):
    if gap_eps is None:
        return best >= optimum - 1e-12 * max(1.0, abs(optimum))
    return relative_gap(optimum, min(best, optimum)) <= gap_eps


def truncation_select(S, F, lam):
    """Indices of the ``lam`` fittest rows; equal fitness goes to the smaller bitstring."""
    ranks = np.lexsort((bits_to_int(S), -F))
    return ranks[:lam]


def _run(inst, cfg, pattern, algorithm):
    if not isinstance(inst, NkInstance):
        raise TypeError("inst must be an NkInstance")
    optimum = _require_optimum(inst)
    model_seq, decision_seq = np.random.SeedSequence(cfg.seed).spawn(2)
    rng = np.random.default_rng(model_seq)
    # FBOA decisions use their own stream, so an all-ones schedule replays BOA exactly
    decide = np.random.default_rng(decision_seq)

    n = inst.n
    order = tuple(range(n)) if cfg.k2_order == "natural" else tuple(int(v) for v in rng.permutation(n))
    model = bnet.BayesNet.uniform(n, order)

    evals = 0
    t = 0
    adjustments, shd_series, best_series = [], [], []
    best_bits, best_fit = None, -np.inf
    while True:
        S = bnet.sample(model, cfg.mu, rng)
        F = _evaluate_unchecked(inst, S)
        evals += cfg.mu
        top = truncation_select(S, F, 1)[0]
        if F[top] > best_fit:
            best_fit, best_bits = float(F[top]), S[top].copy()
        best_series.append(best_fit)
        success = _is_success(optimum, best_fit, cfg.gap_eps)
        if success or evals + cfg.mu > cfg.max_evals:
            break
        P = S[truncation_select(S, F, cfg.lam)]
        t += 1
        if pattern is None or decide.random() < pattern.at(t):
            dag = bnet.k2_learn(P, order, cfg.max_parents)
            shd_series.append(bnet.shd(model.structure, dag))
            model = bnet.BayesNet(dag, bnet.fit_params(dag, P))
            adjustments.append(True)
        else:
            adjustments.append(False)

    return RunTrace(
        algorithm=algorithm,
        seed=cfg.seed,
        iterations=t,
        evals_used=evals,
        adjustments=adjustments,
        shd_series=shd_series,
        best_fitness_series=best_series,
        success=bool(success),
        best_bits=[int(b) for b in best_bits],
        best_fitness=best_fit,
        optimum=float(optimum),
    )


def run_boa(inst, cfg):
    """One BOA run: the model is relearned with K2 after every selection."""
    return _run(inst, cfg, None, "boa")


def run_fboa(inst, cfg, pattern):
    """One FBOA run: at iteration t the model is relearned with probability p_t."""
    if not isinstance(pattern, UpdatePattern):
        pattern = UpdatePattern(pattern)
    return _run(inst, cfg, pattern, "fboa")


def run_seed(campaign_seed, run_index):
    return campaign_seed + run_index


def trace_shd_campaign(instances, cfg, runs):
    """Run BOA ``runs`` times per instance with seeds ``cfg.seed + i``."""
    runs = check_count(runs, "runs", 1)
    if isinstance(instances, NkInstance):
        instances = [instances]
    traces = []
    for inst in instances:
        if inst.optimum is None:
            inst = inst.with_optimum()
        for i in range(runs):
            traces.append(run_boa(inst, cfg.replace(seed=run_seed(cfg.seed, i))))
    return traces


class BOA(BaseEstimator):
    """Bayesian Optimisation Algorithm on an NK-landscape.

    ``fit`` takes an :class:`~fboa.nk.NkInstance` in place of a data matrix
    and performs one run.

    Attributes
    ----------
    trace_ : RunTrace
    best_ : Solution
    success_ : bool
    """

    def __init__(self, mu=100, lam=40, max_evals=50000, gap_eps=None,
                 k2_order="natural", max_parents=None, random_state=0):
        self.mu = mu
        self.lam = lam
        self.max_evals = max_evals
        self.gap_eps = gap_eps
        self.k2_order = k2_order
        self.max_parents = max_parents
        self.random_state = random_state

    def _config(self):
        return EdaConfig(self.mu, self.lam, self.max_evals, self.gap_eps,
                         int(self.random_state), self.k2_order, self.max_parents)

    def _run(self, inst, cfg):
        return run_boa(inst, cfg)

    def fit(self, X, y=None):
        self.trace_ = self._run(X, self._config())
        self.best_ = self.trace_.best
        self.success_ = self.trace_.success
        return self

    def score(self, X=None, y=None):
        """Best fitness found by the last run."""
        check_is_fitted(self, "trace_")
        return self.trace_.best_fitness


class FBOA(BOA):
    """BOA that rebuilds its network only with the scheduled probability."""

    def __init__(self, pattern=None, mu=100, lam=40, max_evals=50000, gap_eps=None,
                 k2_order="natural", max_parents=None, random_state=0):
        super().__init__(mu, lam, max_evals, gap_eps, k2_order, max_parents, random_state)
        self.pattern = pattern

    def _run(self, inst, cfg):
        if self.pattern is None:
            raise ValueError("FBOA needs an update pattern")
        return run_fboa(inst, cfg, self.pattern)
