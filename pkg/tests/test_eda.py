import numpy as np
import pytest

from fboa.eda import BOA, FBOA, EdaConfig, RunTrace, run_boa, run_fboa, trace_shd_campaign, truncation_select
from fboa.nk import generate_instance
from fboa.pattern import UpdatePattern, default_pattern


@pytest.fixture(scope="module")
def hard():
    return generate_instance(12, 6, 31).with_optimum()


@pytest.fixture(scope="module")
def easy():
    return generate_instance(10, 2, 8).with_optimum()


def test_config_validation():
    with pytest.raises(ValueError):
        EdaConfig(mu=10, lam=20)
    with pytest.raises(ValueError):
        EdaConfig(mu=100, max_evals=50)
    with pytest.raises(ValueError):
        EdaConfig(k2_order="reverse")
    assert EdaConfig().max_iterations == 499


def test_truncation_ties_prefer_smaller_bitstring():
    S = np.array([[1, 1], [0, 1], [1, 0], [0, 0]])
    F = np.array([1.0, 1.0, 2.0, 0.5])
    assert truncation_select(S, F, 3).tolist() == [2, 1, 0]


def _check_trace(tr, cfg):
    assert len(tr.adjustments) == tr.iterations
    assert tr.evals_used == (tr.iterations + 1) * cfg.mu
    assert tr.evals_used <= cfg.max_evals + cfg.mu
    assert len(tr.best_fitness_series) == tr.iterations + 1
    assert np.all(np.diff(tr.best_fitness_series) >= 0)
    assert tr.best_fitness == tr.best_fitness_series[-1]


def test_boa_trace_invariants(hard):
    cfg = EdaConfig(max_evals=3000, seed=4)
    tr = run_boa(hard, cfg)
    _check_trace(tr, cfg)
    assert len(tr.shd_series) == tr.iterations
    assert all(tr.adjustments)


def test_boa_single_generation_budget(hard):
    cfg = EdaConfig(max_evals=100, seed=1)
    tr = run_boa(hard, cfg)
    assert tr.evals_used == 100
    assert tr.iterations == 0 and tr.adjustments == [] and tr.shd_series == []
    _check_trace(tr, cfg)


def test_boa_deterministic(hard):
    cfg = EdaConfig(max_evals=5000, seed=12)
    assert run_boa(hard, cfg) == run_boa(hard, cfg)


def test_boa_success_means_optimum(easy):
    tr = run_boa(easy, EdaConfig(seed=0))
    assert tr.success
    assert abs(tr.best_fitness - easy.optimum[0]) <= 1e-12
    assert tr.gap == 0.0


def test_boa_gap_rule(hard):
    strict = run_boa(hard, EdaConfig(seed=3, max_evals=2000))
    loose = run_boa(hard, EdaConfig(seed=3, max_evals=2000, gap_eps=0.5))
    assert loose.success and loose.gap <= 0.5
    assert loose.evals_used <= strict.evals_used


def test_boa_random_order(hard):
    tr = run_boa(hard, EdaConfig(seed=2, max_evals=2000, k2_order="random"))
    _check_trace(tr, EdaConfig(max_evals=2000))


def test_fboa_all_ones_equals_boa(hard):
    cfg = EdaConfig(seed=5, max_evals=4000)
    a = run_boa(hard, cfg)
    b = run_fboa(hard, cfg, UpdatePattern.constant(1.0, 3))
    b.algorithm = "boa"
    assert a == b


def test_fboa_all_zeros_never_rebuilds(hard):
    cfg = EdaConfig(seed=5, max_evals=3000)
    tr = run_fboa(hard, cfg, UpdatePattern.constant(0.0, 10))
    assert tr.iterations > 0
    assert not any(tr.adjustments)
    assert tr.shd_series == []
    _check_trace(tr, cfg)


def test_fboa_rejects_empty_pattern(hard):
    with pytest.raises(ValueError):
        run_fboa(hard, EdaConfig(), [])


def test_fboa_rebuild_count_matches_schedule():
    """Realised rebuilds against the Poisson-binomial mean of the schedule."""
    pattern = default_pattern()
    realised, mean, var = 0, 0.0, 0.0
    for i in range(4):
        inst = generate_instance(18, 8, 500 + i).with_optimum()
        for seed in range(3):
            tr = run_fboa(inst, EdaConfig(seed=seed), pattern)
            p = np.array([pattern.at(t) for t in range(1, tr.iterations + 1)])
            realised += tr.n_adjustments
            mean += p.sum()
            var += (p * (1 - p)).sum()
    assert abs(realised - mean) <= 3 * np.sqrt(var)


def test_trace_campaign_seeds_and_lengths(easy):
    cfg = EdaConfig(seed=100)
    traces = trace_shd_campaign(easy, cfg, runs=5)
    assert [t.seed for t in traces] == [100, 101, 102, 103, 104]
    for t in traces:
        assert len(t.shd_series) == t.iterations
        assert t.iterations <= cfg.max_evals // cfg.mu


def test_trace_json_round_trip(tmp_path, hard):
    tr = run_boa(hard, EdaConfig(seed=1, max_evals=1000))
    tr.dump(tmp_path / "t.json")
    assert RunTrace.load(tmp_path / "t.json") == tr


def test_estimators(easy):
    from sklearn.base import clone

    boa = BOA(random_state=3)
    assert clone(boa).get_params() == boa.get_params()
    boa.fit(easy)
    assert boa.success_ and boa.score() == boa.trace_.best_fitness
    fboa = FBOA(pattern=UpdatePattern.constant(1.0), random_state=3).fit(easy)
    assert fboa.trace_.adjustments == boa.trace_.adjustments
    assert "pattern" in fboa.get_params()
    with pytest.raises(ValueError):
        FBOA().fit(easy)
