import math

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from fboa.analysis import (
    CampaignStats,
    LogLogRegressor,
    NoSuccessError,
    RegressionFit,
    curve_distance,
    ert,
    ert_from_expectations,
    expected_adjustments,
    expected_evals,
    k2_cost,
    loglog_regression,
    mcnemar,
)
from fboa.eda import EdaConfig, run_boa, run_fboa
from fboa.nk import generate_instance
from fboa.pattern import UpdatePattern


def stats(t_s, t_total, T, U, fail_u=499.0, t_max=50000, mu=100, n=10):
    return CampaignStats(t_s, t_total, list(T), list(U), fail_u, t_max, mu, n)


def test_expected_evals_all_successful():
    assert expected_evals(stats(3, 3, [100] * 3, [0] * 3)) == 100


def test_expected_evals_half_successful():
    assert expected_evals(stats(1, 2, [1000], [9])) == 51000


def test_no_success_flagged():
    st0 = stats(0, 5, [], [])
    with pytest.raises(NoSuccessError):
        expected_evals(st0)
    with pytest.raises(NoSuccessError):
        ert(st0)


def test_expected_adjustments_boa():
    assert expected_adjustments(stats(4, 4, [800] * 4, [7] * 4)) == 7


def test_expected_adjustments_fboa_half_pattern():
    fail_u = UpdatePattern.constant(0.5, 500).cumulative(500)
    assert fail_u == 250
    assert expected_adjustments(stats(1, 2, [500], [4], fail_u=fail_u)) == 254


def test_ert_arithmetic():
    assert ert_from_expectations(100, 1, mu=100, n=10) == 320000
    assert ert_from_expectations(0, 0, mu=100, n=10) == 0
    assert k2_cost(10) == 220000


def test_ert_identity_holds():
    st1 = stats(3, 7, [300, 900, 4000], [2, 8, 39], n=14)
    rep = ert(st1)
    assert rep.ert == st1.mu * st1.n * rep.e_t + 2 * (14**5 + 14**4) * rep.e_u


def test_ert_monotone_in_adjustments():
    assert ert_from_expectations(500, 3, 100, 12) < ert_from_expectations(500, 4, 100, 12)


@settings(max_examples=100)
@given(t_total=st.integers(2, 200), data=st.data())
def test_expected_evals_decreases_with_success_rate(t_total, data):
    t_s = data.draw(st.integers(1, t_total - 1))
    T = [1000] * (t_s + 1)
    lo = expected_evals(stats(t_s, t_total, T[:t_s], [1] * t_s))
    hi = expected_evals(stats(t_s + 1, t_total, T, [1] * (t_s + 1)))
    assert hi < lo


def test_all_ones_fboa_accounting_equals_boa():
    inst = generate_instance(12, 5, 4).with_optimum()
    cfg = EdaConfig(max_evals=3000)
    pat = UpdatePattern.constant(1.0, 500)
    boa = [run_boa(inst, cfg.replace(seed=s)) for s in range(6)]
    fboa = [run_fboa(inst, cfg.replace(seed=s), pat) for s in range(6)]
    sb = CampaignStats.from_traces(boa, cfg, 12)
    sf = CampaignStats.from_traces(fboa, cfg, 12, pat)
    assert sb.fail_u == sf.fail_u == cfg.max_iterations
    assert sb == sf


def test_pooled_stats():
    a = stats(1, 2, [100], [1])
    b = stats(2, 3, [300, 500], [3, 5])
    p = CampaignStats.pooled([a, b])
    assert (p.t_s, p.t_total) == (3, 5)
    # p = 3/5, so the failure weight is (2/5)/(3/5) = 2/3
    assert expected_evals(p) == pytest.approx(2 / 3 * 50000 + 300)


def test_regression_exact_power_law():
    ks = [2, 4, 6, 8, 10]
    fit = loglog_regression([(k, 5.0 * k**1.7) for k in ks])
    assert fit.beta1 == pytest.approx(1.7)
    assert fit.beta0 == pytest.approx(math.log(5.0))
    assert fit.r2 == pytest.approx(1.0)


def test_regression_two_points():
    assert loglog_regression([(2, 10.0), (3, 50.0)]).r2 == pytest.approx(1.0)


@pytest.mark.parametrize("points", [[(2, 1.0)], [(2, 1.0), (2, 3.0)], [(2, -1.0), (3, 2.0)]])
def test_regression_rejects(points):
    with pytest.raises(ValueError):
        loglog_regression(points)


@settings(max_examples=60)
@given(scale=st.floats(1e-3, 1e6), seed=st.integers(0, 1000))
def test_regression_r2_scale_invariant(scale, seed):
    rng = np.random.default_rng(seed)
    ks = np.arange(2, 17, 2)
    y = np.exp(rng.normal(size=ks.size)) * ks**2
    a = loglog_regression(zip(ks, y))
    b = loglog_regression(zip(ks, y * scale))
    assert b.r2 == pytest.approx(a.r2, abs=1e-9)
    assert b.beta1 == pytest.approx(a.beta1, abs=1e-9)


def test_curve_distance():
    fit = RegressionFit(1.0, 2.0, 1.0)
    ks = [2, 6, 10]
    assert curve_distance(fit, fit, ks) == pytest.approx(1.0)
    shifted = RegressionFit(1.0 + math.log(3), 2.0, 1.0)
    assert curve_distance(shifted, fit, ks) == pytest.approx(3.0)
    with pytest.raises(ValueError):
        curve_distance(fit, fit, [])


@settings(max_examples=60)
@given(st.floats(-5, 5), st.floats(-3, 3), st.floats(-5, 5), st.floats(-3, 3))
def test_curve_distance_reciprocal(a0, a1, b0, b1):
    fa, fb = RegressionFit(a0, a1, 1.0), RegressionFit(b0, b1, 1.0)
    ks = [2, 4, 8]
    assert curve_distance(fa, fb, ks) * curve_distance(fb, fa, ks) >= 1.0 - 1e-9
    # one grid point: the ratio is exactly reciprocal
    assert curve_distance(fa, fb, [5]) * curve_distance(fb, fa, [5]) == pytest.approx(1.0)


def test_mcnemar_examples():
    assert mcnemar([(True, True), (False, False)]) == (0.0, 1.0)
    stat, p = mcnemar([(True, False)] * 10 + [(True, True)] * 5)
    assert stat == pytest.approx(8.1)
    assert 0 < p < 0.01
    stat, p = mcnemar([(True, False)] * 6 + [(False, True)] * 6)
    assert stat <= 0.1 * 12 and p > 0.5


@settings(max_examples=100)
@given(st.lists(st.tuples(st.booleans(), st.booleans()), min_size=1, max_size=50))
def test_mcnemar_symmetric(pairs):
    swapped = [(b, a) for a, b in pairs]
    assert mcnemar(pairs) == mcnemar(swapped)


def test_loglog_regressor_estimator():
    ks = np.array([2, 4, 6, 8, 10, 12])
    y = 3.0 * ks**2.2
    est = LogLogRegressor().fit(ks.reshape(-1, 1), y)
    assert est.coef_ == pytest.approx(2.2)
    np.testing.assert_allclose(est.predict(ks.reshape(-1, 1)), y, rtol=1e-9)
    assert est.score(ks.reshape(-1, 1), y) == pytest.approx(1.0)
