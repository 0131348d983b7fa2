"""Expected-runtime estimation, log-log regression and paired success tests."""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np
from scipy import stats
from sklearn.base import BaseEstimator
from sklearn.utils.validation import check_array, check_is_fitted


class NoSuccessError(ValueError):
    """Raised when a campaign has no successful run, so E[T] is undefined."""


def k2_cost(n):
    """Elementary operations charged for one K2 model build on n variables."""
    return 2 * (n**5 + n**4)


@dataclass
class CampaignStats:
    """Success counts and per-run costs of one batch of runs.

    ``fail_u`` is the adjustment count charged to a run that spends the
    whole budget: the iteration budget for BOA, the summed schedule
    probabilities over that budget for FBOA.
    """

    t_s: int
    t_total: int
    success_T: list
    success_U: list
    fail_u: float
    t_max: int
    mu: int
    n: int
    gaps: list = field(default_factory=list)

    def __post_init__(self):
        if not 0 <= self.t_s <= self.t_total:
            raise ValueError(f"need 0 <= t_s <= t_total, got {self.t_s}/{self.t_total}")
        if len(self.success_T) != self.t_s or len(self.success_U) != self.t_s:
            raise ValueError("success_T and success_U need one entry per successful run")
        if any(t > self.t_max for t in self.success_T):
            raise ValueError("a successful run cannot exceed the budget")

    @property
    def success_rate(self):
        return self.t_s / self.t_total if self.t_total else 0.0

    @property
    def mean_gap(self):
        return float(np.mean(self.gaps)) if self.gaps else float("nan")

    @classmethod
    def from_traces(cls, traces, cfg, n, pattern=None):
        """Summarise traces; ``pattern`` is the FBOA schedule, ``None`` for BOA."""
        traces = list(traces)
        ok = [t for t in traces if t.success]
        if pattern is None:
            success_u = [t.iterations for t in ok]
            fail_u = float(cfg.max_iterations)
        else:
            success_u = [t.n_adjustments for t in ok]
            fail_u = pattern.cumulative(cfg.max_iterations)
        return cls(
            t_s=len(ok),
            t_total=len(traces),
            success_T=[t.evals_used for t in ok],
            success_U=success_u,
            fail_u=fail_u,
            t_max=cfg.max_evals,
            mu=cfg.mu,
            n=n,
            gaps=[t.gap for t in traces],
        )

    @classmethod
    def pooled(cls, parts):
        parts = list(parts)
        head = parts[0]
        for p in parts[1:]:
            if (p.t_max, p.mu, p.n, p.fail_u) != (head.t_max, head.mu, head.n, head.fail_u):
                raise ValueError("cannot pool campaigns run under different settings")
        return cls(
            t_s=sum(p.t_s for p in parts),
            t_total=sum(p.t_total for p in parts),
            success_T=[t for p in parts for t in p.success_T],
            success_U=[u for p in parts for u in p.success_U],
            fail_u=head.fail_u,
            t_max=head.t_max,
            mu=head.mu,
            n=head.n,
            gaps=[g for p in parts for g in p.gaps],
        )


def _failure_weight(st):
    if st.t_s < 1:
        raise NoSuccessError(f"no successful run among {st.t_total}")
    p_hat = st.t_s / st.t_total
    return (1.0 - p_hat) / p_hat


def expected_evals(st):
    """E[T] = (1 - p)/p * T_max + mean T_i over successful runs."""
    return _failure_weight(st) * st.t_max + float(np.mean(st.success_T))


def expected_adjustments(st):
    """E[U] = (1 - p)/p * U_f + mean U_i over successful runs."""
    return _failure_weight(st) * st.fail_u + float(np.mean(st.success_U))


@dataclass(frozen=True)
class ErtReport:
    e_t: float
    e_u: float
    ert: float


def ert_from_expectations(e_t, e_u, mu, n):
    return mu * n * e_t + k2_cost(n) * e_u


def ert(st):
    """Estimated runtime in elementary operations."""
    e_t = expected_evals(st)
    e_u = expected_adjustments(st)
    return ErtReport(e_t, e_u, ert_from_expectations(e_t, e_u, st.mu, st.n))


@dataclass(frozen=True)
class RegressionFit:
    """log(ert) = beta0 + beta1 * log(K)."""

    beta0: float
    beta1: float
    r2: float

    def predict_log(self, k):
        return self.beta0 + self.beta1 * np.log(np.asarray(k, dtype=np.float64))

    def predict(self, k):
        return np.exp(self.predict_log(k))


def loglog_regression(points):
    """Ordinary least squares of log(ert) on log(K)."""
    pts = np.asarray(list(points), dtype=np.float64)
    if pts.ndim != 2 or pts.shape[1] != 2 or pts.shape[0] < 2:
        raise ValueError("need at least two (K, ert) points")
    if np.any(pts <= 0) or not np.all(np.isfinite(pts)):
        raise ValueError("K and ert must be finite and positive")
    x, y = np.log(pts[:, 0]), np.log(pts[:, 1])
    xc = x - x.mean()
    sxx = float(xc @ xc)
    if sxx == 0.0:
        raise ValueError("all K values are equal; slope is undefined")
    beta1 = float(xc @ (y - y.mean())) / sxx
    beta0 = float(y.mean() - beta1 * x.mean())
    resid = y - (beta0 + beta1 * x)
    ss_res = float(resid @ resid)
    ss_tot = float(((y - y.mean()) ** 2).sum())
    r2 = 1.0 if ss_tot == 0.0 else min(1.0, max(0.0, 1.0 - ss_res / ss_tot))
    return RegressionFit(beta0, beta1, r2)


def curve_distance(fit_a, fit_b, k_values):
    """Mean ratio of the back-transformed curves a/b over ``k_values``."""
    k = np.asarray(list(k_values), dtype=np.float64)
    if k.size == 0:
        raise ValueError("k grid is empty")
    return float(np.mean(np.exp(fit_a.predict_log(k) - fit_b.predict_log(k))))


def mcnemar(paired):
    """Continuity-corrected McNemar test on paired success flags.

    Returns ``(statistic, p_value)``; with no discordant pairs the result
    is ``(0.0, 1.0)``.
    """
    pairs = [(bool(a), bool(b)) for a, b in paired]
    if not pairs:
        raise ValueError("need at least one pair")
    b = sum(1 for a, c in pairs if a and not c)
    c = sum(1 for a, d in pairs if d and not a)
    if b + c == 0:
        return 0.0, 1.0
    statistic = max(abs(b - c) - 1, 0) ** 2 / (b + c)
    return float(statistic), float(stats.chi2.sf(statistic, df=1))


class LogLogRegressor(BaseEstimator):
    """Power-law fit ``y = exp(intercept_) * X**coef_`` by OLS in log space.

    Attributes
    ----------
    coef_ : float
    intercept_ : float
    r2_ : float
        Coefficient of determination of the log-space fit.
    """

    def fit(self, X, y):
        X = check_array(X, ensure_2d=False).ravel()
        y = np.asarray(y, dtype=np.float64).ravel()
        if X.shape != y.shape:
            raise ValueError("X and y lengths differ")
        self.fit_ = loglog_regression(zip(X, y))
        self.coef_ = self.fit_.beta1
        self.intercept_ = self.fit_.beta0
        self.r2_ = self.fit_.r2
        return self

    def predict(self, X):
        check_is_fitted(self, "fit_")
        X = check_array(X, ensure_2d=False).ravel()
        return self.fit_.predict(X)

    def score(self, X, y):
        """Log-space r^2 on (X, y)."""
        check_is_fitted(self, "fit_")
        X = check_array(X, ensure_2d=False).ravel()
        y = np.log(np.asarray(y, dtype=np.float64).ravel())
        resid = y - self.fit_.predict_log(X)
        ss_tot = float(((y - y.mean()) ** 2).sum())
        return 1.0 if ss_tot == 0 else 1.0 - float(resid @ resid) / ss_tot


def ert_or_none(st):
    try:
        return ert(st)
    except NoSuccessError:
        return None

