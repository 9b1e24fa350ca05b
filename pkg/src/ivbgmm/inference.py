"""Model-averaged posterior of the causal effect and its summaries."""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Callable, Iterable, Mapping

import numpy as np
from scipy.special import ndtr, softmax

from .core import Dataset, SufficientStats
from .exceptions import AllSingular, EstimationError, MissingFit, TooLarge
from .model import ModelFit, ModelIndex, fit_model, hetero_fit_model
from .search import (
    MAX_EXHAUSTIVE,
    AcceptableSet,
    SearchConfig,
    enumerate_models,
    shotgun_search,
    support_size,
)


@dataclass(frozen=True, eq=False)
class BetaPosterior:
    """Finite Gaussian mixture, one component per model."""

    weights: np.ndarray
    means: np.ndarray
    variances: np.ndarray
    models: tuple[ModelIndex, ...] = ()

    def __post_init__(self):
        for name in ("weights", "means", "variances"):
            object.__setattr__(self, name, np.atleast_1d(np.asarray(getattr(self, name), float)))
        if not (self.weights.shape == self.means.shape == self.variances.shape):
            raise ValueError("weights, means and variances must have equal length")
        if self.weights.size == 0:
            raise ValueError("mixture needs at least one component")
        if np.any(self.variances <= 0.0):
            raise ValueError("component variances must be positive")

    @classmethod
    def from_log_scores(cls, log_scores, means, variances, models=()) -> "BetaPosterior":
        return cls(softmax(np.asarray(log_scores, float)), means, variances, tuple(models))

    def mean(self) -> float:
        return mixture_mean(self)

    def variance(self) -> float:
        return mixture_variance(self)

    def cdf(self, x) -> np.ndarray | float:
        return mixture_cdf(self, x)

    def quantile(self, q: float) -> float:
        return mixture_quantile(self, q)


@dataclass
class EstimateReport:
    method: str
    estimate: float
    se: float | None = None
    ci95: tuple[float, float] | None = None
    validity: np.ndarray | None = None
    models: list[tuple[ModelIndex, float]] = field(default_factory=list)

    @property
    def var(self) -> float:
        return math.nan if self.se is None else self.se**2

    def covers(self, value: float) -> bool | None:
        if self.ci95 is None:
            return None
        return self.ci95[0] <= value <= self.ci95[1]


def mixture_mean(post: BetaPosterior) -> float:
    return float(post.weights @ post.means)


def mixture_variance(post: BetaPosterior) -> float:
    """Law of total variance, computed around the mixture mean."""
    m = mixture_mean(post)
    return float(post.weights @ (post.variances + (post.means - m) ** 2))


def mixture_cdf(post: BetaPosterior, x):
    x = np.asarray(x, dtype=float)
    z = (x[..., None] - post.means) / np.sqrt(post.variances)
    out = ndtr(z) @ post.weights
    return float(out) if out.ndim == 0 else out


def mixture_quantile(post: BetaPosterior, q: float, max_iter: int = 200) -> float:
    """Invert the mixture CDF by bisection."""
    if not 0.0 < q < 1.0:
        raise ValueError("q must lie strictly between 0 and 1")
    sd = np.sqrt(post.variances)
    lo = float(np.min(post.means - 10.0 * sd))
    hi = float(np.max(post.means + 10.0 * sd))
    width = hi - lo
    while mixture_cdf(post, lo) > q:
        lo -= width
        width *= 2.0
    while mixture_cdf(post, hi) < q:
        hi += width
        width *= 2.0
    for _ in range(max_iter):
        mid = 0.5 * (lo + hi)
        if mid <= lo or mid >= hi:
            break
        if mixture_cdf(post, mid) < q:
            lo = mid
        else:
            hi = mid
    return 0.5 * (lo + hi)


def beta_posterior(acceptable: AcceptableSet, fits: Mapping[ModelIndex, ModelFit]) -> BetaPosterior:
    models = acceptable.models
    missing = [m for m in models if m not in fits]
    if missing:
        raise MissingFit(f"no fit for {missing[0]!r}")
    return BetaPosterior.from_log_scores(
        [acceptable.entries[m] for m in models],
        [fits[m].beta_mean for m in models],
        [fits[m].beta_var for m in models],
        models,
    )


def traditional_beta_posterior(
    stats: SufficientStats,
    p: int | None = None,
    forced: Iterable[int] = (),
    count_forced: bool = False,
    fit: Callable[[ModelIndex], ModelFit] | None = None,
) -> BetaPosterior:
    """Average over every model in the prior support, not just the acceptable set."""
    p = stats.p if p is None else p
    size = support_size(p, forced, count_forced)
    if size > MAX_EXHAUSTIVE:
        raise TooLarge(f"{size} candidate models exceeds the enumeration limit {MAX_EXHAUSTIVE}")
    if fit is None:
        fit = lambda m: fit_model(stats, m, count_forced)  # noqa: E731
    fits = []
    for m in enumerate_models(p, forced, count_forced):
        try:
            fits.append(fit(m))
        except EstimationError:
            continue
    if not fits:
        raise AllSingular("every model in the support is singular")
    return BetaPosterior.from_log_scores(
        [f.log_marginal for f in fits],
        [f.beta_mean for f in fits],
        [f.beta_var for f in fits],
        [f.omega for f in fits],
    )


def validity_probabilities(acceptable: AcceptableSet, p: int) -> np.ndarray:
    """Posterior probability that each instrument is valid, i.e. not in omega."""
    out = np.zeros(p)
    for m, w in acceptable.weights().items():
        valid = np.ones(p, dtype=bool)
        valid[list(m.omega)] = False
        out[valid] += w
    return np.clip(out, 0.0, 1.0)


def report_from_posterior(post: BetaPosterior, method: str) -> EstimateReport:
    """Posterior mean, posterior SD and the equal-tailed 95% credible interval."""
    lo, hi = mixture_quantile(post, 0.025), mixture_quantile(post, 0.975)
    return EstimateReport(
        method=method,
        estimate=mixture_mean(post),
        se=math.sqrt(mixture_variance(post)),
        ci95=(lo, hi),
        models=list(zip(post.models, post.weights.tolist())),
    )


@dataclass
class BayesResult:
    report: EstimateReport
    acceptable: AcceptableSet
    posterior: BetaPosterior
    fits: dict[ModelIndex, ModelFit]


def proposed_bayes(
    stats: SufficientStats,
    forced: Iterable[int] = (),
    config: SearchConfig = SearchConfig(),
    rng: np.random.Generator | None = None,
    data: Dataset | None = None,
    hetero: bool = False,
) -> BayesResult:
    """Search the model space, then average over the acceptable set.

    With ``hetero=True`` each model is scored with the heteroscedasticity-robust
    pseudo-likelihood, which needs the raw ``data``.
    """
    if hetero and data is None:
        raise ValueError("the heteroscedastic pseudo-likelihood needs the raw data")
    fits: dict[ModelIndex, ModelFit] = {}

    def evaluate(m: ModelIndex) -> float:
        if hetero:
            f = hetero_fit_model(data, m, stats, config.count_forced)
        else:
            f = fit_model(stats, m, config.count_forced)
        fits[m] = f
        return f.log_marginal

    acceptable = shotgun_search(evaluate, stats.p, forced, config, rng=rng)
    post = beta_posterior(acceptable, fits)
    report = report_from_posterior(post, "hetero_bayes" if hetero else "proposed_bayes")
    report.validity = validity_probabilities(acceptable, stats.p)
    return BayesResult(report=report, acceptable=acceptable, posterior=post, fits=fits)


def traditional_bayes(stats: SufficientStats, forced: Iterable[int] = (), count_forced: bool = False) -> EstimateReport:
    post = traditional_beta_posterior(stats, stats.p, forced, count_forced)
    report = report_from_posterior(post, "traditional_bayes")
    report.models = []
    return report
