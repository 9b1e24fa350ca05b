"""Bayesian model averaging for instrumental-variable estimation with invalid instruments."""

from .baselines import median_estimator, naive_tsls, ols, oracle_tsls
from .core import Dataset, SufficientStats, center, compute_suffstats, logdet_spd, spd_solve
from .inference import (
    BetaPosterior,
    EstimateReport,
    beta_posterior,
    mixture_cdf,
    mixture_mean,
    mixture_quantile,
    mixture_variance,
    proposed_bayes,
    traditional_bayes,
    traditional_beta_posterior,
    validity_probabilities,
)
from .model import ModelFit, ModelIndex, fit_model, hetero_fit_model, log_marginal
from .search import (
    AcceptableSet,
    SearchConfig,
    escort_probs,
    exhaustive_search,
    neighborhood,
    shotgun_search,
)
from .simulation import DgpSpec, McSummary, gen_dataset, run_monte_carlo

__version__ = "0.1.0"
