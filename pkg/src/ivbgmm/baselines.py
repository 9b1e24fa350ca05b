"""Reference estimators: OLS, naive and oracle TSLS, and the median estimator.

Residual variances divide by ``n`` throughout, matching the pseudo-likelihood,
and confidence intervals are ``estimate +/- 1.96 SE``.
"""

from __future__ import annotations

import math
from typing import Iterable

import numpy as np

from .core import SufficientStats, spd_solve
from .exceptions import EstimationError, NotPositiveDefinite, ZeroFirstStage
from .inference import EstimateReport
from .model import ModelIndex, fit_unconstrained, in_support

Z_95 = 1.96


def _normal_report(method: str, estimate: float, se: float) -> EstimateReport:
    return EstimateReport(
        method=method,
        estimate=estimate,
        se=se,
        ci95=(estimate - Z_95 * se, estimate + Z_95 * se),
    )


def ols(stats: SufficientStats, covariates: Iterable[int] = ()) -> EstimateReport:
    """Least squares of y on d, optionally controlling for some columns of Z."""
    cov = sorted(set(covariates))
    if cov:
        RtR = np.empty((1 + len(cov), 1 + len(cov)))
        RtR[0, 0] = stats.dtd
        RtR[0, 1:] = RtR[1:, 0] = stats.Ztd[cov]
        RtR[1:, 1:] = stats.ZtZ[np.ix_(cov, cov)]
        Rty = np.concatenate(([stats.dty], stats.Zty[cov]))
        try:
            coef = spd_solve(RtR, Rty)
            inv11 = spd_solve(RtR, np.eye(len(Rty), 1))[0, 0]
        except NotPositiveDefinite:
            raise EstimationError("exposure is collinear with the covariates") from None
        s2 = max(stats.yty - float(coef @ Rty), 0.0) / stats.n
        return _normal_report("ols", float(coef[0]), math.sqrt(s2 * inv11))
    if not stats.dtd > 0.0:
        raise EstimationError("exposure has zero variance")
    beta = stats.dty / stats.dtd
    s2 = max(stats.yty - beta * stats.dty, 0.0) / stats.n
    return _normal_report("ols", beta, math.sqrt(s2 / stats.dtd))


def naive_tsls(stats: SufficientStats, covariates: Iterable[int] = ()) -> EstimateReport:
    """TSLS treating every instrument as valid.

    With ``covariates`` the listed columns are controlled for (treated as
    known-invalid) and every other column is used as a valid instrument.
    """
    cov = tuple(sorted(set(covariates)))
    if not float(stats.white_d @ stats.white_d) > 0.0:
        raise ZeroFirstStage("projected exposure is identically zero")
    # same computation as the per-model fit at omega = covariates
    f = fit_unconstrained(stats, ModelIndex(cov, cov))
    return _normal_report("naive_tsls", f.beta_mean, math.sqrt(f.beta_var))


def oracle_tsls(stats: SufficientStats, omega_star: ModelIndex) -> EstimateReport:
    """TSLS with the invalid set known; same numerics as the per-model fit."""
    f = fit_unconstrained(stats, omega_star)
    return _normal_report("oracle_tsls", f.beta_mean, math.sqrt(f.beta_var))


def median_estimator(
    stats: SufficientStats, exclude: Iterable[int] = ()
) -> tuple[float, np.ndarray]:
    """Median of the per-instrument ratios gamma_j / eta_j.

    ``exclude`` drops indices (e.g. forced covariates) from the median; the
    returned alpha vector still has length p.
    """
    gamma = spd_solve(stats.ZtZ, stats.Zty)
    eta = spd_solve(stats.ZtZ, stats.Ztd)
    keep = np.setdiff1d(np.arange(stats.p), np.fromiter(exclude, dtype=int))
    if np.any(np.abs(eta[keep]) < 1e-12):
        raise ZeroFirstStage("a first-stage coefficient is zero; ratio undefined")
    beta = float(np.median(gamma[keep] / eta[keep]))
    return beta, gamma - eta * beta


def median_report(stats: SufficientStats, exclude: Iterable[int] = ()) -> EstimateReport:
    beta, _ = median_estimator(stats, exclude)
    return EstimateReport(method="median", estimate=beta)


def median_initial_model(
    stats: SufficientStats, forced: Iterable[int] = (), count_forced: bool = False
) -> ModelIndex:
    """Starting model for the search built from the median-estimator residuals.

    Candidates are ranked by ``|gamma_j - eta_j * beta_median|`` scaled by the
    standard deviation of ``z_j``, and the largest ones are taken up to the
    prior-support limit.
    """
    forced = tuple(sorted(set(forced)))
    _, alpha = median_estimator(stats, exclude=forced)
    scaled = np.abs(alpha) * np.sqrt(np.diag(stats.ZtZ) / stats.n)
    free = [j for j in np.argsort(-scaled, kind="stable").tolist() if j not in set(forced)]
    chosen: list[int] = []
    for j in free:
        trial = ModelIndex.of(chosen + [j], forced)
        if not in_support(trial, stats.p, count_forced):
            break
        chosen.append(j)
    return ModelIndex.of(chosen, forced)
