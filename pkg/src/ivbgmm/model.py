"""Per-model GMM pseudo-likelihood computations.

For a candidate invalid set ``omega`` the regressors are ``R = (d, Z_omega)``
and the parameters ``theta = (beta, alpha_omega)``. The pseudo-likelihood is
the Gaussian limit of the sample moment ``n^{-1} Z'(y - R theta)``; with a flat
prior on ``theta`` everything is available in closed form.

Normalization of ``log_marginal``
---------------------------------
The marginal pseudo-likelihood is kept with every factor that depends on the
model, including those that depend on the model only through the residual
variance ``s2``::

    log f(y | omega) = -(p - k)/2 * log(2 pi s2)
                       - 1/2 * log|Z'Z / n|
                       - 1/2 * log|R' P_Z R|
                       - |P_Z (y - R theta_hat)|^2 / (2 s2)

with ``k = 1 + |omega|``. The heteroscedastic variant uses the same
normalization with ``s2 Z'Z / n`` replaced by the robust moment covariance, so
the two agree whenever that covariance is the homoscedastic one.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Iterable

import numpy as np
from scipy.linalg import solve_triangular

from .core import Dataset, SufficientStats, cholesky, compute_suffstats
from .exceptions import InvalidModel, NotPositiveDefinite, SingularModel, SingularWeight

_LOG_2PI = float(np.log(2.0 * np.pi))
_EPS = float(np.finfo(float).eps)
# Cholesky pivots of R'P_Z R below this fraction of its largest diagonal mean collinearity.
_PIVOT_RTOL = 1e-12


@dataclass(frozen=True, order=True)
class ModelIndex:
    """A candidate set of invalid instruments.

    ``omega`` lists every index treated as invalid; ``forced`` is the subset
    that is invalid by assumption (covariates) and never searched over.
    """

    omega: tuple[int, ...]
    forced: tuple[int, ...] = ()

    def __post_init__(self):
        omega = tuple(int(j) for j in self.omega)
        forced = tuple(sorted({int(j) for j in self.forced}))
        if any(a >= b for a, b in zip(omega, omega[1:])):
            raise InvalidModel(f"omega must be strictly increasing, got {omega}")
        if any(j < 0 for j in omega):
            raise InvalidModel(f"negative instrument index in {omega}")
        if not set(forced) <= set(omega):
            raise InvalidModel(f"forced indices {forced} are not all in omega {omega}")
        object.__setattr__(self, "omega", omega)
        object.__setattr__(self, "forced", forced)

    @classmethod
    def of(cls, indices: Iterable[int] = (), forced: Iterable[int] = ()) -> "ModelIndex":
        """Build from unordered indices; forced indices are always included."""
        forced = set(forced)
        return cls(tuple(sorted(set(indices) | forced)), tuple(sorted(forced)))

    @property
    def candidates(self) -> tuple[int, ...]:
        """Indices in omega that are not forced."""
        fs = set(self.forced)
        return tuple(j for j in self.omega if j not in fs)

    def __len__(self) -> int:
        return len(self.omega)

    def __repr__(self) -> str:
        if self.forced:
            return f"ModelIndex({set(self.candidates) or '{}'} + forced {set(self.forced)})"
        return f"ModelIndex({set(self.omega) or '{}'})"


def in_support(omega: ModelIndex, p: int, count_forced: bool = False) -> bool:
    """Identifiability constraint of the model prior.

    By default only the candidate block is constrained,
    ``|omega \\ forced| < (p - |forced|) / 2``. With ``count_forced=True`` the
    constraint is ``|omega| < p / 2`` over all indices.
    """
    if omega.omega and omega.omega[-1] >= p:
        return False
    if count_forced:
        return 2 * len(omega.omega) < p
    return 2 * len(omega.candidates) < p - len(omega.forced)


def check_support(omega: ModelIndex, p: int, count_forced: bool = False) -> None:
    if omega.omega and omega.omega[-1] >= p:
        raise InvalidModel(f"index out of range for p={p}: {omega.omega}")
    if not in_support(omega, p, count_forced):
        raise InvalidModel(f"{omega!r} is outside the prior support for p={p}")


@dataclass(frozen=True, eq=False)
class ModelFit:
    omega: ModelIndex
    theta_hat: np.ndarray
    sigma2_hat: float
    log_marginal: float
    beta_mean: float
    beta_var: float


def _variance_floor(yty: float, n: int) -> float:
    # Residual variance below this is not resolvable from Gram quantities.
    return _EPS * max(yty, np.finfo(float).tiny) / n


def fit_model(stats: SufficientStats, omega: ModelIndex, count_forced: bool = False) -> ModelFit:
    """Posterior summaries and log marginal pseudo-likelihood for one model.

    Works entirely from ``stats``: with ``L L' = Z'Z`` the projected design is
    ``L^{-1} Z'R = (L^{-1} Z'd, L'[:, omega])`` so that ``R' P_Z R = B'B``.
    """
    check_support(omega, stats.p, count_forced)
    return fit_unconstrained(stats, omega)


def fit_unconstrained(stats: SufficientStats, omega: ModelIndex) -> ModelFit:
    """:func:`fit_model` without the prior-support check."""
    if omega.omega and omega.omega[-1] >= stats.p:
        raise InvalidModel(f"index out of range for p={stats.p}: {omega.omega}")
    idx = list(omega.omega)
    n, p = stats.n, stats.p
    k = 1 + len(idx)

    B = np.empty((p, k))
    B[:, 0] = stats.white_d
    B[:, 1:] = stats.white_Z[:, idx]
    G = B.T @ B
    try:
        LG = cholesky(G)
    except NotPositiveDefinite:
        raise SingularModel(f"R'P_Z R is singular for {omega!r}") from None
    if np.min(np.diag(LG)) ** 2 <= _PIVOT_RTOL * np.max(np.diag(G)):
        raise SingularModel(f"R'P_Z R is numerically singular for {omega!r}")
    rhs = B.T @ stats.white_y
    theta = solve_triangular(LG.T, solve_triangular(LG, rhs, lower=True), lower=False)
    proj_resid = stats.white_y - B @ theta
    q = float(proj_resid @ proj_resid)

    Rty = np.concatenate(([stats.dty], stats.Zty[idx]))
    RtR = np.empty((k, k))
    RtR[0, 0] = stats.dtd
    RtR[0, 1:] = RtR[1:, 0] = stats.Ztd[idx]
    RtR[1:, 1:] = stats.ZtZ[np.ix_(idx, idx)]
    rss = stats.yty - 2.0 * float(theta @ Rty) + float(theta @ RtR @ theta)
    sigma2 = max(rss, 0.0) / n
    s2 = max(sigma2, _variance_floor(stats.yty, n))

    # (G^{-1})_{11} = |L_G^{-1} e_1|^2
    e1 = solve_triangular(LG, np.eye(k, 1).ravel(), lower=True)
    ginv11 = float(e1 @ e1)
    logdet_G = 2.0 * float(np.sum(np.log(np.diag(LG))))

    log_marg = (
        -0.5 * (p - k) * (_LOG_2PI + np.log(s2))
        - 0.5 * stats.logdet_ZtZ_over_n
        - 0.5 * logdet_G
        - 0.5 * q / s2
    )
    return ModelFit(
        omega=omega,
        theta_hat=theta,
        sigma2_hat=sigma2,
        log_marginal=float(log_marg),
        beta_mean=float(theta[0]),
        beta_var=s2 * ginv11,
    )


def log_marginal(stats: SufficientStats, omega: ModelIndex, count_forced: bool = False) -> float:
    return fit_model(stats, omega, count_forced).log_marginal


def hetero_weight(Z: np.ndarray, resid: np.ndarray) -> np.ndarray:
    """Robust moment covariance ``n^{-1} Z' Diag(e e') Z``."""
    Ze = Z * resid[:, None]
    S = Ze.T @ Ze / Z.shape[0]
    return 0.5 * (S + S.T)


def _weighted_fit(stats: SufficientStats, omega: ModelIndex, Sigma: np.ndarray):
    """GMM fit with weight ``Sigma^{-1}``; returns theta, H, quadratic minimum, log marginal."""
    idx = list(omega.omega)
    n, p = stats.n, stats.p
    k = 1 + len(idx)
    try:
        LS = cholesky(Sigma)
    except NotPositiveDefinite:
        raise SingularWeight(f"moment covariance is not positive definite for {omega!r}") from None
    ZtR = np.empty((p, k))
    ZtR[:, 0] = stats.Ztd
    ZtR[:, 1:] = stats.ZtZ[:, idx]
    C = solve_triangular(LS, ZtR, lower=True)
    c = solve_triangular(LS, stats.Zty, lower=True)
    H = C.T @ C
    try:
        LH = cholesky(H)
    except NotPositiveDefinite:
        raise SingularModel(f"R'Z S^-1 Z'R is singular for {omega!r}") from None
    theta = solve_triangular(LH.T, solve_triangular(LH, C.T @ c, lower=True), lower=False)
    r = c - C @ theta
    qmin = float(r @ r)
    logdet_S = 2.0 * float(np.sum(np.log(np.diag(LS))))
    logdet_H = 2.0 * float(np.sum(np.log(np.diag(LH))))
    log_marg = (
        -0.5 * p * _LOG_2PI
        - 0.5 * logdet_S
        + 0.5 * k * (_LOG_2PI + np.log(n))
        - 0.5 * logdet_H
        - 0.5 * qmin / n
    )
    return theta, LH, qmin, float(log_marg)


def hetero_fit_model(
    data: Dataset,
    omega: ModelIndex,
    stats: SufficientStats | None = None,
    count_forced: bool = False,
) -> ModelFit:
    """Heteroscedasticity-robust variant of :func:`fit_model`.

    The moment covariance is estimated once from the residuals of the
    homoscedastic fit (one-step feasible weighting), then the weighted
    pseudo-likelihood is integrated over ``theta`` in closed form.
    """
    if stats is None:
        stats = compute_suffstats(data)
    base = fit_model(stats, omega, count_forced)
    idx = list(omega.omega)
    Zw = data.Z[:, idx]
    resid = data.y - data.d * base.theta_hat[0] - Zw @ base.theta_hat[1:]
    Sigma = hetero_weight(data.Z, resid)

    theta, LH, _, log_marg = _weighted_fit(stats, omega, Sigma)
    k = 1 + len(idx)
    e1 = solve_triangular(LH, np.eye(k, 1).ravel(), lower=True)
    beta_var = stats.n * float(e1 @ e1)
    resid = data.y - data.d * theta[0] - Zw @ theta[1:]
    return ModelFit(
        omega=omega,
        theta_hat=theta,
        sigma2_hat=float(resid @ resid) / stats.n,
        log_marginal=log_marg,
        beta_mean=float(theta[0]),
        beta_var=beta_var,
    )
