"""Independent reference computations on full n-dimensional arrays.

These deliberately avoid the sufficient-statistic path: projections are built
as explicit n x n matrices and inverses come from ``numpy.linalg.inv``.
"""

import numpy as np
from scipy import integrate


def random_dataset(rng, n, p, n_invalid=None, beta=0.3, strength=0.5):
    """Raw (uncentered) draws from a many-instrument design with some invalid instruments."""
    if n_invalid is None:
        n_invalid = max(0, (p - 1) // 2 - 1)
    Z = rng.standard_normal((n, p)) + rng.normal(size=p)
    alpha = np.zeros(p)
    alpha[:n_invalid] = rng.uniform(0.3, 0.8, n_invalid)
    eta = rng.uniform(0.5, 1.0, p) * strength * 2
    e = rng.multivariate_normal([0, 0], [[1, 0.3], [0.3, 1]], size=n)
    d = Z @ eta + e[:, 1]
    y = beta * d + Z @ alpha + e[:, 0]
    return y, d, Z


def proj(X):
    return X @ np.linalg.inv(X.T @ X) @ X.T


def dense_fit(y, d, Z, omega):
    """Per-model quantities straight from the n-dimensional formulas."""
    n, p = Z.shape
    idx = list(omega)
    R = np.column_stack([d, Z[:, idx]])
    P = proj(Z)
    A = R.T @ P @ R
    theta = np.linalg.inv(A) @ R.T @ P @ y
    yhat = R @ theta
    sigma2 = float((y - yhat) @ (y - yhat)) / n
    q = float(np.sum((P @ (y - yhat)) ** 2))

    dhat = P @ d
    if idx:
        M = np.eye(n) - proj(Z[:, idx])
    else:
        M = np.eye(n)
    denom = float(dhat @ M @ dhat)
    beta_mean = float(dhat @ M @ y) / denom
    beta_var = sigma2 / denom

    k = 1 + len(idx)
    _, logdet_A = np.linalg.slogdet(A)
    _, logdet_S = np.linalg.slogdet(Z.T @ Z / n)
    log_marg = (
        -0.5 * (p - k) * np.log(2 * np.pi * sigma2)
        - 0.5 * logdet_S
        - 0.5 * logdet_A
        - 0.5 * q / sigma2
    )
    return dict(theta=theta, sigma2=sigma2, q=q, beta_mean=beta_mean, beta_var=beta_var,
                log_marginal=log_marg, P=P, R=R)


def log_pseudo_likelihood(y, d, Z, omega, theta, sigma2):
    """Log of the homoscedastic pseudo-likelihood at ``theta``."""
    n, p = Z.shape
    R = np.column_stack([d, Z[:, list(omega)]])
    r = proj(Z) @ (y - R @ theta)
    _, logdet_S = np.linalg.slogdet(Z.T @ Z / n)
    return -0.5 * p * np.log(2 * np.pi * sigma2) - 0.5 * logdet_S - 0.5 * float(r @ r) / sigma2


def dense_hetero_fit(y, d, Z, omega):
    n, p = Z.shape
    base = dense_fit(y, d, Z, omega)
    e = y - base["R"] @ base["theta"]
    Sigma = Z.T @ np.diag(e**2) @ Z / n
    W = Z @ np.linalg.inv(Sigma) @ Z.T
    R = base["R"]
    H = R.T @ W @ R
    theta = np.linalg.solve(H, R.T @ W @ y)
    resid = y - R @ theta
    qmin = float(resid @ W @ resid)
    k = R.shape[1]
    log_marg = (
        -0.5 * p * np.log(2 * np.pi)
        - 0.5 * np.linalg.slogdet(Sigma)[1]
        + 0.5 * k * np.log(2 * np.pi * n)
        - 0.5 * np.linalg.slogdet(H)[1]
        - 0.5 * qmin / n
    )
    return dict(theta=theta, Sigma=Sigma, beta_var=n * np.linalg.inv(H)[0, 0],
                log_marginal=log_marg, W=W, R=R)


def quadrature_log_marginal(logf, center, scale, k):
    """log of the integral of exp(logf) over R^k (k = 1 or 2), by adaptive quadrature."""
    ref = logf(center)
    lim = 12.0
    if k == 1:
        val, _ = integrate.quad(
            lambda t: np.exp(logf(np.array([center[0] + t * scale[0]])) - ref), -lim, lim,
            epsabs=0, epsrel=1e-11, limit=200,
        )
        return ref + np.log(val * scale[0])
    val, _ = integrate.dblquad(
        lambda b, a: np.exp(logf(center + np.array([a, b]) * scale) - ref),
        -lim, lim, -lim, lim, epsabs=0, epsrel=1e-10,
    )
    return ref + np.log(val * scale[0] * scale[1])
