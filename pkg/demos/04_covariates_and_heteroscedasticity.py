"""
Covariates that are always invalid, and non-constant error variance
===================================================================

Covariates that directly affect the outcome can be kept in every model by
marking them as forced. Separately, a heteroscedasticity-robust weight
matrix can replace the homoscedastic one when scoring models.
"""

import numpy as np

from ivbgmm import SearchConfig, center, compute_suffstats, naive_tsls, proposed_bayes

rng = np.random.default_rng(11)
n, k, m = 3000, 10, 3
Z = rng.standard_normal((n, k))
X = (rng.random((n, m)) < 0.2).astype(float)  # dummy covariates
e = rng.multivariate_normal([0, 0], [[1, 0.25], [0.25, 1]], size=n)
scale = np.exp(0.5 * Z[:, 0])  # error SD grows with the first instrument
d = Z @ np.full(k, 0.3) + X @ [0.5, 0.3, -0.4] + e[:, 1]
y = 0.4 * d + 0.5 * Z[:, 2] + X @ [1.0, -0.8, 0.6] + scale * e[:, 0]

data = center(y, d, np.column_stack([Z, X]))
stats = compute_suffstats(data)
forced = list(range(k, k + m))

# %% naive TSLS with and without controlling for the covariates
print("naive, everything valid:      %.4f" % naive_tsls(stats).estimate)
print("naive, covariates controlled: %.4f" % naive_tsls(stats, covariates=forced).estimate)

# %% model averaging with the covariates forced into every model
cfg = SearchConfig(iterations=500, seed=1)
homo = proposed_bayes(stats, forced, cfg)
het = proposed_bayes(stats, forced, cfg, data=data, hetero=True)
for res in (homo, het):
    r = res.report
    print("%-15s %.4f  SD %.4f  interval (%.4f, %.4f)" % (r.method, r.estimate, r.se, *r.ci95))
    print("  P(valid) for instruments:", " ".join("%.2f" % v for v in r.validity[:k]))
    print("  covariates (always invalid):", r.validity[k:])
