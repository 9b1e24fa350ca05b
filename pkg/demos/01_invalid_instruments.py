"""
Estimating a causal effect when some instruments are invalid
=============================================================

Twelve instruments, the first three of which also affect the outcome
directly. Two-stage least squares that trusts every instrument is badly
biased; averaging over invalid-instrument sets recovers the truth.
"""

import numpy as np

from ivbgmm import DgpSpec, compute_suffstats, gen_dataset, median_estimator, naive_tsls, oracle_tsls, ols
from ivbgmm import proposed_bayes

# one dataset from the Gaussian design, true beta = 0.5
spec = DgpSpec.from_case(model=1, case="c", n=2000)
data, truth = gen_dataset(spec, np.random.default_rng(1))
stats = compute_suffstats(data)
print("n = %d, p = %d, true beta = %.2f, invalid = %s" % (data.n, data.p, truth.beta, truth.omega_star.omega))

# everything below works from Gram-matrix summaries, not the raw rows
print("Z'Z is %dx%d; Z'y and Z'd have length %d" % (stats.ZtZ.shape + (len(stats.Zty),)))

# %% baselines
for rep in (ols(stats), naive_tsls(stats), oracle_tsls(stats, truth.omega_star)):
    print("%-12s %.4f  (SE %.4f)" % (rep.method, rep.estimate, rep.se))

beta_m, alpha_m = median_estimator(stats)
print("%-12s %.4f" % ("median", beta_m))
print("median-based alpha, rounded:", np.round(alpha_m, 2))

# %% model averaging
res = proposed_bayes(stats)
r = res.report
print("\nposterior mean %.4f, posterior SD %.4f, 95%% interval (%.4f, %.4f)" % (r.estimate, r.se, *r.ci95))
print("models scored: %d, acceptable set size: %d" % (res.acceptable.n_evaluated, len(res.acceptable)))
for m, w in sorted(res.acceptable.weights().items(), key=lambda kv: -kv[1]):
    print("  omega = %-14s weight %.3f" % (m.omega, w))

# validity probability: posterior mass of models that treat z_j as valid
print("\nP(valid):", " ".join("%.2f" % v for v in r.validity))
