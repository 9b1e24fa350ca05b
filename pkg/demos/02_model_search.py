"""
The shotgun search and the acceptable set
=========================================

With eight instruments every model in the prior support can be scored, so
the stochastic search can be checked against brute force. The escort order
tau controls how greedily the chain moves.
"""

import numpy as np

from ivbgmm import ModelIndex, SearchConfig, center, compute_suffstats, escort_probs
from ivbgmm import exhaustive_search, log_marginal, neighborhood, shotgun_search
from ivbgmm.search import support_size

rng = np.random.default_rng(3)
n, p = 500, 8
Z = rng.standard_normal((n, p))
e = rng.multivariate_normal([0, 0], [[1, 0.3], [0.3, 1]], size=n)
d = Z @ np.full(p, 0.4) + e[:, 1]
alpha = np.zeros(p)
alpha[[1, 5]] = 0.6
y = 0.2 * d + Z @ alpha + e[:, 0]

stats = compute_suffstats(center(y, d, Z))
score = lambda m: log_marginal(stats, m)

# models with fewer than half the instruments invalid
print("support size for p = %d: %d models" % (p, support_size(p)))
print("neighbours of {1}:", [m.omega for m in neighborhood(ModelIndex((1,)), p)])

# %% escort probabilities over the neighbourhood of the empty model
nbd = neighborhood(ModelIndex(()), p)
s = np.array([score(m) for m in nbd])
for tau in (0.01, 0.1, 1.0):
    print("tau = %-5g max step prob %.3f" % (tau, escort_probs(s, tau).max()))

# %% brute force versus search
ex = exhaustive_search(score, p)
sh = shotgun_search(score, p, config=SearchConfig(iterations=500, seed=0))
print("\nexhaustive acceptable set:", [m.omega for m in ex.models])
print("shotgun acceptable set:   ", [m.omega for m in sh.models])
print("identical: %s; shotgun scored %d of %d models" % (sh.entries == ex.entries, sh.n_evaluated, ex.n_evaluated))
print("first steps of the chain:", [m.omega for m in sh.path[:6]])

# c = 1 keeps only the best model
best = shotgun_search(score, p, config=SearchConfig(iterations=200, c=1.0))
print("c = 1:", [m.omega for m in best.models])
