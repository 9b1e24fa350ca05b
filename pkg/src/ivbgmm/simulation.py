"""Simulation designs and the Monte Carlo harness.

Seeding contract: replicate ``i`` of a run with ``base_seed`` draws from
``SeedSequence(base_seed, spawn_key=(i,))``. That sequence is split into two
children, the first for the dataset and the second for the model search, each
driving a PCG64 generator. Results therefore do not depend on how replicates
are distributed over worker processes.
"""

from __future__ import annotations

import math
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field
from typing import Sequence

import numpy as np

from . import baselines
from .core import Dataset, center, compute_suffstats
from .exceptions import IVBGMMError
from .inference import proposed_bayes, traditional_bayes
from .model import ModelIndex
from .search import SearchConfig

P_SIM = 12
INVALID = (0, 1, 2)
ERROR_CORR = 0.25

#: Canonical row order of summary tables.
METHOD_ORDER = (
    "ols",
    "naive_tsls",
    "median",
    "traditional_bayes",
    "proposed_bayes",
    "hetero_bayes",
    "oracle_tsls",
)
DEFAULT_METHODS = ("naive_tsls", "median", "traditional_bayes", "proposed_bayes", "oracle_tsls")

_CASES = {
    "a": (0.0, "flat"),
    "b": (0.0, "strong_invalid"),
    "c": (0.5, "flat"),
    "d": (0.5, "strong_invalid"),
}


@dataclass(frozen=True, eq=False)
class DgpSpec:
    model: int
    case: str
    n: int
    beta_true: float
    alpha_true: np.ndarray
    eta_true: np.ndarray
    error_corr: float = ERROR_CORR

    @classmethod
    def from_case(cls, model: int, case: str, n: int) -> "DgpSpec":
        """One of the four simulation cases with 12 instruments, the first three invalid."""
        if model not in (1, 2):
            raise ValueError(f"model must be 1 or 2, got {model}")
        if case not in _CASES:
            raise ValueError(f"case must be one of a-d, got {case!r}")
        beta, strength = _CASES[case]
        alpha = np.zeros(P_SIM)
        alpha[list(INVALID)] = 0.5
        if strength == "flat":
            eta = np.full(P_SIM, 0.4)
        else:
            eta = np.full(P_SIM, 0.2)
            eta[list(INVALID)] = 0.6
        return cls(model=model, case=case, n=n, beta_true=beta, alpha_true=alpha, eta_true=eta)

    @property
    def p(self) -> int:
        return len(self.alpha_true)

    @property
    def omega_star(self) -> ModelIndex:
        return ModelIndex(tuple(int(j) for j in np.flatnonzero(self.alpha_true)))


@dataclass(frozen=True)
class Truth:
    beta: float
    omega_star: ModelIndex


def gen_errors(model: int, n: int, rng: np.random.Generator, corr: float = ERROR_CORR) -> np.ndarray:
    """Draw ``n`` rows of (epsilon, nu).

    Model 1 is bivariate normal with unit variances; model 2 multiplies each
    row by ``sqrt(v)`` with ``v ~ Exp(1)``, an asymmetric bivariate Laplace draw
    with the same covariance.
    """
    L = np.linalg.cholesky(np.array([[1.0, corr], [corr, 1.0]]))
    e = rng.standard_normal((n, 2)) @ L.T
    if model == 2:
        e *= np.sqrt(rng.exponential(1.0, n))[:, None]
    elif model != 1:
        raise ValueError(f"model must be 1 or 2, got {model}")
    return e


def gen_dataset(spec: DgpSpec, rng: np.random.Generator, noise_scale: float = 1.0) -> tuple[Dataset, Truth]:
    """Simulate and center one dataset. ``noise_scale=0`` leaves the noiseless skeleton."""
    Z = rng.standard_normal((spec.n, spec.p))
    e = gen_errors(spec.model, spec.n, rng, spec.error_corr) * noise_scale
    d = Z @ spec.eta_true + e[:, 1]
    y = spec.beta_true * d + Z @ spec.alpha_true + e[:, 0]
    return center(y, d, Z), Truth(spec.beta_true, spec.omega_star)


def replicate_seeds(base_seed: int, rep: int) -> tuple[np.random.SeedSequence, np.random.SeedSequence]:
    """(data, search) seed sequences for one replicate."""
    ss = np.random.SeedSequence(base_seed, spawn_key=(rep,))
    data_ss, search_ss = ss.spawn(2)
    return data_ss, search_ss


def estimate(
    method: str,
    data: Dataset,
    truth: Truth | None = None,
    search: SearchConfig = SearchConfig(),
    rng: np.random.Generator | None = None,
):
    stats = compute_suffstats(data)
    if method == "ols":
        return baselines.ols(stats)
    if method == "naive_tsls":
        return baselines.naive_tsls(stats)
    if method == "median":
        return baselines.median_report(stats)
    if method == "oracle_tsls":
        if truth is None:
            raise ValueError("oracle_tsls needs the true invalid set")
        return baselines.oracle_tsls(stats, truth.omega_star)
    if method == "traditional_bayes":
        return traditional_bayes(stats)
    if method == "proposed_bayes":
        return proposed_bayes(stats, config=search, rng=rng).report
    if method == "hetero_bayes":
        return proposed_bayes(stats, config=search, rng=rng, data=data, hetero=True).report
    raise ValueError(f"unknown method {method!r}")


@dataclass
class MethodSummary:
    method: str
    estimates: np.ndarray
    variances: np.ndarray
    covered: np.ndarray
    beta_true: float
    n_failed: int = 0

    @property
    def bias(self) -> float:
        return float(np.mean(self.estimates - self.beta_true))

    @property
    def avg_var(self) -> float:
        v = self.variances
        return math.nan if np.all(np.isnan(v)) else float(np.mean(v))

    @property
    def mse(self) -> float:
        return float(np.mean((self.estimates - self.beta_true) ** 2))

    @property
    def coverage(self) -> float:
        c = self.covered
        return math.nan if np.all(np.isnan(c)) else float(np.mean(c))


@dataclass
class McSummary:
    spec: DgpSpec
    reps: int
    seed: int
    rows: dict[str, MethodSummary] = field(default_factory=dict)

    def ordered(self) -> list[MethodSummary]:
        return [self.rows[m] for m in sorted(self.rows, key=METHOD_ORDER.index)]


def _run_replicate(args) -> dict[str, tuple[float, float, float] | str]:
    spec, methods, base_seed, rep, search = args
    data_ss, search_ss = replicate_seeds(base_seed, rep)
    data, truth = gen_dataset(spec, np.random.default_rng(data_ss))
    out: dict[str, tuple[float, float, float] | str] = {}
    for method in methods:
        # every method restarts the search stream, so adding a method changes nothing else
        rng = np.random.default_rng(search_ss)
        try:
            r = estimate(method, data, truth, search, rng)
        except IVBGMMError as exc:
            out[method] = f"{type(exc).__name__}: {exc}"
            continue
        covered = r.covers(truth.beta)
        out[method] = (r.estimate, r.var, math.nan if covered is None else float(covered))
    return out


def run_monte_carlo(
    spec: DgpSpec,
    methods: Sequence[str] = DEFAULT_METHODS,
    reps: int = 500,
    base_seed: int = 0,
    search: SearchConfig = SearchConfig(),
    workers: int = 1,
) -> McSummary:
    """Run ``reps`` replicates and summarize bias, average variance, MSE and coverage.

    Replicates whose estimator raises are excluded from that method's summary
    and counted in ``n_failed``.
    """
    if reps < 1:
        raise ValueError("reps must be >= 1")
    for m in methods:
        if m not in METHOD_ORDER:
            raise ValueError(f"unknown method {m!r}")
    methods = tuple(dict.fromkeys(methods))
    jobs = [(spec, methods, base_seed, i, search) for i in range(reps)]
    if workers > 1:
        with ProcessPoolExecutor(max_workers=workers) as ex:
            results = list(ex.map(_run_replicate, jobs, chunksize=max(1, reps // (4 * workers))))
    else:
        results = [_run_replicate(j) for j in jobs]

    summary = McSummary(spec=spec, reps=reps, seed=base_seed)
    for m in methods:
        ok = [r[m] for r in results if not isinstance(r[m], str)]
        arr = np.array(ok, dtype=float).reshape(-1, 3)
        summary.rows[m] = MethodSummary(
            method=m,
            estimates=arr[:, 0],
            variances=arr[:, 1],
            covered=arr[:, 2],
            beta_true=spec.beta_true,
            n_failed=reps - len(ok),
        )
    return summary
