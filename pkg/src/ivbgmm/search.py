"""Stochastic shotgun search over invalid-instrument sets.

The chain moves between neighbouring models (one index added or removed),
choosing the next model from the neighbourhood with probabilities
proportional to ``exp(tau * log_score)``. Every model it scores is a
candidate for the acceptable set: the models whose score is within ``log c``
of the best score seen.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from itertools import combinations
from typing import Callable, Iterable, Iterator

import numpy as np

from .exceptions import AllSingular, EstimationError, InvalidModel, TooLarge
from .model import ModelIndex, in_support

Evaluator = Callable[[ModelIndex], float]

#: Upper bound on the number of models exhaustive enumeration will visit.
MAX_EXHAUSTIVE = 2**20


@dataclass(frozen=True)
class SearchConfig:
    iterations: int = 1000
    c: float = 3.0
    tau: float = 0.1
    seed: int = 0
    initial: ModelIndex | None = None
    count_forced: bool = False

    def __post_init__(self):
        if self.iterations < 1:
            raise ValueError("iterations must be >= 1")
        if not self.c >= 1.0:
            raise ValueError("c must be >= 1")
        if not self.tau > 0.0:
            raise ValueError("tau must be > 0")


@dataclass
class AcceptableSet:
    """Models within a factor ``c`` of the best posterior probability.

    ``entries`` maps each accepted model to its log score. ``path`` and
    ``n_evaluated`` are only filled in by :func:`shotgun_search`.
    """

    entries: dict[ModelIndex, float]
    c: float
    log_max: float
    path: list[ModelIndex] = field(default_factory=list)
    n_evaluated: int = 0

    @classmethod
    def from_scores(cls, scores: dict[ModelIndex, float], c: float) -> "AcceptableSet":
        finite = {m: s for m, s in scores.items() if np.isfinite(s)}
        if not finite:
            raise AllSingular("no model has a finite score")
        log_max = max(finite.values())
        cut = math.log(c)
        entries = {m: s for m, s in finite.items() if log_max - s <= cut}
        return cls(entries=entries, c=c, log_max=log_max)

    @property
    def models(self) -> list[ModelIndex]:
        return sorted(self.entries)

    @property
    def best(self) -> ModelIndex:
        """Highest-scoring model; ties go to the lexicographically smallest."""
        return min(self.entries, key=lambda m: (-self.entries[m], m.omega))

    def weights(self) -> dict[ModelIndex, float]:
        """Renormalized posterior probabilities over the set."""
        models = self.models
        s = np.array([self.entries[m] for m in models])
        w = np.exp(s - s.max())
        w /= w.sum()
        return dict(zip(models, w.tolist()))

    def __len__(self) -> int:
        return len(self.entries)

    def __contains__(self, omega) -> bool:
        return omega in self.entries


def neighborhood(
    omega: ModelIndex,
    p: int,
    forced: Iterable[int] | None = None,
    count_forced: bool = False,
) -> list[ModelIndex]:
    """Models one removal or one addition away from ``omega``.

    Forced indices are never removed. Neighbours outside the prior support
    are dropped. Removals come first, then additions, each in index order.
    """
    forced = tuple(sorted(set(omega.forced if forced is None else forced)))
    fs = set(forced)
    current = set(omega.omega)
    out = []
    for j in omega.omega:
        if j not in fs:
            out.append(ModelIndex(tuple(i for i in omega.omega if i != j), forced))
    for j in range(p):
        if j not in current:
            out.append(ModelIndex(tuple(sorted(current | {j})), forced))
    return [m for m in out if in_support(m, p, count_forced)]


def escort_probs(scores, tau: float) -> np.ndarray:
    """Normalize ``exp(tau * scores)``; ``-inf`` scores get probability zero."""
    s = np.asarray(scores, dtype=float)
    finite = np.isfinite(s)
    if not finite.any():
        raise AllSingular("every candidate model is singular")
    z = np.full(s.shape, -np.inf)
    z[finite] = tau * s[finite]
    w = np.exp(z - z[finite].max())
    return w / w.sum()


def enumerate_models(
    p: int, forced: Iterable[int] = (), count_forced: bool = False
) -> Iterator[ModelIndex]:
    """All models in the prior support, by size then lexicographically."""
    forced = tuple(sorted(set(forced)))
    free = [j for j in range(p) if j not in set(forced)]
    for k in range(len(free) + 1):
        first = ModelIndex.of(free[:k], forced)
        if not in_support(first, p, count_forced):
            break
        for extra in combinations(free, k):
            yield ModelIndex.of(extra, forced)


def support_size(p: int, forced: Iterable[int] = (), count_forced: bool = False) -> int:
    n_forced = len(set(forced))
    free = p - n_forced
    total = 0
    for k in range(free + 1):
        size = k + n_forced if count_forced else k
        limit = p if count_forced else free
        if not 2 * size < limit:
            break
        total += math.comb(free, k)
    return total


def _safe(evaluator: Evaluator) -> Evaluator:
    def score(omega: ModelIndex) -> float:
        try:
            return float(evaluator(omega))
        except EstimationError:
            return -math.inf

    return score


def exhaustive_search(
    evaluator: Evaluator,
    p: int,
    forced: Iterable[int] = (),
    c: float = 3.0,
    count_forced: bool = False,
) -> AcceptableSet:
    """Acceptable set by full enumeration of the model space."""
    size = support_size(p, forced, count_forced)
    if size > MAX_EXHAUSTIVE:
        raise TooLarge(f"{size} candidate models exceeds the enumeration limit {MAX_EXHAUSTIVE}")
    score = _safe(evaluator)
    scores = {m: score(m) for m in enumerate_models(p, forced, count_forced)}
    out = AcceptableSet.from_scores(scores, c)
    out.n_evaluated = len(scores)
    return out


def shotgun_search(
    evaluator: Evaluator,
    p: int,
    forced: Iterable[int] = (),
    config: SearchConfig = SearchConfig(),
    rng: np.random.Generator | None = None,
) -> AcceptableSet:
    """Run the escort-distribution shotgun search for ``config.iterations`` steps.

    Each model is scored at most once. Singular models (the evaluator raises
    an :class:`~ivbgmm.exceptions.EstimationError`) score ``-inf`` and are
    never accepted or sampled.
    """
    forced = tuple(sorted(set(forced)))
    if rng is None:
        rng = np.random.default_rng(config.seed)
    current = config.initial if config.initial is not None else ModelIndex(forced, forced)
    if not set(forced) <= set(current.omega):
        raise InvalidModel(f"initial model {current!r} does not contain the forced indices")
    current = ModelIndex(current.omega, forced)
    if not in_support(current, p, config.count_forced):
        raise InvalidModel(f"initial model {current!r} is outside the prior support")

    raw = _safe(evaluator)
    cache: dict[ModelIndex, float] = {}

    def score(m: ModelIndex) -> float:
        s = cache.get(m)
        if s is None:
            s = cache[m] = raw(m)
        return s

    cut = math.log(config.c)
    s0 = score(current)
    accepted = {current: s0} if np.isfinite(s0) else {}
    log_max = s0
    path = [current]

    for _ in range(config.iterations):
        nbd = neighborhood(current, p, forced, config.count_forced)
        if not nbd:
            break
        nbd_scores = [score(m) for m in nbd]
        # W = A u nbd(current), then re-threshold A against the best in W.
        for m, s in zip(nbd, nbd_scores):
            if np.isfinite(s):
                accepted[m] = s
        if not accepted:
            raise AllSingular("the initial model and its whole neighbourhood are singular")
        log_max = max(accepted.values())
        accepted = {m: s for m, s in accepted.items() if log_max - s <= cut}

        if not any(np.isfinite(nbd_scores)):
            break
        probs = escort_probs(nbd_scores, config.tau)
        current = nbd[int(rng.choice(len(nbd), p=probs))]
        path.append(current)

    if not accepted:
        raise AllSingular("no non-singular model was visited")
    return AcceptableSet(
        entries=accepted, c=config.c, log_max=log_max, path=path, n_evaluated=len(cache)
    )
