import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from ivbgmm import (
    AcceptableSet,
    ModelIndex,
    SearchConfig,
    center,
    compute_suffstats,
    escort_probs,
    exhaustive_search,
    log_marginal,
    neighborhood,
    shotgun_search,
)
from ivbgmm.exceptions import AllSingular, InvalidModel, SingularModel, TooLarge
from ivbgmm.search import enumerate_models, support_size

from oracles import random_dataset


def M(*idx, forced=()):
    return ModelIndex.of(idx, forced)


def evaluator_for(stats):
    return lambda m: log_marginal(stats, m)


class TestNeighborhood:
    def test_p5_singleton(self):
        got = neighborhood(M(0), 5)
        assert got == [M(), M(0, 1), M(0, 2), M(0, 3), M(0, 4)]

    def test_p4_boundary(self):
        assert neighborhood(M(0), 4) == [M()]

    def test_p12_empty(self):
        got = neighborhood(M(), 12)
        assert got == [M(j) for j in range(12)]

    def test_forced_never_removed(self):
        m = M(0, 5, forced=(5,))
        got = neighborhood(m, 8)
        assert all(5 in g.omega and g.forced == (5,) for g in got)
        assert M(5, forced=(5,)) in got and M(0, forced=(5,)) not in got

    @settings(max_examples=60, deadline=None)
    @given(st.integers(2, 14), st.data())
    def test_one_step_and_in_support(self, p, data):
        models = list(enumerate_models(p))
        m = models[data.draw(st.integers(0, len(models) - 1))]
        for g in neighborhood(m, p):
            assert len(set(g.omega) ^ set(m.omega)) == 1
            assert 2 * len(g) < p


class TestEscort:
    def test_uniform(self):
        np.testing.assert_allclose(escort_probs([-3.0] * 4, 0.1), 0.25, rtol=0, atol=1e-15)

    def test_identity_at_tau_one(self):
        np.testing.assert_allclose(escort_probs(np.log([0.9, 0.1]), 1.0), [0.9, 0.1], rtol=1e-12)

    def test_neg_inf_zero(self):
        pr = escort_probs([0.0, -np.inf, 0.0], 0.1)
        assert pr[1] == 0.0 and pr[0] == pytest.approx(0.5)

    def test_all_singular(self):
        with pytest.raises(AllSingular):
            escort_probs([-np.inf, -np.inf], 0.1)

    def test_tau_to_zero(self):
        pr = escort_probs([0.0, -50.0, 300.0, -np.inf], 1e-12)
        np.testing.assert_allclose(pr[[0, 1, 2]], 1 / 3, atol=1e-6)

    def test_huge_scores_stable(self):
        pr = escort_probs([1e6, 1e6 - 10.0], 1.0)
        assert np.all(np.isfinite(pr)) and pr[0] == pytest.approx(1 / (1 + math.exp(-10)))

    @settings(max_examples=80, deadline=None)
    @given(
        st.lists(st.floats(-1e4, 1e4), min_size=1, max_size=12),
        st.floats(-1e5, 1e5),
        st.floats(1e-3, 10.0),
    )
    def test_shift_invariance_and_normalization(self, scores, shift, tau):
        a = escort_probs(scores, tau)
        b = escort_probs(np.asarray(scores) + shift, tau)
        assert abs(a.sum() - 1.0) <= 1e-12
        np.testing.assert_allclose(a, b, atol=1e-9)


class TestAcceptableSet:
    def test_invariants(self):
        scores = {M(): 0.0, M(0): -1.0, M(1): -1.2, M(2): -5.0}
        a = AcceptableSet.from_scores(scores, 3.0)
        assert a.models == [M(), M(0)]
        assert a.log_max == max(a.entries.values())
        assert all(a.log_max - s <= math.log(3.0) for s in a.entries.values())
        assert sum(a.weights().values()) == pytest.approx(1.0, abs=1e-12)

    def test_best_tie_lexicographic(self):
        a = AcceptableSet.from_scores({M(3): 1.0, M(1): 1.0, M(): 0.0}, 3.0)
        assert a.best == M(1)


class TestExhaustive:
    def test_p2_degenerate(self, rng):
        y, d, Z = random_dataset(rng, 50, 2, n_invalid=0)
        a = exhaustive_search(evaluator_for(compute_suffstats(center(y, d, Z))), 2)
        assert a.models == [M()]

    def test_p4_five_models(self, rng):
        y, d, Z = random_dataset(rng, 80, 4, n_invalid=1)
        ev = evaluator_for(compute_suffstats(center(y, d, Z)))
        a = exhaustive_search(ev, 4)
        assert a.n_evaluated == 5
        # order independence: scoring a shuffled list gives the same set
        models = list(enumerate_models(4))
        rng.shuffle(models)
        b = AcceptableSet.from_scores({m: ev(m) for m in models}, 3.0)
        assert b.entries == a.entries

    def test_support_sizes(self):
        assert support_size(12) == len(list(enumerate_models(12))) == 1586
        assert support_size(5) == 16
        assert support_size(10, forced=range(6, 10)) == 1 + 6 + 15
        assert support_size(10, forced=range(6, 10), count_forced=True) == 1

    def test_too_large(self):
        with pytest.raises(TooLarge):
            exhaustive_search(lambda m: 0.0, 60)

    def test_singular_models_excluded(self):
        def ev(m):
            if m.omega == (1,):
                raise SingularModel("collinear")
            return -float(len(m))

        a = exhaustive_search(ev, 5, c=math.e**2)
        assert M(1) not in a and M(0) in a


class TestShotgun:
    def test_matches_exhaustive_p8(self):
        rng = np.random.default_rng(3)
        y, d, Z = random_dataset(rng, 500, 8, n_invalid=2)
        ev = evaluator_for(compute_suffstats(center(y, d, Z)))
        ex = exhaustive_search(ev, 8)
        sh = shotgun_search(ev, 8, config=SearchConfig(iterations=500, seed=1))
        assert sh.entries == ex.entries
        assert sh.log_max == ex.log_max

    def test_c_one_keeps_best_only(self, small_data):
        _, stats = small_data
        a = shotgun_search(evaluator_for(stats), stats.p, config=SearchConfig(iterations=200, c=1.0))
        assert len(a) == 1 and a.entries[a.best] == a.log_max

    def test_c_one_keeps_ties(self):
        a = shotgun_search(lambda m: 1.0 if len(m) == 1 else 0.0, 6, config=SearchConfig(iterations=50, c=1.0))
        assert a.models == [M(j) for j in range(6)]

    def test_constant_evaluator(self):
        a = shotgun_search(lambda m: 0.0, 7, config=SearchConfig(iterations=60, seed=2))
        visited = {M()}
        for m in a.path:
            visited.update(neighborhood(m, 7))
        # every model scored so far is acceptable; the last state's neighbourhood is scored only if a step follows
        scored = {M()}
        for m in a.path[:-1]:
            scored.update(neighborhood(m, 7))
        assert scored <= set(a.entries) <= visited
        assert len(a) == a.n_evaluated

    def test_caching_bound(self, small_data):
        _, stats = small_data
        calls = []

        def ev(m):
            calls.append(m)
            return log_marginal(stats, m)

        a = shotgun_search(ev, stats.p, config=SearchConfig(iterations=300, seed=4))
        assert len(calls) == len(set(calls)) == a.n_evaluated
        union = {a.path[0]}
        for m in a.path:
            union.update(neighborhood(m, stats.p))
        assert len(calls) <= len(union)

    def test_invariants_on_return(self, small_data):
        _, stats = small_data
        a = shotgun_search(evaluator_for(stats), stats.p, config=SearchConfig(iterations=100, seed=9))
        assert len(a) >= 1
        assert a.log_max == max(a.entries.values())
        assert all(a.log_max - s <= math.log(a.c) for s in a.entries.values())

    def test_deterministic(self, small_data):
        _, stats = small_data
        cfg = SearchConfig(iterations=150, seed=123)
        a = shotgun_search(evaluator_for(stats), stats.p, config=cfg)
        b = shotgun_search(evaluator_for(stats), stats.p, config=cfg)
        assert a.entries == b.entries and a.path == b.path

    def test_explicit_rng_reproducible(self, small_data):
        _, stats = small_data
        cfg = SearchConfig(iterations=80)
        a = shotgun_search(evaluator_for(stats), stats.p, config=cfg, rng=np.random.default_rng(5))
        b = shotgun_search(evaluator_for(stats), stats.p, config=cfg, rng=np.random.default_rng(5))
        assert a.path == b.path

    def test_path_moves_to_neighbours(self, small_data):
        _, stats = small_data
        a = shotgun_search(evaluator_for(stats), stats.p, config=SearchConfig(iterations=50, seed=8))
        for prev, nxt in zip(a.path, a.path[1:]):
            assert nxt in neighborhood(prev, stats.p)

    def test_forced_block(self, rng):
        y, d, Z = random_dataset(rng, 300, 8, n_invalid=1)
        stats = compute_suffstats(center(y, d, Z))
        forced = (6, 7)
        a = shotgun_search(evaluator_for(stats), 8, forced, SearchConfig(iterations=200))
        ex = exhaustive_search(evaluator_for(stats), 8, forced)
        assert all(set(forced) <= set(m.omega) for m in a.entries)
        assert a.entries == ex.entries

    def test_all_singular(self):
        def ev(m):
            raise SingularModel("nope")

        with pytest.raises(AllSingular):
            shotgun_search(ev, 6, config=SearchConfig(iterations=5))

    def test_singular_initial_is_tolerated(self):
        def ev(m):
            if len(m) == 0:
                raise SingularModel("nope")
            return -float(m.omega[0])

        a = shotgun_search(ev, 6, config=SearchConfig(iterations=5))
        assert M() not in a and M(0) in a

    def test_initial_outside_support(self):
        with pytest.raises(InvalidModel):
            shotgun_search(lambda m: 0.0, 4, config=SearchConfig(initial=M(0, 1)))

    def test_config_validation(self):
        for kw in ({"iterations": 0}, {"c": 0.5}, {"tau": 0.0}):
            with pytest.raises(ValueError):
                SearchConfig(**kw)
