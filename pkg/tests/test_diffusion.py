import math

import numpy as np
import pytest

from influence_partition.diffusion import (
    SizeCapError,
    exact_sigma_ic,
    exact_sigma_lt,
    sigma_community_ic,
    sigma_community_lt,
    simulate_ic,
    simulate_lt,
    IcMcSpread,
    LtMcSpread,
)
from influence_partition.graph import build_graph, induced_subgraph

from conftest import naive_exact_ic, naive_exact_lt, random_lt_graph


class TestSimulateIc:
    def test_certain_edges_reach_everything(self):
        g = build_graph(4, [(0, 1, 1.0), (1, 2, 1.0), (3, 0, 1.0)])
        assert simulate_ic(g, {0}, 1) == frozenset({0, 1, 2})

    def test_zero_probability_stops_at_seeds(self):
        g = build_graph(3, [(0, 1, 0.0), (1, 2, 0.0)])
        assert simulate_ic(g, {0, 2}, 1) == frozenset({0, 2})

    def test_single_edge_bernoulli_frequency(self):
        g = build_graph(2, [(0, 1, 0.5)])
        runs = 100_000
        hits = sum(len(simulate_ic(g, {0}, seed)) - 1 for seed in range(runs))
        # binomial(runs, 0.5): 3 sigma band
        assert abs(hits / runs - 0.5) < 3 * 0.5 / math.sqrt(runs)

    def test_monotone_coupling(self):
        for seed in range(30):
            g = random_lt_graph(seed, n=6, e_max=10)
            small = simulate_ic(g, {0}, seed)
            big = simulate_ic(g, {0, 1}, seed)
            assert small <= big

    def test_seed_out_of_range(self):
        g = build_graph(2, [(0, 1, 0.5)])
        with pytest.raises(ValueError):
            simulate_ic(g, {5}, 0)


class TestSimulateLt:
    def test_full_weight_always_activates(self):
        g = build_graph(2, [(0, 1, 1.0)])
        for seed in range(20):
            assert simulate_lt(g, {0}, seed) == frozenset({0, 1})

    def test_empty_seeds(self):
        g = build_graph(2, [(0, 1, 1.0)])
        assert simulate_lt(g, set(), 3) == frozenset()

    def test_requires_lt_valid(self):
        g = build_graph(3, [(0, 2, 0.8), (1, 2, 0.8)])
        assert not g.lt_valid
        with pytest.raises(ValueError):
            simulate_lt(g, {0}, 1)

    def test_monotone_coupling(self):
        for seed in range(30):
            g = random_lt_graph(seed + 100, n=6, e_max=10)
            assert simulate_lt(g, {2}, seed) <= simulate_lt(g, {1, 2}, seed)

    def test_diamond_expected_extra_activations(self, diamond):
        runs = 40_000
        total = sum(len(simulate_lt(diamond, {0}, seed)) - 1 for seed in range(runs))
        assert abs(total / runs - 1.5) < 0.03


class TestExactOracles:
    def test_single_edge(self):
        g = build_graph(2, [(0, 1, 0.7)])
        assert exact_sigma_ic(g) == pytest.approx(0.7, abs=1e-12)
        assert exact_sigma_lt(g) == pytest.approx(0.7, abs=1e-12)

    def test_path_both_models(self, path3):
        assert exact_sigma_ic(path3) == pytest.approx(1.25, abs=1e-12)
        assert exact_sigma_lt(path3) == pytest.approx(1.25, abs=1e-12)

    def test_diamond_values(self, diamond):
        # sigma(u): IC 1.4375 vs LT 1.5; totals add the v1/v2 contributions
        assert exact_sigma_ic(diamond) == pytest.approx(2.4375, abs=1e-12)
        assert exact_sigma_lt(diamond) == pytest.approx(2.5, abs=1e-12)

    def test_single_paths_agree_across_models(self):
        for seed in range(5):
            gen = np.random.default_rng(seed)
            probs = gen.uniform(0.1, 0.9, 4)
            g = build_graph(5, [(i, i + 1, float(p)) for i, p in enumerate(probs)])
            assert exact_sigma_lt(g) == pytest.approx(exact_sigma_ic(g), abs=1e-12)

    def test_caps_refuse(self):
        big = build_graph(8, [(i, j, 0.1) for i in range(8) for j in range(8) if i != j][:30])
        assert big.lt_valid
        with pytest.raises(SizeCapError):
            exact_sigma_ic(big, max_edges=20)
        with pytest.raises(SizeCapError):
            exact_sigma_lt(big, max_configs=10)

    def test_matches_independent_enumeration(self):
        for seed in range(12):
            g = random_lt_graph(seed, n=5, e_max=8)
            assert exact_sigma_ic(g) == pytest.approx(naive_exact_ic(g), abs=1e-10)
            assert exact_sigma_lt(g) == pytest.approx(naive_exact_lt(g), abs=1e-10)


class TestCommunityEstimators:
    def test_empty_and_singleton(self, path3):
        empty = induced_subgraph(path3, set())
        assert sigma_community_ic(empty, r=10, rng=0).mean == 0.0
        single = induced_subgraph(path3, {1})
        assert sigma_community_ic(single, r=10, rng=0).mean == 0.0
        assert sigma_community_lt(single, r=10, rng=0).mean == 0.0

    def test_path_matches_exact(self, path3):
        est = sigma_community_ic(path3, r=20_000, rng=5)
        assert abs(est.mean - 1.25) < 4 * est.std_error
        est = sigma_community_lt(path3, r=20_000, rng=5)
        assert abs(est.mean - 1.25) < 4 * est.std_error

    def test_mc_consistency_random_graphs(self):
        for seed in range(4):
            g = random_lt_graph(seed + 40, n=6, e_max=9)
            est = sigma_community_ic(g, r=10_000, rng=seed)
            assert abs(est.mean - exact_sigma_ic(g)) <= 4 * max(est.std_error, 1e-6)
            est = sigma_community_lt(g, r=10_000, rng=seed)
            assert abs(est.mean - exact_sigma_lt(g)) <= 4 * max(est.std_error, 1e-6)

    def test_deterministic_bit_for_bit(self, diamond):
        a = sigma_community_ic(diamond, r=200, rng=11)
        b = sigma_community_ic(diamond, r=200, rng=11)
        assert (a.mean, a.std_error, a.samples) == (b.mean, b.std_error, b.samples)
        c = sigma_community_lt(diamond, r=200, rng=11)
        d = sigma_community_lt(diamond, r=200, rng=11)
        assert (c.mean, c.std_error) == (d.mean, d.std_error)

    def test_run_count_validated(self, diamond):
        with pytest.raises(ValueError):
            sigma_community_ic(diamond, r=0, rng=1)

    def test_estimator_agrees_with_per_seed_simulation(self, diamond):
        # same estimand, different realization: statistically compatible
        est = sigma_community_ic(diamond, r=30_000, rng=2)
        runs = 30_000
        total = 0
        for seed in range(runs):
            for node in range(4):
                total += len(simulate_ic(diamond, {node}, seed * 7 + node)) - 1
        per_seed_mean = total / runs
        assert abs(est.mean - per_seed_mean) < 5 * est.std_error + 0.02

    def test_subset_scoring_uses_shared_randomness(self, diamond):
        m1 = IcMcSpread(diamond, r=500, seed=9)
        m2 = IcMcSpread(diamond, r=500, seed=9)
        assert m1.sigma({0, 1, 3}) == m2.sigma({0, 1, 3})
        lt1 = LtMcSpread(diamond, r=500, seed=9)
        small = lt1.run_totals({0, 1})
        big = lt1.run_totals({0, 1, 3})
        assert (big >= small - 1e-12).all()

    def test_cross_model_dominance_sampled(self):
        for seed in range(10):
            g = random_lt_graph(seed + 300, n=6, e_max=9)
            assert exact_sigma_lt(g) >= exact_sigma_ic(g) - 1e-12
