import itertools

import numpy as np
import pytest

from influence_partition.graph import build_graph, induced_subgraph
from influence_partition.objectives import (
    Assignment,
    FractionalAssignment,
    Partition,
    complete_assignment,
    evaluate_f,
    is_independent,
    load_partition_csv,
    make_spread_model,
    save_partition_csv,
)

from conftest import random_lt_graph


class TestIndependence:
    def test_empty(self):
        assert is_independent(Assignment.from_pairs([]))

    def test_conflict(self):
        assert not is_independent(Assignment.from_pairs([(0, 1), (1, 1)]))

    def test_partition_always_independent(self):
        p = Partition(m=3, community_of=(0, 1, 2, 0))
        assert is_independent(p.to_assignment())


class TestEvaluateF:
    def test_empty_assignment_zero_for_all_models(self, path3):
        empty = Assignment.from_pairs([])
        for model in ("ic_exact", "lt_exact", "mia"):
            assert evaluate_f(path3, empty, model).mean == 0.0
        assert evaluate_f(path3, empty, "ic_mc", r=50, seed=1).mean == 0.0

    def test_path_split(self, path3):
        a = Assignment.from_pairs([(0, 0), (0, 1), (1, 2)])
        assert evaluate_f(path3, a, "ic_exact").mean == pytest.approx(0.5)

    def test_single_community_matches_whole_graph(self, diamond):
        whole = Assignment.from_pairs([(0, j) for j in range(4)])
        assert evaluate_f(diamond, whole, "ic_exact").mean == pytest.approx(2.4375)
        assert evaluate_f(diamond, whole, "lt_exact").mean == pytest.approx(2.5)

    def test_requires_independent(self, path3):
        with pytest.raises(ValueError):
            evaluate_f(path3, Assignment.from_pairs([(0, 0), (1, 0)]), "ic_exact")

    def test_unknown_model(self, path3):
        with pytest.raises(ValueError, match="unknown model"):
            evaluate_f(path3, Assignment.from_pairs([]), "bogus")

    def test_sandwich_ordering_on_random_assignments(self):
        gen = np.random.default_rng(17)
        for seed in range(8):
            g = random_lt_graph(seed + 500, n=6, e_max=9)
            assign = gen.integers(0, 2, g.node_count)
            a = Assignment.from_pairs([(int(c), j) for j, c in enumerate(assign)])
            lt = evaluate_f(g, a, "lt_exact").mean
            ic = evaluate_f(g, a, "ic_exact").mean
            low = evaluate_f(g, a, "mia").mean
            assert lt >= ic - 1e-12
            assert ic >= low - 1e-12

    def test_monotone_in_assignment_for_bounds(self):
        for seed in range(6):
            g = random_lt_graph(seed + 550, n=6, e_max=9)
            gen = np.random.default_rng(seed)
            pairs = [(int(gen.integers(0, 2)), j) for j in range(g.node_count)]
            for model in ("mia", "lt_exact"):
                prev = 0.0
                for k in range(len(pairs) + 1):
                    val = evaluate_f(g, Assignment.from_pairs(pairs[:k]), model).mean
                    assert val >= prev - 1e-12
                    prev = val

    def test_mc_reports_std_error(self, diamond):
        whole = Assignment.from_pairs([(0, j) for j in range(4)])
        est = evaluate_f(diamond, whole, "ic_mc", r=400, seed=3)
        assert est.samples == 400
        assert est.std_error > 0


class TestSupermodularityAndNonmodularity:
    def test_lt_exact_is_supermodular_small(self):
        # marginal gains grow with the community, exhaustively on small graphs
        for seed in range(6):
            g = random_lt_graph(seed + 600, n=5, e_max=8)
            sp = make_spread_model(g, "lt_exact")
            n = g.node_count
            for a_bits in range(1 << n):
                b_sets = [b for b in range(1 << n) if b & a_bits == a_bits and b != a_bits]
                for b_bits in b_sets:
                    for q in range(n):
                        if b_bits >> q & 1:
                            continue
                        a_set = frozenset(j for j in range(n) if a_bits >> j & 1)
                        b_set = frozenset(j for j in range(n) if b_bits >> j & 1)
                        ga = sp.sigma(a_set | {q}) - sp.sigma(a_set)
                        gb = sp.sigma(b_set | {q}) - sp.sigma(b_set)
                        assert ga <= gb + 1e-12

    def test_ic_exact_violates_both_directions_somewhere(self):
        # the raw objective is neither submodular nor supermodular
        found_sub_violation = False   # gain(A) < gain(B) with A subset of B
        found_super_violation = False
        for seed in range(1500):
            g = random_lt_graph(seed, n=5, e_max=8)
            sp = make_spread_model(g, "ic_exact")
            n = g.node_count
            for a_bits in range(1 << n):
                for q in range(n):
                    if a_bits >> q & 1:
                        continue
                    for add in range(n):
                        if add == q or a_bits >> add & 1:
                            continue
                        b_bits = a_bits | 1 << add
                        a_set = frozenset(j for j in range(n) if a_bits >> j & 1)
                        b_set = a_set | {add}
                        ga = sp.sigma(a_set | {q}) - sp.sigma(a_set)
                        gb = sp.sigma(b_set | {q}) - sp.sigma(b_set)
                        if ga < gb - 1e-9:
                            found_sub_violation = True
                        if ga > gb + 1e-9:
                            found_super_violation = True
                if found_sub_violation and found_super_violation:
                    break
            if found_sub_violation and found_super_violation:
                break
        assert found_sub_violation and found_super_violation


class TestCompleteAssignment:
    def test_total_assignment_unchanged(self, path3):
        a = Assignment.from_pairs([(0, 0), (1, 1), (0, 2)])
        part = complete_assignment(a, path3, 2)
        assert part.community_of == (0, 1, 0)

    def test_isolated_node_defaults_to_community_zero(self):
        g = build_graph(1, [])
        assert complete_assignment(Assignment.from_pairs([]), g, 3).community_of == (0,)

    def test_joins_by_marginal_gain(self):
        g = build_graph(2, [(0, 1, 0.5)])
        part = complete_assignment(Assignment.from_pairs([(0, 0)]), g, 2)
        assert part.community_of == (0, 0)

    def test_rejects_out_of_range_community(self, path3):
        with pytest.raises(ValueError):
            complete_assignment(Assignment.from_pairs([(5, 0)]), path3, 2)


class TestFractionalAssignment:
    def test_integral_round_trip(self):
        x = FractionalAssignment(np.array([[1.0, 0.0], [0.0, 0.0]]))
        assert x.is_integral()
        assert sorted(x.to_assignment().pairs) == [(0, 0)]

    def test_rejects_negative(self):
        with pytest.raises(ValueError):
            FractionalAssignment(np.array([[-0.2, 0.0]]))

    def test_rejects_column_overflow(self):
        with pytest.raises(ValueError):
            FractionalAssignment(np.array([[0.7], [0.7]]))


class TestPartitionSerialization:
    def test_round_trip(self, tmp_path, diamond):
        part = Partition(m=2, community_of=(0, 1, 0, 1))
        path = tmp_path / "part.csv"
        save_partition_csv(part, diamond, path)
        loaded = load_partition_csv(diamond, path)
        assert loaded.community_of == part.community_of
