"""Meta-path walks, pair extraction, and noise tables."""

import warnings

import numpy as np
import pytest
from scipy.stats import chisquare

from muxembed import (
    AliasTable,
    MetaPathSchema,
    WalkConfig,
    WalkConfigError,
    build_noise_table,
    dump_walks,
    generate_corpus,
    generate_walks,
    transition_probabilities,
    walk_step,
    walks_to_pairs,
)
from muxembed.walker import SampleSet, WalkCorpus

from conftest import build_graph, random_multiplex


class TestMetaPathSchema:
    def test_requires_two_positions(self):
        with pytest.raises(WalkConfigError):
            MetaPathSchema((0,))

    def test_cyclic_continuation(self):
        # U-I-U keeps alternating: U I U I U ...
        schema = MetaPathSchema((0, 1, 0))
        got = [schema.type_at(p) for p in range(7)]
        assert got == [0, 1, 0, 1, 0, 1, 0]

    def test_single_type_schema(self):
        schema = MetaPathSchema((0, 0))
        assert [schema.type_at(p) for p in range(4)] == [0, 0, 0, 0]


class TestWalkStep:
    def test_star_center_uniform(self):
        rows = [("e0", "hub", f"leaf{k}") for k in range(4)]
        g = build_graph(rows, ["e0"])
        hub = g.node_index("hub")
        schema = MetaPathSchema((0, 0))
        rng = np.random.default_rng(99)
        counts = np.zeros(g.num_nodes)
        draws = 100_000
        for _ in range(draws):
            counts[walk_step(g, 0, hub, schema, 0, rng)] += 1
        valid = np.flatnonzero(counts)
        assert len(valid) == 4
        stat, p = chisquare(counts[valid], np.full(4, draws / 4))
        assert p > 0.01

    def test_single_candidate_certain(self, typed_graph):
        g = typed_graph
        schema = MetaPathSchema.from_names(g.schema, ("user", "item", "user"))
        u2 = g.node_index("U2")
        rng = np.random.default_rng(0)
        # U2's only "buy" neighbor is I2
        for _ in range(10):
            assert walk_step(g, 0, u2, schema, 0, rng) == g.node_index("I2")

    def test_wrong_type_neighbors_stop(self, typed_graph):
        g = typed_graph
        # from an item position, the schema demands a user next; querying a
        # schema that demands an item instead must stop
        schema = MetaPathSchema.from_names(g.schema, ("user", "user"))
        rng = np.random.default_rng(0)
        assert walk_step(g, 0, g.node_index("U0"), schema, 0, rng) is None

    def test_transition_probabilities_stochastic_or_zero(self):
        g = random_multiplex(n=12, m=2, p=0.3, seed=7)
        schema = MetaPathSchema((0, 0))
        for r in range(2):
            for i in range(g.num_nodes):
                probs = transition_probabilities(g, r, i, schema, 0)
                total = probs.sum()
                assert np.isclose(total, 1.0) or total == 0.0


class TestGenerateWalks:
    def test_walk_length_two_emits_edges(self):
        g = build_graph([("e0", "a", "b"), ("e0", "b", "c")], ["e0"])
        config = WalkConfig(walks_per_node=3, walk_length=2, seed=1)
        corpus = generate_walks(g, 0, config)
        for walk in corpus.walks[0]:
            assert len(walk) <= 2
            if len(walk) == 2:
                assert int(walk[1]) in g.neighbors(int(walk[0]), 0)

    def test_walk_count_without_dead_ends(self):
        g = random_multiplex(n=15, m=1, p=0.6, seed=2)
        config = WalkConfig(walks_per_node=20, walk_length=10, seed=3)
        corpus = generate_walks(g, 0, config)
        assert len(corpus.walks[0]) == 20 * g.num_nodes
        assert all(len(w) == 10 for w in corpus.walks[0])

    def test_deterministic_and_thread_invariant(self):
        g = random_multiplex(n=12, m=2, p=0.4, seed=5)
        config = WalkConfig(walks_per_node=4, walk_length=6, seed=11)
        one = generate_corpus(g, config, threads=1)
        two = generate_corpus(g, config, threads=1)
        threaded = generate_corpus(g, config, threads=3)
        for r in one.walks:
            for w1, w2, w3 in zip(one.walks[r], two.walks[r], threaded.walks[r]):
                assert np.array_equal(w1, w2)
                assert np.array_equal(w1, w3)

    def test_edge_and_schema_consistency(self, typed_graph):
        g = typed_graph
        schemas = {
            r: [
                MetaPathSchema.from_names(g.schema, ("user", "item", "user")),
                MetaPathSchema.from_names(g.schema, ("item", "user", "item")),
            ]
            for r in range(2)
        }
        config = WalkConfig(walks_per_node=5, walk_length=7, schemas=schemas, seed=4)
        for r in range(2):
            corpus = generate_walks(g, r, config)
            assert len(corpus.walks[r]) > 0
            for walk in corpus.walks[r]:
                for a, b in zip(walk, walk[1:]):
                    assert int(b) in g.neighbors(int(a), r)
                first_type = int(g.node_type_ids[walk[0]])
                schema = next(
                    s for s in schemas[r] if s.type_at(0) == first_type
                )
                for pos, node in enumerate(walk):
                    assert int(g.node_type_ids[node]) == schema.type_at(pos)

    def test_missing_schema_is_config_error(self, typed_graph):
        config = WalkConfig(seed=0)
        with pytest.raises(WalkConfigError):
            generate_walks(typed_graph, 0, config)


class TestWalksToPairs:
    def test_three_node_walk_radius_one(self):
        corpus = WalkCorpus({0: [np.array([5, 7, 9])]})
        samples = walks_to_pairs(corpus, 1)
        got = sorted((s.center, s.context, s.edge_type) for s in samples)
        assert got == [(5, 7, 0), (7, 5, 0), (7, 9, 0), (9, 7, 0)]

    def test_full_window_count(self):
        walk = np.arange(6)
        samples = walks_to_pairs(WalkCorpus({1: [walk]}), 10)
        # brute-force enumeration over positions
        want = sorted(
            (int(walk[t]), int(walk[k]), 1)
            for t in range(6)
            for k in range(6)
            if k != t and abs(k - t) <= 10
        )
        assert len(samples) == 6 * 5
        assert sorted((s.center, s.context, s.edge_type) for s in samples) == want

    def test_singleton_walk_no_pairs(self):
        samples = walks_to_pairs(WalkCorpus({0: [np.array([3])]}), 5)
        assert len(samples) == 0

    def test_repeated_node_positions_skipped(self):
        samples = walks_to_pairs(WalkCorpus({0: [np.array([1, 2, 1])]}), 2)
        for s in samples:
            assert s.center != s.context

    def test_pair_symmetry(self):
        g = random_multiplex(n=10, m=1, p=0.5, seed=6)
        config = WalkConfig(walks_per_node=2, walk_length=8, seed=9)
        samples = walks_to_pairs(generate_walks(g, 0, config), 5)
        seen = set((s.center, s.context, s.edge_type) for s in samples)
        for c, x, r in seen:
            assert (x, c, r) in seen


class TestNoiseTable:
    def test_single_node_certain(self):
        g = build_graph([("e0", "a", "b")], ["e0"])
        samples = SampleSet([0, 1], [1, 0], [0, 0])
        noise = build_noise_table(g, samples)
        rng = np.random.default_rng(1)
        draws = noise.sample(0, rng, 50)
        assert set(draws.tolist()) <= {0, 1}

    def test_smoothing_exponent_hand_case(self):
        # counts 16 and 81 at exponent 0.75 give masses 8 and 27
        g = build_graph([("e0", "a", "b")], ["e0"])
        contexts = np.array([0] * 16 + [1] * 81)
        samples = SampleSet(np.ones_like(contexts), contexts, np.zeros_like(contexts))
        noise = build_noise_table(g, samples, exponent=0.75)
        assert np.isclose(noise.probability(g, 0), 8 / 35)
        assert np.isclose(noise.probability(g, 1), 27 / 35)

    def test_monte_carlo_matches_table(self):
        g = random_multiplex(n=12, m=1, p=0.5, seed=14)
        config = WalkConfig(walks_per_node=5, walk_length=8, seed=2)
        samples = walks_to_pairs(generate_walks(g, 0, config), 4)
        noise = build_noise_table(g, samples)
        rng = np.random.default_rng(3)
        draws = noise.sample(0, rng, 1_000_000)
        freq = np.bincount(draws, minlength=g.num_nodes) / 1e6
        for node in range(g.num_nodes):
            assert abs(freq[node] - noise.probability(g, node)) < 0.01

    def test_draws_restricted_to_requested_type(self, typed_graph):
        g = typed_graph
        contexts = np.array([g.node_index("I0"), g.node_index("I1")] * 10)
        samples = SampleSet(np.zeros_like(contexts), contexts, np.zeros_like(contexts))
        with warnings.catch_warnings():
            warnings.simplefilter("ignore")
            noise = build_noise_table(g, samples)
        rng = np.random.default_rng(4)
        item_type = g.schema.node_type_id("item")
        draws = noise.sample(item_type, rng, 500)
        assert set(g.node_type_ids[draws].tolist()) == {item_type}

    def test_zero_context_type_falls_back_to_uniform(self, typed_graph):
        g = typed_graph
        contexts = np.array([g.node_index("I0")] * 8)
        samples = SampleSet(np.zeros_like(contexts), contexts, np.zeros_like(contexts))
        with pytest.warns(UserWarning, match="uniform"):
            noise = build_noise_table(g, samples)
        user_type = g.schema.node_type_id("user")
        users = g.nodes_of_type(user_type)
        for u in users:
            assert np.isclose(noise.probability(g, int(u)), 1.0 / len(users))

    def test_alias_table_statistics(self):
        probs = np.array([0.5, 0.2, 0.2, 0.1])
        table = AliasTable(probs)
        rng = np.random.default_rng(8)
        draws = table.sample(rng, 200_000)
        freq = np.bincount(draws, minlength=4) / 200_000
        assert np.abs(freq - probs).max() < 0.01


def test_dump_walks_format(tmp_path, toy_graph):
    config = WalkConfig(walks_per_node=1, walk_length=3, seed=0)
    corpus = generate_corpus(toy_graph, config)
    path = tmp_path / "walks.txt"
    dump_walks(corpus, toy_graph, path)
    lines = path.read_text().splitlines()
    assert len(lines) == len(corpus)
    names = set(toy_graph.schema.edge_types)
    ids = set(toy_graph.external_ids())
    for line in lines:
        parts = line.split(" ")
        assert parts[0] in names
        assert set(parts[1:]) <= ids
