"""Graph loading, validation, adjacency queries, and edge splitting."""

import math
import os
from pathlib import Path

import numpy as np
import pytest

from muxembed import (
    AmhenGraph,
    EdgeFileError,
    GraphSchema,
    NodeReferenceError,
    SchemaError,
    SplitInfeasibleError,
    load_graph,
    load_split,
    save_graph,
    save_split,
    split_edges,
)
from muxembed.errors import AttributeMissingError

from conftest import build_graph, random_multiplex


def write_edges(tmp_path, rows, name="edges.tsv"):
    path = tmp_path / name
    path.write_text(
        "\n".join("\t".join(row) for row in rows) + "\n", encoding="utf-8"
    )
    return path


class TestLoadGraph:
    def test_two_node_undirected_symmetry(self, tmp_path):
        path = write_edges(tmp_path, [("r1", "a", "b")])
        g = load_graph(path, schema=GraphSchema(edge_types=("r1",)))
        assert g.num_nodes == 2
        assert g.num_edges == 1
        a, b = g.node_index("a"), g.node_index("b")
        assert b in g.neighbors(a, 0)
        assert a in g.neighbors(b, 0)

    def test_comments_and_blank_lines_skipped(self, tmp_path):
        path = tmp_path / "edges.tsv"
        path.write_text("# header\nr1\ta\tb\n\nr1\tb\tc\n", encoding="utf-8")
        g = load_graph(path, schema=GraphSchema(edge_types=("r1",)))
        assert g.num_edges == 2

    def test_first_seen_index_order(self, tmp_path):
        path = write_edges(tmp_path, [("r1", "x", "c"), ("r1", "a", "x")])
        g = load_graph(path, schema=GraphSchema(edge_types=("r1",)))
        assert g.external_ids() == ["x", "c", "a"]

    def test_duplicates_and_self_loops_dropped_with_counts(self, tmp_path):
        rows = [("r1", "a", "b"), ("r1", "b", "a"), ("r1", "a", "a"), ("r1", "a", "b")]
        path = write_edges(tmp_path, rows)
        g = load_graph(path, schema=GraphSchema(edge_types=("r1",)))
        assert g.num_edges == 1
        assert g.duplicates_dropped == 2
        assert g.self_loops_dropped == 1

    def test_unknown_edge_type_is_schema_error(self, tmp_path):
        path = write_edges(tmp_path, [("bogus", "a", "b")])
        with pytest.raises(SchemaError):
            load_graph(path, schema=GraphSchema(edge_types=("r1",)))

    def test_bad_column_count(self, tmp_path):
        path = tmp_path / "edges.tsv"
        path.write_text("r1\ta\n", encoding="utf-8")
        with pytest.raises(EdgeFileError):
            load_graph(path, schema=GraphSchema(edge_types=("r1",)))

    def test_attribute_row_for_unknown_node(self, tmp_path):
        edges = write_edges(tmp_path, [("r1", "a", "b")])
        attrs = tmp_path / "attrs.tsv"
        attrs.write_text("ghost\t1.0,2.0\n", encoding="utf-8")
        with pytest.raises(NodeReferenceError):
            load_graph(edges, attrs, schema=GraphSchema(edge_types=("r1",)))

    def test_non_numeric_feature(self, tmp_path):
        edges = write_edges(tmp_path, [("r1", "a", "b")])
        attrs = tmp_path / "attrs.tsv"
        attrs.write_text("a\t1.0,oops\nb\t1.0,2.0\n", encoding="utf-8")
        with pytest.raises(EdgeFileError):
            load_graph(edges, attrs, schema=GraphSchema(edge_types=("r1",)))

    def test_feature_dimension_mismatch(self, tmp_path):
        edges = write_edges(tmp_path, [("r1", "a", "b")])
        attrs = tmp_path / "attrs.tsv"
        attrs.write_text("a\t1.0,2.0\nb\t1.0\n", encoding="utf-8")
        with pytest.raises(EdgeFileError):
            load_graph(edges, attrs, schema=GraphSchema(edge_types=("r1",)))

    def test_partial_attribute_coverage_rejected(self, tmp_path):
        edges = write_edges(tmp_path, [("r1", "a", "b")])
        attrs = tmp_path / "attrs.tsv"
        attrs.write_text("a\t1.0,2.0\n", encoding="utf-8")
        with pytest.raises(AttributeMissingError):
            load_graph(edges, attrs, schema=GraphSchema(edge_types=("r1",)))

    def test_attributes_land_on_type_local_rows(self, tmp_path):
        schema = GraphSchema(
            node_types=("user", "item"),
            edge_types=("r1",),
            type_prefixes=(("U", "user"), ("I", "item")),
        )
        edges = write_edges(tmp_path, [("r1", "U0", "I0"), ("r1", "U1", "I0")])
        attrs = tmp_path / "attrs.tsv"
        attrs.write_text(
            "U0\t1.0,2.0\nU1\t3.0,4.0\nI0\t9.0\n", encoding="utf-8"
        )
        g = load_graph(edges, attrs, schema=schema)
        assert g.features_of(g.node_index("U1")).tolist() == [3.0, 4.0]
        assert g.features_of(g.node_index("I0")).tolist() == [9.0]

    def test_unresolvable_prefix_is_schema_error(self, tmp_path):
        schema = GraphSchema(
            node_types=("user", "item"),
            edge_types=("r1",),
            type_prefixes=(("U", "user"),),
        )
        path = write_edges(tmp_path, [("r1", "U0", "X9")])
        with pytest.raises(SchemaError):
            load_graph(path, schema=schema)

    @pytest.mark.skipif(
        not os.environ.get("MUXEMBED_AMAZON_EDGES"),
        reason="set MUXEMBED_AMAZON_EDGES to the Amazon edge file to enable",
    )
    def test_amazon_statistics(self):
        g = load_graph(
            os.environ["MUXEMBED_AMAZON_EDGES"],
            schema=GraphSchema(edge_types=("also_bought", "also_viewed")),
        )
        assert g.num_nodes == 10166
        assert g.num_edges == 148865
        assert g.num_edge_types == 2

    @pytest.mark.skipif(
        not os.environ.get("MUXEMBED_YOUTUBE_EDGES"),
        reason="set MUXEMBED_YOUTUBE_EDGES to the YouTube edge file to enable",
    )
    def test_youtube_statistics(self):
        g = load_graph(
            os.environ["MUXEMBED_YOUTUBE_EDGES"],
            schema=GraphSchema(edge_types=tuple(f"t{i}" for i in range(5))),
        )
        assert g.num_nodes == 2000
        assert g.num_edges == 1310617
        assert g.num_edge_types == 5


class TestNeighbors:
    def test_isolated_node_empty(self):
        g = build_graph(
            [("e0", "a", "b"), ("e1", "c", "a")], ["e0", "e1"]
        )
        c = g.node_index("c")
        assert len(g.neighbors(c, 0)) == 0

    def test_path_graph_middle(self):
        g = build_graph([("e0", "a", "b"), ("e0", "b", "c")], ["e0"])
        b = g.node_index("b")
        got = sorted(g.neighbors(b, 0).tolist())
        assert got == sorted([g.node_index("a"), g.node_index("c")])

    def test_matches_bruteforce_rebuild(self):
        g = random_multiplex(n=10, m=2, p=0.5, seed=3)
        for r in range(2):
            adj = {i: set() for i in range(10)}
            for i, j in g.edges[r]:
                adj[int(i)].add(int(j))
                adj[int(j)].add(int(i))
            for i in range(10):
                got = g.neighbors(i, r)
                assert sorted(got.tolist()) == sorted(adj[i])
                assert list(got) == sorted(got)

    def test_out_of_range_raises(self, toy_graph):
        with pytest.raises(IndexError):
            toy_graph.neighbors(99, 0)
        with pytest.raises(IndexError):
            toy_graph.neighbors(0, 9)


class TestRoundTrip:
    def test_save_load_reproduces_edge_multiset(self, tmp_path):
        g = random_multiplex(n=12, m=2, p=0.4, seed=5)
        path = tmp_path / "dump.tsv"
        save_graph(g, path)
        g2 = load_graph(path, schema=g.schema)
        for r in range(2):
            left = {tuple(map(int, e)) for e in g.edges[r]}
            e2 = g2.edges[r]
            ids2 = g2.external_ids()
            ids1 = g.external_ids()
            remap = {ids2.index(x): ids1.index(x) for x in ids1}
            right = set()
            for i, j in e2:
                a, b = remap[int(i)], remap[int(j)]
                right.add((min(a, b), max(a, b)))
            assert left == right

    def test_content_hash_tracks_index_assignment(self, tmp_path):
        # the hash couples checkpoints to a concrete dense indexing, so the
        # same edge multiset listed in a different order hashes differently
        g1 = build_graph([("e0", "a", "b"), ("e0", "b", "c")], ["e0"])
        g2 = build_graph([("e0", "b", "c"), ("e0", "a", "b")], ["e0"])
        g1_again = build_graph([("e0", "a", "b"), ("e0", "b", "c")], ["e0"])
        assert g1.content_hash() == g1_again.content_hash()
        assert g1.content_hash() != g2.content_hash()


class TestSplitEdges:
    def test_forced_counts_100_edges(self):
        rows = [("e0", f"a{i}", f"b{i}") for i in range(100)]
        g = build_graph(rows, ["e0"])
        split = split_edges(g, 0.05, 0.10, seed=1)
        assert len(split.val_pos[0]) == 5
        assert len(split.test_pos[0]) == 10
        assert len(split.train_graph.edges[0]) == 85
        assert len(split.val_neg[0]) == 5
        assert len(split.test_neg[0]) == 10

    def test_deterministic_given_seed(self, tmp_path):
        g = random_multiplex(n=25, m=2, p=0.3, seed=9)
        p1, p2 = tmp_path / "s1.tsv", tmp_path / "s2.tsv"
        save_split(split_edges(g, 0.05, 0.10, seed=4), p1)
        save_split(split_edges(g, 0.05, 0.10, seed=4), p2)
        assert p1.read_bytes() == p2.read_bytes()

    def test_complete_graph_has_no_negatives(self):
        # K4 has zero non-edges: enumerate to confirm, then expect an error
        names = ["a", "b", "c", "d"]
        rows = [("e0", x, y) for idx, x in enumerate(names) for y in names[idx + 1:]]
        g = build_graph(rows, ["e0"])
        non_edges = [
            (i, j)
            for i in range(4)
            for j in range(i + 1, 4)
            if (i, j) not in g.edge_set(0)
        ]
        assert non_edges == []
        with pytest.raises(SplitInfeasibleError):
            split_edges(g, 0.2, 0.3, seed=0)

    def test_too_few_edges_names_type(self):
        rows = [("tiny", "a", "b"), ("tiny", "b", "c")]
        g = build_graph(rows, ["tiny"])
        with pytest.raises(SplitInfeasibleError, match="tiny"):
            split_edges(g, 0.05, 0.10, seed=0)

    def test_conservation_and_no_leakage(self):
        g = random_multiplex(n=30, m=2, p=0.3, seed=13)
        split = split_edges(g, 0.05, 0.10, seed=2)
        for r in range(2):
            total = len(g.edges[r])
            train = len(split.train_graph.edges[r])
            assert train + len(split.val_pos[r]) + len(split.test_pos[r]) == total
            train_set = split.train_graph.edge_set(r)
            orig = g.edge_set(r)
            for pair in map(tuple, split.test_pos[r]):
                assert pair not in train_set
                assert pair in orig
            for pair in map(tuple, np.vstack([split.val_neg[r], split.test_neg[r]])):
                assert pair not in orig
            # negatives use endpoints incident to this edge type
            incident = set(np.unique(g.edges[r]).tolist())
            for i, j in np.vstack([split.val_neg[r], split.test_neg[r]]):
                assert int(i) in incident and int(j) in incident

    def test_val_and_test_sets_disjoint(self):
        g = random_multiplex(n=30, m=1, p=0.4, seed=21)
        split = split_edges(g, 0.10, 0.15, seed=3)
        vp = set(map(tuple, split.val_pos[0]))
        tp = set(map(tuple, split.test_pos[0]))
        vn = set(map(tuple, split.val_neg[0]))
        tn = set(map(tuple, split.test_neg[0]))
        assert not vp & tp
        assert not vn & tn

    def test_negative_counts_match_positive_counts(self):
        g = random_multiplex(n=40, m=2, p=0.2, seed=17)
        split = split_edges(g, 0.07, 0.13, seed=5)
        for r in range(2):
            assert len(split.val_neg[r]) == len(split.val_pos[r])
            assert len(split.test_neg[r]) == len(split.test_pos[r])


class TestSplitManifest:
    def test_round_trip(self, tmp_path):
        g = random_multiplex(n=20, m=2, p=0.35, seed=8)
        split = split_edges(g, 0.05, 0.10, seed=6)
        path = tmp_path / "split.tsv"
        save_split(split, path)
        loaded = load_split(path, g)
        assert loaded.seed == 6
        assert loaded.graph_hash == g.content_hash()
        for r in range(2):
            for attr in ("val_pos", "val_neg", "test_pos", "test_neg"):
                want = getattr(split, attr)[r]
                got = getattr(loaded, attr)[r]
                assert sorted(map(tuple, want)) == sorted(map(tuple, got))
            assert (
                sorted(map(tuple, split.train_graph.edges[r]))
                == sorted(map(tuple, loaded.train_graph.edges[r]))
            )
