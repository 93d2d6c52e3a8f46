"""Shared graph builders and fixtures."""

import numpy as np
import pytest

from muxembed import AmhenGraph, GraphSchema


def build_graph(edge_rows, edge_types, attr_rows=None, node_types=("node",),
                type_prefixes=(), directed=()):
    schema = GraphSchema(
        node_types=tuple(node_types),
        edge_types=tuple(edge_types),
        directed=tuple(directed),
        type_prefixes=tuple(type_prefixes),
    )
    return AmhenGraph.build(schema, edge_rows, attr_rows)


def random_multiplex(n=30, m=3, p=0.15, seed=11, feature_dim=None):
    """Undirected random graph per edge type, optionally with node features."""
    rng = np.random.default_rng(seed)
    names = [f"n{i}" for i in range(n)]
    rows = []
    for r in range(m):
        for i in range(n):
            for j in range(i + 1, n):
                if rng.random() < p:
                    rows.append((f"e{r}", names[i], names[j]))
    attr_rows = None
    if feature_dim:
        feats = rng.normal(size=(n, feature_dim))
        attr_rows = [(names[i], feats[i]) for i in range(n)]
    return build_graph(rows, [f"e{r}" for r in range(m)], attr_rows)


def matching_graph(n=8):
    """Every node has exactly one neighbor per edge type, so sampled and
    full-neighborhood aggregation coincide (used to cross-check the batched
    training path against the per-sample reference)."""
    names = [f"n{i}" for i in range(n)]
    rows = [("e0", names[2 * i], names[2 * i + 1]) for i in range(n // 2)]
    rows += [
        ("e1", names[(2 * i + 1) % n], names[(2 * i + 2) % n]) for i in range(n // 2)
    ]
    return build_graph(rows, ["e0", "e1"])


def two_block_multiplex(n=200, m=2, p_in=0.2, p_out=0.01, lattice_k=9, seed=42):
    """Two equal blocks on latent rings.

    Within a block, the ring-lattice core (ring distance <= lattice_k) is
    always connected and longer pairs connect with a uniform tail rate chosen
    so the within-block edge probability is exactly p_in; cross-block pairs
    connect at p_out.  Edge types are independent draws over the shared
    latent geometry, so the views correlate the way multiplex data does.
    """
    rng = np.random.default_rng(seed)
    names = [f"n{i:03d}" for i in range(n)]
    half = n // 2
    within_pairs = half * (half - 1) // 2
    core_pairs = lattice_k * half
    tail_p = (p_in * within_pairs - core_pairs) / (within_pairs - core_pairs)
    assert 0.0 < tail_p < 1.0
    rows = []
    for r in range(m):
        for i in range(n):
            for j in range(i + 1, n):
                same = (i < half) == (j < half)
                if same:
                    a, b = i % half, j % half
                    dist = min((a - b) % half, (b - a) % half)
                    p = 1.0 if dist <= lattice_k else tail_p
                else:
                    p = p_out
                if rng.random() < p:
                    rows.append((f"e{r}", names[i], names[j]))
    return build_graph(rows, [f"e{r}" for r in range(m)])


@pytest.fixture
def toy_graph():
    """Path a-b-c on type e0 plus edges a-c, b-c on type e1."""
    rows = [("e0", "a", "b"), ("e0", "b", "c"), ("e1", "a", "c"), ("e1", "b", "c")]
    return build_graph(rows, ["e0", "e1"])


@pytest.fixture
def typed_graph():
    """Bipartite-ish user/item graph for meta-path tests."""
    rows = [
        ("buy", "U0", "I0"), ("buy", "U0", "I1"), ("buy", "U1", "I1"),
        ("buy", "U2", "I2"), ("view", "U0", "I2"), ("view", "U1", "I0"),
        ("view", "U2", "I1"),
    ]
    return build_graph(
        rows, ["buy", "view"], node_types=("user", "item"),
        type_prefixes=(("U", "user"), ("I", "item")),
    )
