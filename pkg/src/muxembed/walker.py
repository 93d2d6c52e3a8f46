"""Meta-path random walks, skip-gram pair extraction, and noise tables.

Walks are generated independently per edge type: consecutive nodes must be
adjacent in that type's view and node types must follow the (cyclically
repeated) meta-path schema.  Each (edge type, schema, start node, walk
index) task owns an independently seeded RNG stream, so corpora are
identical regardless of how generation is parallelized.
"""

from __future__ import annotations

import logging
import warnings
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field

import numpy as np

from .errors import WalkConfigError
from .graph import AmhenGraph

logger = logging.getLogger(__name__)


@dataclass(frozen=True)
class MetaPathSchema:
    """A sequence of node-type ids constraining walk transitions.

    Positions past the end revisit the interior cyclically, so a schema
    A-B-A continues A, B, A, B, ... for walks longer than the schema.
    """

    type_sequence: tuple[int, ...]

    def __post_init__(self):
        if len(self.type_sequence) < 2:
            raise WalkConfigError("meta-path schema needs at least two positions")

    @property
    def length(self) -> int:
        return len(self.type_sequence)

    def type_at(self, position: int) -> int:
        """Node type required at a 0-based walk position."""
        if position < self.length:
            return self.type_sequence[position]
        interior = self.length - 1
        return self.type_sequence[1 + (position - 1) % interior]

    @classmethod
    def from_names(cls, graph_schema, names) -> "MetaPathSchema":
        return cls(tuple(graph_schema.node_type_id(t) for t in names))


@dataclass
class WalkConfig:
    """Walk generation settings; defaults follow the standard configuration."""

    walks_per_node: int = 20
    walk_length: int = 10
    window_radius: int = 5
    schemas: dict[int, list[MetaPathSchema]] = field(default_factory=dict)
    seed: int = 0
    noise_exponent: float = 0.75

    def __post_init__(self):
        if self.walk_length < 2:
            raise WalkConfigError("walk_length must be at least 2")
        if self.window_radius < 1:
            raise WalkConfigError("window_radius must be at least 1")

    def schemas_for(self, graph: AmhenGraph, edge_type: int) -> list[MetaPathSchema]:
        if edge_type in self.schemas and self.schemas[edge_type]:
            return self.schemas[edge_type]
        if graph.schema.num_node_types == 1:
            return [MetaPathSchema((0, 0))]
        raise WalkConfigError(
            f"no meta-path schema configured for edge type "
            f"{graph.schema.edge_types[edge_type]!r}"
        )


@dataclass(frozen=True)
class TrainingSample:
    """One (center, context) skip-gram pair tagged with its edge type."""

    center: int
    context: int
    edge_type: int


class SampleSet:
    """Column-oriented store of training samples."""

    def __init__(self, centers, contexts, edge_types):
        self.centers = np.asarray(centers, dtype=np.int64)
        self.contexts = np.asarray(contexts, dtype=np.int64)
        self.edge_types = np.asarray(edge_types, dtype=np.int64)

    def __len__(self):
        return len(self.centers)

    def __getitem__(self, i) -> TrainingSample:
        return TrainingSample(
            int(self.centers[i]), int(self.contexts[i]), int(self.edge_types[i])
        )

    def __iter__(self):
        for i in range(len(self)):
            yield self[i]


@dataclass
class WalkCorpus:
    """Per-edge-type node sequences produced by the walker."""

    walks: dict[int, list[np.ndarray]]

    def __len__(self):
        return sum(len(w) for w in self.walks.values())

    def merge(self, other: "WalkCorpus") -> "WalkCorpus":
        merged = dict(self.walks)
        for r, w in other.walks.items():
            merged.setdefault(r, []).extend(w)
        return WalkCorpus(merged)


def walk_step(graph, edge_type, current, schema, position, rng):
    """One transition: uniform over neighbors matching the next schema type.

    Returns the next node index, or None when no neighbor has the required
    type (the zero-probability branch of the transition rule).
    """
    nbrs = graph.neighbors(current, edge_type)
    if len(nbrs) == 0:
        return None
    want = schema.type_at(position + 1)
    if graph.schema.num_node_types > 1:
        nbrs = nbrs[graph.node_type_ids[nbrs] == want]
        if len(nbrs) == 0:
            return None
    elif want != 0:
        return None
    return int(nbrs[rng.integers(len(nbrs))])


def transition_probabilities(graph, edge_type, current, schema, position):
    """Exact one-step distribution over all nodes (reference for tests)."""
    probs = np.zeros(graph.num_nodes)
    nbrs = graph.neighbors(current, edge_type)
    want = schema.type_at(position + 1)
    valid = nbrs[graph.node_type_ids[nbrs] == want]
    if len(valid):
        probs[valid] = 1.0 / len(valid)
    return probs


def _one_walk(graph, edge_type, schema, start, walk_length, seed_key):
    rng = np.random.default_rng(np.random.SeedSequence(seed_key))
    walk = [start]
    for pos in range(walk_length - 1):
        nxt = walk_step(graph, edge_type, walk[-1], schema, pos, rng)
        if nxt is None:
            break
        walk.append(nxt)
    return np.array(walk, dtype=np.int64)


def generate_walks(
    graph: AmhenGraph, edge_type: int, config: WalkConfig, threads: int = 1
) -> WalkCorpus:
    """All walks for one edge type.

    Every node whose type matches a schema's first position starts
    ``walks_per_node`` walks under that schema.  Dead-end walks are kept at
    their truncated length.  Output order is canonical (schema, start node,
    walk index), so results do not depend on the thread count.
    """
    schemas = config.schemas_for(graph, edge_type)
    tasks = []
    for si, schema in enumerate(schemas):
        starts = graph.nodes_of_type(schema.type_at(0))
        for start in starts:
            for w in range(config.walks_per_node):
                tasks.append((si, int(start), w))

    def run(task):
        si, start, w = task
        key = (config.seed, edge_type, si, start, w)
        return _one_walk(
            graph, edge_type, schemas[si], start, config.walk_length, key
        )

    if threads > 1:
        with ThreadPoolExecutor(max_workers=threads) as pool:
            walks = list(pool.map(run, tasks))
    else:
        walks = [run(t) for t in tasks]
    return WalkCorpus({edge_type: walks})


def generate_corpus(graph: AmhenGraph, config: WalkConfig, threads: int = 1) -> WalkCorpus:
    """Walks for every edge type of the graph."""
    corpus = WalkCorpus({})
    for r in range(graph.num_edge_types):
        corpus = corpus.merge(generate_walks(graph, r, config, threads=threads))
    return corpus


def walks_to_pairs(corpus: WalkCorpus, window_radius: int) -> SampleSet:
    """Extract (center, context, edge_type) pairs within the window radius.

    Both directions of each co-occurrence are emitted; positions holding the
    same node are skipped (a sample's center and context must differ).
    """
    centers, contexts, etypes = [], [], []
    for r in sorted(corpus.walks):
        for walk in corpus.walks[r]:
            n = len(walk)
            for off in range(1, min(window_radius, n - 1) + 1):
                left, right = walk[:-off], walk[off:]
                keep = left != right
                if not keep.all():
                    left, right = left[keep], right[keep]
                centers.append(left)
                contexts.append(right)
                centers.append(right)
                contexts.append(left)
                etypes.append(np.full(2 * len(left), r, dtype=np.int64))
    if not centers:
        empty = np.zeros(0, dtype=np.int64)
        return SampleSet(empty, empty, empty)
    return SampleSet(
        np.concatenate(centers), np.concatenate(contexts), np.concatenate(etypes)
    )


def dump_walks(corpus: WalkCorpus, graph: AmhenGraph, path) -> None:
    """One walk per line: edge type name then space-separated external ids."""
    ids = graph.external_ids()
    with open(path, "w", encoding="utf-8") as fh:
        for r in sorted(corpus.walks):
            name = graph.schema.edge_types[r]
            for walk in corpus.walks[r]:
                fh.write(name + " " + " ".join(ids[i] for i in walk) + "\n")


# -- alias sampling and the noise distribution ------------------------------


class AliasTable:
    """Vose alias method: O(1) draws from a fixed discrete distribution."""

    def __init__(self, probs: np.ndarray):
        probs = np.asarray(probs, dtype=np.float64)
        total = probs.sum()
        if not np.isfinite(total) or total <= 0:
            raise ValueError("alias table needs positive finite probabilities")
        self.probs = probs / total
        k = len(probs)
        scaled = self.probs * k
        self.accept = np.zeros(k)
        self.alias = np.zeros(k, dtype=np.int64)
        small = [i for i in range(k) if scaled[i] < 1.0]
        large = [i for i in range(k) if scaled[i] >= 1.0]
        scaled = scaled.copy()
        while small and large:
            s, l = small.pop(), large.pop()
            self.accept[s] = scaled[s]
            self.alias[s] = l
            scaled[l] -= 1.0 - scaled[s]
            (small if scaled[l] < 1.0 else large).append(l)
        for rest in (small, large):
            while rest:
                self.accept[rest.pop()] = 1.0

    def sample(self, rng, size=None):
        k = len(self.accept)
        idx = rng.integers(k, size=size)
        u = rng.random(size)
        return np.where(u < self.accept[idx], idx, self.alias[idx])


class NoiseTable:
    """Per-node-type negative-sampling distribution over context frequency.

    Probability of a node is proportional to its context count raised to
    ``exponent`` (0.75 by default), normalized within the node's type set.
    Types never observed as contexts fall back to uniform with a warning.
    """

    def __init__(self, node_ids: dict[int, np.ndarray], tables: dict[int, AliasTable]):
        self._node_ids = node_ids
        self._tables = tables

    def sample(self, node_type: int, rng, size=None) -> np.ndarray:
        picks = self._tables[node_type].sample(rng, size)
        return self._node_ids[node_type][picks]

    def probability(self, graph: AmhenGraph, node: int) -> float:
        z = int(graph.node_type_ids[node])
        ids = self._node_ids[z]
        pos = np.searchsorted(ids, node)
        if pos >= len(ids) or ids[pos] != node:
            return 0.0
        return float(self._tables[z].probs[pos])

    def node_types(self):
        return sorted(self._tables)


def build_noise_table(
    graph: AmhenGraph, samples: SampleSet, exponent: float = 0.75
) -> NoiseTable:
    """Noise distribution from context occurrences, smoothed by ``exponent``."""
    if len(samples) == 0:
        raise ValueError("cannot build a noise table from an empty sample set")
    counts = np.bincount(samples.contexts, minlength=graph.num_nodes).astype(np.float64)
    node_ids: dict[int, np.ndarray] = {}
    tables: dict[int, AliasTable] = {}
    for z in range(graph.schema.num_node_types):
        members = graph.nodes_of_type(z)
        if len(members) == 0:
            continue
        weights = counts[members] ** exponent
        if weights.sum() == 0:
            warnings.warn(
                f"node type {graph.schema.node_types[z]!r} never appears as a "
                "context; noise distribution falls back to uniform",
                stacklevel=2,
            )
            weights = np.ones(len(members))
        node_ids[z] = members
        tables[z] = AliasTable(weights)
    return NoiseTable(node_ids, tables)
