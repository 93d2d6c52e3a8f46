"""In-memory model of attributed multiplex heterogeneous networks.

A graph holds typed nodes, one adjacency structure per edge type, and
optional per-node-type attribute matrices.  Graphs are immutable after
construction and safe for concurrent reads.
"""

from __future__ import annotations

import hashlib
import logging
import math
from dataclasses import dataclass, field

import numpy as np

from .errors import (
    AttributeMissingError,
    EdgeFileError,
    NodeReferenceError,
    SchemaError,
    SplitInfeasibleError,
)

logger = logging.getLogger(__name__)


@dataclass(frozen=True)
class NodeRef:
    """A node: dense index, external string id, and node-type id."""

    index: int
    external_id: str
    node_type: int


@dataclass(frozen=True)
class GraphSchema:
    """Declares the node types, edge types, and directedness of a network.

    When more than one node type is declared, each node's type is resolved
    from its external id by longest matching prefix in ``type_prefixes``.
    Single-type networks need no prefix rules.
    """

    node_types: tuple[str, ...] = ("node",)
    edge_types: tuple[str, ...] = ()
    directed: tuple[bool, ...] = ()
    type_prefixes: tuple[tuple[str, str], ...] = ()

    def __post_init__(self):
        if not self.edge_types:
            raise SchemaError("schema declares no edge types")
        if len(set(self.edge_types)) != len(self.edge_types):
            raise SchemaError("duplicate edge type names")
        if len(set(self.node_types)) != len(self.node_types):
            raise SchemaError("duplicate node type names")
        if self.directed and len(self.directed) != len(self.edge_types):
            raise SchemaError("directedness flags must match edge type count")
        if not self.directed:
            object.__setattr__(self, "directed", (False,) * len(self.edge_types))
        for _, tname in self.type_prefixes:
            if tname not in self.node_types:
                raise SchemaError(f"prefix rule targets undeclared node type {tname!r}")

    @property
    def num_node_types(self) -> int:
        return len(self.node_types)

    @property
    def num_edge_types(self) -> int:
        return len(self.edge_types)

    def edge_type_id(self, name: str) -> int:
        try:
            return self.edge_types.index(name)
        except ValueError:
            raise SchemaError(f"undeclared edge type {name!r}") from None

    def node_type_id(self, name: str) -> int:
        try:
            return self.node_types.index(name)
        except ValueError:
            raise SchemaError(f"undeclared node type {name!r}") from None

    def resolve_node_type(self, external_id: str) -> int:
        """Map an external node id to its node-type id."""
        if len(self.node_types) == 1:
            return 0
        best = None
        for prefix, tname in self.type_prefixes:
            if external_id.startswith(prefix):
                if best is None or len(prefix) > len(best[0]):
                    best = (prefix, tname)
        if best is None:
            raise SchemaError(
                f"cannot resolve node type of {external_id!r}: no prefix rule matches"
            )
        return self.node_type_id(best[1])


@dataclass
class AmhenGraph:
    """Attributed multiplex heterogeneous network.

    ``adjacency`` is CSR-like per edge type: ``indptr[r]`` of length n+1 and
    ``indices[r]`` holding sorted, duplicate-free neighbor lists.  For
    undirected edge types adjacency is symmetrized.  ``edges[r]`` is the
    canonical (head, tail) array: head < tail for undirected types.
    """

    schema: GraphSchema
    nodes: list[NodeRef]
    node_type_ids: np.ndarray
    type_local_index: np.ndarray
    edges: list[np.ndarray]
    indptr: list[np.ndarray]
    indices: list[np.ndarray]
    attributes: dict[int, np.ndarray] = field(default_factory=dict)
    duplicates_dropped: int = 0
    self_loops_dropped: int = 0
    _edge_sets: list[set] | None = None
    _hash: str | None = None
    _index_of: dict[str, int] | None = None

    # -- construction ---------------------------------------------------

    @classmethod
    def build(
        cls,
        schema: GraphSchema,
        edge_rows: list[tuple[str, str, str]],
        attr_rows: list[tuple[str, np.ndarray]] | None = None,
        allow_attr_only_nodes: bool = False,
    ) -> "AmhenGraph":
        """Build a validated graph from (edge_type, head, tail) rows.

        External ids are assigned dense indices in first-seen order over the
        edge rows (head before tail), then over attribute rows when
        ``allow_attr_only_nodes`` is set.  Self loops and duplicate edges per
        type are dropped with counts recorded on the graph.
        """
        index_of: dict[str, int] = {}
        ext_ids: list[str] = []

        def intern(ext: str) -> int:
            idx = index_of.get(ext)
            if idx is None:
                idx = len(ext_ids)
                index_of[ext] = idx
                ext_ids.append(ext)
            return idx

        m = schema.num_edge_types
        pair_lists: list[list[tuple[int, int]]] = [[] for _ in range(m)]
        seen: list[set] = [set() for _ in range(m)]
        dupes = 0
        loops = 0
        for etype_name, head, tail in edge_rows:
            r = schema.edge_type_id(etype_name)
            if head == tail:
                loops += 1
                continue
            i, j = intern(head), intern(tail)
            if not schema.directed[r] and i > j:
                i, j = j, i
            if (i, j) in seen[r]:
                dupes += 1
                continue
            seen[r].add((i, j))
            pair_lists[r].append((i, j))
        if loops:
            logger.warning("dropped %d self-loop edge(s)", loops)
        if dupes:
            logger.warning("dropped %d duplicate edge(s)", dupes)

        attr_by_node: dict[str, np.ndarray] = {}
        if attr_rows:
            for ext, feats in attr_rows:
                if ext not in index_of:
                    if not allow_attr_only_nodes:
                        raise NodeReferenceError(
                            f"attribute row for unknown node {ext!r}"
                        )
                    intern(ext)
                if ext in attr_by_node:
                    raise EdgeFileError(f"duplicate attribute row for node {ext!r}")
                attr_by_node[ext] = np.asarray(feats, dtype=np.float64)

        n = len(ext_ids)
        node_type_ids = np.array(
            [schema.resolve_node_type(e) for e in ext_ids], dtype=np.int64
        )
        nodes = [NodeRef(i, ext_ids[i], int(node_type_ids[i])) for i in range(n)]
        type_local = np.zeros(n, dtype=np.int64)
        counts = [0] * schema.num_node_types
        for i in range(n):
            z = int(node_type_ids[i])
            type_local[i] = counts[z]
            counts[z] += 1

        attributes: dict[int, np.ndarray] = {}
        if attr_by_node:
            dims: dict[int, int] = {}
            covered: dict[int, int] = {}
            for ext, feats in attr_by_node.items():
                z = int(node_type_ids[index_of[ext]])
                if z in dims and dims[z] != feats.shape[0]:
                    raise EdgeFileError(
                        f"feature dimension mismatch for node type "
                        f"{schema.node_types[z]!r}: {feats.shape[0]} vs {dims[z]}"
                    )
                dims.setdefault(z, feats.shape[0])
                covered[z] = covered.get(z, 0) + 1
            for z, dim in dims.items():
                if covered[z] != counts[z]:
                    raise AttributeMissingError(
                        f"node type {schema.node_types[z]!r} has attributes for "
                        f"{covered[z]} of {counts[z]} nodes; every node of an "
                        "attributed type needs a feature row"
                    )
                attributes[z] = np.zeros((counts[z], dim), dtype=np.float64)
            for ext, feats in attr_by_node.items():
                i = index_of[ext]
                z = int(node_type_ids[i])
                attributes[z][type_local[i]] = feats

        edges, indptr, indices = _build_adjacency(n, schema, pair_lists)
        return cls(
            schema=schema,
            nodes=nodes,
            node_type_ids=node_type_ids,
            type_local_index=type_local,
            edges=edges,
            indptr=indptr,
            indices=indices,
            attributes=attributes,
            duplicates_dropped=dupes,
            self_loops_dropped=loops,
        )

    def with_edges(self, per_type_edges: list[np.ndarray]) -> "AmhenGraph":
        """A graph over the same nodes/attributes with a different edge set."""
        pair_lists = [[tuple(p) for p in arr] for arr in per_type_edges]
        edges, indptr, indices = _build_adjacency(len(self.nodes), self.schema, pair_lists)
        return AmhenGraph(
            schema=self.schema,
            nodes=self.nodes,
            node_type_ids=self.node_type_ids,
            type_local_index=self.type_local_index,
            edges=edges,
            indptr=indptr,
            indices=indices,
            attributes=self.attributes,
        )

    # -- queries ----------------------------------------------------------

    @property
    def num_nodes(self) -> int:
        return len(self.nodes)

    @property
    def num_edge_types(self) -> int:
        return self.schema.num_edge_types

    @property
    def num_edges(self) -> int:
        return int(sum(len(e) for e in self.edges))

    def node_index(self, external_id: str) -> int:
        if self._index_of is None:
            self._index_of = {n.external_id: n.index for n in self.nodes}
        try:
            return self._index_of[external_id]
        except KeyError:
            raise NodeReferenceError(f"unknown node {external_id!r}") from None

    def external_ids(self) -> list[str]:
        return [node.external_id for node in self.nodes]

    def neighbors(self, node: int, edge_type: int) -> np.ndarray:
        """Sorted, duplicate-free neighbor indices of ``node`` on one type."""
        if not 0 <= node < len(self.nodes):
            raise IndexError(f"node index {node} out of range")
        if not 0 <= edge_type < self.num_edge_types:
            raise IndexError(f"edge type {edge_type} out of range")
        ptr = self.indptr[edge_type]
        return self.indices[edge_type][ptr[node] : ptr[node + 1]]

    def degree(self, edge_type: int) -> np.ndarray:
        ptr = self.indptr[edge_type]
        return np.diff(ptr)

    def features_of(self, node: int) -> np.ndarray:
        z = int(self.node_type_ids[node])
        if z not in self.attributes:
            raise AttributeMissingError(
                f"node type {self.schema.node_types[z]!r} has no attributes"
            )
        return self.attributes[z][self.type_local_index[node]]

    def edge_set(self, edge_type: int) -> set:
        if self._edge_sets is None:
            self._edge_sets = [
                set(map(tuple, e.tolist())) for e in self.edges
            ]
        return self._edge_sets[edge_type]

    def nodes_of_type(self, node_type: int) -> np.ndarray:
        return np.flatnonzero(self.node_type_ids == node_type)

    def content_hash(self) -> str:
        """SHA-256 over the canonical node list and per-type edge lists."""
        if self._hash is None:
            h = hashlib.sha256()
            h.update(",".join(self.schema.node_types).encode())
            h.update(b"|")
            h.update(",".join(self.schema.edge_types).encode())
            h.update(b"|")
            h.update(",".join(map(str, map(int, self.schema.directed))).encode())
            for node in self.nodes:
                h.update(f"{node.external_id}\x00{node.node_type}\x01".encode())
            for r in range(self.num_edge_types):
                h.update(f"\x02{r}\x02".encode())
                h.update(self.edges[r].astype("<i8").tobytes())
            self._hash = h.hexdigest()
        return self._hash


def _build_adjacency(n, schema, pair_lists):
    """Canonical edge arrays plus CSR adjacency, symmetrized where undirected."""
    edges = []
    indptr = []
    indices = []
    for r, pairs in enumerate(pair_lists):
        if pairs:
            arr = np.array(sorted(pairs), dtype=np.int64)
        else:
            arr = np.zeros((0, 2), dtype=np.int64)
        edges.append(arr)
        if schema.directed[r]:
            src, dst = arr[:, 0], arr[:, 1]
        else:
            src = np.concatenate([arr[:, 0], arr[:, 1]])
            dst = np.concatenate([arr[:, 1], arr[:, 0]])
        order = np.lexsort((dst, src))
        src, dst = src[order], dst[order]
        ptr = np.zeros(n + 1, dtype=np.int64)
        np.add.at(ptr, src + 1, 1)
        np.cumsum(ptr, out=ptr)
        idx = dst.copy()
        idx.setflags(write=False)
        ptr.setflags(write=False)
        indptr.append(ptr)
        indices.append(idx)
    return edges, indptr, indices


# -- file I/O -------------------------------------------------------------


def load_graph(
    edge_file,
    attr_file=None,
    schema: GraphSchema | None = None,
    allow_attr_only_nodes: bool = False,
) -> AmhenGraph:
    """Load a graph from an edge file and an optional attribute file.

    Edge rows are ``edge_type<TAB>head<TAB>tail``; attribute rows are
    ``node_id<TAB>f1,f2,...``.  Lines starting with ``#`` are skipped.
    """
    if schema is None:
        raise SchemaError("load_graph requires a schema declaration")
    edge_rows = []
    with open(edge_file, "r", encoding="utf-8") as fh:
        for lineno, line in enumerate(fh, 1):
            line = line.rstrip("\n")
            if not line or line.startswith("#"):
                continue
            parts = line.split("\t")
            if len(parts) != 3:
                raise EdgeFileError(
                    f"{edge_file}:{lineno}: expected 3 tab-separated fields, "
                    f"got {len(parts)}"
                )
            edge_rows.append((parts[0], parts[1], parts[2]))

    attr_rows = None
    if attr_file is not None:
        attr_rows = []
        with open(attr_file, "r", encoding="utf-8") as fh:
            for lineno, line in enumerate(fh, 1):
                line = line.rstrip("\n")
                if not line or line.startswith("#"):
                    continue
                parts = line.split("\t")
                if len(parts) != 2:
                    raise EdgeFileError(
                        f"{attr_file}:{lineno}: expected 2 tab-separated fields"
                    )
                try:
                    feats = np.array(
                        [float(x) for x in parts[1].split(",")], dtype=np.float64
                    )
                except ValueError as exc:
                    raise EdgeFileError(
                        f"{attr_file}:{lineno}: non-numeric feature value ({exc})"
                    ) from None
                attr_rows.append((parts[0], feats))

    return AmhenGraph.build(
        schema, edge_rows, attr_rows, allow_attr_only_nodes=allow_attr_only_nodes
    )


def save_graph(graph: AmhenGraph, edge_file) -> None:
    """Write the canonical edge list back to disk (round-trip safe)."""
    with open(edge_file, "w", encoding="utf-8") as fh:
        fh.write(f"# muxembed graph n={graph.num_nodes} hash={graph.content_hash()}\n")
        for r in range(graph.num_edge_types):
            name = graph.schema.edge_types[r]
            for i, j in graph.edges[r]:
                fh.write(
                    f"{name}\t{graph.nodes[i].external_id}\t{graph.nodes[j].external_id}\n"
                )


# -- evaluation splits ------------------------------------------------------


@dataclass
class EvalSplit:
    """Train graph plus per-edge-type positive/negative evaluation pairs."""

    train_graph: AmhenGraph
    val_pos: list[np.ndarray]
    val_neg: list[np.ndarray]
    test_pos: list[np.ndarray]
    test_neg: list[np.ndarray]
    seed: int
    val_frac: float
    test_frac: float
    graph_hash: str


def split_edges(
    graph: AmhenGraph,
    val_frac: float = 0.05,
    test_frac: float = 0.10,
    seed: int = 0,
) -> EvalSplit:
    """Hide a validation/test fraction of edges per type, with matched negatives.

    Sampled positives are removed from the train graph.  Negatives are
    uniformly sampled non-edges of the original graph; both endpoints are
    drawn from nodes incident to at least one edge of the same type, and
    negatives never collide across the validation and test lists.
    Deterministic for a given seed.
    """
    if not 0 < val_frac + test_frac < 1:
        raise SplitInfeasibleError("val_frac + test_frac must lie in (0, 1)")
    rng = np.random.default_rng(seed)
    m = graph.num_edge_types
    train_edges, vp, vn, tp, tn = [], [], [], [], []
    for r in range(m):
        name = graph.schema.edge_types[r]
        edges = graph.edges[r]
        total = len(edges)
        if total < math.ceil(1.0 / val_frac):
            raise SplitInfeasibleError(
                f"edge type {name!r} has {total} edges; "
                f"at least {math.ceil(1.0 / val_frac)} required for val_frac={val_frac}"
            )
        n_val = int(math.floor(total * val_frac + 0.5))
        n_test = int(math.floor(total * test_frac + 0.5))
        perm = rng.permutation(total)
        val_idx = perm[:n_val]
        test_idx = perm[n_val : n_val + n_test]
        keep = np.ones(total, dtype=bool)
        keep[val_idx] = False
        keep[test_idx] = False
        train_edges.append(edges[keep])
        vp.append(edges[np.sort(val_idx)])
        tp.append(edges[np.sort(test_idx)])

        negs = _sample_negatives(graph, r, n_val + n_test, rng)
        vn.append(negs[:n_val])
        tn.append(negs[n_val:])

    return EvalSplit(
        train_graph=graph.with_edges(train_edges),
        val_pos=vp,
        val_neg=vn,
        test_pos=tp,
        test_neg=tn,
        seed=seed,
        val_frac=val_frac,
        test_frac=test_frac,
        graph_hash=graph.content_hash(),
    )


def _sample_negatives(graph, r, count, rng):
    """Rejection-sample ``count`` distinct non-edges of type ``r``."""
    name = graph.schema.edge_types[r]
    edges = graph.edges[r]
    existing = graph.edge_set(r)
    directed = graph.schema.directed[r]
    heads = np.unique(edges[:, 0]) if directed else np.unique(edges)
    tails = np.unique(edges[:, 1]) if directed else heads
    chosen: list[tuple[int, int]] = []
    chosen_set: set = set()
    attempts = 0
    limit = 200 * count + 1000
    while len(chosen) < count:
        attempts += 1
        if attempts > limit:
            raise SplitInfeasibleError(
                f"edge type {name!r}: negative sampling exhausted after "
                f"{attempts} attempts ({len(chosen)}/{count} found); "
                "the view may be too dense to contain enough non-edges"
            )
        i = int(heads[rng.integers(len(heads))])
        j = int(tails[rng.integers(len(tails))])
        if i == j:
            continue
        if not directed and i > j:
            i, j = j, i
        pair = (i, j)
        if pair in existing or pair in chosen_set:
            continue
        chosen_set.add(pair)
        chosen.append(pair)
    return np.array(chosen, dtype=np.int64)


# -- split manifests --------------------------------------------------------

_SPLIT_SECTIONS = ("train", "val_pos", "val_neg", "test_pos", "test_neg")


def save_split(split: EvalSplit, path) -> None:
    """Write a shareable split manifest (tab-separated, external ids)."""
    g = split.train_graph
    ids = g.external_ids()
    with open(path, "w", encoding="utf-8") as fh:
        fh.write("# muxembed split manifest\n")
        fh.write(f"# graph_hash={split.graph_hash}\n")
        fh.write(
            f"# seed={split.seed} val_frac={split.val_frac!r} "
            f"test_frac={split.test_frac!r}\n"
        )
        sections = {
            "train": g.edges,
            "val_pos": split.val_pos,
            "val_neg": split.val_neg,
            "test_pos": split.test_pos,
            "test_neg": split.test_neg,
        }
        for section in _SPLIT_SECTIONS:
            for r in range(g.num_edge_types):
                name = g.schema.edge_types[r]
                for i, j in sections[section][r]:
                    fh.write(f"{section}\t{name}\t{ids[i]}\t{ids[j]}\n")


def load_split(path, graph: AmhenGraph) -> EvalSplit:
    """Rebuild an EvalSplit from a manifest plus the original graph."""
    m = graph.num_edge_types
    index_of = {node.external_id: node.index for node in graph.nodes}
    rows: dict[str, list[list[tuple[int, int]]]] = {
        s: [[] for _ in range(m)] for s in _SPLIT_SECTIONS
    }
    seed, val_frac, test_frac, graph_hash = 0, 0.05, 0.10, ""
    with open(path, "r", encoding="utf-8") as fh:
        for line in fh:
            line = line.rstrip("\n")
            if line.startswith("#"):
                for token in line.lstrip("# ").split():
                    if "=" in token:
                        key, val = token.split("=", 1)
                        if key == "seed":
                            seed = int(val)
                        elif key == "val_frac":
                            val_frac = float(val)
                        elif key == "test_frac":
                            test_frac = float(val)
                        elif key == "graph_hash":
                            graph_hash = val
                continue
            if not line:
                continue
            section, name, head, tail = line.split("\t")
            r = graph.schema.edge_type_id(name)
            try:
                rows[section][r].append((index_of[head], index_of[tail]))
            except KeyError as exc:
                raise NodeReferenceError(f"split references unknown node {exc}") from None

    def as_arrays(section):
        return [
            np.array(rows[section][r], dtype=np.int64).reshape(-1, 2)
            for r in range(m)
        ]

    return EvalSplit(
        train_graph=graph.with_edges(as_arrays("train")),
        val_pos=as_arrays("val_pos"),
        val_neg=as_arrays("val_neg"),
        test_pos=as_arrays("test_pos"),
        test_neg=as_arrays("test_neg"),
        seed=seed,
        val_frac=val_frac,
        test_frac=test_frac,
        graph_hash=graph_hash or graph.content_hash(),
    )
