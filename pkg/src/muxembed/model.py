"""Parameter store and forward computation for multiplex network embeddings.

Each node gets one overall embedding per edge type, assembled from a shared
base part and an attention-weighted fusion of per-edge-type "edge
embeddings".  Edge embeddings are aggregated from neighbor embeddings over
one or more levels, GraphSAGE style.  Two parameterizations exist:

* transductive: base and initial edge embeddings are free per-node tables;
* inductive: both are linear functions of node attributes, plus a direct
  linear attribute term, so unseen attributed nodes can be embedded.

The single-node forward keeps a trace of every intermediate so the trainer
can backpropagate through it exactly; ``embed_all`` is the vectorized
whole-graph forward over full neighborhoods used for evaluation.
"""

from __future__ import annotations

import copy
import json
import struct
from dataclasses import dataclass, field

import numpy as np
import scipy.sparse as sp

from .errors import AttributeMissingError, ConfigError
from .graph import AmhenGraph

MEAN = "mean"
MAXPOOL = "maxpool"

CHECKPOINT_MAGIC = b"MXCKPT01"
EMBED_MAGIC = b"MXEMB001"


def _activation(name):
    if name == "tanh":
        return np.tanh
    if name == "identity":
        return lambda x: x
    if name == "relu":
        return lambda x: np.maximum(x, 0.0)
    raise ConfigError(f"unknown activation {name!r}")


def _activation_grad_from_output(name, out):
    """Derivative of the activation expressed through its output value."""
    if name == "tanh":
        return 1.0 - out * out
    if name == "identity":
        return np.ones_like(out)
    if name == "relu":
        return (out > 0).astype(out.dtype)
    raise ConfigError(f"unknown activation {name!r}")


@dataclass
class Hyperparams:
    """Model dimensions and structural switches.

    ``alpha``/``beta`` weight the edge-embedding and direct-attribute terms
    per edge type; scalars are broadcast.  ``neighbor_sample_size=None``
    selects exact full-neighborhood aggregation (used by oracles and
    evaluation); training uses fixed-size sampling with replacement.
    """

    d: int = 200
    s: int = 10
    d_a: int = 20
    levels: int = 1
    aggregator: str = MEAN
    activation: str = "tanh"
    alpha: float | tuple = 1.0
    beta: float | tuple = 1.0
    neighbor_sample_size: int | None = 10

    def __post_init__(self):
        if min(self.d, self.s, self.d_a, self.levels) < 1:
            raise ConfigError("d, s, d_a and levels must all be at least 1")
        if self.aggregator not in (MEAN, MAXPOOL):
            raise ConfigError(f"unknown aggregator {self.aggregator!r}")
        _activation(self.activation)

    def alphas(self, m: int) -> np.ndarray:
        return _coeff_array(self.alpha, m, "alpha")

    def betas(self, m: int) -> np.ndarray:
        return _coeff_array(self.beta, m, "beta")

    def to_dict(self) -> dict:
        return {
            "d": self.d,
            "s": self.s,
            "d_a": self.d_a,
            "levels": self.levels,
            "aggregator": self.aggregator,
            "activation": self.activation,
            "alpha": self.alpha if np.isscalar(self.alpha) else list(self.alpha),
            "beta": self.beta if np.isscalar(self.beta) else list(self.beta),
            "neighbor_sample_size": self.neighbor_sample_size,
        }

    @classmethod
    def from_dict(cls, data: dict) -> "Hyperparams":
        known = {f for f in cls.__dataclass_fields__}
        kwargs = {k: v for k, v in data.items() if k in known}
        for key in ("alpha", "beta"):
            if isinstance(kwargs.get(key), list):
                kwargs[key] = tuple(kwargs[key])
        return cls(**kwargs)


def _coeff_array(value, m, name):
    if np.isscalar(value):
        arr = np.full(m, float(value))
    else:
        arr = np.asarray(value, dtype=np.float64)
        if arr.shape != (m,):
            raise ConfigError(f"{name} must be scalar or length-{m}")
    if (arr < 0).any():
        raise ConfigError(f"{name} coefficients must be non-negative")
    return arr


class ModelParams:
    """Common surface of the two parameterizations."""

    mode = ""

    def __init__(self, hyper: Hyperparams, m: int, tensors: dict[str, np.ndarray]):
        self.hyper = hyper
        self.m = m
        self.alpha = hyper.alphas(m)
        self.beta = hyper.betas(m)
        self._tensors = tensors

    def tensors(self) -> dict[str, np.ndarray]:
        """Trainable tensors keyed by family name; mutated in place by training."""
        return self._tensors

    def __getitem__(self, name: str) -> np.ndarray:
        return self._tensors[name]

    def zero_like_tensors(self) -> dict[str, np.ndarray]:
        return {k: np.zeros_like(v) for k, v in self._tensors.items()}

    def clone(self) -> "ModelParams":
        dup = copy.copy(self)
        dup._tensors = {k: v.copy() for k, v in self._tensors.items()}
        return dup

    # shared accessors
    @property
    def context(self):
        return self._tensors["context"]

    @property
    def att_vec(self):
        return self._tensors["att_vec"]

    @property
    def att_mat(self):
        return self._tensors["att_mat"]

    @property
    def transform(self):
        return self._tensors["transform"]


class TransductiveParams(ModelParams):
    """Free base and initial edge embeddings per node."""

    mode = "transductive"

    @property
    def base(self):
        return self._tensors["base"]

    @property
    def edge_init(self):
        return self._tensors["edge_init"]


class InductiveParams(ModelParams):
    """Linear attribute transforms instead of per-node embedding tables."""

    mode = "inductive"

    def __init__(self, hyper, m, tensors, feature_dims: dict[int, int]):
        super().__init__(hyper, m, tensors)
        self.feature_dims = dict(feature_dims)

    def clone(self):
        dup = super().clone()
        dup.feature_dims = dict(self.feature_dims)
        return dup


def init_params(
    graph: AmhenGraph, hyper: Hyperparams, mode: str, seed: int = 0
) -> ModelParams:
    """Seeded parameter initialization.

    Embedding tables draw from uniform(-1/sqrt(dim), 1/sqrt(dim)) of their own
    trailing dimension; weight matrices scale by fan-in; biases start at
    zero.  The draw order is part of the checkpoint contract.
    """
    n, m = graph.num_nodes, graph.num_edge_types
    h = hyper
    rng = np.random.default_rng(seed)

    def u(scale_dim, shape):
        bound = 1.0 / np.sqrt(scale_dim)
        return rng.uniform(-bound, bound, size=shape)

    tensors: dict[str, np.ndarray] = {}
    if mode == "transductive":
        tensors["base"] = u(h.d, (n, h.d))
        tensors["edge_init"] = u(h.s, (n, m, h.s))
    elif mode == "inductive":
        feature_dims = {}
        for z in range(graph.schema.num_node_types):
            if len(graph.nodes_of_type(z)) == 0:
                continue
            if z not in graph.attributes:
                raise AttributeMissingError(
                    f"inductive mode needs attributes for node type "
                    f"{graph.schema.node_types[z]!r}"
                )
            f_z = graph.attributes[z].shape[1]
            feature_dims[z] = f_z
            tensors[f"feat_base_w.{z}"] = u(f_z, (f_z, h.d))
            tensors[f"feat_base_b.{z}"] = np.zeros(h.d)
            tensors[f"feat_edge_w.{z}"] = u(f_z, (m, f_z, h.s))
            tensors[f"feat_edge_b.{z}"] = np.zeros((m, h.s))
            tensors[f"feat_direct.{z}"] = u(f_z, (f_z, h.d))
    else:
        raise ConfigError(f"unknown mode {mode!r}")

    tensors["context"] = u(h.d, (n, h.d))
    tensors["att_vec"] = u(h.d_a, (m, h.d_a))
    tensors["att_mat"] = u(h.s, (m, h.d_a, h.s))
    tensors["transform"] = u(h.s, (m, h.s, h.d))
    if h.aggregator == MEAN:
        tensors["agg_w"] = u(h.s, (h.levels, h.s, h.s))
    else:
        tensors["agg_pool_w"] = u(h.s, (h.levels, h.s, h.s))
        tensors["agg_pool_b"] = np.zeros((h.levels, h.s))

    if mode == "transductive":
        return TransductiveParams(hyper, m, tensors)
    return InductiveParams(hyper, m, tensors, feature_dims)


# -- single-node forward with trace -----------------------------------------


@dataclass
class AggNode:
    """One node of the aggregation tree (children live one level below)."""

    node: int
    children: list
    h: np.ndarray | None
    pre: np.ndarray | None
    out: np.ndarray
    argmax: np.ndarray | None = None


@dataclass
class ForwardTrace:
    """Every intermediate of one overall-embedding computation."""

    node: int
    edge_type: int
    agg_roots: list[AggNode] | None
    U: np.ndarray
    z: np.ndarray
    t: np.ndarray
    y: np.ndarray
    a: np.ndarray
    Ua: np.ndarray
    base_vec: np.ndarray
    v: np.ndarray


def initial_edge_embedding(params: ModelParams, graph, node: int, edge_type: int):
    """Level-0 edge embedding: stored row, or linear transform of attributes."""
    if params.mode == "transductive":
        return params.edge_init[node, edge_type]
    z = int(graph.node_type_ids[node])
    if z not in graph.attributes:
        raise AttributeMissingError(
            f"node type {graph.schema.node_types[z]!r} has no attributes"
        )
    x = graph.features_of(node)
    return x @ params[f"feat_edge_w.{z}"][edge_type] + params[f"feat_edge_b.{z}"][edge_type]


def _base_vector(params, graph, node):
    if params.mode == "transductive":
        return params.base[node].copy()
    z = int(graph.node_type_ids[node])
    x = graph.features_of(node)
    return x @ params[f"feat_base_w.{z}"] + params[f"feat_base_b.{z}"]


def _direct_attr_vector(params, graph, node, edge_type):
    z = int(graph.node_type_ids[node])
    x = graph.features_of(node)
    return params.beta[edge_type] * (x @ params[f"feat_direct.{z}"])


def _child_nodes(graph, node, edge_type, level, params, rng):
    nbrs = graph.neighbors(node, edge_type)
    if len(nbrs) == 0:
        return [node]
    size = params.hyper.neighbor_sample_size
    if size is None:
        return [int(x) for x in nbrs]
    if rng is None:
        raise ConfigError("sampled aggregation needs an RNG; pass rng or use full mode")
    return [int(nbrs[k]) for k in rng.integers(len(nbrs), size=size)]


def build_aggregation(
    params: ModelParams, graph, node: int, edge_type: int, rng=None, levels=None
) -> AggNode:
    """The K-level aggregation tree for one (node, edge type).

    Neighborhoods are the full sorted neighbor lists when
    ``neighbor_sample_size`` is None, else fixed-size draws with
    replacement; an empty neighborhood falls back to the node itself.
    """
    h = params.hyper
    act = _activation(h.activation)
    if levels is None:
        levels = h.levels

    def build(x, level):
        if level == 0:
            return AggNode(x, [], None, None, initial_edge_embedding(params, graph, x, edge_type))
        children = [build(j, level - 1) for j in _child_nodes(graph, x, edge_type, level, params, rng)]
        stacked = np.stack([c.out for c in children])
        if h.aggregator == MEAN:
            mean_in = stacked.mean(axis=0)
            pre = params["agg_w"][level - 1] @ mean_in
            return AggNode(x, children, mean_in, pre, act(pre))
        pre = stacked @ params["agg_pool_w"][level - 1].T + params["agg_pool_b"][level - 1]
        q = act(pre)
        arg = q.argmax(axis=0)
        return AggNode(x, children, None, pre, q[arg, np.arange(h.s)], argmax=arg)

    return build(node, levels)


def aggregate(params, graph, node, edge_type, level=None, rng=None):
    """Edge embedding of one node after ``level`` aggregation steps."""
    return build_aggregation(params, graph, node, edge_type, rng=rng, levels=level).out


def attention_coefficients(params: ModelParams, U: np.ndarray, edge_type: int):
    """Softmax attention over the columns of U (one column per edge type)."""
    z = params.att_mat[edge_type] @ U
    y = params.att_vec[edge_type] @ np.tanh(z)
    return _softmax(y)


def _softmax(y):
    e = np.exp(y - y.max())
    return e / e.sum()


def combine_edge_embeddings(
    params: ModelParams, graph, U: np.ndarray, node: int, edge_type: int,
    agg_roots=None,
) -> ForwardTrace:
    """Fuse given edge-embedding columns into the overall embedding.

    This is the attention head on its own: callers may inject U directly
    (bypassing aggregation) or pass the aggregation roots for a full trace.
    """
    r = edge_type
    z = params.att_mat[r] @ U
    t = np.tanh(z)
    y = params.att_vec[r] @ t
    a = _softmax(y)
    Ua = U @ a
    base_vec = _base_vector(params, graph, node)
    v = base_vec + params.alpha[r] * (params.transform[r].T @ Ua)
    if params.mode == "inductive":
        v = v + _direct_attr_vector(params, graph, node, r)
    return ForwardTrace(node, r, agg_roots, U, z, t, y, a, Ua, base_vec, v)


def forward_trace(params, graph, node, edge_type, rng=None) -> ForwardTrace:
    """Full forward for one (node, edge type): aggregation plus fusion."""
    roots = [
        build_aggregation(params, graph, node, p, rng=rng) for p in range(params.m)
    ]
    U = np.stack([root.out for root in roots], axis=1)
    return combine_edge_embeddings(params, graph, U, node, edge_type, agg_roots=roots)


def overall_embedding(params, graph, node, edge_type, rng=None) -> np.ndarray:
    return forward_trace(params, graph, node, edge_type, rng=rng).v


# -- whole-graph forward -----------------------------------------------------


def _mean_adjacency(graph, edge_type):
    n = graph.num_nodes
    ptr = graph.indptr[edge_type]
    idx = graph.indices[edge_type]
    deg = np.diff(ptr)
    data = np.repeat(np.where(deg > 0, 1.0 / np.maximum(deg, 1), 0.0), deg)
    return sp.csr_matrix((data, idx, ptr), shape=(n, n)), deg


def _level0_all(params, graph, edge_type):
    n = graph.num_nodes
    if params.mode == "transductive":
        return params.edge_init[:, edge_type, :].copy()
    out = np.zeros((n, params.hyper.s))
    for z, _ in params.feature_dims.items():
        members = graph.nodes_of_type(z)
        feats = graph.attributes[z][graph.type_local_index[members]]
        out[members] = (
            feats @ params[f"feat_edge_w.{z}"][edge_type]
            + params[f"feat_edge_b.{z}"][edge_type]
        )
    return out


def _base_all(params, graph):
    if params.mode == "transductive":
        return params.base.copy()
    n = graph.num_nodes
    out = np.zeros((n, params.hyper.d))
    for z in params.feature_dims:
        members = graph.nodes_of_type(z)
        feats = graph.attributes[z][graph.type_local_index[members]]
        out[members] = feats @ params[f"feat_base_w.{z}"] + params[f"feat_base_b.{z}"]
    return out


def _direct_attr_all(params, graph):
    n = graph.num_nodes
    out = np.zeros((n, params.hyper.d))
    for z in params.feature_dims:
        members = graph.nodes_of_type(z)
        feats = graph.attributes[z][graph.type_local_index[members]]
        out[members] = feats @ params[f"feat_direct.{z}"]
    return out


def edge_embeddings_all(params: ModelParams, graph, edge_type: int) -> np.ndarray:
    """Final-level edge embeddings of every node on one edge type (exact)."""
    h = params.hyper
    act = _activation(h.activation)
    u = _level0_all(params, graph, edge_type)
    ptr = graph.indptr[edge_type]
    idx = graph.indices[edge_type]
    amat, deg = _mean_adjacency(graph, edge_type)
    isolated = deg == 0
    for level in range(1, h.levels + 1):
        if h.aggregator == MEAN:
            mean_in = amat @ u
            if isolated.any():
                mean_in[isolated] = u[isolated]
            u = act(mean_in @ params["agg_w"][level - 1].T)
        else:
            q = act(u @ params["agg_pool_w"][level - 1].T + params["agg_pool_b"][level - 1])
            out = np.empty_like(q)
            if len(idx):
                nonzero = np.flatnonzero(~isolated)
                red = np.maximum.reduceat(q[idx], ptr[:-1][nonzero], axis=0)
                out[nonzero] = red
            if isolated.any():
                out[isolated] = q[isolated]
            u = out
    return u


def embed_all(params: ModelParams, graph) -> np.ndarray:
    """Overall embeddings for all nodes on every edge type: (n, m, d).

    Uses full neighborhoods, so repeated calls are bitwise identical.
    """
    n, m = graph.num_nodes, params.m
    h = params.hyper
    U = np.stack([edge_embeddings_all(params, graph, p) for p in range(m)], axis=1)
    # attention for every (node, target type): z[i,r,p,:] = att_mat[r] @ U[i,p]
    z = np.einsum("rds,nps->nrpd", params.att_mat, U)
    t = np.tanh(z)
    y = np.einsum("rd,nrpd->nrp", params.att_vec, t)
    y -= y.max(axis=2, keepdims=True)
    e = np.exp(y)
    a = e / e.sum(axis=2, keepdims=True)
    Ua = np.einsum("nrp,nps->nrs", a, U)
    edge_term = np.einsum("nrs,rsd->nrd", Ua, params.transform) * params.alpha[None, :, None]
    v = _base_all(params, graph)[:, None, :] + edge_term
    if params.mode == "inductive":
        v = v + _direct_attr_all(params, graph)[:, None, :] * params.beta[None, :, None]
    return v


# -- checkpoints -------------------------------------------------------------


def save_checkpoint(params: ModelParams, path, seed=None, graph_hash="", config_hash="", extra=None):
    """Self-describing deterministic binary container of all tensors."""
    names = list(params.tensors())
    header = {
        "format": 1,
        "mode": params.mode,
        "hyper": params.hyper.to_dict(),
        "alpha": params.alpha.tolist(),
        "beta": params.beta.tolist(),
        "m": params.m,
        "seed": seed,
        "graph_hash": graph_hash,
        "config_hash": config_hash,
        "feature_dims": getattr(params, "feature_dims", None),
        "tensors": [
            {"name": k, "shape": list(params[k].shape)} for k in names
        ],
    }
    if extra:
        header["extra"] = extra
    blob = json.dumps(header, sort_keys=True).encode("utf-8")
    with open(path, "wb") as fh:
        fh.write(CHECKPOINT_MAGIC)
        fh.write(struct.pack("<I", len(blob)))
        fh.write(blob)
        for k in names:
            fh.write(np.ascontiguousarray(params[k], dtype="<f8").tobytes())


def load_checkpoint(path):
    """Load a checkpoint; returns (params, header dict)."""
    with open(path, "rb") as fh:
        magic = fh.read(len(CHECKPOINT_MAGIC))
        if magic != CHECKPOINT_MAGIC:
            raise ConfigError(f"{path}: not a muxembed checkpoint")
        (hlen,) = struct.unpack("<I", fh.read(4))
        header = json.loads(fh.read(hlen).decode("utf-8"))
        tensors = {}
        for spec in header["tensors"]:
            shape = tuple(spec["shape"])
            count = int(np.prod(shape)) if shape else 1
            data = np.frombuffer(fh.read(count * 8), dtype="<f8").reshape(shape)
            tensors[spec["name"]] = data.copy()
    hyper = Hyperparams.from_dict(header["hyper"])
    m = header["m"]
    if header["mode"] == "transductive":
        params = TransductiveParams(hyper, m, tensors)
    else:
        fd = {int(k): v for k, v in (header.get("feature_dims") or {}).items()}
        params = InductiveParams(hyper, m, tensors, fd)
    params.alpha = np.asarray(header["alpha"], dtype=np.float64)
    params.beta = np.asarray(header["beta"], dtype=np.float64)
    return params, header


# -- embedding files ---------------------------------------------------------


def save_embeddings_text(embeddings, graph, path, graph_hash="", config_hash=""):
    """Header line (n, m, d) then one line per (node, edge type)."""
    n, m, d = embeddings.shape
    ids = graph.external_ids()
    with open(path, "w", encoding="utf-8") as fh:
        fh.write(f"# muxembed embeddings graph_hash={graph_hash} config_hash={config_hash}\n")
        fh.write(f"{n} {m} {d}\n")
        for i in range(n):
            for r in range(m):
                vec = " ".join(format(x, ".10g") for x in embeddings[i, r])
                fh.write(f"{ids[i]} {graph.schema.edge_types[r]} {vec}\n")


def load_embeddings_text(path):
    """Returns (embeddings (n, m, d), node ids, edge type names)."""
    with open(path, "r", encoding="utf-8") as fh:
        lines = [l for l in fh.read().splitlines() if l and not l.startswith("#")]
    n, m, d = map(int, lines[0].split())
    emb = np.zeros((n, m, d))
    ids: list[str] = []
    id_pos: dict[str, int] = {}
    etypes: list[str] = []
    for line in lines[1:]:
        parts = line.split(" ")
        ext, tname = parts[0], parts[1]
        if ext not in id_pos:
            id_pos[ext] = len(ids)
            ids.append(ext)
        if tname not in etypes:
            etypes.append(tname)
        emb[id_pos[ext], etypes.index(tname)] = [float(x) for x in parts[2:]]
    return emb, ids, etypes


def save_embeddings_binary(embeddings, path, graph_hash="", config_hash=""):
    """Little-endian float32 dump with a fixed-size binary header."""
    n, m, d = embeddings.shape
    with open(path, "wb") as fh:
        fh.write(EMBED_MAGIC)
        fh.write(struct.pack("<III", n, m, d))
        fh.write(bytes.fromhex(graph_hash) if graph_hash else b"\x00" * 32)
        fh.write(bytes.fromhex(config_hash) if config_hash else b"\x00" * 32)
        fh.write(np.ascontiguousarray(embeddings, dtype="<f4").tobytes())


def load_embeddings_binary(path):
    with open(path, "rb") as fh:
        magic = fh.read(len(EMBED_MAGIC))
        if magic != EMBED_MAGIC:
            raise ConfigError(f"{path}: not a muxembed embedding file")
        n, m, d = struct.unpack("<III", fh.read(12))
        fh.read(64)
        data = np.frombuffer(fh.read(n * m * d * 4), dtype="<f4")
    return data.reshape(n, m, d).astype(np.float64)
