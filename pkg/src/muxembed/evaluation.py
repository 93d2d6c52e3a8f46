"""Link-prediction scoring, metrics, KNN retrieval, and construction checks.

Metrics follow fixed, test-pinned semantics:

* ROC-AUC is the rank statistic P(score_pos > score_neg) + 0.5 P(tie).
* PR-AUC integrates the precision-recall curve by the trapezoidal rule over
  distinct thresholds swept from the highest score down, starting from the
  (recall=0, precision=1) endpoint.
* F1 assumes the positive count k is known: the top-k pooled scores are
  predicted positive (ties broken by pooled-list index), which makes
  precision, recall and F1 coincide.

Reports carry values in [0, 1]; text serialization scales by 100 with two
decimals.
"""

from __future__ import annotations

import json
import warnings
from dataclasses import dataclass

import numpy as np
from scipy.stats import rankdata

from .errors import EvaluationError, MetricUndefinedError
from .graph import AmhenGraph, EvalSplit
from .model import MEAN, Hyperparams, TransductiveParams, combine_edge_embeddings

SCORERS = ("cosine", "dot", "sigmoid_dot")


# -- pair scoring -------------------------------------------------------------


def score_pair(embeddings, i, j, edge_type, scorer="cosine") -> float:
    """Similarity of two nodes' embeddings on one edge type."""
    u = embeddings[i, edge_type]
    v = embeddings[j, edge_type]
    return float(_score_vectors(u[None, :], v[None, :], scorer)[0])


def _score_vectors(u, v, scorer):
    dots = np.einsum("kd,kd->k", u, v)
    if scorer == "dot":
        return dots
    if scorer == "sigmoid_dot":
        return 1.0 / (1.0 + np.exp(-dots))
    if scorer == "cosine":
        nu = np.linalg.norm(u, axis=1)
        nv = np.linalg.norm(v, axis=1)
        zero = (nu == 0) | (nv == 0)
        if zero.any():
            warnings.warn("zero-norm embedding scored as 0 under cosine", stacklevel=3)
        denom = np.where(zero, 1.0, nu * nv)
        return np.where(zero, 0.0, dots / denom)
    raise EvaluationError(f"unknown scorer {scorer!r}")


def score_pairs(embeddings, pairs, edge_type, scorer="cosine"):
    if len(pairs) == 0:
        return np.zeros(0)
    n = embeddings.shape[0]
    bad = (pairs < 0) | (pairs >= n)
    if bad.any():
        missing = int(pairs[bad][0])
        raise EvaluationError(f"no embedding for node index {missing}")
    u = embeddings[pairs[:, 0], edge_type]
    v = embeddings[pairs[:, 1], edge_type]
    return _score_vectors(u, v, scorer)


# -- metrics -------------------------------------------------------------------


def roc_auc(scores_pos, scores_neg) -> float:
    """Mann-Whitney statistic via average ranks (ties count half)."""
    pos = np.asarray(scores_pos, dtype=np.float64)
    neg = np.asarray(scores_neg, dtype=np.float64)
    if len(pos) == 0 or len(neg) == 0:
        raise MetricUndefinedError("ROC-AUC needs non-empty score lists")
    ranks = rankdata(np.concatenate([pos, neg]))
    pos_rank_sum = ranks[: len(pos)].sum()
    wins = pos_rank_sum - len(pos) * (len(pos) + 1) / 2.0
    return float(wins / (len(pos) * len(neg)))


def pr_auc(scores_pos, scores_neg) -> float:
    """Trapezoidal area under the precision-recall threshold sweep."""
    pos = np.asarray(scores_pos, dtype=np.float64)
    neg = np.asarray(scores_neg, dtype=np.float64)
    if len(pos) == 0 or len(neg) == 0:
        raise MetricUndefinedError("PR-AUC needs non-empty score lists")
    scores = np.concatenate([pos, neg])
    labels = np.concatenate([np.ones(len(pos), bool), np.zeros(len(neg), bool)])
    order = np.argsort(-scores, kind="stable")
    scores, labels = scores[order], labels[order]
    tp = np.cumsum(labels)
    pred = np.arange(1, len(scores) + 1)
    # last index of each distinct-threshold group
    boundary = np.flatnonzero(np.diff(scores) != 0)
    last = np.concatenate([boundary, [len(scores) - 1]])
    recall = tp[last] / len(pos)
    precision = tp[last] / pred[last]
    recall = np.concatenate([[0.0], recall])
    precision = np.concatenate([[1.0], precision])
    return float(np.trapz(precision, recall))


def f1_known_k(scores_pos, scores_neg) -> float:
    """F1 when the true positive count is known (top-k thresholding)."""
    pos = np.asarray(scores_pos, dtype=np.float64)
    neg = np.asarray(scores_neg, dtype=np.float64)
    if len(pos) == 0 or len(neg) == 0:
        raise MetricUndefinedError("F1 needs non-empty score lists")
    k = len(pos)
    pooled = np.concatenate([pos, neg])
    order = np.argsort(-pooled, kind="stable")
    tp = int((order[:k] < k).sum())
    # predicting exactly k positives makes precision = recall, so F1 = tp/k
    return tp / k


# -- evaluation harness ----------------------------------------------------------


@dataclass
class MetricsReport:
    """Per-edge-type metrics plus their uniform average, all in [0, 1]."""

    per_type: dict[str, dict[str, float]]
    average: dict[str, float]
    scorer: str
    which: str

    METRICS = ("roc_auc", "pr_auc", "f1")

    def per_type_metric(self, metric: str) -> dict[str, float]:
        return {t: vals[metric] for t, vals in self.per_type.items()}

    def to_text(self, graph_hash="", config_hash="") -> str:
        lines = [
            f"# muxembed metrics which={self.which} scorer={self.scorer} "
            f"graph_hash={graph_hash} config_hash={config_hash}"
        ]
        for tname, vals in self.per_type.items():
            for metric in self.METRICS:
                lines.append(f"{tname}.{metric} = {100.0 * vals[metric]:.2f}")
        for metric in self.METRICS:
            lines.append(f"average.{metric} = {100.0 * self.average[metric]:.2f}")
        return "\n".join(lines) + "\n"

    def to_json(self, graph_hash="", config_hash="") -> str:
        payload = {
            "which": self.which,
            "scorer": self.scorer,
            "graph_hash": graph_hash,
            "config_hash": config_hash,
            "per_type": self.per_type,
            "average": self.average,
        }
        return json.dumps(payload, sort_keys=True, indent=2) + "\n"


def evaluate(
    embeddings,
    graph: AmhenGraph,
    split: EvalSplit,
    which: str = "test",
    scorer: str = "cosine",
    edge_types=None,
) -> MetricsReport:
    """Score one side of the split and report metrics per edge type.

    The averaged row is the uniform arithmetic mean over the selected edge
    types.
    """
    if which == "val":
        pos_lists, neg_lists = split.val_pos, split.val_neg
    elif which == "test":
        pos_lists, neg_lists = split.test_pos, split.test_neg
    else:
        raise EvaluationError(f"unknown split side {which!r}")
    selected = range(graph.num_edge_types) if edge_types is None else edge_types
    per_type: dict[str, dict[str, float]] = {}
    for r in selected:
        name = graph.schema.edge_types[r]
        spos = score_pairs(embeddings, pos_lists[r], r, scorer)
        sneg = score_pairs(embeddings, neg_lists[r], r, scorer)
        per_type[name] = {
            "roc_auc": roc_auc(spos, sneg),
            "pr_auc": pr_auc(spos, sneg),
            "f1": f1_known_k(spos, sneg),
        }
    average = {
        metric: float(np.mean([vals[metric] for vals in per_type.values()]))
        for metric in MetricsReport.METRICS
    }
    return MetricsReport(per_type, average, scorer, which)


# -- KNN retrieval -----------------------------------------------------------------


def knn_topn(candidate_vectors, query_vectors, n: int):
    """Indices of the n nearest candidates per query, by Euclidean distance.

    Ties break by candidate index (stable sort), and returned distances are
    non-decreasing along each row.
    """
    cand = np.asarray(candidate_vectors, dtype=np.float64)
    queries = np.asarray(query_vectors, dtype=np.float64)
    if n > len(cand):
        raise EvaluationError(f"requested top-{n} from {len(cand)} candidates")
    d2 = (
        np.square(queries).sum(axis=1)[:, None]
        - 2.0 * queries @ cand.T
        + np.square(cand).sum(axis=1)[None, :]
    )
    order = np.argsort(d2, axis=1, kind="stable")
    return order[:, :n]


# -- expressiveness-construction oracle -----------------------------------------------


@dataclass
class MneOracleParams:
    """Additive per-edge-type embedding form used as a comparison oracle."""

    base: np.ndarray  # (n, d)
    extra: np.ndarray  # (n, m, s)
    transform: np.ndarray  # (m, s, d)
    alpha: np.ndarray  # (m,)

    @property
    def n(self):
        return self.base.shape[0]

    @property
    def m(self):
        return self.extra.shape[1]

    @property
    def s(self):
        return self.extra.shape[2]

    @property
    def d(self):
        return self.base.shape[1]

    @classmethod
    def random(cls, n, m, s, d, seed=0, alpha=1.0):
        rng = np.random.default_rng(seed)
        return cls(
            base=rng.normal(size=(n, d)),
            extra=rng.normal(size=(n, m, s)),
            transform=rng.normal(size=(m, s, d)),
            alpha=np.full(m, float(alpha)),
        )


def mne_oracle_embedding(oracle: MneOracleParams, i: int, r: int) -> np.ndarray:
    """base_i + alpha_r * transform_r^T extra_{i,r}."""
    return oracle.base[i] + oracle.alpha[r] * (oracle.transform[r].T @ oracle.extra[i, r])


def theorem1_construct(oracle: MneOracleParams, big_m: float = 50.0) -> TransductiveParams:
    """Build attention parameters that reproduce the additive oracle.

    Edge embeddings get m indicator dimensions appended; each edge type's
    attention matrix is zero except one large entry selecting its own
    indicator, so the softmax concentrates on the matching column and the
    fused embedding approaches the oracle's value as ``big_m`` grows.
    """
    n, m, s, d = oracle.n, oracle.m, oracle.s, oracle.d
    s2 = s + m
    hyper = Hyperparams(
        d=d, s=s2, d_a=1, levels=1, aggregator=MEAN, activation="tanh",
        alpha=tuple(float(a) for a in oracle.alpha), beta=1.0,
        neighbor_sample_size=None,
    )
    edge_init = np.zeros((n, m, s2))
    edge_init[:, :, :s] = oracle.extra
    for t in range(m):
        edge_init[:, t, s + t] = 1.0
    att_vec = np.zeros((m, 1))
    att_vec[:, 0] = big_m
    att_mat = np.zeros((m, 1, s2))
    for r in range(m):
        att_mat[r, 0, s + r] = big_m
    transform = np.zeros((m, s2, d))
    transform[:, :s, :] = oracle.transform
    tensors = {
        "base": oracle.base.copy(),
        "edge_init": edge_init,
        "context": np.zeros((n, d)),
        "att_vec": att_vec,
        "att_mat": att_mat,
        "transform": transform,
        "agg_w": np.stack([np.eye(s2)]),
    }
    return TransductiveParams(hyper, m, tensors)


def theorem1_max_error(oracle: MneOracleParams, params: TransductiveParams) -> float:
    """Max-norm gap between the construction (edge embeddings injected
    directly, no aggregation) and the oracle, over all nodes and types."""
    worst = 0.0
    for i in range(oracle.n):
        U = params.edge_init[i].T
        for r in range(oracle.m):
            trace = combine_edge_embeddings(params, None, U, i, r)
            target = mne_oracle_embedding(oracle, i, r)
            worst = max(worst, float(np.abs(trace.v - target).max()))
    return worst
