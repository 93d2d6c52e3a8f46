"""Skip-gram training with heterogeneous negative sampling.

The objective for one (center i, context j, edge type r) sample with L
negatives k_1..k_L drawn from the context type's noise distribution is

    E = -log sigmoid(c_j . v_ir) - sum_l log sigmoid(-c_kl . v_ir)

where v_ir is the overall embedding and c are context embeddings.  Log
arguments are clamped below at 1e-15 so E stays finite.

Two execution paths exist and are tested against each other: a per-sample
reference (used by the finite-difference gradient oracle) and a vectorized
mini-batch path used by ``train``.  Training updates parameters with Adam;
embedding tables receive lazy row-sparse moment updates.
"""

from __future__ import annotations

import logging
import time
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field

import numpy as np

from .errors import ConfigError, NumericAbortError
from .graph import AmhenGraph, EvalSplit
from .model import (
    MEAN,
    Hyperparams,
    ModelParams,
    _activation,
    _activation_grad_from_output,
    forward_trace,
    init_params,
)
from .walker import NoiseTable, SampleSet, TrainingSample, build_noise_table

logger = logging.getLogger(__name__)

LOG_CLAMP = 1e-15
_MAX_NEG_LOG = -float(np.log(LOG_CLAMP))

ADAM_BETA1 = 0.9
ADAM_BETA2 = 0.999
ADAM_EPS = 1e-8


def _sigmoid(x):
    return 0.5 * (1.0 + np.tanh(0.5 * x))


def _neg_log_sigmoid(x):
    """-log(max(sigmoid(x), 1e-15)), computed without overflow."""
    return np.minimum(np.logaddexp(0.0, -x), _MAX_NEG_LOG)


@dataclass
class TrainConfig:
    """Training-loop settings; defaults follow the standard configuration."""

    negatives: int = 5
    learning_rate: float = 0.001
    max_epochs: int = 50
    patience: int = 1
    batch_size: int = 512
    seed: int = 0
    mode: str = "transductive"
    threads: int = 1

    def __post_init__(self):
        if self.negatives < 1:
            raise ConfigError("negatives must be at least 1")
        if self.learning_rate <= 0:
            raise ConfigError("learning_rate must be positive")
        if self.patience < 1:
            raise ConfigError("patience must be at least 1")


@dataclass
class EpochStats:
    epoch: int
    mean_loss: float
    val_auc: dict[str, float]
    val_auc_avg: float
    seconds: float


@dataclass
class TrainReport:
    epochs: list[EpochStats] = field(default_factory=list)
    stop_epoch: int = 0
    best_epoch: int = 0
    best_val_auc: float = 0.0


# -- negative sampling -------------------------------------------------------


def draw_negatives(noise: NoiseTable, graph, context_node: int, count: int, rng):
    """Draw negatives of the context's node type, excluding the context itself."""
    t = int(graph.node_type_ids[context_node])
    out = noise.sample(t, rng, count)
    for _ in range(100):
        mask = out == context_node
        if not mask.any():
            break
        out[mask] = noise.sample(t, rng, int(mask.sum()))
    return out


def _draw_negatives_batch(noise, graph, contexts, count, rng):
    B = len(contexts)
    out = np.empty((B, count), dtype=np.int64)
    types = graph.node_type_ids[contexts]
    for t in sorted(set(types.tolist())):
        mask = types == t
        out[mask] = noise.sample(int(t), rng, (int(mask.sum()), count))
    for _ in range(100):
        bad = out == contexts[:, None]
        if not bad.any():
            break
        rows = np.flatnonzero(bad.any(axis=1))
        for b in rows:
            sel = bad[b]
            out[b, sel] = noise.sample(int(types[b]), rng, int(sel.sum()))
    return out


# -- per-sample reference path ------------------------------------------------


def sample_loss(
    params: ModelParams,
    graph,
    sample: TrainingSample,
    noise: NoiseTable,
    rng,
    negatives: int = 5,
) -> float:
    """Objective value of one sample with freshly drawn negatives."""
    negs = draw_negatives(noise, graph, sample.context, negatives, rng)
    return sample_loss_given(params, graph, sample, negs, rng=rng)


def sample_loss_given(params, graph, sample, negative_nodes, rng=None) -> float:
    """Objective value with fixed negatives; deterministic in full mode."""
    trace = forward_trace(params, graph, sample.center, sample.edge_type, rng=rng)
    c = params.context
    loss = float(_neg_log_sigmoid(c[sample.context] @ trace.v))
    for k in np.asarray(negative_nodes):
        loss += float(_neg_log_sigmoid(-(c[int(k)] @ trace.v)))
    return loss


def sample_gradients(params, graph, sample, negative_nodes, rng=None):
    """Analytic gradients of one sample's objective over all tensor families.

    Negatives are passed in so the result is checkable against finite
    differences of ``sample_loss_given``.  Returns dense arrays shaped like
    ``params.tensors()``; untouched entries are zero.
    """
    trace = forward_trace(params, graph, sample.center, sample.edge_type, rng=rng)
    grads = params.zero_like_tensors()
    c = params.context
    j = sample.context
    gp = _sigmoid(c[j] @ trace.v) - 1.0
    grads["context"][j] += gp * trace.v
    g_v = gp * c[j]
    for k in np.asarray(negative_nodes):
        k = int(k)
        gn = _sigmoid(c[k] @ trace.v)
        grads["context"][k] += gn * trace.v
        g_v = g_v + gn * c[k]
    _backward_trace(params, graph, trace, g_v, grads)
    return grads


def _backward_trace(params, graph, trace, g_v, grads):
    """Accumulate d(g_v . v)/d(theta) into ``grads`` by walking the trace."""
    r = trace.edge_type
    if params.mode == "transductive":
        grads["base"][trace.node] += g_v
    else:
        z = int(graph.node_type_ids[trace.node])
        x = graph.features_of(trace.node)
        grads[f"feat_base_w.{z}"] += np.outer(x, g_v)
        grads[f"feat_base_b.{z}"] += g_v
        grads[f"feat_direct.{z}"] += params.beta[r] * np.outer(x, g_v)

    alpha = params.alpha[r]
    grads["transform"][r] += alpha * np.outer(trace.Ua, g_v)
    g_Ua = alpha * (params.transform[r] @ g_v)
    g_a = trace.U.T @ g_Ua
    g_U = np.outer(g_Ua, trace.a)

    a = trace.a
    g_y = a * (g_a - float(a @ g_a))
    grads["att_vec"][r] += trace.t @ g_y
    g_t = np.outer(params.att_vec[r], g_y)
    g_z = g_t * (1.0 - trace.t * trace.t)
    grads["att_mat"][r] += g_z @ trace.U.T
    g_U = g_U + params.att_mat[r].T @ g_z

    if trace.agg_roots is not None:
        for p in range(params.m):
            _backward_agg(
                params, graph, trace.agg_roots[p], p, g_U[:, p], grads,
                params.hyper.levels,
            )


def _backward_agg(params, graph, anode, edge_type, g_out, grads, level):
    if level == 0:
        if params.mode == "transductive":
            grads["edge_init"][anode.node, edge_type] += g_out
        else:
            z = int(graph.node_type_ids[anode.node])
            x = graph.features_of(anode.node)
            grads[f"feat_edge_w.{z}"][edge_type] += np.outer(x, g_out)
            grads[f"feat_edge_b.{z}"][edge_type] += g_out
        return
    act = params.hyper.activation
    if params.hyper.aggregator == MEAN:
        g_pre = g_out * _activation_grad_from_output(act, anode.out)
        grads["agg_w"][level - 1] += np.outer(g_pre, anode.h)
        g_h = params["agg_w"][level - 1].T @ g_pre
        share = g_h / len(anode.children)
        for child in anode.children:
            _backward_agg(params, graph, child, edge_type, share, grads, level - 1)
    else:
        stacked = np.stack([child.out for child in anode.children])
        q = _activation(act)(anode.pre)
        g_q = np.zeros_like(q)
        g_q[anode.argmax, np.arange(q.shape[1])] = g_out
        g_pre = g_q * _activation_grad_from_output(act, q)
        grads["agg_pool_w"][level - 1] += g_pre.T @ stacked
        grads["agg_pool_b"][level - 1] += g_pre.sum(axis=0)
        g_children = g_pre @ params["agg_pool_w"][level - 1]
        for i, child in enumerate(anode.children):
            _backward_agg(params, graph, child, edge_type, g_children[i], grads, level - 1)


# -- gradient checking ---------------------------------------------------------


@dataclass
class GradCheckReport:
    tolerance: float
    family_errors: dict[str, float]
    failures: list[str]

    @property
    def passed(self) -> bool:
        return not self.failures

    def worst(self):
        return max(self.family_errors.items(), key=lambda kv: kv[1])


def check_gradients(
    params: ModelParams,
    graph,
    n_samples: int = 25,
    tolerance: float = 1e-4,
    negatives: int = 5,
    seed: int = 0,
    fd_step: float = 1e-5,
    max_coords_per_family: int = 48,
    corrupt_family: str | None = None,
) -> GradCheckReport:
    """Compare analytic gradients with central finite differences.

    Runs ``n_samples`` random training samples; for each tensor family the
    checked coordinates are the analytically touched ones plus a random
    probe of untouched ones (capped per family).  Requires full-neighborhood
    aggregation and a smooth activation.  ``corrupt_family`` scales one
    family's analytic gradient by two (fault-injection hook for tests).
    """
    if params.hyper.neighbor_sample_size is not None:
        raise ConfigError("gradient checking requires full-neighborhood mode")
    rng = np.random.default_rng(seed)
    n, m = graph.num_nodes, graph.num_edge_types
    worst: dict[str, float] = {name: 0.0 for name in params.tensors()}

    for _ in range(n_samples):
        center = int(rng.integers(n))
        context = int(rng.integers(n))
        while context == center:
            context = int(rng.integers(n))
        r = int(rng.integers(m))
        sample = TrainingSample(center, context, r)
        t = int(graph.node_type_ids[context])
        pool = graph.nodes_of_type(t)
        negs = pool[rng.integers(len(pool), size=negatives)]

        analytic = sample_gradients(params, graph, sample, negs)
        if corrupt_family is not None:
            analytic[corrupt_family] = analytic[corrupt_family] * 2.0

        for name, tensor in params.tensors().items():
            ga = analytic[name]
            touched = np.flatnonzero(ga.ravel())
            if len(touched) > max_coords_per_family:
                touched = rng.choice(touched, size=max_coords_per_family, replace=False)
            probes = rng.integers(tensor.size, size=8)
            coords = np.unique(np.concatenate([touched, probes]))
            if len(coords) == 0:
                continue
            flat = tensor.ravel()
            fd = np.empty(len(coords))
            for idx, coord in enumerate(coords):
                orig = flat[coord]
                flat[coord] = orig + fd_step
                lp = sample_loss_given(params, graph, sample, negs)
                flat[coord] = orig - fd_step
                lm = sample_loss_given(params, graph, sample, negs)
                flat[coord] = orig
                fd[idx] = (lp - lm) / (2.0 * fd_step)
            ga_sel = ga.ravel()[coords]
            scale = max(np.abs(ga_sel).max(), np.abs(fd).max(), 1e-8)
            err = float(np.abs(ga_sel - fd).max() / scale)
            worst[name] = max(worst[name], err)

    failures = [name for name, err in worst.items() if err > tolerance]
    return GradCheckReport(tolerance, worst, failures)


# -- vectorized batch path ------------------------------------------------------


def _sample_plan(graph, centers, m, sample_size, levels, rng):
    """Regular sampled-neighborhood trees: index arrays (B, m, q**t) per depth."""
    B = len(centers)
    plan = [np.repeat(centers[:, None], m, axis=1).reshape(B, m, 1)]
    for t in range(1, levels + 1):
        prev = plan[-1]
        width = prev.shape[2]
        nxt = np.empty((B, m, width * sample_size), dtype=np.int64)
        for p in range(m):
            nodes = prev[:, p, :].ravel()
            ptr, idx = graph.indptr[p], graph.indices[p]
            deg = ptr[nodes + 1] - ptr[nodes]
            draws = rng.integers(
                0, np.maximum(deg, 1)[:, None], size=(len(nodes), sample_size)
            )
            if len(idx):
                gathered = idx[np.minimum(ptr[nodes][:, None] + draws, len(idx) - 1)]
            else:
                gathered = np.repeat(nodes[:, None], sample_size, axis=1)
            gathered = np.where(deg[:, None] > 0, gathered, nodes[:, None])
            nxt[:, p, :] = gathered.reshape(B, width * sample_size)
        plan.append(nxt)
    return plan


def _level0_batch(params, graph, leaves):
    """Initial edge embeddings at the plan's leaves: (B, m, Q, s)."""
    B, m, Q = leaves.shape
    if params.mode == "transductive":
        return params.edge_init[leaves, np.arange(m)[None, :, None], :]
    out = np.zeros((B, m, Q, params.hyper.s))
    flat = leaves.reshape(B, m * Q)
    types = graph.node_type_ids[leaves]
    for p in range(m):
        for z in params.feature_dims:
            mask = types[:, p, :] == z
            if not mask.any():
                continue
            nodes = leaves[:, p, :][mask]
            x = graph.attributes[z][graph.type_local_index[nodes]]
            out[:, p, :, :][mask] = (
                x @ params[f"feat_edge_w.{z}"][p] + params[f"feat_edge_b.{z}"][p]
            )
    return out


class _BatchWork:
    """Intermediates of one batch forward, consumed by the backward pass."""

    __slots__ = (
        "centers", "contexts", "etypes", "negs", "plan",
        "u_levels", "h_levels", "arg_levels",
        "U", "t", "a", "Ua", "v", "s_pos", "s_neg",
    )


def _forward_batch(params, graph, plan, centers, etypes):
    h = params.hyper
    act = _activation(h.activation)
    work = _BatchWork()
    work.plan = plan
    work.centers = centers
    work.etypes = etypes
    levels = h.levels
    B = len(centers)
    m = params.m

    u = _level0_batch(params, graph, plan[levels])
    work.u_levels = [None] * (levels + 1)
    work.h_levels = [None] * (levels + 1)
    work.arg_levels = [None] * (levels + 1)
    work.u_levels[levels] = u
    for k in range(levels, 0, -1):
        # reducing depth k to depth k-1 applies aggregation level (levels-k+1)
        w_idx = levels - k
        width = u.shape[2]
        q = width // plan[k - 1].shape[2]
        child = u.reshape(B, m, width // q, q, h.s)
        if h.aggregator == MEAN:
            mean_in = child.mean(axis=3)
            work.h_levels[k] = mean_in
            u = act(mean_in @ params["agg_w"][w_idx].T)
        else:
            qv = act(child @ params["agg_pool_w"][w_idx].T + params["agg_pool_b"][w_idx])
            arg = qv.argmax(axis=3)
            work.h_levels[k] = qv
            work.arg_levels[k] = arg
            u = np.take_along_axis(qv, arg[:, :, :, None, :], axis=3)[:, :, :, 0, :]
        work.u_levels[k - 1] = u
    U = u[:, :, 0, :]
    work.U = U

    Wb = params.att_mat[etypes]
    wb = params.att_vec[etypes]
    z = np.einsum("bds,bps->bpd", Wb, U)
    t = np.tanh(z)
    y = np.einsum("bd,bpd->bp", wb, t)
    y -= y.max(axis=1, keepdims=True)
    e = np.exp(y)
    a = e / e.sum(axis=1, keepdims=True)
    Ua = np.einsum("bp,bps->bs", a, U)
    edge = np.einsum("bs,bsd->bd", Ua, params.transform[etypes])
    edge *= params.alpha[etypes][:, None]
    work.t, work.a, work.Ua = t, a, Ua

    if params.mode == "transductive":
        base = params.base[centers]
    else:
        base = np.zeros((B, h.d))
        types = graph.node_type_ids[centers]
        for zt in params.feature_dims:
            mask = types == zt
            if not mask.any():
                continue
            x = graph.attributes[zt][graph.type_local_index[centers[mask]]]
            base[mask] = x @ params[f"feat_base_w.{zt}"] + params[f"feat_base_b.{zt}"]
            base[mask] += params.beta[etypes[mask]][:, None] * (
                x @ params[f"feat_direct.{zt}"]
            )
    work.v = base + edge
    return work


def batch_loss_and_grads(params, graph, plan, centers, contexts, etypes, negs):
    """Mean loss over the batch plus gradients (dense or (rows, values) sparse)."""
    B = len(centers)
    work = _forward_batch(params, graph, plan, centers, etypes)
    c = params.context
    v = work.v
    s_pos = np.einsum("bd,bd->b", c[contexts], v)
    c_neg = c[negs]
    s_neg = np.einsum("bld,bd->bl", c_neg, v)
    loss = float(
        (_neg_log_sigmoid(s_pos).sum() + _neg_log_sigmoid(-s_neg).sum()) / B
    )

    gp = (_sigmoid(s_pos) - 1.0) / B
    gn = _sigmoid(s_neg) / B
    g_v = gp[:, None] * c[contexts] + np.einsum("bl,bld->bd", gn, c_neg)

    grads: dict[str, object] = {}
    ctx_rows = np.concatenate([contexts, negs.ravel()])
    ctx_vals = np.concatenate(
        [gp[:, None] * v, (gn[:, :, None] * v[:, None, :]).reshape(-1, v.shape[1])]
    )
    grads["context"] = _to_sparse(ctx_rows, ctx_vals)
    _backward_batch(params, graph, work, g_v, grads)
    return loss, grads


def _to_sparse(rows, values):
    uniq, inv = np.unique(rows, return_inverse=True)
    buf = np.zeros((len(uniq), values.shape[1]))
    np.add.at(buf, inv, values)
    return ("rows", uniq, buf)


def _backward_batch(params, graph, work, g_v, grads):
    h = params.hyper
    m = params.m
    B = len(work.centers)
    etypes = work.etypes
    alpha_b = params.alpha[etypes]

    if params.mode == "transductive":
        grads["base"] = _to_sparse(work.centers, g_v)
    else:
        types = graph.node_type_ids[work.centers]
        for z in params.feature_dims:
            mask = types == z
            if not mask.any():
                continue
            x = graph.attributes[z][graph.type_local_index[work.centers[mask]]]
            grads[f"feat_base_w.{z}"] = x.T @ g_v[mask]
            grads[f"feat_base_b.{z}"] = g_v[mask].sum(axis=0)
            scaled = params.beta[etypes[mask]][:, None] * g_v[mask]
            grads[f"feat_direct.{z}"] = x.T @ scaled

    # edge term and attention
    g_transform = np.zeros_like(params.transform)
    g_att_vec = np.zeros_like(params.att_vec)
    g_att_mat = np.zeros_like(params.att_mat)
    g_Ua = alpha_b[:, None] * np.einsum("bsd,bd->bs", params.transform[etypes], g_v)
    g_a = np.einsum("bps,bs->bp", work.U, g_Ua)
    g_U = work.a[:, :, None] * g_Ua[:, None, :]
    adots = np.einsum("bp,bp->b", work.a, g_a)
    g_y = work.a * (g_a - adots[:, None])
    g_t = params.att_vec[etypes][:, None, :] * g_y[:, :, None]
    g_z = g_t * (1.0 - work.t * work.t)
    g_U += np.einsum("bds,bpd->bps", params.att_mat[etypes], g_z)
    for r in range(m):
        mask = etypes == r
        if not mask.any():
            continue
        g_transform[r] = params.alpha[r] * np.einsum(
            "bs,bd->sd", work.Ua[mask], g_v[mask]
        )
        g_att_vec[r] = np.einsum("bp,bpd->d", g_y[mask], work.t[mask])
        g_att_mat[r] = np.einsum("bpd,bps->ds", g_z[mask], work.U[mask])
    grads["transform"] = g_transform
    grads["att_vec"] = g_att_vec
    grads["att_mat"] = g_att_mat

    # aggregation chain
    g = g_U[:, :, None, :]
    if h.aggregator == MEAN:
        g_agg = np.zeros_like(params["agg_w"])
    else:
        g_pool_w = np.zeros_like(params["agg_pool_w"])
        g_pool_b = np.zeros_like(params["agg_pool_b"])
    for k in range(1, h.levels + 1):
        w_idx = h.levels - k
        u_out = work.u_levels[k - 1]
        child_width = work.u_levels[k].shape[2]
        q = child_width // u_out.shape[2]
        child = work.u_levels[k].reshape(B, m, u_out.shape[2], q, h.s)
        if h.aggregator == MEAN:
            g_pre = g * _activation_grad_from_output(h.activation, u_out)
            g_agg[w_idx] += np.einsum("bmci,bmcj->ij", g_pre, work.h_levels[k])
            g_h = g_pre @ params["agg_w"][w_idx]
            g = np.repeat(g_h[:, :, :, None, :] / q, q, axis=3).reshape(
                B, m, child_width, h.s
            )
        else:
            qv = work.h_levels[k]
            arg = work.arg_levels[k]
            g_qv = np.zeros_like(qv)
            np.put_along_axis(g_qv, arg[:, :, :, None, :], g[:, :, :, None, :], axis=3)
            g_pre = g_qv * _activation_grad_from_output(h.activation, qv)
            g_pool_w[w_idx] += np.einsum("bmcqi,bmcqj->ij", g_pre, child)
            g_pool_b[w_idx] += g_pre.sum(axis=(0, 1, 2, 3))
            g = (g_pre @ params["agg_pool_w"][w_idx]).reshape(B, m, child_width, h.s)
    if h.aggregator == MEAN:
        grads["agg_w"] = g_agg
    else:
        grads["agg_pool_w"] = g_pool_w
        grads["agg_pool_b"] = g_pool_b

    # leaves
    leaves = work.plan[h.levels]
    if params.mode == "transductive":
        flat_nodes = (leaves * m + np.arange(m)[None, :, None]).ravel()
        grads["edge_init"] = _to_sparse(flat_nodes, g.reshape(-1, h.s))
    else:
        types = graph.node_type_ids[leaves]
        for z in params.feature_dims:
            gw = np.zeros_like(params[f"feat_edge_w.{z}"])
            gb = np.zeros_like(params[f"feat_edge_b.{z}"])
            any_hit = False
            for p in range(m):
                mask = types[:, p, :] == z
                if not mask.any():
                    continue
                any_hit = True
                nodes = leaves[:, p, :][mask]
                x = graph.attributes[z][graph.type_local_index[nodes]]
                gl = g[:, p, :, :][mask]
                gw[p] = x.T @ gl
                gb[p] = gl.sum(axis=0)
            if any_hit:
                grads[f"feat_edge_w.{z}"] = gw
                grads[f"feat_edge_b.{z}"] = gb


# -- Adam --------------------------------------------------------------------


class Adam:
    """Adam with lazy row-sparse updates for embedding tables.

    Sparse gradients arrive as ("rows", indices, values) against a 2-D view
    of the tensor; only touched rows have their moments decayed and applied,
    with bias correction taken from the global step count.
    """

    def __init__(self, params: ModelParams, learning_rate: float):
        self.params = params
        self.lr = learning_rate
        self.mom = params.zero_like_tensors()
        self.vel = params.zero_like_tensors()
        self.t = 0

    def step(self, grads: dict):
        self.t += 1
        lr_t = self.lr * np.sqrt(1.0 - ADAM_BETA2 ** self.t) / (1.0 - ADAM_BETA1 ** self.t)
        for name, g in grads.items():
            tensor = self.params[name]
            mom, vel = self.mom[name], self.vel[name]
            if isinstance(g, tuple) and g[0] == "rows":
                _, rows, vals = g
                flat = tensor.reshape(-1, tensor.shape[-1])
                mflat = mom.reshape(-1, tensor.shape[-1])
                vflat = vel.reshape(-1, tensor.shape[-1])
                mrow = ADAM_BETA1 * mflat[rows] + (1 - ADAM_BETA1) * vals
                vrow = ADAM_BETA2 * vflat[rows] + (1 - ADAM_BETA2) * vals * vals
                mflat[rows] = mrow
                vflat[rows] = vrow
                flat[rows] -= lr_t * mrow / (np.sqrt(vrow) + ADAM_EPS)
            else:
                mom *= ADAM_BETA1
                mom += (1 - ADAM_BETA1) * g
                vel *= ADAM_BETA2
                vel += (1 - ADAM_BETA2) * g * g
                tensor -= lr_t * mom / (np.sqrt(vel) + ADAM_EPS)


# -- training loop --------------------------------------------------------------


def _default_validation(graph, split: EvalSplit, scorer="cosine"):
    from .evaluation import evaluate
    from .model import embed_all

    def run(params):
        emb = embed_all(params, graph)
        report = evaluate(emb, graph, split, which="val", scorer=scorer)
        return report.per_type_metric("roc_auc"), report.average["roc_auc"]

    return run


def train(
    graph: AmhenGraph,
    samples: SampleSet,
    config: TrainConfig,
    hyper: Hyperparams,
    split: EvalSplit | None = None,
    noise: NoiseTable | None = None,
    params: ModelParams | None = None,
    validation_fn=None,
    noise_exponent: float = 0.75,
) -> tuple[ModelParams, TrainReport]:
    """Mini-batch skip-gram training with early stopping.

    Each epoch shuffles all samples jointly across edge types.  After every
    epoch the validation ROC-AUC (uniform mean over edge types) is computed;
    training stops once it fails to improve for ``patience`` epochs and the
    best-validation parameters are returned.  With ``threads=1`` the run is
    fully deterministic for a given seed.
    """
    if len(samples) == 0:
        raise ConfigError("no training samples")
    if hyper.neighbor_sample_size is None:
        raise ConfigError("training requires a finite neighbor_sample_size")
    if noise is None:
        noise = build_noise_table(graph, samples, exponent=noise_exponent)
    if params is None:
        params = init_params(graph, hyper, config.mode, seed=config.seed)
    if validation_fn is None:
        if split is None:
            raise ConfigError("train needs an EvalSplit (or validation_fn) for early stopping")
        validation_fn = _default_validation(graph, split)

    report = TrainReport()
    best_params = params.clone()
    best_auc = -np.inf
    bad_epochs = 0
    opt = Adam(params, config.learning_rate)

    for epoch in range(1, config.max_epochs + 1):
        started = time.perf_counter()
        rng = np.random.default_rng(
            np.random.SeedSequence((config.seed, 7_919, epoch))
        )
        order = rng.permutation(len(samples))
        batches = [
            order[lo : lo + config.batch_size]
            for lo in range(0, len(order), config.batch_size)
        ]
        if config.threads > 1:
            losses = _run_batches_parallel(
                params, graph, samples, noise, config, hyper, batches, epoch, opt
            )
        else:
            losses = [
                _run_one_batch(params, graph, samples, noise, config, hyper, idx, rng, opt)
                for idx in batches
            ]
        mean_loss = float(np.mean(losses))
        if not np.isfinite(mean_loss):
            bad = int(np.flatnonzero(~np.isfinite(np.asarray(losses)))[0])
            first = samples[int(batches[bad][0])]
            norms = {k: float(np.linalg.norm(v)) for k, v in params.tensors().items()}
            raise NumericAbortError(
                f"non-finite loss in epoch {epoch}, batch {bad} "
                f"(first sample center={first.center} context={first.context} "
                f"edge_type={first.edge_type}); tensor norms: {norms}"
            )

        per_type, avg = validation_fn(params)
        seconds = time.perf_counter() - started
        report.epochs.append(EpochStats(epoch, mean_loss, per_type, avg, seconds))
        logger.info(
            "epoch %d: loss=%.6f val_roc_auc=%.4f (%.1fs)", epoch, mean_loss, avg, seconds
        )
        if avg > best_auc:
            best_auc = avg
            best_params = params.clone()
            report.best_epoch = epoch
            bad_epochs = 0
        else:
            bad_epochs += 1
            if bad_epochs >= config.patience:
                report.stop_epoch = epoch
                break
    if report.stop_epoch == 0:
        report.stop_epoch = len(report.epochs)
    report.best_val_auc = float(best_auc)
    return best_params, report


def _run_one_batch(params, graph, samples, noise, config, hyper, idx, rng, opt):
    centers = samples.centers[idx]
    contexts = samples.contexts[idx]
    etypes = samples.edge_types[idx]
    negs = _draw_negatives_batch(noise, graph, contexts, config.negatives, rng)
    plan = _sample_plan(
        graph, centers, params.m, hyper.neighbor_sample_size, hyper.levels, rng
    )
    loss, grads = batch_loss_and_grads(
        params, graph, plan, centers, contexts, etypes, negs
    )
    opt.step(grads)
    return loss


def _run_batches_parallel(params, graph, samples, noise, config, hyper, batches, epoch, opt):
    """Hogwild-style workers: shared parameters, racy lock-free updates."""

    def worker(args):
        wid, chunk = args
        rng = np.random.default_rng(
            np.random.SeedSequence((config.seed, 7_919, epoch, wid))
        )
        return [
            _run_one_batch(params, graph, samples, noise, config, hyper, idx, rng, opt)
            for idx in chunk
        ]

    chunks = [(w, batches[w :: config.threads]) for w in range(config.threads)]
    with ThreadPoolExecutor(max_workers=config.threads) as pool:
        results = list(pool.map(worker, chunks))
    return [loss for sub in results for loss in sub]


# -- complexity measurement -------------------------------------------------------


def measure_per_sample_time(
    graph: AmhenGraph,
    samples: SampleSet,
    hyper: Hyperparams,
    config: TrainConfig,
    batches: int = 40,
    repeats: int = 3,
    seed: int = 0,
) -> float:
    """Median seconds per training sample over timed batched steps."""
    noise = build_noise_table(graph, samples)
    timings = []
    for rep in range(repeats):
        params = init_params(graph, hyper, config.mode, seed=config.seed)
        opt = Adam(params, config.learning_rate)
        rng = np.random.default_rng(seed + rep)
        idx_sets = [
            rng.integers(len(samples), size=config.batch_size) for _ in range(batches)
        ]
        for idx in idx_sets[:5]:  # warmup
            _run_one_batch(params, graph, samples, noise, config, hyper, idx, rng, opt)
        start = time.perf_counter()
        for idx in idx_sets:
            _run_one_batch(params, graph, samples, noise, config, hyper, idx, rng, opt)
        elapsed = time.perf_counter() - start
        timings.append(elapsed / (batches * config.batch_size))
    return float(np.median(timings))
