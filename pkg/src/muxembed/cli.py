"""Batch command-line front end.

Commands: split | walk | train | embed | evaluate | recommend | verify.
A flat ``key = value`` config file provides settings; command-line flags
override it.  Exit codes: 0 success, 1 verification failure, 2 usage or
configuration error, 3 numeric abort during training.

Every artifact is written under ``--out`` with a fixed name and embeds the
config hash and graph hash for provenance checks.
"""

from __future__ import annotations

import argparse
import hashlib
import json
import logging
import sys
from dataclasses import dataclass, fields
from pathlib import Path

import numpy as np

from . import evaluation, graph as graphmod, model, trainer, walker
from .errors import MuxembedError, NumericAbortError, ConfigError

logger = logging.getLogger(__name__)

SPLIT_FILE = "split.tsv"
WALKS_FILE = "walks.txt"
CHECKPOINT_FILE = "checkpoint.ckpt"
MANIFEST_FILE = "train_manifest.jsonl"
EMBED_TEXT_FILE = "embeddings.txt"
EMBED_BIN_FILE = "embeddings.bin"
METRICS_TEXT_FILE = "metrics.txt"
METRICS_JSON_FILE = "metrics.json"
RECOMMEND_FILE = "recommendations.txt"
VERIFY_FILE = "verify.txt"

_MODES = {"T": "transductive", "I": "inductive",
          "transductive": "transductive", "inductive": "inductive"}


@dataclass
class RunConfig:
    """Effective settings of one run (config file merged with flag overrides)."""

    edge_file: str | None = None
    attr_file: str | None = None
    features_from_embedding: str | None = None
    out: str = "out"
    mode: str = "T"
    node_types: str = "node"
    edge_types: str = ""
    directed: str = ""
    type_prefixes: str = ""
    schemas: str = ""
    d: int = 200
    s: int = 10
    d_a: int = 20
    levels: int = 1
    aggregator: str = "mean"
    activation: str = "tanh"
    alpha: float = 1.0
    beta: float = 1.0
    neighbor_sample_size: int = 10
    walks: int = 20
    walk_length: int = 10
    window: int = 5
    noise_exponent: float = 0.75
    negatives: int = 5
    learning_rate: float = 0.001
    max_epochs: int = 50
    patience: int = 1
    batch_size: int = 512
    val_frac: float = 0.05
    test_frac: float = 0.10
    scorer: str = "cosine"
    topn: int = 50
    seed: int = 0
    threads: int = 1

    @classmethod
    def from_sources(cls, config_path: str | None, overrides: dict) -> "RunConfig":
        values: dict = {}
        if config_path:
            values.update(_parse_config_file(config_path))
        values.update({k: v for k, v in overrides.items() if v is not None})
        cfg = cls()
        typed = {f.name: f.type for f in fields(cls)}
        for key, raw in values.items():
            if key not in typed:
                raise ConfigError(f"unknown config key {key!r}")
            current = getattr(cfg, key)
            if isinstance(raw, str) and not isinstance(current, (str, type(None))):
                caster = type(current)
                try:
                    raw = caster(raw)
                except ValueError:
                    raise ConfigError(f"bad value for {key}: {raw!r}") from None
            setattr(cfg, key, raw)
        return cfg

    def as_dict(self) -> dict:
        return {f.name: getattr(self, f.name) for f in fields(self)}

    def config_hash(self) -> str:
        canonical = "\n".join(
            f"{k}={self.as_dict()[k]!r}" for k in sorted(self.as_dict())
        )
        return hashlib.sha256(canonical.encode()).hexdigest()

    # -- derived objects

    def model_mode(self) -> str:
        if self.mode not in _MODES:
            raise ConfigError(f"mode must be T or I, got {self.mode!r}")
        return _MODES[self.mode]

    def hyperparams(self) -> model.Hyperparams:
        return model.Hyperparams(
            d=self.d, s=self.s, d_a=self.d_a, levels=self.levels,
            aggregator=self.aggregator, activation=self.activation,
            alpha=self.alpha, beta=self.beta,
            neighbor_sample_size=self.neighbor_sample_size,
        )

    def train_config(self) -> trainer.TrainConfig:
        return trainer.TrainConfig(
            negatives=self.negatives, learning_rate=self.learning_rate,
            max_epochs=self.max_epochs, patience=self.patience,
            batch_size=self.batch_size, seed=self.seed,
            mode=self.model_mode(), threads=self.threads,
        )

    def graph_schema(self) -> graphmod.GraphSchema:
        if not self.edge_file:
            raise ConfigError("edge_file is required")
        edge_types = _split_csv(self.edge_types)
        if not edge_types:
            edge_types = _scan_edge_types(self.edge_file)
            logger.info("inferred edge types: %s", edge_types)
        directed_names = set(_split_csv(self.directed))
        unknown = directed_names - set(edge_types)
        if unknown:
            raise ConfigError(f"directed flag names unknown edge types: {sorted(unknown)}")
        prefixes = []
        for item in _split_csv(self.type_prefixes):
            if ":" not in item:
                raise ConfigError(f"type_prefixes entries must be prefix:type, got {item!r}")
            prefix, tname = item.split(":", 1)
            prefixes.append((prefix, tname))
        return graphmod.GraphSchema(
            node_types=tuple(_split_csv(self.node_types) or ["node"]),
            edge_types=tuple(edge_types),
            directed=tuple(name in directed_names for name in edge_types),
            type_prefixes=tuple(prefixes),
        )

    def walk_config(self, g: graphmod.AmhenGraph) -> walker.WalkConfig:
        schemas: dict[int, list[walker.MetaPathSchema]] = {}
        specs = _split_csv(self.schemas)
        if specs:
            parsed = [
                walker.MetaPathSchema.from_names(g.schema, spec.split("-"))
                for spec in specs
            ]
            schemas = {r: parsed for r in range(g.num_edge_types)}
        return walker.WalkConfig(
            walks_per_node=self.walks, walk_length=self.walk_length,
            window_radius=self.window, schemas=schemas, seed=self.seed,
            noise_exponent=self.noise_exponent,
        )


def _split_csv(text: str) -> list[str]:
    return [item.strip() for item in text.split(",") if item.strip()] if text else []


def _parse_config_file(path) -> dict:
    values = {}
    try:
        lines = Path(path).read_text(encoding="utf-8").splitlines()
    except OSError as exc:
        raise ConfigError(f"cannot read config file: {exc}") from None
    for lineno, line in enumerate(lines, 1):
        line = line.strip()
        if not line or line.startswith("#"):
            continue
        if "=" not in line:
            raise ConfigError(f"{path}:{lineno}: expected 'key = value'")
        key, value = line.split("=", 1)
        values[key.strip()] = value.strip()
    return values


def _scan_edge_types(edge_file) -> list[str]:
    seen: list[str] = []
    with open(edge_file, "r", encoding="utf-8") as fh:
        for line in fh:
            if not line.strip() or line.startswith("#"):
                continue
            name = line.split("\t", 1)[0]
            if name not in seen:
                seen.append(name)
    return seen


def _load_graph(cfg: RunConfig) -> graphmod.AmhenGraph:
    schema = cfg.graph_schema()
    attr = cfg.attr_file or cfg.features_from_embedding
    return graphmod.load_graph(cfg.edge_file, attr, schema)


def _require_attributes(cfg: RunConfig):
    if cfg.model_mode() == "inductive" and not (cfg.attr_file or cfg.features_from_embedding):
        raise ConfigError(
            "mode I needs node attributes: pass attr_file or "
            "--features-from-embedding <file>"
        )


def _out_dir(cfg: RunConfig) -> Path:
    out = Path(cfg.out)
    out.mkdir(parents=True, exist_ok=True)
    return out


# -- commands ------------------------------------------------------------------


def cmd_split(cfg: RunConfig) -> int:
    g = _load_graph(cfg)
    split = graphmod.split_edges(g, cfg.val_frac, cfg.test_frac, cfg.seed)
    out = _out_dir(cfg)
    path = out / SPLIT_FILE
    graphmod.save_split(split, path)
    _prepend_header(path, f"# config_hash={cfg.config_hash()}\n")
    for r in range(g.num_edge_types):
        name = g.schema.edge_types[r]
        print(
            f"{name}: train={len(split.train_graph.edges[r])} "
            f"val={len(split.val_pos[r])} test={len(split.test_pos[r])}"
        )
    print(f"split manifest written to {path}")
    return 0


def _prepend_header(path: Path, header: str):
    body = path.read_text(encoding="utf-8")
    path.write_text(header + body, encoding="utf-8")


def _load_split_for(cfg: RunConfig, g, split_path: str | None):
    path = Path(split_path) if split_path else _out_dir(cfg) / SPLIT_FILE
    if not path.exists():
        raise ConfigError(
            f"split manifest {path} not found; run `muxembed split` first"
        )
    return graphmod.load_split(path, g)


def cmd_walk(cfg: RunConfig, split_path: str | None = None) -> int:
    g = _load_graph(cfg)
    target = g
    try:
        target = _load_split_for(cfg, g, split_path).train_graph
    except ConfigError:
        logger.info("no split manifest; walking the full graph")
    corpus = walker.generate_corpus(target, cfg.walk_config(g), threads=cfg.threads)
    out = _out_dir(cfg) / WALKS_FILE
    header = f"# muxembed walks graph_hash={g.content_hash()} config_hash={cfg.config_hash()}\n"
    with open(out, "w", encoding="utf-8") as fh:
        fh.write(header)
    with open(out, "a", encoding="utf-8") as fh:
        ids = target.external_ids()
        for r in sorted(corpus.walks):
            name = target.schema.edge_types[r]
            for walk in corpus.walks[r]:
                fh.write(name + " " + " ".join(ids[i] for i in walk) + "\n")
    print(f"{len(corpus)} walks written to {out}")
    return 0


def cmd_train(cfg: RunConfig, split_path: str | None = None) -> int:
    _require_attributes(cfg)
    g = _load_graph(cfg)
    split = _load_split_for(cfg, g, split_path)
    train_graph = split.train_graph
    corpus = walker.generate_corpus(train_graph, cfg.walk_config(g), threads=cfg.threads)
    samples = walker.walks_to_pairs(corpus, cfg.window)
    if len(samples) == 0:
        raise ConfigError("walk corpus produced no training samples")
    noise = walker.build_noise_table(train_graph, samples, exponent=cfg.noise_exponent)
    params, report = trainer.train(
        train_graph, samples, cfg.train_config(), cfg.hyperparams(),
        split=split, noise=noise, noise_exponent=cfg.noise_exponent,
    )
    out = _out_dir(cfg)
    ckpt = out / CHECKPOINT_FILE
    model.save_checkpoint(
        params, ckpt, seed=cfg.seed,
        graph_hash=g.content_hash(), config_hash=cfg.config_hash(),
    )
    manifest = out / MANIFEST_FILE
    with open(manifest, "w", encoding="utf-8") as fh:
        echo = dict(cfg.as_dict())
        echo.update(
            record="config",
            config_hash=cfg.config_hash(),
            graph_hash=g.content_hash(),
            num_samples=len(samples),
        )
        fh.write(json.dumps(echo, sort_keys=True) + "\n")
        for ep in report.epochs:
            fh.write(json.dumps({
                "record": "epoch", "epoch": ep.epoch,
                "mean_loss": ep.mean_loss,
                "val_roc_auc": ep.val_auc, "val_roc_auc_avg": ep.val_auc_avg,
            }, sort_keys=True) + "\n")
        fh.write(json.dumps({
            "record": "final", "stop_epoch": report.stop_epoch,
            "best_epoch": report.best_epoch,
            "best_val_roc_auc": report.best_val_auc,
        }, sort_keys=True) + "\n")
    print(
        f"trained {report.stop_epoch} epoch(s); best validation ROC-AUC "
        f"{report.best_val_auc:.4f} at epoch {report.best_epoch}"
    )
    print(f"checkpoint written to {ckpt}")
    return 0


def _load_checkpoint_for(cfg: RunConfig, g, checkpoint_path: str | None):
    path = Path(checkpoint_path) if checkpoint_path else _out_dir(cfg) / CHECKPOINT_FILE
    if not path.exists():
        raise ConfigError(f"checkpoint {path} not found")
    params, header = model.load_checkpoint(path)
    if header.get("graph_hash") and header["graph_hash"] != g.content_hash():
        raise ConfigError(
            "checkpoint was trained on a different graph "
            f"(hash {header['graph_hash'][:12]}... vs {g.content_hash()[:12]}...)"
        )
    return params, header


def cmd_embed(cfg: RunConfig, checkpoint_path: str | None = None) -> int:
    g = _load_graph(cfg)
    params, header = _load_checkpoint_for(cfg, g, checkpoint_path)
    emb = model.embed_all(params, g)
    out = _out_dir(cfg)
    ghash, chash = g.content_hash(), cfg.config_hash()
    model.save_embeddings_text(emb, g, out / EMBED_TEXT_FILE, ghash, chash)
    model.save_embeddings_binary(emb, out / EMBED_BIN_FILE, ghash, chash)
    print(f"embeddings ({emb.shape[0]} x {emb.shape[1]} x {emb.shape[2]}) written to {out}")
    return 0


def cmd_evaluate(
    cfg: RunConfig, checkpoint_path: str | None = None,
    split_path: str | None = None, which: str = "test",
) -> int:
    g = _load_graph(cfg)
    params, header = _load_checkpoint_for(cfg, g, checkpoint_path)
    split = _load_split_for(cfg, g, split_path)
    if split.graph_hash and split.graph_hash != g.content_hash():
        raise ConfigError("split manifest belongs to a different graph")
    emb = model.embed_all(params, g)
    report = evaluation.evaluate(emb, g, split, which=which, scorer=cfg.scorer)
    out = _out_dir(cfg)
    ghash, chash = g.content_hash(), cfg.config_hash()
    (out / METRICS_TEXT_FILE).write_text(report.to_text(ghash, chash), encoding="utf-8")
    (out / METRICS_JSON_FILE).write_text(report.to_json(ghash, chash), encoding="utf-8")
    print(report.to_text(ghash, chash), end="")
    return 0


def cmd_recommend(
    cfg: RunConfig, queries_path: str, checkpoint_path: str | None = None,
    edge_type: str | None = None, topn: int | None = None,
) -> int:
    g = _load_graph(cfg)
    params, header = _load_checkpoint_for(cfg, g, checkpoint_path)
    n_top = topn if topn is not None else cfg.topn
    r = g.schema.edge_type_id(edge_type) if edge_type else 0
    queries = [
        line.strip() for line in Path(queries_path).read_text(encoding="utf-8").splitlines()
        if line.strip() and not line.startswith("#")
    ]
    ids = g.external_ids()
    try:
        query_idx = [g.node_index(q) for q in queries]
    except MuxembedError as exc:
        raise ConfigError(str(exc)) from None
    emb = model.embed_all(params, g)
    vectors = emb[:, r, :]
    ranked = evaluation.knn_topn(vectors, vectors[query_idx], n_top)
    out = _out_dir(cfg) / RECOMMEND_FILE
    with open(out, "w", encoding="utf-8") as fh:
        fh.write(
            f"# muxembed recommendations edge_type={g.schema.edge_types[r]} "
            f"n={n_top} graph_hash={g.content_hash()} config_hash={cfg.config_hash()}\n"
        )
        for q, row in zip(queries, ranked):
            fh.write(q + " " + " ".join(ids[i] for i in row) + "\n")
    print(f"{len(queries)} recommendation list(s) written to {out}")
    return 0


# -- verify -----------------------------------------------------------------------


def _brute_roc_auc(pos, neg):
    wins = ties = 0
    for p in pos:
        for q in neg:
            if p > q:
                wins += 1
            elif p == q:
                ties += 1
    return (wins + 0.5 * ties) / (len(pos) * len(neg))


def _brute_f1_known_k(pos, neg):
    k = len(pos)
    pooled = list(pos) + list(neg)
    order = sorted(range(len(pooled)), key=lambda i: (-pooled[i], i))
    tp = sum(1 for i in order[:k] if i < k)
    return tp / k if k else 0.0


def _brute_pr_auc(pos, neg):
    scores = list(pos) + list(neg)
    labels = [1] * len(pos) + [0] * len(neg)
    thresholds = sorted(set(scores), reverse=True)
    points = [(0.0, 1.0)]
    for th in thresholds:
        tp = sum(1 for s, l in zip(scores, labels) if s >= th and l == 1)
        fp = sum(1 for s, l in zip(scores, labels) if s >= th and l == 0)
        points.append((tp / len(pos), tp / (tp + fp)))
    area = 0.0
    for (r0, p0), (r1, p1) in zip(points, points[1:]):
        area += (r1 - r0) * (p1 + p0) / 2.0
    return area


def _verify_graph(seed=11, n=30, m=3, p=0.15):
    rng = np.random.default_rng(seed)
    names = [f"n{i}" for i in range(n)]
    rows = []
    for r in range(m):
        for i in range(n):
            for j in range(i + 1, n):
                if rng.random() < p:
                    rows.append((f"e{r}", names[i], names[j]))
    schema = graphmod.GraphSchema(edge_types=tuple(f"e{r}" for r in range(m)))
    g = graphmod.AmhenGraph.build(schema, rows)
    feats = rng.normal(size=(n, 6))
    attr_rows = [(names[i], feats[i]) for i in range(n)]
    g_attr = graphmod.AmhenGraph.build(schema, rows, attr_rows)
    return g, g_attr


def run_verification(inject_fault: str | None = None, theorem_m: float = 50.0,
                     report_lines: list | None = None) -> bool:
    """Desk-scale property suite; returns True when everything passes."""
    lines = report_lines if report_lines is not None else []
    ok = True

    def check(name, passed, detail=""):
        nonlocal ok
        ok = ok and passed
        lines.append(f"{'PASS' if passed else 'FAIL'} {name} {detail}".rstrip())

    rng = np.random.default_rng(0)
    worst = {"roc": 0.0, "pr": 0.0, "f1": 0.0}
    for _ in range(200):
        npos, nneg = int(rng.integers(1, 40)), int(rng.integers(1, 40))
        if rng.random() < 0.3:
            pool = rng.integers(0, 5, size=npos + nneg).astype(float)
        else:
            pool = rng.normal(size=npos + nneg)
        pos, neg = pool[:npos], pool[npos:]
        worst["roc"] = max(worst["roc"], abs(evaluation.roc_auc(pos, neg) - _brute_roc_auc(pos, neg)))
        worst["pr"] = max(worst["pr"], abs(evaluation.pr_auc(pos, neg) - _brute_pr_auc(pos, neg)))
        worst["f1"] = max(worst["f1"], abs(evaluation.f1_known_k(pos, neg) - _brute_f1_known_k(pos, neg)))
    check("metric_oracle_roc_auc", worst["roc"] == 0.0, f"max_err={worst['roc']:.2e}")
    check("metric_oracle_pr_auc", worst["pr"] <= 1e-12, f"max_err={worst['pr']:.2e}")
    check("metric_oracle_f1", worst["f1"] == 0.0, f"max_err={worst['f1']:.2e}")

    g, g_attr = _verify_graph()
    for mode, target in (("transductive", g), ("inductive", g_attr)):
        for agg in (model.MEAN, model.MAXPOOL):
            hyper = model.Hyperparams(
                d=12, s=4, d_a=5, levels=1, aggregator=agg,
                neighbor_sample_size=None,
            )
            params = model.init_params(target, hyper, mode, seed=3)
            fault = inject_fault if (mode, agg) == ("transductive", model.MEAN) else None
            rep = trainer.check_gradients(
                params, target, n_samples=8, tolerance=1e-4, seed=5,
                corrupt_family=fault,
            )
            name = f"gradients_{mode}_{agg}"
            family, err = rep.worst()
            check(name, rep.passed, f"worst={family}:{err:.2e}")

    oracle = evaluation.MneOracleParams.random(n=20, m=3, s=4, d=8, seed=1)
    target_norm = max(
        abs(evaluation.mne_oracle_embedding(oracle, i, r)).max()
        for i in range(oracle.n) for r in range(oracle.m)
    )
    tol = 1e-6 * (1.0 + target_norm)
    errs = {
        mval: evaluation.theorem1_max_error(
            oracle, evaluation.theorem1_construct(oracle, big_m=mval)
        )
        for mval in (1.0, 5.0, 10.0, theorem_m)
    }
    check("theorem_construction", errs[theorem_m] <= tol,
          f"err={errs[theorem_m]:.2e} tol={tol:.2e}")
    vals = [errs[k] for k in (1.0, 5.0, 10.0, theorem_m)]
    check("theorem_monotone_in_m", all(a >= b for a, b in zip(vals, vals[1:])),
          "errors=" + ",".join(f"{v:.2e}" for v in vals))
    err0 = evaluation.theorem1_max_error(oracle, evaluation.theorem1_construct(oracle, big_m=0.0))
    check("theorem_negative_control", err0 > tol,
          f"expected-fail err={err0:.2e} (must exceed tol)")

    hyper = model.Hyperparams(d=8, s=3, d_a=4, alpha=0.0, neighbor_sample_size=None)
    params = model.init_params(g, hyper, "transductive", seed=9)
    max_gap = 0.0
    collapse_ok = True
    rng = np.random.default_rng(2)
    for _ in range(200):
        i = int(rng.integers(g.num_nodes))
        r = int(rng.integers(g.num_edge_types))
        U = rng.normal(size=(hyper.s, g.num_edge_types))
        a = model.attention_coefficients(params, U, r)
        max_gap = max(max_gap, abs(float(a.sum()) - 1.0))
        collapse_ok = collapse_ok and (a >= 0).all()
        v = model.overall_embedding(params, g, i, r)
        collapse_ok = collapse_ok and np.array_equal(v, params.base[i])
    check("attention_normalization", max_gap <= 1e-12, f"max|sum-1|={max_gap:.2e}")
    check("alpha_zero_collapse", collapse_ok)

    chi_ok, chi_p = _walker_chi_square()
    check("walker_transition_stats", chi_ok, f"p={chi_p:.4f}")
    return ok


def _walker_chi_square(draws=100_000, seed=123):
    from scipy.stats import chisquare

    schema = graphmod.GraphSchema(
        node_types=("a", "b"),
        edge_types=("e",),
        type_prefixes=(("A", "a"), ("B", "b")),
    )
    rows = [("e", "A0", f"B{k}") for k in range(4)] + [
        ("e", "A0", f"A{k}") for k in range(1, 4)
    ] + [("e", f"B{k}", f"A{k}") for k in range(1, 3)]
    g = graphmod.AmhenGraph.build(schema, rows)
    path = walker.MetaPathSchema.from_names(g.schema, ("a", "b", "a"))
    rng = np.random.default_rng(seed)
    probs = walker.transition_probabilities(g, 0, g.node_index("A0"), path, 0)
    valid = np.flatnonzero(probs)
    counts = np.zeros(len(valid))
    lookup = {int(v): k for k, v in enumerate(valid)}
    for _ in range(draws):
        nxt = walker.walk_step(g, 0, g.node_index("A0"), path, 0, rng)
        counts[lookup[nxt]] += 1
    expected = probs[valid] * draws
    stat, p = chisquare(counts, expected)
    return p > 0.01, float(p)


def cmd_verify(cfg: RunConfig, inject_fault: str | None = None,
               theorem_m: float = 50.0) -> int:
    lines: list[str] = []
    ok = run_verification(inject_fault=inject_fault, theorem_m=theorem_m,
                          report_lines=lines)
    out = _out_dir(cfg) / VERIFY_FILE
    header = f"# muxembed verify config_hash={cfg.config_hash()}\n"
    out.write_text(header + "\n".join(lines) + "\n", encoding="utf-8")
    print("\n".join(lines))
    return 0 if ok else 1


# -- argument parsing ----------------------------------------------------------------


def _build_parser():
    parser = argparse.ArgumentParser(
        prog="muxembed",
        description="Multiplex heterogeneous network embedding pipeline",
    )
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--config", help="flat key = value config file")
    common.add_argument("--edge-file", dest="edge_file")
    common.add_argument("--attr-file", dest="attr_file")
    common.add_argument("--features-from-embedding", dest="features_from_embedding")
    common.add_argument("--out")
    common.add_argument("--mode", choices=sorted(_MODES))
    common.add_argument("--node-types", dest="node_types")
    common.add_argument("--edge-types", dest="edge_types")
    common.add_argument("--directed")
    common.add_argument("--type-prefixes", dest="type_prefixes")
    common.add_argument("--schemas")
    common.add_argument("--d", type=int)
    common.add_argument("--s", type=int)
    common.add_argument("--d-a", dest="d_a", type=int)
    common.add_argument("--levels", type=int)
    common.add_argument("--aggregator", choices=[model.MEAN, model.MAXPOOL])
    common.add_argument("--activation", choices=["tanh", "identity", "relu"])
    common.add_argument("--alpha", type=float)
    common.add_argument("--beta", type=float)
    common.add_argument("--neighbor-sample-size", dest="neighbor_sample_size", type=int)
    common.add_argument("--walks", type=int)
    common.add_argument("--walk-length", dest="walk_length", type=int)
    common.add_argument("--window", type=int)
    common.add_argument("--negatives", type=int)
    common.add_argument("--learning-rate", dest="learning_rate", type=float)
    common.add_argument("--max-epochs", dest="max_epochs", type=int)
    common.add_argument("--patience", type=int)
    common.add_argument("--batch-size", dest="batch_size", type=int)
    common.add_argument("--val", dest="val_frac", type=float)
    common.add_argument("--test", dest="test_frac", type=float)
    common.add_argument("--scorer", choices=list(evaluation.SCORERS))
    common.add_argument("--seed", type=int)
    common.add_argument("--threads", type=int)

    sub = parser.add_subparsers(dest="command", required=True)
    sub.add_parser("split", parents=[common])
    p_walk = sub.add_parser("walk", parents=[common])
    p_walk.add_argument("--split", dest="split_path")
    p_train = sub.add_parser("train", parents=[common])
    p_train.add_argument("--split", dest="split_path")
    p_embed = sub.add_parser("embed", parents=[common])
    p_embed.add_argument("--checkpoint")
    p_eval = sub.add_parser("evaluate", parents=[common])
    p_eval.add_argument("--checkpoint")
    p_eval.add_argument("--split", dest="split_path")
    p_eval.add_argument("--which", choices=["val", "test"], default="test")
    p_rec = sub.add_parser("recommend", parents=[common])
    p_rec.add_argument("--checkpoint")
    p_rec.add_argument("--queries", required=True)
    p_rec.add_argument("--edge-type", dest="edge_type")
    p_rec.add_argument("--n", dest="topn_flag", type=int)
    p_verify = sub.add_parser("verify", parents=[common])
    p_verify.add_argument("--inject-fault", dest="inject_fault")
    p_verify.add_argument("--theorem-m", dest="theorem_m", type=float, default=50.0)
    return parser


_CONFIG_KEYS = {f.name for f in fields(RunConfig)}


def main(argv=None) -> int:
    logging.basicConfig(level=logging.INFO, format="%(levelname)s %(name)s: %(message)s")
    parser = _build_parser()
    args = parser.parse_args(argv)
    overrides = {k: v for k, v in vars(args).items() if k in _CONFIG_KEYS}
    try:
        cfg = RunConfig.from_sources(args.config, overrides)
        if args.command == "split":
            return cmd_split(cfg)
        if args.command == "walk":
            return cmd_walk(cfg, args.split_path)
        if args.command == "train":
            return cmd_train(cfg, args.split_path)
        if args.command == "embed":
            return cmd_embed(cfg, args.checkpoint)
        if args.command == "evaluate":
            return cmd_evaluate(cfg, args.checkpoint, args.split_path, args.which)
        if args.command == "recommend":
            return cmd_recommend(
                cfg, args.queries, args.checkpoint, args.edge_type, args.topn_flag
            )
        if args.command == "verify":
            return cmd_verify(cfg, args.inject_fault, args.theorem_m)
        parser.error(f"unknown command {args.command}")
    except NumericAbortError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 3
    except MuxembedError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2
    return 2


if __name__ == "__main__":
    sys.exit(main())
