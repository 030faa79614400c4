"""End-to-end orchestration: representations, per-seed runs, repeats.

A single seed fully determines a run: the split, the training vocabulary
(built from the training rows only), weight initialization, batch order,
dropout masks, fusion fitting, and noise draws all derive from it
through named child streams. Tuning rows double as the early-stopping
validation set; the test split is touched only at evaluation time.
"""

from __future__ import annotations

import hashlib
import json
import logging
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from .bench import (
    Dataset,
    SplitPlan,
    cosine,
    fixed_test_split,
    load_csv,
    mae,
    make_kfold,
    make_split,
    noisy_encoded,
    noisy_features,
    noisy_fingerprint,
    pearson,
    rmse,
    knn_diagnostics,
)
from .chemlex import EncodedSeq, UnknownTokenError, Vocabulary, build_vocab, encode
from .config import ExperimentConfig
from .ecfp import Fingerprint, ecfp
from .encoders import (
    BiGruHead,
    FpBatch,
    GcnHead,
    GraphBatch,
    SeqBatch,
    TrainReport,
    TransformerHead,
    train_head,
)
from .fusion import (
    FusionWeights,
    GbConfig,
    ModalOutputs,
    RfConfig,
    SgdConfig,
    collect_outputs,
    fit_elastic,
    fit_gb,
    fit_lasso,
    fit_rf,
    fit_sgd,
    fixed_mean_weights,
    fused_predict,
    select_lambda,
)
from .molgraph import MoleculeParseError, featurize, normalized_adjacency, parse_molecule
from .numcore import Rng

__all__ = [
    "FEATURIZATION_VERSION",
    "Prepared",
    "SplitData",
    "MetricsRow",
    "WeightsRow",
    "SeedResult",
    "RepeatResult",
    "prepare_dataset",
    "load_dataset",
    "materialize_split",
    "build_heads",
    "run_seed",
    "repeat_experiment",
    "kfold_experiment",
    "summarize",
    "write_metrics_csv",
    "write_weights_csv",
    "write_knn_csv",
    "write_summary_csv",
]

log = logging.getLogger("molfuse")

FEATURIZATION_VERSION = 1

MONO_METHODS = ("transformer", "bigru", "gcn")
FUSED_PREFIX = "tri_"


@dataclass
class Prepared:
    """Split-independent representations for one dataset."""

    name: str
    tokens: list[list[str]]
    fingerprints: list[Fingerprint]
    graphs: list[tuple[np.ndarray, np.ndarray]]
    targets: np.ndarray
    ids: list[str]
    max_len: int
    dropped_parse: int = 0

    def __len__(self):
        return len(self.tokens)


def load_dataset(config: ExperimentConfig) -> Dataset:
    d = config.data
    if not d.path:
        raise FileNotFoundError("config.data.path is not set")
    return load_csv(d.path, d.smiles_col, d.target_col, id_col=d.id_col, name=d.name)


def _cache_key(dataset: Dataset) -> str:
    h = hashlib.sha256()
    h.update(f"v{FEATURIZATION_VERSION}".encode())
    for rec in dataset.records:
        h.update(f"{rec.id}\x1f{rec.smiles}\x1f{rec.target!r}\n".encode())
    return h.hexdigest()[:16]


def prepare_dataset(dataset: Dataset, cache_dir: str | Path | None = None) -> Prepared:
    """Tokenize, fingerprint, and graph every record; cache by content hash.

    Records whose SMILES lex but fail graph parsing (for example unpaired
    ring digits) are dropped with a logged count, mirroring the CSV
    loader's drop-and-count contract.
    """
    cache_path = None
    if cache_dir is not None:
        cache_path = Path(cache_dir) / f"{dataset.name}-{_cache_key(dataset)}"
        if (cache_path / "meta.json").exists():
            log.info("representation cache hit: %s", cache_path)
            return _load_cache(cache_path)

    tokens, fps, graphs, targets, ids = [], [], [], [], []
    dropped = 0
    for rec in dataset.records:
        from .chemlex import tokenize

        toks = tokenize(rec.smiles)
        try:
            mol = parse_molecule(rec.smiles)
        except MoleculeParseError as exc:
            log.warning("dropping %s (%s): %s", rec.id, rec.smiles, exc)
            dropped += 1
            continue
        tokens.append(toks)
        fps.append(ecfp(mol))
        graphs.append((featurize(mol), normalized_adjacency(mol)))
        targets.append(rec.target)
        ids.append(rec.id)
    if dropped:
        log.info("dropped %d records at graph parsing", dropped)
    prep = Prepared(
        name=dataset.name,
        tokens=tokens,
        fingerprints=fps,
        graphs=graphs,
        targets=np.array(targets, dtype=np.float64),
        ids=ids,
        max_len=max(len(t) for t in tokens),
        dropped_parse=dropped,
    )
    if cache_path is not None:
        _save_cache(cache_path, prep)
        log.info("representation cache written: %s", cache_path)
    return prep


def _save_cache(path: Path, prep: Prepared) -> None:
    path.mkdir(parents=True, exist_ok=True)
    (path / "tokens.txt").write_text(
        "\n".join(" ".join(toks) for toks in prep.tokens) + "\n", encoding="utf-8"
    )
    np.save(path / "fingerprints.npy", np.stack([fp.bits for fp in prep.fingerprints]))
    graph_blob = {}
    for i, (x, a) in enumerate(prep.graphs):
        graph_blob[f"x{i}"] = x
        graph_blob[f"a{i}"] = a
    np.savez(path / "graphs.npz", **graph_blob)
    np.save(path / "targets.npy", prep.targets)
    meta = {
        "name": prep.name,
        "ids": prep.ids,
        "max_len": prep.max_len,
        "dropped_parse": prep.dropped_parse,
        "version": FEATURIZATION_VERSION,
        "n": len(prep),
    }
    (path / "meta.json").write_text(json.dumps(meta), encoding="utf-8")


def _load_cache(path: Path) -> Prepared:
    meta = json.loads((path / "meta.json").read_text(encoding="utf-8"))
    tokens = [line.split(" ") for line in (path / "tokens.txt").read_text(encoding="utf-8").splitlines()]
    bits = np.load(path / "fingerprints.npy")
    fps = [Fingerprint(bits=row, radius=2) for row in bits]
    blob = np.load(path / "graphs.npz")
    graphs = [(blob[f"x{i}"], blob[f"a{i}"]) for i in range(meta["n"])]
    return Prepared(
        name=meta["name"],
        tokens=tokens,
        fingerprints=fps,
        graphs=graphs,
        targets=np.load(path / "targets.npy"),
        ids=list(meta["ids"]),
        max_len=int(meta["max_len"]),
        dropped_parse=int(meta["dropped_parse"]),
    )


# ---------------------------------------------------------------------------
# per-seed materialization


@dataclass
class SplitSlice:
    indices: np.ndarray
    enc: list[EncodedSeq]
    fps: list[Fingerprint]
    graphs: list[tuple[np.ndarray, np.ndarray]]
    y: np.ndarray
    skipped_unknown: int = 0

    def seq_batch(self) -> SeqBatch:
        return SeqBatch.from_encoded(self.enc)

    def fp_batch(self) -> FpBatch:
        return FpBatch.from_fingerprints(self.fps)

    def graph_batch(self) -> GraphBatch:
        return GraphBatch(self.graphs)

    def batches(self) -> tuple[SeqBatch, FpBatch, GraphBatch]:
        return self.seq_batch(), self.fp_batch(), self.graph_batch()


@dataclass
class SplitData:
    plan: SplitPlan
    vocab: Vocabulary
    train: SplitSlice
    tuning: SplitSlice
    test: SplitSlice


def _plan_for(prep: Prepared, config: ExperimentConfig, seed: int) -> SplitPlan:
    idx_file = config.data.test_index_file
    if idx_file:
        wanted = {
            line.strip()
            for line in Path(idx_file).read_text(encoding="utf-8").splitlines()
            if line.strip()
        }
        positions = [i for i, rid in enumerate(prep.ids) if rid in wanted]
        if positions:
            return fixed_test_split(len(prep), seed, np.array(positions))
        log.warning("no ids from %s found in the dataset; falling back to a random split", idx_file)
    return make_split(len(prep), seed)


def materialize_split(prep: Prepared, plan: SplitPlan, config: ExperimentConfig | None = None) -> SplitData:
    """Build the training vocabulary and per-split encoded inputs.

    Tuning/test rows containing tokens absent from the training
    vocabulary are skipped with a logged count; silently remapping them
    would corrupt the evaluation.
    """
    vocab = build_vocab([prep.tokens[i] for i in plan.train])

    def slice_for(indices: np.ndarray, strict: bool) -> SplitSlice:
        enc, fps, graphs, ys, kept = [], [], [], [], []
        skipped = 0
        for i in indices:
            i = int(i)
            try:
                enc.append(encode(prep.tokens[i], vocab, prep.max_len))
            except UnknownTokenError as exc:
                if strict:
                    raise
                log.warning("skipping %s: %s", prep.ids[i], exc)
                skipped += 1
                continue
            fps.append(prep.fingerprints[i])
            graphs.append(prep.graphs[i])
            ys.append(prep.targets[i])
            kept.append(i)
        return SplitSlice(
            indices=np.array(kept, dtype=np.int64),
            enc=enc,
            fps=fps,
            graphs=graphs,
            y=np.array(ys, dtype=np.float64),
            skipped_unknown=skipped,
        )

    return SplitData(
        plan=plan,
        vocab=vocab,
        train=slice_for(plan.train, strict=True),
        tuning=slice_for(plan.tuning, strict=False),
        test=slice_for(plan.test, strict=False),
    )


def build_heads(config: ExperimentConfig, vocab_size: int, max_len: int, rng: Rng):
    r_tf, r_gru, r_gcn = rng.split(3)
    return (
        TransformerHead(vocab_size, max_len, config.model, r_tf),
        BiGruHead(config.model, r_gru),
        GcnHead(config.model, r_gcn),
    )


# ---------------------------------------------------------------------------
# evaluation rows


@dataclass(frozen=True)
class MetricsRow:
    dataset: str
    method: str
    seed: int
    noise_ratio: float
    rmse: float
    mae: float
    pearson: float
    cosine: float


@dataclass(frozen=True)
class WeightsRow:
    dataset: str
    method: str
    seed: int
    w1: float
    w2: float
    w3: float


@dataclass
class SeedResult:
    seed: int
    metrics: list[MetricsRow] = field(default_factory=list)
    weights: list[WeightsRow] = field(default_factory=list)
    knn: list[tuple] = field(default_factory=list)
    reports: dict[str, TrainReport] = field(default_factory=dict)


def _fit_all_methods(
    config: ExperimentConfig, o_tuning: ModalOutputs, y_tuning: np.ndarray, rng: Rng
) -> dict[str, FusionWeights]:
    fus = config.fusion
    r_sgd, r_grid, r_trees = rng.split(3)
    out: dict[str, FusionWeights] = {}
    for method in fus.methods:
        if method == "lasso":
            lam = fus.lasso_lambda
            if lam == "auto":
                lam = select_lambda(o_tuning.matrix, y_tuning, 1.0, r_grid)
            out[method] = fit_lasso(o_tuning, y_tuning, float(lam))
        elif method == "elastic":
            lam = fus.elastic_lambda
            if lam == "auto":
                lam = select_lambda(o_tuning.matrix, y_tuning, fus.elastic_alpha, r_grid)
            out[method] = fit_elastic(o_tuning, y_tuning, float(lam), fus.elastic_alpha)
        elif method == "rf":
            seed = int(r_trees.integers(0, 2**31))
            out[method] = fit_rf(
                o_tuning, y_tuning, RfConfig(n_trees=fus.rf_trees, max_depth=fus.rf_max_depth, seed=seed)
            )
        elif method == "gb":
            seed = int(r_trees.integers(0, 2**31))
            out[method] = fit_gb(
                o_tuning,
                y_tuning,
                GbConfig(
                    n_rounds=fus.gb_rounds,
                    shrinkage=fus.gb_shrinkage,
                    max_depth=fus.gb_max_depth,
                    seed=seed,
                ),
            )
        elif method == "sgd":
            out[method] = fit_sgd(
                o_tuning,
                y_tuning,
                SgdConfig(lr=fus.sgd_lr, epochs=fus.sgd_epochs, batch_size=fus.sgd_batch),
                r_sgd,
            )
        else:
            raise ValueError(f"unknown fusion method {method!r}")
    if fus.include_mean_reference:
        out["mean"] = fixed_mean_weights()
    return out


def _metric_values(y: np.ndarray, y_hat: np.ndarray) -> tuple[float, float, float, float]:
    return rmse(y, y_hat), mae(y, y_hat), pearson(y, y_hat), cosine(y, y_hat)


def _rows_for_outputs(
    dataset: str,
    seed: int,
    ratio: float,
    o_test: np.ndarray,
    y_test: np.ndarray,
    weights: dict[str, FusionWeights],
) -> list[MetricsRow]:
    rows = []
    for j, mono in enumerate(MONO_METHODS):
        rows.append(MetricsRow(dataset, mono, seed, ratio, *_metric_values(y_test, o_test[:, j])))
    for method, w in weights.items():
        fused = np.array([fused_predict(row, w) for row in o_test])
        rows.append(
            MetricsRow(dataset, FUSED_PREFIX + method, seed, ratio, *_metric_values(y_test, fused))
        )
    return rows


def _mean_rows(groups: list[list[MetricsRow]]) -> list[MetricsRow]:
    """Average metric fields across parallel row lists (same method order)."""
    first = groups[0]
    out = []
    for k, proto in enumerate(first):
        out.append(
            MetricsRow(
                proto.dataset,
                proto.method,
                proto.seed,
                proto.noise_ratio,
                float(np.mean([g[k].rmse for g in groups])),
                float(np.mean([g[k].mae for g in groups])),
                float(np.mean([g[k].pearson for g in groups])),
                float(np.mean([g[k].cosine for g in groups])),
            )
        )
    return out


def _noisy_outputs(
    heads, test: SplitSlice, vocab_size: int, ratio: float, rng: Rng
) -> np.ndarray:
    tf_head, gru_head, gcn_head = heads
    enc = [noisy_encoded(s, ratio, vocab_size, rng) for s in test.enc]
    fps = [noisy_fingerprint(fp, ratio, rng) for fp in test.fps]
    graphs = [(noisy_features(x, ratio, rng), a) for x, a in test.graphs]
    cols = [
        tf_head.predict(SeqBatch.from_encoded(enc))[0],
        gru_head.predict(FpBatch.from_fingerprints(fps))[0],
        gcn_head.predict(GraphBatch(graphs))[0],
    ]
    return np.column_stack(cols)


def run_seed(
    prep: Prepared,
    config: ExperimentConfig,
    seed: int,
    noise_ratios: list[float] | None = None,
    heads=None,
    collect_knn: bool = False,
) -> SeedResult:
    """Train (unless given pre-trained heads), fuse, and evaluate one seed."""
    result = SeedResult(seed=seed)
    plan = _plan_for(prep, config, seed)
    data = materialize_split(prep, plan, config)
    root = Rng(seed)
    r_init, r_train, r_fusion, r_noise, r_trainnoise = root.split(5)

    if config.train_noise_ratio > 0.0:
        data.train.enc = [
            noisy_encoded(s, config.train_noise_ratio, len(data.vocab), r_trainnoise)
            for s in data.train.enc
        ]
        data.train.fps = [
            noisy_fingerprint(fp, config.train_noise_ratio, r_trainnoise) for fp in data.train.fps
        ]
        data.train.graphs = [
            (noisy_features(x, config.train_noise_ratio, r_trainnoise), a)
            for x, a in data.train.graphs
        ]

    if heads is None:
        heads = build_heads(config, len(data.vocab), prep.max_len, r_init)
        tf_head, gru_head, gcn_head = heads
        train_rngs = r_train.split(3)
        batches = data.train.batches()
        val_batches = data.tuning.batches()
        for name, head, tr_rng, train_b, val_b in zip(
            MONO_METHODS, heads, train_rngs, batches, val_batches
        ):
            _, report = train_head(
                head, train_b, data.train.y, val_b, data.tuning.y, config.train, tr_rng
            )
            result.reports[name] = report
            log.info(
                "%s seed %d %s: best val %.4f at epoch %d (%.1fs)",
                prep.name, seed, name, report.best_val_loss, report.best_epoch, report.wall_time,
            )

    o_tuning = collect_outputs(heads, data.tuning.batches(), split="tuning")
    weights = _fit_all_methods(config, o_tuning, data.tuning.y, r_fusion)
    for method, w in weights.items():
        result.weights.append(WeightsRow(prep.name, FUSED_PREFIX + method, seed, *w.w))

    o_test = collect_outputs(heads, data.test.batches(), split="test").matrix
    result.metrics.extend(_rows_for_outputs(prep.name, seed, 0.0, o_test, data.test.y, weights))

    for ratio in noise_ratios or []:
        if ratio == 0.0:
            continue
        groups = []
        for _ in range(max(1, config.eval.noise_repeats)):
            o_noisy = _noisy_outputs(heads, data.test, len(data.vocab), ratio, r_noise)
            groups.append(
                _rows_for_outputs(prep.name, seed, ratio, o_noisy, data.test.y, weights)
            )
        result.metrics.extend(_mean_rows(groups))

    if collect_knn:
        train_ids = data.train.seq_batch().ids.astype(np.float64)
        test_ids = data.test.seq_batch().ids.astype(np.float64)
        sim_v, dist_v = knn_diagnostics(train_ids, test_ids, "vector", k=config.eval.knn_k)
        sim_f, dist_f = knn_diagnostics(
            data.train.fps, data.test.fps, "fingerprint", k=config.eval.knn_k
        )
        for pos in range(len(data.test.y)):
            result.knn.append(
                (prep.name, seed, "encoded", pos, float(sim_v[pos]), float(dist_v[pos]))
            )
            result.knn.append(
                (prep.name, seed, "fingerprint", pos, float(sim_f[pos]), float(dist_f[pos]))
            )
    return result


# ---------------------------------------------------------------------------
# multi-seed repetition


@dataclass
class RepeatResult:
    metrics: list[MetricsRow] = field(default_factory=list)
    weights: list[WeightsRow] = field(default_factory=list)
    knn: list[tuple] = field(default_factory=list)
    summary: list[dict] = field(default_factory=list)
    failures: list[tuple[int, str]] = field(default_factory=list)


def _run_seed_worker(args) -> SeedResult:
    prep, config, seed, ratios, collect_knn = args
    return run_seed(prep, config, seed, noise_ratios=ratios, collect_knn=collect_knn)


def repeat_experiment(
    config: ExperimentConfig,
    n_repeats: int | None = None,
    base_seed: int | None = None,
    prep: Prepared | None = None,
    noise_ratios: list[float] | None = None,
    collect_knn: bool = False,
) -> RepeatResult:
    """Run the pipeline once per seed = base_seed + i and aggregate.

    A failed seed is recorded in ``failures`` and the run continues.
    """
    if prep is None:
        prep = prepare_dataset(load_dataset(config), cache_dir=config.cache_dir)
    n_repeats = config.n_repeats if n_repeats is None else n_repeats
    base_seed = config.base_seed if base_seed is None else base_seed
    seeds = [base_seed + i for i in range(n_repeats)]
    out = RepeatResult()

    jobs = [(prep, config, s, noise_ratios, collect_knn) for s in seeds]
    if config.workers > 1 and not config.deterministic and len(seeds) > 1:
        with ProcessPoolExecutor(max_workers=config.workers) as pool:
            futures = [pool.submit(_run_seed_worker, job) for job in jobs]
            for seed, fut in zip(seeds, futures):
                try:
                    res = fut.result()
                except Exception as exc:  # noqa: BLE001 - recorded, run continues
                    log.error("seed %d failed: %s", seed, exc)
                    out.failures.append((seed, f"{type(exc).__name__}: {exc}"))
                    continue
                out.metrics.extend(res.metrics)
                out.weights.extend(res.weights)
                out.knn.extend(res.knn)
    else:
        for job in jobs:
            seed = job[2]
            try:
                res = _run_seed_worker(job)
            except Exception as exc:  # noqa: BLE001 - recorded, run continues
                log.error("seed %d failed: %s", seed, exc)
                out.failures.append((seed, f"{type(exc).__name__}: {exc}"))
                continue
            out.metrics.extend(res.metrics)
            out.weights.extend(res.weights)
            out.knn.extend(res.knn)
    out.summary = summarize(out.metrics)
    return out


def kfold_experiment(config: ExperimentConfig, prep: Prepared | None = None) -> RepeatResult:
    """Cross-validation variant: fold index takes the seed column."""
    if prep is None:
        prep = prepare_dataset(load_dataset(config), cache_dir=config.cache_dir)
    plans = make_kfold(len(prep), k=config.kfold_k, seed=config.seed)
    out = RepeatResult()
    for fold, plan in enumerate(plans):
        try:
            data = materialize_split(prep, plan, config)
            root = Rng(config.seed * 1000 + fold)
            r_init, r_train, r_fusion = root.split(3)
            heads = build_heads(config, len(data.vocab), prep.max_len, r_init)
            for head, tr_rng, train_b, val_b in zip(
                heads, r_train.split(3), data.train.batches(), data.tuning.batches()
            ):
                train_head(head, train_b, data.train.y, val_b, data.tuning.y, config.train, tr_rng)
            o_tuning = collect_outputs(heads, data.tuning.batches(), split="tuning")
            weights = _fit_all_methods(config, o_tuning, data.tuning.y, r_fusion)
            o_test = collect_outputs(heads, data.test.batches(), split="test").matrix
            out.metrics.extend(
                _rows_for_outputs(prep.name, fold, 0.0, o_test, data.test.y, weights)
            )
            for method, w in weights.items():
                out.weights.append(WeightsRow(prep.name, FUSED_PREFIX + method, fold, *w.w))
        except Exception as exc:  # noqa: BLE001
            log.error("fold %d failed: %s", fold, exc)
            out.failures.append((fold, f"{type(exc).__name__}: {exc}"))
    out.summary = summarize(out.metrics)
    return out


def summarize(rows: list[MetricsRow]) -> list[dict]:
    """Distribution summary per (method, noise_ratio, metric) over seeds."""
    groups: dict[tuple, dict[str, list[float]]] = {}
    for row in rows:
        key = (row.method, row.noise_ratio)
        groups.setdefault(key, {"rmse": [], "mae": [], "pearson": [], "cosine": []})
        for metric in ("rmse", "mae", "pearson", "cosine"):
            groups[key][metric].append(getattr(row, metric))
    out = []
    for (method, ratio), metrics in sorted(groups.items()):
        for metric, values in metrics.items():
            arr = np.array(values)
            out.append(
                {
                    "method": method,
                    "noise_ratio": ratio,
                    "metric": metric,
                    "n": len(values),
                    "min": float(arr.min()),
                    "max": float(arr.max()),
                    "median": float(np.median(arr)),
                    "mean": float(arr.mean()),
                    "stddev": float(arr.std(ddof=0)),
                }
            )
    return out


# ---------------------------------------------------------------------------
# report files (stable formatting so identical runs are byte-identical)


def _fmt(x: float) -> str:
    return format(x, ".10g")


def write_metrics_csv(path: str | Path, rows: list[MetricsRow]) -> None:
    lines = ["dataset,method,seed,noise_ratio,rmse,mae,pearson,cosine"]
    for r in rows:
        lines.append(
            f"{r.dataset},{r.method},{r.seed},{_fmt(r.noise_ratio)},"
            f"{_fmt(r.rmse)},{_fmt(r.mae)},{_fmt(r.pearson)},{_fmt(r.cosine)}"
        )
    Path(path).write_text("\n".join(lines) + "\n", encoding="utf-8")


def write_weights_csv(path: str | Path, rows: list[WeightsRow]) -> None:
    lines = ["dataset,method,seed,w1,w2,w3"]
    for r in rows:
        lines.append(f"{r.dataset},{r.method},{r.seed},{_fmt(r.w1)},{_fmt(r.w2)},{_fmt(r.w3)}")
    Path(path).write_text("\n".join(lines) + "\n", encoding="utf-8")


def write_knn_csv(path: str | Path, rows: list[tuple]) -> None:
    lines = ["dataset,seed,modality,test_index,max_similarity,mean_knn_distance"]
    for dataset, seed, modality, pos, sim, dist in rows:
        lines.append(f"{dataset},{seed},{modality},{pos},{_fmt(sim)},{_fmt(dist)}")
    Path(path).write_text("\n".join(lines) + "\n", encoding="utf-8")


def write_summary_csv(path: str | Path, summary: list[dict]) -> None:
    lines = ["method,noise_ratio,metric,n,min,max,median,mean,stddev"]
    for s in summary:
        lines.append(
            f"{s['method']},{_fmt(s['noise_ratio'])},{s['metric']},{s['n']},"
            f"{_fmt(s['min'])},{_fmt(s['max'])},{_fmt(s['median'])},{_fmt(s['mean'])},{_fmt(s['stddev'])}"
        )
    Path(path).write_text("\n".join(lines) + "\n", encoding="utf-8")
