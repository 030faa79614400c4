"""Command-line front end: prepare / train / evaluate / noise / repeat / kfold.

Exit codes: 0 success, 2 configuration error, 3 data error, 4 numeric
failure. All reports land under ``<outdir>/<dataset>/<run>/``.
"""

from __future__ import annotations

import argparse
import dataclasses
import json
import logging
import sys
import time
from pathlib import Path

from . import bench, chemlex, fusion, molgraph
from .config import ConfigError, ExperimentConfig
from .numcore import CheckpointFormatError, NonFiniteGradientError, load_checkpoint, save_checkpoint
from .encoders import NonFiniteLossError, train_head
from .pipeline import (
    MONO_METHODS,
    build_heads,
    kfold_experiment,
    load_dataset,
    materialize_split,
    prepare_dataset,
    repeat_experiment,
    run_seed,
    summarize,
    write_knn_csv,
    write_metrics_csv,
    write_summary_csv,
    write_weights_csv,
    _plan_for,
)

log = logging.getLogger("molfuse")

EXIT_OK = 0
EXIT_CONFIG = 2
EXIT_DATA = 3
EXIT_NUMERIC = 4

_DATA_ERRORS = (
    FileNotFoundError,
    IsADirectoryError,
    bench.MissingColumnError,
    bench.EmptyDatasetError,
    bench.TooSmallError,
    bench.EmptyTrainSetError,
    chemlex.LexError,
    chemlex.EmptyCorpusError,
    chemlex.UnknownTokenError,
    chemlex.SequenceTooLongError,
    molgraph.MoleculeParseError,
    CheckpointFormatError,
)
_NUMERIC_ERRORS = (
    NonFiniteLossError,
    NonFiniteGradientError,
    fusion.NonFiniteLossError,
    fusion.DegenerateColumnError,
    bench.ZeroVarianceError,
    bench.ZeroVectorError,
    FloatingPointError,
)
_CONFIG_ERRORS = (ConfigError, fusion.InvalidConfigError, fusion.TooFewSamplesError, ValueError, KeyError)


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="molfuse",
        description="Triple-modal molecular property regression with late fusion.",
    )
    parser.add_argument("--config", help="YAML experiment config")
    parser.add_argument("--dataset", help="dataset CSV path (overrides config)")
    parser.add_argument("--dataset-name", help="dataset tag used in reports")
    parser.add_argument("--smiles-col", help="SMILES column name")
    parser.add_argument("--target-col", help="target column name")
    parser.add_argument("--outdir", help="report root directory")
    parser.add_argument("--run-name", help="run subdirectory (default: timestamp)")
    parser.add_argument("--cache-dir", help="representation cache directory")
    parser.add_argument("--seed", type=int, help="split/init seed")
    parser.add_argument("--epochs", type=int, help="training epochs")
    parser.add_argument("--batch", type=int, help="minibatch size")
    parser.add_argument("--lr", type=float, help="Adam learning rate")
    parser.add_argument("--repeats", type=int, help="number of seed repetitions")
    parser.add_argument("--base-seed", type=int, help="first seed of the repetition run")
    parser.add_argument("--methods", help="comma-separated fusion methods")
    parser.add_argument("--noise-ratios", help="comma-separated noise ratios")
    parser.add_argument("--workers", type=int, help="parallel seed workers")
    parser.add_argument(
        "--deterministic",
        action=argparse.BooleanOptionalAction,
        default=None,
        help="pin single-worker execution for bit-reproducible reports",
    )
    parser.add_argument("--plots", action="store_true", help="also write SVG figures")
    parser.add_argument("--print-config", action="store_true", help="dump the resolved config")
    sub = parser.add_subparsers(dest="command", required=True)
    sub.add_parser("prepare", help="build the representation cache")
    sub.add_parser("train", help="train the three heads once and checkpoint them")
    p_eval = sub.add_parser("evaluate", help="fuse and score a trained run on its test split")
    p_eval.add_argument("--run-dir", help="directory produced by `train`")
    p_noise = sub.add_parser("noise", help="noise-resistance sweep of a trained run")
    p_noise.add_argument("--run-dir", help="directory produced by `train`")
    sub.add_parser("repeat", help="full multi-seed protocol with summary")
    sub.add_parser("kfold", help="k-fold cross-validation variant")
    return parser


def resolve_config(args: argparse.Namespace) -> ExperimentConfig:
    config = ExperimentConfig.load(args.config) if args.config else ExperimentConfig()
    if args.dataset:
        config.data.path = args.dataset
    if args.dataset_name:
        config.data.name = args.dataset_name
    if args.smiles_col:
        config.data.smiles_col = args.smiles_col
    if args.target_col:
        config.data.target_col = args.target_col
    if args.outdir:
        config.outdir = args.outdir
    if args.run_name:
        config.run_name = args.run_name
    if args.cache_dir:
        config.cache_dir = args.cache_dir
    if args.seed is not None:
        config.seed = args.seed
    if args.epochs is not None:
        config.train.epochs = args.epochs
    if args.batch is not None:
        config.train.batch_size = args.batch
    if args.lr is not None:
        config.train.lr = args.lr
    if args.repeats is not None:
        config.n_repeats = args.repeats
    if args.base_seed is not None:
        config.base_seed = args.base_seed
    if args.methods:
        config.fusion.methods = [m.strip() for m in args.methods.split(",") if m.strip()]
    if args.noise_ratios:
        config.eval.noise_ratios = [float(x) for x in args.noise_ratios.split(",")]
    if args.workers is not None:
        config.workers = args.workers
    if args.deterministic is not None:
        config.deterministic = args.deterministic
    return config


def _run_dir(config: ExperimentConfig, dataset_name: str) -> Path:
    run = config.run_name or time.strftime("%Y%m%d-%H%M%S")
    path = Path(config.outdir) / dataset_name / run
    path.mkdir(parents=True, exist_ok=True)
    return path


def _dump_config(config: ExperimentConfig, run_dir: Path, echo: bool) -> None:
    config.save(run_dir / "config.resolved.yaml")
    if echo:
        print((run_dir / "config.resolved.yaml").read_text(encoding="utf-8"))


def _checkpoint_path(run_dir: Path) -> Path:
    return run_dir / "heads.ckpt"


def _save_heads(path: Path, heads) -> None:
    blob = {}
    for head in heads:
        for name, values in head.params.state_dict().items():
            blob[head.name_prefix + name] = values
    save_checkpoint(path, blob)


def _load_heads(path: Path, heads) -> None:
    blob = load_checkpoint(path)
    for head in heads:
        prefix = head.name_prefix
        state = {k[len(prefix):]: v for k, v in blob.items() if k.startswith(prefix)}
        head.params.load_state_dict(state)


def cmd_prepare(config: ExperimentConfig) -> int:
    dataset = load_dataset(config)
    prep = prepare_dataset(dataset, cache_dir=config.cache_dir)
    print(
        f"{dataset.name}: {len(prep)} molecules prepared "
        f"({dataset.dropped} dropped at load, {prep.dropped_parse} at parsing), "
        f"max token length {prep.max_len}"
    )
    return EXIT_OK


def cmd_train(config: ExperimentConfig, echo_config: bool) -> int:
    dataset = load_dataset(config)
    prep = prepare_dataset(dataset, cache_dir=config.cache_dir)
    run_dir = _run_dir(config, prep.name)
    _dump_config(config, run_dir, echo_config)
    plan = _plan_for(prep, config, config.seed)
    data = materialize_split(prep, plan, config)
    from .numcore import Rng

    root = Rng(config.seed)
    r_init, r_train = root.split(5)[:2]
    heads = build_heads(config, len(data.vocab), prep.max_len, r_init)
    reports = {}
    for name, head, tr_rng, train_b, val_b in zip(
        MONO_METHODS, heads, r_train.split(3), data.train.batches(), data.tuning.batches()
    ):
        _, report = train_head(
            head, train_b, data.train.y, val_b, data.tuning.y, config.train, tr_rng
        )
        reports[name] = dataclasses.asdict(report)
        log.info("%s: best val %.4f at epoch %d", name, report.best_val_loss, report.best_epoch)
    _save_heads(_checkpoint_path(run_dir), heads)
    data.vocab.save(run_dir / "vocab.tsv")
    (run_dir / "train_report.json").write_text(json.dumps(reports, indent=2), encoding="utf-8")
    print(f"checkpoints written to {run_dir}")
    return EXIT_OK


def _evaluate_like(config: ExperimentConfig, run_dir_arg: str | None, echo_config: bool, with_noise: bool) -> int:
    dataset = load_dataset(config)
    prep = prepare_dataset(dataset, cache_dir=config.cache_dir)
    if run_dir_arg:
        run_dir = Path(run_dir_arg)
    elif config.run_name:
        run_dir = Path(config.outdir) / prep.name / config.run_name
    else:
        raise ConfigError("evaluate/noise need --run-dir (or a run_name in the config)")
    ckpt = _checkpoint_path(run_dir)
    if not ckpt.exists():
        raise FileNotFoundError(f"missing checkpoint {ckpt}; run `molfuse train` first")
    _dump_config(config, run_dir, echo_config)

    plan = _plan_for(prep, config, config.seed)
    data = materialize_split(prep, plan, config)
    from .numcore import Rng

    heads = build_heads(config, len(data.vocab), prep.max_len, Rng(config.seed).split(5)[0])
    _load_heads(ckpt, heads)

    ratios = [r for r in config.eval.noise_ratios if r > 0.0] if with_noise else None
    result = run_seed(
        prep, config, config.seed, noise_ratios=ratios, heads=heads, collect_knn=config.eval.knn
    )
    stem = "noise_" if with_noise else ""
    write_metrics_csv(run_dir / f"{stem}metrics.csv", result.metrics)
    write_weights_csv(run_dir / "weights.csv", result.weights)
    if result.knn:
        write_knn_csv(run_dir / "knn.csv", result.knn)
    if config_plots(config):
        from . import plots

        if with_noise:
            plots.noise_curves_svg(result.metrics, "pearson", run_dir / "noise_pearson.svg")
            plots.noise_curves_svg(result.metrics, "rmse", run_dir / "noise_rmse.svg")
    print(f"reports written to {run_dir}")
    return EXIT_OK


def cmd_repeat(config: ExperimentConfig, echo_config: bool) -> int:
    dataset = load_dataset(config)
    prep = prepare_dataset(dataset, cache_dir=config.cache_dir)
    run_dir = _run_dir(config, prep.name)
    _dump_config(config, run_dir, echo_config)
    result = repeat_experiment(config, prep=prep, collect_knn=config.eval.knn)
    write_metrics_csv(run_dir / "metrics.csv", result.metrics)
    write_weights_csv(run_dir / "weights.csv", result.weights)
    write_summary_csv(run_dir / "summary.csv", result.summary)
    if result.knn:
        write_knn_csv(run_dir / "knn.csv", result.knn)
    if result.failures:
        (run_dir / "failures.json").write_text(json.dumps(result.failures), encoding="utf-8")
        log.warning("%d seed(s) failed; see failures.json", len(result.failures))
    if config_plots(config):
        from . import plots

        plots.pearson_box_svg(result.metrics, run_dir / "pearson_box.svg")
    print(f"reports written to {run_dir}")
    return EXIT_OK


def cmd_kfold(config: ExperimentConfig, echo_config: bool) -> int:
    dataset = load_dataset(config)
    prep = prepare_dataset(dataset, cache_dir=config.cache_dir)
    run_dir = _run_dir(config, prep.name)
    _dump_config(config, run_dir, echo_config)
    result = kfold_experiment(config, prep=prep)
    write_metrics_csv(run_dir / "kfold_metrics.csv", result.metrics)
    write_weights_csv(run_dir / "kfold_weights.csv", result.weights)
    write_summary_csv(run_dir / "kfold_summary.csv", result.summary)
    print(f"reports written to {run_dir}")
    return EXIT_OK


def config_plots(config: ExperimentConfig) -> bool:
    return getattr(config, "_plots", False)


def main(argv: list[str] | None = None) -> int:
    logging.basicConfig(level=logging.INFO, format="%(levelname)s %(name)s: %(message)s")
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        config = resolve_config(args)
        config._plots = args.plots  # transient, not part of the config schema
        if args.command == "prepare":
            return cmd_prepare(config)
        if args.command == "train":
            return cmd_train(config, args.print_config)
        if args.command == "evaluate":
            return _evaluate_like(config, args.run_dir, args.print_config, with_noise=False)
        if args.command == "noise":
            return _evaluate_like(config, args.run_dir, args.print_config, with_noise=True)
        if args.command == "repeat":
            return cmd_repeat(config, args.print_config)
        if args.command == "kfold":
            return cmd_kfold(config, args.print_config)
        parser.error(f"unknown command {args.command}")
    except _NUMERIC_ERRORS as exc:
        log.error("numeric failure: %s", exc)
        return EXIT_NUMERIC
    except _DATA_ERRORS as exc:
        log.error("data error: %s", exc)
        return EXIT_DATA
    except _CONFIG_ERRORS as exc:
        log.error("config error: %s", exc)
        return EXIT_CONFIG
    return EXIT_CONFIG


if __name__ == "__main__":
    sys.exit(main())
