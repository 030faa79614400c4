import pytest
import yaml

from molfuse.cli import EXIT_CONFIG, EXIT_DATA, EXIT_NUMERIC, EXIT_OK, main
from molfuse.config import ConfigError, ExperimentConfig

from conftest import small_model_config


def _write_config(tmp_path, csv_path, name="synth", **overrides):
    cfg = ExperimentConfig()
    cfg.data.path = str(csv_path)
    cfg.data.name = name
    cfg.model = small_model_config()
    cfg.train.epochs = 2
    cfg.train.patience = 2
    cfg.fusion.methods = ["lasso", "sgd"]
    cfg.eval.noise_ratios = [0.2]
    cfg.eval.noise_repeats = 1
    cfg.outdir = str(tmp_path / "runs")
    cfg.cache_dir = str(tmp_path / "cache")
    cfg.run_name = "testrun"
    for key, value in overrides.items():
        setattr(cfg, key, value)
    path = tmp_path / "config.yaml"
    cfg.save(path)
    return path, cfg


def test_config_round_trip(tmp_path):
    cfg = ExperimentConfig()
    cfg.data.path = "x.csv"
    cfg.model.d_model = 48
    cfg.fusion.methods = ["rf"]
    cfg.eval.noise_ratios = [0.1, 0.3]
    path = tmp_path / "c.yaml"
    cfg.save(path)
    back = ExperimentConfig.load(path)
    assert back.to_dict() == cfg.to_dict()


def test_config_rejects_unknown_keys(tmp_path):
    path = tmp_path / "c.yaml"
    path.write_text("model:\n  d_modle: 32\n", encoding="utf-8")
    with pytest.raises(ConfigError, match="d_modle"):
        ExperimentConfig.load(path)


def test_cli_flag_overrides(tmp_path, synth_csv):
    cfg_path, _ = _write_config(tmp_path, synth_csv)
    from molfuse.cli import build_parser, resolve_config

    args = build_parser().parse_args(
        ["--config", str(cfg_path), "--epochs", "7", "--seed", "5", "--methods", "rf,gb", "prepare"]
    )
    merged = resolve_config(args)
    assert merged.train.epochs == 7
    assert merged.seed == 5
    assert merged.fusion.methods == ["rf", "gb"]


def test_prepare_is_idempotent(tmp_path, synth_csv, capsys):
    cfg_path, _ = _write_config(tmp_path, synth_csv)
    assert main(["--config", str(cfg_path), "prepare"]) == EXIT_OK
    first = capsys.readouterr().out
    assert main(["--config", str(cfg_path), "prepare"]) == EXIT_OK
    second = capsys.readouterr().out
    assert first == second
    assert "240 molecules prepared" in first


def test_train_evaluate_noise_flow(tmp_path, synth_csv):
    cfg_path, cfg = _write_config(tmp_path, synth_csv)
    assert main(["--config", str(cfg_path), "train"]) == EXIT_OK
    run_dir = tmp_path / "runs" / "synth" / "testrun"
    assert (run_dir / "heads.ckpt").exists()
    assert (run_dir / "vocab.tsv").exists()
    assert (run_dir / "train_report.json").exists()
    assert (run_dir / "config.resolved.yaml").exists()

    assert main(["--config", str(cfg_path), "evaluate", "--run-dir", str(run_dir)]) == EXIT_OK
    metrics = (run_dir / "metrics.csv").read_text(encoding="utf-8").splitlines()
    assert metrics[0] == "dataset,method,seed,noise_ratio,rmse,mae,pearson,cosine"
    methods = {line.split(",")[1] for line in metrics[1:]}
    assert methods == {"transformer", "bigru", "gcn", "tri_lasso", "tri_sgd", "tri_mean"}
    weights = (run_dir / "weights.csv").read_text(encoding="utf-8").splitlines()
    assert len(weights) == 4  # header + lasso + sgd + mean
    assert (run_dir / "knn.csv").exists()

    # rerunning evaluation is byte-identical
    before = (run_dir / "metrics.csv").read_bytes()
    assert main(["--config", str(cfg_path), "evaluate", "--run-dir", str(run_dir)]) == EXIT_OK
    assert (run_dir / "metrics.csv").read_bytes() == before

    assert main(["--config", str(cfg_path), "noise", "--run-dir", str(run_dir)]) == EXIT_OK
    noise = (run_dir / "noise_metrics.csv").read_text(encoding="utf-8").splitlines()
    ratios = {line.split(",")[3] for line in noise[1:]}
    assert ratios == {"0", "0.2"}
    clean_rows = [line for line in noise[1:] if line.split(",")[3] == "0"]
    assert set(clean_rows) == set(metrics[1:])  # ratio-0 rows match evaluate exactly


def test_evaluate_without_checkpoint_is_data_error(tmp_path, synth_csv):
    cfg_path, _ = _write_config(tmp_path, synth_csv)
    rc = main(["--config", str(cfg_path), "evaluate", "--run-dir", str(tmp_path / "missing")])
    assert rc == EXIT_DATA


def test_missing_dataset_is_data_error(tmp_path):
    cfg_path, _ = _write_config(tmp_path, tmp_path / "nope.csv")
    assert main(["--config", str(cfg_path), "prepare"]) == EXIT_DATA


def test_bad_config_is_config_error(tmp_path):
    path = tmp_path / "broken.yaml"
    path.write_text("train:\n  epoochs: 5\n", encoding="utf-8")
    assert main(["--config", str(path), "prepare"]) == EXIT_CONFIG


def test_constant_target_is_numeric_error(tmp_path):
    rows = ["smiles,target"] + [f"C{'C' * i},1.5" for i in range(30)]
    csv = tmp_path / "const.csv"
    csv.write_text("\n".join(rows) + "\n", encoding="utf-8")
    cfg_path, _ = _write_config(tmp_path, csv, name="const", run_name="construn")
    cfg = ExperimentConfig.load(cfg_path)
    cfg.train.epochs = 0
    cfg.save(cfg_path)
    assert main(["--config", str(cfg_path), "train"]) == EXIT_OK
    run_dir = tmp_path / "runs" / "const" / "construn"
    assert main(["--config", str(cfg_path), "evaluate", "--run-dir", str(run_dir)]) == EXIT_NUMERIC


def test_print_config_dumps_yaml(tmp_path, synth_csv, capsys):
    cfg_path, _ = _write_config(tmp_path, synth_csv, run_name="printed")
    rc = main(["--config", str(cfg_path), "--epochs", "0", "--print-config", "train"])
    assert rc == EXIT_OK
    out = capsys.readouterr().out
    resolved = yaml.safe_load(out[: out.index("checkpoints written")])
    assert resolved["train"]["epochs"] == 0
    assert (tmp_path / "runs" / "synth" / "printed" / "config.resolved.yaml").exists()


def test_plot_helpers(tmp_path):
    from molfuse.pipeline import MetricsRow
    from molfuse.plots import noise_curves_svg, pearson_box_svg

    rows = [
        MetricsRow("d", method, seed, ratio, 1.0 + ratio, 0.8, 0.9 - ratio, 0.95)
        for method in ("transformer", "tri_sgd")
        for seed in (0, 1)
        for ratio in (0.0, 0.1, 0.5)
    ]
    noise_curves_svg(rows, "pearson", tmp_path / "curves.svg")
    pearson_box_svg(rows, tmp_path / "box.svg")
    for name in ("curves.svg", "box.svg"):
        blob = (tmp_path / name).read_bytes()
        assert b"<svg" in blob[:600]


def test_kfold_command(tmp_path, synth_csv):
    cfg_path, cfg = _write_config(tmp_path, synth_csv, run_name="folds", kfold_k=3)
    loaded = ExperimentConfig.load(cfg_path)
    loaded.train.epochs = 1
    loaded.save(cfg_path)
    assert main(["--config", str(cfg_path), "kfold"]) == EXIT_OK
    run_dir = tmp_path / "runs" / "synth" / "folds"
    lines = (run_dir / "kfold_metrics.csv").read_text(encoding="utf-8").splitlines()
    folds = {line.split(",")[2] for line in lines[1:]}
    assert folds == {"0", "1", "2"}
