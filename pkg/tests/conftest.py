import numpy as np
import pytest

from molfuse.chemlex import tokenize
from molfuse.config import ExperimentConfig
from molfuse.encoders import ModelConfig
from molfuse.numcore import Rng

# fragments compose into valid SMILES by plain concatenation
FRAGMENTS = [
    "C", "CC", "CCC", "C(C)C", "CO", "CN", "CCl", "C=C", "C#N", "C(=O)O",
    "c1ccccc1", "c1ccncc1", "C1CCCCC1", "CBr", "COC", "C(F)(F)F", "CS", "C=O",
]


def synth_smiles(rng: Rng, max_frags: int = 5) -> str:
    k = int(rng.integers(1, max_frags + 1))
    return "".join(FRAGMENTS[int(rng.integers(0, len(FRAGMENTS)))] for _ in range(k))


def synth_target(smiles: str, rng: Rng) -> float:
    """Structure-determined property: composition counts plus mild noise."""
    toks = tokenize(smiles)
    n_arom = sum(1 for t in toks if t in "cnosp")
    n_o = sum(1 for t in toks if t == "O")
    n_n = sum(1 for t in toks if t == "N")
    n_hal = sum(1 for t in toks if t in ("Cl", "Br", "F"))
    n_atoms = sum(1 for t in toks if t[0].isalpha() or t.startswith("["))
    n_ring = sum(1 for t in toks if t.isdigit()) / 2
    return (
        0.35 * n_arom - 0.9 * n_o - 0.6 * n_n - 1.1 * n_hal - 0.12 * n_atoms + 0.8 * n_ring
        + float(rng.normal(0, 0.1))
    )


def write_synth_csv(path, n: int = 240, seed: int = 777) -> None:
    rng = Rng(seed)
    rows = ["id,smiles,target"]
    for i in range(n):
        s = synth_smiles(rng)
        rows.append(f"m{i},{s},{synth_target(s, rng):.6f}")
    path.write_text("\n".join(rows) + "\n", encoding="utf-8")


@pytest.fixture(scope="session")
def synth_csv(tmp_path_factory):
    path = tmp_path_factory.mktemp("data") / "synth.csv"
    write_synth_csv(path)
    return path


def small_model_config() -> ModelConfig:
    return ModelConfig(
        d_model=32, n_heads=2, d_k=16, n_layers=2, ff_mult=2,
        gru_input=16, gru_hidden=32, gru_layers=2,
        gcn_hidden1=48, gcn_hidden2=64, fc_hidden=32, dropout=0.1,
    )


def small_experiment_config(csv_path) -> ExperimentConfig:
    cfg = ExperimentConfig()
    cfg.data.path = str(csv_path)
    cfg.model = small_model_config()
    cfg.train.epochs = 30
    cfg.train.patience = 12
    cfg.eval.noise_repeats = 3
    return cfg


@pytest.fixture()
def tiny_model_config() -> ModelConfig:
    return ModelConfig(
        d_model=16, n_heads=2, d_k=8, n_layers=2, ff_mult=2,
        gru_input=6, gru_hidden=8, gru_layers=2,
        gcn_hidden1=12, gcn_hidden2=16, fc_hidden=6, dropout=0.0,
    )


@pytest.fixture()
def rng() -> Rng:
    return Rng(0)


FOUR_CHUNKS = np.array(
    [
        [1, 0, 1, 0, 1, 0, 1, 0, 0, 1, 1, 0, 0, 1, 0, 1],
        [0, 1, 1, 1, 0, 0, 1, 0, 1, 0, 0, 1, 1, 0, 1, 0],
        [1, 1, 0, 0, 1, 1, 0, 1, 0, 0, 1, 0, 1, 1, 0, 0],
        [0, 0, 0, 1, 1, 0, 1, 1, 1, 1, 0, 0, 0, 1, 1, 1],
    ],
    dtype=float,
)[None]
