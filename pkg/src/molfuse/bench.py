"""Dataset ingestion, splits, noise injection, metrics, and similarity diagnostics.

The splitting protocol: 10% of the data (floor) is held out as the test
set; 20% (floor) of the remainder becomes the tuning set used only for
fitting fusion weights; the rest trains the encoder heads. All
randomness flows through the seeded Fisher-Yates shuffle.
"""

from __future__ import annotations

import csv
import math
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from .chemlex import EncodedSeq, LexError, tokenize
from .ecfp import Fingerprint
from .numcore import Rng

__all__ = [
    "Record",
    "Dataset",
    "SplitPlan",
    "load_csv",
    "make_split",
    "make_kfold",
    "noisy_encoded",
    "noisy_fingerprint",
    "noisy_features",
    "rmse",
    "mae",
    "pearson",
    "cosine",
    "knn_diagnostics",
    "MissingColumnError",
    "EmptyDatasetError",
    "TooSmallError",
    "ZeroVarianceError",
    "ZeroVectorError",
    "EmptyTrainSetError",
]


class MissingColumnError(KeyError):
    pass


class EmptyDatasetError(ValueError):
    pass


class TooSmallError(ValueError):
    pass


class ZeroVarianceError(ValueError):
    pass


class ZeroVectorError(ValueError):
    pass


class EmptyTrainSetError(ValueError):
    pass


@dataclass(frozen=True)
class Record:
    id: str
    smiles: str
    target: float


@dataclass
class Dataset:
    name: str
    records: list[Record] = field(default_factory=list)
    dropped: int = 0

    def __len__(self):
        return len(self.records)

    @property
    def smiles(self) -> list[str]:
        return [r.smiles for r in self.records]

    @property
    def targets(self) -> np.ndarray:
        return np.array([r.target for r in self.records], dtype=np.float64)


def load_csv(
    path: str | Path,
    smiles_col: str,
    target_col: str,
    id_col: str | None = None,
    name: str | None = None,
) -> Dataset:
    """Read a header CSV; rows with unlexable SMILES or non-finite targets
    are dropped and counted rather than failing the load."""
    path = Path(path)
    ds = Dataset(name=name or path.stem)
    with open(path, newline="", encoding="utf-8") as fh:
        reader = csv.DictReader(fh)
        header = reader.fieldnames or []
        for col in [smiles_col, target_col] + ([id_col] if id_col else []):
            if col not in header:
                raise MissingColumnError(f"column {col!r} not in {header}")
        seen_ids = set()
        for row_no, row in enumerate(reader):
            smiles = (row[smiles_col] or "").strip()
            raw_target = (row[target_col] or "").strip()
            rec_id = (row[id_col].strip() if id_col else str(row_no))
            try:
                target = float(raw_target)
                if not math.isfinite(target):
                    raise ValueError
                tokenize(smiles)
            except (ValueError, LexError):
                ds.dropped += 1
                continue
            if rec_id in seen_ids:
                raise ValueError(f"duplicate id {rec_id!r} in {path}")
            seen_ids.add(rec_id)
            ds.records.append(Record(id=rec_id, smiles=smiles, target=target))
    if not ds.records:
        raise EmptyDatasetError(f"no usable rows in {path}")
    return ds


@dataclass(frozen=True)
class SplitPlan:
    seed: int
    train: np.ndarray
    tuning: np.ndarray
    test: np.ndarray

    def sizes(self) -> tuple[int, int, int]:
        return len(self.train), len(self.tuning), len(self.test)


def make_split(
    n: int, seed: int, test_ratio: float = 0.1, tuning_ratio: float = 0.2
) -> SplitPlan:
    """Shuffled partition: test = floor(test_ratio*n), then tuning =
    floor(tuning_ratio * remainder), train = rest."""
    if n < 10:
        raise TooSmallError(f"need at least 10 records, got {n}")
    order = Rng(seed).shuffle_indices(n)
    n_test = int(test_ratio * n)
    n_tuning = int(tuning_ratio * (n - n_test))
    test = order[:n_test]
    tuning = order[n_test : n_test + n_tuning]
    train = order[n_test + n_tuning :]
    return SplitPlan(seed=seed, train=np.sort(train), tuning=np.sort(tuning), test=np.sort(test))


def fixed_test_split(n: int, seed: int, test: np.ndarray, tuning_ratio: float = 0.2) -> SplitPlan:
    """Split honoring an externally provided test index list (Llinas2020-style)."""
    test = np.asarray(sorted(set(int(i) for i in test)), dtype=np.int64)
    if test.size and (test.min() < 0 or test.max() >= n):
        raise ValueError("test indices out of range")
    rest = np.setdiff1d(np.arange(n), test)
    order = rest[Rng(seed).shuffle_indices(rest.size)]
    n_tuning = int(tuning_ratio * rest.size)
    return SplitPlan(
        seed=seed,
        train=np.sort(order[n_tuning:]),
        tuning=np.sort(order[:n_tuning]),
        test=test,
    )


def make_kfold(n: int, k: int = 5, seed: int = 0, tuning_ratio: float = 0.2) -> list[SplitPlan]:
    """k disjoint test folds covering all indices; tuning carved from the rest."""
    if n < k:
        raise TooSmallError(f"need at least k={k} records, got {n}")
    order = Rng(seed).shuffle_indices(n)
    base, extra = divmod(n, k)
    plans = []
    start = 0
    for fold in range(k):
        size = base + (1 if fold < extra else 0)
        test = order[start : start + size]
        rest = np.concatenate([order[:start], order[start + size :]])
        n_tuning = int(tuning_ratio * rest.size)
        plans.append(
            SplitPlan(
                seed=seed,
                train=np.sort(rest[n_tuning:]),
                tuning=np.sort(rest[:n_tuning]),
                test=np.sort(test),
            )
        )
        start += size
    return plans


# ---------------------------------------------------------------------------
# noise injection (robustness probe on already-prepared model inputs)


def noisy_encoded(seq: EncodedSeq, ratio: float, vocab_size: int, rng: Rng) -> EncodedSeq:
    """Each non-padding position is replaced with probability ``ratio`` by a
    uniform draw from 1..vocab_size."""
    _check_ratio(ratio)
    ids = seq.ids.copy()
    if seq.true_len and ratio > 0.0:
        hit = rng.uniform(0.0, 1.0, seq.true_len) < ratio
        draws = rng.integers(1, vocab_size + 1, seq.true_len)
        ids[: seq.true_len] = np.where(hit, draws, ids[: seq.true_len])
    return EncodedSeq(ids=ids, true_len=seq.true_len)


def noisy_fingerprint(fp: Fingerprint, ratio: float, rng: Rng) -> Fingerprint:
    """Each bit is re-randomized to 0/1 with probability ``ratio``."""
    _check_ratio(ratio)
    bits = fp.bits.copy()
    if ratio > 0.0:
        hit = rng.uniform(0.0, 1.0, fp.nbits) < ratio
        draws = rng.integers(0, 2, fp.nbits).astype(np.uint8)
        bits = np.where(hit, draws, bits).astype(np.uint8)
    return Fingerprint(bits=bits, radius=fp.radius)


def noisy_features(x: np.ndarray, ratio: float, rng: Rng) -> np.ndarray:
    """Each feature entry is re-randomized to 0/1 with probability ``ratio``."""
    _check_ratio(ratio)
    if ratio <= 0.0:
        return x.copy()
    hit = rng.uniform(0.0, 1.0, x.shape) < ratio
    draws = rng.integers(0, 2, x.shape).astype(np.float64)
    return np.where(hit, draws, x)


def _check_ratio(ratio: float) -> None:
    if not 0.0 <= ratio <= 1.0:
        raise ValueError(f"noise ratio must lie in [0, 1], got {ratio}")


# ---------------------------------------------------------------------------
# metrics


def _paired(y, y_hat) -> tuple[np.ndarray, np.ndarray]:
    y = np.asarray(y, dtype=np.float64)
    y_hat = np.asarray(y_hat, dtype=np.float64)
    if y.shape != y_hat.shape or y.size == 0:
        raise ValueError(f"need equal nonzero lengths, got {y.shape} and {y_hat.shape}")
    return y, y_hat


def rmse(y, y_hat) -> float:
    y, y_hat = _paired(y, y_hat)
    return float(np.sqrt(np.mean((y - y_hat) ** 2)))


def mae(y, y_hat) -> float:
    y, y_hat = _paired(y, y_hat)
    return float(np.mean(np.abs(y - y_hat)))


def pearson(y, y_hat) -> float:
    y, y_hat = _paired(y, y_hat)
    dy = y - y.mean()
    dh = y_hat - y_hat.mean()
    denom = np.sqrt((dy * dy).sum() * (dh * dh).sum())
    if denom == 0.0:
        raise ZeroVarianceError("pearson undefined for zero-variance input")
    return float(np.clip((dy * dh).sum() / denom, -1.0, 1.0))


def cosine(y, y_hat) -> float:
    y, y_hat = _paired(y, y_hat)
    denom = np.linalg.norm(y) * np.linalg.norm(y_hat)
    if denom == 0.0:
        raise ZeroVectorError("cosine undefined for a zero vector")
    return float(np.clip(y @ y_hat / denom, -1.0, 1.0))


# ---------------------------------------------------------------------------
# chemical-space diagnostics


def _bit_matrix(reps) -> np.ndarray:
    if isinstance(reps, np.ndarray):
        return reps.astype(np.float64)
    return np.stack([fp.bits for fp in reps]).astype(np.float64)


def knn_diagnostics(
    train_reps, test_reps, metric: str, k: int = 5
) -> tuple[np.ndarray, np.ndarray]:
    """Per test item: max similarity to the training set and the mean
    distance to its k nearest training items.

    ``metric="fingerprint"``: Tanimoto similarity / Hamming distance over
    bit vectors. ``metric="vector"``: cosine similarity / Euclidean
    distance over real vectors. With fewer than k training items the
    mean runs over all of them.
    """
    if metric == "fingerprint":
        train = _bit_matrix(train_reps)
        test = _bit_matrix(test_reps)
        if train.shape[0] == 0:
            raise EmptyTrainSetError("empty training set")
        inter = test @ train.T
        pop_test = test.sum(axis=1, keepdims=True)
        pop_train = train.sum(axis=1, keepdims=True).T
        union = pop_test + pop_train - inter
        with np.errstate(invalid="ignore"):
            sim = np.where(union > 0, inter / union, 1.0)
        dist = pop_test + pop_train - 2.0 * inter
    elif metric == "vector":
        train = np.asarray(train_reps, dtype=np.float64)
        test = np.asarray(test_reps, dtype=np.float64)
        if train.shape[0] == 0:
            raise EmptyTrainSetError("empty training set")
        tn = np.linalg.norm(train, axis=1)
        sn = np.linalg.norm(test, axis=1)
        denom = np.outer(sn, tn)
        prod = test @ train.T
        with np.errstate(invalid="ignore"):
            sim = np.where(denom > 0, prod / denom, 1.0)
        sq = (test * test).sum(axis=1, keepdims=True) + (train * train).sum(axis=1) - 2.0 * prod
        dist = np.sqrt(np.maximum(sq, 0.0))
    else:
        raise ValueError(f"unknown metric {metric!r}")

    k_eff = min(k, train.shape[0])
    max_sim = sim.max(axis=1)
    nearest = np.sort(dist, axis=1)[:, :k_eff]
    return max_sim, nearest.mean(axis=1)
