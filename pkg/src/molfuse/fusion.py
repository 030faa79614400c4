"""Late-fusion weight assignment over the per-modality scalar outputs.

A trained pipeline produces an m x 3 matrix of predictions (columns
fixed as transformer, bigru, gcn). Five fitters assign combination
weights (w1, w2, w3) on the tuning split only: LASSO and Elastic Net by
cyclic coordinate descent with soft-thresholding, Random Forest and
Gradient Boosting by normalized impurity-decrease importances, and
minibatch SGD on the squared loss. The fused prediction is the plain
weighted sum w1*o1 + w2*o2 + w3*o3 with no intercept.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .numcore import Rng

__all__ = [
    "ModalOutputs",
    "FusionWeights",
    "RfConfig",
    "GbConfig",
    "SgdConfig",
    "collect_outputs",
    "fit_lasso",
    "fit_elastic",
    "fit_rf",
    "fit_gb",
    "fit_sgd",
    "fixed_mean_weights",
    "fused_predict",
    "select_lambda",
    "DegenerateColumnError",
    "TooFewSamplesError",
    "InvalidConfigError",
    "NonFiniteLossError",
    "SplitDisciplineError",
]

COLUMN_ORDER = ("transformer", "bigru", "gcn")


class DegenerateColumnError(ValueError):
    pass


class TooFewSamplesError(ValueError):
    pass


class InvalidConfigError(ValueError):
    pass


class NonFiniteLossError(FloatingPointError):
    pass


class SplitDisciplineError(ValueError):
    pass


@dataclass(frozen=True)
class ModalOutputs:
    """m x 3 prediction matrix tagged with the split it came from."""

    matrix: np.ndarray
    split: str = "tuning"

    def __post_init__(self):
        m = np.asarray(self.matrix, dtype=np.float64)
        if m.ndim != 2 or m.shape[1] != len(COLUMN_ORDER):
            raise ValueError(f"expected an m x 3 matrix, got shape {m.shape}")
        object.__setattr__(self, "matrix", m)


@dataclass(frozen=True)
class FusionWeights:
    w: tuple[float, float, float]
    method: str

    def __post_init__(self):
        if not np.isfinite(self.w).all():
            raise ValueError(f"non-finite fusion weights {self.w}")


@dataclass
class RfConfig:
    n_trees: int = 100
    max_depth: int = 6
    n_candidates: int = 2  # features tried per split, out of 3
    min_samples_split: int = 2
    seed: int = 0


@dataclass
class GbConfig:
    n_rounds: int = 200
    shrinkage: float = 0.05
    max_depth: int = 3
    seed: int = 0


@dataclass
class SgdConfig:
    lr: float = 1e-2
    epochs: int = 2000
    batch_size: int = 16


def collect_outputs(heads, data, split: str = "tuning") -> ModalOutputs:
    """Stack the three heads' predictions over a split into columns.

    ``heads`` is (transformer, bigru, gcn); ``data`` the matching
    (SeqBatch, FpBatch, GraphBatch) for one split.
    """
    cols = [head.predict(batch)[0] for head, batch in zip(heads, data)]
    return ModalOutputs(matrix=np.column_stack(cols), split=split)


def _tuning_matrix(outputs: ModalOutputs | np.ndarray) -> np.ndarray:
    if isinstance(outputs, ModalOutputs):
        if outputs.split != "tuning":
            raise SplitDisciplineError(
                f"fusion weights may only be fitted on the tuning split, got {outputs.split!r}"
            )
        return outputs.matrix
    return np.asarray(outputs, dtype=np.float64)


def _soft_threshold(x: float, t: float) -> float:
    if x > t:
        return x - t
    if x < -t:
        return x + t
    return 0.0


def _coordinate_descent(
    o: np.ndarray, y: np.ndarray, lam: float, alpha: float, tol: float = 1e-10, max_sweeps: int = 10_000
) -> np.ndarray:
    m, k = o.shape
    if lam == 0.0 and (o.var(axis=0) == 0.0).any():
        raise DegenerateColumnError("zero-variance column with no regularization")
    col_scale = (o * o).sum(axis=0) / m
    w = np.zeros(k)
    residual = y.astype(np.float64).copy()  # residual = y - O @ w
    l1 = lam * alpha
    l2 = lam * (1.0 - alpha)
    for _ in range(max_sweeps):
        max_delta = 0.0
        for j in range(k):
            if col_scale[j] + l2 == 0.0:
                continue
            rho = float(o[:, j] @ residual) / m + col_scale[j] * w[j]
            new_wj = _soft_threshold(rho, l1) / (col_scale[j] + l2)
            delta = new_wj - w[j]
            if delta != 0.0:
                residual -= delta * o[:, j]
                w[j] = new_wj
                max_delta = max(max_delta, abs(delta))
        if max_delta < tol:
            break
    return w


def fit_lasso(outputs: ModalOutputs | np.ndarray, y: np.ndarray, lam: float) -> FusionWeights:
    """(1/2m)||y - Ow||^2 + lam*||w||_1 by cyclic coordinate descent, no intercept."""
    if lam < 0:
        raise InvalidConfigError("lam must be >= 0")
    o = _tuning_matrix(outputs)
    _require_samples(o, 3)
    w = _coordinate_descent(o, np.asarray(y, dtype=np.float64), lam, alpha=1.0)
    return FusionWeights(w=tuple(w), method="lasso")


def fit_elastic(
    outputs: ModalOutputs | np.ndarray, y: np.ndarray, lam: float, alpha: float
) -> FusionWeights:
    """(1/2m)||y - Ow||^2 + lam*(alpha*||w||_1 + (1-alpha)/2*||w||_2^2)."""
    if not 0.0 <= alpha <= 1.0:
        raise InvalidConfigError("alpha must lie in [0, 1]")
    if lam < 0:
        raise InvalidConfigError("lam must be >= 0")
    o = _tuning_matrix(outputs)
    _require_samples(o, 3)
    w = _coordinate_descent(o, np.asarray(y, dtype=np.float64), lam, alpha=alpha)
    return FusionWeights(w=tuple(w), method="elastic")


def _require_samples(o: np.ndarray, minimum: int) -> None:
    if o.shape[0] < minimum:
        raise TooFewSamplesError(f"need at least {minimum} samples, got {o.shape[0]}")


# ---------------------------------------------------------------------------
# regression trees (shared by the forest and the booster)


class _Tree:
    __slots__ = ("feature", "threshold", "left", "right", "value")

    def __init__(self, value: float):
        self.feature = -1
        self.threshold = 0.0
        self.left: "_Tree | None" = None
        self.right: "_Tree | None" = None
        self.value = value

    def predict_one(self, row: np.ndarray) -> float:
        node = self
        while node.left is not None:
            node = node.left if row[node.feature] <= node.threshold else node.right
        return node.value

    def predict(self, x: np.ndarray) -> np.ndarray:
        return np.array([self.predict_one(row) for row in x])


def _sse(total: float, total_sq: float, n: int) -> float:
    return total_sq - total * total / n


def _grow_tree(
    x: np.ndarray,
    y: np.ndarray,
    idx: np.ndarray,
    depth: int,
    max_depth: int,
    min_samples_split: int,
    n_candidates: int,
    rng: Rng,
    importances: np.ndarray,
) -> _Tree:
    node_y = y[idx]
    n = idx.size
    node = _Tree(value=float(node_y.mean()))
    node_sse = _sse(float(node_y.sum()), float((node_y * node_y).sum()), n)
    if depth >= max_depth or n < min_samples_split or node_sse <= 1e-12:
        return node

    # candidate features in shuffled order: ties between equally good
    # splits break uniformly instead of always favoring low indices
    order = rng.shuffle_indices(x.shape[1])[:n_candidates]
    best = None  # (reduction, feature, threshold, sorted_idx, split_pos)
    for f in order:
        values = x[idx, f]
        sort = np.argsort(values, kind="stable")
        xs = values[sort]
        ys = node_y[sort]
        csum = np.cumsum(ys)
        csq = np.cumsum(ys * ys)
        total, total_sq = csum[-1], csq[-1]
        for k in range(1, n):
            if xs[k] == xs[k - 1]:
                continue
            left_sse = _sse(csum[k - 1], csq[k - 1], k)
            right_sse = _sse(total - csum[k - 1], total_sq - csq[k - 1], n - k)
            reduction = node_sse - left_sse - right_sse
            if best is None or reduction > best[0]:
                best = (reduction, int(f), 0.5 * (xs[k] + xs[k - 1]), sort, k)
    if best is None or best[0] <= 0.0:
        return node

    reduction, feature, threshold, sort, k = best
    importances[feature] += reduction
    node.feature = feature
    node.threshold = threshold
    left_idx = idx[sort[:k]]
    right_idx = idx[sort[k:]]
    node.left = _grow_tree(
        x, y, left_idx, depth + 1, max_depth, min_samples_split, n_candidates, rng, importances
    )
    node.right = _grow_tree(
        x, y, right_idx, depth + 1, max_depth, min_samples_split, n_candidates, rng, importances
    )
    return node


def _normalized(importances: np.ndarray) -> tuple[float, float, float]:
    total = importances.sum()
    if total <= 0.0:
        return (1.0 / 3.0,) * 3
    return tuple(importances / total)


def fit_rf(outputs: ModalOutputs | np.ndarray, y: np.ndarray, config: RfConfig | None = None) -> FusionWeights:
    """Bootstrap forest with per-split feature subsampling; weights are
    total impurity decrease per feature, normalized to sum 1."""
    config = config or RfConfig()
    o = _tuning_matrix(outputs)
    _require_samples(o, 10)
    if config.n_trees <= 0:
        raise InvalidConfigError("n_trees must be positive")
    y = np.asarray(y, dtype=np.float64)
    rng = Rng(config.seed)
    m = o.shape[0]
    importances = np.zeros(o.shape[1])
    for _ in range(config.n_trees):
        boot = np.asarray(rng.integers(0, m, m), dtype=np.int64)
        _grow_tree(
            o, y, boot, 0, config.max_depth, config.min_samples_split,
            config.n_candidates, rng, importances,
        )
    return FusionWeights(w=_normalized(importances), method="rf")


def fit_gb(outputs: ModalOutputs | np.ndarray, y: np.ndarray, config: GbConfig | None = None) -> FusionWeights:
    """Gradient-boosted depth-limited trees on squared loss; weights as fit_rf."""
    config = config or GbConfig()
    if config.n_rounds <= 0:
        raise InvalidConfigError("n_rounds must be positive")
    o = _tuning_matrix(outputs)
    _require_samples(o, 10)
    y = np.asarray(y, dtype=np.float64)
    rng = Rng(config.seed)
    m, k = o.shape
    importances = np.zeros(k)
    idx = np.arange(m, dtype=np.int64)
    current = np.full(m, y.mean())
    for _ in range(config.n_rounds):
        residual = y - current
        tree = _grow_tree(o, residual, idx, 0, config.max_depth, 2, k, rng, importances)
        current += config.shrinkage * tree.predict(o)
    return FusionWeights(w=_normalized(importances), method="gb")


def fit_sgd(
    outputs: ModalOutputs | np.ndarray, y: np.ndarray, config: SgdConfig | None = None, rng: Rng | None = None
) -> FusionWeights:
    """Minibatch SGD on (1/m)||y - Ow||^2 from w = (1/3, 1/3, 1/3)."""
    config = config or SgdConfig()
    rng = rng or Rng(0)
    o = _tuning_matrix(outputs)
    _require_samples(o, 3)
    y = np.asarray(y, dtype=np.float64)
    m = o.shape[0]
    w = np.full(o.shape[1], 1.0 / 3.0)
    for _ in range(config.epochs):
        order = rng.shuffle_indices(m)
        for start in range(0, m, config.batch_size):
            rows = order[start : start + config.batch_size]
            ob, yb = o[rows], y[rows]
            grad = 2.0 / rows.size * (ob.T @ (ob @ w - yb))
            w -= config.lr * grad
        if not np.isfinite(w).all():
            raise NonFiniteLossError("SGD weights diverged to non-finite values")
    return FusionWeights(w=tuple(w), method="sgd")


def fixed_mean_weights() -> FusionWeights:
    """Average-aggregation reference: equal thirds."""
    return FusionWeights(w=(1.0 / 3.0, 1.0 / 3.0, 1.0 / 3.0), method="mean")


def fused_predict(row, weights: FusionWeights) -> float:
    """Weighted sum w1*o1 + w2*o2 + w3*o3."""
    row = np.asarray(row, dtype=np.float64)
    if not np.isfinite(row).all():
        raise ValueError(f"non-finite modal outputs {row}")
    return float(row @ np.asarray(weights.w))


def select_lambda(
    o: np.ndarray, y: np.ndarray, alpha: float, rng: Rng, grid=(1e-3, 1e-2, 1e-1)
) -> float:
    """Pick lam from a small grid by an 80/20 holdout inside the tuning data."""
    m = o.shape[0]
    order = rng.shuffle_indices(m)
    cut = max(1, m // 5)
    hold, fit = order[:cut], order[cut:]
    best_lam, best_err = grid[0], np.inf
    for lam in grid:
        w = _coordinate_descent(o[fit], y[fit], lam, alpha)
        err = float(np.mean((y[hold] - o[hold] @ w) ** 2))
        if err < best_err:
            best_lam, best_err = lam, err
    return best_lam
