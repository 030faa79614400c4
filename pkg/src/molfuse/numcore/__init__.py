"""Dense float64 tensors with reverse-mode differentiation, plus the
seeded RNG, Adam optimizer, finite-difference gradient checker, and the
binary checkpoint format shared by all encoder heads."""

from .tensor import (
    Tensor,
    no_grad,
    ShapeMismatchError,
    NonFiniteInputError,
    OddDimensionError,
    add,
    sub,
    mul,
    matmul,
    concat,
    transpose,
    relu,
    tanh,
    sigmoid,
    mean_pool_rows,
    sum_,
    mean,
    softmax,
    positional_encoding,
    layer_norm,
    embedding,
    dropout,
)
from .rng import Rng
from .optim import AdamState, adam_step, NonFiniteGradientError
from .gradcheck import gradient_check
from .checkpoint import save_checkpoint, load_checkpoint, CheckpointFormatError

__all__ = [
    "Tensor",
    "no_grad",
    "ShapeMismatchError",
    "NonFiniteInputError",
    "OddDimensionError",
    "add",
    "sub",
    "mul",
    "matmul",
    "concat",
    "transpose",
    "relu",
    "tanh",
    "sigmoid",
    "mean_pool_rows",
    "sum_",
    "mean",
    "softmax",
    "positional_encoding",
    "layer_norm",
    "embedding",
    "dropout",
    "Rng",
    "AdamState",
    "adam_step",
    "NonFiniteGradientError",
    "gradient_check",
    "save_checkpoint",
    "load_checkpoint",
    "CheckpointFormatError",
]
