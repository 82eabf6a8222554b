"""Linear-chain sequence labeling: exact inference and six trainers."""

from ._seqlab import (  # noqa: F401
    Dataset,
    FormatError,
    InvalidInputError,
    TrainingDiverged,
    evaluate,
    flip_labels,
    generate_synthetic,
    hamming_loss,
    load_conll,
    load_conll_frozen,
    load_model,
    log_partition,
    save_model,
    train,
    viterbi,
)

__all__ = [
    "Dataset",
    "FormatError",
    "InvalidInputError",
    "TrainingDiverged",
    "evaluate",
    "flip_labels",
    "generate_synthetic",
    "hamming_loss",
    "load_conll",
    "load_conll_frozen",
    "load_model",
    "log_partition",
    "save_model",
    "train",
    "viterbi",
]
