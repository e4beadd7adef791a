"""Learned mutant selector: abstraction, sequences, autoencoder, forest."""
from .abstraction import AbstractionMap, abstract_code
from .autoencoder import (
    AutoencoderModel, embed, embed_many, reconstruct, reconstruction_accuracy,
    train_autoencoder,
)
from .forest import ForestModel, predict, predict_many, train_forest
from .metrics import PredictionCounts, metrics
from .sequences import (
    BOS, MSP, MST, UNK, SelectorConfig, StatementNotFound, TokenSequence, Vocab,
    annotate_and_window,
)

__all__ = [
    "AbstractionMap", "abstract_code", "AutoencoderModel", "embed", "embed_many",
    "reconstruct", "reconstruction_accuracy", "train_autoencoder", "ForestModel",
    "predict", "predict_many", "train_forest", "PredictionCounts", "metrics",
    "BOS", "MSP", "MST", "UNK", "SelectorConfig", "StatementNotFound",
    "TokenSequence", "Vocab", "annotate_and_window",
]
