"""Desk-scale BiLSTM cross-attention NLI model with manual backpropagation."""
from .lstm import LSTMWeights, lstm_step, sigmoid
from .network import (
    PRESETS,
    TENSOR_NAMES,
    AttentionResult,
    Batch,
    EncodedSentence,
    ModelConfig,
    ModelParams,
    Vocab,
    attend,
    batch_loss,
    encode,
    forward,
    gradients,
    init_params,
    loss,
    loss_and_gradients,
    make_batch,
    predict,
)
from .serialize import load_model, save_model
from .synthetic import synthetic_task
from .train import EpochLog, TrainConfig, accuracy, extract_attention, macro_f1, train

__all__ = [
    "PRESETS", "TENSOR_NAMES", "AttentionResult", "Batch", "EncodedSentence", "EpochLog",
    "LSTMWeights", "ModelConfig", "ModelParams", "TrainConfig", "Vocab", "accuracy", "attend",
    "batch_loss", "encode", "extract_attention", "forward", "gradients", "init_params",
    "load_model", "loss", "loss_and_gradients", "lstm_step", "macro_f1", "make_batch",
    "predict", "save_model", "sigmoid", "synthetic_task", "train",
]
