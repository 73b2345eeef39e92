from .adam import Adam, AdamState, adam_update
from .functional import cross_entropy, one_hot, relu, relu_grad, sigmoid, softmax, softmax_ce_grad
from .layers import LSTM, BatchNorm, Conv2D, Dense, Flatten, Layer, MaxPool2, ReLU
from .models import (
    INPUT_SHAPE,
    MODEL_IDS,
    NUM_CLASSES,
    LayerSpec,
    Model,
    ModelBundle,
    ModelSpec,
    build_model,
    load_model,
    model_spec,
    predict,
    save_model,
)
from .train import ConfusionMatrix, EpochStats, TrainConfig, TrainReport, evaluate, train

__all__ = [
    "Adam",
    "AdamState",
    "adam_update",
    "BatchNorm",
    "ConfusionMatrix",
    "Conv2D",
    "Dense",
    "EpochStats",
    "Flatten",
    "INPUT_SHAPE",
    "Layer",
    "LayerSpec",
    "LSTM",
    "MaxPool2",
    "MODEL_IDS",
    "Model",
    "ModelBundle",
    "ModelSpec",
    "NUM_CLASSES",
    "ReLU",
    "TrainConfig",
    "TrainReport",
    "build_model",
    "cross_entropy",
    "evaluate",
    "load_model",
    "model_spec",
    "one_hot",
    "predict",
    "relu",
    "relu_grad",
    "save_model",
    "sigmoid",
    "softmax",
    "softmax_ce_grad",
    "train",
]
