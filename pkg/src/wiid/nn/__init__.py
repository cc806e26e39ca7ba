"""Small numpy CNN engine for the two classifier topologies."""

from .checkpoint import load_checkpoint, save_checkpoint, to_float32
from .model import (Conv, Dense, NetworkParams, NetworkSpec, backward, forward, init_params,
                    original_spec, param_count, predict, reduced_spec, spec_by_name, toy_spec)
from .optim import AdamState, adam_step
from .train import EpochMetrics, TrainConfig, TrainResult, accuracy, train

__all__ = [
    "AdamState", "Conv", "Dense", "EpochMetrics", "NetworkParams", "NetworkSpec", "TrainConfig",
    "TrainResult", "accuracy", "adam_step", "backward", "forward", "init_params", "load_checkpoint",
    "original_spec", "param_count", "predict", "reduced_spec", "save_checkpoint", "spec_by_name",
    "to_float32", "toy_spec", "train",
]
