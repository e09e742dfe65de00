"""Float MLP training, hardware-aware quantization and evaluation."""
from .mlp import Mlp, cross_entropy, loss_and_grad, softmax, train
from .quantize import QuantizedNetwork, WeightLevelSet, build_level_set, quantize
from .evaluate import ExperimentReport, ExperimentSettings, evaluate, experiment_curve

__all__ = [
    "Mlp", "cross_entropy", "loss_and_grad", "softmax", "train",
    "QuantizedNetwork", "WeightLevelSet", "build_level_set", "quantize",
    "evaluate", "experiment_curve", "ExperimentReport", "ExperimentSettings",
]
