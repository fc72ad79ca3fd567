"""Layer-DAG neural networks trained by backpropagation."""
from .architectures import (EMOTION_LAYERS, build_emotion_net, build_mlp, build_posture_net)
from .estimator import NeuralNetClassifier
from .graph import Cache, NetworkGraph, Node, backward, forward, loss
from .io import load_network, save_network
from .optim import DEFAULTS, OPTIMIZERS, OptimizerState, make_optimizer, optimizer_step
from .train import dataset_loss, fit

__all__ = [
    "EMOTION_LAYERS", "build_emotion_net", "build_mlp", "build_posture_net", "NeuralNetClassifier",
    "Cache", "NetworkGraph", "Node", "backward", "forward", "loss", "load_network", "save_network",
    "DEFAULTS", "OPTIMIZERS", "OptimizerState", "make_optimizer", "optimizer_step", "dataset_loss", "fit",
]
