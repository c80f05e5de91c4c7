"""Small numpy deep-learning kernel set (channels-last)."""

from .tensor import Tensor
from .layers import BasicBlock, BatchNorm2d, Conv2d, GlobalAvgPool, Linear, Module, ReLU
from .resnet import MicroResNet, MicroResNetConfig
from .optim import SGD, Adam, OptimizerState, adam_step, sgd_step, step_scheduler
from .gradcheck import grad_check
from .checkpoint import load_checkpoint, save_checkpoint

__all__ = [
    "Tensor", "BasicBlock", "BatchNorm2d", "Conv2d", "GlobalAvgPool", "Linear", "Module", "ReLU",
    "MicroResNet", "MicroResNetConfig", "SGD", "Adam", "OptimizerState", "adam_step", "sgd_step",
    "step_scheduler", "grad_check", "load_checkpoint", "save_checkpoint",
]
