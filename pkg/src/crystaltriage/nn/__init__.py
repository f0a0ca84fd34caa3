"""Minimal CNN building blocks with hand-written backward passes.

Everything operates on float numpy arrays in NCHW layout. Layers cache what
their backward pass needs during forward; containers (Sequential, Residual,
Concat) compose them into graphs deep enough for the architectures in the
model zoo.
"""

from .layers import (
    AvgPool2d,
    BatchNorm2d,
    Concat,
    Conv2d,
    Dense,
    Dropout,
    Flatten,
    GlobalAvgPool,
    Layer,
    MaxPool2d,
    Param,
    ReLU,
    Residual,
    Sequential,
    SubsampleZeroPad,
    assign_names,
    cross_entropy,
    iter_layers,
    softmax,
)

__all__ = [
    "AvgPool2d",
    "BatchNorm2d",
    "Concat",
    "Conv2d",
    "Dense",
    "Dropout",
    "Flatten",
    "GlobalAvgPool",
    "Layer",
    "MaxPool2d",
    "Param",
    "ReLU",
    "Residual",
    "Sequential",
    "SubsampleZeroPad",
    "assign_names",
    "cross_entropy",
    "iter_layers",
    "softmax",
]
