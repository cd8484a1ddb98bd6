"""Tensor arithmetic, differentiable primitives, and reverse-mode autodiff."""

from gdnet.numcore.rng import SeededRng
from gdnet.numcore.tensor import Tensor, Parameter
from gdnet.numcore import ops
from gdnet.numcore.module import Module, ModuleList, Linear, Conv2d, LayerNorm
from gdnet.numcore.gradcheck import finite_diff_grad, gradcheck
from gdnet.numcore.imageops import bicubic_resize, gaussian_kernel1d, gaussian_blur

__all__ = [
    "SeededRng",
    "Tensor",
    "Parameter",
    "ops",
    "Module",
    "ModuleList",
    "Linear",
    "Conv2d",
    "LayerNorm",
    "finite_diff_grad",
    "gradcheck",
    "bicubic_resize",
    "gaussian_kernel1d",
    "gaussian_blur",
]
