"""Module tree: parameter registration, naming, and basic layers."""

from __future__ import annotations

import numpy as np

from gdnet.numcore import ops
from gdnet.numcore.rng import SeededRng
from gdnet.numcore.tensor import Parameter, Tensor


def trunc_normal(rng: SeededRng, shape, std: float = 0.02) -> np.ndarray:
    """Normal(0, std) resampled until every draw lies within 2 std."""
    out = rng.normal(0.0, std, size=shape)
    bad = np.abs(out) > 2 * std
    while bad.any():
        out[bad] = rng.normal(0.0, std, size=int(bad.sum()))
        bad = np.abs(out) > 2 * std
    return out


def fanin_normal(rng: SeededRng, shape) -> np.ndarray:
    """He-style init: std = sqrt(2 / fan_in) with fan_in over all but dim 0."""
    fan_in = int(np.prod(shape[1:]))
    return rng.normal(0.0, np.sqrt(2.0 / fan_in), size=shape)


class Module:
    """Base class tracking Parameters and child Modules in insertion order."""

    def __init__(self):
        object.__setattr__(self, "_params", {})
        object.__setattr__(self, "_children", {})

    def __setattr__(self, name, value):
        if isinstance(value, Parameter):
            self._params[name] = value
        elif isinstance(value, Module):
            self._children[name] = value
        object.__setattr__(self, name, value)

    def named_parameters(self, prefix: str = ""):
        for name, p in self._params.items():
            yield prefix + name, p
        for name, child in self._children.items():
            yield from child.named_parameters(prefix + name + ".")

    def parameters(self):
        for _, p in self.named_parameters():
            yield p

    def bind_names(self, prefix: str = ""):
        """Stamp each Parameter with its dotted path from this root."""
        for name, p in self.named_parameters(prefix):
            p.name = name
        return self

    def zero_grad(self):
        for p in self.parameters():
            p.grad = None

    def to_dtype(self, dtype):
        """Cast all parameters in place (f64 for verification suites)."""
        for p in self.parameters():
            p.data = p.data.astype(dtype)
            p.grad = None
        return self

    def param_count(self) -> int:
        return sum(p.data.size for p in self.parameters())


class ModuleList(Module):
    def __init__(self, modules=()):
        super().__init__()
        self._items = []
        for m in modules:
            self.append(m)

    def append(self, module: Module):
        self._children[str(len(self._items))] = module
        self._items.append(module)

    def __iter__(self):
        return iter(self._items)

    def __len__(self):
        return len(self._items)

    def __getitem__(self, i):
        return self._items[i]


class Linear(Module):
    """Affine map on the last dim: y = x W + b."""

    def __init__(self, in_dim: int, out_dim: int, rng: SeededRng, bias: bool = True,
                 dtype=np.float32):
        super().__init__()
        self.w = Parameter(trunc_normal(rng, (in_dim, out_dim)).astype(dtype))
        self.b = Parameter(np.zeros(out_dim, dtype=dtype)) if bias else None

    def __call__(self, x: Tensor) -> Tensor:
        y = ops.matmul_batched(x, self.w)
        if self.b is not None:
            y = ops.add(y, self.b)
        return y


class Conv2d(Module):
    """Square-kernel convolution with same-size padding (kernel // 2)."""

    def __init__(self, in_ch: int, out_ch: int, kernel: int, rng: SeededRng,
                 stride: int = 1, bias: bool = True, dtype=np.float32):
        super().__init__()
        self.stride = stride
        self.kernel = kernel
        self.w = Parameter(fanin_normal(rng, (out_ch, in_ch, kernel, kernel)).astype(dtype))
        self.b = Parameter(np.zeros(out_ch, dtype=dtype)) if bias else None

    def __call__(self, x: Tensor) -> Tensor:
        return ops.conv2d(x, self.w, self.b, stride=self.stride, pad=self.kernel // 2)


class LayerNorm(Module):
    def __init__(self, dim: int, dtype=np.float32, eps: float = 1e-5):
        super().__init__()
        self.eps = eps
        self.gamma = Parameter(np.ones(dim, dtype=dtype))
        self.beta = Parameter(np.zeros(dim, dtype=dtype))

    def __call__(self, x: Tensor) -> Tensor:
        return ops.layer_norm(x, self.gamma, self.beta, self.eps)
