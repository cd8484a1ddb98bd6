"""Finite-difference gradient oracles.

These never touch the tape: they re-run the forward function with nudged
inputs, so agreement with backward() is an independent check of every
analytic vector-Jacobian product.
"""

from __future__ import annotations

import numpy as np

from gdnet.numcore.tensor import Tensor


def finite_diff_grad(f, x: np.ndarray, eps: float = 1e-5) -> np.ndarray:
    """Central-difference gradient of a scalar function, element by element.

    Args:
        f: maps an ndarray like `x` to a python float.
        x: evaluation point (not modified).
        eps: step size; ~1e-5 at float64.
    """
    x = np.asarray(x, dtype=np.float64)
    grad = np.zeros_like(x)
    flat = x.reshape(-1)
    gflat = grad.reshape(-1)
    for i in range(flat.size):
        orig = flat[i]
        flat[i] = orig + eps
        up = f(x)
        flat[i] = orig - eps
        down = f(x)
        flat[i] = orig
        gflat[i] = (up - down) / (2 * eps)
    return grad


def gradcheck(fn, inputs, eps: float = 1e-5, rtol: float = 1e-4, atol: float = 1e-6,
              sample: int | None = None, seed: int = 0) -> float:
    """Compare backward() against central differences on every input.

    Args:
        fn: maps the input Tensors to a scalar Tensor (pure, deterministic).
        inputs: Tensors whose gradients are checked; each must be float64
            and is temporarily mutated in place for the difference probes.
        sample: if set, only this many randomly chosen coordinates per
            tensor are probed (keeps big-layer suites fast); None = all.

    Returns the worst |analytic - numeric| / max(1, |analytic|, |numeric|)
    over all probed coordinates.  Raises AssertionError past tolerance.
    """
    inputs = list(inputs)
    for t in inputs:
        if t.data.dtype != np.float64:
            raise ValueError("gradcheck requires float64 inputs")
        t.requires_grad = True
        t.grad = None

    out = fn(*inputs)
    if out.data.size != 1:
        raise ValueError("gradcheck target must be scalar")
    out.backward()

    def run() -> float:
        return float(fn(*inputs).data)

    rng = np.random.default_rng(seed)
    worst = 0.0
    for t in inputs:
        analytic = t.grad if t.grad is not None else np.zeros_like(t.data)
        flat = t.data.reshape(-1)
        aflat = analytic.reshape(-1)
        n = flat.size
        coords = range(n) if sample is None or sample >= n \
            else rng.choice(n, size=sample, replace=False)
        for i in coords:
            orig = flat[i]
            flat[i] = orig + eps
            up = run()
            flat[i] = orig - eps
            down = run()
            flat[i] = orig
            numeric = (up - down) / (2 * eps)
            err = abs(aflat[i] - numeric)
            rel = err / max(1.0, abs(aflat[i]), abs(numeric))
            worst = max(worst, rel)
            if err > atol + rtol * max(1.0, abs(aflat[i]), abs(numeric)):
                raise AssertionError(
                    f"gradient mismatch at flat index {i} of shape {t.data.shape}: "
                    f"analytic {aflat[i]:.8g} vs numeric {numeric:.8g}"
                )
    return worst


def check_module_grads(fn, inputs, params, **kw) -> float:
    """gradcheck over both explicit inputs and a module's parameters.

    `fn` takes only `inputs`; parameters participate implicitly, so they are
    appended to the probe list with a wrapper that ignores the extras.
    """
    params = list(params)

    def wrapped(*args):
        return fn(*args[: len(inputs)])

    return gradcheck(wrapped, list(inputs) + params, **kw)
