"""Adam optimizer with parameter groups and the step-decay schedule."""

from __future__ import annotations

import numpy as np

from gdnet.numcore.tensor import Parameter

HALVE_EVERY_EPOCHS = 200


def lr_at_epoch(base_lr: float, epoch: int) -> float:
    """Learning rate after step decay: halved once per 200 elapsed epochs."""
    if epoch < 0:
        raise ValueError(f"epoch must be non-negative, got {epoch}")
    return base_lr * 0.5 ** (epoch // HALVE_EVERY_EPOCHS)


class Adam:
    """Adam with bias correction over independent learning-rate groups.

    Each group is a dict with keys "params" (list of Parameter) and "lr"
    (float, mutable between steps so a schedule can be applied).  Moments are
    kept in the parameter's own dtype.  After a step, the gradients of every
    updated parameter are zero-filled; parameters whose grad is None are
    skipped entirely.
    """

    def __init__(self, groups, *, beta1: float = 0.9, beta2: float = 0.99,
                 eps: float = 1e-8):
        self.beta1 = float(beta1)
        self.beta2 = float(beta2)
        self.eps = float(eps)
        self.t = 0
        self.groups = []
        seen: set[int] = set()
        for g in groups:
            params = list(g["params"])
            for p in params:
                if not isinstance(p, Parameter):
                    raise TypeError("optimizer groups must contain Parameters")
                if id(p) in seen:
                    raise ValueError(
                        f"parameter {p.name or '<unnamed>'} appears in two groups"
                    )
                seen.add(id(p))
            self.groups.append({
                "params": params,
                "lr": float(g["lr"]),
                "m": [np.zeros_like(p.data) for p in params],
                "v": [np.zeros_like(p.data) for p in params],
            })
        if not seen:
            raise ValueError("optimizer has no parameters")

    def step(self):
        """Apply one bias-corrected update to every parameter with a gradient."""
        self.t += 1
        c1 = 1.0 - self.beta1 ** self.t
        c2 = 1.0 - self.beta2 ** self.t
        for g in self.groups:
            lr = g["lr"]
            for p, m, v in zip(g["params"], g["m"], g["v"]):
                if p.grad is None or not p.trainable:
                    continue
                grad = p.grad
                m *= self.beta1
                m += (1.0 - self.beta1) * grad
                v *= self.beta2
                v += (1.0 - self.beta2) * grad * grad
                p.data -= lr * (m / c1) / (np.sqrt(v / c2) + self.eps)
                p.grad[...] = 0
