"""RMSProp with a linear warmup / linear decay learning-rate schedule."""

from __future__ import annotations

import numpy as np

from .params import ParamTree


class OptimError(RuntimeError):
    pass


def lr_schedule(step: int, total_steps: int, base_lr: float,
                warmup_ratio: float) -> float:
    """Linear 0 -> base_lr over the warmup steps, then linear decay to 0.

    Steps are 1-indexed; lr(warmup_end) == base_lr and lr(total) == 0.
    """
    if total_steps <= 0:
        raise OptimError("total_steps must be positive")
    if step <= 0:
        return 0.0
    warmup_steps = int(round(warmup_ratio * total_steps))
    if warmup_steps > 0 and step <= warmup_steps:
        return base_lr * step / warmup_steps
    if step >= total_steps:
        return 0.0
    return base_lr * (total_steps - step) / (total_steps - warmup_steps)


class RmsProp:
    """theta -= lr * g / sqrt(s + eps), s = rho*s + (1-rho)*g^2."""

    def __init__(self, params: ParamTree, rho: float = 0.9, eps: float = 1e-8,
                 lr_factors: dict[str, float] | None = None):
        self.params = params
        self.rho = rho
        self.eps = eps
        # Optional per-path-prefix learning-rate multipliers
        # (e.g. a reduced rate for the encoder group).
        self.lr_factors = dict(lr_factors or {})
        self.state = {path: np.zeros(t.shape) for path, t in params.trainable()}

    def _factor(self, path: str) -> float:
        for prefix, factor in self.lr_factors.items():
            if path == prefix or path.startswith(prefix + "."):
                return factor
        return 1.0

    def step(self, lr: float) -> None:
        for path, t in self.params.trainable():
            grad = t.grad
            if grad is None:
                continue
            if not np.isfinite(grad).all():
                raise OptimError(f"non-finite gradient in parameter {path}")
            s = self.state[path]
            s *= self.rho
            s += (1.0 - self.rho) * grad * grad
            t.data -= (lr * self._factor(path)) * grad / np.sqrt(s + self.eps)

    def zero_grad(self) -> None:
        self.params.zero_grad()
