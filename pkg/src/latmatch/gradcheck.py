"""Gradient verification against central finite differences."""

from __future__ import annotations

from dataclasses import dataclass
from typing import Callable

import numpy as np

from .autodiff import Tensor, backward
from .params import ParamTree


class GradCheckError(RuntimeError):
    pass


@dataclass
class GradCheckResult:
    max_rel_err: float
    worst_path: str
    worst_index: int
    samples: int

    def __str__(self) -> str:
        return (f"max rel err {self.max_rel_err:.3e} at "
                f"{self.worst_path}[{self.worst_index}] ({self.samples} samples)")


def relative_error(analytic: float, numeric: float, floor: float = 1e-8) -> float:
    return abs(analytic - numeric) / max(abs(analytic), abs(numeric), floor)


def _central(f: Callable[[], Tensor], flat: np.ndarray, idx: int,
             step: float) -> float:
    original = flat[idx]
    flat[idx] = original + step
    f_plus = float(f().data)
    flat[idx] = original - step
    f_minus = float(f().data)
    flat[idx] = original
    if not (np.isfinite(f_plus) and np.isfinite(f_minus)):
        raise GradCheckError("non-finite perturbed loss")
    return (f_plus - f_minus) / (2.0 * step)


def _numeric_estimate(f, flat, idx, steps: tuple[float, ...],
                      f_scale: float) -> float:
    """Central difference with a step chosen by bracket agreement.

    A single step cannot serve every coordinate in double precision:
    coordinates with near-zero gradients need a large step to rise above
    the ~ulp(loss)/2h rounding floor, while steps that large walk across
    ReLU kinks on ordinary coordinates. So an ascending step ladder is
    evaluated and the largest-step adjacent pair whose disagreement is
    explained by rounding (or matches the best observed agreement) wins;
    its larger-step member has the lowest rounding floor. The choice
    never looks at the analytic gradient, so a wrong backward rule
    cannot be papered over.
    """
    estimates = [_central(f, flat, idx, h) for h in steps]
    if len(estimates) == 1:
        return estimates[0]
    gaps = [abs(a - b) for a, b in zip(estimates, estimates[1:])]
    best = min(gaps)
    eps = np.finfo(np.float64).eps
    for i in reversed(range(len(gaps))):
        rounding_floor = 4.0 * eps * f_scale / (2.0 * steps[i])
        if gaps[i] <= max(4.0 * best, rounding_floor):
            return estimates[i + 1]
    return estimates[-1]


def gradient_check(f: Callable[[], Tensor], params: ParamTree,
                   samples: int = 200,
                   step: float | tuple[float, ...] = (1e-5, 1e-4, 1e-3),
                   seed: int = 0) -> GradCheckResult:
    """Compare analytic gradients of a scalar function with central differences.

    `f` must be deterministic (no dropout) and close over `params`.
    Coordinates are sampled uniformly over all trainable values; the
    relative error floor is 1e-8. Non-finite values raise, naming the
    parameter path responsible. `step` may be a single step or an
    ascending ladder (see _numeric_estimate).
    """
    trainable = params.trainable()
    if not trainable:
        raise GradCheckError("no trainable parameters")

    params.zero_grad()
    loss = f()
    if loss.ndim != 0:
        raise GradCheckError(f"loss must be scalar, got shape {loss.shape}")
    if not np.isfinite(loss.data):
        raise GradCheckError("loss is not finite")
    backward(loss)

    analytic: dict[str, np.ndarray] = {}
    for path, t in trainable:
        g = np.zeros(t.shape) if t.grad is None else t.grad
        if not np.isfinite(g).all():
            raise GradCheckError(f"non-finite gradient in parameter {path}")
        analytic[path] = g.copy()

    steps = (step,) if isinstance(step, float) else tuple(step)
    sizes = np.array([t.size for _, t in trainable])
    total = int(sizes.sum())
    rng = np.random.Generator(np.random.PCG64(seed))
    n = min(samples, total)
    coords = rng.choice(total, size=n, replace=False)
    bounds = np.cumsum(sizes)

    worst = GradCheckResult(0.0, trainable[0][0], 0, n)
    for coord in np.sort(coords):
        which = int(np.searchsorted(bounds, coord, side="right"))
        path, t = trainable[which]
        idx = int(coord - (bounds[which] - sizes[which]))
        flat = t.data.reshape(-1)
        try:
            numeric = _numeric_estimate(f, flat, idx, steps)
        except GradCheckError as exc:
            raise GradCheckError(f"{exc} at parameter {path}") from exc
        err = relative_error(float(analytic[path].reshape(-1)[idx]), numeric)
        if err > worst.max_rel_err:
            worst = GradCheckResult(err, path, idx, n)
    return worst
