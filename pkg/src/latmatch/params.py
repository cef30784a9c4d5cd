"""Path-addressable tree of learnable parameters.

Every parameter draws its initial values from an RNG stream keyed by
(seed, hash(path)). Because the stream depends only on the path, adding
or removing unrelated parameters (ablations, config variants) leaves
every other parameter bit-identical — which is what makes the
structural-equivalence checks and run-to-run determinism possible.
"""

from __future__ import annotations

import hashlib

import numpy as np

from .autodiff import Tensor


def _path_seed(path: str) -> int:
    return int.from_bytes(hashlib.sha256(path.encode("utf-8")).digest()[:8], "little")


class ParamTree:
    def __init__(self, seed: int):
        self.seed = int(seed)
        self._params: dict[str, Tensor] = {}

    def _rng(self, path: str) -> np.random.Generator:
        return np.random.Generator(np.random.PCG64(
            np.random.SeedSequence([self.seed, _path_seed(path)])))

    def tensor(self, path: str, shape: tuple[int, ...], init: str = "fan_in",
               trainable: bool = True, data: np.ndarray | None = None) -> Tensor:
        """Create a parameter at `path`.

        init: 'fan_in'  uniform +-1/sqrt(shape[0])   (weight matrices)
              'dim_last' uniform +-1/sqrt(shape[-1]) (embedding tables)
              'zeros' / 'ones'                        (biases, norm gains)
        Explicit `data` overrides the initializer.
        """
        if path in self._params:
            raise ValueError(f"duplicate parameter path: {path}")
        shape = tuple(int(s) for s in shape)
        if data is not None:
            values = np.ascontiguousarray(data, dtype=np.float64)
            if values.shape != shape:
                raise ValueError(f"{path}: data shape {values.shape} != {shape}")
        elif init == "zeros":
            values = np.zeros(shape)
        elif init == "ones":
            values = np.ones(shape)
        elif init in ("fan_in", "dim_last"):
            fan = shape[0] if init == "fan_in" else shape[-1]
            bound = 1.0 / np.sqrt(max(fan, 1))
            values = self._rng(path).uniform(-bound, bound, size=shape)
        else:
            raise ValueError(f"unknown initializer: {init}")
        t = Tensor(values, requires_grad=trainable)
        self._params[path] = t
        return t

    def get(self, path: str) -> Tensor:
        return self._params[path]

    def __contains__(self, path: str) -> bool:
        return path in self._params

    def flatten(self) -> list[tuple[str, Tensor]]:
        """All parameters sorted by path (stable across construction order)."""
        return sorted(self._params.items())

    def trainable(self) -> list[tuple[str, Tensor]]:
        return [(p, t) for p, t in self.flatten() if t.requires_grad]

    def zero_grad(self) -> None:
        for t in self._params.values():
            t.grad = None

    def n_values(self) -> int:
        return sum(t.size for _, t in self.flatten())

    def load_arrays(self, arrays: dict[str, np.ndarray]) -> None:
        """Overwrite parameter values in place (checkpoint restore)."""
        missing = sorted(set(self._params) - set(arrays))
        extra = sorted(set(arrays) - set(self._params))
        if missing or extra:
            raise ValueError(
                f"parameter set mismatch: missing={missing[:5]} extra={extra[:5]}")
        for path, values in arrays.items():
            t = self._params[path]
            if t.shape != values.shape:
                raise ValueError(
                    f"{path}: checkpoint shape {values.shape} != model {t.shape}")
            t.data[...] = values
