"""Single-file model checkpoints.

Layout: 8-byte magic `LETCKPT1`, an 8-byte little-endian manifest
length, a JSON manifest (config echo, seed, sorted parameter paths with
shapes and trainable flags), then the raw float64 little-endian buffers
in manifest order. Two runs with the same seed and config produce
byte-identical files.
"""

from __future__ import annotations

import json
import struct
from dataclasses import dataclass
from typing import Any

import numpy as np

from .params import ParamTree

MAGIC = b"LETCKPT1"
FORMAT_VERSION = 1


class CheckpointError(ValueError):
    pass


@dataclass
class Checkpoint:
    config: dict[str, Any]
    seed: int
    arrays: dict[str, np.ndarray]
    trainable: dict[str, bool]


def save_checkpoint(path: str, config: dict[str, Any], params: ParamTree) -> None:
    entries = params.flatten()
    manifest = {
        "format_version": FORMAT_VERSION,
        "seed": params.seed,
        "config": config,
        "params": [
            {"path": p, "shape": list(t.shape), "trainable": t.requires_grad}
            for p, t in entries
        ],
    }
    blob = json.dumps(manifest, sort_keys=True).encode("utf-8")
    with open(path, "wb") as fh:
        fh.write(MAGIC)
        fh.write(struct.pack("<Q", len(blob)))
        fh.write(blob)
        for _, t in entries:
            fh.write(np.ascontiguousarray(t.data, dtype="<f8").tobytes())


def load_checkpoint(path: str) -> Checkpoint:
    with open(path, "rb") as fh:
        magic = fh.read(len(MAGIC))
        if magic != MAGIC:
            raise CheckpointError(f"{path}: bad magic {magic!r}")
        (blob_len,) = struct.unpack("<Q", fh.read(8))
        manifest = json.loads(fh.read(blob_len).decode("utf-8"))
        if manifest.get("format_version") != FORMAT_VERSION:
            raise CheckpointError(f"{path}: unsupported format version")
        arrays = {}
        trainable = {}
        for entry in manifest["params"]:
            shape = tuple(entry["shape"])
            count = int(np.prod(shape)) if shape else 1
            buf = fh.read(8 * count)
            if len(buf) != 8 * count:
                raise CheckpointError(f"{path}: truncated buffer for {entry['path']}")
            arrays[entry["path"]] = np.frombuffer(buf, dtype="<f8").reshape(shape).copy()
            trainable[entry["path"]] = bool(entry["trainable"])
    return Checkpoint(config=manifest["config"], seed=manifest["seed"],
                      arrays=arrays, trainable=trainable)
