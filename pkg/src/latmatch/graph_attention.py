"""Multi-dimensional attention primitives.

Unlike scalar graph attention, every neighbor here gets a per-feature
weight vector: the scalar query-key score is added to a learned
feature-wise score of the neighbor, and the result is normalized across
neighbors independently per feature (md_softmax). Aggregation is then
an elementwise-weighted sum followed by ReLU.

Attentive pooling reuses the same normalization to form a per-feature
convex combination of its inputs, so the output always lies inside the
per-dimension envelope of the items.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from . import autodiff as ad
from .autodiff import Tensor
from .params import ParamTree


@dataclass
class Runtime:
    """Per-call execution context: dropout is active only in training."""
    training: bool = False
    dropout: float = 0.0
    rng: np.random.Generator | None = None

    def drop(self, t: Tensor) -> Tensor:
        if self.training and self.dropout > 0.0:
            return ad.dropout(t, self.dropout, self.rng)
        return t


EVAL = Runtime()


class EmptyNeighborhood(ValueError):
    pass


def md_softmax(scores: Tensor) -> Tensor:
    """Normalize (n, d) scores across the n items, per feature dimension."""
    if scores.ndim != 2 or scores.shape[0] == 0:
        raise EmptyNeighborhood(
            f"md_softmax needs a non-empty (n, d) score matrix, got {scores.shape}")
    return ad.softmax(scores, axis=0)


class FeedForward:
    """Two-layer FFN with ReLU between, hidden dropout in training."""

    def __init__(self, params: ParamTree, prefix: str, dim_in: int,
                 dim_hidden: int, dim_out: int):
        self.w1 = params.tensor(f"{prefix}.w1", (dim_in, dim_hidden))
        self.b1 = params.tensor(f"{prefix}.b1", (dim_hidden,), init="zeros")
        self.w2 = params.tensor(f"{prefix}.w2", (dim_hidden, dim_out))
        self.b2 = params.tensor(f"{prefix}.b2", (dim_out,), init="zeros")

    def __call__(self, x: Tensor, rt: Runtime = EVAL) -> Tensor:
        hidden = rt.drop(ad.relu(ad.linear(x, self.w1, self.b1)))
        return ad.linear(hidden, self.w2, self.b2)


class MdGat:
    """Multi-dimensional graph attention update.

    Query/key projections produce a scalar pair score; a two-layer net
    over each neighbor produces the feature-wise score. No 1/sqrt(d)
    scaling is applied to the pair score — stability comes from the max
    subtraction inside softmax.
    """

    def __init__(self, params: ParamTree, prefix: str, dim: int):
        self.dim = dim
        self.wq = params.tensor(f"{prefix}.wq", (dim, dim))
        self.wk = params.tensor(f"{prefix}.wk", (dim, dim))
        self.w = params.tensor(f"{prefix}.w", (dim, dim))
        self.fm_w1 = params.tensor(f"{prefix}.fm.w1", (dim, dim))
        self.fm_b1 = params.tensor(f"{prefix}.fm.b1", (dim,), init="zeros")
        self.fm_w2 = params.tensor(f"{prefix}.fm.w2", (dim, dim))
        self.fm_b2 = params.tensor(f"{prefix}.fm.b2", (dim,), init="zeros")

    def __call__(self, query: Tensor, neighbors: Tensor, rt: Runtime = EVAL) -> Tensor:
        """query: (d,) or (m, d); neighbors: (n, d). Output matches query."""
        if neighbors.ndim != 2 or neighbors.shape[0] == 0:
            raise EmptyNeighborhood(
                f"md_gat needs a non-empty (n, d) neighbor matrix, got {neighbors.shape}")
        single = query.ndim == 1
        queries = ad.reshape(query, (1, self.dim)) if single else query
        n = neighbors.shape[0]

        # Neighbor-side terms are shared across queries.
        feat_scores = ad.linear(
            ad.relu(ad.linear(neighbors, self.fm_w1, self.fm_b1)),
            self.fm_w2, self.fm_b2)                              # (n, d)
        values = ad.matmul(neighbors, self.w)                    # (n, d)
        keys = ad.matmul(neighbors, self.wk)                     # (n, d)
        pair = ad.matmul(ad.matmul(queries, self.wq),
                         ad.transpose(keys))                     # (m, n)

        ones_row = ad.constant(np.ones((1, self.dim)))
        outputs = []
        for t in range(queries.shape[0]):
            row = ad.slice_axis(pair, 0, t, t + 1)               # (1, n)
            spread = ad.matmul(ad.transpose(row), ones_row)      # (n, d)
            weights = md_softmax(ad.add(spread, feat_scores))
            outputs.append(ad.sum_axis(ad.mul(weights, values), axis=0))
        out = ad.relu(ad.stack_rows(outputs))
        out = rt.drop(out)
        return ad.reshape(out, (self.dim,)) if single else out


class AttPool:
    """Attentive pooling: per-feature convex combination of (n, d) items."""

    def __init__(self, params: ParamTree, prefix: str, dim: int):
        self.scorer = FeedForward(params, prefix, dim, dim, dim)

    def __call__(self, items: Tensor, rt: Runtime = EVAL) -> Tensor:
        if items.ndim != 2 or items.shape[0] == 0:
            raise EmptyNeighborhood(
                f"att_pool needs a non-empty (n, d) item matrix, got {items.shape}")
        weights = md_softmax(self.scorer(items, rt))
        return ad.sum_axis(ad.mul(weights, items), axis=0)


class LayerNormAffine:
    """LayerNorm over the last axis with learned gain/bias."""

    def __init__(self, params: ParamTree, prefix: str, dim: int):
        self.gain = params.tensor(f"{prefix}.gain", (dim,), init="ones")
        self.bias = params.tensor(f"{prefix}.bias", (dim,), init="zeros")

    def __call__(self, x: Tensor) -> Tensor:
        normed = ad.layer_norm(x)
        if x.ndim == 1:
            return ad.add(ad.mul(normed, self.gain), self.bias)
        n = x.shape[0]
        gain = ad.matmul(ad.constant(np.ones((n, 1))),
                         ad.reshape(self.gain, (1, self.gain.shape[0])))
        return ad.add(ad.mul(normed, gain), self.bias)

    def residual(self, x: Tensor, update: Tensor) -> Tensor:
        """LayerNorm(x + update) — the stabilizer between attention layers."""
        return self(ad.add(x, update))


class GruCell:
    """Standard GRU: update/reset gates plus tanh candidate.

    The input size may differ from the state size; state follows
    h' = (1 - z) * h + z * candidate.
    """

    def __init__(self, params: ParamTree, prefix: str, dim_in: int, dim_state: int):
        self.dim_state = dim_state
        p = params
        self.wxz = p.tensor(f"{prefix}.wxz", (dim_in, dim_state))
        self.whz = p.tensor(f"{prefix}.whz", (dim_state, dim_state))
        self.bz = p.tensor(f"{prefix}.bz", (dim_state,), init="zeros")
        self.wxr = p.tensor(f"{prefix}.wxr", (dim_in, dim_state))
        self.whr = p.tensor(f"{prefix}.whr", (dim_state, dim_state))
        self.br = p.tensor(f"{prefix}.br", (dim_state,), init="zeros")
        self.wxn = p.tensor(f"{prefix}.wxn", (dim_in, dim_state))
        self.whn = p.tensor(f"{prefix}.whn", (dim_state, dim_state))
        self.bn = p.tensor(f"{prefix}.bn", (dim_state,), init="zeros")

    def __call__(self, state: Tensor, x: Tensor) -> Tensor:
        """state: (d,) or (m, d); x: matching (in,) or (m, in)."""
        z = ad.sigmoid(ad.add(ad.add(ad.matmul(x, self.wxz),
                                     ad.matmul(state, self.whz)), self.bz))
        r = ad.sigmoid(ad.add(ad.add(ad.matmul(x, self.wxr),
                                     ad.matmul(state, self.whr)), self.br))
        cand = ad.tanh(ad.add(ad.add(ad.matmul(x, self.wxn),
                                     ad.matmul(ad.mul(r, state), self.whn)), self.bn))
        ones = ad.constant(np.ones(z.shape))
        return ad.add(ad.mul(ad.sub(ones, z), state), ad.mul(z, cand))
