"""Character-level transformer encoder for sentence pairs.

The pair is packed as [CLS] a1..aT [SEP] b1..bT' [SEP] and encoded
jointly. Position indices restart inside each sentence block (CLS is
position 0, each sentence counts 1..T, each SEP takes T+1), and there
is no per-slot segment embedding. This makes the two sentence slots
exchangeable: encoding (a, b) and (b, a) yields the same vectors for
the same sentence, and two identical sentences get bit-identical
representations — the property the downstream matcher's
perfect-match distance check relies on.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from . import autodiff as ad
from .autodiff import Tensor
from .graph_attention import EVAL, FeedForward, LayerNormAffine, Runtime
from .lattice import normalize_text
from .params import ParamTree

PAD, UNK, CLS, SEP = "[PAD]", "[UNK]", "[CLS]", "[SEP]"
RESERVED = (PAD, UNK, CLS, SEP)
NEG_INF = -1e30


class VocabError(ValueError):
    pass


class CharVocab:
    """char -> id table with fixed reserved slots 0..3."""

    def __init__(self, chars: list[str]):
        self.id_of: dict[str, int] = {}
        for i, token in enumerate(RESERVED):
            self.id_of[token] = i
        for ch in chars:
            if ch in self.id_of:
                raise VocabError(f"duplicate vocabulary entry: {ch!r}")
            self.id_of[ch] = len(self.id_of)

    @classmethod
    def build(cls, texts: list[str]) -> "CharVocab":
        chars = sorted({ch for text in texts for ch in normalize_text(text)})
        return cls(chars)

    def __len__(self) -> int:
        return len(self.id_of)

    def encode(self, text: str) -> list[int]:
        unk = self.id_of[UNK]
        return [self.id_of.get(ch, unk) for ch in normalize_text(text)]

    def save(self, path: str) -> None:
        with open(path, "w", encoding="utf-8") as fh:
            for ch, idx in sorted(self.id_of.items(), key=lambda kv: kv[1]):
                fh.write(f"{ch}\t{idx}\n")

    @classmethod
    def load(cls, path: str) -> "CharVocab":
        pairs = []
        with open(path, encoding="utf-8") as fh:
            for lineno, raw in enumerate(fh, start=1):
                line = raw.rstrip("\r\n")
                if not line:
                    continue
                fields = line.split("\t")
                if len(fields) != 2:
                    raise VocabError(f"vocab line {lineno}: expected 'char<TAB>id'")
                pairs.append((fields[0], int(fields[1])))
        pairs.sort(key=lambda kv: kv[1])
        tokens = [ch for ch, _ in pairs]
        if tokens[:4] != list(RESERVED) or [i for _, i in pairs] != list(range(len(pairs))):
            raise VocabError("vocab file must list reserved rows first with dense ids")
        return cls(tokens[4:])


@dataclass
class EncodedPair:
    cls_vec: Tensor   # (d,)
    reps_a: Tensor    # (Ta, d)
    reps_b: Tensor    # (Tb, d)


class TransformerEncoder:
    """Post-norm transformer stack over packed character sequences."""

    def __init__(self, params: ParamTree, prefix: str, vocab_size: int, dim: int,
                 n_layers: int, n_heads: int, max_len: int, dropout: float):
        if dim % n_heads != 0:
            raise ValueError(f"dim {dim} not divisible by heads {n_heads}")
        self.dim = dim
        self.n_layers = n_layers
        self.n_heads = n_heads
        self.head_dim = dim // n_heads
        self.max_len = max_len
        self.dropout = dropout
        self.char_emb = params.tensor(f"{prefix}.char_emb", (vocab_size, dim),
                                      init="dim_last")
        self.pos_emb = params.tensor(f"{prefix}.pos_emb", (max_len, dim),
                                     init="dim_last")
        self.layers = []
        for i in range(n_layers):
            lp = f"{prefix}.layers.{i}"
            self.layers.append({
                "wq": params.tensor(f"{lp}.attn.wq", (dim, dim)),
                "bq": params.tensor(f"{lp}.attn.bq", (dim,), init="zeros"),
                "wk": params.tensor(f"{lp}.attn.wk", (dim, dim)),
                "bk": params.tensor(f"{lp}.attn.bk", (dim,), init="zeros"),
                "wv": params.tensor(f"{lp}.attn.wv", (dim, dim)),
                "bv": params.tensor(f"{lp}.attn.bv", (dim,), init="zeros"),
                "wo": params.tensor(f"{lp}.attn.wo", (dim, dim)),
                "bo": params.tensor(f"{lp}.attn.bo", (dim,), init="zeros"),
                "ln1": LayerNormAffine(params, f"{lp}.ln1", dim),
                "ffn": FeedForward(params, f"{lp}.ffn", dim, 4 * dim, dim),
                "ln2": LayerNormAffine(params, f"{lp}.ln2", dim),
            })

    def forward(self, ids: list[int], positions: list[int],
                pad_mask: list[bool] | None = None, rt: Runtime = EVAL,
                attn_sink: list | None = None) -> Tensor:
        """Encode a token sequence; `pad_mask[i]` marks padding slots.

        Padding receives -inf attention score before softmax, so padded
        keys get exactly renormalized-away weight. `attn_sink`, when
        given, collects the (heads, S, S) weights of each layer.
        """
        if len(ids) > self.max_len:
            raise ValueError(f"sequence length {len(ids)} exceeds max_len {self.max_len}")
        x = ad.add(ad.gather_rows(self.char_emb, ids),
                   ad.gather_rows(self.pos_emb, positions))
        mask_row = None
        if pad_mask is not None and any(pad_mask):
            mask_row = np.where(np.asarray(pad_mask, dtype=bool), NEG_INF, 0.0)
            mask_const = ad.constant(np.tile(mask_row, (len(ids), 1)))

        inv_sqrt = 1.0 / np.sqrt(self.head_dim)
        for layer in self.layers:
            q = ad.linear(x, layer["wq"], layer["bq"])
            k = ad.linear(x, layer["wk"], layer["bk"])
            v = ad.linear(x, layer["wv"], layer["bv"])
            heads = []
            layer_attn = []
            for h in range(self.n_heads):
                lo, hi = h * self.head_dim, (h + 1) * self.head_dim
                qh = ad.slice_axis(q, 1, lo, hi)
                kh = ad.slice_axis(k, 1, lo, hi)
                vh = ad.slice_axis(v, 1, lo, hi)
                scores = ad.scale(ad.matmul(qh, ad.transpose(kh)), inv_sqrt)
                if mask_row is not None:
                    scores = ad.add(scores, mask_const)
                attn = ad.softmax(scores, axis=-1)
                layer_attn.append(attn.data)
                heads.append(ad.matmul(attn, vh))
            if attn_sink is not None:
                attn_sink.append(np.stack(layer_attn))
            merged = ad.concat(heads, axis=1)
            attn_out = rt.drop(ad.linear(merged, layer["wo"], layer["bo"]))
            x = layer["ln1"].residual(x, attn_out)
            ffn_out = rt.drop(layer["ffn"](x, rt))
            x = layer["ln2"].residual(x, ffn_out)
        return x

    def encode_pair(self, vocab: CharVocab, text_a: str, text_b: str,
                    rt: Runtime = EVAL, attn_sink: list | None = None) -> EncodedPair:
        ids_a = vocab.encode(text_a)
        ids_b = vocab.encode(text_b)
        ta, tb = len(ids_a), len(ids_b)
        if ta == 0 or tb == 0:
            raise ValueError("both sentences must be non-empty")
        total = ta + tb + 3
        if total > self.max_len:
            raise ValueError(
                f"pair too long: {ta} + {tb} chars (+3 specials) exceeds "
                f"max_len {self.max_len}")
        cls_id, sep_id = vocab.id_of[CLS], vocab.id_of[SEP]
        ids = [cls_id] + ids_a + [sep_id] + ids_b + [sep_id]
        positions = [0] + list(range(1, ta + 2)) + list(range(1, tb + 2))
        out = self.forward(ids, positions, rt=rt, attn_sink=attn_sink)
        return EncodedPair(
            cls_vec=ad.reshape(ad.slice_axis(out, 0, 0, 1), (self.dim,)),
            reps_a=ad.slice_axis(out, 0, 1, 1 + ta),
            reps_b=ad.slice_axis(out, 0, 2 + ta, 2 + ta + tb),
        )
