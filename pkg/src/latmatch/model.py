"""The lattice matcher: encoder + sense-aware graph fusion + matching.

Pipeline per sentence pair:
  1. Joint character encoding of the packed pair.
  2. Per-sentence word lattice; each node's initial representation is an
     attentive pool of its characters' contextual vectors.
  3. Each sense of a node starts from its sememe embeddings
     (projected, contextualized over the sense's sememe set, pooled).
  4. Fusion layers alternate two sub-steps: senses gather from the words
     reachable forward/backward of their node (concatenated, gated by a
     GRU), then each word gathers from its freshly updated senses (GRU
     again, then residual + layer norm). Nodes without senses keep their
     representation bit-for-bit unchanged.
  5. Word vectors are pooled back onto their characters, matched across
     sentences with shared-parameter attention plus multi-perspective
     cosine distances, pooled into sentence vectors, and classified.
"""

from __future__ import annotations

import numpy as np

from . import autodiff as ad
from .autodiff import Tensor
from .config import RunConfig
from .encoder import CharVocab, EncodedPair, TransformerEncoder
from .graph_attention import (EVAL, AttPool, FeedForward, GruCell,
                              LayerNormAffine, MdGat, Runtime)
from .knowledge import KnowledgeBase
from .lattice import LatticeGraph, lattice_from_dicts, normalize_text
from .params import ParamTree


class FusionLayer:
    """One word/sense fusion step over the lattice."""

    def __init__(self, params: ParamTree, prefix: str, dim: int, use_gru: bool):
        self.use_gru = use_gru
        self.sense_fw = MdGat(params, f"{prefix}.sense_fw", dim)
        self.sense_bw = MdGat(params, f"{prefix}.sense_bw", dim)
        self.word_from_senses = MdGat(params, f"{prefix}.word_from_senses", dim)
        self.sense_gru = GruCell(params, f"{prefix}.sense_gru", 2 * dim, dim)
        self.word_gru = GruCell(params, f"{prefix}.word_gru", dim, dim)
        self.word_ln = LayerNormAffine(params, f"{prefix}.word_ln", dim)
        # Only used with use_gru=False, where the concatenated message
        # must still come back to width d.
        self.direct_proj = params.tensor(f"{prefix}.direct_proj", (2 * dim, dim))

    def __call__(self, lattice: LatticeGraph, words: list[Tensor],
                 senses: list[Tensor | None], rt: Runtime = EVAL,
                 ) -> tuple[list[Tensor], list[Tensor | None]]:
        # Sub-step 1: senses gather from reachable words.
        new_senses: list[Tensor | None] = []
        for node in lattice.nodes:
            sense = senses[node.node_id]
            if sense is None:
                new_senses.append(None)
                continue
            h_fw = ad.stack_rows([words[j] for j in sorted(lattice.fw_reach[node.node_id])])
            h_bw = ad.stack_rows([words[j] for j in sorted(lattice.bw_reach[node.node_id])])
            message = ad.concat([self.sense_fw(sense, h_fw, rt),
                                 self.sense_bw(sense, h_bw, rt)], axis=1)
            if self.use_gru:
                new_senses.append(self.sense_gru(sense, message))
            else:
                new_senses.append(ad.matmul(message, self.direct_proj))

        # Sub-step 2: words gather from their updated senses; a node with
        # no senses is left untouched (same tensor, not a copy).
        new_words: list[Tensor] = []
        for node in lattice.nodes:
            sense = new_senses[node.node_id]
            word = words[node.node_id]
            if sense is None:
                new_words.append(word)
                continue
            gathered = self.word_from_senses(word, sense, rt)
            updated = self.word_gru(word, gathered) if self.use_gru else gathered
            new_words.append(self.word_ln.residual(word, updated))
        return new_words, new_senses


class LatticeMatcher:
    def __init__(self, config: RunConfig, vocab: CharVocab, kb: KnowledgeBase,
                 dictionaries: list[set[str]]):
        config.validate()
        self.config = config
        self.vocab = vocab
        self.kb = kb
        self.dictionaries = dictionaries if dictionaries else [set()]
        self.params = ParamTree(config.seed)
        d = config.hidden_dim

        self.encoder = TransformerEncoder(
            self.params, "enc", len(vocab), d, config.enc_layers,
            config.enc_heads, config.max_len, config.dropout)

        self._sememe_row = {s: i for i, s in enumerate(kb.sememe_ids())}
        emb = (np.stack([kb.sememe_embeddings[s] for s in kb.sememe_ids()])
               if self._sememe_row else np.zeros((0, kb.dim)))
        self.sememe_emb = self.params.tensor(
            "kb.sememe_emb", emb.shape, data=emb,
            trainable=config.train_sememe_embeddings)
        self.sememe_proj_w = self.params.tensor("kb.proj_w", (kb.dim, d))
        self.sememe_proj_b = self.params.tensor("kb.proj_b", (d,), init="zeros")
        self.sense_gat = MdGat(self.params, "sense_init.gat", d)
        self.sense_pool = AttPool(self.params, "sense_init.pool", d)

        self.word_pool = AttPool(self.params, "word_init.pool", d)
        self.fusion_layers = [
            FusionLayer(self.params, f"fusion.{i}", d, config.use_gru)
            for i in range(config.graph_layers)
        ]
        self.fuse_pool = AttPool(self.params, "fuse.pool", d)
        self.fuse_ln = LayerNormAffine(self.params, "fuse.ln", d)

        self.match_gat = MdGat(self.params, "match.att", d)
        self.cos_w = self.params.tensor("match.cos_w", (config.perspectives, d))
        self.match_ffn = FeedForward(self.params, "match.ffn",
                                     d + config.perspectives, d, d)
        self.match_pool = AttPool(self.params, "match.pool", d)

        self.clf_w1 = self.params.tensor("clf.w1", (5 * d, d))
        self.clf_b1 = self.params.tensor("clf.b1", (d,), init="zeros")
        self.clf_w2 = self.params.tensor("clf.w2", (d, d))
        self.clf_b2 = self.params.tensor("clf.b2", (d,), init="zeros")
        self.clf_w3 = self.params.tensor("clf.w3", (d, 1))
        self.clf_b3 = self.params.tensor("clf.b3", (1,), init="zeros")

        self._lattice_cache: dict[str, LatticeGraph] = {}
        self._sense_rows_cache: dict[str, list[list[int]]] = {}

    # -- structure -----------------------------------------------------

    def lattice_for(self, text: str) -> LatticeGraph:
        text = normalize_text(text)
        if text not in self._lattice_cache:
            self._lattice_cache[text] = lattice_from_dicts(
                text, self.dictionaries, list(self.config.effective_strategies()))
        return self._lattice_cache[text]

    def _sense_rows(self, word: str) -> list[list[int]]:
        """Per sense of `word`, the sememe-embedding row indices."""
        if word not in self._sense_rows_cache:
            senses = self.kb.lookup(word) if self.config.use_sense else []
            self._sense_rows_cache[word] = [
                [self._sememe_row[s] for s in sense.sememes] for sense in senses]
        return self._sense_rows_cache[word]

    # -- representation builders ----------------------------------------

    def init_word_reps(self, lattice: LatticeGraph, char_reps: Tensor,
                       rt: Runtime = EVAL) -> list[Tensor]:
        """Attentive pool of each node's character vectors (rows t1..t2)."""
        reps = []
        for node in lattice.nodes:
            window = ad.slice_axis(char_reps, 0, node.start - 1, node.end)
            reps.append(self.word_pool(window, rt))
        return reps

    def init_sense_reps(self, lattice: LatticeGraph, rt: Runtime = EVAL
                        ) -> list[Tensor | None]:
        """Per node: (K, d) stacked sense vectors, or None when K = 0."""
        out: list[Tensor | None] = []
        for node in lattice.nodes:
            rows_per_sense = self._sense_rows(node.surface)
            if not rows_per_sense:
                out.append(None)
                continue
            sense_vecs = []
            for rows in rows_per_sense:
                emb = ad.gather_rows(self.sememe_emb, rows)
                projected = ad.linear(emb, self.sememe_proj_w, self.sememe_proj_b)
                contextualized = self.sense_gat(projected, projected, rt)
                sense_vecs.append(self.sense_pool(contextualized, rt))
            out.append(ad.stack_rows(sense_vecs))
        return out

    def fuse_chars(self, lattice: LatticeGraph, char_reps: Tensor,
                   words: list[Tensor], rt: Runtime = EVAL) -> Tensor:
        """Pool word vectors back onto characters: LN(c_t + pooled)."""
        d = self.config.hidden_dim
        rows = []
        for pos in range(1, len(lattice.text) + 1):
            node_ids = lattice.char_nodes[pos - 1]
            if not node_ids:
                raise ValueError(f"character {pos} is not covered by any lattice node")
            pooled = self.fuse_pool(ad.stack_rows([words[i] for i in node_ids]), rt)
            c_t = ad.reshape(ad.slice_axis(char_reps, 0, pos - 1, pos), (d,))
            rows.append(self.fuse_ln(ad.add(c_t, pooled)))
        return ad.stack_rows(rows)

    def match_sentences(self, y_a: Tensor, y_b: Tensor, rt: Runtime = EVAL,
                        trace: dict | None = None) -> tuple[Tensor, Tensor]:
        """Self/cross attention (shared parameters) + perspective distances."""
        d = self.config.hidden_dim
        p_count = self.config.perspectives
        ones_p = ad.constant(np.ones((p_count, 1)))

        def one_side(y_own: Tensor, y_other: Tensor, tag: str) -> Tensor:
            m_self = self.match_gat(y_own, y_own, rt)
            m_cross = self.match_gat(y_own, y_other, rt)
            finals = []
            for t in range(y_own.shape[0]):
                ms = ad.reshape(ad.slice_axis(m_self, 0, t, t + 1), (d,))
                mc = ad.reshape(ad.slice_axis(m_cross, 0, t, t + 1), (d,))
                tiled_s = ad.matmul(ones_p, ad.reshape(ms, (1, d)))
                tiled_c = ad.matmul(ones_p, ad.reshape(mc, (1, d)))
                dist = ad.cosine_similarity(ad.mul(self.cos_w, tiled_s),
                                            ad.mul(self.cos_w, tiled_c))
                if trace is not None:
                    trace.setdefault("dist", {}).setdefault(tag, []).append(
                        dist.data.copy())
                    trace.setdefault("m_self", {}).setdefault(tag, []).append(
                        ms.data.copy())
                    trace.setdefault("m_cross", {}).setdefault(tag, []).append(
                        mc.data.copy())
                finals.append(self.match_ffn(ad.concat([ms, dist], axis=0), rt))
            return self.match_pool(ad.stack_rows(finals), rt)

        return one_side(y_a, y_b, "a"), one_side(y_b, y_a, "b")

    def classify(self, cls_vec: Tensor, r_a: Tensor, r_b: Tensor,
                 rt: Runtime = EVAL) -> Tensor:
        features = ad.concat([cls_vec, r_a, r_b, ad.mul(r_a, r_b),
                              ad.absval(ad.sub(r_a, r_b))], axis=0)
        h1 = rt.drop(ad.relu(ad.linear(features, self.clf_w1, self.clf_b1)))
        h2 = rt.drop(ad.relu(ad.linear(h1, self.clf_w2, self.clf_b2)))
        prob = ad.sigmoid(ad.linear(h2, self.clf_w3, self.clf_b3))
        return ad.reshape(prob, ())

    # -- end to end ------------------------------------------------------

    def forward_pair(self, text_a: str, text_b: str, rt: Runtime = EVAL,
                     trace: dict | None = None) -> Tensor:
        """Probability that the two sentences mean the same thing."""
        encoded = self.encoder.encode_pair(self.vocab, text_a, text_b, rt)
        g_a = self.lattice_for(text_a)
        g_b = self.lattice_for(text_b)
        sides = {
            "a": [g_a, encoded.reps_a],
            "b": [g_b, encoded.reps_b],
        }

        fused = {}
        for tag, (lattice, char_reps) in sides.items():
            words = self.init_word_reps(lattice, char_reps, rt)
            senses = self.init_sense_reps(lattice, rt)
            if trace is not None:
                trace.setdefault("word_layers", {})[tag] = [
                    [w.data.copy() for w in words]]
                trace.setdefault("sense_layers", {})[tag] = [
                    [None if s is None else s.data.copy() for s in senses]]
            for layer in self.fusion_layers:
                words, senses = layer(lattice, words, senses, rt)
                if trace is not None:
                    trace["word_layers"][tag].append([w.data.copy() for w in words])
                    trace["sense_layers"][tag].append(
                        [None if s is None else s.data.copy() for s in senses])
            fused[tag] = self.fuse_chars(lattice, char_reps, words, rt)

        r_a, r_b = self.match_sentences(fused["a"], fused["b"], rt, trace)
        return self.classify(encoded.cls_vec, r_a, r_b, rt)

    def predict(self, text_a: str, text_b: str) -> float:
        with ad.no_grad():
            return self.forward_pair(text_a, text_b).item()

    def pair_loss(self, text_a: str, text_b: str, label: int,
                  rt: Runtime = EVAL) -> Tensor:
        prob = self.forward_pair(text_a, text_b, rt)
        return ad.bce_loss([prob], [label])

    def runtime(self, training: bool, rng: np.random.Generator | None = None) -> Runtime:
        return Runtime(training=training,
                       dropout=self.config.dropout if training else 0.0,
                       rng=rng)
