"""File-backed word -> senses -> sememes knowledge base.

KB file: UTF-8 TSV, one sense per line:
    word<TAB>sense_id<TAB>sememe1,sememe2,...
Duplicate word lines concatenate senses in file order.

Embedding file: one sememe per line:
    sememe_id<TAB>v1 v2 ... v_dim
Every sememe referenced by a sense must have a row and all rows must
share one dimension. When no embedding file is given, embeddings are
drawn uniformly from +-1/sqrt(dim) (they are trainable downstream, so
random initialization keeps the whole pipeline exercisable).
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .lattice import normalize_text


class KnowledgeError(ValueError):
    pass


@dataclass(frozen=True)
class Sense:
    sense_id: str
    sememes: tuple[str, ...]


class KnowledgeBase:
    def __init__(self, entries: dict[str, list[Sense]],
                 sememe_embeddings: dict[str, np.ndarray], dim: int):
        self.entries = entries
        self.sememe_embeddings = sememe_embeddings
        self.dim = dim

    def lookup(self, word: str) -> list[Sense]:
        """Senses of `word` in file order; [] for unknown words."""
        return self.entries.get(normalize_text(word), [])

    def sememe_ids(self) -> list[str]:
        return sorted(self.sememe_embeddings)

    def referenced_sememes(self) -> set[str]:
        return {s for senses in self.entries.values()
                for sense in senses for s in sense.sememes}


def _parse_kb_lines(lines) -> dict[str, list[Sense]]:
    entries: dict[str, list[Sense]] = {}
    for lineno, raw in enumerate(lines, start=1):
        line = raw.rstrip("\r\n")
        if not line or line.startswith("#"):
            continue
        fields = line.split("\t")
        if len(fields) != 3:
            raise KnowledgeError(f"KB line {lineno}: expected 3 tab-separated "
                                 f"fields, got {len(fields)}")
        word, sense_id, sememe_field = fields
        sememes = tuple(s for s in sememe_field.split(",") if s)
        if not sememes:
            raise KnowledgeError(f"KB line {lineno}: sense {sense_id!r} has no sememes")
        entries.setdefault(normalize_text(word), []).append(Sense(sense_id, sememes))
    return entries


def _parse_embedding_lines(lines) -> tuple[dict[str, np.ndarray], int]:
    table: dict[str, np.ndarray] = {}
    dim = -1
    for lineno, raw in enumerate(lines, start=1):
        line = raw.rstrip("\r\n")
        if not line or line.startswith("#"):
            continue
        fields = line.split("\t")
        if len(fields) != 2:
            raise KnowledgeError(f"embedding line {lineno}: expected "
                                 f"'id<TAB>values', got {len(fields)} fields")
        sememe_id, values = fields
        vec = np.array([float(v) for v in values.split()], dtype=np.float64)
        if dim < 0:
            dim = vec.size
        elif vec.size != dim:
            raise KnowledgeError(f"embedding line {lineno}: dimension {vec.size} "
                                 f"differs from {dim}")
        table[sememe_id] = vec
    return table, max(dim, 0)


def kb_from_lines(kb_lines, emb_lines=None, *, dim: int = 200,
                  seed: int = 0) -> KnowledgeBase:
    """Build a knowledge base from iterables of lines.

    Without embedding lines, embeddings of dimension `dim` are generated
    from `seed` for every referenced sememe.
    """
    entries = _parse_kb_lines(kb_lines)
    referenced = {s for senses in entries.values()
                  for sense in senses for s in sense.sememes}

    if emb_lines is not None:
        table, file_dim = _parse_embedding_lines(emb_lines)
        missing = sorted(referenced - set(table))
        if missing:
            raise KnowledgeError(f"sememes without embeddings: {missing}")
        return KnowledgeBase(entries, table, file_dim if table else dim)

    rng = np.random.Generator(np.random.PCG64(np.random.SeedSequence([seed, 0x5E3])))
    bound = 1.0 / np.sqrt(dim)
    table = {s: rng.uniform(-bound, bound, size=dim) for s in sorted(referenced)}
    return KnowledgeBase(entries, table, dim)


def load_kb(kb_path: str, emb_path: str | None = None, *,
            dim: int = 200, seed: int = 0) -> KnowledgeBase:
    """Load and validate a knowledge base from files."""
    with open(kb_path, encoding="utf-8") as fh:
        kb_lines = fh.readlines()
    if emb_path is None:
        return kb_from_lines(kb_lines, dim=dim, seed=seed)
    with open(emb_path, encoding="utf-8") as fh:
        return kb_from_lines(kb_lines, fh.readlines(), dim=dim, seed=seed)


def serialize_kb(kb: KnowledgeBase) -> tuple[str, str]:
    """Render (kb_text, embedding_text); load(serialize(load(x))) is a fixed point."""
    kb_lines = []
    for word in kb.entries:
        for sense in kb.entries[word]:
            kb_lines.append(f"{word}\t{sense.sense_id}\t{','.join(sense.sememes)}")
    emb_lines = []
    for sememe_id in kb.sememe_ids():
        values = " ".join(repr(float(v)) for v in kb.sememe_embeddings[sememe_id])
        emb_lines.append(f"{sememe_id}\t{values}")
    return "\n".join(kb_lines) + "\n", "\n".join(emb_lines) + "\n"


def empty_kb(dim: int = 200) -> KnowledgeBase:
    return KnowledgeBase({}, {}, dim)
