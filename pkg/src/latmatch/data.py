"""Sentence-pair TSV ingestion."""

from __future__ import annotations

from dataclasses import dataclass

from .lattice import normalize_text


class DataError(ValueError):
    pass


@dataclass(frozen=True)
class PairExample:
    text_a: str
    text_b: str
    label: int


def load_pairs(path: str) -> list[PairExample]:
    """Read `text_a<TAB>text_b<TAB>label` lines (label 0/1, CRLF tolerated)."""
    examples = []
    with open(path, encoding="utf-8", newline="") as fh:
        for lineno, raw in enumerate(fh, start=1):
            line = raw.rstrip("\r\n")
            if not line:
                continue
            fields = line.split("\t")
            if len(fields) != 3:
                raise DataError(f"{path} line {lineno}: expected 3 tab-separated "
                                f"fields, got {len(fields)}")
            text_a, text_b, label_text = fields
            if label_text not in ("0", "1"):
                raise DataError(f"{path} line {lineno}: label must be 0 or 1, "
                                f"got {label_text!r}")
            if not text_a or not text_b:
                raise DataError(f"{path} line {lineno}: empty sentence")
            examples.append(PairExample(normalize_text(text_a),
                                        normalize_text(text_b), int(label_text)))
    return examples


def load_pair_texts(path: str) -> list[tuple[str, str]]:
    """Pairs for prediction: label column optional."""
    pairs = []
    with open(path, encoding="utf-8", newline="") as fh:
        for lineno, raw in enumerate(fh, start=1):
            line = raw.rstrip("\r\n")
            if not line:
                continue
            fields = line.split("\t")
            if len(fields) not in (2, 3):
                raise DataError(f"{path} line {lineno}: expected 2 or 3 fields, "
                                f"got {len(fields)}")
            if not fields[0] or not fields[1]:
                raise DataError(f"{path} line {lineno}: empty sentence")
            pairs.append((normalize_text(fields[0]), normalize_text(fields[1])))
    return pairs
