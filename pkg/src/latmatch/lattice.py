"""Word-lattice construction from dictionary segmentations.

A sentence is a sequence of characters (1-based indices, NFC-normalized
at ingestion). Each segmentation strategy produces one path — a list of
word nodes tiling the sentence — and the union of paths forms a DAG:
nodes are deduplicated by span, and node i connects to node j exactly
when j starts on the character after i ends. Forward/backward
reachability sets (each including the node itself) are precomputed; the
graph-transformer layers attend over them.
"""

from __future__ import annotations

import unicodedata
from dataclasses import dataclass

STRATEGIES = ("forward-max-match", "backward-max-match", "shortest-path")


class LatticeError(ValueError):
    pass


def normalize_text(text: str) -> str:
    return unicodedata.normalize("NFC", text)


@dataclass(frozen=True)
class WordNode:
    node_id: int
    start: int  # 1-based, inclusive
    end: int    # 1-based, inclusive
    surface: str

    def span(self) -> tuple[int, int]:
        return (self.start, self.end)

    def covers(self, pos: int) -> bool:
        return self.start <= pos <= self.end


def segment(text: str, dictionary: set[str], strategy: str) -> list[tuple[int, int]]:
    """Segment `text` into one tiling path of (start, end) spans.

    Single characters are always valid fallback words, so the result
    covers every position regardless of dictionary contents.
    """
    text = normalize_text(text)
    n = len(text)
    if n == 0:
        raise LatticeError("cannot segment empty text")
    max_len = max((len(w) for w in dictionary), default=1)

    if strategy == "forward-max-match":
        spans = []
        i = 0
        while i < n:
            j = min(n, i + max_len)
            while j > i + 1 and text[i:j] not in dictionary:
                j -= 1
            spans.append((i + 1, j))
            i = j
        return spans

    if strategy == "backward-max-match":
        spans = []
        j = n
        while j > 0:
            i = max(0, j - max_len)
            while i < j - 1 and text[i:j] not in dictionary:
                i += 1
            spans.append((i + 1, j))
            j = i
        spans.reverse()
        return spans

    if strategy == "shortest-path":
        # Fewest words overall; reconstruction prefers the longest word
        # at each position among optimal continuations.
        INF = n + 2
        best = [INF] * (n + 1)
        best[n] = 0
        for i in range(n - 1, -1, -1):
            for j in range(i + 1, min(n, i + max_len) + 1):
                if j == i + 1 or text[i:j] in dictionary:
                    if 1 + best[j] < best[i]:
                        best[i] = 1 + best[j]
        spans = []
        i = 0
        while i < n:
            chosen = i + 1
            for j in range(i + 1, min(n, i + max_len) + 1):
                if (j == i + 1 or text[i:j] in dictionary) and 1 + best[j] == best[i]:
                    chosen = j
            spans.append((i + 1, chosen))
            i = chosen
        return spans

    raise LatticeError(f"unknown segmentation strategy: {strategy!r}")


def _check_tiling(n: int, path: list[tuple[int, int]]) -> None:
    expected = 1
    for start, end in sorted(path):
        if start != expected or end < start:
            raise LatticeError(f"path does not tile the text: bad span ({start}, {end})")
        expected = end + 1
    if expected != n + 1:
        raise LatticeError(f"path does not tile the text: ends at {expected - 1} of {n}")


class LatticeGraph:
    def __init__(self, text: str, nodes: list[WordNode], edges: list[tuple[int, int]],
                 fw_reach: list[frozenset[int]], bw_reach: list[frozenset[int]]):
        self.text = text
        self.nodes = nodes
        self.edges = edges
        self.fw_reach = fw_reach
        self.bw_reach = bw_reach
        # nodes containing each character position (1-based)
        self.char_nodes: list[list[int]] = [
            [w.node_id for w in nodes if w.covers(pos)]
            for pos in range(1, len(text) + 1)
        ]

    def __len__(self) -> int:
        return len(self.nodes)

    def spans(self) -> list[tuple[int, int]]:
        return [w.span() for w in self.nodes]

    def paths(self) -> list[list[tuple[int, int]]]:
        """Trivial per-node paths; feeding them back into build_lattice
        must reproduce this lattice (idempotence)."""
        return [[w.span()] for w in self.nodes]


def reachability(n_nodes: int, edges: list[tuple[int, int]]
                 ) -> tuple[list[frozenset[int]], list[frozenset[int]]]:
    """Reflexive-transitive closure of a DAG, forward and backward."""
    succ = [[] for _ in range(n_nodes)]
    indeg = [0] * n_nodes
    for i, j in edges:
        succ[i].append(j)
        indeg[j] += 1

    order = [i for i in range(n_nodes) if indeg[i] == 0]
    k = 0
    while k < len(order):
        for j in succ[order[k]]:
            indeg[j] -= 1
            if indeg[j] == 0:
                order.append(j)
        k += 1
    if len(order) != n_nodes:
        raise LatticeError("cycle detected: reachability requires a DAG")

    fw = [set([i]) for i in range(n_nodes)]
    for i in reversed(order):
        for j in succ[i]:
            fw[i] |= fw[j]
    bw = [set([i]) for i in range(n_nodes)]
    for i in order:
        for j in succ[i]:
            bw[j] |= bw[i]
    return [frozenset(s) for s in fw], [frozenset(s) for s in bw]


def build_lattice(text: str, paths: list[list[tuple[int, int]]]) -> LatticeGraph:
    """Union the paths' spans into a lattice with reachability sets."""
    text = normalize_text(text)
    n = len(text)
    if n == 0:
        raise LatticeError("cannot build a lattice over empty text")
    if not paths:
        raise LatticeError("at least one segmentation path is required")
    for path in paths:
        _check_tiling(n, path)

    spans = sorted({(s, e) for path in paths for (s, e) in path})
    nodes = [WordNode(i, s, e, text[s - 1:e]) for i, (s, e) in enumerate(spans)]
    starts: dict[int, list[int]] = {}
    for w in nodes:
        starts.setdefault(w.start, []).append(w.node_id)
    edges = [(w.node_id, j) for w in nodes for j in starts.get(w.end + 1, [])]
    fw, bw = reachability(len(nodes), edges)
    return LatticeGraph(text, nodes, edges, fw, bw)


def lattice_from_dicts(text: str, dictionaries: list[set[str]],
                       strategies: list[str]) -> LatticeGraph:
    """One path per (dictionary, strategy) pair, then union."""
    text = normalize_text(text)
    paths = [segment(text, d, s) for d in dictionaries for s in strategies]
    return build_lattice(text, paths)


def load_dictionary(path: str) -> set[str]:
    """One word per line; blank lines and '#' comments are skipped."""
    words = set()
    with open(path, encoding="utf-8") as fh:
        for line in fh:
            word = line.strip()
            if word and not word.startswith("#"):
                words.add(normalize_text(word))
    return words


def to_dot(g: LatticeGraph) -> str:
    lines = ["digraph lattice {", "  rankdir=LR;"]
    for w in g.nodes:
        lines.append(f'  n{w.node_id} [label="{w.surface} [{w.start},{w.end}]"];')
    for i, j in g.edges:
        lines.append(f"  n{i} -> n{j};")
    lines.append("}")
    return "\n".join(lines)
