#!/usr/bin/env python3
"""Generate the shipped synthetic corpus under data/synthetic/.

Construction: six two-character content words fall into three synonym
groups; group membership is encoded in the knowledge base through
shared sememes. A sentence is a content word wrapped in filler
characters. A pair is positive when both sentences carry words of the
same group. Two dictionaries yield genuinely different segmentations
(the second one contains bigrams that straddle the filler/content
boundary), so the lattice union is wider than any single path.

Deterministic: overwrite-in-place on rerun.
"""

import argparse
import pathlib

import numpy as np

GROUPS = {
    "money": ["ab", "cd"],
    "travel": ["ef", "gh"],
    "food": ["ij", "kl"],
}
FILLERS = "mnop"
SEMEME_DIM = 16

KB_ROWS = [
    ("ab", "ab.1", "money,exchange"),
    ("ab", "ab.2", "symbol"),
    ("cd", "cd.1", "money,value"),
    ("ef", "ef.1", "travel,motion"),
    ("ef", "ef.2", "distance"),
    ("gh", "gh.1", "travel,road"),
    ("ij", "ij.1", "food,taste"),
    ("kl", "kl.1", "food,cook"),
    ("kl", "kl.2", "vessel"),
]


def make_sentence(rng, word):
    head = "".join(rng.choice(list(FILLERS), size=rng.integers(1, 3)))
    tail = "".join(rng.choice(list(FILLERS), size=rng.integers(1, 3)))
    return head + word + tail


def make_pairs(rng, count):
    words = [w for group in GROUPS.values() for w in group]
    group_of = {w: g for g, ws in GROUPS.items() for w in ws}
    pairs = []
    for i in range(count):
        if i % 2 == 0:  # positive: same synonym group
            w1 = words[rng.integers(len(words))]
            candidates = GROUPS[group_of[w1]]
            w2 = candidates[rng.integers(len(candidates))]
            label = 1
        else:  # negative: different groups
            w1 = words[rng.integers(len(words))]
            w2 = words[rng.integers(len(words))]
            while group_of[w2] == group_of[w1]:
                w2 = words[rng.integers(len(words))]
            label = 0
        pairs.append((make_sentence(rng, w1), make_sentence(rng, w2), label))
    return pairs


def main():
    parser = argparse.ArgumentParser()
    parser.add_argument("--out", default="data/synthetic")
    parser.add_argument("--seed", type=int, default=20240)
    args = parser.parse_args()
    out = pathlib.Path(args.out)
    out.mkdir(parents=True, exist_ok=True)
    rng = np.random.default_rng(args.seed)

    train = make_pairs(rng, 64)
    dev = make_pairs(rng, 16)
    for name, pairs in (("train.tsv", train), ("dev.tsv", dev)):
        with open(out / name, "w", encoding="utf-8") as fh:
            for a, b, y in pairs:
                fh.write(f"{a}\t{b}\t{y}\n")

    content = [w for ws in GROUPS.values() for w in ws]
    with open(out / "dict_a.txt", "w", encoding="utf-8") as fh:
        fh.write("# primary dictionary: content words\n")
        for w in content:
            fh.write(w + "\n")
    with open(out / "dict_b.txt", "w", encoding="utf-8") as fh:
        fh.write("# alternative dictionary: boundary-straddling bigrams\n")
        for w in content:
            for f in FILLERS[:2]:
                fh.write(f + w[0] + "\n")
        for f1 in FILLERS[:2]:
            for f2 in FILLERS[2:]:
                fh.write(f1 + f2 + "\n")

    with open(out / "kb.tsv", "w", encoding="utf-8") as fh:
        for word, sense_id, sememes in KB_ROWS:
            fh.write(f"{word}\t{sense_id}\t{sememes}\n")

    sememes = sorted({s for _, _, field in KB_ROWS for s in field.split(",")})
    with open(out / "sememe_vec.tsv", "w", encoding="utf-8") as fh:
        for s in sememes:
            vec = rng.uniform(-0.25, 0.25, size=SEMEME_DIM)
            fh.write(s + "\t" + " ".join(repr(float(v)) for v in vec) + "\n")

    # Vocabulary over the training split (what `latmatch prepare` builds).
    from latmatch.encoder import CharVocab

    vocab = CharVocab.build([a for a, _, _ in train] + [b for _, b, _ in train])
    vocab.save(str(out / "vocab.tsv"))

    with open(out / "config.cfg", "w", encoding="utf-8") as fh:
        fh.write(f"""# Overfit configuration for the synthetic corpus.
hidden_dim = 32
graph_layers = 2
perspectives = 5
dropout = 0.1
lr = 0.002
warmup_ratio = 0.1
batch_size = 8
epochs = 30
seed = 11
max_len = 32
sememe_dim = {SEMEME_DIM}
dict_paths = {out / 'dict_a.txt'},{out / 'dict_b.txt'}
vocab_path = {out / 'vocab.tsv'}
kb_path = {out / 'kb.tsv'}
sememe_emb_path = {out / 'sememe_vec.tsv'}
""")
    print(f"wrote corpus to {out}/")


if __name__ == "__main__":
    main()
