"""End-to-end gradient verification on a small built-in fixture.

Builds a complete matcher (tiny dims, two fusion layers, senses capped
at two per word) over a two-pair batch and compares analytic gradients
of the summed BCE loss against central finite differences. Dropout is
disabled; the forward pass is deterministic.
"""

from __future__ import annotations

from .autodiff import bce_loss
from .config import RunConfig
from .encoder import CharVocab
from .gradcheck import GradCheckResult, gradient_check
from .knowledge import kb_from_lines
from .model import LatticeMatcher

FIXTURE_PAIRS = [
    ("abcb", "abd", 1),
    ("cab", "bdb", 0),
]
FIXTURE_DICT = {"ab", "bc", "abc", "bd", "cb"}
FIXTURE_KB_LINES = [
    "ab\tab.1\tmetal,tool",
    "ab\tab.2\tplant",
    "bc\tbc.1\tmotion",
    "abc\tabc.1\tplace,big",
    "bd\tbd.1\ttool,motion",
]


def build_fixture_model(dim: int = 8, layers: int = 2, perspectives: int = 3,
                        seed: int = 7) -> LatticeMatcher:
    config = RunConfig(
        hidden_dim=dim, graph_layers=layers, perspectives=perspectives,
        dropout=0.0, seed=seed, max_len=32, enc_layers=2, enc_heads=4,
        sememe_dim=6, batch_size=2, epochs=1,
    ).validate()
    kb = kb_from_lines(FIXTURE_KB_LINES, dim=config.sememe_dim, seed=seed)
    vocab = CharVocab.build([a for a, _, _ in FIXTURE_PAIRS]
                            + [b for _, b, _ in FIXTURE_PAIRS])
    return LatticeMatcher(config, vocab, kb, [FIXTURE_DICT])


def full_model_gradcheck(samples: int = 250,
                         step: float | tuple[float, ...] = (1e-5, 1e-4, 1e-3),
                         seed: int = 7) -> GradCheckResult:
    model = build_fixture_model(seed=seed)

    def batch_loss():
        probs = [model.forward_pair(a, b) for a, b, _ in FIXTURE_PAIRS]
        return bce_loss(probs, [y for _, _, y in FIXTURE_PAIRS])

    return gradient_check(batch_loss, model.params, samples=samples,
                          step=step, seed=seed)
