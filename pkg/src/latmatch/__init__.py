"""latmatch: word-lattice semantic text matching.

Sentence pairs are encoded jointly at the character level, overlaid
with word lattices built from several dictionary segmentations, fused
with sense knowledge through gated graph attention layers, and matched
with shared-parameter attention plus multi-perspective cosine
distances. Everything runs on a small built-in reverse-mode autodiff
engine (float64), with compiled kernels when the extension is built.
"""

from ._kernels import backend as kernel_backend
from .autodiff import Tensor, backward, no_grad
from .config import RunConfig, load_config
from .data import PairExample, load_pairs
from .encoder import CharVocab, TransformerEncoder
from .gradcheck import gradient_check
from .knowledge import KnowledgeBase, Sense, load_kb
from .lattice import LatticeGraph, WordNode, build_lattice, segment
from .model import LatticeMatcher
from .params import ParamTree
from .train import build_model, evaluate, train

__version__ = "0.1.0"

__all__ = [
    "Tensor", "backward", "no_grad", "gradient_check", "ParamTree",
    "RunConfig", "load_config", "PairExample", "load_pairs",
    "CharVocab", "TransformerEncoder", "KnowledgeBase", "Sense", "load_kb",
    "LatticeGraph", "WordNode", "build_lattice", "segment",
    "LatticeMatcher", "build_model", "evaluate", "train",
    "kernel_backend", "__version__",
]
