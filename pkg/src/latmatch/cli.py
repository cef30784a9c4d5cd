"""Command-line interface.

Subcommands: prepare, train, eval, predict, gradcheck, lattice-dump.
"""

from __future__ import annotations

import argparse
import sys
import time

from . import _kernels
from .config import RunConfig, load_config
from .checkpoint import load_checkpoint
from .data import load_pair_texts, load_pairs
from .encoder import CharVocab
from .lattice import STRATEGIES, build_lattice, load_dictionary, segment, to_dot
from .selfcheck import full_model_gradcheck
from .train import build_model, evaluate, train


def _add_config_args(p: argparse.ArgumentParser) -> None:
    p.add_argument("--config", help="key = value config file")
    p.add_argument("--set", dest="overrides", action="append", default=[],
                   metavar="KEY=VALUE", help="override a config key")


def _model_from_checkpoint(path: str):
    ckpt = load_checkpoint(path)
    config = RunConfig.from_dict(ckpt.config)
    model = build_model(config)
    model.params.load_arrays(ckpt.arrays)
    return model, config


def cmd_prepare(args) -> int:
    pairs = load_pairs(args.train)
    vocab = CharVocab.build([p.text_a for p in pairs] + [p.text_b for p in pairs])
    vocab.save(args.out)
    print(f"wrote {len(vocab)} vocabulary entries to {args.out}")
    return 0


def cmd_train(args) -> int:
    config = load_config(args.config, args.overrides)
    train_set = load_pairs(args.train)
    dev_set = load_pairs(args.dev) if args.dev else []
    model = build_model(config)
    t0 = time.time()
    result = train(config, model, train_set, dev_set, out_dir=args.out_dir)
    print(f"trained {result.epochs_run} epochs in {time.time() - t0:.1f}s "
          f"(kernels: {_kernels.backend()})")
    if result.best_dev_acc >= 0:
        print(f"best dev acc {result.best_dev_acc:.4f}")
    if result.checkpoint_path:
        print(f"checkpoint: {result.checkpoint_path}")
    return 0


def cmd_eval(args) -> int:
    model, _ = _model_from_checkpoint(args.checkpoint)
    scores = evaluate(model, load_pairs(args.data))
    print(f"acc {scores['acc']:.4f}  f1 {scores['f1']:.4f}  loss {scores['loss']:.4f}")
    return 0


def cmd_predict(args) -> int:
    model, _ = _model_from_checkpoint(args.checkpoint)
    pairs = load_pair_texts(args.data)
    out = open(args.out, "w", encoding="utf-8") if args.out else sys.stdout
    try:
        for a, b in pairs:
            out.write(f"{model.predict(a, b):.6f}\n")
    finally:
        if args.out:
            out.close()
    return 0


def cmd_gradcheck(args) -> int:
    t0 = time.time()
    result = full_model_gradcheck(samples=args.samples, seed=args.seed)
    elapsed = time.time() - t0
    print(f"{result} in {elapsed:.1f}s")
    ok = result.max_rel_err < args.tolerance
    print("PASS" if ok else "FAIL", f"(tolerance {args.tolerance:g})")
    return 0 if ok else 1


def cmd_lattice_dump(args) -> int:
    dictionaries = [load_dictionary(p) for p in args.dict] or [set()]
    strategies = args.strategy or list(STRATEGIES)
    paths = [segment(args.text, d, s) for d in dictionaries for s in strategies]
    lattice = build_lattice(args.text, paths)
    if args.dot:
        print(to_dot(lattice))
    else:
        for node in lattice.nodes:
            print(f"{node.node_id}\t{node.surface}\t[{node.start},{node.end}]")
    return 0


def main(argv=None) -> int:
    parser = argparse.ArgumentParser(
        prog="latmatch",
        description="Word-lattice semantic text matching")
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("prepare", help="build a character vocabulary")
    p.add_argument("--train", required=True, help="training pair TSV")
    p.add_argument("--out", required=True, help="output vocab TSV")
    p.set_defaults(fn=cmd_prepare)

    p = sub.add_parser("train", help="train a model")
    _add_config_args(p)
    p.add_argument("--train", required=True)
    p.add_argument("--dev")
    p.add_argument("--out-dir", required=True)
    p.set_defaults(fn=cmd_train)

    p = sub.add_parser("eval", help="evaluate a checkpoint")
    p.add_argument("--checkpoint", required=True)
    p.add_argument("--data", required=True)
    p.set_defaults(fn=cmd_eval)

    p = sub.add_parser("predict", help="write match probabilities, one per line")
    p.add_argument("--checkpoint", required=True)
    p.add_argument("--data", required=True)
    p.add_argument("--out")
    p.set_defaults(fn=cmd_predict)

    p = sub.add_parser("gradcheck",
                       help="verify end-to-end gradients on a built-in fixture")
    p.add_argument("--samples", type=int, default=250)
    p.add_argument("--seed", type=int, default=7)
    p.add_argument("--tolerance", type=float, default=1e-4)
    p.set_defaults(fn=cmd_gradcheck)

    p = sub.add_parser("lattice-dump", help="print the lattice for a sentence")
    p.add_argument("--text", required=True)
    p.add_argument("--dict", action="append", default=[],
                   help="dictionary file (repeatable)")
    p.add_argument("--strategy", action="append", choices=list(STRATEGIES),
                   help="segmentation strategy (repeatable; default all)")
    p.add_argument("--dot", action="store_true", help="emit Graphviz DOT")
    p.set_defaults(fn=cmd_lattice_dump)

    args = parser.parse_args(argv)
    return args.fn(args)


if __name__ == "__main__":
    raise SystemExit(main())
