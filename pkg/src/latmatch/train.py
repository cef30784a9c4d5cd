"""Training loop with seeded shuffling, RMSProp and early stopping."""

from __future__ import annotations

import os
from dataclasses import dataclass

import numpy as np

from . import autodiff as ad
from .autodiff import backward
from .checkpoint import save_checkpoint
from .config import RunConfig
from .data import PairExample
from .encoder import CharVocab
from .knowledge import empty_kb, load_kb
from .lattice import load_dictionary
from .metrics import MetricsLog, accuracy_f1
from .model import LatticeMatcher
from .optim import OptimError, RmsProp, lr_schedule


class TrainingDiverged(RuntimeError):
    pass


def build_model(config: RunConfig, vocab: CharVocab | None = None) -> LatticeMatcher:
    """Assemble vocab, knowledge base and dictionaries per the config."""
    if vocab is None:
        if not config.vocab_path:
            raise ValueError("config.vocab_path is required to build a model")
        vocab = CharVocab.load(config.vocab_path)
    if config.kb_path:
        kb = load_kb(config.kb_path,
                     config.sememe_emb_path or None,
                     dim=config.sememe_dim, seed=config.seed)
    else:
        kb = empty_kb(config.sememe_dim)
    dictionaries = [load_dictionary(p) for p in config.dict_paths]
    return LatticeMatcher(config, vocab, kb, dictionaries)


def evaluate(model: LatticeMatcher, examples: list[PairExample]) -> dict[str, float]:
    """Accuracy, positive-class F1 and summed BCE loss at threshold 0.5."""
    if not examples:
        raise ValueError("cannot evaluate an empty example list")
    preds, labels = [], []
    total_loss = 0.0
    with ad.no_grad():
        for ex in examples:
            prob = model.forward_pair(ex.text_a, ex.text_b).item()
            preds.append(1 if prob >= 0.5 else 0)
            labels.append(ex.label)
            clamped = min(max(prob, 1e-7), 1.0 - 1e-7)
            total_loss += -(ex.label * np.log(clamped)
                            + (1 - ex.label) * np.log(1.0 - clamped))
    scores = accuracy_f1(preds, labels)
    scores["loss"] = float(total_loss)
    return scores


@dataclass
class TrainResult:
    epochs_run: int
    best_dev_acc: float
    history: list[dict[str, float]]
    checkpoint_path: str | None


def train(config: RunConfig, model: LatticeMatcher,
          train_set: list[PairExample], dev_set: list[PairExample],
          out_dir: str | None = None,
          stop_at_train_acc: float | None = None) -> TrainResult:
    """Deterministic training: shuffling and dropout draw from streams
    derived only from the config seed, so identical configs reproduce
    identical metrics logs and checkpoints byte for byte."""
    if not train_set:
        raise ValueError("empty training set")
    if out_dir:
        os.makedirs(out_dir, exist_ok=True)
    log = MetricsLog(os.path.join(out_dir, "metrics.jsonl") if out_dir else None)

    shuffle_rng = np.random.Generator(np.random.PCG64(
        np.random.SeedSequence([config.seed, 1])))
    dropout_rng = np.random.Generator(np.random.PCG64(
        np.random.SeedSequence([config.seed, 2])))

    optimizer = RmsProp(model.params,
                        lr_factors={"enc": config.encoder_lr_factor})
    batches_per_epoch = (len(train_set) + config.batch_size - 1) // config.batch_size
    total_steps = max(1, config.epochs * batches_per_epoch)

    best_dev_acc = -1.0
    epochs_without_improvement = 0
    history = []
    step = 0
    rt = model.runtime(training=True, rng=dropout_rng)

    for epoch in range(1, config.epochs + 1):
        order = shuffle_rng.permutation(len(train_set))
        for batch_start in range(0, len(order), config.batch_size):
            step += 1
            optimizer.zero_grad()
            for idx in order[batch_start:batch_start + config.batch_size]:
                ex = train_set[idx]
                loss = model.pair_loss(ex.text_a, ex.text_b, ex.label, rt)
                if not np.isfinite(loss.data):
                    raise TrainingDiverged(f"non-finite loss at step {step}")
                backward(loss)
            try:
                optimizer.step(lr_schedule(step, total_steps, config.lr,
                                           config.warmup_ratio))
            except OptimError as exc:
                raise TrainingDiverged(f"step {step}: {exc}") from exc

        train_scores = evaluate(model, train_set)
        log.log(epoch, "train", train_scores["acc"], train_scores["f1"],
                train_scores["loss"])
        record = {"epoch": epoch, "train_acc": train_scores["acc"]}
        if dev_set:
            dev_scores = evaluate(model, dev_set)
            log.log(epoch, "dev", dev_scores["acc"], dev_scores["f1"],
                    dev_scores["loss"])
            record["dev_acc"] = dev_scores["acc"]
            if dev_scores["acc"] > best_dev_acc:
                best_dev_acc = dev_scores["acc"]
                epochs_without_improvement = 0
            else:
                epochs_without_improvement += 1
        history.append(record)
        if stop_at_train_acc is not None and train_scores["acc"] >= stop_at_train_acc:
            break
        if dev_set and epochs_without_improvement >= config.patience:
            break

    ckpt_path = None
    if out_dir:
        ckpt_path = os.path.join(out_dir, "model.ckpt")
        save_checkpoint(ckpt_path, config.to_dict(), model.params)
    return TrainResult(epochs_run=len(history), best_dev_acc=best_dev_acc,
                       history=history, checkpoint_path=ckpt_path)
