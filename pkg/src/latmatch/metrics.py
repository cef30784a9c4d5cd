"""Accuracy / F1 over binary predictions, plus the metrics log writer."""

from __future__ import annotations

import json
from typing import Iterable, Sequence


def accuracy_f1(predictions: Sequence[int], labels: Sequence[int]) -> dict[str, float]:
    """Accuracy and positive-class F1 (0 when precision+recall is 0)."""
    if len(predictions) != len(labels):
        raise ValueError("predictions and labels differ in length")
    if not labels:
        raise ValueError("cannot evaluate an empty example list")
    tp = fp = fn = correct = 0
    for pred, label in zip(predictions, labels):
        if pred == label:
            correct += 1
        if pred == 1 and label == 1:
            tp += 1
        elif pred == 1 and label == 0:
            fp += 1
        elif pred == 0 and label == 1:
            fn += 1
    precision = tp / (tp + fp) if tp + fp else 0.0
    recall = tp / (tp + fn) if tp + fn else 0.0
    f1 = (2 * precision * recall / (precision + recall)
          if precision + recall else 0.0)
    return {"acc": correct / len(labels), "f1": f1}


def format_record(epoch: int, split: str, acc: float, f1: float,
                  loss: float) -> str:
    """One JSON line per evaluation; float repr keeps records bit-stable."""
    return json.dumps({"epoch": epoch, "split": split, "acc": acc,
                       "f1": f1, "loss": loss}, sort_keys=True)


class MetricsLog:
    def __init__(self, path: str | None = None):
        self.path = path
        self.records: list[str] = []
        if path:
            open(path, "w").close()

    def log(self, epoch: int, split: str, acc: float, f1: float, loss: float) -> None:
        line = format_record(epoch, split, acc, f1, loss)
        self.records.append(line)
        if self.path:
            with open(self.path, "a", encoding="utf-8") as fh:
                fh.write(line + "\n")
