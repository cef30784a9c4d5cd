"""Run configuration: defaults, key=value file parsing, CLI overrides."""

from __future__ import annotations

from dataclasses import dataclass, fields
from typing import Any

from .lattice import STRATEGIES


class ConfigError(ValueError):
    pass


@dataclass
class RunConfig:
    hidden_dim: int = 128
    graph_layers: int = 2
    perspectives: int = 20
    dropout: float = 0.2
    lr: float = 0.0005
    warmup_ratio: float = 0.1
    batch_size: int = 32
    epochs: int = 10
    patience: int = 5
    seed: int = 42
    max_len: int = 128
    enc_layers: int = 2
    enc_heads: int = 4
    encoder_lr_factor: float = 1.0
    seg_strategies: tuple[str, ...] = STRATEGIES
    single_segmenter: str = ""
    dict_paths: tuple[str, ...] = ()
    vocab_path: str = ""
    kb_path: str = ""
    sememe_emb_path: str = ""
    sememe_dim: int = 200
    train_sememe_embeddings: bool = True
    use_sense: bool = True
    use_gru: bool = True

    def validate(self) -> "RunConfig":
        if self.graph_layers < 0:
            raise ConfigError("graph_layers must be >= 0")
        if self.perspectives < 1:
            raise ConfigError("perspectives must be >= 1")
        if not 0.0 <= self.dropout < 1.0:
            raise ConfigError("dropout must be in [0, 1)")
        if self.hidden_dim % self.enc_heads != 0:
            raise ConfigError("hidden_dim must be divisible by enc_heads")
        if not 0.0 <= self.warmup_ratio <= 1.0:
            raise ConfigError("warmup_ratio must be in [0, 1]")
        for s in self.seg_strategies:
            if s not in STRATEGIES:
                raise ConfigError(f"unknown segmentation strategy {s!r}")
        if self.single_segmenter and self.single_segmenter not in STRATEGIES:
            raise ConfigError(f"unknown segmentation strategy {self.single_segmenter!r}")
        return self

    def effective_strategies(self) -> tuple[str, ...]:
        """The lattice uses all configured strategies unless the
        single-segmenter ablation restricts it to one path."""
        if self.single_segmenter:
            return (self.single_segmenter,)
        return tuple(self.seg_strategies)

    def to_dict(self) -> dict[str, Any]:
        out = {}
        for f in fields(self):
            value = getattr(self, f.name)
            out[f.name] = list(value) if isinstance(value, tuple) else value
        return out

    @classmethod
    def from_dict(cls, data: dict[str, Any]) -> "RunConfig":
        known = {f.name: f for f in fields(cls)}
        kwargs = {}
        for key, value in data.items():
            if key not in known:
                raise ConfigError(f"unknown config key {key!r}")
            if isinstance(value, list):
                value = tuple(value)
            kwargs[key] = value
        return cls(**kwargs).validate()


def _coerce(name: str, text: str, target_type: type) -> Any:
    text = text.strip()
    try:
        if target_type is bool:
            lowered = text.lower()
            if lowered in ("true", "1", "yes"):
                return True
            if lowered in ("false", "0", "no"):
                return False
            raise ValueError(text)
        if target_type is int:
            return int(text)
        if target_type is float:
            return float(text)
        if target_type is str:
            return text
        # remaining fields are tuples of strings (comma separated)
        return tuple(part.strip() for part in text.split(",") if part.strip())
    except ValueError as exc:
        raise ConfigError(f"config key {name!r}: cannot parse {text!r}") from exc


_FIELD_TYPES = {
    f.name: (bool if f.type == "bool" else
             int if f.type == "int" else
             float if f.type == "float" else
             str if f.type == "str" else tuple)
    for f in fields(RunConfig)
}


def parse_assignments(lines, source: str) -> dict[str, Any]:
    values: dict[str, Any] = {}
    for lineno, raw in enumerate(lines, start=1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        if "=" not in line:
            raise ConfigError(f"{source} line {lineno}: expected 'key = value'")
        key, text = line.split("=", 1)
        key = key.strip()
        if key not in _FIELD_TYPES:
            raise ConfigError(f"{source} line {lineno}: unknown config key {key!r}")
        values[key] = _coerce(key, text, _FIELD_TYPES[key])
    return values


def load_config(path: str | None = None, overrides: list[str] | None = None) -> RunConfig:
    """Build a RunConfig from an optional key=value file plus --set overrides."""
    values: dict[str, Any] = {}
    if path:
        with open(path, encoding="utf-8") as fh:
            values.update(parse_assignments(fh, path))
    if overrides:
        values.update(parse_assignments(overrides, "--set"))
    cfg = RunConfig(**values)
    return cfg.validate()
