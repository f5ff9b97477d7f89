"""Model and optimizer state on disk.

A checkpoint is a single ``.npz`` archive: every array is stored under a
prefixed key (``param/``, ``adam_m/``, ``adam_v/``) and everything else sits
in a JSON document under ``meta``.
"""

from __future__ import annotations

import json
from dataclasses import dataclass, field
from pathlib import Path
from typing import Optional

import numpy as np

from . import CHECKPOINT_FORMAT_VERSION
from .errors import CheckpointError
from .model import ModelConfig, Segmenter, Vocabulary


@dataclass
class Checkpoint:
    config: ModelConfig
    params: dict[str, np.ndarray]
    vocab: Optional[list[str]] = None
    adam_m: dict[str, np.ndarray] = field(default_factory=dict)
    adam_v: dict[str, np.ndarray] = field(default_factory=dict)
    step: int = 0
    epoch: int = 0  # epochs completed
    best_val_f1: float = float("-inf")
    best_epoch: int = -1
    train_config: dict = field(default_factory=dict)

    @classmethod
    def from_model(cls, model: Segmenter, **kw) -> Checkpoint:
        vocab = model.vocab.to_list() if model.vocab is not None else None
        return cls(model.config, model.state_dict(), vocab, **kw)

    def to_model(self, embeddings=None) -> Segmenter:
        vocab = Vocabulary.from_list(self.vocab) if self.vocab is not None else None
        return Segmenter(self.config, self.params, vocab, embeddings)

    def save(self, path: str | Path) -> None:
        meta = {
            "format_version": CHECKPOINT_FORMAT_VERSION,
            "config": self.config.to_dict(),
            "vocab": self.vocab,
            "step": self.step,
            "epoch": self.epoch,
            "best_val_f1": self.best_val_f1,
            "best_epoch": self.best_epoch,
            "train_config": self.train_config,
        }
        arrays = {"meta": np.array(json.dumps(meta, sort_keys=True))}
        for prefix, group in (("param", self.params), ("adam_m", self.adam_m), ("adam_v", self.adam_v)):
            for name, arr in group.items():
                arrays[f"{prefix}/{name}"] = arr
        with open(path, "wb") as fh:
            np.savez(fh, **arrays)

    @classmethod
    def load(cls, path: str | Path) -> Checkpoint:
        try:
            with np.load(path, allow_pickle=False) as z:
                meta = json.loads(str(z["meta"]))
                groups: dict[str, dict[str, np.ndarray]] = {"param": {}, "adam_m": {}, "adam_v": {}}
                for key in z.files:
                    if key == "meta":
                        continue
                    prefix, name = key.split("/", 1)
                    groups[prefix][name] = z[key]
        except (OSError, ValueError, KeyError) as exc:
            raise CheckpointError(f"cannot read checkpoint {path}: {exc}") from None
        if meta.get("format_version") != CHECKPOINT_FORMAT_VERSION:
            raise CheckpointError(f"unsupported checkpoint format {meta.get('format_version')!r}")
        return cls(
            config=ModelConfig.from_dict(meta["config"]),
            params=groups["param"],
            vocab=meta["vocab"],
            adam_m=groups["adam_m"],
            adam_v=groups["adam_v"],
            step=meta["step"],
            epoch=meta["epoch"],
            best_val_f1=meta["best_val_f1"],
            best_epoch=meta["best_epoch"],
            train_config=meta["train_config"],
        )

    def same_as(self, other: Checkpoint) -> bool:
        """Bitwise equality of all arrays and metadata."""

        def eq(a: dict, b: dict) -> bool:
            return a.keys() == b.keys() and all(
                a[k].dtype == b[k].dtype and a[k].tobytes() == b[k].tobytes() for k in a
            )

        return (
            self.config.to_dict() == other.config.to_dict()
            and self.vocab == other.vocab
            and (self.step, self.epoch, self.best_epoch) == (other.step, other.epoch, other.best_epoch)
            and self.best_val_f1 == other.best_val_f1
            and eq(self.params, other.params)
            and eq(self.adam_m, other.adam_m)
            and eq(self.adam_v, other.adam_v)
        )
