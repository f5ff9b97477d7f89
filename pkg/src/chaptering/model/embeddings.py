"""Precomputed sentence vectors keyed by sentence hash.

File format (JSONL, version 1): the first line is a header
``{"format": "sentence-embeddings", "version": 1, "dim": d}``; every other
line is ``{"sentence_hash": <sha256 hex of the UTF-8 text>, "vector": [...]}``.
"""

from __future__ import annotations

import hashlib
import json
from pathlib import Path
from typing import Iterable

import numpy as np

from ..errors import CheckpointError, MissingEmbedding

FORMAT = "sentence-embeddings"
VERSION = 1


def sentence_hash(text: str) -> str:
    return hashlib.sha256(text.encode("utf-8")).hexdigest()


class EmbeddingTable:
    def __init__(self, dim: int, vectors: dict[str, np.ndarray] | None = None):
        self.dim = dim
        self.vectors: dict[str, np.ndarray] = {}
        for key, vec in (vectors or {}).items():
            self.add_hash(key, vec)

    def add_hash(self, key: str, vector) -> None:
        vec = np.asarray(vector, dtype=np.float64)
        if vec.shape != (self.dim,):
            raise CheckpointError(f"vector for {key[:12]} has shape {vec.shape}, expected ({self.dim},)")
        self.vectors[key] = vec

    def add(self, text: str, vector) -> None:
        self.add_hash(sentence_hash(text), vector)

    def lookup(self, text: str) -> np.ndarray:
        try:
            return self.vectors[sentence_hash(text)]
        except KeyError:
            raise MissingEmbedding(f"no stored vector for sentence {text[:40]!r}") from None

    def __contains__(self, text: str) -> bool:
        return sentence_hash(text) in self.vectors

    def __len__(self) -> int:
        return len(self.vectors)

    def save(self, path) -> None:
        with open(path, "w", encoding="utf-8") as fh:
            fh.write(json.dumps({"format": FORMAT, "version": VERSION, "dim": self.dim}) + "\n")
            for key in sorted(self.vectors):
                fh.write(json.dumps({"sentence_hash": key, "vector": self.vectors[key].tolist()}) + "\n")

    @classmethod
    def load(cls, path) -> EmbeddingTable:
        lines = Path(path).read_text(encoding="utf-8").splitlines()
        if not lines:
            raise CheckpointError(f"{path}: empty embedding file")
        header = json.loads(lines[0])
        if header.get("format") != FORMAT or header.get("version") != VERSION:
            raise CheckpointError(f"{path}: unsupported embedding header {header}")
        table = cls(int(header["dim"]))
        for line in lines[1:]:
            if line.strip():
                rec = json.loads(line)
                table.add_hash(rec["sentence_hash"], rec["vector"])
        return table

    @classmethod
    def from_pairs(cls, pairs: Iterable[tuple[str, np.ndarray]], dim: int) -> EmbeddingTable:
        table = cls(dim)
        for text, vec in pairs:
            table.add(text, vec)
        return table
