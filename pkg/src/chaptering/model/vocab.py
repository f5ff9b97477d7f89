"""Word-level vocabulary for the scratch sentence encoder."""

from __future__ import annotations

import re
from collections import Counter
from typing import Iterable

PAD = "<pad>"
OOV = "<unk>"
PAD_ID = 0
OOV_ID = 1

_TOKEN = re.compile(r"\w+|[^\w\s]")


def word_tokens(text: str) -> list[str]:
    """Lowercased word and punctuation tokens."""
    return _TOKEN.findall(text.lower())


class Vocabulary:
    """Maps tokens to integer ids; id 0 is padding and id 1 is out-of-vocabulary."""

    def __init__(self, tokens: Iterable[str]):
        self.itos = [PAD, OOV] + [t for t in tokens if t not in (PAD, OOV)]
        self.stoi = {t: i for i, t in enumerate(self.itos)}

    @classmethod
    def build(cls, texts: Iterable[str], max_size: int | None = None, min_count: int = 1) -> Vocabulary:
        """Most frequent tokens first, ties broken alphabetically."""
        counts = Counter(tok for text in texts for tok in word_tokens(text))
        ranked = sorted((t for t, n in counts.items() if n >= min_count), key=lambda t: (-counts[t], t))
        if max_size is not None:
            ranked = ranked[: max(0, max_size - 2)]
        return cls(ranked)

    def __len__(self) -> int:
        return len(self.itos)

    def encode(self, text: str) -> list[int]:
        return [self.stoi.get(tok, OOV_ID) for tok in word_tokens(text)]

    def to_list(self) -> list[str]:
        return list(self.itos)

    @classmethod
    def from_list(cls, itos: list[str]) -> Vocabulary:
        return cls(itos[2:])
