"""Synthetic concatenation corpora with known topic boundaries."""

from __future__ import annotations

from dataclasses import asdict, dataclass

import numpy as np

from ..errors import BadConfig
from .types import Chapter, Document, Sentence


@dataclass(frozen=True)
class SynthConfig:
    """Shape of a synthetic corpus.

    Ranges are inclusive ``(low, high)`` pairs.  Each topic owns a disjoint
    slice of the vocabulary with its own word distribution; ``noise`` is the
    probability that a word is instead drawn uniformly from the whole
    vocabulary, which blurs the topic of short sentences.
    """

    n_docs: int = 100
    vocab_size: int = 500
    n_topics: int = 5
    segment_length: tuple[int, int] = (3, 11)
    segments_per_doc: tuple[int, int] = (6, 6)
    sentence_length: tuple[int, int] = (4, 8)
    noise: float = 0.0
    n_channels: int = 20
    seconds_per_word: float = 0.4
    concentration: float = 1.0  # Dirichlet parameter of the topic word distributions

    def __post_init__(self):
        for name in ("segment_length", "segments_per_doc", "sentence_length"):
            low, high = getattr(self, name)
            if low < 1 or high < low:
                raise BadConfig(f"{name} must be a non-empty range of positive integers, got {(low, high)}")
        if self.n_topics < 2:
            raise BadConfig(f"need at least 2 topics, got {self.n_topics}")
        if self.vocab_size < self.n_topics:
            raise BadConfig("vocabulary smaller than the topic count")
        if self.n_docs < 0 or self.n_channels < 1:
            raise BadConfig("n_docs must be >= 0 and n_channels >= 1")
        if not 0.0 <= self.noise <= 1.0:
            raise BadConfig(f"noise must be in [0, 1], got {self.noise}")
        if self.concentration <= 0:
            raise BadConfig(f"concentration must be positive, got {self.concentration}")

    def to_dict(self) -> dict:
        return asdict(self)


def word(i: int) -> str:
    return f"w{i:03d}"


def topic_distributions(config: SynthConfig, rng: np.random.Generator) -> list[tuple[np.ndarray, np.ndarray]]:
    """(word ids, probabilities) per topic over consecutive vocabulary slices."""
    edges = np.linspace(0, config.vocab_size, config.n_topics + 1).astype(int)
    out = []
    for t in range(config.n_topics):
        ids = np.arange(edges[t], edges[t + 1])
        out.append((ids, rng.dirichlet(np.full(len(ids), config.concentration))))
    return out


def gen_synthetic(config: SynthConfig, seed: int = 0) -> list[Document]:
    """Documents made of topic-homogeneous segments, neighbours always on
    different topics.  Chapters are titled ``Topic <k>``."""
    rng = np.random.default_rng(seed)
    topics = topic_distributions(config, rng)
    docs = []
    for d in range(config.n_docs):
        n_seg = int(rng.integers(config.segments_per_doc[0], config.segments_per_doc[1] + 1))
        sentences, labels, chapters = [], [], []
        clock = 0.0
        topic = -1
        for _ in range(n_seg):
            choices = [t for t in range(config.n_topics) if t != topic]
            topic = choices[int(rng.integers(len(choices)))]
            ids, probs = topics[topic]
            length = int(rng.integers(config.segment_length[0], config.segment_length[1] + 1))
            seg_start = clock
            for j in range(length):
                n_words = int(rng.integers(config.sentence_length[0], config.sentence_length[1] + 1))
                words = rng.choice(ids, size=n_words, p=probs)
                noisy = rng.random(n_words) < config.noise
                words[noisy] = rng.integers(0, config.vocab_size, size=int(noisy.sum()))
                text = " ".join(word(int(w)) for w in words) + "."
                duration = n_words * config.seconds_per_word
                sentences.append(Sentence(text, clock, clock + duration))
                labels.append(int(j == length - 1))
                clock += duration
            chapters.append(Chapter(f"Topic {topic}", seg_start, clock))
        docs.append(Document(f"synth-{seed}-{d:05d}", f"channel-{d % config.n_channels:03d}", sentences, labels, chapters))
    return docs
