"""Bounded-latency segmentation over a stream of sentences.

A session holds the sentence vectors seen so far.  After sentence ``t``
arrives it re-runs the masked document encoder over the prefix and emits the
decision for sentence ``t - c``; with an online schedule that position can
no longer be influenced by anything still to come, so the decision equals
the one batch prediction would make.
"""

from __future__ import annotations

from typing import NamedTuple

import numpy as np

from ..autograd import Tensor
from ..errors import BadSchedule, SessionClosed
from .network import Segmenter, document_probabilities, encode_sentences, pad_tokens

END = None


class Decision(NamedTuple):
    index: int
    label: int
    probability: float


class StreamSession:
    """Single-owner streaming state for one document.

    Decisions still pending at :data:`END` are flushed with the last sentence
    forced to a boundary, as in batch prediction.  With zero latency nothing
    is pending, so the last sentence keeps its thresholded label.

    Example:
        >>> session = StreamSession(model)            # doctest: +SKIP
        >>> for sentence in sentences:                 # doctest: +SKIP
        ...     for d in session.step(sentence):
        ...         print(d.index, d.label)
        >>> session.step(END)                          # doctest: +SKIP
    """

    def __init__(self, model: Segmenter, threshold: float = 0.5):
        schedule = model.config.schedule
        if not schedule.is_online:
            raise BadSchedule("streaming needs an online schedule with finite future context")
        self.model = model
        self.threshold = threshold
        self.latency = int(schedule.c)
        self._vectors: list[np.ndarray] = []
        self._next = 0
        self.closed = False

    def __len__(self) -> int:
        return len(self._vectors)

    def _vector(self, sentence) -> np.ndarray:
        model = self.model
        if isinstance(sentence, np.ndarray):
            return sentence.astype(model.config.np_dtype)
        text = sentence.text if hasattr(sentence, "text") else sentence
        if model.config.sentence_source == "frozen":
            return model.embeddings.lookup(text).astype(model.config.np_dtype)
        enc = model.encode_doc([text])
        ids, lengths = pad_tokens(enc.tokens)
        return encode_sentences(model, ids, lengths).data[0]

    def _probabilities(self) -> np.ndarray:
        vecs = np.stack(self._vectors)[None]
        return document_probabilities(self.model, Tensor(vecs), np.array([len(self._vectors)])).data[0]

    def step(self, sentence) -> list[Decision]:
        """Ingest one sentence (text, ``Sentence`` or precomputed vector), or
        :data:`END` to flush.

        Returns the decisions that became final, in index order.

        Raises:
            SessionClosed: the session was already flushed.
        """
        if self.closed:
            raise SessionClosed("stream already ended")
        if sentence is END:
            return self._flush()
        self._vectors.append(self._vector(sentence))
        ready = len(self._vectors) - 1 - self.latency
        if ready < self._next:
            return []
        probs = self._probabilities()
        out = []
        while self._next <= ready:
            p = float(probs[self._next])
            out.append(Decision(self._next, int(p > self.threshold), p))
            self._next += 1
        return out

    def _flush(self) -> list[Decision]:
        self.closed = True
        n = len(self._vectors)
        if self._next >= n:
            return []
        probs = self._probabilities()
        out = []
        for i in range(self._next, n):
            p = float(probs[i])
            label = 1 if i == n - 1 else int(p > self.threshold)
            out.append(Decision(i, label, p))
        self._next = n
        return out


def stream_step(session: StreamSession, sentence) -> list[Decision]:
    return session.step(sentence)
