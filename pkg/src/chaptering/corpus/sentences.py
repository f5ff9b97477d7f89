"""Sentence splitting of joined caption text, with per-character timing."""

from __future__ import annotations

import bisect
import re
from typing import Protocol, Sequence

from ..errors import EmptyDocument, NoPunctuation
from .types import CaptionCue, Sentence

ABBREVIATIONS = frozenset(
    "mr mrs ms dr prof sr jr st vs etc e.g i.e u.s u.k inc ltd co no fig approx dept est min max".split()
)
_CANDIDATE = re.compile(r"[.!?]+[\"'”’)\]]*(\s+)")
_OPENERS = "\"'“‘(["
_TERMINAL_RUN = re.compile(r"[.!?]+")


class SentenceTokenizer(Protocol):
    def spans(self, text: str) -> list[tuple[int, int]]:
        """Character spans ``[a, b)`` of the sentences of ``text``, in order,
        without leading or trailing whitespace."""
        ...


class RuleTokenizer:
    """Split after ``.``, ``!`` or ``?`` (plus closing quotes/brackets) when
    whitespace and then a capital letter or an opening quote follow.

    A period does not end a sentence after a listed abbreviation or a single
    capital initial.
    """

    def __init__(self, abbreviations: frozenset[str] = ABBREVIATIONS):
        self.abbreviations = abbreviations

    def _is_boundary(self, text: str, m: re.Match) -> bool:
        after = m.end()
        if after >= len(text):
            return False
        nxt = text[after]
        if not (nxt.isupper() or nxt in _OPENERS):
            return False
        if _TERMINAL_RUN.match(text, m.start()).group(0) == ".":
            word_start = max(text.rfind(" ", 0, m.start()), text.rfind("\n", 0, m.start())) + 1
            word = text[word_start : m.start()].lstrip(_OPENERS).lower()
            if word in self.abbreviations or (len(word) == 1 and word.isalpha()):
                return False
        return True

    def spans(self, text: str) -> list[tuple[int, int]]:
        out = []
        start = 0
        for m in _CANDIDATE.finditer(text):
            if self._is_boundary(text, m):
                out.append((start, m.start(1)))
                start = m.end()
        out.append((start, len(text)))
        return [(a, b) for a, b in (_strip_span(text, a, b) for a, b in out) if b > a]


def _strip_span(text: str, a: int, b: int) -> tuple[int, int]:
    while a < b and text[a].isspace():
        a += 1
    while b > a and text[b - 1].isspace():
        b -= 1
    return a, b


def punctuation_density_ok(text: str, per_words: int = 100) -> bool:
    """At least one terminal punctuation run per ``per_words`` words."""
    words = len(text.split())
    marks = len(_TERMINAL_RUN.findall(text))
    return marks * per_words >= words


def split_sentences(cues: Sequence[CaptionCue], tokenizer: SentenceTokenizer | None = None) -> list[Sentence]:
    """Join cue texts with single spaces, re-split into sentences and time
    each sentence by linear interpolation inside the cues its span touches.

    Within a cue of ``L`` characters, character offset ``x`` maps to
    ``start + (end - start) * x / L``.  A sentence starts at the time of its
    first character and ends at the time of the offset just past its last
    character, both measured in the cue holding that character.

    Raises:
        EmptyDocument: no cue text at all.
        NoPunctuation: fewer than one terminal mark per 100 words.
    """
    tokenizer = tokenizer or RuleTokenizer()
    cues = [c for c in cues if c.text]
    if not cues:
        raise EmptyDocument("no caption text")
    offsets, parts, pos = [], [], 0
    for cue in cues:
        offsets.append(pos)
        parts.append(cue.text)
        pos += len(cue.text) + 1
    text = " ".join(parts)
    if not punctuation_density_ok(text):
        raise NoPunctuation("fewer than one terminal punctuation mark per 100 words")

    def time_at(char: int, offset_in_cue: int) -> float:
        cue = cues[bisect.bisect_right(offsets, char) - 1]
        length = len(cue.text)
        return cue.start + (cue.end - cue.start) * offset_in_cue / length

    out = []
    for a, b in tokenizer.spans(text):
        ia = bisect.bisect_right(offsets, a) - 1
        ib = bisect.bisect_right(offsets, b - 1) - 1
        start = time_at(a, a - offsets[ia])
        end = time_at(b - 1, b - offsets[ib])
        out.append(Sentence(text[a:b], start, end))
    return out
