"""Assigning sentences to chapters and checking the assembled document."""

from __future__ import annotations

from typing import Optional, Sequence

import numpy as np

from ..errors import EmptyDocument, InputError
from .types import Chapter, Document, Sentence

INTRO = "Intro"
OUTRO = "Outro"


def chapters_from_json(obj, doc_end: float | None = None) -> list[Chapter]:
    """Chapters from ``[{title, start_seconds[, end_seconds]}, ...]`` or from an
    object holding such a list under ``"chapters"``.

    Each chapter ends where the next begins; the last one ends at its own
    ``end_seconds`` if given, else at ``doc_end`` (or its start when unknown).
    """
    if isinstance(obj, dict):
        obj = obj.get("chapters")
    if not isinstance(obj, list):
        raise InputError("chapter list must be a JSON array")
    try:
        raw = sorted(
            ((float(c["start_seconds"]), str(c["title"]).strip(), c.get("end_seconds")) for c in obj),
            key=lambda t: t[0],
        )
    except (KeyError, TypeError, ValueError) as exc:
        raise InputError(f"bad chapter entry: {exc}") from None
    chapters = []
    for i, (start, title, end) in enumerate(raw):
        if i + 1 < len(raw):
            stop = raw[i + 1][0]
        elif end is not None:
            stop = float(end)
        else:
            stop = max(start, doc_end) if doc_end is not None else start
        chapters.append(Chapter(title, start, stop))
    return chapters


def cover_chapters(sentences: Sequence[Sentence], chapters: Sequence[Chapter]) -> list[Chapter]:
    """Add an Intro before the first chapter and an Outro after the last when
    the sentences extend beyond them."""
    doc_start = sentences[0].start
    doc_end = max(s.end for s in sentences)
    out = list(chapters)
    if out[0].start > doc_start:
        out.insert(0, Chapter(INTRO, doc_start, out[0].start))
    if out[-1].end < doc_end:
        out.append(Chapter(OUTRO, out[-1].end, doc_end))
    return out


def assign_sentences(sentences: Sequence[Sentence], chapters: Sequence[Chapter]) -> np.ndarray:
    """Index of the chapter overlapping each sentence the most in time.

    Ties go to the earlier chapter.  A sentence overlapping no chapter (for
    instance a zero-length one) goes to the last chapter starting at or
    before it.
    """
    s_start = np.array([s.start for s in sentences])
    s_end = np.array([s.end for s in sentences])
    c_start = np.array([c.start for c in chapters])
    c_end = np.array([c.end for c in chapters])
    overlap = np.minimum(s_end[:, None], c_end[None]) - np.maximum(s_start[:, None], c_start[None])
    overlap = np.maximum(overlap, 0.0)
    best = np.argmax(overlap, axis=1)  # first maximum = earlier chapter
    none = overlap.max(axis=1) <= 0.0
    if none.any():
        fallback = np.searchsorted(c_start, s_start[none], side="right") - 1
        best[none] = np.maximum(fallback, 0)
    return best


def align_chapters(
    sentences: Sequence[Sentence], chapters: Sequence[Chapter], doc_id: str = "", channel: str = ""
) -> Document:
    """Label each sentence by the chapter it overlaps most.

    Intro/Outro chapters are added when needed, chapters left without a
    sentence are dropped, and ``labels`` mark the last sentence of each run
    of sentences sharing a chapter.

    Raises:
        EmptyDocument: no sentences.
        InputError: no chapters.
    """
    if not sentences:
        raise EmptyDocument("no sentences")
    if not chapters:
        raise InputError("at least one chapter is required")
    chapters = cover_chapters(sentences, sorted(chapters, key=lambda c: c.start))
    assigned = assign_sentences(sentences, chapters)
    labels = [int(i == len(assigned) - 1 or assigned[i] != assigned[i + 1]) for i in range(len(assigned))]
    kept = [chapters[int(assigned[i])] for i, y in enumerate(labels) if y]
    return Document(doc_id, channel, list(sentences), labels, kept)


def sanity_check(doc: Document) -> Optional[str]:
    """``None`` when the document is usable, else the rejection reason."""
    if not doc.chapters:
        return "NoChapters"
    if not doc.sentences:
        return "EmptyDocument"
    if len(doc.labels) != len(doc.sentences) or any(y not in (0, 1) for y in doc.labels):
        return "LabelMismatch"
    if sum(doc.labels) != len(doc.chapters) or doc.labels[-1] != 1:
        return "LabelMismatch"
    if len({(c.title, c.start) for c in doc.chapters}) != len(doc.chapters):
        return "LabelMismatch"  # a chapter split into two runs
    for a, b in zip(doc.sentences, doc.sentences[1:]):
        if b.start < a.start:
            return "NonMonotoneTimes"
    if any(s.end < s.start for s in doc.sentences):
        return "NonMonotoneTimes"
    return None
