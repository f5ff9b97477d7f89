"""Corpus statistics and the titles view."""

from __future__ import annotations

from collections import Counter
from typing import Iterable, Mapping, Optional, Sequence

import numpy as np

from ..errors import EmptyInput, InputError
from .types import Document, StatsReport, TitleExample

MAX_TITLE_CHARS = 75


def concentration_index(titles: Iterable[str], n: int = 20) -> float:
    """Share of all titles taken by the ``n`` most frequent ones (exact match
    after trimming whitespace, case kept)."""
    if n < 1:
        raise InputError(f"n must be >= 1, got {n}")
    counts = Counter(t.strip() for t in titles)
    total = sum(counts.values())
    if total == 0:
        raise EmptyInput("no titles")
    top = sum(c for _, c in counts.most_common(n))
    return top / total


def _mean_sd(values) -> tuple[float, float]:
    arr = np.asarray(list(values), dtype=np.float64)
    if arr.size == 0:
        return 0.0, 0.0
    return float(arr.mean()), float(arr.std())


def corpus_stats(docs: Sequence[Document], n: int = 20) -> StatsReport:
    """Means and population standard deviations of the usual corpus quantities."""
    if not docs:
        raise EmptyInput("empty corpus")
    doc_len = [len(d) for d in docs]
    seg_len, seg_min, per_doc, title_words, titles = [], [], [], [], []
    for d in docs:
        segments = d.segments()
        per_doc.append(len(segments))
        for seg in segments:
            seg_len.append(len(seg))
            seg_min.append((seg[-1].end - seg[0].start) / 60.0)
        for c in d.chapters:
            title_words.append(len(c.title.split()))
            titles.append(c.title)
    return StatsReport(
        len(docs),
        *_mean_sd(doc_len),
        *_mean_sd(seg_len),
        *_mean_sd(per_doc),
        *_mean_sd(seg_min),
        *_mean_sd(title_words),
        n,
        concentration_index(titles, n) if titles else 0.0,
    )


def build_titles_view(
    docs: Sequence[Document], split: Optional[Mapping[str, str]] = None, max_chars: int = MAX_TITLE_CHARS
) -> list[TitleExample]:
    """One example per chapter whose title fits ``max_chars``.

    Previous titles list every earlier chapter of the same video, including
    ones dropped for length; every example carries its video's partition.
    """
    out = []
    for d in docs:
        part = split.get(d.id) if split is not None else None
        previous: list[str] = []
        for index, (chapter, seg) in enumerate(zip(d.chapters, d.segments())):
            if len(chapter.title) <= max_chars:
                out.append(TitleExample(d.id, index, [s.text for s in seg], chapter.title, list(previous), part))
            previous.append(chapter.title)
    return out
