"""Title-generation inputs, an extractive baseline titler and ROUGE."""

from __future__ import annotations

import math
import re
from collections import Counter
from dataclasses import dataclass
from typing import Iterable, Mapping, NamedTuple, Optional, Sequence

from .corpus.types import TitleExample
from .errors import BadConfig, EmptySection, InputError

# decoding settings for a neural generator; the extractive baseline ignores them
DECODING = {"num_beams": 5, "top_k": 50, "top_p": 0.95}

STOPWORDS = frozenset(
    """a about above after again against all am an and any are as at be because been before being below
    between both but by can could did do does doing down during each few for from further had has have
    having he her here hers herself him himself his how i if in into is it its itself just let me more most
    my myself no nor not now of off on once only or other our ours ourselves out over own really same she
    should so some such than that the their theirs them themselves then there these they this those through
    to too under until up very was we were what when where which while who whom why will with would you
    your yours yourself yourselves okay ok yeah um uh like going get got gonna one also well right""".split()
)

_WORD = re.compile(r"[a-z0-9]+")


@dataclass(frozen=True)
class TitlingConfig:
    span: Optional[int] = None  # leading sentences kept; None keeps all
    context: str = "none"  # or "previous-titles"
    max_chars: Optional[int] = None
    delimiter: str = " | "
    separator: str = "\n\n"

    def __post_init__(self):
        if self.span is not None and self.span < 1:
            raise BadConfig(f"span must be >= 1, got {self.span}")
        if self.context not in ("none", "previous-titles"):
            raise BadConfig(f"unknown context mode {self.context!r}")
        if self.max_chars is not None and self.max_chars < 0:
            raise BadConfig("max_chars must be non-negative")


def build_title_input(example: TitleExample, config: TitlingConfig = TitlingConfig()) -> str:
    """Generator input for one section.

    The section is cut to its first ``span`` sentences.  In previous-titles
    mode the earlier titles, joined by ``delimiter``, come first, followed by
    ``separator``.  ``max_chars`` trims only the section text.
    """
    if not example.sentences:
        raise EmptySection(f"section {example.section_index} of {example.video_id} has no sentences")
    sentences = example.sentences if config.span is None else example.sentences[: config.span]
    section = " ".join(sentences)
    prefix = ""
    if config.context == "previous-titles" and example.previous_titles:
        prefix = config.delimiter.join(example.previous_titles) + config.separator
    if config.max_chars is not None:
        section = section[: max(0, config.max_chars - len(prefix))]
    return prefix + section


def content_words(text: str) -> list[str]:
    return [w for w in _WORD.findall(text.lower()) if w not in STOPWORDS]


def inverse_document_frequency(sections: Iterable[Sequence[str]]) -> dict[str, float]:
    """Smoothed ``log((1 + N) / (1 + df)) + 1`` over sections."""
    df: Counter = Counter()
    n = 0
    for sentences in sections:
        n += 1
        df.update(set(content_words(" ".join(sentences))))
    return {w: math.log((1 + n) / (1 + c)) + 1.0 for w, c in df.items()}


def extractive_title(
    sentences: Sequence[str],
    k: int = 3,
    idf: Optional[Mapping[str, float]] = None,
    span: Optional[int] = None,
) -> str:
    """The ``k`` highest tf-idf content words of the leading ``span``
    sentences, in order of first appearance, title-cased.

    Words missing from ``idf`` get the largest known weight (or 1 without a
    table); score ties go to the earlier word.
    """
    if k < 1:
        raise InputError(f"k must be >= 1, got {k}")
    if not sentences:
        raise EmptySection("no sentences")
    words = content_words(" ".join(sentences if span is None else sentences[:span]))
    if not words:
        raise EmptySection("section has no content words")
    tf = Counter(words)
    unseen = max(idf.values()) if idf else 1.0
    first = {}
    for i, w in enumerate(words):
        first.setdefault(w, i)
    scores = {w: tf[w] * (idf.get(w, unseen) if idf else 1.0) for w in tf}
    top = sorted(scores, key=lambda w: (-scores[w], first[w]))[:k]
    return " ".join(w.title() for w in sorted(top, key=first.__getitem__))


# ---------------------------------------------------------------------------
# ROUGE
# ---------------------------------------------------------------------------


class RougeScore(NamedTuple):
    precision: float
    recall: float
    f1: float


def rouge_tokens(text: str) -> list[str]:
    """Lowercased alphanumeric runs."""
    return _WORD.findall(text.lower())


def _score(overlap: int, cand: int, ref: int) -> RougeScore:
    p = overlap / cand if cand else 0.0
    r = overlap / ref if ref else 0.0
    f = 2 * p * r / (p + r) if p + r else 0.0
    return RougeScore(p, r, f)


def _ngrams(tokens: list[str], n: int) -> Counter:
    return Counter(tuple(tokens[i : i + n]) for i in range(len(tokens) - n + 1))


def rouge_n(reference: str, candidate: str, n: int = 1) -> RougeScore:
    """Clipped n-gram overlap."""
    if n < 1:
        raise InputError(f"n must be >= 1, got {n}")
    ref = _ngrams(rouge_tokens(reference), n)
    cand = _ngrams(rouge_tokens(candidate), n)
    overlap = sum((ref & cand).values())
    return _score(overlap, sum(cand.values()), sum(ref.values()))


def lcs_length(a: Sequence, b: Sequence) -> int:
    if not a or not b:
        return 0
    prev = [0] * (len(b) + 1)
    for x in a:
        cur = [0]
        for j, y in enumerate(b):
            cur.append(prev[j] + 1 if x == y else max(prev[j + 1], cur[j]))
        prev = cur
    return prev[-1]


def rouge_l(reference: str, candidate: str) -> RougeScore:
    """Longest-common-subsequence precision, recall and F1."""
    ref, cand = rouge_tokens(reference), rouge_tokens(candidate)
    return _score(lcs_length(ref, cand), len(cand), len(ref))


def rouge_scores(reference: str, candidate: str) -> dict[str, RougeScore]:
    return {
        "rouge1": rouge_n(reference, candidate, 1),
        "rouge2": rouge_n(reference, candidate, 2),
        "rougeL": rouge_l(reference, candidate),
    }


def corpus_rouge(pairs: Iterable[tuple[str, str]]) -> dict[str, RougeScore]:
    """Per-pair scores averaged component-wise over ``(reference, candidate)`` pairs."""
    sums: dict[str, list[float]] = {}
    count = 0
    for ref, cand in pairs:
        count += 1
        for name, score in rouge_scores(ref, cand).items():
            acc = sums.setdefault(name, [0.0, 0.0, 0.0])
            for i, v in enumerate(score):
                acc[i] += v
    if not count:
        raise InputError("no pairs to score")
    return {name: RougeScore(*(v / count for v in acc)) for name, acc in sums.items()}
