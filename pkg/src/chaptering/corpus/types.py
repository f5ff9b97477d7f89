"""Timed text units and the chapter-labelled document built from them."""

from __future__ import annotations

from dataclasses import asdict, dataclass, field
from typing import Optional


@dataclass(frozen=True)
class CaptionCue:
    start: float  # seconds
    end: float  # seconds
    text: str


@dataclass(frozen=True)
class Sentence:
    text: str
    start: float
    end: float


@dataclass(frozen=True)
class Chapter:
    title: str
    start: float
    end: float


@dataclass
class Document:
    """A transcript split into sentences, with segment-final boundary labels.

    ``labels[i] == 1`` iff sentence ``i`` is the last sentence of its
    chapter, so the final sentence is always labelled 1 and the number of
    ones equals the number of chapters.
    """

    id: str
    channel: str
    sentences: list[Sentence]
    labels: list[int]
    chapters: list[Chapter]

    def __len__(self) -> int:
        return len(self.sentences)

    @property
    def texts(self) -> list[str]:
        return [s.text for s in self.sentences]

    @property
    def masses(self) -> tuple[int, ...]:
        """Number of sentences in each segment."""
        out, run = [], 0
        for y in self.labels:
            run += 1
            if y:
                out.append(run)
                run = 0
        if run:
            out.append(run)
        return tuple(out)

    def segments(self) -> list[list[Sentence]]:
        """Sentences grouped by chapter, in order."""
        groups, current = [], []
        for sentence, y in zip(self.sentences, self.labels):
            current.append(sentence)
            if y:
                groups.append(current)
                current = []
        if current:
            groups.append(current)
        return groups

    def to_dict(self) -> dict:
        return {
            "id": self.id,
            "channel": self.channel,
            "sentences": [asdict(s) for s in self.sentences],
            "labels": list(self.labels),
            "chapters": [asdict(c) for c in self.chapters],
        }

    @classmethod
    def from_dict(cls, d: dict) -> Document:
        return cls(
            id=str(d["id"]),
            channel=str(d.get("channel", "")),
            sentences=[Sentence(s["text"], float(s["start"]), float(s["end"])) for s in d["sentences"]],
            labels=[int(y) for y in d["labels"]],
            chapters=[Chapter(c["title"], float(c["start"]), float(c["end"])) for c in d.get("chapters", [])],
        )


@dataclass
class TitleExample:
    """One (section, title) pair of the titles view."""

    video_id: str
    section_index: int
    sentences: list[str]
    title: str
    previous_titles: list[str] = field(default_factory=list)
    split: Optional[str] = None

    @property
    def section_text(self) -> str:
        return " ".join(self.sentences)

    def to_dict(self) -> dict:
        return {
            "video_id": self.video_id,
            "section_index": self.section_index,
            "section_text": self.section_text,
            "sentences": list(self.sentences),
            "title": self.title,
            "previous_titles": list(self.previous_titles),
            "split": self.split,
        }

    @classmethod
    def from_dict(cls, d: dict) -> TitleExample:
        return cls(
            video_id=d["video_id"],
            section_index=int(d["section_index"]),
            sentences=list(d["sentences"]),
            title=d["title"],
            previous_titles=list(d.get("previous_titles", [])),
            split=d.get("split"),
        )


@dataclass
class StatsReport:
    """Corpus statistics; every ``*_sd`` is a population standard deviation."""

    documents: int
    doc_length_mean: float
    doc_length_sd: float
    segment_length_mean: float
    segment_length_sd: float
    segments_per_doc_mean: float
    segments_per_doc_sd: float
    segment_minutes_mean: float
    segment_minutes_sd: float
    title_words_mean: float
    title_words_sd: float
    concentration_n: int
    concentration_index: float

    def to_dict(self) -> dict:
        return asdict(self)
