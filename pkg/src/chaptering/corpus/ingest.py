"""From caption and chapter files to accepted documents plus an exclusion report."""

from __future__ import annotations

import json
from collections import Counter
from dataclasses import dataclass, field
from pathlib import Path
from typing import Iterable, Optional

from ..errors import ExclusionError, InputError
from .align import align_chapters, chapters_from_json, sanity_check
from .sentences import SentenceTokenizer, split_sentences
from .types import Document
from .vtt import parse_vtt, repair_cues


@dataclass
class ExclusionReport:
    total: int = 0
    reasons: Counter = field(default_factory=Counter)
    excluded: list[str] = field(default_factory=list)

    @property
    def rate(self) -> float:
        return len(self.excluded) / self.total if self.total else 0.0

    def add(self, doc_id: str, reason: str) -> None:
        self.reasons[reason] += 1
        self.excluded.append(doc_id)

    def to_dict(self) -> dict:
        return {
            "total": self.total,
            "excluded_count": len(self.excluded),
            "exclusion_rate": self.rate,
            "reasons": dict(sorted(self.reasons.items())),
            "excluded": list(self.excluded),
        }


def ingest_document(
    raw_vtt: bytes | str,
    chapters_obj,
    doc_id: str,
    channel: str = "",
    tokenizer: Optional[SentenceTokenizer] = None,
) -> Document:
    """Parse, repair, split, align and check one video.

    Raises:
        ExclusionError: the video must be left out; ``reason`` names why.
    """
    cues = repair_cues(parse_vtt(raw_vtt))
    sentences = split_sentences(cues, tokenizer)
    try:
        chapters = chapters_from_json(chapters_obj, doc_end=max(s.end for s in sentences))
    except InputError as exc:
        raise ExclusionError(str(exc), reason="BadChapters") from None
    if not chapters:
        raise ExclusionError("no chapters", reason="NoChapters")
    doc = align_chapters(sentences, chapters, doc_id, channel)
    reason = sanity_check(doc)
    if reason:
        raise ExclusionError(f"failed sanity check: {reason}", reason=reason)
    return doc


def channel_of(chapters_obj, default: str) -> str:
    if isinstance(chapters_obj, dict) and chapters_obj.get("channel"):
        return str(chapters_obj["channel"])
    return default


def ingest_pairs(
    items: Iterable[tuple[str, bytes | str, object]],
    tokenizer: Optional[SentenceTokenizer] = None,
) -> tuple[list[Document], ExclusionReport]:
    """Ingest ``(doc_id, raw_vtt, chapters_obj)`` triples; a ``None`` chapter
    object counts as a missing chapter list."""
    report = ExclusionReport()
    docs = []
    for doc_id, raw, chapters_obj in items:
        report.total += 1
        if chapters_obj is None:
            report.add(doc_id, "NoChapters")
            continue
        try:
            docs.append(ingest_document(raw, chapters_obj, doc_id, channel_of(chapters_obj, doc_id), tokenizer))
        except ExclusionError as exc:
            report.add(doc_id, exc.reason)
    return docs, report


def video_id(path: Path) -> str:
    """``abc.en.vtt`` -> ``abc``."""
    return path.name.split(".", 1)[0]


def ingest_directories(
    vtt_dir: str | Path, chapters_dir: str | Path, tokenizer: Optional[SentenceTokenizer] = None
) -> tuple[list[Document], ExclusionReport]:
    """Pair ``<id>*.vtt`` files with ``<id>.json`` chapter files, in id order."""
    chapters_dir = Path(chapters_dir)

    def items():
        for path in sorted(Path(vtt_dir).glob("*.vtt")):
            doc_id = video_id(path)
            chapter_path = chapters_dir / f"{doc_id}.json"
            chapters_obj = None
            if chapter_path.exists():
                try:
                    chapters_obj = json.loads(chapter_path.read_text(encoding="utf-8"))
                except json.JSONDecodeError:
                    chapters_obj = {"chapters": "invalid"}
            yield doc_id, path.read_bytes(), chapters_obj

    return ingest_pairs(items(), tokenizer)
