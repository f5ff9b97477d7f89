"""WebVTT parsing and timestamp repair."""

from __future__ import annotations

import bisect
import html
import re
from typing import Sequence

from ..errors import MalformedVtt, UnfixableTimestamps
from .types import CaptionCue

_TIMESTAMP = re.compile(r"^(?:(\d+):)?(\d{1,2}):(\d{2})[.,](\d{3})$")
_TAG = re.compile(r"<[^>]*>")
_SPACE = re.compile(r"\s+")
_SKIP_BLOCKS = ("NOTE", "STYLE", "REGION")


def parse_timestamp(value: str) -> float:
    """``H:MM:SS.mmm`` or ``MM:SS.mmm`` to seconds."""
    m = _TIMESTAMP.match(value.strip())
    if not m:
        raise MalformedVtt(f"unparseable timestamp {value!r}")
    hours, minutes, seconds, millis = m.groups()
    if int(minutes) > 59 or int(seconds) > 59:
        raise MalformedVtt(f"timestamp field out of range: {value!r}")
    return int(hours or 0) * 3600 + int(minutes) * 60 + int(seconds) + int(millis) / 1000.0


def clean_cue_text(lines: Sequence[str]) -> str:
    """Join cue lines, drop markup tags, decode entities, collapse whitespace."""
    text = " ".join(lines)
    text = html.unescape(_TAG.sub("", text))
    return _SPACE.sub(" ", text).strip()


def parse_vtt(raw: bytes | str) -> list[CaptionCue]:
    """Parse a WebVTT file into cues.

    Cue identifiers, cue settings, ``NOTE``/``STYLE``/``REGION`` blocks and
    inline markup are discarded; cues whose text is empty after cleaning are
    skipped.

    Raises:
        MalformedVtt: not UTF-8, missing ``WEBVTT`` header, text before the
            header, a cue block without timing, or a bad timestamp.
    """
    if isinstance(raw, bytes):
        try:
            raw = raw.decode("utf-8")
        except UnicodeDecodeError as exc:
            raise MalformedVtt(f"not UTF-8: {exc}") from None
    raw = raw.lstrip("﻿").replace("\r\n", "\n").replace("\r", "\n")
    lines = raw.split("\n")
    if not lines or not re.match(r"^WEBVTT(?:[ \t].*)?$", lines[0]):
        raise MalformedVtt("missing WEBVTT header")

    # split into blank-line separated blocks; the first one is the header
    blocks: list[list[str]] = []
    current: list[str] = []
    for line in lines:
        if line.strip():
            current.append(line)
        elif current:
            blocks.append(current)
            current = []
    if current:
        blocks.append(current)

    cues = []
    for block in blocks[1:]:
        if block[0].split(" ", 1)[0].split("\t", 1)[0] in _SKIP_BLOCKS:
            continue
        timing_at = next((i for i, line in enumerate(block[:2]) if "-->" in line), None)
        if timing_at is None:
            raise MalformedVtt(f"cue block without timing: {block[0][:40]!r}")
        left, right = block[timing_at].split("-->", 1)
        start = parse_timestamp(left)
        end = parse_timestamp(right.strip().split()[0] if right.strip() else "")
        text = clean_cue_text(block[timing_at + 1 :])
        if text:
            cues.append(CaptionCue(start, end, text))
    return cues


def _count_inversions(values: list[float], limit: int) -> int:
    """Number of out-of-order pairs, counting stops once it exceeds ``limit``."""
    count = 0
    seen: list[float] = []
    for v in reversed(values):
        count += bisect.bisect_left(seen, v)
        if count > limit:
            return count
        bisect.insort(seen, v)
    return count


def repair_cues(cues: Sequence[CaptionCue]) -> list[CaptionCue]:
    """Fix the simple timestamp inconsistencies.

    Zero-duration cues are dropped, a single out-of-order pair is swapped
    back, and a cue that overruns the next cue's start is clamped to it.  A
    cue squeezed to zero length by the clamp hands its text to the next cue.

    Raises:
        UnfixableTimestamps: a cue ends before it starts, or putting the
            starts in order needs more than one swap.
    """
    kept = []
    for cue in cues:
        if cue.end < cue.start:
            raise UnfixableTimestamps(f"cue ends before it starts: {cue}")
        if cue.end > cue.start:
            kept.append(cue)
    if _count_inversions([c.start for c in kept], limit=1) > 1:
        raise UnfixableTimestamps("cue start times are out of order beyond a single swap")
    kept.sort(key=lambda c: c.start)

    out: list[CaptionCue] = []
    carry = ""
    for i, cue in enumerate(kept):
        text = f"{carry} {cue.text}" if carry else cue.text
        end = cue.end
        if i + 1 < len(kept) and end > kept[i + 1].start:
            end = kept[i + 1].start
        if end <= cue.start:
            carry = text
            continue
        carry = ""
        out.append(CaptionCue(cue.start, end, text))
    if carry and out:
        last = out[-1]
        out[-1] = CaptionCue(last.start, last.end, f"{last.text} {carry}")
    return out
