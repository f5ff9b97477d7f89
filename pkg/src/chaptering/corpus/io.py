"""JSON Lines reading and writing."""

from __future__ import annotations

import json
from pathlib import Path
from typing import Iterable, Iterator

from ..errors import InputError
from .types import Document, TitleExample


def dumps(record: dict) -> str:
    return json.dumps(record, ensure_ascii=False, sort_keys=False)


def write_jsonl(path: str | Path, records: Iterable[dict]) -> int:
    n = 0
    with open(path, "w", encoding="utf-8", newline="\n") as fh:
        for record in records:
            fh.write(dumps(record) + "\n")
            n += 1
    return n


def iter_jsonl(path: str | Path) -> Iterator[dict]:
    with open(path, encoding="utf-8") as fh:
        for lineno, line in enumerate(fh, 1):
            if not line.strip():
                continue
            try:
                yield json.loads(line)
            except json.JSONDecodeError as exc:
                raise InputError(f"{path}:{lineno}: invalid JSON ({exc.msg})") from None


def read_jsonl(path: str | Path) -> list[dict]:
    return list(iter_jsonl(path))


def write_documents(path: str | Path, docs: Iterable[Document]) -> int:
    return write_jsonl(path, (d.to_dict() for d in docs))


def read_documents(path: str | Path) -> list[Document]:
    out = []
    for record in iter_jsonl(path):
        try:
            out.append(Document.from_dict(record))
        except (KeyError, TypeError, ValueError) as exc:
            raise InputError(f"{path}: bad document record {record.get('id', '?')!r}: {exc}") from None
    return out


def write_title_examples(path: str | Path, examples: Iterable[TitleExample]) -> int:
    return write_jsonl(path, (e.to_dict() for e in examples))


def read_title_examples(path: str | Path) -> list[TitleExample]:
    return [TitleExample.from_dict(r) for r in iter_jsonl(path)]
