"""Channel-disjoint train/validation/test partitions."""

from __future__ import annotations

from collections import Counter
from typing import Iterable

import numpy as np

from ..errors import BadConfig, InsufficientData

PARTITIONS = ("train", "validation", "test")
DEFAULT_RATIOS = (0.85, 0.075, 0.075)


def make_splits(
    docs: Iterable[tuple[str, str]],
    ratios: tuple[float, float, float] = DEFAULT_RATIOS,
    seed: int = 0,
) -> dict[str, str]:
    """Assign every document id to a partition, keeping channels together.

    Channels with several videos are placed first, then the single-video
    channels, each group in a seed-determined order.  Every channel goes to
    the partition furthest below its target document count (ties: train,
    validation, test).

    Raises:
        BadConfig: ratios negative or not summing to 1.
        InsufficientData: fewer than three channels.
    """
    ratios = tuple(float(r) for r in ratios)
    if len(ratios) != 3 or any(r < 0 for r in ratios) or abs(sum(ratios) - 1.0) > 1e-9:
        raise BadConfig(f"ratios must be three non-negative numbers summing to 1: {ratios}")
    docs = list(docs)
    by_channel: dict[str, list[str]] = {}
    for doc_id, channel in docs:
        by_channel.setdefault(channel, []).append(doc_id)
    if len(by_channel) < 3:
        raise InsufficientData(f"need at least 3 channels, got {len(by_channel)}")

    rng = np.random.default_rng(seed)
    channels = sorted(by_channel)
    multi = [c for c in channels if len(by_channel[c]) > 1]
    single = [c for c in channels if len(by_channel[c]) == 1]
    order = [multi[i] for i in rng.permutation(len(multi))] + [single[i] for i in rng.permutation(len(single))]

    targets = np.array(ratios) * len(docs)
    counts = np.zeros(3)
    out = {}
    for channel in order:
        part = int(np.argmax(targets - counts))
        counts[part] += len(by_channel[channel])
        for doc_id in by_channel[channel]:
            out[doc_id] = PARTITIONS[part]
    return out


def split_counts(assignment: dict[str, str]) -> dict[str, int]:
    counts = Counter(assignment.values())
    return {p: counts.get(p, 0) for p in PARTITIONS}
