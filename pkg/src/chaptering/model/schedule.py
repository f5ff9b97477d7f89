"""Attention-mask schedules for the document encoder.

An offline encoder attends over the whole document in every layer.  An
online encoder lets layer ``l <= M`` look ``alpha[l-1]`` positions into the
future and keeps every later layer causal, so the future context a position
can see accumulates to ``c = sum(alpha)`` sentences.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from ..errors import BadSchedule

# Future-context partitions used for the online models, keyed by c.
ONLINE_PRESETS: dict[int, tuple[int, ...]] = {
    0: (),
    1: (1,),
    3: (2, 1),
    5: (2, 2, 1),
    8: (2, 2, 2, 2),
    10: (2, 2, 2, 2, 2),
    20: (4, 4, 4, 2, 2, 2, 2),
}


@dataclass(frozen=True)
class MaskSchedule:
    """Which attention mask each document-encoder layer uses.

    Attributes:
        mode: ``"offline"`` (full attention) or ``"online"``.
        alpha: per-layer right-side offsets of the first ``M`` layers;
            empty in offline mode.
        n_layers: total number of document-encoder layers ``N``.
    """

    mode: str = "offline"
    alpha: tuple[int, ...] = field(default_factory=tuple)
    n_layers: int = 4

    def __post_init__(self):
        object.__setattr__(self, "alpha", tuple(int(a) for a in self.alpha))
        if self.mode not in ("offline", "online"):
            raise BadSchedule(f"unknown mode {self.mode!r}")
        if self.n_layers < 1:
            raise BadSchedule("need at least one layer")
        if self.mode == "offline" and self.alpha:
            raise BadSchedule("offline schedules take no alpha")
        if any(a < 0 for a in self.alpha):
            raise BadSchedule(f"alpha entries must be non-negative: {self.alpha}")
        if len(self.alpha) > self.n_layers:
            raise BadSchedule(f"|alpha| = {len(self.alpha)} exceeds {self.n_layers} layers")

    @classmethod
    def offline(cls, n_layers: int = 4) -> MaskSchedule:
        return cls("offline", (), n_layers)

    @classmethod
    def online(cls, alpha, n_layers: int = 4) -> MaskSchedule:
        return cls("online", tuple(alpha), n_layers)

    @classmethod
    def preset(cls, c: int, n_layers: int = 4) -> MaskSchedule:
        """Online schedule for future context ``c`` from :data:`ONLINE_PRESETS`."""
        if c not in ONLINE_PRESETS:
            raise BadSchedule(f"no preset partition for c={c}; pass alpha explicitly")
        return cls.online(ONLINE_PRESETS[c], n_layers)

    @property
    def is_online(self) -> bool:
        return self.mode == "online"

    @property
    def M(self) -> int:
        return len(self.alpha)

    @property
    def c(self) -> float:
        """Total future context; ``math.inf`` for offline schedules."""
        return sum(self.alpha) if self.is_online else math.inf

    def to_dict(self) -> dict:
        return {"mode": self.mode, "alpha": list(self.alpha), "n_layers": self.n_layers}

    @classmethod
    def from_dict(cls, d: dict) -> MaskSchedule:
        return cls(d["mode"], tuple(d.get("alpha", ())), d["n_layers"])


def mask_for_layer(layer: int, seq_len: int, schedule: MaskSchedule) -> np.ndarray:
    """Boolean ``seq_len x seq_len`` mask for 1-indexed ``layer``.

    ``mask[i, j]`` is True when position ``i`` may attend position ``j``.

    >>> mask_for_layer(1, 4, MaskSchedule.online([1], 2)).astype(int)
    array([[1, 1, 0, 0],
           [1, 1, 1, 0],
           [1, 1, 1, 1],
           [1, 1, 1, 1]])
    """
    if not 1 <= layer <= schedule.n_layers:
        raise BadSchedule(f"layer {layer} outside [1, {schedule.n_layers}]")
    if not schedule.is_online:
        return np.ones((seq_len, seq_len), dtype=bool)
    offset = schedule.alpha[layer - 1] if layer <= schedule.M else 0
    i = np.arange(seq_len)[:, None]
    j = np.arange(seq_len)[None, :]
    return j <= i + offset


def receptive_field(schedule: MaskSchedule, after_layer: int) -> float:
    """Future positions visible to a prediction after ``after_layer`` layers."""
    if not 0 <= after_layer <= schedule.n_layers:
        raise BadSchedule(f"layer {after_layer} outside [0, {schedule.n_layers}]")
    if not schedule.is_online:
        return math.inf
    return sum(schedule.alpha[: min(after_layer, schedule.M)])
