"""Segmentation metrics: boundary P/R/F1, P_k, Boundary Similarity, bootstrap.

A segmentation is given by its segment masses, e.g. ``(3, 3)`` for six
sentences split in the middle.  Its internal boundary positions are the
cumulative sums excluding the total (``{3}`` here); the document end is
never scored.  :func:`masses_from_labels` converts the segment-final label
sequences used elsewhere in the package.
"""

from __future__ import annotations

from dataclasses import asdict, dataclass, field
from typing import Callable, Sequence

import numpy as np
from scipy.optimize import linear_sum_assignment

from .errors import DegenerateLength, InputError, MassMismatch, TooFewDocuments


def masses_from_labels(labels: Sequence[int]) -> tuple[int, ...]:
    """Segment masses from segment-final labels; the last sentence always
    closes a segment whatever its label."""
    labels = list(labels)
    if not labels:
        raise InputError("empty label sequence")
    masses, run = [], 0
    for i, y in enumerate(labels):
        run += 1
        if y or i == len(labels) - 1:
            masses.append(run)
            run = 0
    return tuple(masses)


def labels_from_masses(masses: Sequence[int]) -> np.ndarray:
    masses = _check_masses(masses)
    labels = np.zeros(sum(masses), dtype=np.int64)
    labels[np.cumsum(masses) - 1] = 1
    return labels


def boundary_positions(masses: Sequence[int]) -> set[int]:
    """Internal boundary positions in ``[1, total - 1]``."""
    return set(int(x) for x in np.cumsum(_check_masses(masses))[:-1])


def _check_masses(masses) -> tuple[int, ...]:
    masses = tuple(int(m) for m in masses)
    if not masses or any(m < 1 for m in masses):
        raise InputError(f"segment masses must be positive: {masses}")
    return masses


def _check_pair(ref, hyp) -> tuple[tuple[int, ...], tuple[int, ...]]:
    ref, hyp = _check_masses(ref), _check_masses(hyp)
    if sum(ref) != sum(hyp):
        raise MassMismatch(f"total mass differs: {sum(ref)} vs {sum(hyp)}")
    return ref, hyp


# ---------------------------------------------------------------------------
# precision / recall / F1
# ---------------------------------------------------------------------------


def boundary_counts(ref, hyp) -> tuple[int, int, int]:
    """(true positives, false positives, false negatives) over internal positions."""
    ref, hyp = _check_pair(ref, hyp)
    r, h = boundary_positions(ref), boundary_positions(hyp)
    return len(r & h), len(h - r), len(r - h)


def prf_from_counts(tp: float, fp: float, fn: float) -> tuple[float, float, float]:
    p = tp / (tp + fp) if tp + fp else 0.0
    r = tp / (tp + fn) if tp + fn else 0.0
    f = 2 * p * r / (p + r) if p + r else 0.0
    return p, r, f


def boundary_prf(ref, hyp) -> tuple[float, float, float]:
    """Exact-position precision, recall and F1; 0/0 counts as 0."""
    return prf_from_counts(*boundary_counts(ref, hyp))


# ---------------------------------------------------------------------------
# P_k
# ---------------------------------------------------------------------------


def auto_window(ref) -> int:
    """Half the mean reference segment mass, rounded (Python ``round``), at least 1."""
    ref = _check_masses(ref)
    return max(1, int(round(sum(ref) / len(ref) / 2.0)))


def _segment_ids(masses) -> np.ndarray:
    return np.repeat(np.arange(len(masses)), masses)


def pk(ref, hyp, k: int | str = "auto") -> float:
    """Fraction of probes ``(i, i + k)`` on which ``ref`` and ``hyp`` disagree
    about the two positions sharing a segment.

    Raises:
        MassMismatch: different totals.
        DegenerateLength: ``total <= k``, leaving no probe.
    """
    ref, hyp = _check_pair(ref, hyp)
    k = auto_window(ref) if k == "auto" else int(k)
    if k < 1:
        raise InputError(f"window must be >= 1, got {k}")
    total = sum(ref)
    if total <= k:
        raise DegenerateLength(f"total mass {total} leaves no probe for k={k}")
    r, h = _segment_ids(ref), _segment_ids(hyp)
    same_r = r[:-k] == r[k:]
    same_h = h[:-k] == h[k:]
    return float(np.mean(same_r != same_h))


# ---------------------------------------------------------------------------
# Boundary Similarity
# ---------------------------------------------------------------------------


@dataclass
class EditOperations:
    """Result of aligning two boundary sets.

    Attributes:
        additions: unmatched boundaries as ``(position, "ref" | "hyp")``.
        transpositions: near-miss pairs ``(ref_position, hyp_position)``.
        matches: positions present in both sets and paired with each other.
    """

    additions: list[tuple[int, str]] = field(default_factory=list)
    transpositions: list[tuple[int, int]] = field(default_factory=list)
    matches: list[int] = field(default_factory=list)

    def cost(self, n_t: int) -> float:
        return len(self.additions) + sum(abs(a - b) for a, b in self.transpositions) / n_t


def boundary_edit_distance(ref_bounds, hyp_bounds, n_t: int = 2) -> EditOperations:
    """Minimum-cost alignment of two boundary sets.

    Boundaries closer than ``n_t`` may be paired; a pair at offset ``o``
    costs ``|o| / n_t`` (zero for an exact match) and every unpaired boundary
    costs 1.  Among minimum-cost alignments the one with the most pairs is
    chosen.  The optimum is found exactly with a linear assignment, so an
    exact match is given up when that lets two near misses pair instead.
    """
    if n_t < 2:
        raise InputError(f"transposition window must be >= 2, got {n_t}")
    ref = sorted(int(x) for x in ref_bounds)
    hyp = sorted(int(x) for x in hyp_bounds)
    ops = EditOperations()
    paired_r, paired_h = set(), set()
    if ref and hyp:
        scale = len(ref) + len(hyp) + 1
        offsets = np.abs(np.subtract.outer(np.array(ref), np.array(hyp)))
        allowed = offsets < n_t
        # integer costs: primary objective scaled by `scale`, -1 per pair breaks ties
        cost = np.where(allowed, (offsets - 2 * n_t) * scale - 1, 0)
        rows, cols = linear_sum_assignment(cost)
        for i, j in zip(rows, cols):
            if allowed[i, j]:
                paired_r.add(i)
                paired_h.add(j)
                if ref[i] == hyp[j]:
                    ops.matches.append(ref[i])
                else:
                    ops.transpositions.append((ref[i], hyp[j]))
    ops.additions = [(p, "ref") for i, p in enumerate(ref) if i not in paired_r]
    ops.additions += [(p, "hyp") for j, p in enumerate(hyp) if j not in paired_h]
    ops.matches.sort()
    ops.transpositions.sort()
    ops.additions.sort()
    return ops


def similarity_from_ops(ops: EditOperations, n_t: int) -> float:
    denom = len(ops.additions) + len(ops.transpositions) + len(ops.matches)
    if denom == 0:
        return 1.0
    return 1.0 - ops.cost(n_t) / denom


def boundary_similarity(ref, hyp, n_t: int = 2) -> float:
    """``1 - (|A| + sum |offset| / n_t) / (|A| + |T| + |M|)``; 1 when neither
    side has an internal boundary."""
    ref, hyp = _check_pair(ref, hyp)
    ops = boundary_edit_distance(boundary_positions(ref), boundary_positions(hyp), n_t)
    return similarity_from_ops(ops, n_t)


# ---------------------------------------------------------------------------
# corpus evaluation and bootstrap
# ---------------------------------------------------------------------------


def bootstrap_std(
    per_doc_inputs: Sequence,
    metric: Callable[[list], float],
    count: int = 100,
    seed: int = 0,
) -> tuple[float, float]:
    """Mean and population standard deviation of ``metric`` over ``count``
    resamples (with replacement) of the documents."""
    n = len(per_doc_inputs)
    if n < 2:
        raise TooFewDocuments(f"bootstrap needs at least 2 documents, got {n}")
    rng = np.random.default_rng(seed)
    values = np.empty(count)
    for b in range(count):
        idx = rng.integers(0, n, size=n)
        values[b] = metric([per_doc_inputs[i] for i in idx])
    return float(values.mean()), float(values.std())


@dataclass
class MetricConfig:
    k: int | str = "auto"
    n_t: int = 2
    bootstrap: int = 100
    seed: int = 0

    def __post_init__(self):
        if self.k != "auto" and int(self.k) < 1:
            raise InputError("P_k window must be >= 1")
        if self.n_t < 2:
            raise InputError("transposition window must be >= 2")


@dataclass
class MetricReport:
    p: float
    r: float
    f1: float
    pk: float
    b: float
    p_std: float = 0.0
    r_std: float = 0.0
    f1_std: float = 0.0
    pk_std: float = 0.0
    b_std: float = 0.0
    documents: int = 0

    def to_dict(self) -> dict:
        return asdict(self)


def _corpus_values(counts: np.ndarray, pks: np.ndarray, bs: np.ndarray) -> np.ndarray:
    tp, fp, fn = counts.sum(axis=0)
    p, r, f = prf_from_counts(tp, fp, fn)
    pk_mean = float(np.nanmean(pks)) if np.isfinite(pks).any() else float("nan")
    return np.array([p, r, f, pk_mean, float(np.mean(bs))])


def evaluate(refs: Sequence, hyps: Sequence, config: MetricConfig | None = None) -> MetricReport:
    """Score a corpus.

    P/R/F1 pool boundary counts over all documents; P_k and Boundary
    Similarity are averaged per document (documents too short for any P_k
    probe are left out of the P_k mean).  Standard deviations come from
    bootstrapping the documents ``config.bootstrap`` times.

    ``refs`` and ``hyps`` hold one segmentation per document, each as masses
    or as a label array (numpy arrays are read as labels).
    """
    config = config or MetricConfig()
    if len(refs) != len(hyps):
        raise InputError(f"{len(refs)} references vs {len(hyps)} hypotheses")
    if not refs:
        raise InputError("empty corpus")
    refs = [_as_masses(r) for r in refs]
    hyps = [_as_masses(h) for h in hyps]
    counts = np.array([boundary_counts(r, h) for r, h in zip(refs, hyps)], dtype=np.float64)
    pks = np.empty(len(refs))
    for i, (r, h) in enumerate(zip(refs, hyps)):
        try:
            pks[i] = pk(r, h, config.k)
        except DegenerateLength:
            pks[i] = np.nan
    bs = np.array([boundary_similarity(r, h, config.n_t) for r, h in zip(refs, hyps)])
    point = _corpus_values(counts, pks, bs)
    stds = np.zeros(5)
    if len(refs) >= 2 and config.bootstrap > 0:
        rng = np.random.default_rng(config.seed)
        samples = np.empty((config.bootstrap, 5))
        for b in range(config.bootstrap):
            idx = rng.integers(0, len(refs), size=len(refs))
            samples[b] = _corpus_values(counts[idx], pks[idx], bs[idx])
        stds = np.nanstd(samples, axis=0)
    return MetricReport(*map(float, point), *map(float, stds), documents=len(refs))


def _as_masses(seg) -> tuple[int, ...]:
    if isinstance(seg, np.ndarray):
        return masses_from_labels(seg.tolist())
    return _check_masses(seg)
