"""Slow, obviously-correct reference implementations used only by the tests."""

from __future__ import annotations

import numpy as np


# -- metrics -----------------------------------------------------------------


def segment_of(masses):
    out = []
    for seg, m in enumerate(masses):
        out.extend([seg] * m)
    return out


def brute_force_pk(ref, hyp, k):
    r, h = segment_of(ref), segment_of(hyp)
    total = len(r)
    errors = 0
    for i in range(total - k):
        errors += (r[i] == r[i + k]) != (h[i] == h[i + k])
    return errors / (total - k)


def positions(masses):
    out, acc = set(), 0
    for m in masses[:-1]:
        acc += m
        out.add(acc)
    return out


def brute_force_prf(ref, hyp):
    r, h = positions(ref), positions(hyp)
    tp = sum(1 for x in h if x in r)
    fp = len(h) - tp
    fn = len(r) - tp
    p = tp / (tp + fp) if tp + fp else 0.0
    rec = tp / (tp + fn) if tp + fn else 0.0
    f = 2 * p * rec / (p + rec) if p + rec else 0.0
    return p, rec, f


def brute_force_similarity(ref, hyp, n_t=2):
    """Enumerate every partial matching between near boundaries (each
    reference boundary either stays unpaired or takes a free hypothesis
    boundary closer than ``n_t``); keep the cheapest, preferring more pairs
    on ties."""
    r = sorted(positions(ref))
    h = sorted(positions(hyp))
    best = [None, None]

    def visit(i, used, pairs):
        if i == len(r):
            size = len(pairs)
            adds = len(r) + len(h) - 2 * size
            cost = adds + sum(abs(a - b) for a, b in pairs) / n_t
            key = (round(cost * n_t), -size)
            if best[0] is None or key < best[0]:
                best[0], best[1] = key, (cost, adds, size)
            return
        visit(i + 1, used, pairs)
        for b in h:
            if b not in used and abs(r[i] - b) < n_t:
                visit(i + 1, used | {b}, pairs + [(r[i], b)])

    visit(0, frozenset(), [])
    cost, adds, size = best[1]
    denom = adds + size
    return 1.0 if denom == 0 else 1.0 - cost / denom


# -- autograd / model --------------------------------------------------------


def loop_matmul(a, b):
    n, k = a.shape
    k2, m = b.shape
    assert k == k2
    out = np.zeros((n, m))
    for i in range(n):
        for j in range(m):
            s = 0.0
            for t in range(k):
                s += a[i, t] * b[t, j]
            out[i, j] = s
    return out


def loop_attention(q, k, v, mask):
    """Single-head attention, one query row at a time; masked keys skipped."""
    n, d = q.shape
    out = np.zeros((n, v.shape[1]))
    for i in range(n):
        keys = [j for j in range(k.shape[0]) if mask[i, j]]
        scores = np.array([q[i] @ k[j] / np.sqrt(d) for j in keys])
        w = np.exp(scores - scores.max())
        w /= w.sum()
        for wj, j in zip(w, keys):
            out[i] += wj * v[j]
    return out


def loop_rope(x, base=10000.0):
    """Rotate interleaved pairs (2i, 2i+1) of row p by p * base^(-2i/d)."""
    n, d = x.shape
    out = x.copy()
    for p in range(n):
        for i in range(d // 2):
            theta = p * base ** (-2.0 * i / d)
            c, s = np.cos(theta), np.sin(theta)
            a, b = x[p, 2 * i], x[p, 2 * i + 1]
            out[p, 2 * i] = a * c - b * s
            out[p, 2 * i + 1] = a * s + b * c
    return out


def loop_mask(layer, n, alpha, online=True):
    if not online:
        return np.ones((n, n), dtype=bool)
    offset = alpha[layer - 1] if layer <= len(alpha) else 0
    return np.array([[j <= i + offset for j in range(n)] for i in range(n)])


# -- corpus ------------------------------------------------------------------


def greedy_split(channel_docs, ratios, seed):
    """Independent take on the channel assignment: multi-video channels
    first, then singletons, each group permuted by the seeded generator;
    each channel goes to the partition with the largest remaining deficit."""
    rng = np.random.default_rng(seed)
    names = sorted(channel_docs)
    groups = [[c for c in names if len(channel_docs[c]) > 1], [c for c in names if len(channel_docs[c]) == 1]]
    total = sum(len(v) for v in channel_docs.values())
    want = [r * total for r in ratios]
    have = [0, 0, 0]
    parts = ["train", "validation", "test"]
    result = {}
    for group in groups:
        perm = rng.permutation(len(group))
        for idx in perm:
            channel = group[idx]
            deficits = [w - h for w, h in zip(want, have)]
            best = 0
            for p in (1, 2):
                if deficits[p] > deficits[best]:
                    best = p
            have[best] += len(channel_docs[channel])
            for doc in channel_docs[channel]:
                result[doc] = parts[best]
    return result
