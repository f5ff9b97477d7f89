"""Scalar test functions wrapping each differentiable primitive, shared by
the unit and acceptance gradient checks."""

from __future__ import annotations

import numpy as np

from chaptering import autograd as ag
from chaptering.model import MaskSchedule, ModelConfig, Segmenter, Vocabulary, forward_batch
from chaptering.training import batch_loss

# fixed, non-trivial weights so a plain sum does not hide errors
_W = np.random.default_rng(1234)
W34 = _W.standard_normal((3, 4))
W35 = _W.standard_normal((3, 5))
W245 = _W.standard_normal((2, 4, 5))
W2346 = _W.standard_normal((2, 3, 4, 6))
W2_3_4 = _W.standard_normal((2, 3, 4))
W2_5 = _W.standard_normal((2, 5))
MASK = np.tril(np.ones((4, 4), dtype=bool)) | np.eye(4, k=1, dtype=bool)
VALID = np.array([[True, True, False, True], [True, False, False, False]])
IDS = np.array([[0, 2, 2], [4, 1, 0]])
LABELS = np.array([1, 0, 0, 1, 0])
BCE_VALID = np.array([True, True, False, True, True])


def _wsum(t, w):
    return ag.tsum(ag.mul(t, ag.Tensor(w)))


def _probabilities(t):
    # squash to (0.05, 0.95) so the clamp never engages
    return ag.add(ag.mul(ag.sigmoid(t), 0.9), 0.05)


# name -> (function of list[Tensor], input shapes, smooth)
PRIMITIVES = {
    "add": (lambda ts: _wsum(ag.add(ts[0], ts[1]), W34), [(3, 4), (4,)], True),
    "neg": (lambda ts: _wsum(ag.neg(ts[0]), W34), [(3, 4)], True),
    "mul": (lambda ts: _wsum(ag.mul(ts[0], ts[1]), W34), [(3, 4), (3, 1)], True),
    "matmul": (lambda ts: _wsum(ag.matmul(ts[0], ts[1]), W245), [(2, 4, 3), (3, 5)], True),
    "sum": (lambda ts: _wsum(ag.tsum(ts[0], axis=1), W2_5), [(2, 3, 5)], True),
    "mean": (lambda ts: _wsum(ag.mean(ts[0], axis=-1, keepdims=True), W2_3_4[..., :1]), [(2, 3, 4)], True),
    "reshape": (lambda ts: _wsum(ag.reshape(ts[0], (3, 4)), W34), [(2, 6)], True),
    "transpose": (lambda ts: _wsum(ag.transpose(ts[0], (1, 0, 2)), W2_3_4), [(3, 2, 4)], True),
    "sigmoid": (lambda ts: _wsum(ag.sigmoid(ts[0]), W34), [(3, 4)], True),
    "gelu": (lambda ts: _wsum(ag.gelu(ts[0]), W34), [(3, 4)], True),
    "softmax": (lambda ts: _wsum(ag.softmax(ts[0]), W34), [(3, 4)], True),
    "layer_norm": (lambda ts: _wsum(ag.layer_norm(ts[0], ts[1], ts[2]), W35), [(3, 5), (5,), (5,)], True),
    "rope": (lambda ts: _wsum(ag.rope_rotate(ts[0]), W2346), [(2, 3, 4, 6)], True),
    "attention": (
        lambda ts: _wsum(ag.masked_attention(ts[0], ts[1], ts[2], MASK), W2346[0, :, :, :4][:2]),
        [(2, 4, 3), (2, 4, 3), (2, 4, 4)],
        True,
    ),
    "mean_pool": (lambda ts: _wsum(ag.mean_pool(ts[0], VALID), W2_5), [(2, 4, 5)], True),
    "embedding": (lambda ts: _wsum(ag.embedding(ts[0], IDS), W2_3_4), [(5, 4)], True),
    "gate": (lambda ts: _wsum(ag.gate_gradient(ts[0], np.ones((3, 1), bool)), W34), [(3, 4)], True),
    "linear": (lambda ts: _wsum(ag.linear(ts[0], ts[1], ts[2]), W35), [(3, 4), (4, 5), (5,)], True),
    "weighted_bce": (
        lambda ts: ag.weighted_bce(_probabilities(ts[0]), LABELS, (1.0, 2.0), BCE_VALID),
        [(5,)],
        True,
    ),
}


def toy_model(seed: int, schedule: MaskSchedule | None = None) -> tuple[Segmenter, list]:
    """Small segmenter and one encoded 4-sentence document."""
    sentences = ["the cat sat .", "a dog ran far .", "rain fell .", "sun came out again ."]
    vocab = Vocabulary.build(sentences)
    config = ModelConfig(
        sent_layers=1, sent_heads=2, sent_width=8, doc_layers=2, doc_heads=2, doc_width=8, ffn_mult=2,
        dropout=0.0, schedule=schedule or MaskSchedule.offline(2),
    )
    model = Segmenter.create(config, vocab, seed=seed)
    return model, [model.encode_doc(sentences, [0, 1, 0, 1])]


def model_loss_fn(model: Segmenter, docs, names):
    """Loss of ``model`` on ``docs`` as a function of the named parameters."""

    def f(ts):
        saved = dict(model.params)
        try:
            for name, t in zip(names, ts):
                model.params[name] = t
            return batch_loss(model, docs, (1.0, 2.0))
        finally:
            model.params.update(saved)

    return f


def model_forward_sum(model: Segmenter, docs):
    """Weighted sum of probabilities as a function of all parameters."""
    names = list(model.params)

    def f(ts):
        saved = dict(model.params)
        try:
            for name, t in zip(names, ts):
                model.params[name] = t
            probs, _ = forward_batch(model, docs)
            return _wsum(probs, np.linspace(-1.0, 1.0, probs.shape[1])[None])
        finally:
            model.params.update(saved)

    return f, names
