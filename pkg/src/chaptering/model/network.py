"""Hierarchical segmenter: a sentence encoder feeding a document encoder.

The sentence encoder embeds each sentence's tokens, runs a small
pre-LayerNorm transformer with full attention inside the sentence and
mean-pools the outputs.  The document encoder projects the sentence vectors
to its own width, runs ``N`` transformer layers with rotary position
embeddings on queries and keys and per-layer masks from a
:class:`MaskSchedule`, and emits one boundary probability per sentence.
"""

from __future__ import annotations

import dataclasses
from dataclasses import dataclass, field
from typing import Sequence

import numpy as np

from .. import autograd as ag
from ..autograd import Tensor
from ..errors import BadConfig, EmptySentence, ShapeMismatch
from .embeddings import EmbeddingTable
from .schedule import MaskSchedule, mask_for_layer
from .vocab import Vocabulary


@dataclass
class ModelConfig:
    """Architecture sizes.  Defaults are the desk-scale toy model."""

    vocab_size: int = 1000
    sent_layers: int = 2
    sent_heads: int = 2
    sent_width: int = 32
    max_tokens: int = 32
    doc_layers: int = 4
    doc_heads: int = 4
    doc_width: int = 64
    ffn_mult: int = 4
    dropout: float = 0.1
    schedule: MaskSchedule = field(default_factory=MaskSchedule.offline)
    sentence_source: str = "scratch"  # or "frozen"
    doc_positions: str = "rope"  # or "sinusoidal"
    rope_base: float = 10000.0
    ln_eps: float = 1e-5
    dtype: str = "float64"

    def __post_init__(self):
        if isinstance(self.schedule, dict):
            self.schedule = MaskSchedule.from_dict(self.schedule)
        if self.sent_width % self.sent_heads or self.doc_width % self.doc_heads:
            raise BadConfig("widths must be divisible by head counts")
        if self.doc_positions == "rope" and (self.doc_width // self.doc_heads) % 2:
            raise BadConfig("rotary embeddings need an even head dimension")
        if not 0.0 <= self.dropout < 1.0:
            raise BadConfig(f"dropout must lie in [0, 1), got {self.dropout}")
        if self.schedule.n_layers != self.doc_layers:
            raise BadConfig(
                f"schedule covers {self.schedule.n_layers} layers, encoder has {self.doc_layers}"
            )
        if self.sentence_source not in ("scratch", "frozen"):
            raise BadConfig(f"unknown sentence source {self.sentence_source!r}")
        if self.doc_positions not in ("rope", "sinusoidal"):
            raise BadConfig(f"unknown position scheme {self.doc_positions!r}")
        if self.dtype not in ("float64", "float32"):
            raise BadConfig(f"unsupported dtype {self.dtype!r}")

    @property
    def np_dtype(self):
        return np.dtype(self.dtype)

    def with_schedule(self, schedule: MaskSchedule) -> ModelConfig:
        return dataclasses.replace(self, schedule=schedule)

    def to_dict(self) -> dict:
        d = dataclasses.asdict(self)
        d["schedule"] = self.schedule.to_dict()
        return d

    @classmethod
    def from_dict(cls, d: dict) -> ModelConfig:
        d = dict(d)
        d["schedule"] = MaskSchedule.from_dict(d["schedule"])
        return cls(**d)


def full_scale_config(vocab_size: int = 30522, schedule: MaskSchedule | None = None) -> ModelConfig:
    """Full-size preset: 6x384 sentence encoder, 12-layer 8-head 384-wide document encoder."""
    return ModelConfig(
        vocab_size=vocab_size,
        sent_layers=6,
        sent_heads=12,
        sent_width=384,
        max_tokens=128,
        doc_layers=12,
        doc_heads=8,
        doc_width=384,
        schedule=schedule or MaskSchedule.offline(12),
    )


def _block_shapes(prefix: str, d: int, ffn: int) -> dict[str, tuple]:
    return {
        f"{prefix}ln1.g": (d,),
        f"{prefix}ln1.b": (d,),
        f"{prefix}attn.wq": (d, d),
        f"{prefix}attn.bq": (d,),
        f"{prefix}attn.wk": (d, d),
        f"{prefix}attn.bk": (d,),
        f"{prefix}attn.wv": (d, d),
        f"{prefix}attn.bv": (d,),
        f"{prefix}attn.wo": (d, d),
        f"{prefix}attn.bo": (d,),
        f"{prefix}ln2.g": (d,),
        f"{prefix}ln2.b": (d,),
        f"{prefix}ffn.w1": (d, ffn),
        f"{prefix}ffn.b1": (ffn,),
        f"{prefix}ffn.w2": (ffn, d),
        f"{prefix}ffn.b2": (d,),
    }


def param_shapes(config: ModelConfig) -> dict[str, tuple]:
    """Name -> shape for every parameter, in a fixed order."""
    shapes: dict[str, tuple] = {}
    ds, dd = config.sent_width, config.doc_width
    if config.sentence_source == "scratch":
        shapes["sent.tok_emb"] = (config.vocab_size, ds)
        shapes["sent.pos_emb"] = (config.max_tokens, ds)
        for i in range(config.sent_layers):
            shapes.update(_block_shapes(f"sent.layers.{i}.", ds, config.ffn_mult * ds))
        shapes["sent.ln_f.g"] = (ds,)
        shapes["sent.ln_f.b"] = (ds,)
    if ds != dd:
        shapes["doc.proj.w"] = (ds, dd)
        shapes["doc.proj.b"] = (dd,)
    for i in range(config.doc_layers):
        shapes.update(_block_shapes(f"doc.layers.{i}.", dd, config.ffn_mult * dd))
    shapes["doc.ln_f.g"] = (dd,)
    shapes["doc.ln_f.b"] = (dd,)
    shapes["doc.out.w"] = (dd, 1)
    shapes["doc.out.b"] = (1,)
    return shapes


def init_params(config: ModelConfig, seed: int = 0) -> dict[str, np.ndarray]:
    """Random initial weights.

    Linear weights are N(0, 1/fan_in), with the two projections that write
    into the residual stream further scaled by ``1/sqrt(2 * layers)``;
    token embeddings are N(0, 1) and position embeddings N(0, 0.1^2), so
    that word identity dominates a fresh sentence vector; biases and LayerNorm shifts start at zero,
    LayerNorm gains at one.
    """
    rng = np.random.default_rng(seed)
    dtype = config.np_dtype
    params = {}
    for name, shape in param_shapes(config).items():
        leaf = name.rsplit(".", 1)[-1]
        if leaf == "g":
            arr = np.ones(shape)
        elif leaf.startswith("b"):
            arr = np.zeros(shape)
        elif leaf == "tok_emb":
            arr = rng.normal(0.0, 1.0, size=shape)
        elif leaf.endswith("emb"):
            arr = rng.normal(0.0, 0.1, size=shape)
        else:
            std = 1.0 / np.sqrt(shape[0])
            if leaf in ("wo", "w2"):
                layers = config.sent_layers if name.startswith("sent.") else config.doc_layers
                std /= np.sqrt(2.0 * layers)
            arr = rng.normal(0.0, std, size=shape)
        params[name] = arr.astype(dtype)
    return params


class Segmenter:
    """Parameters plus everything needed to turn raw sentences into inputs.

    Attributes:
        config: architecture.
        params: parameter tensors keyed by path (``"doc.layers.0.attn.wq"``).
        vocab: token vocabulary (scratch sentence encoder).
        embeddings: stored sentence vectors (frozen sentence source).
    """

    def __init__(
        self,
        config: ModelConfig,
        params: dict[str, np.ndarray],
        vocab: Vocabulary | None = None,
        embeddings: EmbeddingTable | None = None,
    ):
        expected = param_shapes(config)
        if set(params) != set(expected):
            missing = sorted(set(expected) - set(params))
            extra = sorted(set(params) - set(expected))
            raise ShapeMismatch(f"parameter names differ; missing={missing[:3]} extra={extra[:3]}")
        for name, shape in expected.items():
            if tuple(np.shape(params[name])) != shape:
                raise ShapeMismatch(f"{name}: shape {np.shape(params[name])}, expected {shape}")
        self.config = config
        self.params = {
            name: Tensor(np.array(params[name], dtype=config.np_dtype), requires_grad=True)
            for name in expected
        }
        self.vocab = vocab
        self.embeddings = embeddings

    @classmethod
    def create(cls, config: ModelConfig, vocab: Vocabulary | None = None, seed: int = 0, **kw) -> Segmenter:
        if vocab is not None and config.sentence_source == "scratch":
            config = dataclasses.replace(config, vocab_size=len(vocab))
        return cls(config, init_params(config, seed), vocab, **kw)

    def state_dict(self) -> dict[str, np.ndarray]:
        return {name: t.data.copy() for name, t in self.params.items()}

    def load_state_dict(self, state: dict[str, np.ndarray]) -> None:
        for name, t in self.params.items():
            t.data = np.array(state[name], dtype=self.config.np_dtype)

    def with_schedule(self, schedule: MaskSchedule) -> Segmenter:
        """Same weights under a different mask schedule (shares nothing mutable)."""
        return Segmenter(self.config.with_schedule(schedule), self.state_dict(), self.vocab, self.embeddings)

    def zero_grad(self) -> None:
        for t in self.params.values():
            t.grad = None

    def encode_doc(self, sentences: Sequence[str], labels=None) -> EncodedDoc:
        """Tokenize (or look up) every sentence of one document."""
        if self.config.sentence_source == "frozen":
            if self.embeddings is None:
                raise BadConfig("frozen sentence source needs an embedding table")
            vecs = np.stack([self.embeddings.lookup(s) for s in sentences]).astype(self.config.np_dtype)
            return EncodedDoc(None, vecs, None if labels is None else np.asarray(labels, dtype=np.int64))
        if self.vocab is None:
            raise BadConfig("scratch sentence encoder needs a vocabulary")
        tokens = []
        for s in sentences:
            ids = self.vocab.encode(s)[: self.config.max_tokens]
            if not ids:
                raise EmptySentence(f"sentence has no tokens: {s!r}")
            tokens.append(np.asarray(ids, dtype=np.int64))
        return EncodedDoc(tokens, None, None if labels is None else np.asarray(labels, dtype=np.int64))


@dataclass
class EncodedDoc:
    """Model-ready form of one document."""

    tokens: list[np.ndarray] | None
    vectors: np.ndarray | None
    labels: np.ndarray | None = None

    def __len__(self) -> int:
        return len(self.tokens) if self.tokens is not None else len(self.vectors)

    @property
    def token_count(self) -> int:
        if self.tokens is None:
            return len(self.vectors)
        return int(sum(len(t) for t in self.tokens))


def pad_tokens(token_lists: Sequence[np.ndarray]) -> tuple[np.ndarray, np.ndarray]:
    lengths = np.array([len(t) for t in token_lists], dtype=np.int64)
    if (lengths == 0).any():
        raise EmptySentence("sentence with zero tokens")
    ids = np.zeros((len(token_lists), int(lengths.max())), dtype=np.int64)
    for i, t in enumerate(token_lists):
        ids[i, : len(t)] = t
    return ids, lengths


def _heads(x: Tensor, n_heads: int) -> Tensor:
    *lead, n, d = x.shape
    x = ag.reshape(x, (*lead, n, n_heads, d // n_heads))
    k = len(lead)
    return ag.transpose(x, tuple(range(k)) + (k + 1, k, k + 2))


def _merge_heads(x: Tensor) -> Tensor:
    *lead, h, n, dh = x.shape
    k = len(lead)
    x = ag.transpose(x, tuple(range(k)) + (k + 1, k, k + 2))
    return ag.reshape(x, (*lead, n, h * dh))


def transformer_block(
    p: dict[str, Tensor],
    prefix: str,
    x: Tensor,
    mask: np.ndarray,
    n_heads: int,
    *,
    rope_base: float | None = None,
    eps: float = 1e-5,
    dropout: float = 0.0,
    rng: np.random.Generator | None = None,
) -> Tensor:
    """Pre-LayerNorm transformer layer; ``mask`` broadcasts to ``(..., heads, n, n)``."""
    h = ag.layer_norm(x, p[prefix + "ln1.g"], p[prefix + "ln1.b"], eps)
    q = _heads(ag.linear(h, p[prefix + "attn.wq"], p[prefix + "attn.bq"]), n_heads)
    k = _heads(ag.linear(h, p[prefix + "attn.wk"], p[prefix + "attn.bk"]), n_heads)
    v = _heads(ag.linear(h, p[prefix + "attn.wv"], p[prefix + "attn.bv"]), n_heads)
    if rope_base is not None:
        q = ag.rope_rotate(q, rope_base)
        k = ag.rope_rotate(k, rope_base)
    a = _merge_heads(ag.masked_attention(q, k, v, mask))
    x = x + ag.dropout(ag.linear(a, p[prefix + "attn.wo"], p[prefix + "attn.bo"]), dropout, rng)
    h = ag.layer_norm(x, p[prefix + "ln2.g"], p[prefix + "ln2.b"], eps)
    h = ag.gelu(ag.linear(h, p[prefix + "ffn.w1"], p[prefix + "ffn.b1"]))
    return x + ag.dropout(ag.linear(h, p[prefix + "ffn.w2"], p[prefix + "ffn.b2"]), dropout, rng)


def encode_sentences(
    model: Segmenter,
    ids: np.ndarray,
    lengths: np.ndarray,
    rng: np.random.Generator | None = None,
) -> Tensor:
    """Sentence vectors ``(n, sent_width)`` for padded token ids ``(n, T)``.

    Pad positions are hidden from attention and excluded from pooling, so a
    sentence's vector does not depend on how much padding surrounds it.
    """
    cfg, p = model.config, model.params
    n, t = ids.shape
    if t > cfg.max_tokens:
        raise ShapeMismatch(f"{t} tokens exceed max_tokens={cfg.max_tokens}")
    valid = np.arange(t)[None, :] < np.asarray(lengths)[:, None]
    drop = cfg.dropout if rng is not None else 0.0
    x = ag.embedding(p["sent.tok_emb"], ids) + ag.embedding(p["sent.pos_emb"], np.arange(t))
    x = ag.dropout(x, drop, rng)
    mask = valid[:, None, None, :]
    for i in range(cfg.sent_layers):
        x = transformer_block(
            p, f"sent.layers.{i}.", x, mask, cfg.sent_heads, eps=cfg.ln_eps, dropout=drop, rng=rng
        )
    x = ag.layer_norm(x, p["sent.ln_f.g"], p["sent.ln_f.b"], cfg.ln_eps)
    return ag.mean_pool(x, valid)


def encode_sentence(tokens: Sequence[int], model: Segmenter) -> np.ndarray:
    """Vector for one sentence given token ids (truncated to ``max_tokens``)."""
    tokens = np.asarray(list(tokens)[: model.config.max_tokens], dtype=np.int64)
    if tokens.size == 0:
        raise EmptySentence("sentence with zero tokens")
    return encode_sentences(model, tokens[None, :], np.array([tokens.size])).data[0]


def sinusoidal_table(n: int, d: int, dtype=np.float64) -> np.ndarray:
    pos = np.arange(n)[:, None]
    freq = 10000.0 ** (-np.arange(0, d, 2) / d)
    table = np.zeros((n, d))
    table[:, 0::2] = np.sin(pos * freq)
    table[:, 1::2] = np.cos(pos * freq[: d // 2])
    return table.astype(dtype)


def document_logits(
    model: Segmenter,
    vectors: Tensor,
    lengths: np.ndarray,
    rng: np.random.Generator | None = None,
) -> Tensor:
    """Boundary logits ``(B, S)`` from sentence vectors ``(B, S, sent_width)``.

    Positions at or beyond ``lengths[b]`` are padding: they are never
    attended to and their outputs are meaningless.
    """
    cfg, p = model.config, model.params
    if vectors.ndim != 3 or vectors.shape[-1] != cfg.sent_width:
        raise ShapeMismatch(f"expected (B, S, {cfg.sent_width}) sentence vectors, got {vectors.shape}")
    b, s, _ = vectors.shape
    drop = cfg.dropout if rng is not None else 0.0
    x = vectors
    if "doc.proj.w" in p:
        x = ag.linear(x, p["doc.proj.w"], p["doc.proj.b"])
    rope_base = None
    if cfg.doc_positions == "rope":
        rope_base = cfg.rope_base
    else:
        x = x + Tensor(sinusoidal_table(s, cfg.doc_width, cfg.np_dtype))
    x = ag.dropout(x, drop, rng)
    valid = np.arange(s)[None, :] < np.asarray(lengths)[:, None]
    for i in range(cfg.doc_layers):
        mask = mask_for_layer(i + 1, s, cfg.schedule)[None, None] & valid[:, None, None, :]
        x = transformer_block(
            p, f"doc.layers.{i}.", x, mask, cfg.doc_heads,
            rope_base=rope_base, eps=cfg.ln_eps, dropout=drop, rng=rng,
        )
    x = ag.layer_norm(x, p["doc.ln_f.g"], p["doc.ln_f.b"], cfg.ln_eps)
    return ag.reshape(ag.linear(x, p["doc.out.w"], p["doc.out.b"]), (b, s))


def document_probabilities(
    model: Segmenter,
    vectors: Tensor,
    lengths: np.ndarray,
    rng: np.random.Generator | None = None,
) -> Tensor:
    return ag.sigmoid(document_logits(model, vectors, lengths, rng))


def encode_document(vectors, model: Segmenter) -> np.ndarray:
    """Boundary probabilities for one document's sentence vectors ``(S, d)``."""
    vectors = np.asarray(vectors, dtype=model.config.np_dtype)
    if vectors.ndim != 2 or len(vectors) == 0:
        raise ShapeMismatch(f"expected (S, d) with S >= 1, got {vectors.shape}")
    probs = document_probabilities(model, Tensor(vectors[None]), np.array([len(vectors)]))
    return probs.data[0]


def forward_batch(
    model: Segmenter,
    docs: Sequence[EncodedDoc],
    grad_flags: np.ndarray | None = None,
    rng: np.random.Generator | None = None,
) -> tuple[Tensor, np.ndarray]:
    """Boundary probabilities ``(B, S_max)`` for a batch of documents.

    Args:
        grad_flags: per-document booleans; documents flagged False get their
            sentence vectors detached, so no gradient reaches the sentence
            encoder through them.  None means every document backpropagates.
        rng: enables dropout when given.
    """
    cfg = model.config
    lengths = np.array([len(d) for d in docs], dtype=np.int64)
    s_max = int(lengths.max())
    if cfg.sentence_source == "frozen":
        vecs = np.zeros((len(docs), s_max, cfg.sent_width), dtype=cfg.np_dtype)
        for i, d in enumerate(docs):
            vecs[i, : len(d)] = d.vectors
        return document_probabilities(model, Tensor(vecs), lengths, rng), lengths

    flat = [t for d in docs for t in d.tokens]
    ids, tok_lengths = pad_tokens(flat)
    sent = encode_sentences(model, ids, tok_lengths, rng)
    if grad_flags is not None:
        keep = np.repeat(np.asarray(grad_flags, dtype=bool), lengths)
        sent = ag.gate_gradient(sent, keep[:, None])
    # scatter flat sentence rows into (B, S_max); padding points at row 0
    index = np.zeros((len(docs), s_max), dtype=np.int64)
    offsets = np.concatenate(([0], np.cumsum(lengths)[:-1]))
    for i, (off, n) in enumerate(zip(offsets, lengths)):
        index[i, :n] = np.arange(off, off + n)
    vecs = ag.embedding(sent, index)
    return document_probabilities(model, vecs, lengths, rng), lengths


def predict_proba(model: Segmenter, sentences_or_doc, batch_size: int = 16) -> np.ndarray | list[np.ndarray]:
    """Boundary probabilities for one document (sentences or a corpus
    ``Document``) or, given a list of :class:`EncodedDoc`, for each."""
    if isinstance(sentences_or_doc, list) and sentences_or_doc and isinstance(sentences_or_doc[0], EncodedDoc):
        out = []
        for start in range(0, len(sentences_or_doc), batch_size):
            chunk = sentences_or_doc[start : start + batch_size]
            probs, lengths = forward_batch(model, chunk)
            out.extend(probs.data[i, :n].copy() for i, n in enumerate(lengths))
        return out
    enc = model.encode_doc(_sentence_texts(sentences_or_doc))
    probs, _ = forward_batch(model, [enc])
    return probs.data[0]


def decide(probs: np.ndarray, threshold: float = 0.5) -> np.ndarray:
    """Labels from probabilities; the final sentence is always a boundary."""
    labels = (np.asarray(probs) > threshold).astype(np.int64)
    if labels.size:
        labels[-1] = 1
    return labels


def predict(doc, model: Segmenter, threshold: float = 0.5) -> np.ndarray:
    """Segment-final labels for one document.

    ``label[i] = 1`` iff the boundary probability exceeds ``threshold``; the
    last sentence is forced to 1 (it is excluded from scoring).
    """
    return decide(predict_proba(model, doc), threshold)


def _sentence_texts(doc) -> list[str]:
    if hasattr(doc, "sentences"):
        return [s.text if hasattr(s, "text") else s for s in doc.sentences]
    return [s.text if hasattr(s, "text") else s for s in doc]
