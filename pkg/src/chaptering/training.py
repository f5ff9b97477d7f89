"""Supervised training of the segmenter.

Each step runs one batch forward with dropout, scores every non-final
sentence with class-weighted cross-entropy and applies an AdamW update under
a cosine learning-rate decay.  Only a random subset of documents (rate
``grad_sample_rate``) sends gradient into the sentence encoder.  After each
epoch the validation F1 decides whether the weights become the new best.

All randomness of epoch ``e``, batch ``b`` comes from
``default_rng([seed, e, b])`` (and the batch order from
``default_rng([seed, e])``), so a run resumed from a checkpoint replays the
uninterrupted run exactly.
"""

from __future__ import annotations

import dataclasses
import json
import math
from dataclasses import dataclass
from pathlib import Path
from typing import Callable, Optional, Sequence

import numpy as np

from . import autograd as ag
from .checkpoint import Checkpoint
from .corpus.types import Document
from .errors import BadConfig, DocumentTooLarge, InputError, NonFiniteLoss
from .metrics import MetricConfig, MetricReport, boundary_counts, evaluate, masses_from_labels, prf_from_counts
from .model import EncodedDoc, ModelConfig, Segmenter, Vocabulary, decide, forward_batch, predict_proba


@dataclass
class TrainConfig:
    loss_weights: tuple[float, float] = (1.0, 2.0)
    lr: float = 2.5e-5
    token_budget: int = 115_000
    epochs: int = 10
    beta1: float = 0.9
    beta2: float = 0.999
    weight_decay: float = 0.01
    eps: float = 1e-8
    dropout: float = 0.1
    grad_sample_rate: float = 0.5
    seed: int = 0
    threshold: float = 0.5
    vocab_size: int = 5000
    eval_batch_docs: int = 64

    def __post_init__(self):
        self.loss_weights = tuple(float(w) for w in self.loss_weights)
        if len(self.loss_weights) != 2 or min(self.loss_weights) < 0:
            raise BadConfig(f"loss_weights must be two non-negative numbers, got {self.loss_weights}")
        if not 0.0 <= self.grad_sample_rate <= 1.0:
            raise BadConfig(f"grad_sample_rate must lie in [0, 1], got {self.grad_sample_rate}")
        if self.lr < 0 or self.epochs < 0 or self.token_budget < 1:
            raise BadConfig("lr and epochs must be non-negative, token_budget positive")
        if not 0.0 <= self.dropout < 1.0:
            raise BadConfig(f"dropout must lie in [0, 1), got {self.dropout}")

    def to_dict(self) -> dict:
        d = dataclasses.asdict(self)
        d["loss_weights"] = list(self.loss_weights)
        return d

    @classmethod
    def from_dict(cls, d: dict) -> TrainConfig:
        known = {f.name for f in dataclasses.fields(cls)}
        unknown = set(d) - known
        if unknown:
            raise BadConfig(f"unknown training keys: {sorted(unknown)}")
        return cls(**d)


def parse_flat_config(text: str) -> dict[str, str]:
    """``key = value`` lines; ``#`` starts a comment."""
    out = {}
    for lineno, line in enumerate(text.splitlines(), 1):
        line = line.split("#", 1)[0].strip()
        if not line:
            continue
        if "=" not in line:
            raise BadConfig(f"line {lineno}: expected key = value")
        key, value = (s.strip() for s in line.split("=", 1))
        out[key] = value
    return out


def coerce_fields(cls, raw: dict[str, str]) -> dict:
    """Convert string values to the types of ``cls``'s fields."""
    defaults = {f.name: f for f in dataclasses.fields(cls)}
    out = {}
    for key, value in raw.items():
        if key not in defaults:
            raise BadConfig(f"unknown key {key!r}")
        f = defaults[key]
        default = f.default if f.default is not dataclasses.MISSING else f.default_factory()
        try:
            if isinstance(default, bool):
                out[key] = value.lower() in ("1", "true", "yes", "on")
            elif isinstance(default, int):
                out[key] = int(value)
            elif isinstance(default, float):
                out[key] = float(value)
            elif isinstance(default, tuple):
                out[key] = tuple(float(v) for v in value.strip("[]()").split(","))
            else:
                out[key] = value
        except ValueError:
            raise BadConfig(f"bad value for {key}: {value!r}") from None
    return out


# ---------------------------------------------------------------------------
# pieces of the loop
# ---------------------------------------------------------------------------


def sample_gradient_flags(doc_count: int, rate: float, rng: np.random.Generator) -> np.ndarray:
    """Independent Bernoulli(``rate``) flag per document."""
    if not 0.0 <= rate <= 1.0:
        raise BadConfig(f"rate must lie in [0, 1], got {rate}")
    return rng.random(doc_count) < rate


def cosine_lr(step: int, total_steps: int, base: float) -> float:
    if total_steps <= 0:
        return base
    if not 0 <= step <= total_steps:
        raise InputError(f"step {step} outside [0, {total_steps}]")
    return base * 0.5 * (1.0 + math.cos(math.pi * step / total_steps))


def make_batches(token_counts: Sequence[int], token_budget: int, seed) -> list[list[int]]:
    """Shuffle document indices and pack them greedily, in order, into
    batches whose token total stays within ``token_budget``.

    Raises:
        DocumentTooLarge: a single document exceeds the budget.
    """
    counts = np.asarray(token_counts, dtype=np.int64)
    if len(counts) and counts.max() > token_budget:
        raise DocumentTooLarge(f"document {int(counts.argmax())} has {int(counts.max())} tokens > {token_budget}")
    order = np.random.default_rng(seed).permutation(len(counts))
    batches, current, used = [], [], 0
    for i in order:
        c = int(counts[i])
        if current and used + c > token_budget:
            batches.append(current)
            current, used = [], 0
        current.append(int(i))
        used += c
    if current:
        batches.append(current)
    return batches


class AdamW:
    """Adam with decoupled weight decay; matrices decay, vectors do not."""

    def __init__(self, params: dict[str, ag.Tensor], config: TrainConfig, m=None, v=None, step: int = 0):
        self.params = params
        self.config = config
        self.m = {k: np.zeros_like(p.data) for k, p in params.items()} if not m else {k: m[k].copy() for k in params}
        self.v = {k: np.zeros_like(p.data) for k, p in params.items()} if not v else {k: v[k].copy() for k in params}
        self.t = step

    def update(self, lr: float) -> None:
        c = self.config
        self.t += 1
        bc1 = 1.0 - c.beta1**self.t
        bc2 = 1.0 - c.beta2**self.t
        for name, p in self.params.items():
            g = p.grad if p.grad is not None else np.zeros_like(p.data)
            m, v = self.m[name], self.v[name]
            m *= c.beta1
            m += (1.0 - c.beta1) * g
            v *= c.beta2
            v += (1.0 - c.beta2) * g * g
            step = (m / bc1) / (np.sqrt(v / bc2) + c.eps)
            if p.data.ndim >= 2 and c.weight_decay:
                step = step + c.weight_decay * p.data
            p.data = p.data - lr * step


def batch_loss(
    model: Segmenter,
    docs: Sequence[EncodedDoc],
    weights: Sequence[float],
    grad_flags: Optional[np.ndarray] = None,
    rng: Optional[np.random.Generator] = None,
) -> ag.Tensor:
    """Weighted cross-entropy over all non-final, non-padding positions."""
    probs, lengths = forward_batch(model, docs, grad_flags, rng)
    s_max = probs.shape[1]
    labels = np.zeros(probs.shape, dtype=np.int64)
    for i, d in enumerate(docs):
        labels[i, : len(d)] = d.labels
    valid = np.arange(s_max)[None, :] < (lengths[:, None] - 1)
    return ag.weighted_bce(probs, labels, weights, valid)


# ---------------------------------------------------------------------------
# training
# ---------------------------------------------------------------------------


@dataclass
class TrainResult:
    best: Checkpoint
    last: Checkpoint
    history: list[dict]


def encode_documents(model: Segmenter, docs: Sequence[Document]) -> list[EncodedDoc]:
    return [model.encode_doc(d.texts, d.labels) for d in docs]


def validation_f1(model: Segmenter, encoded: Sequence[EncodedDoc], threshold: float, batch_docs: int = 64) -> float:
    probs = predict_proba(model, list(encoded), batch_size=batch_docs)
    totals = np.zeros(3)
    for p, d in zip(probs, encoded):
        ref = masses_from_labels(d.labels)
        hyp = masses_from_labels(decide(p, threshold))
        totals += boundary_counts(ref, hyp)
    return float(prf_from_counts(*totals)[2])


def _epoch_batches(encoded, config: TrainConfig, epoch: int) -> list[list[int]]:
    return make_batches([d.token_count for d in encoded], config.token_budget, [config.seed, epoch])


def train(
    train_docs: Sequence[Document],
    val_docs: Sequence[Document],
    model_config: ModelConfig,
    train_config: TrainConfig,
    *,
    resume: Optional[tuple[Checkpoint, Checkpoint]] = None,
    out_dir: Optional[str | Path] = None,
    stop_after_epochs: Optional[int] = None,
    log: Optional[Callable[[dict], None]] = None,
) -> TrainResult:
    """Train from scratch, or continue from ``resume = (last, best)``.

    The vocabulary is built from the training documents.  With ``out_dir``
    the best and last checkpoints and the step history (JSONL) are written
    there after every epoch.  ``stop_after_epochs`` ends the run early
    without changing the learning-rate schedule, which is how an
    interrupted run is simulated.

    Raises:
        NonFiniteLoss: a batch loss is NaN or infinite.
        DocumentTooLarge: a document exceeds the token budget.
    """
    if not train_docs or not val_docs:
        raise InputError("training and validation sets must be non-empty")
    cfg = train_config
    model_config = dataclasses.replace(model_config, dropout=cfg.dropout)
    if resume is None:
        vocab = Vocabulary.build((s.text for d in train_docs for s in d.sentences), max_size=cfg.vocab_size)
        model = Segmenter.create(model_config, vocab, seed=cfg.seed)
        opt = AdamW(model.params, cfg)
        start_epoch, best_f1, best_epoch = 0, float("-inf"), -1
        best_params = model.state_dict()
    else:
        last, best = resume
        model = last.to_model()
        opt = AdamW(model.params, cfg, last.adam_m, last.adam_v, last.step)
        start_epoch, best_f1, best_epoch = last.epoch, last.best_val_f1, last.best_epoch
        best_params = best.params

    encoded = encode_documents(model, train_docs)
    encoded_val = encode_documents(model, val_docs)
    schedule = [_epoch_batches(encoded, cfg, e) for e in range(cfg.epochs)]
    total_steps = sum(len(b) for b in schedule)
    history: list[dict] = []
    out = Path(out_dir) if out_dir is not None else None
    if out is not None:
        out.mkdir(parents=True, exist_ok=True)

    def checkpoint(params, epoch) -> Checkpoint:
        return Checkpoint(
            model.config, {k: v.copy() for k, v in params.items()}, model.vocab.to_list(),
            {k: v.copy() for k, v in opt.m.items()}, {k: v.copy() for k, v in opt.v.items()},
            opt.t, epoch, best_f1, best_epoch, cfg.to_dict(),
        )

    last_epoch = cfg.epochs if stop_after_epochs is None else min(cfg.epochs, start_epoch + stop_after_epochs)
    for epoch in range(start_epoch, last_epoch):
        for b, batch in enumerate(schedule[epoch]):
            rng = np.random.default_rng([cfg.seed, epoch, b])
            flags = sample_gradient_flags(len(batch), cfg.grad_sample_rate, rng)
            docs = [encoded[i] for i in batch]
            model.zero_grad()
            loss = batch_loss(model, docs, cfg.loss_weights, flags, rng)
            value = loss.item()
            if not math.isfinite(value):
                ids = [train_docs[i].id for i in batch]
                raise NonFiniteLoss(f"loss {value} at epoch {epoch}, step {opt.t}, documents {ids[:5]}")
            ag.backward(loss)
            lr = cosine_lr(opt.t, total_steps, cfg.lr)
            opt.update(lr)
            record = {"epoch": epoch, "step": opt.t, "loss": value, "lr": lr, "val_f1": None}
            history.append(record)
        f1 = validation_f1(model, encoded_val, cfg.threshold, cfg.eval_batch_docs)
        if history:
            history[-1]["val_f1"] = f1
        if f1 > best_f1:
            best_f1, best_epoch = f1, epoch
            best_params = model.state_dict()
        if log is not None:
            log({"epoch": epoch, "step": opt.t, "val_f1": f1})
        if out is not None:
            checkpoint(model.state_dict(), epoch + 1).save(out / "last.npz")
            checkpoint(best_params, epoch + 1).save(out / "best.npz")
            with open(out / "history.jsonl", "a", encoding="utf-8") as fh:
                for r in history:
                    if r["epoch"] == epoch:
                        fh.write(json.dumps(r) + "\n")

    final_epoch = max(last_epoch, start_epoch)
    return TrainResult(checkpoint(best_params, final_epoch), checkpoint(model.state_dict(), final_epoch), history)


def evaluate_checkpoint(
    checkpoint: Checkpoint | Segmenter,
    docs: Sequence[Document],
    metric_config: Optional[MetricConfig] = None,
    threshold: float = 0.5,
) -> MetricReport:
    """Predict every document and score against its labels."""
    model = checkpoint.to_model() if isinstance(checkpoint, Checkpoint) else checkpoint
    encoded = encode_documents(model, docs)
    probs = predict_proba(model, encoded)
    refs = [np.asarray(d.labels) for d in docs]
    hyps = [decide(p, threshold) for p in probs]
    return evaluate(refs, hyps, metric_config)
