"""Command-line entry point: ``chaptering <subcommand> ...``.

Exit status is 0 on success, 1 for bad input or configuration and 2 for
anything unexpected.  Each run that writes files also writes a
``*.manifest.json`` next to its main output.
"""

from __future__ import annotations

import argparse
import dataclasses
import json
import sys
import time
from concurrent.futures import ProcessPoolExecutor
from pathlib import Path
from typing import Optional, Sequence

import numpy as np

from . import CHECKPOINT_FORMAT_VERSION, __version__
from .checkpoint import Checkpoint
from .corpus import (
    SynthConfig,
    build_titles_view,
    corpus_stats,
    gen_synthetic,
    ingest_document,
    make_splits,
    read_documents,
    read_jsonl,
    write_documents,
    write_jsonl,
)
from .corpus.ingest import ExclusionReport, channel_of, video_id
from .errors import ChapteringError, ExclusionError, InputError
from .metrics import MetricConfig
from .model import END, MaskSchedule, ModelConfig, Segmenter, StreamSession, decide, predict_proba
from .titling import TitlingConfig, build_title_input, corpus_rouge
from .training import TrainConfig, coerce_fields, encode_documents, evaluate_checkpoint, parse_flat_config, train


def _ints(text: str) -> tuple[int, ...]:
    text = text.strip().strip("[]")
    return tuple(int(x) for x in text.split(",") if x.strip()) if text else ()


def _floats(text: str) -> tuple[float, ...]:
    return tuple(float(x) for x in text.strip().strip("[]").split(",") if x.strip())


def _pair(text: str) -> tuple[int, int]:
    values = _ints(text)
    if len(values) == 1:
        return values[0], values[0]
    if len(values) != 2:
        raise argparse.ArgumentTypeError(f"expected LOW,HIGH, got {text!r}")
    return values


def write_manifest(output: Path, command: str, config: dict, seeds: dict, inputs: dict, outputs: dict, started: float):
    manifest = {
        "subcommand": command,
        "config": config,
        "seeds": seeds,
        "inputs": {k: str(v) for k, v in inputs.items()},
        "outputs": {k: str(v) for k, v in outputs.items()},
        "version": __version__,
        "checkpoint_format": CHECKPOINT_FORMAT_VERSION,
        "wall_time_seconds": round(time.time() - started, 3),
    }
    path = output / "manifest.json" if output.is_dir() else output.with_name(output.name + ".manifest.json")
    path.write_text(json.dumps(manifest, indent=2, sort_keys=True) + "\n", encoding="utf-8")


def _schedule(args, n_layers: int) -> Optional[MaskSchedule]:
    mode = getattr(args, "mode", None)
    alpha = getattr(args, "alpha", None)
    if mode is None and alpha is None:
        return None
    if mode == "offline":
        return MaskSchedule.offline(n_layers)
    return MaskSchedule.online(_ints(alpha) if alpha is not None else (), n_layers)


def _load_model(path: str, args) -> Segmenter:
    model = Checkpoint.load(path).to_model()
    schedule = _schedule(args, model.config.doc_layers)
    return model.with_schedule(schedule) if schedule is not None else model


# ---------------------------------------------------------------------------
# subcommands
# ---------------------------------------------------------------------------


def _ingest_one(item):
    doc_id, vtt_path, chapter_path = item
    if chapter_path is None:
        return doc_id, None, "NoChapters"
    try:
        chapters_obj = json.loads(Path(chapter_path).read_text(encoding="utf-8"))
    except json.JSONDecodeError:
        return doc_id, None, "BadChapters"
    try:
        doc = ingest_document(Path(vtt_path).read_bytes(), chapters_obj, doc_id, channel_of(chapters_obj, doc_id))
    except ExclusionError as exc:
        return doc_id, None, exc.reason
    return doc_id, doc, None


def cmd_ingest(args) -> int:
    started = time.time()
    chapters_dir = Path(args.chapters)
    items = []
    for path in sorted(Path(args.vtt).glob("*.vtt")):
        doc_id = video_id(path)
        chapter_path = chapters_dir / f"{doc_id}.json"
        items.append((doc_id, str(path), str(chapter_path) if chapter_path.exists() else None))
    if args.jobs > 1:
        with ProcessPoolExecutor(args.jobs) as pool:
            results = list(pool.map(_ingest_one, items, chunksize=8))
    else:
        results = [_ingest_one(item) for item in items]
    report = ExclusionReport(total=len(results))
    docs = []
    for doc_id, doc, reason in results:
        if reason:
            report.add(doc_id, reason)
            print(f"excluded {doc_id}: {reason}", file=sys.stderr)
        else:
            docs.append(doc)
    out = Path(args.out)
    write_documents(out, docs)
    report_path = Path(args.report) if args.report else out.with_name(out.name + ".exclusions.json")
    report_path.write_text(json.dumps(report.to_dict(), indent=2) + "\n", encoding="utf-8")
    write_manifest(out, "ingest", {"jobs": args.jobs}, {}, {"vtt": args.vtt, "chapters": args.chapters},
                   {"corpus": out, "report": report_path}, started)
    print(f"{len(docs)} documents written, {len(report.excluded)} excluded ({report.rate:.2%})", file=sys.stderr)
    return 0


def cmd_stats(args) -> int:
    started = time.time()
    report = corpus_stats(read_documents(args.corpus), n=args.n)
    text = json.dumps(report.to_dict(), indent=2) + "\n"
    if args.out:
        Path(args.out).write_text(text, encoding="utf-8")
        write_manifest(Path(args.out), "stats", {"n": args.n}, {}, {"corpus": args.corpus}, {"stats": args.out}, started)
    else:
        sys.stdout.write(text)
    return 0


def cmd_split(args) -> int:
    started = time.time()
    docs = read_documents(args.corpus)
    ratios = _floats(args.ratios)
    assignment = make_splits([(d.id, d.channel) for d in docs], ratios, args.seed)
    out = Path(args.out)
    out.write_text(json.dumps(assignment, indent=0, sort_keys=True) + "\n", encoding="utf-8")
    outputs = {"assignment": out}
    if args.partition_dir:
        part_dir = Path(args.partition_dir)
        part_dir.mkdir(parents=True, exist_ok=True)
        for part in ("train", "validation", "test"):
            path = part_dir / f"{part}.jsonl"
            write_documents(path, [d for d in docs if assignment[d.id] == part])
            outputs[part] = path
    write_manifest(out, "split", {"ratios": list(ratios)}, {"seed": args.seed}, {"corpus": args.corpus}, outputs, started)
    return 0


def cmd_synth(args) -> int:
    started = time.time()
    config = SynthConfig(
        n_docs=args.n_docs,
        vocab_size=args.vocab_size,
        n_topics=args.n_topics,
        segment_length=args.segment_length,
        segments_per_doc=args.segments_per_doc,
        sentence_length=args.sentence_length,
        noise=args.noise,
        n_channels=args.n_channels,
        concentration=args.concentration,
    )
    out = Path(args.out)
    write_documents(out, gen_synthetic(config, args.seed))
    write_manifest(out, "synth", config.to_dict(), {"seed": args.seed}, {}, {"corpus": out}, started)
    return 0


_TRAIN_FIELDS = [f for f in dataclasses.fields(TrainConfig) if f.name != "seed"]


def cmd_train(args) -> int:
    started = time.time()
    raw = parse_flat_config(Path(args.config).read_text(encoding="utf-8")) if args.config else {}
    values = coerce_fields(TrainConfig, raw)
    for f in _TRAIN_FIELDS:
        flag = getattr(args, f.name)
        if flag is not None:
            values[f.name] = flag
    if args.seed_given or "seed" not in values:
        values["seed"] = args.seed
    train_config = TrainConfig(**values)
    schedule = _schedule(args, args.doc_layers) or MaskSchedule.offline(args.doc_layers)
    model_config = ModelConfig(doc_layers=args.doc_layers, schedule=schedule, dtype=args.dtype)
    out = Path(args.out)
    resume = None
    if args.resume:
        resume = (Checkpoint.load(Path(args.resume) / "last.npz"), Checkpoint.load(Path(args.resume) / "best.npz"))
    train(
        read_documents(args.train), read_documents(args.val), model_config, train_config,
        resume=resume, out_dir=out, log=lambda r: print(json.dumps(r), file=sys.stderr),
    )
    write_manifest(out, "train", {"train": train_config.to_dict(), "model": model_config.to_dict()},
                   {"seed": train_config.seed}, {"train": args.train, "val": args.val},
                   {"best": out / "best.npz", "last": out / "last.npz", "history": out / "history.jsonl"}, started)
    return 0


def _predict_chunk(item):
    model_path, mode, alpha, docs = item
    ns = argparse.Namespace(mode=mode, alpha=alpha)
    model = _load_model(model_path, ns)
    return [p.tolist() for p in predict_proba(model, encode_documents(model, docs))]


def _predict_all(args, docs) -> list[np.ndarray]:
    mode, alpha = getattr(args, "mode", None), getattr(args, "alpha", None)
    if args.jobs > 1 and len(docs) > 1:
        chunks = [docs[i :: args.jobs] for i in range(args.jobs)]
        with ProcessPoolExecutor(args.jobs) as pool:
            parts = list(pool.map(_predict_chunk, [(args.model, mode, alpha, c) for c in chunks]))
        probs: list = [None] * len(docs)
        for i, part in enumerate(parts):
            probs[i :: args.jobs] = part
        return [np.asarray(p) for p in probs]
    return [np.asarray(p) for p in _predict_chunk((args.model, mode, alpha, docs))]


def cmd_evaluate(args) -> int:
    started = time.time()
    docs = read_documents(args.corpus)
    if args.split:
        assignment = json.loads(Path(args.split).read_text(encoding="utf-8"))
        docs = [d for d in docs if assignment.get(d.id) == args.partition]
    if not docs:
        raise InputError("no documents to evaluate")
    config = MetricConfig(k=args.k if args.k == "auto" else int(args.k), n_t=args.n_t, bootstrap=args.bootstrap, seed=args.seed)
    if args.jobs > 1:
        from .metrics import evaluate

        probs = _predict_all(args, docs)
        report = evaluate([np.asarray(d.labels) for d in docs], [decide(p, args.threshold) for p in probs], config)
    else:
        report = evaluate_checkpoint(_load_model(args.model, args), docs, config, args.threshold)
    text = json.dumps(report.to_dict(), indent=2) + "\n"
    if args.out:
        Path(args.out).write_text(text, encoding="utf-8")
        write_manifest(Path(args.out), "evaluate", dataclasses.asdict(config) | {"threshold": args.threshold},
                       {"bootstrap": args.seed}, {"model": args.model, "corpus": args.corpus}, {"report": args.out}, started)
    else:
        sys.stdout.write(text)
    return 0


def cmd_segment(args) -> int:
    started = time.time()
    source = sys.stdin if args.input == "-" else open(args.input, encoding="utf-8")
    with source:
        records = [json.loads(line) for line in source if line.strip()]
    docs = []
    for r in records:
        if "sentences" not in r:
            raise InputError(f"record {r.get('id', '?')!r} has no sentences")
        texts = [s["text"] if isinstance(s, dict) else s for s in r["sentences"]]
        docs.append(_TextDoc(str(r.get("id", len(docs))), texts))
    probs = _predict_all(args, docs)
    rows = [
        {"id": d.id, "labels": decide(p, args.threshold).tolist(), "probabilities": [float(x) for x in p]}
        for d, p in zip(docs, probs)
    ]
    if args.out:
        write_jsonl(args.out, rows)
        write_manifest(Path(args.out), "segment", {"mode": args.mode, "alpha": args.alpha, "threshold": args.threshold},
                       {}, {"model": args.model, "input": args.input}, {"labels": args.out}, started)
    else:
        for row in rows:
            sys.stdout.write(json.dumps(row) + "\n")
    return 0


@dataclasses.dataclass
class _TextDoc:
    id: str
    texts: list[str]

    @property
    def labels(self):
        return None


def cmd_stream(args) -> int:
    args.mode = "online"
    model = _load_model(args.model, args)
    session = StreamSession(model, args.threshold)
    out = sys.stdout
    for line in sys.stdin:
        text = line.rstrip("\n")
        if not text.strip():
            continue
        for d in session.step(text):
            out.write(f"{d.index}\t{d.label}\n")
        out.flush()
    for d in session.step(END):
        out.write(f"{d.index}\t{d.label}\n")
    out.flush()
    return 0


def cmd_titles_prep(args) -> int:
    started = time.time()
    docs = read_documents(args.corpus)
    split = json.loads(Path(args.split).read_text(encoding="utf-8")) if args.split else None
    config = TitlingConfig(span=args.span, context=args.context, max_chars=args.max_chars)
    rows = []
    for ex in build_titles_view(docs, split):
        if args.partition and ex.split != args.partition:
            continue
        rows.append({"input": build_title_input(ex, config), "target": ex.title, "video_id": ex.video_id,
                     "section_index": ex.section_index, "split": ex.split})
    write_jsonl(args.out, rows)
    write_manifest(Path(args.out), "titles-prep", dataclasses.asdict(config), {}, {"corpus": args.corpus},
                   {"pairs": args.out}, started)
    return 0


def cmd_rouge(args) -> int:
    started = time.time()
    pairs = []
    for r in read_jsonl(args.pairs):
        if "reference" not in r or "candidate" not in r:
            raise InputError("each record needs 'reference' and 'candidate'")
        pairs.append((r["reference"], r["candidate"]))
    scores = corpus_rouge(pairs)
    result = {name: s._asdict() for name, s in scores.items()} | {"pairs": len(pairs)}
    text = json.dumps(result, indent=2) + "\n"
    if args.out:
        Path(args.out).write_text(text, encoding="utf-8")
        write_manifest(Path(args.out), "rouge", {}, {}, {"pairs": args.pairs}, {"scores": args.out}, started)
    else:
        sys.stdout.write(text)
    return 0


# ---------------------------------------------------------------------------
# parser
# ---------------------------------------------------------------------------


def build_parser() -> argparse.ArgumentParser:
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--seed", type=int, default=None, help="random seed (default 0)")
    common.add_argument("--jobs", type=int, default=1)

    parser = argparse.ArgumentParser(prog="chaptering", description="Transcript chaptering toolkit.")
    parser.add_argument(
        "--version", action="version", version=f"chaptering {__version__} (checkpoint format {CHECKPOINT_FORMAT_VERSION})"
    )
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("ingest", parents=[common], help="captions + chapter lists to a JSONL corpus")
    p.add_argument("--vtt", required=True)
    p.add_argument("--chapters", required=True)
    p.add_argument("--out", required=True)
    p.add_argument("--report")
    p.set_defaults(func=cmd_ingest)

    p = sub.add_parser("stats", parents=[common], help="corpus statistics")
    p.add_argument("--corpus", required=True)
    p.add_argument("--n", type=int, default=20)
    p.add_argument("--out")
    p.set_defaults(func=cmd_stats)

    p = sub.add_parser("split", parents=[common], help="channel-disjoint partitions")
    p.add_argument("--corpus", required=True)
    p.add_argument("--ratios", default="0.85,0.075,0.075")
    p.add_argument("--out", required=True)
    p.add_argument("--partition-dir")
    p.set_defaults(func=cmd_split)

    p = sub.add_parser("synth", parents=[common], help="generate a synthetic corpus")
    p.add_argument("--out", required=True)
    p.add_argument("--n-docs", type=int, default=100)
    p.add_argument("--vocab-size", type=int, default=500)
    p.add_argument("--n-topics", type=int, default=5)
    p.add_argument("--segment-length", type=_pair, default=(3, 11))
    p.add_argument("--segments-per-doc", type=_pair, default=(6, 6))
    p.add_argument("--sentence-length", type=_pair, default=(4, 8))
    p.add_argument("--noise", type=float, default=0.0)
    p.add_argument("--n-channels", type=int, default=20)
    p.add_argument("--concentration", type=float, default=1.0)
    p.set_defaults(func=cmd_synth)

    p = sub.add_parser("train", parents=[common], help="train a segmenter")
    p.add_argument("--train", required=True)
    p.add_argument("--val", required=True)
    p.add_argument("--out", required=True)
    p.add_argument("--config", help="flat key = value file with training settings")
    p.add_argument("--resume", help="directory holding last.npz and best.npz")
    p.add_argument("--mode", choices=("offline", "online"))
    p.add_argument("--alpha")
    p.add_argument("--doc-layers", type=int, default=4)
    p.add_argument("--dtype", choices=("float64", "float32"), default="float64")
    for f in _TRAIN_FIELDS:
        kind = _floats if f.name == "loss_weights" else type(f.default)
        p.add_argument("--" + f.name.replace("_", "-"), dest=f.name, type=kind, default=None)
    p.set_defaults(func=cmd_train)

    p = sub.add_parser("evaluate", parents=[common], help="score a checkpoint")
    p.add_argument("--model", required=True)
    p.add_argument("--corpus", required=True)
    p.add_argument("--split")
    p.add_argument("--partition", default="test")
    p.add_argument("--mode", choices=("offline", "online"))
    p.add_argument("--alpha")
    p.add_argument("--threshold", type=float, default=0.5)
    p.add_argument("--k", default="auto")
    p.add_argument("--n-t", type=int, default=2)
    p.add_argument("--bootstrap", type=int, default=100)
    p.add_argument("--out")
    p.set_defaults(func=cmd_evaluate)

    p = sub.add_parser("segment", parents=[common], help="label documents")
    p.add_argument("--model", required=True)
    p.add_argument("--input", default="-")
    p.add_argument("--out")
    p.add_argument("--mode", choices=("offline", "online"))
    p.add_argument("--alpha")
    p.add_argument("--threshold", type=float, default=0.5)
    p.set_defaults(func=cmd_segment)

    p = sub.add_parser("stream", parents=[common], help="label sentences read from standard input")
    p.add_argument("--model", required=True)
    p.add_argument("--alpha", required=True)
    p.add_argument("--threshold", type=float, default=0.5)
    p.set_defaults(func=cmd_stream)

    p = sub.add_parser("titles-prep", parents=[common], help="title-generation input/target pairs")
    p.add_argument("--corpus", required=True)
    p.add_argument("--split")
    p.add_argument("--partition")
    p.add_argument("--out", required=True)
    p.add_argument("--span", type=int)
    p.add_argument("--context", choices=("none", "previous-titles"), default="none")
    p.add_argument("--max-chars", type=int)
    p.set_defaults(func=cmd_titles_prep)

    p = sub.add_parser("rouge", parents=[common], help="ROUGE over reference/candidate pairs")
    p.add_argument("--pairs", required=True)
    p.add_argument("--out")
    p.set_defaults(func=cmd_rouge)
    return parser


def dispatch(argv: Optional[Sequence[str]] = None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return 0 if exc.code == 0 else 1
    args.seed_given = args.seed is not None
    if args.seed is None:
        args.seed = 0
    try:
        if getattr(args, "out", None) and args.out != "-":
            Path(args.out).parent.mkdir(parents=True, exist_ok=True)
        return args.func(args)
    except (InputError, FileNotFoundError, IsADirectoryError, json.JSONDecodeError, argparse.ArgumentTypeError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1
    except ChapteringError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1
    except Exception as exc:  # noqa: BLE001
        print(f"internal error: {type(exc).__name__}: {exc}", file=sys.stderr)
        return 2


def main() -> None:
    sys.exit(dispatch())


if __name__ == "__main__":
    main()
