"""How much future context does a segmenter need?

Trains the toy segmenter three times on one synthetic corpus: with no look-ahead,
with three sentences of look-ahead, and with the whole document visible.  Then
streams one held-out document through the three-sentence model to show the
bounded delay.

    python demos/future_context.py            # about 10 minutes on one core
    python demos/future_context.py --docs 1000   # about 5 minutes
"""

import argparse
import time

from chaptering.corpus import SynthConfig, gen_synthetic
from chaptering.metrics import MetricConfig
from chaptering.model import END, MaskSchedule, ModelConfig, StreamSession
from chaptering.training import TrainConfig, evaluate_checkpoint, train


def main() -> None:
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--docs", type=int, default=2000, help="training documents")
    ap.add_argument("--epochs", type=int, default=4)
    ap.add_argument("--seed", type=int, default=0)
    args = ap.parse_args()

    corpus = SynthConfig(n_docs=args.docs + 400, noise=0.15, concentration=0.1)
    docs = gen_synthetic(corpus, seed=args.seed)
    train_docs, val_docs, test_docs = docs[: args.docs], docs[args.docs : args.docs + 200], docs[args.docs + 200 :]
    print(f"{len(train_docs)} training documents, {len(test_docs)} held out; "
          f"{sum(len(d) for d in docs) / len(docs):.1f} sentences per document on average\n")

    recipe = TrainConfig(lr=1e-3, epochs=args.epochs, token_budget=2000, seed=args.seed)
    schedules = {
        "no look-ahead (c=0)": MaskSchedule.online(()),
        "three sentences (c=3)": MaskSchedule.online((2, 1)),
        "whole document": MaskSchedule.offline(),
    }
    models = {}
    print(f"{'context':<24}{'P':>7}{'R':>7}{'F1':>7}{'P_k':>7}{'time':>8}")
    for name, schedule in schedules.items():
        start = time.perf_counter()
        result = train(train_docs, val_docs, ModelConfig(schedule=schedule), recipe)
        report = evaluate_checkpoint(result.best, test_docs, MetricConfig(bootstrap=0))
        models[name] = result.best.to_model()
        print(f"{name:<24}{report.p:7.3f}{report.r:7.3f}{report.f1:7.3f}{report.pk:7.3f}"
              f"{time.perf_counter() - start:7.0f}s")

    # Without look-ahead the model must call a boundary before it has seen
    # the next sentence, so it can only guess from segment length.  Three
    # sentences of look-ahead recover almost all of the offline accuracy.

    doc = test_docs[0]
    session = StreamSession(models["three sentences (c=3)"])
    print(f"\nstreaming {doc.id} with a delay of {session.latency} sentences")
    for i, text in enumerate([*doc.texts, END]):
        for d in session.step(text):
            mark = "boundary" if d.label else ""
            truth = "(true boundary)" if doc.labels[d.index] else ""
            arrival = "end of stream" if text is END else f"after sentence {i}"
            print(f"  {arrival:>18}: sentence {d.index:2d}  p={d.probability:.2f} {mark} {truth}")


if __name__ == "__main__":
    main()
