"""From captions to titled chapters, without any training.

Builds a small WebVTT transcript and its chapter list in memory, ingests them
into sentence-level boundary labels, prints corpus statistics, and scores a
keyword baseline title for every chapter with ROUGE.

    python demos/captions_to_titles.py
"""

from chaptering.corpus import build_titles_view, corpus_stats, ingest_pairs
from chaptering.titling import corpus_rouge, extractive_title, inverse_document_frequency

VTT = """WEBVTT

00:00:00.000 --> 00:00:05.000
Hi everyone. Today we bake bread at home.

00:00:05.000 --> 00:00:11.000
First the flour. Bread flour has more protein than cake flour.

00:00:11.000 --> 00:00:17.000
Weigh the flour carefully. Then add water and salt.

00:00:17.000 --> 00:00:24.000
Now the yeast. Dried yeast needs warm water to wake up.

00:00:24.000 --> 00:00:30.000
Let the yeast foam for ten minutes. Then knead the dough.

00:00:30.000 --> 00:00:36.000
Baking comes last. Bake the loaf in a hot oven for forty minutes.

00:00:36.000 --> 00:00:40.000
Thanks for watching!
"""

CHAPTERS = {
    "channel": "home-kitchen",
    "chapters": [
        {"title": "Choosing Flour", "start_seconds": 5.0},
        {"title": "Yeast And Kneading", "start_seconds": 17.0},
        {"title": "Baking The Loaf", "start_seconds": 30.0, "end_seconds": 36.0},
    ],
}


def main() -> None:
    docs, report = ingest_pairs([("bread", VTT, CHAPTERS), ("no-chapters", VTT, None)])
    print(f"ingested {len(docs)} of {report.total} videos; excluded: {dict(report.reasons)}\n")
    doc = docs[0]
    for sentence, label in zip(doc.sentences, doc.labels):
        print(f"  [{sentence.start:5.1f}-{sentence.end:5.1f}] {'|' if label else ' '} {sentence.text}")
    print("\nchapters (Intro and Outro are added where the captions overrun the list):")
    for ch in doc.chapters:
        print(f"  {ch.start:5.1f}-{ch.end:5.1f}  {ch.title}")

    stats = corpus_stats(docs, n=1)
    print(f"\nsentences per segment {stats.segment_length_mean:.2f} +- {stats.segment_length_sd:.2f}")

    examples = build_titles_view(docs)
    idf = inverse_document_frequency([ex.sentences for ex in examples])
    pairs = []
    print("\nkeyword baseline titles")
    for ex in examples:
        guess = extractive_title(ex.sentences, k=2, idf=idf)
        pairs.append((ex.title, guess))
        print(f"  {ex.title:<20} -> {guess}")
    scores = corpus_rouge(pairs)
    print("\n" + "  ".join(f"{name} F1 {score.f1:.3f}" for name, score in scores.items()))


if __name__ == "__main__":
    main()
