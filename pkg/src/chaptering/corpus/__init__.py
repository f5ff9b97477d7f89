from .align import INTRO, OUTRO, align_chapters, assign_sentences, chapters_from_json, cover_chapters, sanity_check
from .ingest import ExclusionReport, ingest_directories, ingest_document, ingest_pairs
from .io import read_documents, read_jsonl, read_title_examples, write_documents, write_jsonl, write_title_examples
from .sentences import RuleTokenizer, SentenceTokenizer, split_sentences
from .splits import PARTITIONS, make_splits, split_counts
from .stats import MAX_TITLE_CHARS, build_titles_view, concentration_index, corpus_stats
from .synthetic import SynthConfig, gen_synthetic
from .types import CaptionCue, Chapter, Document, Sentence, StatsReport, TitleExample
from .vtt import parse_timestamp, parse_vtt, repair_cues

__all__ = [
    "INTRO",
    "MAX_TITLE_CHARS",
    "OUTRO",
    "PARTITIONS",
    "CaptionCue",
    "Chapter",
    "Document",
    "ExclusionReport",
    "RuleTokenizer",
    "Sentence",
    "SentenceTokenizer",
    "StatsReport",
    "SynthConfig",
    "TitleExample",
    "align_chapters",
    "assign_sentences",
    "build_titles_view",
    "chapters_from_json",
    "concentration_index",
    "corpus_stats",
    "cover_chapters",
    "gen_synthetic",
    "ingest_directories",
    "ingest_document",
    "ingest_pairs",
    "make_splits",
    "parse_timestamp",
    "parse_vtt",
    "read_documents",
    "read_jsonl",
    "read_title_examples",
    "repair_cues",
    "sanity_check",
    "split_counts",
    "split_sentences",
    "write_documents",
    "write_jsonl",
    "write_title_examples",
]
