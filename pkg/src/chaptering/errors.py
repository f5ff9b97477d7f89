"""Exception hierarchy.

Errors raised while ingesting a single video derive from
:class:`ExclusionError`; the ingest pipeline catches them and counts the
document as excluded under ``reason``.
"""

from __future__ import annotations


class ChapteringError(Exception):
    """Base class for all errors raised by this package."""


class InputError(ChapteringError, ValueError):
    """Invalid user input (bad config, malformed file, inconsistent sizes)."""


class ExclusionError(InputError):
    """A document cannot be ingested and must be excluded from the corpus."""

    reason = "Error"

    def __init__(self, message: str = "", reason: str | None = None):
        super().__init__(message)
        if reason is not None:
            self.reason = reason


class MalformedVtt(ExclusionError):
    reason = "MalformedVtt"


class UnfixableTimestamps(ExclusionError):
    reason = "UnfixableTimestamps"


class NoPunctuation(ExclusionError):
    reason = "NoPunctuation"


class EmptyDocument(ExclusionError):
    reason = "EmptyDocument"


class EmptyInput(InputError):
    pass


class InsufficientData(InputError):
    pass


class BadConfig(InputError):
    pass


class ShapeMismatch(InputError):
    pass


class OddDimension(InputError):
    pass


class AllMasked(InputError):
    pass


class NonScalarLoss(ChapteringError):
    pass


class DoubleBackward(ChapteringError):
    pass


class BadSchedule(InputError):
    pass


class EmptySentence(InputError):
    pass


class MissingEmbedding(InputError, KeyError):
    pass


class SessionClosed(ChapteringError):
    pass


class DocumentTooLarge(InputError):
    pass


class NonFiniteLoss(ChapteringError):
    pass


class MassMismatch(InputError):
    pass


class DegenerateLength(InputError):
    pass


class TooFewDocuments(InputError):
    pass


class EmptySection(InputError):
    pass


class CheckpointError(InputError):
    pass
