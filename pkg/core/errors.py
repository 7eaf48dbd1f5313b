"""
Exception hierarchy for the Quintain limerick engine.
"""
from typing import Any, Dict, Optional


class QuintainError(Exception):
    """Base class for every domain failure raised by the engine."""


class ResourceError(QuintainError):
    """A resource file is missing, unreadable or inconsistent with the others."""


class LexiconLoadError(ResourceError):
    """The pronunciation dictionary could not be loaded."""


class AbsentWordError(QuintainError, KeyError):
    """A word has no pronunciation entry."""

    def __init__(self, word: str):
        super().__init__(word)
        self.word = word

    def __str__(self) -> str:
        return f"word not in lexicon: {self.word!r}"


class TaggingError(QuintainError):
    """A word cannot be resolved to a POS tag."""

    def __init__(self, word: str):
        super().__init__(word)
        self.word = word

    def __str__(self) -> str:
        return f"cannot tag word: {self.word!r}"


class IngestionError(ResourceError):
    """The tagged corpus is malformed or yields no templates."""


class TrainingError(QuintainError):
    """The n-gram model could not be trained."""


class ScoringBackendError(QuintainError):
    """The language-model backend failed or returned an unusable response."""


class AbsentEmbeddingError(QuintainError, KeyError):
    """A word has no vector in the embedding space."""

    def __init__(self, word: str):
        super().__init__(word)
        self.word = word

    def __str__(self) -> str:
        return f"word not embedded: {self.word!r}"


class EmptySupportError(QuintainError):
    """No word passes the indicators of a storyline conditional."""


class ConstrainedSamplingError(QuintainError):
    """Constrained sampling ran out of attempts."""

    def __init__(self, message: str, attempts: int):
        super().__init__(message)
        self.attempts = attempts


class GenerationFailure(QuintainError):
    """No limerick survived the search for a request."""

    def __init__(self, message: str, deepest_line: int, diagnostics: Optional[Dict[str, Any]] = None):
        super().__init__(message)
        self.deepest_line = deepest_line
        self.diagnostics = diagnostics or {}


class UndefinedMetricError(QuintainError):
    """A metric has no defined value for the given input."""
