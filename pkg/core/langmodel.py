"""
Language-model contract for the Quintain limerick engine.
This module defines next-word distributions, the line scorer, and the built-in
additive-smoothing n-gram reference model.
"""
import json
import logging
import math
from collections import Counter
from dataclasses import dataclass
from pathlib import Path
from typing import Dict, Iterable, List, Mapping, Optional, Protocol, Sequence, Tuple, Union

import numpy as np

from config.settings import BOS_TOKEN, NGRAM_FORMAT_VERSION, UNK_TOKEN
from core.errors import ResourceError, TrainingError
from utils.text_processing import TextSource, read_text_lines, tokenize

logger = logging.getLogger(__name__)

RESERVED_TOKENS = frozenset({UNK_TOKEN, BOS_TOKEN})


@dataclass(frozen=True)
class TokenDistribution:
    """
    Sparse next-word probabilities.

    ``truncated`` marks a top-k view from a remote backend, where a missing
    word means "not returned" rather than "zero probability".
    """

    support: Mapping[str, float]
    context_len: int
    truncated: bool = False

    def prob(self, word: str) -> float:
        return self.support.get(word, 0.0)

    def logprob(self, word: str) -> float:
        p = self.prob(word)
        return math.log(p) if p > 0 else float("-inf")

    def total(self) -> float:
        return float(sum(self.support.values()))

    def normalized(self) -> "TokenDistribution":
        total = self.total()
        if total <= 0:
            return TokenDistribution({}, self.context_len, self.truncated)
        return TokenDistribution(
            {w: p / total for w, p in self.support.items()}, self.context_len, self.truncated
        )

    def __len__(self) -> int:
        return len(self.support)


class LanguageModel(Protocol):
    """Anything that can produce next-word distributions."""

    def next_distribution(self, context: Sequence[str]) -> TokenDistribution:
        ...


class NgramModel:
    """
    Additive-smoothing n-gram model.

    P(w | ctx) = (count(ctx, w) + alpha) / (count(ctx) + alpha * |V|), where V is
    the predictable vocabulary (observed tokens; the UNK symbol only stands in for
    unknown context words and is never predicted).
    """

    def __init__(self,
                 order: int,
                 alpha: float,
                 vocabulary: Iterable[str],
                 counts: Optional[Mapping[Tuple[str, ...], Mapping[str, int]]] = None):
        if order < 1:
            raise ValueError("order must be at least 1")
        if not alpha > 0:
            raise ValueError("alpha must be positive")
        self.order = order
        self.alpha = float(alpha)
        words = sorted({w for w in vocabulary if w not in RESERVED_TOKENS})
        if not words:
            raise ValueError("vocabulary is empty")
        self.vocabulary: Tuple[str, ...] = tuple(words) + (UNK_TOKEN,)
        self._predictable: Tuple[str, ...] = tuple(words)
        self._index = {w: i for i, w in enumerate(self._predictable)}
        self.counts: Dict[Tuple[str, ...], Counter] = {
            tuple(ctx): Counter(nexts) for ctx, nexts in (counts or {}).items()
        }
        self._cache: Dict[Tuple[str, ...], TokenDistribution] = {}

    @property
    def predictable(self) -> Tuple[str, ...]:
        return self._predictable

    def _context_key(self, context: Sequence[str]) -> Tuple[str, ...]:
        width = self.order - 1
        if width == 0:
            return ()
        mapped = [w if w in self._index or w == BOS_TOKEN else UNK_TOKEN for w in context[-width:]]
        return tuple([BOS_TOKEN] * (width - len(mapped)) + mapped)

    def next_distribution(self, context: Sequence[str]) -> TokenDistribution:
        key = self._context_key(context)
        cached = self._cache.get(key)
        if cached is not None:
            return cached
        observed = self.counts.get(key, Counter())
        counts = np.full(len(self._predictable), self.alpha)
        for word, count in observed.items():
            index = self._index.get(word)
            if index is not None:
                counts[index] += count
        probs = counts / counts.sum()
        dist = TokenDistribution(dict(zip(self._predictable, probs.tolist())), len(key))
        self._cache[key] = dist
        return dist

    def to_dict(self) -> Dict[str, object]:
        return {
            "format_version": NGRAM_FORMAT_VERSION,
            "order": self.order,
            "alpha": self.alpha,
            "vocabulary": list(self._predictable),
            "counts": [
                {"context": list(ctx), "next": dict(sorted(nexts.items()))}
                for ctx, nexts in sorted(self.counts.items())
            ],
        }

    @classmethod
    def from_dict(cls, data: Mapping[str, object]) -> "NgramModel":
        version = data.get("format_version")
        if version != NGRAM_FORMAT_VERSION:
            raise ResourceError(f"unsupported n-gram model format version {version!r}")
        counts = {tuple(item["context"]): item["next"] for item in data["counts"]}
        return cls(int(data["order"]), float(data["alpha"]), data["vocabulary"], counts)

    def save(self, path: Union[str, Path]) -> None:
        with open(path, "w", encoding="utf-8", newline="\n") as f:
            json.dump(self.to_dict(), f, sort_keys=True)
            f.write("\n")

    @classmethod
    def load(cls, path: Union[str, Path]) -> "NgramModel":
        try:
            with open(path, "r", encoding="utf-8") as f:
                data = json.load(f)
        except (OSError, json.JSONDecodeError) as e:
            raise ResourceError(f"cannot load n-gram model {path}: {e}") from e
        try:
            return cls.from_dict(data)
        except (KeyError, TypeError, ValueError) as e:
            raise ResourceError(f"n-gram model {path} is malformed: {e}") from e


def next_distribution(model: LanguageModel, context: Sequence[str]) -> TokenDistribution:
    return model.next_distribution(context)


def train_ngram(corpus: Iterable[Sequence[str]], order: int, alpha: float) -> NgramModel:
    """
    Count n-grams over tokenized sentences, padding each with sentence-start symbols.

    Args:
        corpus: Sentences as token sequences
        order: n-gram order (1 ignores context)
        alpha: Additive smoothing constant

    Returns:
        The trained NgramModel

    Raises:
        TrainingError: on an empty corpus or invalid hyper-parameters
    """
    if order < 1:
        raise TrainingError("order must be at least 1")
    if not alpha > 0:
        raise TrainingError("alpha must be positive")
    counts: Dict[Tuple[str, ...], Counter] = {}
    vocabulary = set()
    width = order - 1
    sentences = 0
    for sentence in corpus:
        tokens = [t for t in sentence if t not in RESERVED_TOKENS]
        if not tokens:
            continue
        sentences += 1
        vocabulary.update(tokens)
        padded = [BOS_TOKEN] * width + tokens
        for i in range(width, len(padded)):
            ctx = tuple(padded[i - width:i])
            counts.setdefault(ctx, Counter())[padded[i]] += 1
    if not sentences:
        raise TrainingError("empty corpus")
    logger.info("Trained %d-gram model on %d sentences, %d word types", order, sentences, len(vocabulary))
    return NgramModel(order, alpha, vocabulary, counts)


def read_training_text(source: TextSource) -> List[List[str]]:
    """One tokenized sentence per non-empty line."""
    return [tokens for tokens in (tokenize(line) for line in read_text_lines(source)) if tokens]


def score_line(model: LanguageModel, words: Sequence[str], conditioning_prefix: Sequence[str] = ()) -> float:
    """
    Mean natural-log probability of ``words`` given the running prefix.

    Higher is better; a zero-probability token gives ``-inf``.

    Raises:
        ValueError: if ``words`` is empty
    """
    if not words:
        raise ValueError("cannot score an empty line")
    context: List[str] = list(conditioning_prefix)
    total = 0.0
    for word in words:
        p = model.next_distribution(context).prob(word)
        if p <= 0:
            return float("-inf")
        total += math.log(p)
        context.append(word)
    return total / len(words)
