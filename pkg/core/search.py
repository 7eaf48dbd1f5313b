"""
Decoding core for the Quintain limerick engine.
This module implements meter filtering, template-constrained candidate
extension, multi-template beam selection and the global top-N baseline.
"""
import logging
import math
from collections import defaultdict
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field, replace
from typing import Callable, Dict, Iterable, List, Optional, Sequence, Tuple

import numpy as np

from config.settings import (DEFAULT_BEAM_SIZE, DEFAULT_PER_TEMPLATE_BEAM, DEFAULT_SEED,
                             MAX_LINE_TOKENS, SEARCH_WORKERS)
from core.langmodel import RESERVED_TOKENS, LanguageModel, TokenDistribution
from core.phonetics import Lexicon, MeterSpec, StressPattern, fits_meter
from core.templates import PosWeights, TemplateBank, diversity_score

logger = logging.getLogger(__name__)

Tags = Tuple[str, ...]
WordTags = Callable[[str], Sequence[str]]


@dataclass(frozen=True)
class PartialLine:
    """
    One beam entry: a line under construction for one parent poem.

    ``context`` is the conditioning prefix (earlier lines) and ``prior_logprob`` /
    ``prior_tokens`` carry the parent poem's running totals, so ``score`` is the
    poem-level mean log-probability including this line.
    """

    poem_key: str
    line_idx: int
    context: Tuple[str, ...] = ()
    words: Tuple[str, ...] = ()
    tags: Tags = ()
    stresses: Tuple[StressPattern, ...] = ()
    syllables_used: int = 0
    sum_logprob: float = 0.0
    prior_logprob: float = 0.0
    prior_tokens: int = 0
    complete: bool = False
    template_id: Optional[str] = None
    estimated: Tuple[str, ...] = ()

    def __post_init__(self):
        if not len(self.words) == len(self.tags) == len(self.stresses):
            raise ValueError("words, tags and stresses must align")

    @property
    def line_score(self) -> float:
        if not self.words:
            return 0.0
        return self.sum_logprob / len(self.words)

    @property
    def score(self) -> float:
        tokens = self.prior_tokens + len(self.words)
        if tokens == 0:
            return 0.0
        return (self.prior_logprob + self.sum_logprob) / tokens

    def extended(self, word: str, tag: str, pattern: StressPattern, logprob: float,
                 complete: bool, template_id: Optional[str] = None,
                 estimated: bool = False) -> "PartialLine":
        return replace(
            self,
            words=self.words + (word,),
            tags=self.tags + (tag,),
            stresses=self.stresses + (pattern,),
            syllables_used=self.syllables_used + len(pattern),
            sum_logprob=self.sum_logprob + logprob,
            complete=complete,
            template_id=template_id,
            estimated=self.estimated + ((word,) if estimated else ()),
        )


@dataclass
class SearchBeam:
    """Beam entries with distinct (poem, words) keys; ``capacity`` None means unbounded."""

    entries: List[PartialLine] = field(default_factory=list)
    capacity: Optional[int] = None

    def __post_init__(self):
        if self.capacity is not None and len(self.entries) > self.capacity:
            raise ValueError(f"beam holds {len(self.entries)} entries, capacity {self.capacity}")
        keys = [(e.poem_key, e.words) for e in self.entries]
        if len(set(keys)) != len(keys):
            raise ValueError("beam entries must be distinct")

    def __len__(self) -> int:
        return len(self.entries)

    def __iter__(self):
        return iter(self.entries)

    def __bool__(self) -> bool:
        return bool(self.entries)

    def completed(self) -> List[PartialLine]:
        return [e for e in self.entries if e.complete]

    def partial(self) -> List[PartialLine]:
        return [e for e in self.entries if not e.complete]


@dataclass(frozen=True)
class SearchConfig:
    N: int = DEFAULT_BEAM_SIZE
    n: int = DEFAULT_PER_TEMPLATE_BEAM
    rng_seed: int = DEFAULT_SEED
    max_line_tokens: int = MAX_LINE_TOKENS
    workers: int = SEARCH_WORKERS

    def __post_init__(self):
        if self.n < 1 or self.N < 1:
            raise ValueError("beam sizes must be positive")
        if self.n > self.N:
            raise ValueError(f"per-template beam n={self.n} exceeds total beam N={self.N}")
        if self.max_line_tokens < 1:
            raise ValueError("max_line_tokens must be positive")
        if self.workers < 1:
            raise ValueError("workers must be positive")


def _fitting_patterns(lexicon: Lexicon, meter: MeterSpec, line_idx: int, offset: int, word: str) -> List[StressPattern]:
    return [p for p in lexicon.patterns(word) if fits_meter(meter, line_idx, offset, p)]


def filter_distribution(dist: TokenDistribution,
                        line: PartialLine,
                        meter: MeterSpec,
                        lexicon: Lexicon) -> TokenDistribution:
    """
    Zero out words that cannot continue ``line`` in meter.

    Surviving masses are returned unnormalized so their log-probabilities stay
    usable for scoring; call ``.normalized()`` for a sampling view.
    """
    support = {
        word: p for word, p in dist.support.items()
        if p > 0 and word not in RESERVED_TOKENS and word in lexicon
        and _fitting_patterns(lexicon, meter, line.line_idx, line.syllables_used, word)
    }
    return TokenDistribution(support, dist.context_len, dist.truncated)


def _final_logprob(dist: TokenDistribution, word: str) -> Tuple[float, bool]:
    """Log-probability of a storyline word, and whether it had to be estimated."""
    p = dist.prob(word)
    if p > 0:
        return math.log(p), False
    if dist.truncated and dist.support:
        # missing from a top-k view: charge it the smallest returned mass
        logger.warning("%r is outside the top-%d view; scoring it at the smallest returned mass",
                       word, len(dist.support))
        return math.log(min(dist.support.values())), True
    return float("-inf"), False


def _extend_entry(entry: PartialLine,
                  model: LanguageModel,
                  bank: TemplateBank,
                  meter: MeterSpec,
                  lexicon: Lexicon,
                  word_tags: WordTags,
                  final_word: Optional[Callable[[PartialLine, str], Optional[str]]],
                  accept_final: Optional[Callable[[PartialLine, str], bool]]) -> List[PartialLine]:
    line_idx = entry.line_idx
    offset = entry.syllables_used
    remaining = meter.target(line_idx) - offset
    dist = model.next_distribution(entry.context + entry.words)
    filtered = filter_distribution(dist, entry, meter, lexicon)
    out: List[PartialLine] = []

    for word, p in filtered.support.items():
        logprob = math.log(p)
        patterns = _fitting_patterns(lexicon, meter, line_idx, offset, word)
        for tag in sorted(set(word_tags(word))):
            tags = entry.tags + (tag,)
            if not bank.viable_prefix(line_idx, tags):
                continue
            template = bank.template_for(line_idx, tags)
            if template is not None and final_word is None:
                exact = [pat for pat in patterns if len(pat) == remaining]
                if exact and (accept_final is None or accept_final(entry, word)):
                    out.append(entry.extended(word, tag, exact[0], logprob, True, template.template_id))
            if bank.has_extension(line_idx, tags):
                # one branch per distinct syllable count: the meter state ahead only depends on it
                shorter: Dict[int, StressPattern] = {}
                for pat in patterns:
                    if len(pat) < remaining:
                        shorter.setdefault(len(pat), pat)
                for pat in shorter.values():
                    out.append(entry.extended(word, tag, pat, logprob, False))

    if final_word is not None:
        for tag in bank.completing_tags(line_idx, entry.tags):
            word = final_word(entry, tag)
            if word is None:
                continue
            exact = [pat for pat in _fitting_patterns(lexicon, meter, line_idx, offset, word) if len(pat) == remaining]
            if not exact:
                continue
            template = bank.template_for(line_idx, entry.tags + (tag,))
            logprob, estimated = _final_logprob(dist, word)
            out.append(entry.extended(word, tag, exact[0], logprob, True, template.template_id, estimated))
    return out


def extend_candidates(beam: SearchBeam,
                      model: LanguageModel,
                      bank: TemplateBank,
                      meter: MeterSpec,
                      lexicon: Lexicon,
                      cfg: SearchConfig,
                      *,
                      word_tags: WordTags,
                      final_word: Optional[Callable[[PartialLine, str], Optional[str]]] = None,
                      accept_final: Optional[Callable[[PartialLine, str], bool]] = None,
                      workers: Optional[int] = None) -> SearchBeam:
    """
    Extend every unfinished beam entry by one word.

    A word survives if it passes the meter filter and its tag keeps the line a
    prefix of some bank template. An extension that matches a full template and
    exactly fills the syllable target is flagged complete.

    Args:
        beam: Current entries; completed entries are not extended
        model: Language model for next-word distributions
        bank: Template bank
        meter: Line syllable and stress targets
        lexicon: Pronunciation lexicon
        cfg: Search configuration
        word_tags: Tags a word may take
        final_word: If given, chooses the line-final word for a completing tag;
            LM words then never complete a line
        accept_final: Extra predicate for LM-chosen line-final words
        workers: Thread count; defaults to ``cfg.workers``

    Returns:
        The candidate set, in input-entry order, distinct by (poem, words, syllables used)
    """
    entries = beam.partial()
    if not entries:
        return SearchBeam([])
    workers = workers or cfg.workers

    def work(entry: PartialLine) -> List[PartialLine]:
        return _extend_entry(entry, model, bank, meter, lexicon, word_tags, final_word, accept_final)

    if workers > 1:
        with ThreadPoolExecutor(max_workers=workers) as pool:
            results = list(pool.map(work, entries))
    else:
        results = [work(e) for e in entries]

    merged: Dict[Tuple[str, Tuple[str, ...], int], PartialLine] = {}
    for batch in results:
        for candidate in batch:
            key = (candidate.poem_key, candidate.words, candidate.syllables_used)
            held = merged.get(key)
            if held is None or (candidate.complete and not held.complete):
                merged[key] = candidate
    logger.debug("Extended %d entries into %d candidates", len(entries), len(merged))
    return SearchBeam(list(merged.values()))


def exp_mean_score(entry: PartialLine) -> float:
    """Geometric-mean token probability, in [0, 1]."""
    return math.exp(entry.score)


def _entry_order(scorer: Callable[[PartialLine], float]):
    return lambda e: (-scorer(e), e.words, e.poem_key)


def template_distance(weights: PosWeights, t1: Sequence[str], t2: Sequence[str]) -> float:
    """
    Weighted hamming distance; positions present in only one template count as
    mismatches weighted by that template's tag.
    """
    if len(t1) == len(t2):
        return diversity_score(weights, t1, t2)
    common = min(len(t1), len(t2))
    longer = t1 if len(t1) > len(t2) else t2
    return diversity_score(weights, t1[:common], t2[:common]) + sum(weights.weight(t) for t in longer[common:])


@dataclass(frozen=True)
class TemplateSubset:
    tags: Tags
    top: Tuple[PartialLine, ...]
    h: float


def partition_by_template(candidates: Iterable[PartialLine],
                          n: int,
                          scorer: Callable[[PartialLine], float] = exp_mean_score) -> List[TemplateSubset]:
    """Group candidates by tag sequence; each subset keeps its top-n and their mean score."""
    groups: Dict[Tags, List[PartialLine]] = defaultdict(list)
    for c in candidates:
        groups[c.tags].append(c)
    subsets = []
    for tags in sorted(groups):
        top = tuple(sorted(groups[tags], key=_entry_order(scorer))[:n])
        subsets.append(TemplateSubset(tags, top, float(np.mean([scorer(e) for e in top]))))
    return subsets


def mtbs_order(subsets: Sequence[TemplateSubset],
               weights: PosWeights,
               N: int,
               distance: Optional[Callable[[Sequence[str], Sequence[str]], float]] = None) -> List[TemplateSubset]:
    """
    Order in which subsets are admitted to the beam.

    The first pick maximizes h; each later pick maximizes h times its summed
    distance to the already-chosen templates. Admission stops before the beam
    would exceed N lines. Ties break by template.
    """
    distance = distance or (lambda a, b: template_distance(weights, a, b))
    remaining = list(subsets)
    chosen: List[TemplateSubset] = []
    size = 0
    while remaining:
        if not chosen:
            best = min(remaining, key=lambda s: (-s.h, s.tags))
        else:
            best = min(remaining, key=lambda s: (-s.h * sum(distance(s.tags, c.tags) for c in chosen), s.tags))
        if size + len(best.top) > N:
            break
        chosen.append(best)
        size += len(best.top)
        remaining.remove(best)
    return chosen


def mtbs_select(candidates: Iterable[PartialLine],
                weights: PosWeights,
                cfg: SearchConfig,
                scorer: Callable[[PartialLine], float] = exp_mean_score) -> SearchBeam:
    """
    Multi-template beam selection.

    Candidates are partitioned by (partial) template; subsets are admitted in
    ``mtbs_order`` and contribute their top-n lines each.
    """
    subsets = partition_by_template(candidates, cfg.n, scorer)
    if not subsets:
        return SearchBeam([], cfg.N)
    chosen = mtbs_order(subsets, weights, cfg.N)
    entries = [e for s in chosen for e in s.top]
    logger.debug("MTBS kept %d of %d template subsets (%d lines)", len(chosen), len(subsets), len(entries))
    return SearchBeam(entries, cfg.N)


def candidate_rank_select(candidates: Iterable[PartialLine],
                          cfg: SearchConfig,
                          scorer: Optional[Callable[[PartialLine], float]] = None) -> SearchBeam:
    """Global top-N by per-token mean score; ties break by words."""
    scorer = scorer or (lambda e: e.score)
    ranked = sorted(candidates, key=_entry_order(scorer))
    return SearchBeam(ranked[:cfg.N], cfg.N)


def rank_completed(entries: Iterable[PartialLine]) -> List[PartialLine]:
    """Completed entries by full-sequence mean score, best first."""
    return sorted(entries, key=_entry_order(lambda e: e.score))
