"""
Storyline model for the Quintain limerick engine.
This module samples the line-final words Y = (y1..y5) of a limerick from
similarity-weighted conditionals tied to a prompt word y0.
"""
import logging
from dataclasses import dataclass, field
from enum import Enum
from typing import Callable, Dict, FrozenSet, Iterable, List, Mapping, Optional, Sequence, Set, Tuple

import numpy as np
from sklearn.metrics.pairwise import cosine_similarity

from config.settings import MAX_STORYLINE_ATTEMPTS
from core.errors import (AbsentEmbeddingError, AbsentWordError, ConstrainedSamplingError,
                         EmptySupportError, ResourceError)
from core.langmodel import RESERVED_TOKENS, TokenDistribution
from core.phonetics import LoadReport, Lexicon, MeterSpec, fits_meter, rhymes
from core.templates import TagLexicon
from utils.text_processing import TextSource, normalize_word, read_text_lines

logger = logging.getLogger(__name__)

COMPLETABLE_CACHE_SIZE = 100_000


class EmbeddingSpace:
    """Word vectors of one shared dimension; zero vectors are never admitted."""

    def __init__(self, vectors: Mapping[str, Sequence[float]], report: Optional[LoadReport] = None):
        self._vectors: Dict[str, np.ndarray] = {}
        self.dimension: Optional[int] = None
        for word, vector in vectors.items():
            array = np.asarray(vector, dtype=float)
            if self.dimension is None:
                self.dimension = array.shape[0]
            if array.shape != (self.dimension,):
                raise ValueError(f"vector for {word!r} has dimension {array.shape}, expected {self.dimension}")
            if not np.any(array):
                raise ValueError(f"zero vector for {word!r}")
            self._vectors[normalize_word(word)] = array
        self.report = report

    def __contains__(self, word: str) -> bool:
        return normalize_word(word) in self._vectors

    def __len__(self) -> int:
        return len(self._vectors)

    def words(self) -> List[str]:
        return list(self._vectors)

    def vector(self, word: str) -> np.ndarray:
        key = normalize_word(word)
        try:
            return self._vectors[key]
        except KeyError:
            raise AbsentEmbeddingError(key) from None

    def matrix(self, words: Sequence[str]) -> np.ndarray:
        return np.vstack([self.vector(w) for w in words])


def load_embeddings(source: TextSource) -> EmbeddingSpace:
    """
    Read a text word-vector file with an optional ``count dim`` header line.

    Lines with the wrong dimension, unparsable numbers or all-zero vectors are
    skipped and recorded in the space's load report.

    Raises:
        ResourceError: if no vector survives
    """
    report = LoadReport(source=getattr(source, "name", str(source)))
    vectors: Dict[str, List[float]] = {}
    dimension: Optional[int] = None
    for line_no, raw in enumerate(read_text_lines(source), start=1):
        parts = raw.split()
        if not parts:
            continue
        if line_no == 1 and len(parts) == 2 and all(p.isdigit() for p in parts):
            dimension = int(parts[1])
            continue
        word, values = parts[0], parts[1:]
        try:
            vector = [float(v) for v in values]
        except ValueError:
            report.add_malformed(line_no, word, "non-numeric component")
            continue
        if dimension is None:
            dimension = len(vector)
        if len(vector) != dimension or dimension == 0:
            report.add_malformed(line_no, word, f"dimension {len(vector)} != {dimension}")
            continue
        if not any(vector):
            report.add_malformed(line_no, word, "zero vector")
            continue
        vectors.setdefault(normalize_word(word), vector)
    report.entries = len(vectors)
    if not vectors:
        raise ResourceError("embedding file holds no usable vectors")
    if report.malformed:
        logger.warning("Embeddings: %s", report.summary())
    return EmbeddingSpace(vectors, report)


@dataclass(frozen=True)
class NameLexicon:
    """Person names usable as y1, each with a dictionary pronunciation."""

    names: Tuple[str, ...]
    genders: Mapping[str, str] = field(default_factory=dict)

    def __contains__(self, word: str) -> bool:
        return normalize_word(word) in self.names


def load_names(source: TextSource, lexicon: Lexicon) -> NameLexicon:
    """
    Read one name per line with an optional ``,F`` / ``,M`` suffix.

    Names without a pronunciation are excluded and reported.
    """
    report = LoadReport(source=getattr(source, "name", str(source)))
    names: List[str] = []
    genders: Dict[str, str] = {}
    for raw in read_text_lines(source):
        text = raw.strip()
        if not text or text.startswith("#"):
            continue
        name, _, gender = text.partition(",")
        key = normalize_word(name)
        if key not in lexicon:
            report.excluded.append(key)
            continue
        if key not in genders:
            names.append(key)
            genders[key] = gender.strip().upper()
    report.entries = len(names)
    if report.excluded:
        logger.warning("Names: %s", report.summary())
    if not names:
        raise ResourceError("names file holds no pronounceable names")
    return NameLexicon(tuple(names), genders)


def similarity(space: EmbeddingSpace, w1: str, w2: str) -> float:
    """Cosine similarity mapped to [0, 1] via (cos + 1) / 2."""
    cos = cosine_similarity(space.vector(w1).reshape(1, -1), space.vector(w2).reshape(1, -1))[0, 0]
    return float(np.clip((cos + 1.0) / 2.0, 0.0, 1.0))


class Conditional(str, Enum):
    Y2 = "y2|y0"
    Y3 = "y3|y0"
    Y4 = "y4|y0,y2,y3"
    Y5 = "y5|y0,y2,y3"
    Y1 = "y1|y5"

    @property
    def slot(self) -> str:
        return self.value.split("|")[0]

    @property
    def requires(self) -> Tuple[str, ...]:
        return tuple(self.value.split("|")[1].split(","))


LINE_CONDITIONALS = {
    1: Conditional.Y1,
    2: Conditional.Y2,
    3: Conditional.Y3,
    4: Conditional.Y4,
    5: Conditional.Y5,
}
SAMPLING_ORDER = (Conditional.Y2, Conditional.Y3, Conditional.Y4, Conditional.Y5, Conditional.Y1)


@dataclass
class Storyline:
    prompt: str
    finals: Tuple[str, str, str, str, str]
    provenance: Dict[str, str] = field(default_factory=dict)

    def as_dict(self) -> Dict[str, str]:
        data = {"y0": self.prompt}
        data.update({f"y{i}": w for i, w in enumerate(self.finals, start=1)})
        return data


def storyline_violations(story: Storyline, lexicon: Lexicon, names: NameLexicon) -> List[str]:
    """Rhyme/name invariants a storyline breaks (empty when valid)."""
    y1, y2, y3, y4, y5 = story.finals
    problems = []
    for a, b in ((y3, y4), (y1, y2), (y2, y5), (y1, y5)):
        try:
            ok = rhymes(lexicon, a, b)
        except AbsentWordError:
            ok = False
        if not ok:
            problems.append(f"{a!r} does not rhyme with {b!r}")
    if y1 not in names:
        problems.append(f"{y1!r} is not a known name")
    return problems


@dataclass(frozen=True)
class SampleResult:
    word: str
    attempts: int


def sample_word_constrained(dist: TokenDistribution,
                            constraints: Callable[[str], bool],
                            max_attempts: int = MAX_STORYLINE_ATTEMPTS,
                            rng_seed: int = 0,
                            argmax: bool = False) -> SampleResult:
    """
    Draw from ``dist`` until the constraint bundle accepts a word.

    A rejected word is removed from the draw and the remaining mass renormalized,
    so every attempt tests a new word. ``argmax`` walks the support in
    probability order instead of sampling.

    Raises:
        ValueError: if ``max_attempts`` < 1
        ConstrainedSamplingError: when attempts or support run out
    """
    if max_attempts < 1:
        raise ValueError("max_attempts must be at least 1")
    words = list(dist.support)
    probs = np.array([dist.support[w] for w in words], dtype=float)
    attempts = 0
    if argmax:
        order = sorted(range(len(words)), key=lambda i: (-probs[i], words[i]))
        for i in order:
            if probs[i] <= 0 or attempts >= max_attempts:
                break
            attempts += 1
            if constraints(words[i]):
                return SampleResult(words[i], attempts)
        raise ConstrainedSamplingError(f"no admissible word after {attempts} attempts", attempts)

    rng = np.random.default_rng(rng_seed)
    while attempts < max_attempts:
        total = probs.sum()
        if total <= 0:
            break
        index = int(rng.choice(len(words), p=probs / total))
        attempts += 1
        if constraints(words[index]):
            return SampleResult(words[index], attempts)
        probs[index] = 0.0
    raise ConstrainedSamplingError(f"no admissible word after {attempts} attempts", attempts)


@dataclass(frozen=True)
class FinalSlotConstraint:
    """Accepts words that carry ``tag`` and exactly fill the rest of a line in meter."""

    tag: str
    line_idx: int
    offset: int
    lexicon: Lexicon
    tag_lexicon: TagLexicon
    meter: MeterSpec

    def __call__(self, word: str) -> bool:
        if self.tag not in self.tag_lexicon.tags_for(word) or word not in self.lexicon:
            return False
        remaining = self.meter.target(self.line_idx) - self.offset
        return any(
            len(p) == remaining and fits_meter(self.meter, self.line_idx, self.offset, p)
            for p in self.lexicon.patterns(word)
        )


class StorylineModel:
    """
    Conditionals over the candidate vocabulary: words that are in the lexicon,
    embedded, and (if given) in the engine vocabulary.
    """

    def __init__(self,
                 lexicon: Lexicon,
                 space: EmbeddingSpace,
                 names: NameLexicon,
                 vocabulary: Optional[Iterable[str]] = None):
        self.lexicon = lexicon
        self.space = space
        self.names = names
        pool = space.words() if vocabulary is None else list(vocabulary)
        self.candidates: Tuple[str, ...] = tuple(sorted({
            normalize_word(w) for w in pool
            if w not in RESERVED_TOKENS and w in lexicon and w in space
        }))
        if not self.candidates:
            raise ResourceError("no storyline candidates: lexicon, embeddings and vocabulary do not overlap")
        self._matrix = space.matrix(self.candidates)
        self._pools = {False: self.candidates, True: self.names.names}
        self._indexes = {kind: self._rhyme_index(pool) for kind, pool in self._pools.items()}
        self._overrides: Dict[str, Dict[str, bool]] = {}
        for pair, value in lexicon.rhyme_overrides.items():
            if len(pair) == 2:
                a, b = tuple(pair)
                self._overrides.setdefault(a, {})[b] = value
                self._overrides.setdefault(b, {})[a] = value
        self._partners: Dict[Tuple[str, bool], Tuple[str, ...]] = {}
        self._paired: Optional[Tuple[str, ...]] = None
        self._completable: Dict[FrozenSet[Tuple[str, str]], bool] = {}

    def _rhyme_index(self, pool: Sequence[str]) -> Dict[Tuple[str, ...], List[str]]:
        index: Dict[Tuple[str, ...], List[str]] = {}
        for word in pool:
            for part in self.lexicon.rhyme_parts(word):
                index.setdefault(part, []).append(word)
        return index

    def rhyme_partners(self, word: str, names: bool = False) -> Tuple[str, ...]:
        """Candidates (or names) that rhyme with ``word``, in pool order."""
        key = (normalize_word(word), names)
        cached = self._partners.get(key)
        if cached is None:
            target = key[0]
            pool = self._pools[names]
            found = set()
            if target in self.lexicon:
                for part in self.lexicon.rhyme_parts(target):
                    found.update(self._indexes[names].get(part, ()))
            members = set(pool)
            for other, value in self._overrides.get(target, {}).items():
                if other in members:
                    if value:
                        found.add(other)
                    else:
                        found.discard(other)
            found.discard(target)
            cached = tuple(w for w in pool if w in found)
            self._partners[key] = cached
        return cached

    def names_for(self, y2: str, y5: str, blocked: Iterable[str] = ()) -> List[str]:
        """Names rhyming with both ``y2`` and ``y5``, minus ``blocked``."""
        blocked = {normalize_word(w) for w in blocked}
        shared = set(self.rhyme_partners(y5, names=True))
        return [n for n in self.rhyme_partners(y2, names=True) if n in shared and n not in blocked]

    def _pair_open(self, y3: Optional[str], y4: Optional[str], blocked: Set[str]) -> bool:
        if y3 and y4:
            return y4 in self.rhyme_partners(y3)
        if y3 or y4:
            return any(p not in blocked for p in self.rhyme_partners(y3 or y4))
        if self._paired is None:
            self._paired = tuple(c for c in self.candidates if self.rhyme_partners(c))
        return any(c not in blocked and any(p not in blocked for p in self.rhyme_partners(c))
                   for c in self._paired)

    def completable(self, given: Mapping[str, str]) -> bool:
        """
        True iff the storyline slots missing from ``given`` can still be filled
        with distinct words so that y3/y4 and y2/y5 rhyme and y1 is a name
        rhyming with both y2 and y5.
        """
        g = {k: normalize_word(v) for k, v in given.items()}
        key = frozenset(g.items())
        cached = self._completable.get(key)
        if cached is None:
            if len(self._completable) >= COMPLETABLE_CACHE_SIZE:
                self._completable.clear()
            cached = self._search_completion(g)
            self._completable[key] = cached
        return cached

    def _search_completion(self, g: Dict[str, str]) -> bool:
        if len(set(g.values())) < len(g):
            return False
        used = set(g.values())
        if "y2" not in g:
            return any(c not in used and self.completable({**g, "y2": c}) for c in self.candidates)
        y2 = g["y2"]
        partners = self.rhyme_partners(y2)
        if "y5" in g:
            if g["y5"] not in partners:
                return False
            options = [g["y5"]]
        else:
            options = [w for w in partners if w not in used]
        name = g.get("y1")
        for y5 in options:
            taken = used | {y5}
            names = self.names_for(y2, y5, taken - {name})
            if name is not None:
                names = [name] if name in names else []
            if any(self._pair_open(g.get("y3"), g.get("y4"), taken | {n}) for n in names):
                return True
        return False

    def lookahead(self, kind: Conditional, given: Mapping[str, str]) -> Callable[[str], bool]:
        """
        Rejects a word for slot ``kind`` when no completion of the remaining
        slots stays valid once it is chosen.
        """
        slot = Conditional(kind).slot
        base = dict(given)
        return lambda w: self.completable({**base, slot: w})

    def _similarities(self, word: str) -> np.ndarray:
        cos = cosine_similarity(self._matrix, self.space.vector(word).reshape(1, -1))[:, 0]
        return np.clip((cos + 1.0) / 2.0, 0.0, 1.0)

    def _rhyme_mask(self, words: Sequence[str], target: str, names: bool = False) -> np.ndarray:
        partners = set(self.rhyme_partners(target, names))
        return np.array([w in partners for w in words], dtype=float)

    def conditional(self,
                    kind: Conditional,
                    given: Mapping[str, str],
                    exclude: Iterable[str] = ()) -> TokenDistribution:
        """
        Normalized conditional distribution for one storyline slot.

        Args:
            kind: Which conditional to evaluate
            given: Already-known storyline words keyed ``y0``..``y5``
            exclude: Words that may not be chosen (already used in the storyline)

        Raises:
            ValueError: if a required given word is missing
            AbsentEmbeddingError: if a given word needed for similarity is not embedded
            EmptySupportError: if no word passes the indicators
        """
        kind = Conditional(kind)
        missing = [k for k in kind.requires if k not in given]
        if missing:
            raise ValueError(f"{kind.value} needs {missing}")
        banned = {normalize_word(w) for w in exclude} | {normalize_word(w) for w in given.values()}

        if kind is Conditional.Y1:
            words = [n for n in self.names.names if n not in banned]
            masses = self._rhyme_mask(words, given["y5"], names=True)
            if "y2" in given:
                masses = masses * self._rhyme_mask(words, given["y2"], names=True)
        else:
            words = list(self.candidates)
            if kind in (Conditional.Y2, Conditional.Y3):
                masses = self._similarities(given["y0"])
            else:
                masses = sum(self._similarities(given[k]) for k in ("y0", "y2", "y3"))
                rhyme_with = given["y3"] if kind is Conditional.Y4 else given["y2"]
                masses = masses * self._rhyme_mask(words, rhyme_with)
            keep = np.array([w not in banned for w in words], dtype=float)
            masses = masses * keep

        total = float(np.sum(masses))
        if total <= 0:
            raise EmptySupportError(f"no word passes {kind.value} given {dict(given)}")
        support = {w: float(m / total) for w, m in zip(words, masses) if m > 0}
        return TokenDistribution(support, len(kind.requires))

    def sample_storyline(self,
                         prompt: str,
                         rng_seed: int,
                         argmax: bool = False,
                         constraint_for: Optional[Callable[[Conditional, Mapping[str, str]], Callable[[str], bool]]] = None,
                         max_attempts: int = MAX_STORYLINE_ATTEMPTS) -> Storyline:
        """
        Sample a full storyline in the order y2, y3, y4, y5, y1.

        Each conditional is restricted to words that keep the storyline
        completable and renormalized, so without ``constraint_for`` sampling
        succeeds whenever the prompt admits any valid storyline.
        ``constraint_for`` adds caller constraints on top.

        Raises:
            EmptySupportError: when the prompt admits no valid storyline
            ConstrainedSamplingError: when caller constraints reject every draw
        """
        given: Dict[str, str] = {"y0": normalize_word(prompt)}
        provenance: Dict[str, str] = {}
        for step, kind in enumerate(SAMPLING_ORDER):
            dist = self.conditional(kind, given)
            ahead = self.lookahead(kind, given)
            feasible = {w: p for w, p in dist.support.items() if ahead(w)}
            if not feasible:
                raise EmptySupportError(f"no completable {kind.slot} for prompt {given['y0']!r}")
            dist = TokenDistribution(feasible, dist.context_len).normalized()
            extra = constraint_for(kind, given) if constraint_for else None
            accept = extra if extra is not None else (lambda w: True)
            result = sample_word_constrained(
                dist, accept, max_attempts, rng_seed=rng_seed * 7919 + step, argmax=argmax
            )
            given[kind.slot] = result.word
            provenance[kind.slot] = kind.value
        finals = tuple(given[f"y{i}"] for i in range(1, 6))
        return Storyline(given["y0"], finals, provenance)


def conditional(kind: Conditional,
                given: Mapping[str, str],
                lexicon: Lexicon,
                space: EmbeddingSpace,
                names: NameLexicon,
                vocabulary: Optional[Iterable[str]] = None) -> TokenDistribution:
    return StorylineModel(lexicon, space, names, vocabulary).conditional(kind, given)
