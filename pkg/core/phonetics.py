"""
Pronunciation knowledge for the Quintain limerick engine.
This module parses a CMU-style pronouncing dictionary and answers syllable,
stress, meter and rhyme queries against it.
"""
import logging
import re
from dataclasses import dataclass, field
from enum import Enum
from typing import Dict, FrozenSet, Iterable, List, Mapping, Optional, Sequence, Set, Tuple

from config.settings import LINE_SYLLABLES, STRESSED_POSITIONS
from core.errors import AbsentWordError, LexiconLoadError, ResourceError
from utils.text_processing import TextSource, normalize_word, read_text_lines

logger = logging.getLogger(__name__)

VOWEL_PHONEMES: FrozenSet[str] = frozenset({
    "AA", "AE", "AH", "AO", "AW", "AY", "EH", "ER",
    "EY", "IH", "IY", "OW", "OY", "UH", "UW",
})
CONSONANT_PHONEMES: FrozenSet[str] = frozenset({
    "B", "CH", "D", "DH", "F", "G", "HH", "JH", "K", "L", "M", "N",
    "NG", "P", "R", "S", "SH", "T", "TH", "V", "W", "Y", "Z", "ZH",
})
PHONEME_INVENTORY: FrozenSet[str] = VOWEL_PHONEMES | CONSONANT_PHONEMES

_VARIANT_SUFFIX = re.compile(r"\(\d+\)$")
_PHONE = re.compile(r"^([A-Z]+)([012]?)$")


class Stress(str, Enum):
    STRESSED = "stressed"
    UNSTRESSED = "unstressed"
    FLEXIBLE = "flexible"


StressPattern = Tuple[Stress, ...]

_DIGIT_TO_STRESS = {0: Stress.UNSTRESSED, 1: Stress.STRESSED, 2: Stress.FLEXIBLE}


@dataclass(frozen=True)
class Pronunciation:
    """One pronunciation: base phoneme symbols plus stress digits of its vowels."""

    phonemes: Tuple[str, ...]
    stresses: Tuple[int, ...]

    def __post_init__(self):
        vowels = sum(1 for p in self.phonemes if p in VOWEL_PHONEMES)
        if vowels != len(self.stresses) or vowels == 0:
            raise ValueError(f"stress digits do not align with vowels in {self.phonemes}")
        unknown = [p for p in self.phonemes if p not in PHONEME_INVENTORY]
        if unknown:
            raise ValueError(f"unknown phonemes {unknown}")

    @property
    def syllables(self) -> int:
        return len(self.stresses)

    @classmethod
    def parse(cls, phones: Sequence[str]) -> "Pronunciation":
        """
        Build a pronunciation from dictionary tokens such as ``["D", "AO1", "G"]``.

        Raises:
            ValueError: if a token is not a known phoneme or a vowel lacks its digit
        """
        symbols: List[str] = []
        stresses: List[int] = []
        for phone in phones:
            match = _PHONE.match(phone)
            if not match:
                raise ValueError(f"bad phoneme token {phone!r}")
            base, digit = match.groups()
            if base in VOWEL_PHONEMES:
                if not digit:
                    raise ValueError(f"vowel without stress digit {phone!r}")
                stresses.append(int(digit))
            elif digit:
                raise ValueError(f"consonant with stress digit {phone!r}")
            symbols.append(base)
        return cls(tuple(symbols), tuple(stresses))

    def stress_pattern(self) -> StressPattern:
        if self.syllables == 1:
            return (Stress.FLEXIBLE,)
        return tuple(_DIGIT_TO_STRESS[d] for d in self.stresses)

    def rhyme_part(self) -> Tuple[str, ...]:
        """Phonemes from the last primary-stressed vowel onward, stress digits dropped."""
        vowel_positions = [i for i, p in enumerate(self.phonemes) if p in VOWEL_PHONEMES]
        start = None
        for wanted in (1, 2):
            for vowel_index, stress in reversed(list(enumerate(self.stresses))):
                if stress == wanted:
                    start = vowel_positions[vowel_index]
                    break
            if start is not None:
                break
        if start is None:
            start = vowel_positions[-1]
        return self.phonemes[start:]


@dataclass
class LoadReport:
    """What happened while loading a resource file."""

    source: str
    entries: int = 0
    malformed: List[Tuple[int, str, str]] = field(default_factory=list)
    excluded: List[str] = field(default_factory=list)

    def add_malformed(self, line_no: int, text: str, reason: str) -> None:
        self.malformed.append((line_no, text, reason))

    def summary(self) -> str:
        return (
            f"{self.source}: {self.entries} entries, {len(self.malformed)} malformed lines, "
            f"{len(self.excluded)} excluded"
        )


RhymeOverrides = Mapping[FrozenSet[str], bool]


class Lexicon:
    """
    Case-insensitive pronunciation lookup.

    Entries are never mutated after construction; derived views (stress
    patterns, rhyme parts) are cached on first use.
    """

    def __init__(self,
                 entries: Mapping[str, Sequence[Pronunciation]],
                 rhyme_overrides: Optional[RhymeOverrides] = None,
                 report: Optional[LoadReport] = None):
        self._entries: Dict[str, Tuple[Pronunciation, ...]] = {
            normalize_word(word): tuple(prons) for word, prons in entries.items()
        }
        self.rhyme_overrides: Dict[FrozenSet[str], bool] = dict(rhyme_overrides or {})
        self.report = report
        self._patterns: Dict[str, Tuple[StressPattern, ...]] = {}
        self._rhyme_parts: Dict[str, FrozenSet[Tuple[str, ...]]] = {}

    def __contains__(self, word: str) -> bool:
        return normalize_word(word) in self._entries

    def __len__(self) -> int:
        return len(self._entries)

    def words(self) -> List[str]:
        return list(self._entries)

    def with_overrides(self, overrides: RhymeOverrides) -> "Lexicon":
        merged = dict(self.rhyme_overrides)
        merged.update(overrides)
        return Lexicon(self._entries, merged, self.report)

    def pronunciations(self, word: str) -> Tuple[Pronunciation, ...]:
        key = normalize_word(word)
        try:
            return self._entries[key]
        except KeyError:
            raise AbsentWordError(key) from None

    def patterns(self, word: str) -> Tuple[StressPattern, ...]:
        """Distinct stress patterns in dictionary order."""
        key = normalize_word(word)
        cached = self._patterns.get(key)
        if cached is None:
            seen: List[StressPattern] = []
            for pron in self.pronunciations(key):
                pattern = pron.stress_pattern()
                if pattern not in seen:
                    seen.append(pattern)
            cached = tuple(seen)
            self._patterns[key] = cached
        return cached

    def rhyme_parts(self, word: str) -> FrozenSet[Tuple[str, ...]]:
        key = normalize_word(word)
        cached = self._rhyme_parts.get(key)
        if cached is None:
            cached = frozenset(p.rhyme_part() for p in self.pronunciations(key))
            self._rhyme_parts[key] = cached
        return cached


def load_lexicon(source: TextSource, rhyme_overrides: Optional[RhymeOverrides] = None) -> Lexicon:
    """
    Parse a pronouncing dictionary.

    Lines look like ``WORD  PH1 PH2 ...``; variants carry a ``(n)`` suffix and
    lines starting with ``;;;`` are comments. Malformed lines are collected in the
    lexicon's load report.

    Args:
        source: Path or byte/text stream in dictionary format
        rhyme_overrides: Optional curated rhyme decisions

    Returns:
        The loaded Lexicon

    Raises:
        LexiconLoadError: if the source cannot be read or holds no valid entries
    """
    report = LoadReport(source=getattr(source, "name", str(source)))
    grouped: Dict[str, List[Pronunciation]] = {}
    try:
        lines = list(read_text_lines(source))
    except (OSError, ResourceError) as e:
        raise LexiconLoadError(f"cannot read pronunciation dictionary: {e}") from e

    for line_no, raw in enumerate(lines, start=1):
        text = raw.strip()
        if not text or text.startswith(";;;"):
            continue
        parts = text.split()
        if len(parts) < 2:
            report.add_malformed(line_no, text, "missing phonemes")
            continue
        word = normalize_word(_VARIANT_SUFFIX.sub("", parts[0]))
        if not word:
            report.add_malformed(line_no, text, "empty word")
            continue
        try:
            pron = Pronunciation.parse(parts[1:])
        except ValueError as e:
            report.add_malformed(line_no, text, str(e))
            continue
        variants = grouped.setdefault(word, [])
        if pron not in variants:
            variants.append(pron)

    report.entries = len(grouped)
    if not grouped:
        raise LexiconLoadError("no entries")
    if report.malformed:
        logger.warning("Pronunciation dictionary: %s", report.summary())
    return Lexicon(grouped, rhyme_overrides, report)


def load_rhyme_overrides(source: TextSource) -> Dict[FrozenSet[str], bool]:
    """
    Read ``word1,word2,true|false`` lines into a symmetric override map.

    Raises:
        ResourceError: on a malformed line
    """
    overrides: Dict[FrozenSet[str], bool] = {}
    for line_no, raw in enumerate(read_text_lines(source), start=1):
        text = raw.strip()
        if not text or text.startswith("#"):
            continue
        parts = [p.strip() for p in text.split(",")]
        if len(parts) != 3 or parts[2].lower() not in ("true", "false"):
            raise ResourceError(f"rhyme override line {line_no} is malformed: {text!r}")
        w1, w2 = normalize_word(parts[0]), normalize_word(parts[1])
        if w1 == w2:
            raise ResourceError(f"rhyme override line {line_no} pairs a word with itself")
        overrides[frozenset((w1, w2))] = parts[2].lower() == "true"
    return overrides


def syllable_counts(lexicon: Lexicon, word: str) -> Set[int]:
    return {p.syllables for p in lexicon.pronunciations(word)}


def stress_pattern(lexicon: Lexicon, word: str) -> Set[StressPattern]:
    return set(lexicon.patterns(word))


@dataclass(frozen=True)
class MeterSpec:
    """Per-line syllable targets and must-stress positions (1-based)."""

    line_syllables: Tuple[int, ...] = LINE_SYLLABLES
    stressed_positions: Tuple[FrozenSet[int], ...] = STRESSED_POSITIONS

    def __post_init__(self):
        if len(self.line_syllables) != 5 or len(self.stressed_positions) != 5:
            raise ValueError("a limerick meter needs exactly five lines")
        for target, positions in zip(self.line_syllables, self.stressed_positions):
            if any(p < 1 or p > target for p in positions):
                raise ValueError(f"stressed positions {sorted(positions)} exceed target {target}")

    def target(self, line_idx: int) -> int:
        _check_line(line_idx)
        return self.line_syllables[line_idx - 1]

    def stressed(self, line_idx: int) -> FrozenSet[int]:
        _check_line(line_idx)
        return self.stressed_positions[line_idx - 1]


def _check_line(line_idx: int) -> None:
    if not 1 <= line_idx <= 5:
        raise ValueError(f"line index must be in 1..5, got {line_idx}")


def _stress_ok(must_stress: bool, stress: Stress) -> bool:
    if stress is Stress.FLEXIBLE:
        return True
    return (stress is Stress.STRESSED) == must_stress


def fits_meter(meter: MeterSpec, line_idx: int, offset: int, word_pattern: Sequence[Stress]) -> bool:
    """
    Check whether a word's stress pattern fits a line starting after ``offset`` syllables.

    Raises:
        ValueError: on a line index outside 1..5, a negative offset or an empty pattern
    """
    target = meter.target(line_idx)
    if offset < 0:
        raise ValueError("offset must be non-negative")
    if not word_pattern:
        raise ValueError("word pattern must be non-empty")
    if offset + len(word_pattern) > target:
        return False
    stressed = meter.stressed(line_idx)
    return all(
        _stress_ok(offset + k in stressed, s) for k, s in enumerate(word_pattern, start=1)
    )


def rhymes(lexicon: Lexicon, w1: str, w2: str) -> bool:
    """
    True iff some pronunciation pair shares the suffix from the last primary
    stressed vowel and the words differ. Curated overrides win.

    Raises:
        AbsentWordError: if a word has no entry and no override covers the pair
    """
    a, b = normalize_word(w1), normalize_word(w2)
    if a == b:
        return False
    override = lexicon.rhyme_overrides.get(frozenset((a, b)))
    if override is not None:
        return override
    return not lexicon.rhyme_parts(a).isdisjoint(lexicon.rhyme_parts(b))


def scan_line(meter: MeterSpec,
              line_idx: int,
              words: Sequence[str],
              lexicon: Lexicon,
              lenient: bool = False) -> Optional[Tuple[StressPattern, ...]]:
    """
    Find a pronunciation choice under which a finished line scans.

    Strict mode requires the exact syllable target with every position obeying
    the meter. Lenient mode also accepts a headless line one syllable short,
    with stresses aligned to the end of the line.

    Returns:
        The chosen stress pattern per word, or None if the line does not scan
    """
    target = meter.target(line_idx)
    if not words or any(w not in lexicon for w in words):
        return None
    options = [lexicon.patterns(w) for w in words]
    totals = [target, target - 1] if lenient else [target]
    stressed = meter.stressed(line_idx)
    for total in totals:
        shift = target - total
        found = _scan(options, 0, 0, total, shift, stressed)
        if found is not None:
            return tuple(found)
    return None


def _scan(options: List[Tuple[StressPattern, ...]],
          index: int,
          used: int,
          total: int,
          shift: int,
          stressed: FrozenSet[int]) -> Optional[List[StressPattern]]:
    if index == len(options):
        return [] if used == total else None
    for pattern in options[index]:
        if used + len(pattern) > total:
            continue
        if not all(_stress_ok(used + k + shift in stressed, s) for k, s in enumerate(pattern, start=1)):
            continue
        rest = _scan(options, index + 1, used + len(pattern), total, shift, stressed)
        if rest is not None:
            return [pattern] + rest
    return None


def vocabulary_coverage(lexicon: Lexicon, words: Iterable[str]) -> Tuple[List[str], List[str]]:
    """Split words into (covered, excluded) by dictionary coverage, order preserved."""
    covered: List[str] = []
    excluded: List[str] = []
    for word in words:
        (covered if word in lexicon else excluded).append(word)
    return covered, excluded
