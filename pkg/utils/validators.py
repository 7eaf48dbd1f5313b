"""
Validation utilities for the Quintain limerick engine.
This module checks finished limericks against the hard form constraints and
validates generation requests.
"""
from dataclasses import dataclass, field
from typing import Any, Dict, List, Mapping, Optional, Sequence, Tuple

from config.settings import GENERATED_LINES
from core.errors import AbsentWordError
from core.phonetics import Lexicon, MeterSpec, rhymes, scan_line, syllable_counts
from core.storyline import Storyline
from core.templates import TagLexicon, TemplateBank
from utils.text_processing import tokenize


@dataclass
class ValidationReport:
    """
    Per-check verdicts for one limerick. Line 1 results are advisory and never
    affect ``hard_pass``.
    """

    rhyme_scheme: bool = False
    syllables: Dict[int, bool] = field(default_factory=dict)
    meter: Dict[int, bool] = field(default_factory=dict)
    templates: Dict[int, bool] = field(default_factory=dict)
    notes: List[str] = field(default_factory=list)

    @property
    def hard_pass(self) -> bool:
        return self.rhyme_scheme and all(
            self.syllables.get(i, False) and self.meter.get(i, False) and self.templates.get(i, False)
            for i in GENERATED_LINES
        )

    def to_dict(self) -> Dict[str, Any]:
        return {
            "hard_pass": self.hard_pass,
            "rhyme_scheme": self.rhyme_scheme,
            "syllables": {str(k): v for k, v in sorted(self.syllables.items())},
            "meter": {str(k): v for k, v in sorted(self.meter.items())},
            "templates": {str(k): v for k, v in sorted(self.templates.items())},
            "notes": list(self.notes),
        }


def _can_total(lexicon: Lexicon, words: Sequence[str], target: int) -> bool:
    totals = {0}
    for word in words:
        counts = syllable_counts(lexicon, word)
        totals = {t + c for t in totals for c in counts if t + c <= target}
        if not totals:
            return False
    return target in totals


def validate_limerick(poem,
                      lexicon: Lexicon,
                      meter: MeterSpec,
                      bank: TemplateBank,
                      tag_lexicon: Optional[TagLexicon] = None) -> ValidationReport:
    """
    Check the AABBA rhyme on final words, syllables and meter per line, and
    template membership of lines 2-5.

    Args:
        poem: Anything with ``lines``, ``line_tags`` and ``template_ids`` (a Limerick)
        lexicon: Pronunciation lexicon
        meter: Line targets
        bank: Template bank the lines must come from
        tag_lexicon: If given, every word must be able to take its recorded tag

    Returns:
        The ValidationReport; problems are recorded, never raised
    """
    report = ValidationReport()
    lines = [tuple(line) for line in poem.lines]
    if len(lines) != 5 or any(not line for line in lines):
        report.notes.append("a limerick needs five non-empty lines")
        return report

    missing = sorted({w for line in lines for w in line if w not in lexicon})
    if missing:
        report.notes.append(f"words without pronunciation: {missing}")

    finals = [line[-1] for line in lines]
    pairs = ((0, 1), (1, 4), (0, 4), (2, 3))
    verdicts = []
    for a, b in pairs:
        try:
            ok = rhymes(lexicon, finals[a], finals[b])
        except AbsentWordError as e:
            ok = False
            report.notes.append(str(e))
        if not ok:
            report.notes.append(f"line {a + 1} and line {b + 1} do not rhyme: {finals[a]!r} / {finals[b]!r}")
        verdicts.append(ok)
    report.rhyme_scheme = all(verdicts)

    for line_idx, words in enumerate(lines, start=1):
        known = all(w in lexicon for w in words)
        target = meter.target(line_idx)
        lenient = line_idx == 1
        report.syllables[line_idx] = known and (
            _can_total(lexicon, words, target) or (lenient and _can_total(lexicon, words, target - 1))
        )
        report.meter[line_idx] = known and scan_line(meter, line_idx, words, lexicon, lenient=lenient) is not None
        if line_idx == 1:
            if not report.meter[1]:
                report.notes.append("line 1 does not scan (advisory)")
            continue
        if not report.syllables[line_idx]:
            report.notes.append(f"line {line_idx} misses {target} syllables")
        elif not report.meter[line_idx]:
            report.notes.append(f"line {line_idx} breaks the meter")

        tags = tuple(poem.line_tags[line_idx - 1]) if len(poem.line_tags) >= line_idx else ()
        member = len(tags) == len(words) and bank.is_template(line_idx, tags)
        if member and tag_lexicon is not None:
            member = all(t in tag_lexicon.tags_for(w) for w, t in zip(words, tags))
        if not member:
            report.notes.append(f"line {line_idx} does not follow a known template")
        report.templates[line_idx] = member
    return report


@dataclass
class CheckedLimerick:
    """Lines, tags and template ids reconstructed from an output record."""

    lines: Tuple[Tuple[str, ...], ...]
    line_tags: Tuple[Tuple[str, ...], ...]
    template_ids: Tuple[Optional[str], ...]
    storyline: Optional[Storyline] = None


def limerick_from_record(record: Mapping[str, Any], bank: TemplateBank) -> CheckedLimerick:
    """
    Rebuild a checkable limerick from a JSON output record; template ids are
    resolved through the bank (an unknown id gives an empty tag sequence).
    """
    lines = tuple(tuple(tokenize(text)) for text in record.get("lines", []))
    template_ids = tuple(record.get("templates", []))
    line_tags: List[Tuple[str, ...]] = [()]
    for template_id in template_ids[1:]:
        template = bank.get(template_id) if template_id else None
        line_tags.append(template.tags if template else ())
    story = record.get("storyline") or {}
    storyline = None
    if all(f"y{i}" in story for i in range(6)):
        storyline = Storyline(story["y0"], tuple(story[f"y{i}"] for i in range(1, 6)))
    return CheckedLimerick(lines, tuple(line_tags), template_ids, storyline)


def validate_request(req, resources) -> Tuple[bool, List[str]]:
    """
    Validate a generation request against the loaded resources.

    Args:
        req: The GenerationRequest
        resources: The ResourceBundle it will run against

    Returns:
        Tuple of (is_valid, error_messages)
    """
    errors = []

    if not req.prompt:
        errors.append("Missing required field: prompt")
    else:
        if req.prompt not in resources.space:
            errors.append(f"Prompt {req.prompt!r} has no embedding")
        if req.prompt not in resources.lexicon:
            errors.append(f"Prompt {req.prompt!r} has no pronunciation")

    if req.search.n > req.search.N:
        errors.append(f"Per-template beam {req.search.n} exceeds total beam {req.search.N}")

    return len(errors) == 0, errors
