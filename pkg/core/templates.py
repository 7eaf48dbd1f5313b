"""
POS templates for the Quintain limerick engine.
This module ingests a tagged limerick corpus, builds per-line template banks with
prefix lookup, and computes POS weights and template diversity scores.
"""
import json
import logging
from collections import Counter
from dataclasses import dataclass, field
from pathlib import Path
from typing import Dict, Iterable, List, Mapping, Optional, Sequence, Set, Tuple, Union

import numpy as np

from config.settings import GENERATED_LINES, LITERAL_WORDS
from core.errors import IngestionError, ResourceError, TaggingError
from utils.text_processing import TextSource, normalize_word, read_text_lines

logger = logging.getLogger(__name__)

Tags = Tuple[str, ...]


class TagLexicon:
    """
    Word to POS tag lookup with closed-class words lifted to literal tags.

    Args:
        entries: word -> tags, first tag preferred for tagging
        literals: closed-class words that become their own upper-cased tag
    """

    def __init__(self, entries: Mapping[str, Sequence[str]], literals: Iterable[str] = LITERAL_WORDS):
        self._entries: Dict[str, Tuple[str, ...]] = {}
        for word, tags in entries.items():
            key = normalize_word(word)
            merged = list(self._entries.get(key, ()))
            merged.extend(t for t in tags if t not in merged)
            self._entries[key] = tuple(merged)
        self.literals: Tuple[str, ...] = tuple(dict.fromkeys(normalize_word(w) for w in literals))

    @property
    def inventory(self) -> Set[str]:
        tags = {t for tags in self._entries.values() for t in tags}
        tags.update(w.upper() for w in self.literals)
        return tags

    def words(self) -> List[str]:
        return list(dict.fromkeys(list(self.literals) + list(self._entries)))

    def tag(self, word: str) -> str:
        key = normalize_word(word)
        if key in self.literals:
            return key.upper()
        tags = self._entries.get(key)
        if not tags:
            raise TaggingError(key)
        return tags[0]

    def tags_for(self, word: str) -> Tuple[str, ...]:
        """All tags a word may take during generation; empty if unknown."""
        key = normalize_word(word)
        if key in self.literals:
            return (key.upper(),)
        return self._entries.get(key, ())

    def with_observed(self, pairs: Iterable[Tuple[str, str]]) -> "TagLexicon":
        """A copy that also knows the (word, tag) pairs seen in a tagged corpus."""
        merged: Dict[str, List[str]] = {w: list(t) for w, t in self._entries.items()}
        for word, tag in pairs:
            key = normalize_word(word)
            if key in self.literals:
                continue
            tags = merged.setdefault(key, [])
            if tag not in tags:
                tags.append(tag)
        return TagLexicon(merged, self.literals)


def load_tag_lexicon(source: TextSource, literals: Optional[Iterable[str]] = None) -> TagLexicon:
    """
    Read a ``word<TAB>TAG`` file; a word may appear on several lines.

    Raises:
        ResourceError: on a line without a tab-separated tag
    """
    entries: Dict[str, List[str]] = {}
    for line_no, raw in enumerate(read_text_lines(source), start=1):
        text = raw.strip()
        if not text or text.startswith("#"):
            continue
        parts = text.split("\t")
        if len(parts) != 2 or not parts[1].strip():
            raise ResourceError(f"tag lexicon line {line_no} is malformed: {text!r}")
        word, tag = normalize_word(parts[0]), parts[1].strip()
        tags = entries.setdefault(word, [])
        if tag not in tags:
            tags.append(tag)
    return TagLexicon(entries, LITERAL_WORDS if literals is None else literals)


def load_literals(source: TextSource) -> List[str]:
    return [normalize_word(l) for l in read_text_lines(source) if l.strip() and not l.startswith("#")]


def tag_words(tag_lexicon: TagLexicon, words: Sequence[str]) -> List[str]:
    """
    Tag a word sequence.

    Raises:
        TaggingError: naming the first word the lexicon cannot resolve
    """
    return [tag_lexicon.tag(w) for w in words]


@dataclass(frozen=True)
class LineTemplate:
    line_idx: int
    tags: Tags
    source_id: str

    def __post_init__(self):
        if self.line_idx not in GENERATED_LINES:
            raise ValueError(f"templates exist for lines 2..5 only, got {self.line_idx}")
        if not self.tags:
            raise ValueError("a template needs at least one tag")

    @property
    def template_id(self) -> str:
        return f"L{self.line_idx}:{' '.join(self.tags)}"


@dataclass
class CorpusRecord:
    """One tagged limerick: five lines of (word, tag) pairs."""

    record_id: str
    lines: List[List[Tuple[str, str]]]

    def words(self, line_no: int) -> List[str]:
        return [w for w, _ in self.lines[line_no - 1]]

    def tags(self, line_no: int) -> Tags:
        return tuple(t for _, t in self.lines[line_no - 1])


def load_corpus(source: TextSource) -> List[CorpusRecord]:
    """
    Read a JSON-lines corpus of ``{id, lines: [[{word, tag}, ...] x5]}`` records.

    Raises:
        IngestionError: on invalid JSON or a record missing its fields
    """
    records: List[CorpusRecord] = []
    for line_no, raw in enumerate(read_text_lines(source), start=1):
        if not raw.strip():
            continue
        try:
            data = json.loads(raw)
            record_id = str(data["id"])
            lines = [
                [(normalize_word(tok["word"]), str(tok["tag"])) for tok in line]
                for line in data["lines"]
            ]
        except (json.JSONDecodeError, KeyError, TypeError) as e:
            raise IngestionError(f"corpus line {line_no} is not a valid record: {e}") from e
        records.append(CorpusRecord(record_id, lines))
    return records


class _TrieNode:
    __slots__ = ("children", "template")

    def __init__(self):
        self.children: Dict[str, "_TrieNode"] = {}
        self.template: Optional[LineTemplate] = None


class TemplateBank:
    """
    Deduplicated per-line templates with a prefix trie.

    The bank is immutable once built; all queries are read-only.
    """

    def __init__(self, templates: Iterable[LineTemplate]):
        self._by_line: Dict[int, List[LineTemplate]] = {i: [] for i in GENERATED_LINES}
        self._roots: Dict[int, _TrieNode] = {i: _TrieNode() for i in GENERATED_LINES}
        self._by_id: Dict[str, LineTemplate] = {}
        for template in templates:
            node = self._roots[template.line_idx]
            for tag in template.tags:
                node = node.children.setdefault(tag, _TrieNode())
            if node.template is not None:
                # first-seen source wins
                continue
            node.template = template
            self._by_line[template.line_idx].append(template)
            self._by_id[template.template_id] = template

    def __eq__(self, other) -> bool:
        return isinstance(other, TemplateBank) and self.to_dict() == other.to_dict()

    def __len__(self) -> int:
        return len(self._by_id)

    def templates(self, line_idx: int) -> List[LineTemplate]:
        return list(self._by_line[_checked(line_idx)])

    def counts(self) -> Dict[int, int]:
        return {i: len(t) for i, t in self._by_line.items()}

    def get(self, template_id: str) -> Optional[LineTemplate]:
        return self._by_id.get(template_id)

    def _node(self, line_idx: int, partial: Sequence[str]) -> Optional[_TrieNode]:
        node = self._roots[_checked(line_idx)]
        for tag in partial:
            node = node.children.get(tag)
            if node is None:
                return None
        return node

    def viable_prefix(self, line_idx: int, partial: Sequence[str]) -> bool:
        node = self._node(line_idx, partial)
        if node is None:
            return False
        if not partial:
            return bool(self._by_line[line_idx])
        return True

    def template_for(self, line_idx: int, tags: Sequence[str]) -> Optional[LineTemplate]:
        node = self._node(line_idx, tags)
        return node.template if node is not None else None

    def is_template(self, line_idx: int, tags: Sequence[str]) -> bool:
        return self.template_for(line_idx, tags) is not None

    def has_extension(self, line_idx: int, tags: Sequence[str]) -> bool:
        """True iff some strictly longer template starts with ``tags``."""
        node = self._node(line_idx, tags)
        return node is not None and bool(node.children)

    def completing_tags(self, line_idx: int, prefix: Sequence[str]) -> List[str]:
        """Tags t, sorted, for which ``prefix + (t,)`` is a full template."""
        node = self._node(line_idx, prefix)
        if node is None:
            return []
        return sorted(t for t, child in node.children.items() if child.template is not None)

    def restricted_to(self, template: LineTemplate) -> "TemplateBank":
        """A bank whose line ``template.line_idx`` holds only ``template``."""
        kept = [t for t in self._by_id.values() if t.line_idx != template.line_idx]
        return TemplateBank(kept + [template])

    def to_dict(self) -> Dict[str, List[Dict[str, object]]]:
        return {
            str(i): [{"tags": list(t.tags), "source_id": t.source_id} for t in self._by_line[i]]
            for i in GENERATED_LINES
        }

    @classmethod
    def from_dict(cls, data: Mapping[str, Sequence[Mapping[str, object]]]) -> "TemplateBank":
        templates = [
            LineTemplate(int(line), tuple(item["tags"]), str(item["source_id"]))
            for line, items in data.items()
            for item in items
        ]
        return cls(templates)

    def save(self, path: Union[str, Path]) -> None:
        with open(path, "w", encoding="utf-8", newline="\n") as f:
            json.dump(self.to_dict(), f, indent=2, sort_keys=True)
            f.write("\n")

    @classmethod
    def load(cls, path: Union[str, Path]) -> "TemplateBank":
        try:
            with open(path, "r", encoding="utf-8") as f:
                return cls.from_dict(json.load(f))
        except (OSError, json.JSONDecodeError, KeyError, TypeError, ValueError) as e:
            raise ResourceError(f"cannot load template bank {path}: {e}") from e


def _checked(line_idx: int) -> int:
    if line_idx not in GENERATED_LINES:
        raise ValueError(f"line index must be in 2..5, got {line_idx}")
    return line_idx


def extract_templates(corpus: Iterable[CorpusRecord], inventory: Optional[Set[str]] = None) -> TemplateBank:
    """
    Build a template bank from lines 2-5 of every corpus record.

    Args:
        corpus: Tagged limerick records
        inventory: Optional declared tag inventory; unknown tags are rejected

    Returns:
        The deduplicated TemplateBank

    Raises:
        IngestionError: on a record without five lines, an unknown tag, or an empty result
    """
    templates: List[LineTemplate] = []
    for record in corpus:
        if len(record.lines) != 5:
            raise IngestionError(f"record {record.record_id} has {len(record.lines)} lines, expected 5")
        for line_idx in GENERATED_LINES:
            tags = record.tags(line_idx)
            if not tags:
                raise IngestionError(f"record {record.record_id} line {line_idx} is empty")
            if inventory is not None:
                unknown = [t for t in tags if t not in inventory]
                if unknown:
                    raise IngestionError(f"record {record.record_id} uses undeclared tags {unknown}")
            templates.append(LineTemplate(line_idx, tags, record.record_id))
    if not templates:
        raise IngestionError("no templates")
    bank = TemplateBank(templates)
    logger.info("Extracted templates per line: %s", bank.counts())
    return bank


@dataclass(frozen=True)
class PosWeights:
    line_idx: int
    weights: Dict[str, float] = field(default_factory=dict)

    def weight(self, tag: str) -> float:
        try:
            return self.weights[tag]
        except KeyError:
            raise ValueError(f"no POS weight for tag {tag!r} on line {self.line_idx}") from None


def compute_pos_weights(bank: TemplateBank, line_idx: int) -> PosWeights:
    """
    Softmax over inverse occurrence shares of each tag in a line's templates.

    Raises:
        ValueError: if the line has no templates
    """
    templates = bank.templates(line_idx)
    if not templates:
        raise ValueError(f"line {line_idx} has no templates")
    counts = Counter(tag for t in templates for tag in t.tags)
    tags = sorted(counts)
    total = sum(counts.values())
    inverse = np.array([total / counts[t] for t in tags], dtype=float)
    exp = np.exp(inverse - inverse.max())
    probs = exp / exp.sum()
    return PosWeights(line_idx, {t: float(p) for t, p in zip(tags, probs)})


def diversity_score(weights: PosWeights, t1: Sequence[str], t2: Sequence[str]) -> float:
    """
    Weighted hamming distance between two equal-length templates.

    Raises:
        ValueError: if the templates differ in length or a tag has no weight
    """
    if len(t1) != len(t2):
        raise ValueError(f"templates differ in length: {len(t1)} vs {len(t2)}")
    return float(sum(
        max(weights.weight(a), weights.weight(b)) for a, b in zip(t1, t2) if a != b
    ))
