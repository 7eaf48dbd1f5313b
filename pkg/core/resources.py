"""
Resource management for the Quintain limerick engine.
This module loads the lexicon, template bank, tag lexicon, embeddings, names,
first-line patterns and language model, and checks they fit together.
"""
import logging
from dataclasses import dataclass, field
from pathlib import Path
from typing import List, Optional, Sequence, Tuple, Union

import httpx

from config.settings import NGRAM_ALPHA, NGRAM_ORDER
from core.errors import ResourceError
from core.langmodel import LanguageModel, NgramModel, read_training_text, train_ngram
from core.phonetics import Lexicon, MeterSpec, load_lexicon, load_rhyme_overrides
from core.storyline import EmbeddingSpace, NameLexicon, load_embeddings, load_names
from core.templates import (TagLexicon, TemplateBank, extract_templates, load_corpus,
                            load_literals, load_tag_lexicon)
from tools.remote_lm import RemoteEndpointConfig, RemoteLanguageModel
from utils.text_processing import TextSource, read_text_lines

logger = logging.getLogger(__name__)

PathLike = Union[str, Path]
NAME_SLOT = "NAME"


@dataclass(frozen=True)
class FirstLinePattern:
    """
    A canonical opening line: literal words and ``{TAG}`` slots, ending in ``{NAME}``.
    """

    tokens: Tuple[str, ...]

    def __post_init__(self):
        if not self.tokens or self.tokens[-1] != "{%s}" % NAME_SLOT:
            raise ValueError(f"first-line pattern must end with {{{NAME_SLOT}}}: {' '.join(self.tokens)!r}")

    @staticmethod
    def slot(token: str) -> Optional[str]:
        if token.startswith("{") and token.endswith("}"):
            return token[1:-1]
        return None

    def __str__(self) -> str:
        return " ".join(self.tokens)


def load_first_line_patterns(source: TextSource) -> List[FirstLinePattern]:
    """
    Read one pattern per line, e.g. ``there once was a {JJ} {NN} named {NAME}``.

    Raises:
        ResourceError: on an empty pattern list or a pattern without a final name slot
    """
    patterns = []
    for raw in read_text_lines(source):
        text = raw.strip()
        if not text or text.startswith("#"):
            continue
        tokens = tuple(t if FirstLinePattern.slot(t) else t.casefold() for t in text.split())
        try:
            patterns.append(FirstLinePattern(tokens))
        except ValueError as e:
            raise ResourceError(str(e)) from e
    if not patterns:
        raise ResourceError("no first-line patterns")
    return patterns


def parse_lm_spec(spec: str) -> Tuple[str, str]:
    """
    Split an ``ngram:<path>`` or ``remote:<url>`` model reference.

    Raises:
        ValueError: on an unknown scheme or an empty target
    """
    kind, sep, target = spec.partition(":")
    if not sep or kind not in ("ngram", "remote") or not target:
        raise ValueError(f"language model must be ngram:<path> or remote:<url>, got {spec!r}")
    return kind, target


def load_language_model(spec: str,
                        order: int = NGRAM_ORDER,
                        alpha: float = NGRAM_ALPHA,
                        transport: Optional[httpx.BaseTransport] = None) -> LanguageModel:
    """
    Load the model named by ``spec``.

    An ``ngram:`` target ending in ``.json`` is a saved model; any other file is
    treated as training text and a model is trained on the fly.
    """
    kind, target = parse_lm_spec(spec)
    if kind == "remote":
        return RemoteLanguageModel(RemoteEndpointConfig(target), transport=transport)
    path = Path(target)
    if path.suffix == ".json":
        return NgramModel.load(path)
    if not path.exists():
        raise ResourceError(f"training text {path} does not exist")
    return train_ngram(read_training_text(path), order, alpha)


@dataclass
class ResourceBundle:
    """Everything one generation run reads; never mutated after loading."""

    lexicon: Lexicon
    tag_lexicon: TagLexicon
    bank: TemplateBank
    space: EmbeddingSpace
    names: NameLexicon
    model: LanguageModel
    first_line_patterns: List[FirstLinePattern]
    meter: MeterSpec = field(default_factory=MeterSpec)

    @property
    def vocabulary(self) -> List[str]:
        """Generation vocabulary: model words (or tagged words) with a pronunciation."""
        pool: Sequence[str] = getattr(self.model, "predictable", None) or self.tag_lexicon.words()
        return [w for w in pool if w in self.lexicon]

    def consistency_problems(self) -> List[str]:
        """Template tags no vocabulary word can realize."""
        coverable = set()
        for word in self.vocabulary:
            coverable.update(self.tag_lexicon.tags_for(word))
        problems = []
        for line_idx, count in sorted(self.bank.counts().items()):
            if count == 0:
                problems.append(f"line {line_idx} has no templates")
            for template in self.bank.templates(line_idx):
                missing = sorted(set(template.tags) - coverable)
                if missing:
                    problems.append(f"{template.template_id} uses tags with no vocabulary word: {missing}")
        return problems


def load_bank(path: PathLike, tag_lexicon: Optional[TagLexicon] = None) -> Tuple[TemplateBank, Optional[TagLexicon]]:
    """
    Load a saved bank (``.json``) or extract one from a tagged corpus (``.jsonl``).

    When extracting, the tag lexicon also learns the corpus's (word, tag) pairs.
    """
    path = Path(path)
    if path.suffix == ".jsonl":
        corpus = load_corpus(path)
        bank = extract_templates(corpus, tag_lexicon.inventory if tag_lexicon else None)
        if tag_lexicon is not None:
            pairs = [pair for record in corpus for line in record.lines for pair in line]
            tag_lexicon = tag_lexicon.with_observed(pairs)
        return bank, tag_lexicon
    return TemplateBank.load(path), tag_lexicon


def load_resources(lexicon: PathLike,
                   bank: PathLike,
                   tags: PathLike,
                   embeddings: PathLike,
                   names: PathLike,
                   lm: str,
                   first_lines: PathLike,
                   rhyme_overrides: Optional[PathLike] = None,
                   literals: Optional[PathLike] = None,
                   meter: Optional[MeterSpec] = None,
                   transport: Optional[httpx.BaseTransport] = None) -> ResourceBundle:
    """
    Load and cross-check a full resource set.

    Raises:
        ResourceError: when a file cannot be loaded or the resources do not fit together
    """
    overrides = load_rhyme_overrides(rhyme_overrides) if rhyme_overrides else None
    lex = load_lexicon(lexicon, overrides)
    tag_lexicon = load_tag_lexicon(tags, load_literals(literals) if literals else None)
    template_bank, tag_lexicon = load_bank(bank, tag_lexicon)
    bundle = ResourceBundle(
        lexicon=lex,
        tag_lexicon=tag_lexicon,
        bank=template_bank,
        space=load_embeddings(embeddings),
        names=load_names(names, lex),
        model=load_language_model(lm, transport=transport),
        first_line_patterns=load_first_line_patterns(first_lines),
        meter=meter or MeterSpec(),
    )
    problems = bundle.consistency_problems()
    if problems:
        raise ResourceError("resources are inconsistent: " + "; ".join(problems))
    logger.info(
        "Loaded %d pronunciations, %d templates, %d vectors, %d names",
        len(lex), len(template_bank), len(bundle.space), len(bundle.names.names),
    )
    return bundle
