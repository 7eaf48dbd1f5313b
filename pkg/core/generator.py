"""
Core implementation of the Quintain limerick generator.
This module contains the orchestrator that writes a canonical first line,
decodes lines 2-5 under template, meter and storyline constraints, and
substitutes the final name.
"""
import logging
import math
import threading
from dataclasses import dataclass, field, replace
from typing import Any, Dict, List, Optional, Sequence, Tuple, Union

import numpy as np

from config.settings import (BOS_TOKEN, GENERATED_LINES, GENERATION_MODES, MAX_FIRST_LINE_ATTEMPTS,
                             MAX_STORYLINE_ATTEMPTS, MODE_ALIASES, SCORE_FIRST_LINE,
                             SINGLE_TEMPLATE_MAX_TRIES)
from core.errors import (AbsentWordError, ConstrainedSamplingError, EmptySupportError,
                         GenerationFailure)
from core.langmodel import LanguageModel, TokenDistribution
from core.phonetics import Lexicon, MeterSpec, rhymes, scan_line
from core.resources import FirstLinePattern, ResourceBundle
from core.search import (PartialLine, SearchBeam, SearchConfig, candidate_rank_select,
                         extend_candidates, mtbs_select, rank_completed)
from core.storyline import (LINE_CONDITIONALS, Conditional, FinalSlotConstraint, NameLexicon,
                            Storyline, StorylineModel, sample_word_constrained)
from core.templates import TagLexicon, TemplateBank, compute_pos_weights
from utils.text_processing import derive_seed, format_line, normalize_word
from utils.validators import validate_request

logger = logging.getLogger(__name__)

STORYLINE_MODES = ("full", "single_template", "candidate_rank")


def resolve_mode(mode: str) -> str:
    """Canonical mode name for a mode or one of its aliases."""
    key = mode.strip().lower()
    resolved = MODE_ALIASES.get(key, key)
    if resolved not in GENERATION_MODES:
        raise ValueError(f"unknown generation mode {mode!r}")
    return resolved


@dataclass(frozen=True)
class PartialPoem:
    """
    A limerick under construction: completed lines, their tags and template ids,
    the storyline words assigned so far, and running score totals for lines 2+.
    """

    lines: Tuple[Tuple[str, ...], ...]
    line_tags: Tuple[Tuple[str, ...], ...]
    template_ids: Tuple[Optional[str], ...]
    storyline: Tuple[Tuple[str, str], ...]
    provenance: Tuple[Tuple[str, str], ...] = ()
    sum_logprob: float = 0.0
    tokens: int = 0
    attempts: int = 0
    estimated: Tuple[str, ...] = ()

    @property
    def key(self) -> str:
        return " / ".join(" ".join(line) for line in self.lines)

    @property
    def score(self) -> float:
        return self.sum_logprob / self.tokens if self.tokens else 0.0

    @property
    def given(self) -> Dict[str, str]:
        return dict(self.storyline)

    @property
    def placeholder(self) -> str:
        return self.lines[0][-1]

    def context(self) -> Tuple[str, ...]:
        flat: List[str] = []
        for line in self.lines:
            flat.append(BOS_TOKEN)
            flat.extend(line)
        flat.append(BOS_TOKEN)
        return tuple(flat)

    def with_line(self, entry: PartialLine, provenance: str, attempts: int) -> "PartialPoem":
        slot = f"y{entry.line_idx}"
        return PartialPoem(
            lines=self.lines + (entry.words,),
            line_tags=self.line_tags + (entry.tags,),
            template_ids=self.template_ids + (entry.template_id,),
            storyline=self.storyline + ((slot, entry.words[-1]),),
            provenance=self.provenance + ((slot, provenance),),
            sum_logprob=self.sum_logprob + entry.sum_logprob,
            tokens=self.tokens + len(entry.words),
            attempts=self.attempts + attempts,
            estimated=self.estimated + entry.estimated,
        )


@dataclass
class Limerick:
    prompt: str
    mode: str
    seed: int
    lines: Tuple[Tuple[str, ...], ...]
    line_tags: Tuple[Tuple[str, ...], ...]
    template_ids: Tuple[Optional[str], ...]
    storyline: Storyline
    score: float
    attempts: int = 0
    estimated: Tuple[str, ...] = ()

    @property
    def name(self) -> str:
        return self.storyline.finals[0]

    def text_lines(self) -> List[str]:
        return [format_line(line, capitalize_names=[self.name]) for line in self.lines]

    def to_record(self) -> Dict[str, Any]:
        return {
            "prompt": self.prompt,
            "mode": self.mode,
            "seed": self.seed,
            "lines": self.text_lines(),
            "storyline": self.storyline.as_dict(),
            "provenance": dict(sorted(self.storyline.provenance.items())),
            "score": self.score,
            "templates": list(self.template_ids),
            "attempts": self.attempts,
            "estimated_scores": list(self.estimated),
        }


@dataclass(frozen=True)
class GenerationRequest:
    prompt: str
    mode: str = "full"
    search: SearchConfig = field(default_factory=SearchConfig)
    score_first_line: bool = SCORE_FIRST_LINE

    def __post_init__(self):
        object.__setattr__(self, "prompt", normalize_word(self.prompt))
        object.__setattr__(self, "mode", resolve_mode(self.mode))

    @property
    def seed(self) -> int:
        return self.search.rng_seed


def make_first_line(names: NameLexicon,
                    first_line_patterns: Sequence[FirstLinePattern],
                    rng_seed: int,
                    *,
                    model: LanguageModel,
                    tag_lexicon: TagLexicon,
                    lexicon: Lexicon,
                    meter: MeterSpec,
                    prompt: str = "",
                    max_attempts: int = MAX_FIRST_LINE_ATTEMPTS) -> PartialPoem:
    """
    Instantiate a canonical first line with a placeholder name at its end.

    Tag slots are filled by sampling the language model restricted to words of
    that tag; the placeholder is drawn uniformly from names that let the line
    scan (headless variants allowed).

    Raises:
        ValueError: on an empty pattern list
        GenerationFailure: when no attempt produces a scanning line
    """
    if not first_line_patterns:
        raise ValueError("no first-line patterns")
    rng = np.random.default_rng(rng_seed)
    for attempt in range(1, max_attempts + 1):
        pattern = first_line_patterns[int(rng.integers(len(first_line_patterns)))]
        words: List[str] = []
        tags: List[str] = []
        sum_logprob = 0.0
        for token in pattern.tokens[:-1]:
            tag = FirstLinePattern.slot(token)
            dist = model.next_distribution((BOS_TOKEN, *words))
            if tag is None:
                word = token
                tag = tag_lexicon.tags_for(word)[0] if tag_lexicon.tags_for(word) else token.upper()
            else:
                pool = {
                    w: p for w, p in dist.support.items()
                    if p > 0 and w in lexicon and tag in tag_lexicon.tags_for(w)
                }
                if not pool:
                    break
                choices = list(pool)
                probs = np.array([pool[w] for w in choices])
                word = choices[int(rng.choice(len(choices), p=probs / probs.sum()))]
            logprob = dist.logprob(word)
            if math.isfinite(logprob):
                sum_logprob += logprob
            words.append(word)
            tags.append(tag)
        else:
            fitting = [n for n in names.names
                       if scan_line(meter, 1, words + [n], lexicon, lenient=True) is not None]
            if fitting:
                name = fitting[int(rng.integers(len(fitting)))]
                lines = (tuple(words) + (name,),)
                return PartialPoem(
                    lines=lines,
                    line_tags=(tuple(tags) + ("NAME",),),
                    template_ids=(None,),
                    storyline=(("y0", prompt),) if prompt else (),
                    sum_logprob=sum_logprob,
                    tokens=len(words),
                    attempts=attempt,
                )
    raise GenerationFailure(f"no first line scans after {max_attempts} attempts", deepest_line=1,
                            diagnostics={"patterns": [str(p) for p in first_line_patterns]})


class LimerickGenerator:
    """
    Coordinates first-line construction, per-line constrained decoding and
    storyline sampling for one resource bundle.

    A generator holds no per-request state, so independent requests may run
    concurrently against the same instance.
    """

    def __init__(self, resources: ResourceBundle):
        self.resources = resources
        self.storyline_model = StorylineModel(
            resources.lexicon, resources.space, resources.names, resources.vocabulary
        )
        self._rhymes_with_name: Dict[str, bool] = {}

    # -- helpers -----------------------------------------------------------

    def _rhymes(self, a: str, b: str) -> bool:
        try:
            return rhymes(self.resources.lexicon, a, b)
        except AbsentWordError:
            return False

    def _has_name_rhyme(self, word: str) -> bool:
        cached = self._rhymes_with_name.get(word)
        if cached is None:
            cached = any(self._rhymes(n, word) for n in self.resources.names.names)
            self._rhymes_with_name[word] = cached
        return cached

    def make_first_line(self, req: GenerationRequest) -> PartialPoem:
        res = self.resources
        poem = make_first_line(
            res.names, res.first_line_patterns, derive_seed(req.seed, "first-line", req.prompt),
            model=res.model, tag_lexicon=res.tag_lexicon, lexicon=res.lexicon,
            meter=res.meter, prompt=req.prompt,
        )
        if not req.score_first_line:
            poem = replace(poem, sum_logprob=0.0, tokens=0)
        return poem

    # -- hooks for extend_candidates --------------------------------------

    def _storyline_chooser(self, parents: Dict[str, PartialPoem], line_idx: int, req: GenerationRequest,
                           attempts: Dict[Tuple[str, Tuple[str, ...], str], int]):
        res = self.resources
        kind = LINE_CONDITIONALS[line_idx]
        lock = threading.Lock()
        conditionals: Dict[str, Optional[TokenDistribution]] = {}

        def conditional_for(poem: PartialPoem) -> Optional[TokenDistribution]:
            with lock:
                if poem.key in conditionals:
                    return conditionals[poem.key]
            given = poem.given
            try:
                dist = self.storyline_model.conditional(kind, given, exclude=list(given.values()))
            except EmptySupportError:
                logger.debug("Empty %s support for %r", kind.value, poem.key)
                dist = None
            with lock:
                conditionals[poem.key] = dist
            return dist

        def choose(entry: PartialLine, tag: str) -> Optional[str]:
            poem = parents[entry.poem_key]
            dist = conditional_for(poem)
            if dist is None:
                return None
            slot = FinalSlotConstraint(tag, line_idx, entry.syllables_used, res.lexicon, res.tag_lexicon, res.meter)
            ahead = self.storyline_model.lookahead(kind, poem.given)

            def accept(word: str) -> bool:
                return slot(word) and ahead(word)

            seed = derive_seed(req.seed, poem.key, line_idx, entry.words, tag)
            try:
                result = sample_word_constrained(dist, accept, MAX_STORYLINE_ATTEMPTS, rng_seed=seed)
            except ConstrainedSamplingError as e:
                with lock:
                    attempts[(entry.poem_key, entry.words, tag)] = e.attempts
                return None
            with lock:
                attempts[(entry.poem_key, entry.words, tag)] = result.attempts
            return result.word

        return choose

    def _rhyme_gate(self, parents: Dict[str, PartialPoem], line_idx: int):
        def accept(entry: PartialLine, word: str) -> bool:
            finals = parents[entry.poem_key].given
            if word in finals.values():
                return False
            if line_idx == 2:
                return self._has_name_rhyme(word)
            if line_idx == 4:
                return self._rhymes(word, finals["y3"])
            if line_idx == 5:
                return (self._rhymes(word, finals["y2"])
                        and bool(self.storyline_model.names_for(finals["y2"], word, finals.values())))
            return True

        return accept

    # -- decoding ----------------------------------------------------------

    def _decode_line(self, poems: Sequence[PartialPoem], line_idx: int, req: GenerationRequest,
                     bank: TemplateBank) -> List[PartialPoem]:
        res = self.resources
        cfg = req.search
        weights = compute_pos_weights(bank, line_idx)
        parents = {p.key: p for p in poems}
        attempts: Dict[Tuple[str, Tuple[str, ...], str], int] = {}
        hooks: Dict[str, Any] = {}
        if req.mode in STORYLINE_MODES:
            hooks["final_word"] = self._storyline_chooser(parents, line_idx, req, attempts)
        else:
            hooks["accept_final"] = self._rhyme_gate(parents, line_idx)

        beam = SearchBeam([
            PartialLine(poem_key=p.key, line_idx=line_idx, context=p.context(),
                        prior_logprob=p.sum_logprob, prior_tokens=p.tokens)
            for p in poems
        ])
        finished: List[PartialLine] = []
        for step in range(cfg.max_line_tokens):
            candidates = extend_candidates(
                beam, res.model, bank, res.meter, res.lexicon, cfg,
                word_tags=res.tag_lexicon.tags_for, **hooks,
            )
            finished.extend(candidates.completed())
            partial = candidates.partial()
            if req.mode == "candidate_rank":
                beam = candidate_rank_select(partial, cfg)
            else:
                beam = mtbs_select(partial, weights, cfg)
            logger.debug("Line %d step %d: %d live, %d finished", line_idx, step + 1, len(beam), len(finished))
            if not beam:
                break

        if req.mode == "candidate_rank":
            kept = rank_completed(finished)[:cfg.N]
        else:
            kept = list(mtbs_select(finished, weights, cfg))

        provenance = LINE_CONDITIONALS[line_idx].value if req.mode in STORYLINE_MODES else "lm"
        children = []
        for entry in kept:
            spent = attempts.get((entry.poem_key, entry.words[:-1], entry.tags[-1]), 0)
            children.append(parents[entry.poem_key].with_line(entry, provenance, spent))
        return children

    def generate_line(self, poem: Union[PartialPoem, Sequence[PartialPoem]], line_idx: int,
                      req: GenerationRequest) -> List[PartialPoem]:
        """
        Extend poems by line ``line_idx``.

        Args:
            poem: One poem or the surviving poem set
            line_idx: Line to decode, 2..5
            req: The generation request

        Returns:
            Up to N extended poems

        Raises:
            GenerationFailure: when every branch dies
        """
        if line_idx not in GENERATED_LINES:
            raise ValueError(f"line index must be in 2..5, got {line_idx}")
        poems = [poem] if isinstance(poem, PartialPoem) else list(poem)
        if not poems:
            raise GenerationFailure("no poems to extend", deepest_line=line_idx - 1)
        bank = self.resources.bank

        if req.mode == "single_template":
            templates = bank.templates(line_idx)
            order = np.random.default_rng(derive_seed(req.seed, req.prompt, "template", line_idx)).permutation(len(templates))
            tried = []
            for index in order[:SINGLE_TEMPLATE_MAX_TRIES]:
                template = templates[int(index)]
                tried.append(template.template_id)
                extended = self._decode_line(poems, line_idx, req, bank.restricted_to(template))
                if extended:
                    return extended
            raise GenerationFailure(f"no single template completes line {line_idx}", deepest_line=line_idx,
                                    diagnostics={"templates_tried": tried})

        extended = self._decode_line(poems, line_idx, req, bank)
        if not extended:
            raise GenerationFailure(f"every beam died on line {line_idx}", deepest_line=line_idx,
                                    diagnostics={"poems_in": len(poems)})
        return extended

    def substitute_name(self, poem: PartialPoem, req: GenerationRequest) -> Optional[Limerick]:
        """
        Replace the placeholder with y1 ~ p(y1 | y5), keeping line 1 scanning and
        the name rhyming with both y2 and y5. Returns None if no name fits.
        """
        res = self.resources
        given = poem.given
        head = list(poem.lines[0][:-1])

        def accept(name: str) -> bool:
            return (self._rhymes(name, given["y2"]) and self._rhymes(name, given["y5"])
                    and scan_line(res.meter, 1, head + [name], res.lexicon, lenient=True) is not None)

        try:
            dist = self.storyline_model.conditional(Conditional.Y1, given)
            result = sample_word_constrained(dist, accept, MAX_STORYLINE_ATTEMPTS,
                                             rng_seed=derive_seed(req.seed, poem.key, 1))
        except (EmptySupportError, ConstrainedSamplingError) as e:
            logger.debug("No name for %r: %s", poem.key, e)
            return None

        lines = (tuple(head) + (result.word,),) + poem.lines[1:]
        finals = (result.word,) + tuple(given[f"y{i}"] for i in range(2, 6))
        provenance = dict(poem.provenance)
        provenance["y1"] = Conditional.Y1.value
        return Limerick(
            prompt=req.prompt,
            mode=req.mode,
            seed=req.seed,
            lines=lines,
            line_tags=poem.line_tags,
            template_ids=poem.template_ids,
            storyline=Storyline(req.prompt, finals, provenance),
            score=poem.score,
            attempts=poem.attempts + result.attempts,
            estimated=poem.estimated,
        )

    def generate_limericks(self, req: GenerationRequest) -> List[Limerick]:
        """
        Generate every limerick the search completes for a request.

        Returns:
            Limericks sorted by score descending, ties broken by text

        Raises:
            ValueError: on an invalid request
            GenerationFailure: when no limerick completes
        """
        is_valid, errors = validate_request(req, self.resources)
        if not is_valid:
            raise ValueError("; ".join(errors))

        logger.info("Generating for prompt %r (mode=%s, seed=%d)", req.prompt, req.mode, req.seed)
        poems = [self.make_first_line(req)]
        deepest = 1
        for line_idx in GENERATED_LINES:
            try:
                poems = self.generate_line(poems, line_idx, req)
            except GenerationFailure as e:
                logger.warning("Generation failed for %r: %s", req.prompt, e)
                raise
            deepest = line_idx

        limericks = [l for l in (self.substitute_name(p, req) for p in poems) if l is not None]
        if not limericks:
            raise GenerationFailure("no name completes any poem", deepest_line=deepest,
                                    diagnostics={"poems": len(poems)})
        limericks.sort(key=lambda l: (-l.score, "\n".join(l.text_lines())))
        return limericks
