"""
Command-line interface for the Quintain limerick engine.
This module binds template extraction, model training, storyline sampling,
generation, validation and run comparison to subcommands.
"""
import argparse
import json
import logging
import sys
from typing import Any, Dict, Iterable, List, Optional, Sequence

from tqdm import tqdm

from config.settings import (APP_NAME, APP_VERSION, DEBUG_MODE, DEFAULT_BEAM_SIZE,
                             DEFAULT_PER_TEMPLATE_BEAM, DEFAULT_SEED, DIVERSITY_NGRAM_ORDERS,
                             DIVERSITY_NUM_SAMPLES, DIVERSITY_SAMPLE_SIZE, LOG_LEVEL,
                             MAX_LINE_TOKENS, NGRAM_ALPHA, NGRAM_ORDER, SEARCH_WORKERS)
from core.errors import GenerationFailure, QuintainError, ResourceError
from core.generator import GenerationRequest, LimerickGenerator, resolve_mode
from core.langmodel import read_training_text, train_ngram
from core.phonetics import MeterSpec, load_lexicon, load_rhyme_overrides
from core.resources import load_bank, load_resources
from core.search import SearchConfig
from core.storyline import StorylineModel, load_embeddings, load_names
from core.templates import extract_templates, load_corpus, load_literals, load_tag_lexicon
from tools.diversity import compare_runs, write_comparison
from tools.remote_lm import RemoteEndpointConfig, RemoteLanguageModel
from utils.manifest import RunManifest, manifest_path_for
from utils.text_processing import derive_seed, read_text_lines
from utils.validators import limerick_from_record, validate_limerick

logger = logging.getLogger(__name__)

EXIT_OK = 0
EXIT_FAILURE = 1
EXIT_USAGE = 2


class _Parser(argparse.ArgumentParser):
    """ArgumentParser that raises instead of exiting, so run_cli can return codes."""

    def error(self, message):
        self.print_usage(sys.stderr)
        sys.stderr.write(f"{self.prog}: error: {message}\n")
        raise _UsageError(message)


class _UsageError(Exception):
    pass


def _csv_ints(text: str) -> List[int]:
    try:
        return [int(x) for x in text.split(",") if x.strip()]
    except ValueError:
        raise argparse.ArgumentTypeError(f"expected comma-separated integers, got {text!r}") from None


def _add_resource_args(parser: argparse.ArgumentParser) -> None:
    group = parser.add_argument_group("resources")
    group.add_argument("--lexicon", required=True, help="Pronouncing dictionary")
    group.add_argument("--bank", required=True, help="Template bank (.json) or tagged corpus (.jsonl)")
    group.add_argument("--tags", required=True, help="word<TAB>TAG lexicon")
    group.add_argument("--embeddings", required=True, help="Text word-vector file")
    group.add_argument("--names", required=True, help="Names file")
    group.add_argument("--lm", required=True, help="ngram:<path> or remote:<url>")
    group.add_argument("--first-lines", required=True, help="First-line pattern file")
    group.add_argument("--rhyme-overrides", help="Curated rhyme pair overrides")
    group.add_argument("--literals", help="Closed-class words kept as literal tags")


def _add_search_args(parser: argparse.ArgumentParser) -> None:
    parser.add_argument("--beam", type=int, default=DEFAULT_BEAM_SIZE, help="Total beam size N")
    parser.add_argument("--per-template", type=int, default=DEFAULT_PER_TEMPLATE_BEAM, help="Per-template beam n")
    parser.add_argument("--max-line-tokens", type=int, default=MAX_LINE_TOKENS)
    parser.add_argument("--workers", type=int, default=SEARCH_WORKERS)


def build_parser() -> argparse.ArgumentParser:
    parser = _Parser(prog="quintain", description=f"{APP_NAME} v{APP_VERSION}: constrained limerick generation")
    parser.add_argument("--log-level", default=LOG_LEVEL, help="Logging level for stderr")
    parser.add_argument("--debug", action="store_true", default=DEBUG_MODE, help="Verbose logs; re-raise unexpected errors")
    sub = parser.add_subparsers(dest="command", required=True, parser_class=_Parser)

    p = sub.add_parser("extract-templates", help="Build a template bank from a tagged corpus")
    p.add_argument("--corpus", required=True)
    p.add_argument("--tags", help="Tag lexicon declaring the tag inventory")
    p.add_argument("--literals")
    p.add_argument("--out")

    p = sub.add_parser("train-lm", help="Train the n-gram reference model")
    p.add_argument("--text", required=True, help="Training text, one sentence per line")
    p.add_argument("--order", type=int, default=NGRAM_ORDER)
    p.add_argument("--alpha", type=float, default=NGRAM_ALPHA)
    p.add_argument("--out")

    p = sub.add_parser("generate", help="Generate limericks for a prompt")
    _add_resource_args(p)
    _add_search_args(p)
    p.add_argument("--prompt", required=True)
    p.add_argument("--seed", type=int, default=DEFAULT_SEED)
    p.add_argument("--mode", default="full")
    p.add_argument("--top", type=int, default=1, help="Number of ranked poems to emit (0 = all)")
    p.add_argument("--out")

    p = sub.add_parser("storyline", help="Sample storylines for a prompt")
    p.add_argument("--lexicon", required=True)
    p.add_argument("--embeddings", required=True)
    p.add_argument("--names", required=True)
    p.add_argument("--rhyme-overrides")
    p.add_argument("--prompt", required=True)
    p.add_argument("--seed", type=int, default=DEFAULT_SEED)
    p.add_argument("--count", type=int, default=1)
    p.add_argument("--argmax", action="store_true", help="Take the most probable word at every step")
    p.add_argument("--out")

    p = sub.add_parser("validate", help="Re-check output records against the hard constraints")
    p.add_argument("--records", required=True, help="JSON-lines output records")
    p.add_argument("--lexicon", required=True)
    p.add_argument("--bank", required=True)
    p.add_argument("--tags")
    p.add_argument("--rhyme-overrides")
    p.add_argument("--out")

    p = sub.add_parser("compare", help="Compare diversity of two decoding modes")
    _add_resource_args(p)
    _add_search_args(p)
    p.add_argument("--modes", default="mtbs,candidate-rank")
    p.add_argument("--prompts", required=True, help="One prompt word per line")
    p.add_argument("--seeds", type=_csv_ints, default=[DEFAULT_SEED])
    p.add_argument("--n", type=_csv_ints, default=list(DIVERSITY_NGRAM_ORDERS))
    p.add_argument("--sample-size", type=int, default=DIVERSITY_SAMPLE_SIZE)
    p.add_argument("--num-samples", type=int, default=DIVERSITY_NUM_SAMPLES)
    p.add_argument("--out")

    p = sub.add_parser("serve-check", help="Ping a remote scoring endpoint")
    p.add_argument("--url", required=True)

    for p in sub.choices.values():
        p.add_argument("--manifest", help="Run manifest path (default: <out>.manifest.json, else stderr)")
    return parser


def _emit(lines: Iterable[str], out: Optional[str]) -> None:
    text = "".join(line if line.endswith("\n") else line + "\n" for line in lines)
    if out:
        with open(out, "w", encoding="utf-8", newline="\n") as f:
            f.write(text)
    else:
        sys.stdout.write(text)


def _json_line(data: Any) -> str:
    return json.dumps(data, ensure_ascii=False, sort_keys=True)


def _search_config(args, seed: int) -> SearchConfig:
    return SearchConfig(N=args.beam, n=args.per_template, rng_seed=seed,
                        max_line_tokens=args.max_line_tokens, workers=args.workers)


def _load_bundle(args):
    return load_resources(
        lexicon=args.lexicon, bank=args.bank, tags=args.tags, embeddings=args.embeddings,
        names=args.names, lm=args.lm, first_lines=args.first_lines,
        rhyme_overrides=args.rhyme_overrides, literals=args.literals,
    )


def _manifest(args, argv: Sequence[str]) -> RunManifest:
    manifest = RunManifest(command=args.command, argv=list(argv))
    for name in ("lexicon", "bank", "tags", "embeddings", "names", "first_lines",
                 "rhyme_overrides", "literals", "prompts", "corpus", "text", "records"):
        manifest.add_resource(name, getattr(args, name, None))
    lm = getattr(args, "lm", None)
    if lm:
        kind, _, target = lm.partition(":")
        manifest.add_resource("lm", target if kind == "ngram" else lm)
    manifest.config = {k: v for k, v in sorted(vars(args).items()) if isinstance(v, (int, float, str, bool, list))}
    return manifest


def _write_manifest(manifest: RunManifest, args) -> None:
    """Save next to ``--out``, at ``--manifest``, or as one JSON line on stderr."""
    target = getattr(args, "manifest", None) or (manifest_path_for(args.out) if getattr(args, "out", None) else None)
    if target:
        try:
            manifest.save(target)
        except OSError as e:
            logger.error("Could not write manifest %s: %s", target, e)
    else:
        sys.stderr.write(json.dumps(manifest.to_dict(), sort_keys=True) + "\n")


def _note_estimates(manifest: RunManifest, records: Sequence[Dict[str, Any]]) -> None:
    words = sorted({w for r in records for w in r.get("estimated_scores", ())})
    if words:
        manifest.notes.append("final-word scores estimated outside the remote top-k view: " + ", ".join(words))


def cmd_extract_templates(args, manifest: RunManifest) -> int:
    tag_lexicon = load_tag_lexicon(args.tags, load_literals(args.literals) if args.literals else None) if args.tags else None
    bank = extract_templates(load_corpus(args.corpus), tag_lexicon.inventory if tag_lexicon else None)
    counts = {str(k): v for k, v in sorted(bank.counts().items())}
    if args.out:
        bank.save(args.out)
        _emit([_json_line(counts)], None)
    else:
        _emit([json.dumps(bank.to_dict(), sort_keys=True)], None)
    return EXIT_OK


def cmd_train_lm(args, manifest: RunManifest) -> int:
    model = train_ngram(read_training_text(args.text), args.order, args.alpha)
    if args.out:
        model.save(args.out)
        _emit([_json_line({"order": model.order, "vocabulary": len(model.predictable)})], None)
    else:
        _emit([json.dumps(model.to_dict(), sort_keys=True)], None)
    return EXIT_OK


def cmd_generate(args, manifest: RunManifest) -> int:
    manifest.seeds = [args.seed]
    generator = LimerickGenerator(_load_bundle(args))
    req = GenerationRequest(args.prompt, args.mode, _search_config(args, args.seed))
    limericks = generator.generate_limericks(req)
    chosen = limericks if args.top == 0 else limericks[:args.top]
    _note_estimates(manifest, [l.to_record() for l in chosen])
    _emit([_json_line(l.to_record()) for l in chosen], args.out)
    return EXIT_OK


def cmd_storyline(args, manifest: RunManifest) -> int:
    manifest.seeds = [args.seed]
    overrides = load_rhyme_overrides(args.rhyme_overrides) if args.rhyme_overrides else None
    lexicon = load_lexicon(args.lexicon, overrides)
    model = StorylineModel(lexicon, load_embeddings(args.embeddings), load_names(args.names, lexicon))
    lines = []
    for k in range(args.count):
        story = model.sample_storyline(args.prompt, derive_seed(args.seed, k), argmax=args.argmax)
        lines.append(_json_line(story.as_dict()))
    _emit(lines, args.out)
    return EXIT_OK


def cmd_validate(args, manifest: RunManifest) -> int:
    overrides = load_rhyme_overrides(args.rhyme_overrides) if args.rhyme_overrides else None
    lexicon = load_lexicon(args.lexicon, overrides)
    tag_lexicon = load_tag_lexicon(args.tags) if args.tags else None
    bank, tag_lexicon = load_bank(args.bank, tag_lexicon)
    lines = []
    failures = 0
    for line_no, raw in enumerate(read_text_lines(args.records), start=1):
        if not raw.strip():
            continue
        try:
            record = json.loads(raw)
        except json.JSONDecodeError as e:
            raise ResourceError(f"record {line_no} is not JSON: {e}") from e
        report = validate_limerick(limerick_from_record(record, bank), lexicon, MeterSpec(), bank, tag_lexicon)
        failures += not report.hard_pass
        lines.append(_json_line({"record": line_no, **report.to_dict()}))
    _emit(lines, args.out)
    return EXIT_FAILURE if failures else EXIT_OK


def cmd_compare(args, manifest: RunManifest) -> int:
    modes = [m.strip() for m in args.modes.split(",") if m.strip()]
    if len(modes) != 2:
        raise ValueError("--modes takes exactly two modes")
    for mode in modes:
        resolve_mode(mode)
    prompts = [p.strip() for p in read_text_lines(args.prompts) if p.strip() and not p.startswith("#")]
    manifest.seeds = list(args.seeds)
    generator = LimerickGenerator(_load_bundle(args))

    runs: Dict[str, List[Dict[str, Any]]] = {m: [] for m in modes}
    jobs = [(m, p, s) for m in modes for p in prompts for s in args.seeds]
    for mode, prompt, seed in tqdm(jobs, desc="compare", file=sys.stderr, disable=None):
        req = GenerationRequest(prompt, mode, _search_config(args, seed))
        try:
            runs[mode].extend(l.to_record() for l in generator.generate_limericks(req))
        except GenerationFailure as e:
            logger.warning("No poems for %r (mode=%s, seed=%d): %s", prompt, mode, seed, e)

    _note_estimates(manifest, [r for run in runs.values() for r in run])
    frame = compare_runs(runs[modes[0]], runs[modes[1]], args.n, labels=modes,
                         sample_size=args.sample_size, num_samples=args.num_samples)
    text = write_comparison(frame, args.out)
    if not args.out:
        sys.stdout.write(text)
    return EXIT_OK


def cmd_serve_check(args, manifest: RunManifest) -> int:
    model = RemoteLanguageModel(RemoteEndpointConfig(args.url))
    try:
        dist = model.ping()
    finally:
        model.close()
    _emit([_json_line({"ok": True, "url": args.url, "tokens": len(dist)})], None)
    return EXIT_OK


COMMANDS = {
    "extract-templates": cmd_extract_templates,
    "train-lm": cmd_train_lm,
    "generate": cmd_generate,
    "storyline": cmd_storyline,
    "validate": cmd_validate,
    "compare": cmd_compare,
    "serve-check": cmd_serve_check,
}


def run_cli(argv: Optional[Sequence[str]] = None) -> int:
    """
    Run one subcommand.

    Returns:
        0 on success, 1 on a domain failure, 2 on a usage or configuration error
    """
    argv = list(sys.argv[1:] if argv is None else argv)
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except _UsageError:
        return EXIT_USAGE
    except SystemExit as e:
        return int(e.code or 0)

    level = logging.DEBUG if args.debug else getattr(logging, str(args.log_level).upper(), logging.WARNING)
    logging.basicConfig(stream=sys.stderr, level=level,
                        format="%(asctime)s %(levelname)s %(name)s: %(message)s", force=True)

    manifest = _manifest(args, argv)
    code = EXIT_FAILURE
    try:
        code = COMMANDS[args.command](args, manifest)
    except ResourceError as e:
        logger.error("%s", e)
        code = EXIT_USAGE
    except QuintainError as e:
        logger.error("%s", e)
        code = EXIT_FAILURE
    except (ValueError, OSError) as e:
        if args.debug:
            raise
        logger.error("%s", e)
        code = EXIT_USAGE
    finally:
        _write_manifest(manifest.finish(code), args)
    return code
