"""
Diversity metrics for the Quintain limerick engine.
This module measures repetition across generated lines and compares runs of
different decoding modes.
"""
import logging
from collections import Counter
from dataclasses import asdict, dataclass
from pathlib import Path
from typing import Any, Iterable, List, Mapping, Optional, Sequence, Union

import numpy as np
import pandas as pd

from config.settings import (COMPARISON_COLUMNS, DIVERSITY_NGRAM_ORDERS, DIVERSITY_NUM_SAMPLES,
                             DIVERSITY_SAMPLE_SIZE)
from core.errors import UndefinedMetricError
from utils.text_processing import derive_seed, tokenize

logger = logging.getLogger(__name__)


@dataclass(frozen=True)
class DiversityReport:
    n: int
    run: str
    mean_popularity: float
    distinct_templates: int
    sample_size: int


def _ngrams(tokens: Sequence[str], n: int) -> List[tuple]:
    return [tuple(tokens[i:i + n]) for i in range(len(tokens) - n + 1)]


def ngram_mean_popularity(lines: Iterable[Union[str, Sequence[str]]], n: int) -> float:
    """
    Average, over every n-gram occurrence in the line set, of that n-gram's
    total occurrence count in the set. Lines shorter than n are skipped.

    Args:
        lines: Text lines or pre-tokenized lines
        n: n-gram order

    Raises:
        ValueError: if n < 1
        UndefinedMetricError: if no line has n tokens
    """
    if n < 1:
        raise ValueError("n must be at least 1")
    grams: List[tuple] = []
    skipped = 0
    for line in lines:
        tokens = tokenize(line) if isinstance(line, str) else list(line)
        if len(tokens) < n:
            skipped += 1
            continue
        grams.extend(_ngrams(tokens, n))
    if skipped:
        logger.debug("Skipped %d lines shorter than %d tokens", skipped, n)
    if not grams:
        raise UndefinedMetricError(f"no line has {n} tokens")
    counts = Counter(grams)
    return float(np.mean([counts[g] for g in grams]))


def _template_ids(poem: Any) -> List[str]:
    ids = poem.get("templates", []) if isinstance(poem, Mapping) else poem.template_ids
    return [t for t in ids if t]


def distinct_template_count(poems: Iterable[Any]) -> int:
    """Size of the union of template ids over all lines of all poems (Limericks or records)."""
    return len({t for poem in poems for t in _template_ids(poem)})


def _last_line(poem: Any) -> str:
    if isinstance(poem, Mapping):
        return poem["lines"][-1]
    return " ".join(poem.lines[-1])


def run_reports(label: str,
                run: Sequence[Any],
                n_values: Sequence[int] = DIVERSITY_NGRAM_ORDERS,
                sample_size: int = DIVERSITY_SAMPLE_SIZE,
                num_samples: int = DIVERSITY_NUM_SAMPLES,
                seed: int = 0) -> List[DiversityReport]:
    """
    Diversity rows for one run: mean popularity of last-line n-grams averaged over
    seeded samples, plus the run's distinct template count.
    """
    if not run:
        raise ValueError(f"run {label!r} is empty")
    last_lines = [_last_line(p) for p in run]
    templates = distinct_template_count(run)
    if len(last_lines) <= sample_size:
        if len(last_lines) < sample_size:
            logger.warning("Run %r has %d poems, fewer than the sample size %d; using all of them",
                           label, len(last_lines), sample_size)
        samples = [last_lines]
    else:
        samples = []
        for k in range(num_samples):
            rng = np.random.default_rng(derive_seed(seed, k, sample_size))
            picked = rng.choice(len(last_lines), size=sample_size, replace=False)
            samples.append([last_lines[i] for i in sorted(picked)])

    reports = []
    for n in n_values:
        try:
            popularity = float(np.mean([ngram_mean_popularity(sample, n) for sample in samples]))
        except UndefinedMetricError as e:
            logger.warning("Run %r, n=%d: %s", label, n, e)
            popularity = float("nan")
        reports.append(DiversityReport(n, label, popularity, templates, len(samples[0])))
    return reports


def compare_runs(run_a: Sequence[Any],
                 run_b: Sequence[Any],
                 n_values: Sequence[int] = DIVERSITY_NGRAM_ORDERS,
                 labels: Sequence[str] = ("a", "b"),
                 sample_size: int = DIVERSITY_SAMPLE_SIZE,
                 num_samples: int = DIVERSITY_NUM_SAMPLES,
                 seed: int = 0) -> pd.DataFrame:
    """
    Compare two runs' last-line repetition and template variety.

    Both runs draw their samples with the same seeds, so identical runs give
    identical columns.

    Returns:
        DataFrame with columns n, run, mean_popularity, distinct_templates, sample_size
    """
    rows = []
    for label, run in zip(labels, (run_a, run_b)):
        rows.extend(run_reports(label, run, n_values, sample_size, num_samples, seed))
    frame = pd.DataFrame([asdict(r) for r in rows], columns=COMPARISON_COLUMNS)
    return frame.sort_values(["n", "run"], kind="stable").reset_index(drop=True)


def write_comparison(frame: pd.DataFrame, out: Optional[Union[str, Path]] = None) -> str:
    """Render the comparison as CSV (LF line endings); also write it to ``out`` when given."""
    text = frame.to_csv(index=False, lineterminator="\n", float_format="%.6f")
    if out is not None:
        with open(out, "w", encoding="utf-8", newline="\n") as f:
            f.write(text)
    return text
