import json
import os
import sys
from pathlib import Path

import numpy as np
import pytest

# Ensure the repository root is importable, as main.py does
sys.path.insert(0, os.path.dirname(os.path.dirname(os.path.abspath(__file__))))

from core.generator import LimerickGenerator
from core.langmodel import read_training_text, train_ngram
from core.phonetics import MeterSpec, load_lexicon
from core.resources import load_first_line_patterns, load_resources
from core.storyline import StorylineModel, load_embeddings, load_names
from core.templates import extract_templates, load_corpus, load_tag_lexicon
from tests import fixture_data as fx

DATA_DIR = Path(__file__).parent / "data"


def pytest_configure(config):
    config.addinivalue_line("markers", "slow: long-running acceptance checks (deselect with -m \"not slow\")")


def write_fixture_resources(root: Path) -> dict:
    """Write the toy resource set into ``root`` and return the file paths."""
    root.mkdir(parents=True, exist_ok=True)
    paths = {
        "lexicon": root / "toy.dict",
        "tags": root / "tags.tsv",
        "corpus": root / "corpus.jsonl",
        "text": root / "train.txt",
        "embeddings": root / "vectors.txt",
        "names": root / "names.txt",
        "first_lines": root / "first_lines.txt",
        "prompts": root / "prompts.txt",
    }

    lines = [";;; toy pronouncing dictionary"]
    lines += [f"{w.upper()}  {p}" for w, p in sorted(fx.pronunciations().items())]
    lines.append("LIVE(1)  L AY1 V")
    paths["lexicon"].write_text("\n".join(lines) + "\n", encoding="utf-8")

    paths["tags"].write_text(
        "".join(f"{w}\t{t}\n" for w, t in sorted(fx.word_tags().items())), encoding="utf-8"
    )

    with open(paths["corpus"], "w", encoding="utf-8") as f:
        for i in range(fx.NUM_RECORDS):
            record = {
                "id": f"toy-{i:03d}",
                "lines": [
                    [{"word": w, "tag": t} for w, t in fx.tag_line(line, n)]
                    for n, line in enumerate(fx.corpus_lines(i), start=1)
                ],
            }
            f.write(json.dumps(record) + "\n")

    paths["text"].write_text("\n".join(fx.training_sentences()) + "\n", encoding="utf-8")

    rng = np.random.default_rng(0)
    words = fx.content_words()
    with open(paths["embeddings"], "w", encoding="utf-8") as f:
        f.write(f"{len(words)} 16\n")
        for word in words:
            vector = rng.normal(size=16)
            f.write(word + " " + " ".join(f"{v:.6f}" for v in vector) + "\n")

    paths["names"].write_text(
        "".join(f"{n},{'F' if n in fx.FEMALE_NAMES else 'M'}\n" for n in sorted(fx.names())), encoding="utf-8"
    )
    paths["first_lines"].write_text("\n".join(fx.FIRST_LINE_PATTERNS) + "\n", encoding="utf-8")
    paths["prompts"].write_text("\n".join(fx.PROMPTS) + "\n", encoding="utf-8")
    return {k: str(v) for k, v in paths.items()}


@pytest.fixture(scope="session")
def fixture_paths(tmp_path_factory):
    return write_fixture_resources(tmp_path_factory.mktemp("toy"))


@pytest.fixture(scope="session")
def lexicon(fixture_paths):
    return load_lexicon(fixture_paths["lexicon"])


@pytest.fixture(scope="session")
def tag_lexicon(fixture_paths):
    return load_tag_lexicon(fixture_paths["tags"])


@pytest.fixture(scope="session")
def corpus(fixture_paths):
    return load_corpus(fixture_paths["corpus"])


@pytest.fixture(scope="session")
def bank(corpus):
    return extract_templates(corpus)


@pytest.fixture(scope="session")
def ngram_model(fixture_paths):
    return train_ngram(read_training_text(fixture_paths["text"]), order=2, alpha=0.1)


@pytest.fixture(scope="session")
def space(fixture_paths):
    return load_embeddings(fixture_paths["embeddings"])


@pytest.fixture(scope="session")
def names(fixture_paths, lexicon):
    return load_names(fixture_paths["names"], lexicon)


@pytest.fixture(scope="session")
def meter():
    return MeterSpec()


@pytest.fixture(scope="session")
def storyline_model(lexicon, space, names, ngram_model):
    return StorylineModel(lexicon, space, names, ngram_model.predictable)


@pytest.fixture(scope="session")
def first_line_patterns(fixture_paths):
    return load_first_line_patterns(fixture_paths["first_lines"])


@pytest.fixture(scope="session")
def bundle(fixture_paths):
    return load_resources(
        lexicon=fixture_paths["lexicon"],
        bank=fixture_paths["corpus"],
        tags=fixture_paths["tags"],
        embeddings=fixture_paths["embeddings"],
        names=fixture_paths["names"],
        lm=f"ngram:{fixture_paths['text']}",
        first_lines=fixture_paths["first_lines"],
    )


@pytest.fixture(scope="session")
def generator(bundle):
    return LimerickGenerator(bundle)


def resource_args(paths: dict) -> list:
    return [
        "--lexicon", paths["lexicon"],
        "--bank", paths["corpus"],
        "--tags", paths["tags"],
        "--embeddings", paths["embeddings"],
        "--names", paths["names"],
        "--lm", f"ngram:{paths['text']}",
        "--first-lines", paths["first_lines"],
    ]
