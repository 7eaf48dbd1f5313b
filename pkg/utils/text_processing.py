"""
Text processing utilities for the Quintain limerick engine.
This module provides helpers for reading resource files, tokenizing lines and
formatting generated poems.
"""
import hashlib
import io
import re
from pathlib import Path
from typing import BinaryIO, Iterator, List, Sequence, TextIO, Union

from core.errors import ResourceError

TextSource = Union[str, Path, BinaryIO, TextIO]

_TOKEN = re.compile(r"[a-z]+(?:'[a-z]+)?")


def normalize_word(word: str) -> str:
    """Case-fold a word for lookups."""
    return word.strip().casefold()


def read_text_lines(source: TextSource) -> Iterator[str]:
    """
    Yield the lines of a path or stream as text.

    Byte streams are decoded as UTF-8, falling back to Latin-1 per line, since
    older pronouncing dictionaries ship in Latin-1.

    Args:
        source: A filesystem path or an open binary/text stream

    Raises:
        ResourceError: if a path does not exist
    """
    if isinstance(source, (str, Path)):
        path = Path(source)
        if not path.exists():
            raise ResourceError(f"file not found: {path}")
        with path.open("rb") as handle:
            yield from _decode_lines(handle)
        return
    if isinstance(source, io.TextIOBase):
        for line in source:
            yield line.rstrip("\r\n")
        return
    yield from _decode_lines(source)


def _decode_lines(handle) -> Iterator[str]:
    for raw in handle:
        if isinstance(raw, str):
            yield raw.rstrip("\r\n")
            continue
        try:
            text = raw.decode("utf-8")
        except UnicodeDecodeError:
            text = raw.decode("latin-1")
        yield text.rstrip("\r\n")


def tokenize(line: str) -> List[str]:
    """Lower-cased word tokens of a line, punctuation dropped."""
    return _TOKEN.findall(line.casefold())


def format_line(words: Sequence[str], capitalize_names: Sequence[str] = ()) -> str:
    """
    Render a word sequence as a poem line.

    Args:
        words: The line's words
        capitalize_names: Words to print with an initial capital (person names)

    Returns:
        The formatted line, first word capitalized
    """
    names = {normalize_word(n) for n in capitalize_names}
    rendered = [w.capitalize() if w in names else w for w in words]
    if rendered:
        rendered[0] = rendered[0][:1].upper() + rendered[0][1:]
    return " ".join(rendered)


def derive_seed(*parts: object) -> int:
    """Stable 63-bit seed from arbitrary parts (independent of PYTHONHASHSEED)."""
    digest = hashlib.sha256("\x1f".join(repr(p) for p in parts).encode("utf-8")).digest()
    return int.from_bytes(digest[:8], "big") >> 1
