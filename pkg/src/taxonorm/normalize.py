"""Text canonicalization for mentions and dictionary entries.

Every string that reaches the retrieval index or the pair files goes
through :func:`normalize` first, so downstream code can assume lowercase
ASCII letters/digits separated by single spaces. Acronym expansion is a
full-string lookup, never a substring rewrite.
"""

from __future__ import annotations

import unicodedata
from typing import Iterable, Mapping

from .errors import ParseError, TaxonormError
from .textio import iter_lines

ASCII_MODES = ("transliterate", "drop")

_ALNUM = frozenset("abcdefghijklmnopqrstuvwxyz0123456789")


def _fold_ascii(text: str, mode: str) -> str:
    """Reduce text to ASCII, either via NFKD decomposition or by dropping."""
    if mode == "transliterate":
        text = unicodedata.normalize("NFKD", text)
    elif mode != "drop":
        raise TaxonormError(f"unknown ascii_mode {mode!r}, expected one of {ASCII_MODES}")
    return text.encode("ascii", "ignore").decode("ascii")


def normalize(text: str, acronyms: Mapping[str, str] | None = None,
              ascii_mode: str = "transliterate") -> str:
    """Lowercase, ASCII-fold, turn punctuation into spaces, expand acronyms.

    Acronym expansion fires only when the whole canonicalized string is a
    map key; the mapped long form is returned as-is (the map stores
    normalized values).
    """
    text = _fold_ascii(text.lower(), ascii_mode)
    chars = [c if c in _ALNUM else " " for c in text]
    result = " ".join("".join(chars).split())
    if acronyms:
        return acronyms.get(result, result)
    return result


def tokenize(text: str) -> list[str]:
    """Split a normalized string into tokens; never yields empty tokens."""
    return text.split()


class AcronymMap(dict):
    """short form -> long form, both stored normalized.

    Keys are canonicalized on insertion; a key that would map to itself is
    rejected because it could only produce lookup loops.
    """

    def __init__(self, entries: Mapping[str, str] | Iterable[tuple[str, str]] = ()):
        super().__init__()
        items = entries.items() if isinstance(entries, Mapping) else entries
        for short, long in items:
            self.add(short, long)

    def add(self, short: str, long: str) -> None:
        key = normalize(short)
        value = normalize(long)
        if key == value:
            raise TaxonormError(f"acronym {short!r} maps to itself after normalization")
        if not key:
            raise TaxonormError(f"acronym {short!r} normalizes to the empty string")
        self[key] = value


def load_acronym_map(stream) -> AcronymMap:
    """Read a `short<TAB>long` file (UTF-8, one entry per line)."""
    acronyms = AcronymMap()
    for lineno, raw in enumerate(iter_lines(stream), start=1):
        line = raw.rstrip("\n")
        if not line.strip():
            continue
        parts = line.split("\t")
        if len(parts) != 2:
            raise ParseError(f"expected 2 tab-separated fields, got {len(parts)}", lineno)
        acronyms.add(parts[0], parts[1])
    return acronyms


class Normalizer:
    """Callable handle bundling the acronym map and the ASCII folding mode."""

    def __init__(self, acronyms: AcronymMap | None = None, ascii_mode: str = "transliterate"):
        if ascii_mode not in ASCII_MODES:
            raise TaxonormError(f"unknown ascii_mode {ascii_mode!r}, expected one of {ASCII_MODES}")
        self.acronyms = acronyms
        self.ascii_mode = ascii_mode

    def __call__(self, text: str) -> str:
        return normalize(text, self.acronyms, self.ascii_mode)

    def tokenize(self, text: str) -> list[str]:
        return tokenize(self(text))
