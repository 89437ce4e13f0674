"""Gold-annotated corpus loading, document splitting, mention dedup.

Two annotation formats are supported: a flat ``standoff-tsv`` table
(doc_id, start, end, surface, tax_id) and brat ``.ann`` standoff files
where the taxonomy id rides on a normalization note line. Splitting is a
seeded uniform shuffle; deduplication runs per split, after splitting.
"""

from __future__ import annotations

import random
from dataclasses import dataclass
from typing import Callable, Sequence

from .errors import ParseError, TaxonormError
from .textio import iter_lines

ANNOTATION_FORMATS = ("standoff-tsv", "brat-ann")


@dataclass(frozen=True)
class MentionAnnotation:
    """One gold species mention."""

    doc_id: str
    start: int
    end: int
    surface: str
    gold_tax_id: int


@dataclass
class CorpusSplit:
    """Document-level train/dev/test partition."""

    train: set[str]
    dev: set[str]
    test: set[str]

    def subset_of(self, doc_id: str) -> str:
        for name in ("train", "dev", "test"):
            if doc_id in getattr(self, name):
                return name
        raise KeyError(doc_id)


def _check_mention(doc_id: str, start: int, end: int, surface: str,
                   tax_id: int, lineno: int) -> MentionAnnotation:
    if start < 0 or end <= start:
        raise ParseError(f"bad offsets start={start} end={end}", lineno)
    if not surface:
        raise ParseError("empty surface form", lineno)
    if tax_id < 1:
        raise ParseError(f"tax_id must be >= 1, got {tax_id}", lineno)
    return MentionAnnotation(doc_id, start, end, surface, tax_id)


def _parse_int(text: str, what: str, lineno: int) -> int:
    try:
        return int(text)
    except ValueError:
        raise ParseError(f"non-integer {what} {text!r}", lineno) from None


def _load_standoff_tsv(stream) -> list[MentionAnnotation]:
    mentions = []
    for lineno, line in enumerate(iter_lines(stream), start=1):
        row = line.rstrip("\n")
        if not row.strip():
            continue
        parts = row.split("\t")
        if len(parts) != 5:
            raise ParseError(f"expected 5 fields, got {len(parts)}", lineno)
        doc_id, start, end, surface, tax_id = parts
        mentions.append(_check_mention(
            doc_id,
            _parse_int(start, "start offset", lineno),
            _parse_int(end, "end offset", lineno),
            surface,
            _parse_int(tax_id, "tax_id", lineno),
            lineno,
        ))
    return mentions


def _load_brat_ann(stream, doc_id: str) -> list[MentionAnnotation]:
    """Pair brat T (span) lines with N (normalization) lines.

    Only spans that carry a normalization note become mentions; output
    order follows the T lines.
    """
    spans: dict[str, tuple[int, int, str, int]] = {}
    norms: dict[str, int] = {}
    order: list[str] = []
    for lineno, line in enumerate(iter_lines(stream), start=1):
        row = line.rstrip("\n")
        if not row.strip():
            continue
        parts = row.split("\t")
        tag = parts[0]
        if tag.startswith("T"):
            if len(parts) < 3:
                raise ParseError(f"expected 3 fields in span row, got {len(parts)}", lineno)
            anno = parts[1].split(" ")
            if len(anno) != 3:
                raise ParseError(f"unsupported span annotation {parts[1]!r}", lineno)
            start = _parse_int(anno[1], "start offset", lineno)
            end = _parse_int(anno[2], "end offset", lineno)
            spans[tag] = (start, end, parts[2], lineno)
            order.append(tag)
        elif tag.startswith("N"):
            if len(parts) < 2:
                raise ParseError("normalization row without body", lineno)
            anno = parts[1].split(" ")
            if len(anno) != 3:
                raise ParseError(f"unsupported normalization {parts[1]!r}", lineno)
            target = anno[1]
            ref = anno[2].rsplit(":", 1)[-1]
            norms[target] = _parse_int(ref, "tax_id", lineno)
        # other brat line types (attributes, relations, comments) are ignored
    mentions = []
    for tag in order:
        if tag not in norms:
            continue
        start, end, surface, lineno = spans[tag]
        mentions.append(_check_mention(doc_id, start, end, surface, norms[tag], lineno))
    return mentions


def load_annotations(stream, fmt: str = "standoff-tsv",
                     doc_id: str | None = None) -> list[MentionAnnotation]:
    """Load gold mentions from an annotation stream.

    ``doc_id`` is required for brat-ann input (one file per document);
    standoff-tsv rows carry their own document ids.
    """
    if fmt == "standoff-tsv":
        return _load_standoff_tsv(stream)
    if fmt == "brat-ann":
        if doc_id is None:
            raise TaxonormError("brat-ann input requires a doc_id")
        return _load_brat_ann(stream, doc_id)
    raise TaxonormError(f"unknown annotation format {fmt!r}, expected one of {ANNOTATION_FORMATS}")


def split_documents(doc_ids: Sequence[str], seed: int,
                    ratios: tuple[float, float, float] = (0.8, 0.1, 0.1)) -> CorpusSplit:
    """Seeded 80/10/10 document split.

    dev and test get floor(ratio*N) documents each; the remainder goes to
    train. Deterministic for a fixed (doc_ids, seed).
    """
    if not doc_ids:
        raise TaxonormError("cannot split an empty document list")
    if len(set(doc_ids)) != len(doc_ids):
        dupes = sorted({d for d in doc_ids if list(doc_ids).count(d) > 1})
        raise TaxonormError(f"duplicate document ids: {dupes}")
    if abs(sum(ratios) - 1.0) > 1e-9:
        raise TaxonormError(f"split ratios must sum to 1, got {ratios}")
    shuffled = list(doc_ids)
    random.Random(seed).shuffle(shuffled)
    n = len(shuffled)
    # epsilon guards floor() against binary float droop (0.1*580 -> 57.999...)
    dev_n = int(ratios[1] * n + 1e-9)
    test_n = int(ratios[2] * n + 1e-9)
    train_n = n - dev_n - test_n
    return CorpusSplit(
        train=set(shuffled[:train_n]),
        dev=set(shuffled[train_n:train_n + dev_n]),
        test=set(shuffled[train_n + dev_n:]),
    )


def write_split_manifest(doc_ids: Sequence[str], split: CorpusSplit, handle) -> None:
    """Write `doc_id<TAB>subset` lines in the input document order."""
    for doc_id in doc_ids:
        handle.write(f"{doc_id}\t{split.subset_of(doc_id)}\n")


def dedup_mentions(mentions: Sequence[MentionAnnotation],
                   normalizer: Callable[[str], str]) -> list[tuple[str, int]]:
    """Unique (normalized surface, gold id) pairs in first-occurrence order.

    The gold id is part of the key, so an ambiguous surface linked to two
    different taxa survives as two entries.
    """
    seen: set[tuple[str, int]] = set()
    out: list[tuple[str, int]] = []
    for mention in mentions:
        key = (normalizer(mention.surface), mention.gold_tax_id)
        if key in seen:
            continue
        seen.add(key)
        out.append(key)
    return out
