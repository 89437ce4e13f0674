"""Okapi BM25 over an inverted index of concept entries.

Scoring uses the smoothed non-negative IDF ln(1 + (N-n+0.5)/(n+0.5)) and
keeps the classic query-frequency factor (k2+1)*qf/(k2+qf). Zero-overlap
documents are never returned: a zero score carries no ranking signal.

``top_k`` walks posting lists term-at-a-time; ``score`` evaluates the
closed form for a single document. The two paths share nothing beyond the
index itself, which keeps brute-force cross-checks meaningful.
"""

from __future__ import annotations

import math
from bisect import bisect_left
from collections import Counter
from dataclasses import dataclass
from typing import Iterable, Sequence

from .errors import ParseError, TaxonormError
from .taxdump import ConceptEntry
from .textio import iter_lines

INDEX_HEADER = "#taxonorm-index\t1"


@dataclass(frozen=True)
class Bm25Params:
    """Okapi parameters; defaults k1=1.2, k2=100, b=0.75."""

    k1: float = 1.2
    k2: float = 100.0
    b: float = 0.75

    def __post_init__(self):
        if self.k1 < 0 or self.k2 < 0 or not 0.0 <= self.b <= 1.0:
            raise TaxonormError(f"invalid BM25 parameters {self}")


@dataclass
class InvertedIndex:
    """Immutable after build; safe for unlimited concurrent queries."""

    postings: dict[str, list[tuple[int, int]]]  # term -> [(doc ordinal, tf)], ordinal-ascending
    doc_lengths: list[int]
    avg_doc_length: float
    doc_ids: list[int]  # ordinal -> tax_id
    doc_count: int


@dataclass
class CandidateList:
    """Top-k retrieval result for one query, best candidate first."""

    query: str
    candidates: list[tuple[int, float]]  # (tax_id, score), score non-increasing


def build_index(entries: Sequence[ConceptEntry]) -> InvertedIndex:
    """Index concept entries in the given order."""
    if not entries:
        raise TaxonormError("cannot build an index from zero entries")
    postings: dict[str, list[tuple[int, int]]] = {}
    doc_lengths: list[int] = []
    doc_ids: list[int] = []
    for ordinal, entry in enumerate(entries):
        if not entry.tokens:
            raise TaxonormError(f"concept entry {entry.tax_id} has zero tokens")
        doc_ids.append(entry.tax_id)
        doc_lengths.append(len(entry.tokens))
        for term, tf in sorted(Counter(entry.tokens).items()):
            postings.setdefault(term, []).append((ordinal, tf))
    return InvertedIndex(
        postings=postings,
        doc_lengths=doc_lengths,
        avg_doc_length=sum(doc_lengths) / len(doc_lengths),
        doc_ids=doc_ids,
        doc_count=len(doc_ids),
    )


def _idf(index: InvertedIndex, term: str) -> float:
    n = len(index.postings.get(term, ()))
    return math.log(1.0 + (index.doc_count - n + 0.5) / (n + 0.5))


def _query_weight(params: Bm25Params, qf: int) -> float:
    return (params.k2 + 1.0) * qf / (params.k2 + qf)


def score(index: InvertedIndex, params: Bm25Params,
          query_tokens: Sequence[str], ordinal: int) -> float:
    """Closed-form BM25 score of one document against the query."""
    if not 0 <= ordinal < index.doc_count:
        raise TaxonormError(f"document ordinal {ordinal} out of range [0, {index.doc_count})")
    doc_len = index.doc_lengths[ordinal]
    k = params.k1 * ((1.0 - params.b) + params.b * doc_len / index.avg_doc_length)
    total = 0.0
    for term, qf in Counter(query_tokens).items():
        plist = index.postings.get(term)
        if not plist:
            continue
        pos = bisect_left(plist, (ordinal,))
        if pos == len(plist) or plist[pos][0] != ordinal:
            continue
        tf = plist[pos][1]
        total += (
            _idf(index, term)
            * (params.k1 + 1.0) * tf / (k + tf)
            * _query_weight(params, qf)
        )
    return total


def top_k(index: InvertedIndex, params: Bm25Params,
          query_tokens: Sequence[str], k: int) -> CandidateList:
    """The k best positive-scoring documents, ties broken by ascending tax_id."""
    if k < 1:
        raise TaxonormError(f"k must be >= 1, got {k}")
    accum: dict[int, float] = {}
    for term, qf in Counter(query_tokens).items():
        plist = index.postings.get(term)
        if not plist:
            continue
        idf = _idf(index, term)
        qw = _query_weight(params, qf)
        k1 = params.k1
        one_minus_b = 1.0 - params.b
        b_over_avg = params.b / index.avg_doc_length
        for ordinal, tf in plist:
            big_k = k1 * (one_minus_b + b_over_avg * index.doc_lengths[ordinal])
            contribution = idf * (k1 + 1.0) * tf / (big_k + tf) * qw
            accum[ordinal] = accum.get(ordinal, 0.0) + contribution
    scored = [
        (index.doc_ids[ordinal], s)
        for ordinal, s in accum.items()
        if s > 0.0
    ]
    scored.sort(key=lambda pair: (-pair[1], pair[0]))
    return CandidateList(query=" ".join(query_tokens), candidates=scored[:k])


def save_index(index: InvertedIndex, handle) -> None:
    """Persist as a header line plus one `tax_id<TAB>tokens` line per document.

    Loading rebuilds the postings from the document order, which
    reproduces the in-memory structure exactly.
    """
    handle.write(INDEX_HEADER + "\n")
    for ordinal, tax_id in enumerate(index.doc_ids):
        tokens = _doc_tokens(index, ordinal)
        handle.write(f"{tax_id}\t{' '.join(tokens)}\n")


def load_index(handle) -> InvertedIndex:
    """Read a file written by :func:`save_index`."""
    lines = iter_lines(handle)
    try:
        header = next(lines).rstrip("\n")
    except StopIteration:
        raise ParseError("empty index file", 1) from None
    if header != INDEX_HEADER:
        raise ParseError(f"unrecognized index header {header!r}", 1)
    entries = []
    for lineno, line in enumerate(lines, start=2):
        row = line.rstrip("\n")
        if not row:
            continue
        parts = row.split("\t")
        if len(parts) != 2:
            raise ParseError(f"expected 2 fields in index row, got {len(parts)}", lineno)
        try:
            tax_id = int(parts[0])
        except ValueError:
            raise ParseError(f"non-integer tax_id {parts[0]!r}", lineno) from None
        entries.append(ConceptEntry.from_text(tax_id, parts[1]))
    return build_index(entries)


def _doc_tokens(index: InvertedIndex, ordinal: int) -> list[str]:
    """Reconstruct a document's token multiset (sorted) from the postings."""
    tokens: list[str] = []
    for term, plist in index.postings.items():
        pos = bisect_left(plist, (ordinal,))
        if pos < len(plist) and plist[pos][0] == ordinal:
            tokens.extend([term] * plist[pos][1])
    tokens.sort()
    return tokens


def iter_entries(index: InvertedIndex) -> Iterable[ConceptEntry]:
    """Yield the indexed documents as concept entries (tokens sorted)."""
    for ordinal, tax_id in enumerate(index.doc_ids):
        tokens = _doc_tokens(index, ordinal)
        yield ConceptEntry(tax_id, " ".join(tokens), tuple(tokens))
