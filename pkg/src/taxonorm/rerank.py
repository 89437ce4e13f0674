"""Scorer contracts and per-query argmax selection.

A scorer takes a batch of pairs for one query and returns the same batch,
in order, with scores in [0, 1]. Selection picks the highest score; ties
fall back to the generator's rank, then to ascending tax_id, so the
result never depends on input ordering.
"""

from __future__ import annotations

import dataclasses
import sys
from typing import Mapping, Sequence

from .errors import TaxonormError
from .pairs import ScoredPair, import_scores, load_scores
from .textio import iter_lines


class RerankError(TaxonormError):
    """Scorer failure, tagged with the offending query batch."""


class PassthroughScorer:
    """Min-max normalized BM25 score; reproduces the generator's ranking."""

    name = "passthrough"

    def score_batch(self, batch: Sequence[ScoredPair]) -> list[ScoredPair]:
        raw = []
        for pair in batch:
            if pair.bm25_score is None:
                raise TaxonormError(
                    f"pair {pair.key()} carries no BM25 score; "
                    "passthrough needs the generator's candidates"
                )
            raw.append(pair.bm25_score)
        low, high = min(raw), max(raw)
        span = high - low
        return [
            dataclasses.replace(pair, score=(value - low) / span if span > 0 else 1.0)
            for pair, value in zip(batch, raw)
        ]


class OracleStubScorer:
    """1.0 for the gold candidate, 0.0 otherwise. Test-only upper bound."""

    name = "oracle-stub"

    def score_batch(self, batch: Sequence[ScoredPair]) -> list[ScoredPair]:
        out = []
        for pair in batch:
            if pair.label is None:
                raise TaxonormError(f"pair {pair.key()} has no label; oracle-stub needs labels")
            out.append(dataclasses.replace(pair, score=1.0 if pair.label == 1 else 0.0))
        return out


class ExternalScorer:
    """Scores produced elsewhere, joined in over the exchange protocol."""

    name = "external"

    def __init__(self, scores: Mapping[tuple[str, int], float]):
        self.scores = dict(scores)

    @classmethod
    def from_file(cls, handle, pairs: Sequence[ScoredPair]) -> "ExternalScorer":
        """Load a scores file and check it joins 1:1 against the pairs."""
        scores = load_scores(handle)
        import_scores(pairs, scores)  # validates both directions
        return cls(scores)

    def score_batch(self, batch: Sequence[ScoredPair]) -> list[ScoredPair]:
        out = []
        for pair in batch:
            if pair.key() not in self.scores:
                raise TaxonormError(f"no external score for pair {pair.key()}")
            out.append(dataclasses.replace(pair, score=self.scores[pair.key()]))
        return out


SCORER_KINDS = ("passthrough", "oracle-stub", "external")


def select(batch: Sequence[ScoredPair]) -> tuple[int, float] | None:
    """Argmax over one query's scored pairs; None means "no candidates"."""
    if not batch:
        return None
    best = None
    best_key = None
    for pair in batch:
        if pair.score is None:
            raise TaxonormError(f"pair {pair.key()} is unscored")
        rank = pair.bm25_rank if pair.bm25_rank is not None else sys.maxsize
        key = (-pair.score, rank, pair.cand_id)
        if best_key is None or key < best_key:
            best_key = key
            best = pair
    return (best.cand_id, best.score)


def group_by_query(pairs: Sequence[ScoredPair]) -> dict[str, list[ScoredPair]]:
    """Group pairs by query_id, preserving first-seen query order."""
    groups: dict[str, list[ScoredPair]] = {}
    for pair in pairs:
        groups.setdefault(pair.query_id, []).append(pair)
    return groups


def rerank_all(pairs: Sequence[ScoredPair], scorer=None) -> dict[str, tuple[int, float]]:
    """Score every query group and select one identifier per query.

    With ``scorer=None`` the pairs must already carry scores.
    """
    selections: dict[str, tuple[int, float]] = {}
    for qid, batch in group_by_query(pairs).items():
        if scorer is not None:
            try:
                batch = scorer.score_batch(batch)
            except TaxonormError:
                raise
            except Exception as exc:
                raise RerankError(f"scorer failed on query {qid!r}: {exc}") from exc
            if len(batch) != len(set(p.key() for p in batch)):
                raise RerankError(f"scorer returned duplicate pairs for query {qid!r}")
        selections[qid] = select(batch)
    return selections


def write_predictions(selections: Mapping[str, tuple[int, float]], handle) -> None:
    """Write `query_id<TAB>predicted_tax_id<TAB>score` lines."""
    for qid, picked in selections.items():
        tax_id, value = picked
        handle.write(f"{qid}\t{tax_id}\t{value:.6f}\n")


def read_predictions(handle) -> dict[str, tuple[int, float]]:
    """Read a predictions file written by :func:`write_predictions`."""
    out: dict[str, tuple[int, float]] = {}
    for lineno, line in enumerate(iter_lines(handle), start=1):
        row = line.rstrip("\n")
        if not row:
            continue
        parts = row.split("\t")
        if len(parts) != 3:
            raise TaxonormError(f"line {lineno}: expected 3 fields in predictions row")
        out[parts[0]] = (int(parts[1]), float(parts[2]))
    return out
