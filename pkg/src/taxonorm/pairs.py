"""Labeled (query, candidate) pairs and the JSONL exchange protocol.

A pair file is UTF-8 JSONL, one record per pair with keys ``query_id``,
``query``, ``candidate_id``, ``candidate`` and (in labeled mode)
``label``. Score files are JSONL with ``query_id``, ``candidate_id``,
``score``. Scores join pairs 1:1; any unmatched key on either side is an
error.
"""

from __future__ import annotations

import dataclasses
import hashlib
import json
from dataclasses import dataclass
from typing import Mapping, Sequence

from .bm25 import Bm25Params, CandidateList, InvertedIndex, top_k
from .errors import ParseError, TaxonormError
from .normalize import tokenize
from .taxdump import RankDictionary
from .textio import iter_lines


@dataclass(frozen=True)
class ScoredPair:
    """One (query, candidate) row; the unit the reranker consumes.

    bm25_rank/bm25_score describe where the generator put the candidate;
    they stay out of the wire format (rank is implied by file order).
    """

    query_id: str
    query_text: str
    query_gold_id: int | None
    cand_id: int
    cand_text: str
    label: int | None
    bm25_rank: int | None = None
    bm25_score: float | None = None
    score: float | None = None

    def key(self) -> tuple[str, int]:
        return (self.query_id, self.cand_id)


@dataclass(frozen=True)
class UngeneratableMention:
    """A mention the generator could not serve, and why."""

    query_id: str
    query_text: str
    gold_tax_id: int
    reason: str  # "no-candidates" | "gold-not-in-dictionary"


def query_key(surface: str, gold_tax_id: int) -> str:
    """Stable content hash identifying a deduped (surface, gold) mention."""
    digest = hashlib.sha1(f"{surface}\t{gold_tax_id}".encode("utf-8")).hexdigest()
    return digest[:16]


def make_pairs(mentions: Sequence[tuple[str, int]],
               dictionaries: Mapping[str, RankDictionary],
               index: InvertedIndex,
               params: Bm25Params,
               k: int = 10,
               ) -> tuple[list[ScoredPair], list[UngeneratableMention]]:
    """Retrieve top-k candidates per mention and label them by the gold id.

    Mentions are (normalized surface, gold tax_id) as produced by
    deduplication. A mention with an empty candidate list yields no pairs
    and is logged; a gold id absent from every dictionary is logged too
    (its pairs, if any, are all negative).
    """
    concept_text = {}
    for dictionary in dictionaries.values():
        for tax_id, entry in dictionary.entries.items():
            concept_text.setdefault(tax_id, entry.concept_text)
    pairs: list[ScoredPair] = []
    ungeneratable: list[UngeneratableMention] = []
    for surface, gold_id in mentions:
        qid = query_key(surface, gold_id)
        if gold_id not in concept_text:
            ungeneratable.append(UngeneratableMention(qid, surface, gold_id, "gold-not-in-dictionary"))
        retrieved = top_k(index, params, tokenize(surface), k)
        if not retrieved.candidates:
            ungeneratable.append(UngeneratableMention(qid, surface, gold_id, "no-candidates"))
            continue
        for rank, (tax_id, bm25_score) in enumerate(retrieved.candidates, start=1):
            text = concept_text.get(tax_id)
            if text is None:
                raise TaxonormError(f"candidate {tax_id} is indexed but in no dictionary")
            pairs.append(ScoredPair(
                query_id=qid,
                query_text=surface,
                query_gold_id=gold_id,
                cand_id=tax_id,
                cand_text=text,
                label=1 if tax_id == gold_id else 0,
                bm25_rank=rank,
                bm25_score=bm25_score,
            ))
    return pairs, ungeneratable


def export_pairs(pairs: Sequence[ScoredPair], handle, include_labels: bool = True) -> None:
    """Write the pair-exchange JSONL; order is preserved."""
    for pair in pairs:
        record = {
            "query_id": pair.query_id,
            "query": pair.query_text,
            "candidate_id": pair.cand_id,
            "candidate": pair.cand_text,
        }
        if include_labels:
            if pair.label is None:
                raise TaxonormError(f"pair {pair.key()} has no label to export")
            record["label"] = pair.label
        handle.write(json.dumps(record, ensure_ascii=False) + "\n")


def load_pairs(handle) -> list[ScoredPair]:
    """Read a pair-exchange JSONL file.

    The generator rank is recovered from record order within each
    query_id group; gold ids are not part of the wire format.
    """
    pairs: list[ScoredPair] = []
    rank_counter: dict[str, int] = {}
    for lineno, line in enumerate(iter_lines(handle), start=1):
        row = line.strip()
        if not row:
            continue
        try:
            record = json.loads(row)
        except json.JSONDecodeError as exc:
            raise ParseError(f"bad JSON: {exc}", lineno) from None
        try:
            qid = record["query_id"]
            query = record["query"]
            cand_id = int(record["candidate_id"])
            cand_text = record["candidate"]
        except KeyError as exc:
            raise ParseError(f"pair record missing key {exc}", lineno) from None
        label = record.get("label")
        if label is not None and label not in (0, 1):
            raise ParseError(f"label must be 0 or 1, got {label!r}", lineno)
        rank = rank_counter.get(qid, 0) + 1
        rank_counter[qid] = rank
        pairs.append(ScoredPair(
            query_id=qid,
            query_text=query,
            query_gold_id=None,
            cand_id=cand_id,
            cand_text=cand_text,
            label=label,
            bm25_rank=rank,
        ))
    return pairs


def load_scores(handle) -> dict[tuple[str, int], float]:
    """Read a scores JSONL file into a (query_id, candidate_id) -> score map."""
    scores: dict[tuple[str, int], float] = {}
    for lineno, line in enumerate(iter_lines(handle), start=1):
        row = line.strip()
        if not row:
            continue
        try:
            record = json.loads(row)
            key = (record["query_id"], int(record["candidate_id"]))
            value = float(record["score"])
        except (json.JSONDecodeError, KeyError, TypeError, ValueError) as exc:
            raise ParseError(f"bad score record: {exc}", lineno) from None
        if not 0.0 <= value <= 1.0:
            raise ParseError(f"score {value} for {key} outside [0, 1]", lineno)
        if key in scores:
            raise ParseError(f"duplicate score for {key}", lineno)
        scores[key] = value
    return scores


def import_scores(pairs: Sequence[ScoredPair],
                  scores: Mapping[tuple[str, int], float]) -> list[ScoredPair]:
    """Attach a score to every pair; keys must match 1:1."""
    pair_keys = {pair.key() for pair in pairs}
    extra = sorted(set(scores) - pair_keys)
    if extra:
        raise TaxonormError(f"scores for unknown pairs: {extra[:5]}")
    annotated = []
    for pair in pairs:
        if pair.key() not in scores:
            raise TaxonormError(f"no score for pair {pair.key()}")
        annotated.append(dataclasses.replace(pair, score=scores[pair.key()]))
    return annotated


def write_scores(pairs: Sequence[ScoredPair], handle) -> None:
    """Write scored pairs back out in the scores JSONL shape."""
    for pair in pairs:
        if pair.score is None:
            raise TaxonormError(f"pair {pair.key()} has no score")
        record = {"query_id": pair.query_id, "candidate_id": pair.cand_id, "score": pair.score}
        handle.write(json.dumps(record, ensure_ascii=False) + "\n")


def write_mentions(mentions: Sequence[tuple[str, int]], handle) -> None:
    """Write deduped mentions as `query_id<TAB>query<TAB>gold_tax_id`."""
    for surface, gold_id in mentions:
        handle.write(f"{query_key(surface, gold_id)}\t{surface}\t{gold_id}\n")


def read_mentions(handle) -> list[tuple[str, int]]:
    """Read a mentions file written by :func:`write_mentions`."""
    mentions = []
    for lineno, line in enumerate(iter_lines(handle), start=1):
        row = line.rstrip("\n")
        if not row:
            continue
        parts = row.split("\t")
        if len(parts) != 3:
            raise ParseError(f"expected 3 fields in mentions row, got {len(parts)}", lineno)
        qid, surface, gold = parts
        try:
            gold_id = int(gold)
        except ValueError:
            raise ParseError(f"non-integer gold id {gold!r}", lineno) from None
        if query_key(surface, gold_id) != qid:
            raise ParseError(f"query_id {qid} does not match its content hash", lineno)
        mentions.append((surface, gold_id))
    return mentions


def write_candidates(candidates: Mapping[str, CandidateList], handle) -> None:
    """Write candidate lists as `query_id<TAB>tax_id<TAB>score` lines."""
    for qid, clist in candidates.items():
        for tax_id, bm25_score in clist.candidates:
            handle.write(f"{qid}\t{tax_id}\t{bm25_score!r}\n")


def read_candidates(handle) -> dict[str, list[tuple[int, float]]]:
    """Read a candidates file into query_id -> [(tax_id, score)...]."""
    out: dict[str, list[tuple[int, float]]] = {}
    for lineno, line in enumerate(iter_lines(handle), start=1):
        row = line.rstrip("\n")
        if not row:
            continue
        parts = row.split("\t")
        if len(parts) != 3:
            raise ParseError(f"expected 3 fields in candidates row, got {len(parts)}", lineno)
        try:
            tax_id = int(parts[1])
            bm25_score = float(parts[2])
        except ValueError as exc:
            raise ParseError(f"bad candidates row: {exc}", lineno) from None
        out.setdefault(parts[0], []).append((tax_id, bm25_score))
    return out


def write_ungeneratable(entries: Sequence[UngeneratableMention], handle) -> None:
    """Write the ungeneratable log as `query_id<TAB>query<TAB>gold<TAB>reason`."""
    for entry in entries:
        handle.write(f"{entry.query_id}\t{entry.query_text}\t{entry.gold_tax_id}\t{entry.reason}\n")
