"""Pair-exchange JSONL records.

Pairs arrive as UTF-8 JSONL with keys ``query_id``, ``query``,
``candidate_id``, ``candidate`` and optionally ``label``; scores leave as
JSONL with ``query_id``, ``candidate_id``, ``score``. This module owns
both shapes so the scorer never depends on the pipeline package.
"""

from __future__ import annotations

import json
from dataclasses import dataclass
from pathlib import Path
from typing import Iterable, Sequence


class RecordError(ValueError):
    """Malformed or incomplete pair/score records."""


@dataclass(frozen=True)
class PairRecord:
    query_id: str
    query: str
    candidate_id: int
    candidate: str
    label: int | None = None

    def key(self) -> tuple[str, int]:
        return (self.query_id, self.candidate_id)


def read_pairs(path: Path | str) -> list[PairRecord]:
    records: list[PairRecord] = []
    with open(path, encoding="utf-8") as handle:
        for lineno, line in enumerate(handle, start=1):
            row = line.strip()
            if not row:
                continue
            try:
                data = json.loads(row)
            except json.JSONDecodeError as exc:
                raise RecordError(f"{path}:{lineno}: bad JSON: {exc}") from None
            try:
                record = PairRecord(
                    query_id=str(data["query_id"]),
                    query=str(data["query"]),
                    candidate_id=int(data["candidate_id"]),
                    candidate=str(data["candidate"]),
                    label=data.get("label"),
                )
            except KeyError as exc:
                raise RecordError(f"{path}:{lineno}: pair record missing key {exc}") from None
            if record.label is not None and record.label not in (0, 1):
                raise RecordError(f"{path}:{lineno}: label must be 0 or 1, got {record.label!r}")
            records.append(record)
    return records


def require_labels(records: Sequence[PairRecord], path: Path | str) -> None:
    if not records:
        raise RecordError(f"{path}: no pair records to train on")
    missing = [r.key() for r in records if r.label is None]
    if missing:
        raise RecordError(f"{path}: label column absent for {len(missing)} pairs, "
                          f"first {missing[0]}")


def group_ids(records: Iterable[PairRecord]) -> list[str]:
    """query_ids in first-seen order."""
    seen: dict[str, None] = {}
    for record in records:
        seen.setdefault(record.query_id, None)
    return list(seen)


def group_indices(records: Sequence[PairRecord]) -> dict[str, list[int]]:
    groups: dict[str, list[int]] = {}
    for i, record in enumerate(records):
        groups.setdefault(record.query_id, []).append(i)
    return groups


def write_scores(records: Sequence[PairRecord], scores: Sequence[float],
                 path: Path | str) -> None:
    if len(records) != len(scores):
        raise RecordError(f"{len(scores)} scores for {len(records)} pairs")
    with open(path, "w", encoding="utf-8") as handle:
        for record, score in zip(records, scores):
            handle.write(json.dumps({
                "query_id": record.query_id,
                "candidate_id": record.candidate_id,
                "score": float(score),
            }, ensure_ascii=False) + "\n")


def read_scores(path: Path | str) -> dict[tuple[str, int], float]:
    out: dict[tuple[str, int], float] = {}
    with open(path, encoding="utf-8") as handle:
        for lineno, line in enumerate(handle, start=1):
            row = line.strip()
            if not row:
                continue
            data = json.loads(row)
            key = (str(data["query_id"]), int(data["candidate_id"]))
            if key in out:
                raise RecordError(f"{path}:{lineno}: duplicate score for {key}")
            out[key] = float(data["score"])
    return out
