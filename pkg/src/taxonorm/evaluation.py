"""Filtered accuracy, generator recall, per-mention outcome reports.

Accuracy follows the corpus papers' filter: only mentions whose gold id
made it into the candidate list count toward the denominator. Mentions
the generator missed are reported as ungeneratable, never silently
dropped and never scored.
"""

from __future__ import annotations

import json
import statistics
from dataclasses import dataclass, field
from typing import Mapping, Sequence

from .errors import TaxonormError
from .normalize import tokenize
from .pairs import query_key

OUTCOMES = ("correct", "wrong", "ungeneratable")


@dataclass(frozen=True)
class MentionOutcome:
    query: str
    gold_id: int
    predicted_id: int | None
    outcome: str


@dataclass
class EvalReport:
    corpus: str
    total_mentions: int
    generatable_mentions: int
    correct_at_1: int
    accuracy: float
    recall_at_k: float
    per_mention: list[MentionOutcome] = field(default_factory=list)


@dataclass(frozen=True)
class RunComparison:
    corpus: str
    runs: int
    mean_accuracy: float
    stdev_accuracy: float


def evaluate(mentions: Sequence[tuple[str, int]],
             candidates: Mapping[str, Sequence[tuple[int, float]]],
             predictions: Mapping[str, tuple[int, float]],
             corpus: str = "") -> EvalReport:
    """Score predictions against gold mentions under the candidate filter.

    ``mentions`` are deduped (normalized surface, gold id) rows;
    ``candidates`` and ``predictions`` are keyed by the mention's
    query_id. Every generatable mention must have a prediction, and every
    prediction must belong to a known mention.
    """
    known_ids = {query_key(surface, gold): (surface, gold) for surface, gold in mentions}
    unknown = sorted(set(predictions) - set(known_ids))
    if unknown:
        raise TaxonormError(f"predictions for unknown query_ids: {unknown[:5]}")

    per_mention: list[MentionOutcome] = []
    generatable = 0
    correct = 0
    for surface, gold in mentions:
        qid = query_key(surface, gold)
        retrieved = candidates.get(qid, ())
        prediction = predictions.get(qid)
        predicted_id = prediction[0] if prediction is not None else None
        if any(tax_id == gold for tax_id, _ in retrieved):
            if prediction is None:
                raise TaxonormError(f"generatable mention {surface!r} ({qid}) has no prediction")
            generatable += 1
            if predicted_id == gold:
                correct += 1
                per_mention.append(MentionOutcome(surface, gold, predicted_id, "correct"))
            else:
                per_mention.append(MentionOutcome(surface, gold, predicted_id, "wrong"))
        else:
            per_mention.append(MentionOutcome(surface, gold, predicted_id, "ungeneratable"))
    total = len(mentions)
    return EvalReport(
        corpus=corpus,
        total_mentions=total,
        generatable_mentions=generatable,
        correct_at_1=correct,
        accuracy=correct / generatable if generatable else 0.0,
        recall_at_k=generatable / total if total else 0.0,
        per_mention=per_mention,
    )


def compare_runs(reports: Sequence[EvalReport]) -> RunComparison:
    """Mean and sample standard deviation of accuracy across repeated runs."""
    if len(reports) < 2:
        raise TaxonormError(f"need >= 2 reports to compare, got {len(reports)}")
    corpora = {report.corpus for report in reports}
    if len(corpora) != 1:
        raise TaxonormError(f"reports cover different corpora: {sorted(corpora)}")
    accuracies = [report.accuracy for report in reports]
    return RunComparison(
        corpus=reports[0].corpus,
        runs=len(reports),
        mean_accuracy=statistics.mean(accuracies),
        stdev_accuracy=statistics.stdev(accuracies),
    )


@dataclass(frozen=True)
class LexicalMismatch:
    """A wrong prediction that still shares surface tokens with the query."""

    query: str
    gold_id: int
    predicted_id: int
    shared_tokens: tuple[str, ...]


def lexical_mismatches(report: EvalReport,
                       concept_text: Mapping[int, str]) -> list[LexicalMismatch]:
    """Diagnostic rows for predictions that match lexically but not semantically."""
    rows = []
    for outcome in report.per_mention:
        if outcome.predicted_id is None or outcome.predicted_id == outcome.gold_id:
            continue
        candidate_tokens = set(tokenize(concept_text.get(outcome.predicted_id, "")))
        shared = tuple(t for t in tokenize(outcome.query) if t in candidate_tokens)
        if shared:
            rows.append(LexicalMismatch(outcome.query, outcome.gold_id,
                                        outcome.predicted_id, shared))
    return rows


def format_report(report: EvalReport) -> str:
    """Human-readable text table."""
    lines = [
        f"corpus               {report.corpus or '-'}",
        f"total mentions       {report.total_mentions}",
        f"generatable mentions {report.generatable_mentions}",
        f"correct at 1         {report.correct_at_1}",
        f"filtered accuracy    {report.accuracy:.4f}",
        f"recall@k             {report.recall_at_k:.4f}",
        "",
        f"{'query':<40} {'gold':>10} {'predicted':>10} outcome",
    ]
    for outcome in report.per_mention:
        predicted = outcome.predicted_id if outcome.predicted_id is not None else "-"
        lines.append(f"{outcome.query:<40} {outcome.gold_id:>10} {predicted!s:>10} {outcome.outcome}")
    return "\n".join(lines) + "\n"


def write_report_jsonl(report: EvalReport, handle) -> None:
    """Machine-readable report: one summary record, then one per mention."""
    summary = {
        "type": "summary",
        "corpus": report.corpus,
        "total_mentions": report.total_mentions,
        "generatable_mentions": report.generatable_mentions,
        "correct_at_1": report.correct_at_1,
        "accuracy": report.accuracy,
        "recall_at_k": report.recall_at_k,
    }
    handle.write(json.dumps(summary, ensure_ascii=False) + "\n")
    for outcome in report.per_mention:
        record = {
            "type": "mention",
            "query": outcome.query,
            "gold_id": outcome.gold_id,
            "predicted_id": outcome.predicted_id,
            "outcome": outcome.outcome,
        }
        handle.write(json.dumps(record, ensure_ascii=False) + "\n")
