"""Training-label construction for the two routing objectives.

Cost labels: run all three strategies, keep the ones judged correct, and
label the query with the cheapest of them. Queries where nothing succeeds
are excluded to a sidecar with a reason (or labeled unanswerable when the
four-class flag is on). Reliability labels ignore execution entirely and
map the example's origin: single_hop -> single_step, multi_hop -> multi_step.
Combined labels take the union, cost winning any overlap.
"""

from __future__ import annotations

import json
import logging
from dataclasses import dataclass
from pathlib import Path

from .bm25 import DEFAULT_K, InvertedIndex
from .corpus import QADataset, QAExample
from .engine import (
    DEFAULT_MAX_STEPS,
    EXECUTION_STRATEGIES,
    Answerer,
    AnswerTrace,
    Strategy,
    execute,
)
from .errors import DataError, TransportError
from .judging import judge

logger = logging.getLogger(__name__)

REASON_NO_CORRECT_STRATEGY = "no strategy produced a correct answer"

_ORIGIN_TO_STRATEGY = {
    "single_hop": Strategy.SINGLE_STEP,
    "multi_hop": Strategy.MULTI_STEP,
}


@dataclass(frozen=True)
class LabeledExample:
    query_id: str
    label: Strategy
    source: str  # "cost" | "reliability" | "combined"


@dataclass(frozen=True)
class Exclusion:
    query_id: str
    reason: str


def evaluate_strategies(
    answerer: Answerer,
    index: InvertedIndex,
    query: QAExample,
    k: int = DEFAULT_K,
    max_steps: int = DEFAULT_MAX_STEPS,
) -> tuple[set[Strategy], dict[Strategy, AnswerTrace]]:
    """Execute all three strategies; return the judged-correct set and traces."""
    traces: dict[Strategy, AnswerTrace] = {}
    correct: set[Strategy] = set()
    for strategy in EXECUTION_STRATEGIES:
        trace = execute(answerer, index, query, strategy, k=k, max_steps=max_steps)
        traces[strategy] = trace
        if judge(trace.answer, query.gold_answers):
            correct.add(strategy)
    return correct, traces


def label_cost(correct: set[Strategy], four_class: bool = False) -> Strategy | None:
    """Cheapest correct strategy; None (excluded) or unanswerable when empty."""
    if correct:
        return min(correct, key=lambda s: s.cost_rank)
    return Strategy.UNANSWERABLE if four_class else None


def label_cost_dataset(
    answerer: Answerer,
    index: InvertedIndex,
    qa: QADataset,
    k: int = DEFAULT_K,
    max_steps: int = DEFAULT_MAX_STEPS,
    four_class: bool = False,
) -> tuple[list[LabeledExample], list[Exclusion]]:
    """Cost-label every query; deterministic, ordered by query_id.

    A transport error under any strategy marks the query unevaluated: it
    goes to the exclusion list with the logged reason instead of a label.
    """
    labels: list[LabeledExample] = []
    exclusions: list[Exclusion] = []
    for query in qa:
        try:
            correct, _ = evaluate_strategies(answerer, index, query, k=k, max_steps=max_steps)
        except TransportError as exc:
            logger.warning("query %s unevaluated: %s", query.id, exc)
            exclusions.append(Exclusion(query_id=query.id, reason=f"transport error: {exc}"))
            continue
        label = label_cost(correct, four_class=four_class)
        if label is None:
            exclusions.append(Exclusion(query_id=query.id, reason=REASON_NO_CORRECT_STRATEGY))
        else:
            labels.append(LabeledExample(query_id=query.id, label=label, source="cost"))
    labels.sort(key=lambda e: e.query_id)
    exclusions.sort(key=lambda e: e.query_id)
    return labels, exclusions


def label_reliability(query: QAExample) -> Strategy:
    """Pure function of origin; never no_retrieval, so a routed query always retrieves."""
    try:
        return _ORIGIN_TO_STRATEGY[query.origin]
    except KeyError:
        raise DataError(f"{query.id}: unknown origin {query.origin!r}") from None


def label_reliability_dataset(qa: QADataset) -> list[LabeledExample]:
    labels = [
        LabeledExample(query_id=q.id, label=label_reliability(q), source="reliability")
        for q in qa
    ]
    labels.sort(key=lambda e: e.query_id)
    return labels


def label_combined(
    cost_labels: list[LabeledExample], reliability_labels: list[LabeledExample]
) -> list[LabeledExample]:
    """Union of both label sets; the cost label wins where both exist."""
    merged: dict[str, Strategy] = {e.query_id: e.label for e in reliability_labels}
    for e in cost_labels:
        merged[e.query_id] = e.label
    return [
        LabeledExample(query_id=qid, label=merged[qid], source="combined")
        for qid in sorted(merged)
    ]


def write_labels(labels: list[LabeledExample], path: str | Path) -> Path:
    path = Path(path)
    with path.open("w", encoding="utf-8") as fh:
        for e in labels:
            record = {"query_id": e.query_id, "label": e.label.value, "source": e.source}
            fh.write(json.dumps(record, ensure_ascii=False, separators=(",", ":")) + "\n")
    return path


def read_labels(path: str | Path) -> list[LabeledExample]:
    path = Path(path)
    labels: list[LabeledExample] = []
    with path.open("r", encoding="utf-8") as fh:
        for lineno, line in enumerate(fh, start=1):
            try:
                record = json.loads(line)
                labels.append(
                    LabeledExample(
                        query_id=record["query_id"],
                        label=Strategy(record["label"]),
                        source=record["source"],
                    )
                )
            except (json.JSONDecodeError, KeyError, TypeError, ValueError) as exc:
                raise DataError(f"{path.name}: line {lineno}: malformed label: {exc}") from exc
    return labels


def write_exclusions(exclusions: list[Exclusion], path: str | Path) -> Path:
    path = Path(path)
    with path.open("w", encoding="utf-8") as fh:
        for e in exclusions:
            record = {"query_id": e.query_id, "reason": e.reason}
            fh.write(json.dumps(record, ensure_ascii=False, separators=(",", ":")) + "\n")
    return path
