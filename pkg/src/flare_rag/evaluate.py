"""Policy evaluation: accuracy against retrieval-step cost.

A policy decides a strategy per query; the engine executes it; the judge
scores the answer by normalized containment. Cost is the number of
retrieval calls in the trace. Fixed policies (always no / single / multi)
give the reference points; classifier policies route per query; the
blended policy exposes the control parameter alpha, and sweeping it traces
the accuracy/cost curve.
"""

from __future__ import annotations

from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass
from typing import Iterable, Sequence

from .bm25 import DEFAULT_K, InvertedIndex
from .classifier import ClassifierWeights, interpolate, route
from .corpus import QADataset, QAExample
from .engine import DEFAULT_MAX_STEPS, Answerer, AnswerTrace, Strategy, execute
from .errors import TransportError, UsageError
from .judging import judge

__all__ = [
    "DEFAULT_ALPHA_GRID",
    "EvalRecord",
    "OriginBreakdown",
    "StaticPolicy",
    "ClassifierPolicy",
    "InterpolatedPolicy",
    "cost_of",
    "format_alpha",
    "judge",
    "parse_policy_name",
    "run_policy",
    "sweep_alpha",
]

DEFAULT_ALPHA_GRID = (0.0, 0.2, 0.4, 0.6, 0.8, 1.0)

_STATIC_SHORT = {
    Strategy.NO_RETRIEVAL: "no",
    Strategy.SINGLE_STEP: "single",
    Strategy.MULTI_STEP: "multi",
}


def cost_of(trace: AnswerTrace) -> int:
    """Retrieval cost of a finished trace: the number of retrieval calls."""
    return trace.steps_used


def format_alpha(alpha: float) -> str:
    return str(float(alpha))


@dataclass(frozen=True)
class OriginBreakdown:
    accuracy: float
    mean_steps: float
    total_steps: int
    n: int


@dataclass(frozen=True)
class EvalRecord:
    policy: str
    alpha: float | None
    accuracy: float
    mean_steps: float
    total_steps: int
    n: int
    per_origin: dict[str, OriginBreakdown]


class StaticPolicy:
    """Always the same strategy, e.g. static:multi."""

    def __init__(self, strategy: Strategy):
        if strategy not in _STATIC_SHORT:
            raise UsageError(f"{strategy.value} is not a static policy strategy")
        self.strategy = strategy
        self.name = f"static:{_STATIC_SHORT[strategy]}"
        self.alpha: float | None = None

    def decide(self, question: str) -> Strategy:
        return self.strategy


class ClassifierPolicy:
    """Route each query through one trained classifier (the combined-label baseline)."""

    def __init__(self, weights: ClassifierWeights, name: str = "adaptive_rag"):
        self.weights = weights
        self.name = name
        self.alpha: float | None = None

    def decide(self, question: str) -> Strategy:
        return route(self.weights, question).strategy


class InterpolatedPolicy:
    """Route through the alpha-blend of the cost and reliability classifiers."""

    def __init__(self, coc: ClassifierWeights, roc: ClassifierWeights, alpha: float):
        self.weights = interpolate(coc, roc, alpha)
        self.alpha = float(alpha)
        self.name = f"flare:alpha={format_alpha(alpha)}"

    def decide(self, question: str) -> Strategy:
        return route(self.weights, question).strategy


def parse_policy_name(name: str) -> tuple[str, float | None]:
    """Split a policy string into (kind, alpha): "flare:alpha=0.4" -> ("flare", 0.4)."""
    if name in ("static:no", "static:single", "static:multi", "adaptive_rag", "flare"):
        return name, None
    if name.startswith("flare:alpha="):
        try:
            return "flare", float(name.removeprefix("flare:alpha="))
        except ValueError:
            raise UsageError(f"bad alpha in policy {name!r}") from None
    raise UsageError(f"unknown policy {name!r}")


def _aggregate(
    policy_name: str,
    alpha: float | None,
    outcomes: Sequence[tuple[str, int, bool]],
) -> EvalRecord:
    """Order-independent reduction of (origin, steps, correct) outcomes."""

    def stats(rows: Sequence[tuple[str, int, bool]]) -> tuple[float, float, int, int]:
        n = len(rows)
        if n == 0:
            return 0.0, 0.0, 0, 0
        total = sum(steps for _, steps, _ in rows)
        correct = sum(1 for _, _, ok in rows if ok)
        return correct / n, total / n, total, n

    accuracy, mean_steps, total_steps, n = stats(outcomes)
    per_origin: dict[str, OriginBreakdown] = {}
    for origin in sorted({origin for origin, _, _ in outcomes}):
        rows = [row for row in outcomes if row[0] == origin]
        o_acc, o_mean, o_total, o_n = stats(rows)
        per_origin[origin] = OriginBreakdown(
            accuracy=o_acc, mean_steps=o_mean, total_steps=o_total, n=o_n
        )
    return EvalRecord(
        policy=policy_name,
        alpha=alpha,
        accuracy=accuracy,
        mean_steps=mean_steps,
        total_steps=total_steps,
        n=n,
        per_origin=per_origin,
    )


def run_policy(
    policy,
    qa: QADataset,
    answerer: Answerer,
    index: InvertedIndex | None,
    k: int = DEFAULT_K,
    max_steps: int = DEFAULT_MAX_STEPS,
    on_transport: str = "abort",
    workers: int = 1,
) -> tuple[EvalRecord, list[dict]]:
    """Evaluate one policy over a QA set.

    Returns the aggregate record and the per-query log rows (query_id,
    policy, decision, steps, correct), in dataset order. Transport errors
    abort by default; on_transport="skip" logs the query with an error field
    and drops it from the aggregates. workers > 1 runs queries concurrently
    (capped by the answerer's own in-flight bound, if any); the reduction is
    order independent, so results match the sequential run.
    """
    if on_transport not in ("abort", "skip"):
        raise UsageError(f"on_transport must be 'abort' or 'skip', got {on_transport!r}")
    limit = getattr(answerer, "max_in_flight", None)
    if limit:
        workers = min(workers, limit)

    def run_one(query: QAExample) -> tuple[dict, tuple[str, int, bool] | None]:
        decision = policy.decide(query.question)
        try:
            trace = execute(answerer, index, query, decision, k=k, max_steps=max_steps)
        except TransportError as exc:
            if on_transport == "abort":
                raise
            row = {
                "query_id": query.id,
                "policy": policy.name,
                "decision": decision.value,
                "steps": None,
                "correct": None,
                "error": str(exc),
            }
            return row, None
        correct = judge(trace.answer, query.gold_answers)
        row = {
            "query_id": query.id,
            "policy": policy.name,
            "decision": decision.value,
            "steps": trace.steps_used,
            "correct": correct,
        }
        return row, (query.origin, trace.steps_used, correct)

    queries = list(qa)
    if workers > 1:
        with ThreadPoolExecutor(max_workers=workers) as pool:
            results = list(pool.map(run_one, queries))
    else:
        results = [run_one(query) for query in queries]

    rows = [row for row, _ in results]
    outcomes = [outcome for _, outcome in results if outcome is not None]
    record = _aggregate(policy.name, getattr(policy, "alpha", None), outcomes)
    return record, rows


def sweep_alpha(
    qa: QADataset,
    coc: ClassifierWeights,
    roc: ClassifierWeights,
    answerer: Answerer,
    index: InvertedIndex,
    grid: Iterable[float] = DEFAULT_ALPHA_GRID,
    k: int = DEFAULT_K,
    max_steps: int = DEFAULT_MAX_STEPS,
    on_transport: str = "abort",
    workers: int = 1,
) -> tuple[list[EvalRecord], list[dict]]:
    """Evaluate the blended policy at every alpha in the grid (echoed as given)."""
    grid = [float(alpha) for alpha in grid]
    for alpha in grid:
        if not 0.0 <= alpha <= 1.0:
            raise UsageError(f"alpha must be in [0, 1], got {alpha}")
    records: list[EvalRecord] = []
    all_rows: list[dict] = []
    for alpha in grid:
        policy = InterpolatedPolicy(coc, roc, alpha)
        record, rows = run_policy(
            policy,
            qa,
            answerer,
            index,
            k=k,
            max_steps=max_steps,
            on_transport=on_transport,
            workers=workers,
        )
        records.append(record)
        all_rows.extend(rows)
    return records, all_rows
