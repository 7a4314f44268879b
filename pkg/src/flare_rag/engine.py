"""Strategy execution against a pluggable answerer.

Three execution strategies: answer directly from parametric knowledge
(zero retrieval calls), answer after a single retrieval, or run a bounded
retrieve-then-reason loop where each round either produces the final answer
or the next retrieval query.

The answerer seam is one method: given the question, the passages gathered
so far, the strategy being run, and the number of retrieval rounds already
issued, it replies with either a final answer or a follow-up query. A
deterministic table-driven oracle implements the seam for desk-scale runs;
an HTTP client implements it for real model endpoints. Remote failures
raise TransportError and are never conflated with wrong answers.
"""

from __future__ import annotations

import enum
import json
import os
import threading
from dataclasses import dataclass
from pathlib import Path
from typing import Mapping, Protocol

import requests

from .bm25 import DEFAULT_K, InvertedIndex
from .corpus import QADataset, QAExample
from .errors import DataError, TransportError, UsageError
from .judging import judge

DEFAULT_MAX_STEPS = 6

ENV_LLM_URL = "FLARE_LLM_URL"
ENV_LLM_TOKEN = "FLARE_LLM_TOKEN"

ANSWER_PREFIX = "ANSWER:"
FALLBACK_ANSWER = "i do not know"


class Strategy(enum.Enum):
    """Routing classes, ordered by retrieval cost where defined."""

    NO_RETRIEVAL = "no_retrieval"
    SINGLE_STEP = "single_step"
    MULTI_STEP = "multi_step"
    UNANSWERABLE = "unanswerable"

    @property
    def cost_rank(self) -> int:
        if self is Strategy.UNANSWERABLE:
            raise ValueError("unanswerable has no retrieval cost and is never executed")
        return _COST_RANK[self]


_COST_RANK = {
    Strategy.NO_RETRIEVAL: 0,
    Strategy.SINGLE_STEP: 1,
    Strategy.MULTI_STEP: 2,
}

EXECUTION_STRATEGIES = (Strategy.NO_RETRIEVAL, Strategy.SINGLE_STEP, Strategy.MULTI_STEP)


@dataclass(frozen=True)
class RetrievalStep:
    """One retrieval call: the query issued and the doc ids that came back."""

    query: str
    doc_ids: tuple[str, ...]


@dataclass(frozen=True)
class AnswerTrace:
    query_id: str
    strategy: Strategy
    answer: str
    steps: tuple[RetrievalStep, ...]

    @property
    def steps_used(self) -> int:
        return len(self.steps)


@dataclass(frozen=True)
class AnswerRequest:
    """What an answerer sees on each call.

    rounds counts retrieval calls issued so far in this trace: 0 when
    answering without retrieval, 1 on the first post-retrieval call.
    """

    query_id: str
    question: str
    mode: Strategy
    passages: tuple[str, ...]
    rounds: int


@dataclass(frozen=True)
class AnswererReply:
    """Exactly one of final (the answer) or next_query (keep retrieving)."""

    final: str | None = None
    next_query: str | None = None

    def __post_init__(self):
        if (self.final is None) == (self.next_query is None):
            raise ValueError("reply must carry exactly one of final or next_query")


class Answerer(Protocol):
    def reply(self, request: AnswerRequest) -> AnswererReply: ...


@dataclass(frozen=True)
class OracleBehavior:
    """Scripted behavior for one query id.

    correct_under lists the strategies whose canned answer contains a gold
    answer; the loader enforces that the two stay consistent. The script is
    the sequence of follow-up queries the mock emits in multi-step mode
    before it produces the canned final answer.
    """

    query_id: str
    correct_under: frozenset[Strategy]
    answers: Mapping[Strategy, str]
    multi_step_script: tuple[str, ...] = ()


class MockOracleAnswerer:
    """Deterministic answerer backed by an OracleBehavior table.

    Stateless between calls and safe to call concurrently. With strict=True
    (the default) an unknown query id is an error; with strict=False it gets
    a fixed fallback answer, which keeps ad-hoc CLI queries runnable.
    """

    def __init__(self, behaviors: Mapping[str, OracleBehavior], strict: bool = True):
        self.behaviors = dict(behaviors)
        self.strict = strict
        self.max_in_flight: int | None = None  # unbounded

    def reply(self, request: AnswerRequest) -> AnswererReply:
        behavior = self.behaviors.get(request.query_id)
        if behavior is None:
            if self.strict:
                raise DataError(f"no oracle behavior for query {request.query_id}")
            return AnswererReply(final=FALLBACK_ANSWER)
        if request.mode is not Strategy.MULTI_STEP:
            return AnswererReply(final=behavior.answers[request.mode])
        # Scripted follow-ups first; the canned final answer once the script runs out.
        position = request.rounds - 1
        if 0 <= position < len(behavior.multi_step_script):
            return AnswererReply(next_query=behavior.multi_step_script[position])
        return AnswererReply(final=behavior.answers[Strategy.MULTI_STEP])


class HttpAnswerer:
    """Answerer backed by an HTTP endpoint: POST {"prompt": ...} -> {"text": ...}.

    Endpoint and auth token default to the FLARE_LLM_URL / FLARE_LLM_TOKEN
    environment variables. In multi-step mode a reply starting with
    "ANSWER:" is the final answer; any other reply is used verbatim as the
    next retrieval query. At most max_in_flight requests run concurrently.
    """

    def __init__(
        self,
        url: str | None = None,
        token: str | None = None,
        timeout: float = 30.0,
        max_in_flight: int = 4,
    ):
        self.url = url or os.environ.get(ENV_LLM_URL)
        if not self.url:
            raise UsageError(f"no answerer endpoint: pass a url or set {ENV_LLM_URL}")
        self.token = token if token is not None else os.environ.get(ENV_LLM_TOKEN)
        self.timeout = timeout
        if max_in_flight < 1:
            raise ValueError("max_in_flight must be >= 1")
        self.max_in_flight = max_in_flight
        self._gate = threading.BoundedSemaphore(max_in_flight)
        self._session = requests.Session()

    def _build_prompt(self, request: AnswerRequest) -> str:
        parts = []
        if request.passages:
            parts.append("\n\n".join(request.passages))
        parts.append(f"Question: {request.question}")
        if request.mode is Strategy.MULTI_STEP:
            parts.append(
                f'Reply "{ANSWER_PREFIX} <answer>" when you can answer; '
                "otherwise reply with the next search query."
            )
        parts.append("Answer:")
        return "\n\n".join(parts)

    def reply(self, request: AnswerRequest) -> AnswererReply:
        headers = {}
        if self.token:
            headers["Authorization"] = f"Bearer {self.token}"
        payload = {"prompt": self._build_prompt(request)}
        with self._gate:
            try:
                response = self._session.post(
                    self.url, json=payload, headers=headers, timeout=self.timeout
                )
                response.raise_for_status()
                body = response.json()
            except (requests.RequestException, ValueError) as exc:
                raise TransportError(f"answerer endpoint failed: {exc}") from exc
        text = body.get("text") if isinstance(body, dict) else None
        if not isinstance(text, str):
            raise TransportError(f"malformed answerer response: {body!r}")
        text = text.strip()
        if request.mode is Strategy.MULTI_STEP:
            if text.upper().startswith(ANSWER_PREFIX):
                return AnswererReply(final=text[len(ANSWER_PREFIX):].strip())
            return AnswererReply(next_query=text)
        return AnswererReply(final=text)


def load_oracle(
    path: str | Path, examples: QADataset | None = None
) -> dict[str, OracleBehavior]:
    """Load oracle behaviors from JSONL, one per query id.

    When a QA dataset is given, every behavior must match an example there
    and its canned answers must agree with correct_under: the answer for
    strategy s contains a gold answer iff s is in correct_under.
    """
    path = Path(path)
    behaviors: dict[str, OracleBehavior] = {}
    with path.open("r", encoding="utf-8") as fh:
        for lineno, line in enumerate(fh, start=1):
            if not line.strip():
                raise DataError(f"{path.name}: blank line at line {lineno}")
            try:
                record = json.loads(line)
            except json.JSONDecodeError as exc:
                raise DataError(f"{path.name}: invalid JSON at line {lineno}: {exc}") from exc
            try:
                qid = record["query_id"]
                correct_under = frozenset(Strategy(s) for s in record["correct_under"])
                answers = {Strategy(kind): text for kind, text in record["answers"].items()}
                script = tuple(record.get("multi_step_script", ()))
            except (KeyError, TypeError, ValueError) as exc:
                raise DataError(f"{path.name}: line {lineno}: malformed behavior: {exc}") from exc
            if qid in behaviors:
                raise DataError(f"duplicate query_id {qid} at line {lineno}")
            if not correct_under <= set(EXECUTION_STRATEGIES):
                raise DataError(f"{qid}: correct_under must name execution strategies only")
            if set(answers) != set(EXECUTION_STRATEGIES):
                raise DataError(f"{qid}: answers must cover exactly the three execution strategies")
            if not all(isinstance(q, str) for q in script):
                raise DataError(f"{qid}: multi_step_script entries must be strings")
            behaviors[qid] = OracleBehavior(
                query_id=qid,
                correct_under=correct_under,
                answers=answers,
                multi_step_script=script,
            )
    if examples is not None:
        for qid, behavior in behaviors.items():
            example = examples.get(qid)
            if example is None:
                raise DataError(f"{qid}: oracle behavior has no matching QA example")
            for strategy in EXECUTION_STRATEGIES:
                contains = judge(behavior.answers[strategy], example.gold_answers)
                if contains != (strategy in behavior.correct_under):
                    raise DataError(
                        f"{qid}: canned {strategy.value} answer inconsistent with correct_under"
                    )
    return behaviors


def save_oracle(behaviors: Mapping[str, OracleBehavior], path: str | Path) -> Path:
    path = Path(path)
    with path.open("w", encoding="utf-8") as fh:
        for qid in behaviors:
            b = behaviors[qid]
            record = {
                "query_id": b.query_id,
                "correct_under": [s.value for s in EXECUTION_STRATEGIES if s in b.correct_under],
                "answers": {s.value: b.answers[s] for s in EXECUTION_STRATEGIES},
                "multi_step_script": list(b.multi_step_script),
            }
            fh.write(json.dumps(record, ensure_ascii=False, separators=(",", ":")) + "\n")
    return path


def _passages(index: InvertedIndex, doc_ids: tuple[str, ...]) -> list[str]:
    texts = (index.text_for(doc_id) for doc_id in doc_ids)
    return [text for text in texts if text is not None]


def answer_no_retrieval(answerer: Answerer, query: QAExample) -> AnswerTrace:
    """Answer from parametric knowledge alone: zero retrieval calls."""
    request = AnswerRequest(
        query_id=query.id,
        question=query.question,
        mode=Strategy.NO_RETRIEVAL,
        passages=(),
        rounds=0,
    )
    reply = answerer.reply(request)
    if reply.final is None:
        raise TransportError("answerer returned a follow-up query outside the multi-step loop")
    return AnswerTrace(query_id=query.id, strategy=Strategy.NO_RETRIEVAL, answer=reply.final, steps=())


def answer_single_step(
    answerer: Answerer, index: InvertedIndex, query: QAExample, k: int = DEFAULT_K
) -> AnswerTrace:
    """One retrieval call, then answer conditioned on the k passages."""
    hits = index.search(query.question, k)
    step = RetrievalStep(query=query.question, doc_ids=tuple(h.doc_id for h in hits))
    request = AnswerRequest(
        query_id=query.id,
        question=query.question,
        mode=Strategy.SINGLE_STEP,
        passages=tuple(_passages(index, step.doc_ids)),
        rounds=1,
    )
    try:
        reply = answerer.reply(request)
    except TransportError as exc:
        exc.partial_trace = AnswerTrace(query.id, Strategy.SINGLE_STEP, "", (step,))
        raise
    if reply.final is None:
        raise TransportError("answerer returned a follow-up query outside the multi-step loop")
    return AnswerTrace(query_id=query.id, strategy=Strategy.SINGLE_STEP, answer=reply.final, steps=(step,))


def answer_multi_step(
    answerer: Answerer,
    index: InvertedIndex,
    query: QAExample,
    k: int = DEFAULT_K,
    max_steps: int = DEFAULT_MAX_STEPS,
) -> AnswerTrace:
    """Interleaved retrieve-and-reason loop, capped at max_steps retrievals.

    Each round retrieves for the current query and asks the answerer, which
    either finishes or supplies the next query. Hitting the cap returns the
    last partial answer (the final reasoning sentence) as a best effort.
    """
    if max_steps < 1:
        raise ValueError("max_steps must be >= 1")
    steps: list[RetrievalStep] = []
    passages: list[str] = []
    current = query.question
    answer: str | None = None
    while len(steps) < max_steps:
        hits = index.search(current, k)
        step = RetrievalStep(query=current, doc_ids=tuple(h.doc_id for h in hits))
        steps.append(step)
        passages.extend(_passages(index, step.doc_ids))
        request = AnswerRequest(
            query_id=query.id,
            question=query.question,
            mode=Strategy.MULTI_STEP,
            passages=tuple(passages),
            rounds=len(steps),
        )
        try:
            reply = answerer.reply(request)
        except TransportError as exc:
            exc.partial_trace = AnswerTrace(query.id, Strategy.MULTI_STEP, "", tuple(steps))
            raise
        if reply.final is not None:
            answer = reply.final
            break
        current = reply.next_query
    if answer is None:
        answer = current
    return AnswerTrace(query_id=query.id, strategy=Strategy.MULTI_STEP, answer=answer, steps=tuple(steps))


def execute(
    answerer: Answerer,
    index: InvertedIndex | None,
    query: QAExample,
    strategy: Strategy,
    k: int = DEFAULT_K,
    max_steps: int = DEFAULT_MAX_STEPS,
) -> AnswerTrace:
    """Run one execution strategy. unanswerable is a label, never executed."""
    if strategy is Strategy.NO_RETRIEVAL:
        return answer_no_retrieval(answerer, query)
    if index is None:
        raise UsageError(f"{strategy.value} execution needs an index")
    if strategy is Strategy.SINGLE_STEP:
        return answer_single_step(answerer, index, query, k=k)
    if strategy is Strategy.MULTI_STEP:
        return answer_multi_step(answerer, index, query, k=k, max_steps=max_steps)
    raise ValueError(f"{strategy.value} cannot be executed")
