import json

import pytest

from flare_rag.bm25 import build_index
from flare_rag.corpus import Corpus, Document, QADataset, QAExample
from flare_rag.engine import (
    EXECUTION_STRATEGIES,
    AnswerRequest,
    MockOracleAnswerer,
    OracleBehavior,
    Strategy,
)
from flare_rag.errors import DataError, TransportError
from flare_rag.labeler import (
    REASON_NO_CORRECT_STRATEGY,
    Exclusion,
    LabeledExample,
    evaluate_strategies,
    label_combined,
    label_cost,
    label_cost_dataset,
    label_reliability,
    label_reliability_dataset,
    read_labels,
    write_exclusions,
    write_labels,
)

N = Strategy.NO_RETRIEVAL
S = Strategy.SINGLE_STEP
M = Strategy.MULTI_STEP
U = Strategy.UNANSWERABLE


def qa(qid, origin="single_hop", gold=("42",)):
    return QAExample(
        id=qid,
        question=f"question about {qid}",
        gold_answers=gold,
        origin=origin,
        dataset="toy",
    )


def behavior(qid, correct, script=()):
    answers = {
        s: f"The answer is 42." if s in correct else "I cannot determine that."
        for s in EXECUTION_STRATEGIES
    }
    return OracleBehavior(
        query_id=qid,
        correct_under=frozenset(correct),
        answers=answers,
        multi_step_script=tuple(script),
    )


@pytest.fixture()
def setup():
    corpus = Corpus([Document(id="d1", title="t", text="some shared background text")])
    index = build_index(corpus)
    return index


class TestLabelCost:
    def test_min_cost_rank_wins(self):
        assert label_cost({N, S, M}) is N
        assert label_cost({S, M}) is S
        assert label_cost({M}) is M
        assert label_cost({N, M}) is N

    def test_empty_set_three_class(self):
        assert label_cost(set()) is None

    def test_empty_set_four_class(self):
        assert label_cost(set(), four_class=True) is U


class TestEvaluateStrategies:
    def test_correct_set_matches_oracle_table(self, setup):
        index = setup
        b = behavior("q1", correct={S, M})
        answerer = MockOracleAnswerer({"q1": b})
        correct, traces = evaluate_strategies(answerer, index, qa("q1"))
        assert correct == {S, M}
        assert set(traces) == set(EXECUTION_STRATEGIES)
        assert traces[N].steps_used == 0
        assert traces[S].steps_used == 1

    def test_script_length_drives_step_count(self, setup):
        b = behavior("q1", correct={M}, script=("hop a", "hop b"))
        answerer = MockOracleAnswerer({"q1": b})
        _, traces = evaluate_strategies(answerer, setup, qa("q1"))
        assert traces[M].steps_used == 3


class TestLabelCostDataset:
    def test_labels_and_exclusions_sorted(self, setup):
        behaviors = {
            "q3": behavior("q3", correct={M}),
            "q1": behavior("q1", correct={N, S}),
            "q2": behavior("q2", correct=set()),
            "q4": behavior("q4", correct={S}),
        }
        dataset = QADataset([qa("q3"), qa("q1"), qa("q2"), qa("q4")])
        labels, exclusions = label_cost_dataset(
            MockOracleAnswerer(behaviors), setup, dataset
        )
        assert [e.query_id for e in labels] == ["q1", "q3", "q4"]
        assert [e.label for e in labels] == [N, M, S]
        assert all(e.source == "cost" for e in labels)
        assert exclusions == [Exclusion(query_id="q2", reason=REASON_NO_CORRECT_STRATEGY)]

    def test_four_class_converts_exclusions(self, setup):
        behaviors = {"q1": behavior("q1", correct=set())}
        dataset = QADataset([qa("q1")])
        labels, exclusions = label_cost_dataset(
            MockOracleAnswerer(behaviors), setup, dataset, four_class=True
        )
        assert exclusions == []
        assert labels == [LabeledExample(query_id="q1", label=U, source="cost")]

    def test_transport_error_becomes_exclusion(self, setup):
        class Flaky:
            def reply(self, request: AnswerRequest):
                if request.query_id == "q2":
                    raise TransportError("endpoint unreachable")
                return MockOracleAnswerer({"q1": behavior("q1", correct={N})}).reply(request)

        dataset = QADataset([qa("q1"), qa("q2")])
        labels, exclusions = label_cost_dataset(Flaky(), setup, dataset)
        assert [e.query_id for e in labels] == ["q1"]
        assert len(exclusions) == 1
        assert exclusions[0].query_id == "q2"
        assert exclusions[0].reason == "transport error: endpoint unreachable"


class TestLabelReliability:
    def test_origin_map(self):
        assert label_reliability(qa("q1", origin="single_hop")) is S
        assert label_reliability(qa("q2", origin="multi_hop")) is M

    def test_unknown_origin_rejected(self):
        broken = QAExample(
            id="q1", question="x", gold_answers=("y",), origin="zero_hop", dataset="t"
        )
        with pytest.raises(DataError, match="q1: unknown origin 'zero_hop'"):
            label_reliability(broken)

    def test_dataset_sorted_and_order_invariant(self):
        examples = [qa("q2", origin="multi_hop"), qa("q1"), qa("q3", origin="multi_hop")]
        forward = label_reliability_dataset(QADataset(examples))
        backward = label_reliability_dataset(QADataset(list(reversed(examples))))
        assert forward == backward
        assert [e.query_id for e in forward] == ["q1", "q2", "q3"]
        assert [e.label for e in forward] == [S, M, M]
        assert all(e.source == "reliability" for e in forward)


class TestLabelCombined:
    def test_cost_wins_overlap(self):
        cost = [LabeledExample("q1", N, "cost")]
        reliability = [
            LabeledExample("q1", S, "reliability"),
            LabeledExample("q2", M, "reliability"),
        ]
        merged = label_combined(cost, reliability)
        assert merged == [
            LabeledExample("q1", N, "combined"),
            LabeledExample("q2", M, "combined"),
        ]

    def test_union_sorted(self):
        cost = [LabeledExample("q3", S, "cost")]
        reliability = [LabeledExample("q1", M, "reliability")]
        merged = label_combined(cost, reliability)
        assert [e.query_id for e in merged] == ["q1", "q3"]


class TestLabelsIO:
    def test_roundtrip(self, tmp_path):
        labels = [
            LabeledExample("q1", N, "cost"),
            LabeledExample("q2", M, "cost"),
            LabeledExample("q3", U, "cost"),
        ]
        path = tmp_path / "labels.jsonl"
        write_labels(labels, path)
        assert read_labels(path) == labels
        rows = [json.loads(line) for line in path.read_text(encoding="utf-8").splitlines()]
        assert rows[0] == {"query_id": "q1", "label": "no_retrieval", "source": "cost"}

    def test_read_rejects_bad_label(self, tmp_path):
        path = tmp_path / "labels.jsonl"
        path.write_text(
            '{"query_id": "q1", "label": "teleport", "source": "cost"}\n', encoding="utf-8"
        )
        with pytest.raises(DataError, match="line 1: malformed label"):
            read_labels(path)

    def test_write_exclusions(self, tmp_path):
        path = tmp_path / "excl.jsonl"
        write_exclusions([Exclusion("q1", "transport error: down")], path)
        row = json.loads(path.read_text(encoding="utf-8"))
        assert row == {"query_id": "q1", "reason": "transport error: down"}
