import json

import pytest

from flare_rag.corpus import (
    Corpus,
    Document,
    QADataset,
    QAExample,
    ingest_corpus,
    ingest_qa,
)
from flare_rag.errors import DataError


def write_lines(path, lines):
    path.write_text("".join(line + "\n" for line in lines), encoding="utf-8")


class TestCorpusIngest:
    def test_roundtrip_is_byte_stable(self, tmp_path):
        src = tmp_path / "docs.jsonl"
        # Messy but valid input: key order scrambled, extra whitespace in the JSON.
        write_lines(
            src,
            [
                '{"text": "The cat sat.",  "id": "d1", "title": "Cats"}',
                '{"id":"d2","title":"Dogs","text":"The dog sat."}',
            ],
        )
        corpus = ingest_corpus(src)
        out1 = tmp_path / "norm1.jsonl"
        out2 = tmp_path / "norm2.jsonl"
        corpus.export(out1)
        reloaded = ingest_corpus(out1)
        reloaded.export(out2)
        assert out1.read_bytes() == out2.read_bytes()
        first = json.loads(out1.read_text(encoding="utf-8").splitlines()[0])
        assert list(first) == ["id", "title", "text"]

    def test_duplicate_id_reports_line(self, tmp_path):
        src = tmp_path / "docs.jsonl"
        write_lines(
            src,
            [
                '{"id": "d1", "title": "a", "text": "one"}',
                '{"id": "d2", "title": "b", "text": "two"}',
                '{"id": "d3", "title": "c", "text": "three"}',
                '{"id": "d1", "title": "d", "text": "again"}',
            ],
        )
        with pytest.raises(DataError, match="duplicate id d1 at line 4"):
            ingest_corpus(src)

    def test_blank_line_rejected(self, tmp_path):
        src = tmp_path / "docs.jsonl"
        src.write_text(
            '{"id": "d1", "title": "a", "text": "one"}\n\n', encoding="utf-8"
        )
        with pytest.raises(DataError, match="line 2"):
            ingest_corpus(src)

    def test_invalid_json_names_line(self, tmp_path):
        src = tmp_path / "docs.jsonl"
        write_lines(src, ['{"id": "d1", "title": "a", "text": "one"}', "{nope"])
        with pytest.raises(DataError, match="line 2"):
            ingest_corpus(src)

    def test_missing_and_unknown_keys_rejected(self, tmp_path):
        src = tmp_path / "docs.jsonl"
        write_lines(src, ['{"id": "d1", "title": "a"}'])
        with pytest.raises(DataError):
            ingest_corpus(src)
        write_lines(
            src, ['{"id": "d1", "title": "a", "text": "one", "extra": 1}']
        )
        with pytest.raises(DataError):
            ingest_corpus(src)

    def test_empty_text_rejected(self, tmp_path):
        src = tmp_path / "docs.jsonl"
        write_lines(src, ['{"id": "d1", "title": "a", "text": ""}'])
        with pytest.raises(DataError, match="d1: empty text at line 1"):
            ingest_corpus(src)

    def test_lookup(self, tmp_path):
        src = tmp_path / "docs.jsonl"
        write_lines(src, ['{"id": "d1", "title": "a", "text": "one"}'])
        corpus = ingest_corpus(src)
        assert len(corpus) == 1
        assert corpus.get("d1") == Document(id="d1", title="a", text="one")
        assert corpus.get("missing") is None
        assert [doc.id for doc in corpus] == ["d1"]


class TestQAIngest:
    def test_roundtrip(self, tmp_path):
        src = tmp_path / "qa.jsonl"
        write_lines(
            src,
            [
                '{"id": "q1", "question": "Who?", "answers": ["x"],'
                ' "origin": "single_hop", "dataset": "toy"}',
            ],
        )
        qa = ingest_qa(src)
        example = qa.get("q1")
        assert example == QAExample(
            id="q1",
            question="Who?",
            gold_answers=("x",),
            origin="single_hop",
            dataset="toy",
        )
        out = tmp_path / "norm.jsonl"
        qa.export(out)
        row = json.loads(out.read_text(encoding="utf-8"))
        assert list(row) == ["id", "question", "answers", "origin", "dataset"]

    def test_empty_answers_rejected(self, tmp_path):
        src = tmp_path / "qa.jsonl"
        write_lines(
            src,
            [
                '{"id": "q1", "question": "Who?", "answers": [],'
                ' "origin": "single_hop", "dataset": "toy"}',
            ],
        )
        with pytest.raises(DataError, match="q1: empty answers"):
            ingest_qa(src)

    def test_unknown_origin_rejected(self, tmp_path):
        src = tmp_path / "qa.jsonl"
        write_lines(
            src,
            [
                '{"id": "q1", "question": "Who?", "answers": ["x"],'
                ' "origin": "zero_hop", "dataset": "toy"}',
            ],
        )
        with pytest.raises(DataError, match="q1: unknown origin 'zero_hop'"):
            ingest_qa(src)

    def test_empty_question_rejected(self, tmp_path):
        src = tmp_path / "qa.jsonl"
        write_lines(
            src,
            [
                '{"id": "q1", "question": "", "answers": ["x"],'
                ' "origin": "single_hop", "dataset": "toy"}',
            ],
        )
        with pytest.raises(DataError, match="q1: empty question"):
            ingest_qa(src)

    def test_duplicate_query_id(self, tmp_path):
        src = tmp_path / "qa.jsonl"
        row = (
            '{"id": "q1", "question": "Who?", "answers": ["x"],'
            ' "origin": "single_hop", "dataset": "toy"}'
        )
        write_lines(src, [row, row])
        with pytest.raises(DataError, match="duplicate id q1 at line 2"):
            ingest_qa(src)

    def test_in_memory_duplicates_rejected(self):
        example = QAExample(
            id="q1",
            question="Who?",
            gold_answers=("x",),
            origin="single_hop",
            dataset="toy",
        )
        with pytest.raises(DataError, match="duplicate id q1"):
            QADataset([example, example])
        doc = Document(id="d1", title="t", text="one")
        with pytest.raises(DataError, match="duplicate id d1"):
            Corpus([doc, doc])
