"""Document corpus and QA dataset ingestion.

JSONL in, JSONL out. Ingestion is strict: a malformed line, duplicate id,
unknown key, or invalid field aborts with an error naming the offending
line or id. Nothing is skipped silently. Export writes the normalized form
(fixed key order, compact separators, one object per line), and ingesting
an exported file and exporting again reproduces it byte for byte.
"""

from __future__ import annotations

import json
from dataclasses import dataclass
from pathlib import Path
from typing import Iterable, Iterator

from .errors import DataError

ORIGINS = ("single_hop", "multi_hop")

_CORPUS_KEYS = ("id", "title", "text")
_QA_KEYS = ("id", "question", "answers", "origin", "dataset")


@dataclass(frozen=True)
class Document:
    id: str
    title: str
    text: str


@dataclass(frozen=True)
class QAExample:
    id: str
    question: str
    gold_answers: tuple[str, ...]
    origin: str
    dataset: str


class Corpus:
    """Id-addressable document collection, insertion order preserved."""

    def __init__(self, documents: Iterable[Document]):
        self._docs: list[Document] = []
        self._by_id: dict[str, Document] = {}
        for doc in documents:
            if doc.id in self._by_id:
                raise DataError(f"duplicate id {doc.id}")
            self._by_id[doc.id] = doc
            self._docs.append(doc)

    def __len__(self) -> int:
        return len(self._docs)

    def __iter__(self) -> Iterator[Document]:
        return iter(self._docs)

    def get(self, doc_id: str) -> Document | None:
        """The ingested document, or None for an unknown id."""
        return self._by_id.get(doc_id)

    def export(self, path: str | Path) -> Path:
        path = Path(path)
        with path.open("w", encoding="utf-8") as fh:
            for doc in self._docs:
                record = {"id": doc.id, "title": doc.title, "text": doc.text}
                fh.write(json.dumps(record, ensure_ascii=False, separators=(",", ":")) + "\n")
        return path


class QADataset:
    """Question/answer examples keyed by id, insertion order preserved."""

    def __init__(self, examples: Iterable[QAExample]):
        self._examples: list[QAExample] = []
        self._by_id: dict[str, QAExample] = {}
        for example in examples:
            if example.id in self._by_id:
                raise DataError(f"duplicate id {example.id}")
            self._by_id[example.id] = example
            self._examples.append(example)

    def __len__(self) -> int:
        return len(self._examples)

    def __iter__(self) -> Iterator[QAExample]:
        return iter(self._examples)

    def get(self, query_id: str) -> QAExample | None:
        return self._by_id.get(query_id)

    def export(self, path: str | Path) -> Path:
        path = Path(path)
        with path.open("w", encoding="utf-8") as fh:
            for ex in self._examples:
                record = {
                    "id": ex.id,
                    "question": ex.question,
                    "answers": list(ex.gold_answers),
                    "origin": ex.origin,
                    "dataset": ex.dataset,
                }
                fh.write(json.dumps(record, ensure_ascii=False, separators=(",", ":")) + "\n")
        return path


def _read_records(path: Path, expected_keys: tuple[str, ...]) -> Iterator[tuple[int, dict]]:
    with path.open("r", encoding="utf-8") as fh:
        for lineno, line in enumerate(fh, start=1):
            if not line.strip():
                raise DataError(f"{path.name}: blank line at line {lineno}")
            try:
                record = json.loads(line)
            except json.JSONDecodeError as exc:
                raise DataError(f"{path.name}: invalid JSON at line {lineno}: {exc}") from exc
            if not isinstance(record, dict):
                raise DataError(f"{path.name}: line {lineno} is not an object")
            missing = [key for key in expected_keys if key not in record]
            extra = [key for key in record if key not in expected_keys]
            if missing:
                raise DataError(f"{path.name}: line {lineno}: missing keys {', '.join(missing)}")
            if extra:
                raise DataError(f"{path.name}: line {lineno}: unknown keys {', '.join(extra)}")
            yield lineno, record


def ingest_corpus(path: str | Path) -> Corpus:
    """Load a corpus JSONL file ({"id","title","text"} per line), strictly."""
    path = Path(path)
    docs: list[Document] = []
    seen: dict[str, int] = {}
    for lineno, record in _read_records(path, _CORPUS_KEYS):
        doc_id, title, text = record["id"], record["title"], record["text"]
        for name, value in (("id", doc_id), ("title", title), ("text", text)):
            if not isinstance(value, str):
                raise DataError(f"{path.name}: line {lineno}: {name} must be a string")
        if not doc_id:
            raise DataError(f"{path.name}: line {lineno}: empty id")
        if not text:
            raise DataError(f"{doc_id}: empty text at line {lineno}")
        if doc_id in seen:
            raise DataError(f"duplicate id {doc_id} at line {lineno}")
        seen[doc_id] = lineno
        docs.append(Document(id=doc_id, title=title, text=text))
    return Corpus(docs)


def ingest_qa(path: str | Path) -> QADataset:
    """Load a QA JSONL file ({"id","question","answers","origin","dataset"}), strictly."""
    path = Path(path)
    examples: list[QAExample] = []
    seen: dict[str, int] = {}
    for lineno, record in _read_records(path, _QA_KEYS):
        qid = record["id"]
        if not isinstance(qid, str) or not qid:
            raise DataError(f"{path.name}: line {lineno}: id must be a non-empty string")
        if qid in seen:
            raise DataError(f"duplicate id {qid} at line {lineno}")
        seen[qid] = lineno
        question = record["question"]
        if not isinstance(question, str) or not question:
            raise DataError(f"{qid}: empty question")
        answers = record["answers"]
        if not isinstance(answers, list) or not answers:
            raise DataError(f"{qid}: empty answers")
        if not all(isinstance(a, str) for a in answers):
            raise DataError(f"{qid}: answers must be strings")
        origin = record["origin"]
        if origin not in ORIGINS:
            raise DataError(f"{qid}: unknown origin {origin!r}")
        dataset = record["dataset"]
        if not isinstance(dataset, str) or not dataset:
            raise DataError(f"{qid}: empty dataset tag")
        examples.append(
            QAExample(
                id=qid,
                question=question,
                gold_answers=tuple(answers),
                origin=origin,
                dataset=dataset,
            )
        )
    return QADataset(examples)
