"""BM25 retrieval over an inverted index, built from scratch.

Okapi BM25 with k1=1.2, b=0.75 and idf(t) = ln(1 + (N - df + 0.5) / (df + 0.5)),
which is strictly positive for every indexed term. Documents with zero score
(no query-term overlap) are omitted from results. The tokenizer here is the
single shared one: the hashed-feature classifier reuses it.
"""

from __future__ import annotations

import json
import math
import re
from collections import Counter
from dataclasses import dataclass
from pathlib import Path

from .corpus import Corpus
from .errors import DataError

K1 = 1.2
B = 0.75
DEFAULT_K = 10  # passages returned per retrieval call

INDEX_FORMAT = "flare-rag-bm25"
INDEX_VERSION = 1
TOKENIZER_TAG = "lower-alnum-v1"

_TOKEN_RE = re.compile(r"[^\W_]+", re.UNICODE)


def tokenize(text: str) -> list[str]:
    """Lowercase and split on runs of non-alphanumeric characters.

    No stemming, no stopwords: "GPT-4o" -> ["gpt", "4o"].
    """
    return _TOKEN_RE.findall(text.lower())


@dataclass(frozen=True)
class SearchHit:
    doc_id: str
    score: float


class InvertedIndex:
    """Postings (term -> [(doc ordinal, tf)]) plus the stats BM25 needs."""

    def __init__(
        self,
        doc_ids: list[str],
        doc_lengths: list[int],
        postings: dict[str, list[tuple[int, int]]],
        tokenizer_tag: str = TOKENIZER_TAG,
        k1: float = K1,
        b: float = B,
    ):
        self.doc_ids = doc_ids
        self.doc_lengths = doc_lengths
        self.postings = postings
        self.tokenizer_tag = tokenizer_tag
        self.k1 = k1
        self.b = b
        self._texts: dict[str, str] = {}
        self._validate()

    def _validate(self) -> None:
        if self.tokenizer_tag != TOKENIZER_TAG:
            raise DataError(f"unknown tokenizer tag {self.tokenizer_tag!r}")
        if len(self.doc_ids) != len(self.doc_lengths):
            raise DataError("doc_ids and doc_lengths disagree")
        if not self.doc_ids:
            raise DataError("empty corpus: nothing to index")
        n = len(self.doc_ids)
        for term, posting in self.postings.items():
            for ordinal, tf in posting:
                if not 0 <= ordinal < n:
                    raise DataError(f"posting for {term!r} references invalid doc ordinal {ordinal}")
                if tf < 1:
                    raise DataError(f"posting for {term!r} has non-positive tf")

    @property
    def n_docs(self) -> int:
        return len(self.doc_ids)

    @property
    def avgdl(self) -> float:
        return sum(self.doc_lengths) / len(self.doc_lengths)

    @classmethod
    def build(cls, corpus: Corpus) -> "InvertedIndex":
        if len(corpus) == 0:
            raise DataError("empty corpus: nothing to index")
        doc_ids: list[str] = []
        doc_lengths: list[int] = []
        postings: dict[str, list[tuple[int, int]]] = {}
        for ordinal, doc in enumerate(corpus):
            tokens = tokenize(doc.text)
            doc_ids.append(doc.id)
            doc_lengths.append(len(tokens))
            for term, tf in Counter(tokens).items():
                postings.setdefault(term, []).append((ordinal, tf))
        index = cls(doc_ids, doc_lengths, postings)
        index._texts = {doc.id: doc.text for doc in corpus}
        return index

    def attach_texts(self, corpus: Corpus) -> None:
        """Make document texts available to callers that need passages.

        A reloaded index carries no texts; attach the corpus it was built
        from before running an answerer that reads passages. Every indexed
        doc id must be present, otherwise hits would surface without text.
        """
        texts = {doc.id: doc.text for doc in corpus}
        missing = [doc_id for doc_id in self.doc_ids if doc_id not in texts]
        if missing:
            raise DataError(f"corpus does not cover indexed ids: missing {missing[0]}")
        self._texts = texts

    def text_for(self, doc_id: str) -> str | None:
        return self._texts.get(doc_id)

    def idf(self, term: str) -> float:
        df = len(self.postings.get(term, ()))
        if df == 0:
            return 0.0
        return math.log(1.0 + (self.n_docs - df + 0.5) / (df + 0.5))

    def search(self, query: str, k: int = DEFAULT_K) -> list[SearchHit]:
        """Top-k documents by BM25 score, ties broken by ascending doc id.

        Query terms count with multiplicity. k=0 is allowed and returns [].
        """
        if k < 0:
            raise ValueError("k must be >= 0")
        scores: dict[int, float] = {}
        avgdl = self.avgdl
        for term in tokenize(query):
            posting = self.postings.get(term)
            if not posting:
                continue
            idf = self.idf(term)
            for ordinal, tf in posting:
                norm = tf + self.k1 * (1.0 - self.b + self.b * self.doc_lengths[ordinal] / avgdl)
                scores[ordinal] = scores.get(ordinal, 0.0) + idf * tf * (self.k1 + 1.0) / norm
        hits = [
            SearchHit(doc_id=self.doc_ids[ordinal], score=score)
            for ordinal, score in scores.items()
            if score > 0.0
        ]
        hits.sort(key=lambda h: (-h.score, h.doc_id))
        return hits[:k]

    def save(self, path: str | Path) -> Path:
        path = Path(path)
        payload = {
            "format": INDEX_FORMAT,
            "version": INDEX_VERSION,
            "tokenizer": self.tokenizer_tag,
            "k1": self.k1,
            "b": self.b,
            "doc_ids": self.doc_ids,
            "doc_lengths": self.doc_lengths,
            "postings": {term: [[o, tf] for o, tf in posting] for term, posting in self.postings.items()},
        }
        path.write_text(json.dumps(payload, ensure_ascii=False, separators=(",", ":")) + "\n", encoding="utf-8")
        return path

    @classmethod
    def load(cls, path: str | Path) -> "InvertedIndex":
        path = Path(path)
        try:
            payload = json.loads(path.read_text(encoding="utf-8"))
        except (OSError, json.JSONDecodeError) as exc:
            raise DataError(f"unreadable index file {path}: {exc}") from exc
        if not isinstance(payload, dict) or payload.get("format") != INDEX_FORMAT:
            raise DataError(f"{path}: not a {INDEX_FORMAT} index file")
        if payload.get("version") != INDEX_VERSION:
            raise DataError(f"{path}: unsupported index version {payload.get('version')!r}")
        try:
            return cls(
                doc_ids=list(payload["doc_ids"]),
                doc_lengths=[int(n) for n in payload["doc_lengths"]],
                postings={
                    term: [(int(o), int(tf)) for o, tf in posting]
                    for term, posting in payload["postings"].items()
                },
                tokenizer_tag=payload["tokenizer"],
                k1=float(payload["k1"]),
                b=float(payload["b"]),
            )
        except (KeyError, TypeError, ValueError) as exc:
            raise DataError(f"{path}: malformed index payload: {exc}") from exc


def build_index(corpus: Corpus) -> InvertedIndex:
    return InvertedIndex.build(corpus)
