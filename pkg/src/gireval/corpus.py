"""Corpus ingestion: queries, qrels, responses, passages, and embeddings.

All loaded sets are immutable after construction and safe to share across
threads. File formats:

* queries: UTF-8 TSV, one ``query_id<TAB>text`` per line
* qrels: whitespace-separated TREC format ``query_id iteration doc_id grade``
  (the iteration column is accepted and ignored)
* responses / passages / embeddings: UTF-8 JSON Lines, one object per line
"""

from __future__ import annotations

import json
from dataclasses import dataclass, replace
from pathlib import Path
from typing import Iterable, Iterator, Mapping

import numpy as np

DEFAULT_MAX_GRADE = 3

RESPONSE_MODES = ("normal", "liar")


class CorpusError(ValueError):
    """Raised for malformed input files or invariant violations."""


@dataclass(frozen=True)
class Query:
    query_id: str
    text: str


@dataclass(frozen=True)
class Qrel:
    query_id: str
    doc_id: str
    grade: int
    passage_text: str | None = None


@dataclass(frozen=True)
class Response:
    system_id: str
    query_id: str
    text: str
    mode: str = "normal"


class QuerySet:
    """Immutable set of queries indexed by query_id."""

    def __init__(self, queries: Iterable[Query]):
        self._by_id: dict[str, Query] = {}
        for q in queries:
            if not q.text:
                raise CorpusError(f"query {q.query_id!r} has empty text")
            if q.query_id in self._by_id:
                raise CorpusError(f"duplicate query_id {q.query_id!r}")
            self._by_id[q.query_id] = q

    def __len__(self) -> int:
        return len(self._by_id)

    def __iter__(self) -> Iterator[Query]:
        return iter(self._by_id.values())

    def __contains__(self, query_id: str) -> bool:
        return query_id in self._by_id

    def ids(self) -> list[str]:
        return sorted(self._by_id)

    def get(self, query_id: str) -> Query:
        try:
            return self._by_id[query_id]
        except KeyError:
            raise CorpusError(f"unknown query_id {query_id!r}") from None

    def save(self, path: str | Path) -> None:
        with open(path, "w", encoding="utf-8") as fh:
            for qid in sorted(self._by_id):
                fh.write(f"{qid}\t{self._by_id[qid].text}\n")


class QrelSet:
    """Immutable set of qrels with uniqueness on (query_id, doc_id)."""

    def __init__(self, qrels: Iterable[Qrel], max_grade: int = DEFAULT_MAX_GRADE):
        self.max_grade = max_grade
        self._by_key: dict[tuple[str, str], Qrel] = {}
        self._by_query: dict[str, list[Qrel]] = {}
        for qrel in qrels:
            if not 0 <= qrel.grade <= max_grade:
                raise CorpusError(
                    f"grade {qrel.grade} out of range [0, {max_grade}] "
                    f"for ({qrel.query_id}, {qrel.doc_id})"
                )
            key = (qrel.query_id, qrel.doc_id)
            if key in self._by_key:
                raise CorpusError(f"duplicate qrel for {key}")
            self._by_key[key] = qrel
            self._by_query.setdefault(qrel.query_id, []).append(qrel)

    def __len__(self) -> int:
        return len(self._by_key)

    def __iter__(self) -> Iterator[Qrel]:
        return iter(self._by_key.values())

    def query_ids(self) -> list[str]:
        return sorted(self._by_query)

    def for_query(self, query_id: str) -> list[Qrel]:
        return list(self._by_query.get(query_id, []))

    def get(self, query_id: str, doc_id: str) -> Qrel:
        try:
            return self._by_key[(query_id, doc_id)]
        except KeyError:
            raise CorpusError(f"unknown qrel ({query_id!r}, {doc_id!r})") from None

    def with_passages(self, passages: Mapping[str, str]) -> "QrelSet":
        """Return a copy with passage_text resolved from an id -> text lookup."""
        return QrelSet(
            (replace(q, passage_text=passages.get(q.doc_id, q.passage_text)) for q in self),
            max_grade=self.max_grade,
        )

    def save(self, path: str | Path) -> None:
        """Write TREC qrels format; passage texts are not part of the format."""
        with open(path, "w", encoding="utf-8") as fh:
            for key in sorted(self._by_key):
                qrel = self._by_key[key]
                fh.write(f"{qrel.query_id} 0 {qrel.doc_id} {qrel.grade}\n")


class ResponseSet:
    """Immutable set of generated responses, unique per (system_id, query_id)."""

    def __init__(self, responses: Iterable[Response]):
        self._by_key: dict[tuple[str, str], Response] = {}
        for resp in responses:
            if resp.mode not in RESPONSE_MODES:
                raise CorpusError(
                    f"mode {resp.mode!r} for ({resp.system_id}, {resp.query_id}) "
                    f"not one of {RESPONSE_MODES}"
                )
            key = (resp.system_id, resp.query_id)
            if key in self._by_key:
                raise CorpusError(f"duplicate response for {key}")
            self._by_key[key] = resp

    def __len__(self) -> int:
        return len(self._by_key)

    def __iter__(self) -> Iterator[Response]:
        return iter(self._by_key.values())

    def system_ids(self) -> list[str]:
        return sorted({r.system_id for r in self})

    def for_system(self, system_id: str) -> list[Response]:
        return sorted(
            (r for r in self if r.system_id == system_id), key=lambda r: r.query_id
        )

    def get(self, system_id: str, query_id: str) -> Response:
        try:
            return self._by_key[(system_id, query_id)]
        except KeyError:
            raise CorpusError(f"unknown response ({system_id!r}, {query_id!r})") from None

    def save(self, path: str | Path) -> None:
        with open(path, "w", encoding="utf-8") as fh:
            for key in sorted(self._by_key):
                resp = self._by_key[key]
                record = {
                    "system_id": resp.system_id,
                    "query_id": resp.query_id,
                    "text": resp.text,
                    "mode": resp.mode,
                }
                fh.write(json.dumps(record, ensure_ascii=False) + "\n")


class EmbeddingStore:
    """Precomputed vectors keyed by item id (doc_id or response key).

    All vectors share one dimension; zero vectors are rejected because
    cosine similarity is undefined for them.
    """

    def __init__(self, vectors: Mapping[str, np.ndarray] | Iterable[tuple[str, np.ndarray]]):
        items = vectors.items() if isinstance(vectors, Mapping) else vectors
        self._vectors: dict[str, np.ndarray] = {}
        self.dim = 0
        for item_id, vec in items:
            arr = np.asarray(vec, dtype=np.float64)
            if arr.ndim != 1 or arr.size == 0:
                raise CorpusError(f"embedding for {item_id!r} is not a 1-d vector")
            if self.dim == 0:
                self.dim = arr.size
            elif arr.size != self.dim:
                raise CorpusError(
                    f"dimension mismatch for {item_id!r}: got {arr.size}, expected {self.dim}"
                )
            if not np.any(arr):
                raise CorpusError(f"all-zero embedding for {item_id!r}")
            if item_id in self._vectors:
                raise CorpusError(f"duplicate embedding id {item_id!r}")
            arr.setflags(write=False)
            self._vectors[item_id] = arr

    def __len__(self) -> int:
        return len(self._vectors)

    def __contains__(self, item_id: str) -> bool:
        return item_id in self._vectors

    def ids(self) -> list[str]:
        return sorted(self._vectors)

    def get(self, item_id: str) -> np.ndarray:
        try:
            return self._vectors[item_id]
        except KeyError:
            raise CorpusError(f"unknown embedding id {item_id!r}") from None

    def save(self, path: str | Path) -> None:
        with open(path, "w", encoding="utf-8") as fh:
            for item_id in sorted(self._vectors):
                record = {"id": item_id, "vector": self._vectors[item_id].tolist()}
                fh.write(json.dumps(record) + "\n")


@dataclass(frozen=True)
class QueryCategories:
    """One query's qrels split into Best / Acceptable / Unacceptable tiers."""

    query_id: str
    best: tuple[Qrel, ...]
    acceptable: tuple[Qrel, ...]
    unacceptable: tuple[Qrel, ...]

    @property
    def size(self) -> int:
        return len(self.best) + len(self.acceptable) + len(self.unacceptable)

    def tier(self, name: str) -> tuple[Qrel, ...]:
        return {"best": self.best, "acceptable": self.acceptable, "unacceptable": self.unacceptable}[name]


class CategoryPartition:
    """Per-query partition of qrels into relevance tiers.

    Best holds the qrels at the query's maximum observed grade (which must be
    at least 1), Acceptable the relevant qrels below that grade, and
    Unacceptable the grade-0 qrels.
    """

    def __init__(self, categories: Iterable[QueryCategories]):
        self._by_query: dict[str, QueryCategories] = {}
        for cats in categories:
            if cats.query_id in self._by_query:
                raise CorpusError(f"duplicate partition entry for query {cats.query_id!r}")
            self._validate(cats)
            self._by_query[cats.query_id] = cats

    @staticmethod
    def _validate(cats: QueryCategories) -> None:
        if not cats.best:
            raise CorpusError(f"query {cats.query_id!r} has an empty best tier")
        docs = [q.doc_id for q in cats.best + cats.acceptable + cats.unacceptable]
        if len(docs) != len(set(docs)):
            raise CorpusError(f"query {cats.query_id!r} has overlapping tiers")
        top = cats.best[0].grade
        if top < 1 or any(q.grade != top for q in cats.best):
            raise CorpusError(f"query {cats.query_id!r}: best tier grades inconsistent")
        if any(not 0 < q.grade < top for q in cats.acceptable):
            raise CorpusError(f"query {cats.query_id!r}: acceptable tier grades out of band")
        if any(q.grade != 0 for q in cats.unacceptable):
            raise CorpusError(f"query {cats.query_id!r}: unacceptable tier must be grade 0")

    def __len__(self) -> int:
        return len(self._by_query)

    def __iter__(self) -> Iterator[QueryCategories]:
        for qid in sorted(self._by_query):
            yield self._by_query[qid]

    def query_ids(self) -> list[str]:
        return sorted(self._by_query)

    def get(self, query_id: str) -> QueryCategories:
        try:
            return self._by_query[query_id]
        except KeyError:
            raise CorpusError(f"query {query_id!r} not in partition") from None

    def to_dict(self) -> dict:
        return {
            cats.query_id: {
                "best": sorted(q.doc_id for q in cats.best),
                "acceptable": sorted(q.doc_id for q in cats.acceptable),
                "unacceptable": sorted(q.doc_id for q in cats.unacceptable),
            }
            for cats in self
        }


def _lines(path: str | Path) -> Iterator[tuple[int, str]]:
    with open(path, encoding="utf-8") as fh:
        for lineno, raw in enumerate(fh, start=1):
            line = raw.rstrip("\n").rstrip("\r")
            if line.strip():
                yield lineno, line


def load_queries(path: str | Path) -> QuerySet:
    """Load a TSV file of ``query_id<TAB>text`` lines."""
    queries = []
    seen: set[str] = set()
    for lineno, line in _lines(path):
        parts = line.split("\t", 1)
        if len(parts) != 2 or not parts[0].strip() or not parts[1].strip():
            raise CorpusError(f"{path}:{lineno}: malformed query line {line!r}")
        qid, text = parts[0].strip(), parts[1].strip()
        if qid in seen:
            raise CorpusError(f"{path}:{lineno}: duplicate query_id {qid!r}")
        seen.add(qid)
        queries.append(Query(qid, text))
    return QuerySet(queries)


def load_qrels(
    path: str | Path,
    max_grade: int = DEFAULT_MAX_GRADE,
    passages: Mapping[str, str] | None = None,
) -> QrelSet:
    """Load a TREC qrels file; grades outside [0, max_grade] are rejected.

    When a passages lookup is given, each qrel's passage_text is resolved
    from it by doc_id.
    """
    qrels = []
    seen: set[tuple[str, str]] = set()
    for lineno, line in _lines(path):
        parts = line.split()
        if len(parts) != 4:
            raise CorpusError(f"{path}:{lineno}: expected 4 fields, got {len(parts)}")
        qid, _iteration, doc_id, grade_str = parts
        try:
            grade = int(grade_str)
        except ValueError:
            raise CorpusError(f"{path}:{lineno}: non-integer grade {grade_str!r}") from None
        if not 0 <= grade <= max_grade:
            raise CorpusError(
                f"{path}:{lineno}: grade {grade} out of range [0, {max_grade}]"
            )
        key = (qid, doc_id)
        if key in seen:
            raise CorpusError(f"{path}:{lineno}: duplicate qrel {key}")
        seen.add(key)
        text = passages.get(doc_id) if passages else None
        qrels.append(Qrel(qid, doc_id, grade, passage_text=text))
    return QrelSet(qrels, max_grade=max_grade)


def load_responses(path: str | Path) -> ResponseSet:
    """Load a JSON Lines file of {system_id, query_id, text, mode?} records."""
    responses = []
    seen: set[tuple[str, str]] = set()
    for lineno, line in _lines(path):
        try:
            record = json.loads(line)
        except json.JSONDecodeError as exc:
            raise CorpusError(f"{path}:{lineno}: invalid JSON: {exc}") from None
        for field in ("system_id", "query_id", "text"):
            if field not in record:
                raise CorpusError(f"{path}:{lineno}: missing field {field!r}")
        key = (record["system_id"], record["query_id"])
        if key in seen:
            raise CorpusError(f"{path}:{lineno}: duplicate response for {key}")
        seen.add(key)
        responses.append(
            Response(
                system_id=record["system_id"],
                query_id=record["query_id"],
                text=record["text"],
                mode=record.get("mode", "normal"),
            )
        )
    return ResponseSet(responses)


def load_passages(path: str | Path) -> dict[str, str]:
    """Load a JSON Lines id -> text passage lookup ({id, text} records)."""
    passages: dict[str, str] = {}
    for lineno, line in _lines(path):
        try:
            record = json.loads(line)
        except json.JSONDecodeError as exc:
            raise CorpusError(f"{path}:{lineno}: invalid JSON: {exc}") from None
        if "id" not in record or "text" not in record:
            raise CorpusError(f"{path}:{lineno}: passage record needs 'id' and 'text'")
        if record["id"] in passages:
            raise CorpusError(f"{path}:{lineno}: duplicate passage id {record['id']!r}")
        passages[record["id"]] = record["text"]
    return passages


def load_embeddings(path: str | Path) -> EmbeddingStore:
    """Load a JSON Lines file of {id, vector} records into an EmbeddingStore."""
    pairs = []
    for lineno, line in _lines(path):
        try:
            record = json.loads(line)
        except json.JSONDecodeError as exc:
            raise CorpusError(f"{path}:{lineno}: invalid JSON: {exc}") from None
        if "id" not in record or "vector" not in record:
            raise CorpusError(f"{path}:{lineno}: embedding record needs 'id' and 'vector'")
        pairs.append((record["id"], np.asarray(record["vector"], dtype=np.float64)))
    return EmbeddingStore(pairs)


def partition_categories(
    qrels: QrelSet, *, drop_unpartitionable: bool = False
) -> CategoryPartition:
    """Split each query's qrels into Best / Acceptable / Unacceptable tiers.

    Best is the set of qrels at the query's maximum observed grade,
    Acceptable the qrels strictly between that grade and 0, and
    Unacceptable the grade-0 qrels. Queries whose maximum grade is 0 violate
    the precondition that every query has at least one relevant qrel; by
    default this aborts, with ``drop_unpartitionable=True`` they are dropped.
    """
    categories = []
    rejected = []
    for qid in qrels.query_ids():
        query_qrels = sorted(qrels.for_query(qid), key=lambda q: q.doc_id)
        top = max(q.grade for q in query_qrels)
        if top < 1:
            rejected.append(qid)
            continue
        categories.append(
            QueryCategories(
                query_id=qid,
                best=tuple(q for q in query_qrels if q.grade == top),
                acceptable=tuple(q for q in query_qrels if 0 < q.grade < top),
                unacceptable=tuple(q for q in query_qrels if q.grade == 0),
            )
        )
    if rejected and not drop_unpartitionable:
        raise CorpusError(
            "queries with no relevant qrel (grade >= 1): " + ", ".join(rejected)
        )
    return CategoryPartition(categories)
