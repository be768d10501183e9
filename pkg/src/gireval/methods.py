"""The five assessment methods, each expressed over the judge module.

Binary and graded relevance are single judge calls. Subtopic scoring asks
one yes/no question per subtopic plus one for the query itself and
normalizes by subtopic count + 1. Preference prompts twice with the
operands swapped and calls disagreement a tie. Embedding similarity is
plain cosine over backend vectors.
"""

from __future__ import annotations

import hashlib
import json
import threading
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass
from fractions import Fraction
from pathlib import Path
from typing import Iterable, Sequence

import numpy as np

from .corpus import DEFAULT_MAX_GRADE, CorpusError, Query
from .judge import Judge, JudgmentRecord, UnparsableReplyError

# Wording used to assess the query itself as one extra yes/no question
# alongside the generated subtopics.
QUERY_SUBTOPIC_TEMPLATE = "The query itself: {query}"


class MethodError(ValueError):
    """Invalid input to an assessment method."""


@dataclass(frozen=True)
class SubtopicList:
    """Ordered subtopic questions generated for one query by one model."""

    query_id: str
    subtopics: tuple[str, ...]
    model_id: str

    def __post_init__(self):
        object.__setattr__(self, "subtopics", tuple(self.subtopics))
        if len(self.subtopics) < 1:
            raise MethodError(f"query {self.query_id!r}: subtopic list is empty")
        if any(not s.strip() for s in self.subtopics):
            raise MethodError(f"query {self.query_id!r}: blank subtopic string")

    def __len__(self) -> int:
        return len(self.subtopics)


@dataclass(frozen=True)
class SubtopicScore:
    """Positive yes-count over |subtopics| + 1 questions.

    ``failures`` counts sub-questions whose reply stayed unparseable; any
    failure marks the score partial rather than silently shrinking the
    denominator.
    """

    positives: int
    denominator: int
    failures: int = 0

    def __post_init__(self):
        if self.denominator < 2:
            raise MethodError("denominator is |subtopics| + 1, so at least 2")
        if not 0 <= self.positives <= self.denominator:
            raise MethodError(f"positives {self.positives} outside [0, {self.denominator}]")
        if self.failures < 0 or self.positives + self.failures > self.denominator:
            raise MethodError("failures inconsistent with positives and denominator")

    @property
    def exact(self) -> Fraction:
        return Fraction(self.positives, self.denominator)

    @property
    def value(self) -> float:
        return self.positives / self.denominator

    @property
    def partial(self) -> bool:
        return self.failures > 0


_TRIALS = ("first", "second")


@dataclass(frozen=True)
class PreferenceOutcome:
    """Two order-swapped preference trials reduced to a winner or tie.

    trial_1 sees (A, B), trial_2 sees (B, A). A wins only by taking both
    orderings (first, then second); B symmetrically; anything else,
    including the identical-text short circuit with no trials, is a tie.
    """

    winner: str
    trial_1: str | None
    trial_2: str | None

    def __post_init__(self):
        if self.winner not in ("A", "B", "tie"):
            raise MethodError(f"winner must be A, B or tie, got {self.winner!r}")
        if (self.trial_1 is None) != (self.trial_2 is None):
            raise MethodError("trials must both be present or both absent")
        if self.trial_1 is None:
            if self.winner != "tie":
                raise MethodError("trial-less outcome must be a tie")
            return
        if self.trial_1 not in _TRIALS or self.trial_2 not in _TRIALS:
            raise MethodError("trials must be 'first' or 'second'")
        if self.winner != winner_from_trials(self.trial_1, self.trial_2):
            raise MethodError(
                f"winner {self.winner!r} inconsistent with trials "
                f"({self.trial_1}, {self.trial_2})"
            )


def winner_from_trials(trial_1: str, trial_2: str) -> str:
    """Combine two order-swapped trials: a side must win both orderings."""
    if trial_1 == "first" and trial_2 == "second":
        return "A"
    if trial_1 == "second" and trial_2 == "first":
        return "B"
    return "tie"


def _require_text(name: str, text: str) -> str:
    if not text or not text.strip():
        raise MethodError(f"{name} must be non-empty")
    return text


def assess_binary(query: Query, text: str, judge: Judge) -> str:
    """One binary relevance call: 'relevant' or 'not_relevant'."""
    _require_text("text", text)
    record = judge.judge("binary", {"query": query.text, "passage": text})
    return record.parsed_outcome


def assess_graded(
    query: Query, text: str, judge: Judge, max_grade: int = DEFAULT_MAX_GRADE
) -> int:
    """One graded relevance call: integer grade in [0, max_grade]."""
    _require_text("text", text)
    record = judge.judge(
        "graded",
        {"query": query.text, "passage": text, "max_grade": str(max_grade)},
    )
    return record.parsed_outcome


class SubtopicStore:
    """Subtopic lists persisted as JSON Lines, human-editable for curation.

    One record per (query_id, model_id): {"query_id", "model_id",
    "subtopics": [...]}. The last record for a key wins, so manual edits
    can either rewrite a line or append a correction.
    """

    def __init__(self, path: str | Path | None = None):
        self._path = Path(path) if path else None
        self._lock = threading.Lock()
        self._lists: dict[tuple[str, str], SubtopicList] = {}
        if self._path and self._path.exists():
            with open(self._path, encoding="utf-8") as fh:
                for lineno, line in enumerate(fh, start=1):
                    if not line.strip():
                        continue
                    try:
                        data = json.loads(line)
                        subtopics = SubtopicList(
                            query_id=data["query_id"],
                            subtopics=tuple(data["subtopics"]),
                            model_id=data["model_id"],
                        )
                    except (json.JSONDecodeError, KeyError, TypeError, MethodError) as exc:
                        raise CorpusError(f"{self._path}:{lineno}: bad subtopic record: {exc}")
                    self._lists[(subtopics.query_id, subtopics.model_id)] = subtopics

    def __len__(self) -> int:
        return len(self._lists)

    def get(self, query_id: str, model_id: str) -> SubtopicList | None:
        return self._lists.get((query_id, model_id))

    def put(self, subtopics: SubtopicList) -> None:
        with self._lock:
            self._lists[(subtopics.query_id, subtopics.model_id)] = subtopics
            if self._path:
                self._path.parent.mkdir(parents=True, exist_ok=True)
                with open(self._path, "a", encoding="utf-8") as fh:
                    fh.write(
                        json.dumps(
                            {
                                "query_id": subtopics.query_id,
                                "model_id": subtopics.model_id,
                                "subtopics": list(subtopics.subtopics),
                            },
                            ensure_ascii=False,
                        )
                        + "\n"
                    )

    def __iter__(self):
        return iter(self._lists.values())


def generate_subtopics(
    query: Query,
    judge: Judge,
    store: SubtopicStore | None = None,
    *,
    regenerate: bool = False,
) -> SubtopicList:
    """Generate (or fetch the stored) subtopic list for a query.

    Generation is one-shot per (query, model): once a list is stored,
    later calls return it unchanged so human curation is preserved.
    Pass ``regenerate=True`` to overwrite the stored list.
    """
    _require_text("query text", query.text)
    if store is not None and not regenerate:
        stored = store.get(query.query_id, judge.model_id)
        if stored is not None:
            return stored
    record = judge.judge("subtopic_gen", {"query": query.text})
    subtopics = SubtopicList(
        query_id=query.query_id,
        subtopics=tuple(record.parsed_outcome),
        model_id=judge.model_id,
    )
    if store is not None:
        store.put(subtopics)
    return subtopics


def assess_subtopics(
    query: Query,
    subtopics: SubtopicList,
    text: str,
    judge: Judge,
    max_workers: int = 1,
) -> SubtopicScore:
    """Score a text as yes-fraction over subtopics plus the query itself.

    Issues |subtopics| + 1 yes/no judge calls. Results combine in
    question order regardless of completion order, so concurrent
    execution (max_workers > 1) changes nothing observable.
    """
    _require_text("text", text)
    questions = list(subtopics.subtopics) + [
        QUERY_SUBTOPIC_TEMPLATE.format(query=query.text)
    ]

    def ask(question: str) -> str | None:
        # the query binding is not a template placeholder; it travels in the
        # record so audits can group one passage's sub-questions exactly
        try:
            record = judge.judge(
                "subtopic_assess",
                {"passage": text, "subtopic": question, "query": query.text},
            )
        except UnparsableReplyError:
            return None
        return record.parsed_outcome

    if max_workers > 1:
        with ThreadPoolExecutor(max_workers=max_workers) as pool:
            outcomes = list(pool.map(ask, questions))
    else:
        outcomes = [ask(q) for q in questions]

    positives = sum(1 for o in outcomes if o == "yes")
    failures = sum(1 for o in outcomes if o is None)
    return SubtopicScore(
        positives=positives, denominator=len(questions), failures=failures
    )


def assess_preference(
    query: Query, text_a: str, text_b: str, judge: Judge
) -> PreferenceOutcome:
    """Preference between two texts via two order-swapped trials.

    Identical texts (by digest) are a tie without judge calls. Otherwise
    exactly two calls run: (A, B) then (B, A); a side wins only by
    winning both orderings.
    """
    _require_text("text_a", text_a)
    _require_text("text_b", text_b)
    digest = lambda t: hashlib.sha256(t.encode("utf-8")).hexdigest()  # noqa: E731
    if digest(text_a) == digest(text_b):
        return PreferenceOutcome(winner="tie", trial_1=None, trial_2=None)

    trial_1 = judge.judge(
        "preference", {"query": query.text, "passage_a": text_a, "passage_b": text_b}
    ).parsed_outcome
    trial_2 = judge.judge(
        "preference", {"query": query.text, "passage_a": text_b, "passage_b": text_a}
    ).parsed_outcome
    return PreferenceOutcome(
        winner=winner_from_trials(trial_1, trial_2), trial_1=trial_1, trial_2=trial_2
    )


def cosine_similarity(u: np.ndarray, v: np.ndarray) -> float:
    """Cosine of the angle between two nonzero vectors, clipped to [-1, 1]."""
    u = np.asarray(u, dtype=np.float64)
    v = np.asarray(v, dtype=np.float64)
    if u.shape != v.shape or u.ndim != 1:
        raise MethodError(f"dimension mismatch: {u.shape} vs {v.shape}")
    norm_u = np.linalg.norm(u)
    norm_v = np.linalg.norm(v)
    if norm_u == 0 or norm_v == 0:
        raise MethodError("cosine similarity undefined for a zero vector")
    return float(np.clip(np.dot(u, v) / (norm_u * norm_v), -1.0, 1.0))
