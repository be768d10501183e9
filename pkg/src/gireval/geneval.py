"""Scoring generated responses with every assessment method.

Responses are generated one per query (normal mode, or liar mode which
asks for plausible-but-wrong answers and prefixes the system name with
"liar "). Pointwise methods score each response directly; preference
pits it against a seeded-random Best exemplar with ties counting as not
preferred; embedding takes mean cosine similarity against all Best
vectors. Per-system means carry percentile-bootstrap confidence
intervals resampled at query granularity.
"""

from __future__ import annotations

import csv
import io
import json
import math
import random
from dataclasses import dataclass
from typing import Iterable, Mapping, Sequence

import numpy as np

from .corpus import (
    DEFAULT_MAX_GRADE,
    CategoryPartition,
    CorpusError,
    Qrel,
    Query,
    QuerySet,
    Response,
    ResponseSet,
)
from .judge import Judge, JudgeTransportError, UnparsableReplyError, embed_text
from .methods import (
    SubtopicStore,
    assess_binary,
    assess_graded,
    assess_preference,
    assess_subtopics,
    cosine_similarity,
    generate_subtopics,
)

POINTWISE_METHODS = ("binary", "graded", "subtopic")
SCORING_METHODS = POINTWISE_METHODS + ("preference", "embedding")

LIAR_PREFIX = "liar "

_VALUE_RANGES = {
    "binary": (0.0, 1.0),
    "graded": (0.0, 1.0),
    "subtopic": (0.0, 1.0),
    "preference": (0.0, 1.0),
    "embedding": (-1.0, 1.0),
}


class GenevalError(ValueError):
    """Invalid input to response generation or scoring."""


@dataclass(frozen=True)
class PerQueryScore:
    """One system's score on one query under one method."""

    system_id: str
    query_id: str
    method_id: str
    value: float

    def __post_init__(self):
        if self.method_id not in _VALUE_RANGES:
            raise GenevalError(f"unknown method {self.method_id!r}")
        low, high = _VALUE_RANGES[self.method_id]
        if not (low <= self.value <= high) or math.isnan(self.value):
            raise GenevalError(
                f"{self.method_id} score {self.value} outside [{low}, {high}]"
            )
        if self.method_id == "binary" and self.value not in (0.0, 1.0):
            raise GenevalError("binary score must be 0 or 1")


@dataclass(frozen=True)
class ScoreSet:
    """All per-query scores for one (system, method), plus failed queries."""

    system_id: str
    method_id: str
    scores: tuple[PerQueryScore, ...]
    failed: tuple[str, ...] = ()

    def __post_init__(self):
        for score in self.scores:
            if score.system_id != self.system_id or score.method_id != self.method_id:
                raise GenevalError("score set mixes systems or methods")

    def values(self) -> list[float]:
        return [s.value for s in self.scores]

    def __len__(self) -> int:
        return len(self.scores)


@dataclass(frozen=True)
class BootstrapSummary:
    """Mean with a percentile-bootstrap confidence interval."""

    system_id: str
    method_id: str
    mean: float
    ci_low: float
    ci_high: float
    n_resamples: int
    level: float
    seed: int

    def __post_init__(self):
        if self.ci_low > self.ci_high:
            raise GenevalError("ci_low must not exceed ci_high")
        if not 0 < self.level < 1:
            raise GenevalError("level must be in (0, 1)")


@dataclass(frozen=True)
class GenerationResult:
    """Responses produced for a query set, with any skipped query ids."""

    responses: ResponseSet
    skipped: tuple[str, ...] = ()


def liar_system_id(model_id: str) -> str:
    return LIAR_PREFIX + model_id


def generate_responses(
    queries: QuerySet,
    judge: Judge,
    mode: str = "normal",
    out_path=None,
) -> GenerationResult:
    """Generate one response per query; liar mode prefixes the system name.

    Backend failures skip the affected query and are returned in
    ``skipped`` rather than aborting the run.
    """
    if mode not in ("normal", "liar"):
        raise GenevalError(f"mode must be 'normal' or 'liar', got {mode!r}")
    template_id = "generate_liar" if mode == "liar" else "generate_normal"
    system_id = liar_system_id(judge.model_id) if mode == "liar" else judge.model_id

    responses, skipped = [], []
    for query in queries:
        try:
            record = judge.judge(template_id, {"query": query.text})
        except (JudgeTransportError, UnparsableReplyError):
            skipped.append(query.query_id)
            continue
        responses.append(
            Response(
                system_id=system_id,
                query_id=query.query_id,
                text=record.parsed_outcome,
                mode=mode,
            )
        )
    result = GenerationResult(ResponseSet(responses), tuple(skipped))
    if out_path is not None:
        result.responses.save(out_path)
    return result


def grade_to_gain(grade: int, max_grade: int = DEFAULT_MAX_GRADE) -> float:
    """Exponential gain (2^g - 1) / (2^max - 1), normalized to [0, 1]."""
    if max_grade < 1:
        raise GenevalError("max_grade must be >= 1")
    if not 0 <= grade <= max_grade:
        raise GenevalError(f"grade {grade} outside [0, {max_grade}]")
    return (2**grade - 1) / (2**max_grade - 1)


def _systems(responses: ResponseSet) -> list[str]:
    return responses.system_ids()


def score_responses_pointwise(
    method_id: str,
    responses: ResponseSet,
    queries: QuerySet,
    judge: Judge,
    subtopic_store: SubtopicStore | None = None,
    max_grade: int = DEFAULT_MAX_GRADE,
) -> list[ScoreSet]:
    """Score every response with a pointwise method, one ScoreSet per system.

    binary maps to 1/0, graded to exponential gain, subtopic to the
    yes-fraction. Judge failures drop the query into ``failed``. The
    subtopic method requires a stored (or generatable) list per query.
    """
    if method_id not in POINTWISE_METHODS:
        raise GenevalError(f"{method_id!r} is not a pointwise method")
    score_sets = []
    for system_id in _systems(responses):
        scores, failed = [], []
        for response in responses.for_system(system_id):
            query = queries.get(response.query_id)
            try:
                if method_id == "binary":
                    verdict = assess_binary(query, response.text, judge)
                    value = 1.0 if verdict == "relevant" else 0.0
                elif method_id == "graded":
                    grade = assess_graded(query, response.text, judge, max_grade=max_grade)
                    value = grade_to_gain(grade, max_grade)
                else:
                    subtopics = generate_subtopics(query, judge, store=subtopic_store)
                    score = assess_subtopics(query, subtopics, response.text, judge)
                    if score.partial:
                        failed.append(query.query_id)
                        continue
                    value = score.value
            except (JudgeTransportError, UnparsableReplyError):
                failed.append(query.query_id)
                continue
            scores.append(
                PerQueryScore(
                    system_id=system_id,
                    query_id=query.query_id,
                    method_id=method_id,
                    value=value,
                )
            )
        score_sets.append(
            ScoreSet(
                system_id=system_id,
                method_id=method_id,
                scores=tuple(scores),
                failed=tuple(failed),
            )
        )
    return score_sets


def _passage(qrel: Qrel) -> str:
    if not qrel.passage_text:
        raise GenevalError(
            f"qrel ({qrel.query_id}, {qrel.doc_id}) has no passage text attached"
        )
    return qrel.passage_text


def pick_exemplars(
    partition: CategoryPartition, seed: int = 0
) -> dict[str, Qrel]:
    """Seeded uniform pick of one Best qrel per query, stable across systems."""
    rng = random.Random(seed)
    exemplars = {}
    for query_id in partition.query_ids():
        best = sorted(partition.get(query_id).best, key=lambda q: q.doc_id)
        exemplars[query_id] = rng.choice(best)
    return exemplars


def score_preference_vs_exemplar(
    responses: ResponseSet,
    queries: QuerySet,
    partition: CategoryPartition,
    judge: Judge,
    seed: int = 0,
    all_best: bool = False,
) -> list[ScoreSet]:
    """Score 1 iff the generated response beats the exemplar in both orders.

    The exemplar is one seeded-random Best qrel per query (identical
    across systems); ``all_best=True`` averages the win indicator over
    every Best qrel instead. Ties and losses both score 0. Both
    presentation orders are always judged, so position bias cancels.
    """
    exemplars = pick_exemplars(partition, seed=seed)
    score_sets = []
    for system_id in _systems(responses):
        scores, failed = [], []
        for response in responses.for_system(system_id):
            query = queries.get(response.query_id)
            if all_best:
                pool = sorted(
                    partition.get(query.query_id).best, key=lambda q: q.doc_id
                )
            else:
                pool = [exemplars[query.query_id]]
            wins, completed = 0, 0
            try:
                for exemplar in pool:
                    outcome = assess_preference(
                        query, response.text, _passage(exemplar), judge
                    )
                    completed += 1
                    if outcome.winner == "A":
                        wins += 1
            except (JudgeTransportError, UnparsableReplyError):
                failed.append(query.query_id)
                continue
            if all_best:
                value = wins / completed if completed else 0.0
            else:
                value = 1.0 if wins else 0.0
            scores.append(
                PerQueryScore(
                    system_id=system_id,
                    query_id=query.query_id,
                    method_id="preference",
                    value=value,
                )
            )
        score_sets.append(
            ScoreSet(
                system_id=system_id,
                method_id="preference",
                scores=tuple(scores),
                failed=tuple(failed),
            )
        )
    return score_sets


def response_embedding_key(system_id: str, query_id: str) -> str:
    """Store key convention for precomputed response embeddings."""
    return f"{system_id}::{query_id}"


def score_embedding_vs_best(
    responses: ResponseSet,
    partition: CategoryPartition,
    embedder,
    embed_by_id: bool | None = None,
) -> list[ScoreSet]:
    """Mean cosine similarity of each response against all Best vectors.

    With a store-backed embedder, qrels resolve by doc_id and responses
    by the ``system::query`` key convention; text-embedding backends get
    the raw texts instead.
    """
    by_id = embed_by_id if embed_by_id is not None else hasattr(embedder, "store")
    score_sets = []
    for system_id in _systems(responses):
        scores, failed = [], []
        for response in responses.for_system(system_id):
            best = sorted(
                partition.get(response.query_id).best, key=lambda q: q.doc_id
            )
            try:
                if by_id:
                    response_vec = embed_text(
                        embedder,
                        response_embedding_key(system_id, response.query_id),
                        is_id=True,
                    )
                    best_vecs = [embed_text(embedder, q.doc_id, is_id=True) for q in best]
                else:
                    response_vec = embed_text(embedder, response.text)
                    best_vecs = [embed_text(embedder, _passage(q)) for q in best]
                value = float(
                    np.mean([cosine_similarity(response_vec, v) for v in best_vecs])
                )
            except (CorpusError, JudgeTransportError):
                failed.append(response.query_id)
                continue
            scores.append(
                PerQueryScore(
                    system_id=system_id,
                    query_id=response.query_id,
                    method_id="embedding",
                    value=value,
                )
            )
        score_sets.append(
            ScoreSet(
                system_id=system_id,
                method_id="embedding",
                scores=tuple(scores),
                failed=tuple(failed),
            )
        )
    return score_sets


def bootstrap_summary(
    values: Sequence[float],
    system_id: str = "system",
    method_id: str = "binary",
    n_resamples: int = 1000,
    level: float = 0.95,
    seed: int = 0,
) -> BootstrapSummary:
    """Percentile bootstrap over query-level scores.

    Resamples of size len(values) are drawn with replacement; the CI
    endpoints are the nearest-rank percentiles of the resample means, so
    they are always actual resample means and never interpolations.
    """
    values = np.asarray(list(values), dtype=np.float64)
    if values.size == 0:
        raise GenevalError("cannot bootstrap an empty value set")
    if n_resamples < 1:
        raise GenevalError("n_resamples must be >= 1")
    rng = np.random.default_rng(seed)
    samples = rng.choice(values, size=(n_resamples, values.size), replace=True)
    means = samples.mean(axis=1)
    alpha = (1.0 - level) / 2.0
    ci_low, ci_high = np.percentile(
        means, [100 * alpha, 100 * (1 - alpha)], method="nearest"
    )
    return BootstrapSummary(
        system_id=system_id,
        method_id=method_id,
        mean=float(values.mean()),
        ci_low=float(ci_low),
        ci_high=float(ci_high),
        n_resamples=n_resamples,
        level=level,
        seed=seed,
    )


def build_report(
    score_sets: Iterable[ScoreSet],
    dataset_id: str = "unknown",
    n_resamples: int = 1000,
    level: float = 0.95,
    seed: int = 0,
) -> dict:
    """Bootstrap every score set into a JSON-ready report dictionary."""
    methods: dict[str, list[dict]] = {}
    for score_set in sorted(score_sets, key=lambda s: (s.method_id, s.system_id)):
        entry: dict[str, object] = {
            "system_id": score_set.system_id,
            "n_queries": len(score_set),
            "skipped": len(score_set.failed),
        }
        if len(score_set):
            summary = bootstrap_summary(
                score_set.values(),
                system_id=score_set.system_id,
                method_id=score_set.method_id,
                n_resamples=n_resamples,
                level=level,
                seed=seed,
            )
            entry.update(
                mean=summary.mean, ci_low=summary.ci_low, ci_high=summary.ci_high
            )
        else:
            entry.update(mean=None, ci_low=None, ci_high=None)
        methods.setdefault(score_set.method_id, []).append(entry)
    return {
        "dataset": dataset_id,
        "config": {"n_resamples": n_resamples, "level": level, "seed": seed},
        "methods": methods,
    }


def report_to_json(report: Mapping) -> str:
    return json.dumps(report, indent=2, sort_keys=True)


def report_to_csv(report: Mapping) -> str:
    """Flatten a report into CSV rows for plotting."""
    buffer = io.StringIO()
    writer = csv.writer(buffer, lineterminator="\n")
    writer.writerow(
        ["method", "system_id", "mean", "ci_low", "ci_high", "n_queries", "skipped"]
    )
    for method_id in sorted(report["methods"]):
        for entry in report["methods"][method_id]:
            writer.writerow(
                [
                    method_id,
                    entry["system_id"],
                    entry["mean"],
                    entry["ci_low"],
                    entry["ci_high"],
                    entry["n_queries"],
                    entry["skipped"],
                ]
            )
    return buffer.getvalue()
