"""Validation of judge methods against human category orderings.

Qrels partitioned into Best / Acceptable / Unacceptable give ground-truth
orderings: any document from a higher tier should beat any document from
a lower tier. Each method is scored by how often its labels agree with
that ordering over cross-category pairs: pointwise methods (binary,
graded, subtopic) judge every distinct qrel once and compare labels,
preference judges sampled pairs directly, and embedding compares cosine
similarity to a Best exemplar over all pairs.
"""

from __future__ import annotations

import dataclasses
import json
import random
from dataclasses import dataclass, field
from fractions import Fraction
from typing import Iterable, Iterator, Mapping

from .corpus import (
    DEFAULT_MAX_GRADE,
    CategoryPartition,
    CorpusError,
    Qrel,
    Query,
    QuerySet,
)
from .judge import Judge, JudgeTransportError, UnparsableReplyError, embed_text
from .methods import (
    SubtopicScore,
    SubtopicStore,
    assess_binary,
    assess_graded,
    assess_preference,
    assess_subtopics,
    cosine_similarity,
    generate_subtopics,
)

CATEGORY_PAIRS = ("Best/Acc", "Best/Unacc", "Acc/Unacc")
POINTWISE_METHODS = ("binary", "graded", "subtopic")
VALIDATION_METHODS = POINTWISE_METHODS + ("preference", "embedding")

_PAIR_TIERS = {
    "Best/Acc": ("best", "acceptable"),
    "Best/Unacc": ("best", "unacceptable"),
    "Acc/Unacc": ("acceptable", "unacceptable"),
}


class ValidationError(ValueError):
    """Invalid input to the validation protocol."""


@dataclass(frozen=True)
class CrossPair:
    """One ordered cross-category qrel pair: hi should beat lo."""

    query_id: str
    qrel_hi: Qrel
    qrel_lo: Qrel
    category_pair: str

    def __post_init__(self):
        if self.category_pair not in _PAIR_TIERS:
            raise ValidationError(f"unknown category pair {self.category_pair!r}")
        if self.qrel_hi.query_id != self.query_id or self.qrel_lo.query_id != self.query_id:
            raise ValidationError("cross pair mixes queries")


@dataclass(frozen=True)
class PairCounts:
    """Outcome counts for one category pair; conservation is enforced."""

    agree: int = 0
    tie: int = 0
    disagree: int = 0
    skipped: int = 0
    failed: int = 0

    def __post_init__(self):
        for name in ("agree", "tie", "disagree", "skipped", "failed"):
            if getattr(self, name) < 0:
                raise ValidationError(f"negative count {name}")

    @property
    def evaluated(self) -> int:
        return self.agree + self.tie + self.disagree

    @property
    def total(self) -> int:
        return self.evaluated + self.skipped + self.failed

    def fractions(self) -> dict[str, float]:
        if self.evaluated == 0:
            return {"agree": 0.0, "tie": 0.0, "disagree": 0.0}
        return {
            "agree": self.agree / self.evaluated,
            "tie": self.tie / self.evaluated,
            "disagree": self.disagree / self.evaluated,
        }

    def add(self, outcome: str) -> "PairCounts":
        if outcome not in ("agree", "tie", "disagree", "skipped", "failed"):
            raise ValidationError(f"unknown outcome {outcome!r}")
        return dataclasses.replace(self, **{outcome: getattr(self, outcome) + 1})


@dataclass(frozen=True)
class AgreementSummary:
    """Per-category-pair agreement counts for one method run."""

    method_id: str
    model_id: str
    dataset_id: str
    by_pair: Mapping[str, PairCounts]
    config: Mapping[str, object] = field(default_factory=dict)

    def __post_init__(self):
        for name in self.by_pair:
            if name not in CATEGORY_PAIRS:
                raise ValidationError(f"unknown category pair {name!r}")

    def counts(self, category_pair: str) -> PairCounts:
        return self.by_pair.get(category_pair, PairCounts())

    @property
    def overall(self) -> PairCounts:
        totals = {"agree": 0, "tie": 0, "disagree": 0, "skipped": 0, "failed": 0}
        for counts in self.by_pair.values():
            for name in totals:
                totals[name] += getattr(counts, name)
        return PairCounts(**totals)

    def to_dict(self) -> dict:
        def encode(counts: PairCounts) -> dict:
            return {
                "agree": counts.agree,
                "tie": counts.tie,
                "disagree": counts.disagree,
                "skipped": counts.skipped,
                "failed": counts.failed,
                "total": counts.total,
                "fractions": counts.fractions(),
            }

        return {
            "method_id": self.method_id,
            "model_id": self.model_id,
            "dataset_id": self.dataset_id,
            "config": dict(self.config),
            "category_pairs": {name: encode(self.counts(name)) for name in CATEGORY_PAIRS},
            "overall": encode(self.overall),
        }

    def to_json(self) -> str:
        return json.dumps(self.to_dict(), indent=2, sort_keys=True)


def enumerate_cross_pairs(partition: CategoryPartition) -> list[CrossPair]:
    """All cross-category pairs, hi member first, in deterministic order.

    Order: query_id ascending, then Best/Acc, Best/Unacc, Acc/Unacc, then
    hi doc_id, then lo doc_id (all lexicographic).
    """
    pairs = []
    for query_id in sorted(partition.query_ids()):
        categories = partition.get(query_id)
        for pair_name in CATEGORY_PAIRS:
            hi_tier, lo_tier = _PAIR_TIERS[pair_name]
            hi_qrels = sorted(categories.tier(hi_tier), key=lambda q: q.doc_id)
            lo_qrels = sorted(categories.tier(lo_tier), key=lambda q: q.doc_id)
            for hi in hi_qrels:
                for lo in lo_qrels:
                    pairs.append(
                        CrossPair(
                            query_id=query_id,
                            qrel_hi=hi,
                            qrel_lo=lo,
                            category_pair=pair_name,
                        )
                    )
    return pairs


_BINARY_ORDER = {"not_relevant": 0, "relevant": 1}


def _comparable(label) -> tuple[str, object]:
    if isinstance(label, str):
        if label in _BINARY_ORDER:
            return ("binary", _BINARY_ORDER[label])
        raise ValidationError(f"unknown binary label {label!r}")
    if isinstance(label, bool):
        raise ValidationError("boolean labels are ambiguous; use method labels")
    if isinstance(label, int):
        return ("graded", label)
    if isinstance(label, SubtopicScore):
        return ("subtopic", label.exact)
    if isinstance(label, Fraction):
        return ("subtopic", label)
    raise ValidationError(f"label {label!r} is not comparable")


def classify_pointwise_pair(label_hi, label_lo) -> str:
    """agree if the hi label orders strictly above lo, tie if equal."""
    kind_hi, value_hi = _comparable(label_hi)
    kind_lo, value_lo = _comparable(label_lo)
    if kind_hi != kind_lo:
        raise ValidationError(f"incomparable label kinds: {kind_hi} vs {kind_lo}")
    if value_hi > value_lo:
        return "agree"
    if value_hi == value_lo:
        return "tie"
    return "disagree"


def sample_preference_triples(
    partition: CategoryPartition, k: int = 5, seed: int = 0
) -> list[CrossPair]:
    """Up to k seeded-random cross pairs per (query, category pair).

    Populations are disjoint across category pairs by construction, so no
    qrel pair is drawn into more than one set. Same seed, same sample.
    """
    if k < 1:
        raise ValidationError("k must be >= 1")
    rng = random.Random(seed)
    sampled = []
    for query_id in sorted(partition.query_ids()):
        categories = partition.get(query_id)
        for pair_name in CATEGORY_PAIRS:
            hi_tier, lo_tier = _PAIR_TIERS[pair_name]
            hi_qrels = sorted(categories.tier(hi_tier), key=lambda q: q.doc_id)
            lo_qrels = sorted(categories.tier(lo_tier), key=lambda q: q.doc_id)
            population = [
                CrossPair(query_id=query_id, qrel_hi=hi, qrel_lo=lo, category_pair=pair_name)
                for hi in hi_qrels
                for lo in lo_qrels
            ]
            if not population:
                continue
            sampled.extend(rng.sample(population, min(k, len(population))))
    return sampled


def _passage(qrel: Qrel) -> str:
    if not qrel.passage_text:
        raise ValidationError(
            f"qrel ({qrel.query_id}, {qrel.doc_id}) has no passage text attached"
        )
    return qrel.passage_text


def _query_lookup(queries: QuerySet | None, query_id: str) -> Query:
    if queries is None:
        raise ValidationError("judge-based validation needs the query set")
    return queries.get(query_id)


def _pointwise_labels(
    method_id: str,
    pairs: Iterable[CrossPair],
    judge: Judge,
    queries: QuerySet,
    subtopic_store: SubtopicStore | None,
    max_grade: int,
) -> dict[tuple[str, str], object]:
    """Judge each distinct qrel once; None marks an unparseable judgment."""
    distinct: dict[tuple[str, str], Qrel] = {}
    for pair in pairs:
        for qrel in (pair.qrel_hi, pair.qrel_lo):
            distinct.setdefault((qrel.query_id, qrel.doc_id), qrel)

    subtopic_lists: dict[str, object] = {}
    labels: dict[tuple[str, str], object] = {}
    for key in sorted(distinct):
        qrel = distinct[key]
        query = _query_lookup(queries, qrel.query_id)
        text = _passage(qrel)
        try:
            if method_id == "binary":
                labels[key] = assess_binary(query, text, judge)
            elif method_id == "graded":
                labels[key] = assess_graded(query, text, judge, max_grade=max_grade)
            else:
                if query.query_id not in subtopic_lists:
                    subtopic_lists[query.query_id] = generate_subtopics(
                        query, judge, store=subtopic_store
                    )
                score = assess_subtopics(query, subtopic_lists[query.query_id], text, judge)
                labels[key] = None if score.partial else score
        except UnparsableReplyError:
            labels[key] = None
    return labels


def run_validation(
    method_id: str,
    partition: CategoryPartition,
    judge: Judge | None = None,
    embedder=None,
    *,
    queries: QuerySet | None = None,
    subtopic_store: SubtopicStore | None = None,
    k: int = 5,
    seed: int = 0,
    max_grade: int = DEFAULT_MAX_GRADE,
    dataset_id: str = "unknown",
    embed_by_id: bool | None = None,
) -> AgreementSummary:
    """Run one method's agreement validation over a partition.

    Pointwise methods judge each distinct qrel once and classify every
    cross pair from those labels. Preference judges k sampled pairs per
    (query, category pair). Embedding enumerates all pairs and compares
    cosine similarity to the lexicographically first Best exemplar that
    is not a member of the pair; pairs with no eligible exemplar are
    skipped. Backend failures exclude the affected pairs as failed.
    """
    if method_id not in VALIDATION_METHODS:
        raise ValidationError(f"unknown method {method_id!r}")

    counts = {name: PairCounts() for name in CATEGORY_PAIRS}
    config: dict[str, object] = {"seed": seed, "max_grade": max_grade}
    model_id = "none"

    if method_id in POINTWISE_METHODS:
        if judge is None:
            raise ValidationError(f"{method_id} validation needs a judge")
        model_id = judge.model_id
        pairs = enumerate_cross_pairs(partition)
        labels = _pointwise_labels(
            method_id, pairs, judge, queries, subtopic_store, max_grade
        )
        for pair in pairs:
            hi = labels[(pair.query_id, pair.qrel_hi.doc_id)]
            lo = labels[(pair.query_id, pair.qrel_lo.doc_id)]
            if hi is None or lo is None:
                outcome = "failed"
            else:
                outcome = classify_pointwise_pair(hi, lo)
            counts[pair.category_pair] = counts[pair.category_pair].add(outcome)

    elif method_id == "preference":
        if judge is None:
            raise ValidationError("preference validation needs a judge")
        model_id = judge.model_id
        config["k"] = k
        triples = sample_preference_triples(partition, k=k, seed=seed)
        for pair in triples:
            query = _query_lookup(queries, pair.query_id)
            try:
                outcome_obj = assess_preference(
                    query, _passage(pair.qrel_hi), _passage(pair.qrel_lo), judge
                )
                outcome = {"A": "agree", "B": "disagree", "tie": "tie"}[outcome_obj.winner]
            except (UnparsableReplyError, JudgeTransportError):
                outcome = "failed"
            counts[pair.category_pair] = counts[pair.category_pair].add(outcome)

    else:  # embedding
        if embedder is None:
            raise ValidationError("embedding validation needs an embedding backend")
        model_id = getattr(embedder, "model_id", type(embedder).__name__)
        by_id = embed_by_id if embed_by_id is not None else hasattr(embedder, "store")

        def vector(qrel: Qrel):
            if by_id:
                return embed_text(embedder, qrel.doc_id, is_id=True)
            return embed_text(embedder, _passage(qrel))

        for pair in enumerate_cross_pairs(partition):
            best_ids = sorted(
                q.doc_id
                for q in partition.get(pair.query_id).best
                if q.doc_id not in (pair.qrel_hi.doc_id, pair.qrel_lo.doc_id)
            )
            if not best_ids:
                counts[pair.category_pair] = counts[pair.category_pair].add("skipped")
                continue
            exemplar = next(
                q
                for q in partition.get(pair.query_id).best
                if q.doc_id == best_ids[0]
            )
            try:
                cos_hi = cosine_similarity(vector(exemplar), vector(pair.qrel_hi))
                cos_lo = cosine_similarity(vector(exemplar), vector(pair.qrel_lo))
            except (CorpusError, JudgeTransportError):
                counts[pair.category_pair] = counts[pair.category_pair].add("failed")
                continue
            if cos_hi > cos_lo:
                outcome = "agree"
            elif cos_hi == cos_lo:
                outcome = "tie"
            else:
                outcome = "disagree"
            counts[pair.category_pair] = counts[pair.category_pair].add(outcome)

    return AgreementSummary(
        method_id=method_id,
        model_id=model_id,
        dataset_id=dataset_id,
        by_pair=counts,
        config=config,
    )
