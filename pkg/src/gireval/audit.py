"""Human auditing of judge output: sampling, label storage, agreement.

A stratified sample of judgment records becomes audit items. Each item
asks a human the same question the judge answered; the judge's outcome
stays hidden until the human submits (blindness). Labels append to the
same JSON Lines discipline as the judgment log, the latest submission
per (item, assessor) wins, and the report gives per-method human
agreement plus an indirect consistency check for embeddings.

Item kinds: binary, graded and preference records map one-to-one to
items; the per-subtopic yes/no records of one (query, passage) pair fold
into a single bundle item with |subtopics| + 1 sub-questions. Preference
items present their two texts in seeded-random order, and the stored
swap flag maps the human's presented-order choice back to the record's
orientation.
"""

from __future__ import annotations

import dataclasses
import hashlib
import json
import random
import threading
from dataclasses import dataclass
from datetime import datetime, timezone
from pathlib import Path
from typing import Iterable, Mapping, Sequence

from .judge import JudgmentLog, JudgmentRecord, PromptTemplate, load_templates
from .methods import cosine_similarity

AUDITABLE_METHODS = ("binary", "graded", "preference", "subtopic")

_QUERY_RESTATEMENT_PREFIX = "The query itself: "


class AuditError(ValueError):
    """Invalid audit input: unknown item, bad label, empty log."""


@dataclass(frozen=True)
class AuditItem:
    """One human-auditable unit derived from judgment records.

    ``question`` (and each entry of ``sub_questions`` for bundles) is
    byte-identical to the question section the judge saw. ``texts`` are
    in presentation order; for preference, ``swap`` records whether that
    order reverses the judged orientation. ``llm_outcome`` must never
    appear in payloads served before the human submits.
    """

    item_id: str
    record_id: str
    method_id: str
    query: str
    texts: tuple[str, ...]
    question: str
    llm_outcome: object
    max_grade: int | None = None
    subtopics: tuple[str, ...] = ()
    sub_questions: tuple[str, ...] = ()
    record_ids: tuple[str, ...] = ()
    swap: bool = False

    def __post_init__(self):
        if self.method_id not in AUDITABLE_METHODS:
            raise AuditError(f"method {self.method_id!r} is not auditable")
        expected_texts = 2 if self.method_id == "preference" else 1
        if len(self.texts) != expected_texts:
            raise AuditError(
                f"{self.method_id} item needs {expected_texts} text(s), got {len(self.texts)}"
            )
        if self.method_id == "subtopic":
            if not self.subtopics or len(self.subtopics) != len(self.sub_questions):
                raise AuditError("subtopic bundle needs aligned sub-questions")
            if len(self.llm_outcome) != len(self.subtopics):
                raise AuditError("subtopic outcomes misaligned with sub-questions")

    def label_space(self) -> dict:
        if self.method_id == "binary":
            return {"kind": "choice", "options": ["relevant", "not_relevant"]}
        if self.method_id == "graded":
            return {"kind": "grade", "options": list(range((self.max_grade or 0) + 1))}
        if self.method_id == "preference":
            return {"kind": "choice", "options": ["A", "B"]}
        return {
            "kind": "per_subtopic",
            "options": ["yes", "no"],
            "count": len(self.subtopics),
        }

    def validate_label(self, label) -> object:
        space = self.label_space()
        if self.method_id == "graded":
            if not isinstance(label, int) or isinstance(label, bool) or label not in space["options"]:
                raise AuditError(
                    f"graded label must be an integer in [0, {self.max_grade}], got {label!r}"
                )
            return label
        if self.method_id == "subtopic":
            if (
                not isinstance(label, (list, tuple))
                or len(label) != space["count"]
                or any(entry not in space["options"] for entry in label)
            ):
                raise AuditError(
                    f"subtopic label must be a yes/no list of length {space['count']}"
                )
            return list(label)
        if label not in space["options"]:
            raise AuditError(f"label {label!r} not in {space['options']}")
        return label

    def to_public_dict(self) -> dict:
        """Blinded payload for assessors: no judge outcome anywhere."""
        return {
            "item_id": self.item_id,
            "method_id": self.method_id,
            "query": self.query,
            "texts": list(self.texts),
            "question": self.question,
            "max_grade": self.max_grade,
            "subtopics": list(self.subtopics),
            "sub_questions": list(self.sub_questions),
            "label_space": self.label_space(),
        }

    def to_stored_dict(self) -> dict:
        data = self.to_public_dict()
        data.update(
            record_id=self.record_id,
            record_ids=list(self.record_ids),
            llm_outcome=list(self.llm_outcome)
            if isinstance(self.llm_outcome, (list, tuple))
            else self.llm_outcome,
            swap=self.swap,
        )
        return data

    @classmethod
    def from_stored_dict(cls, data: Mapping) -> "AuditItem":
        outcome = data["llm_outcome"]
        if isinstance(outcome, list):
            outcome = tuple(outcome)
        return cls(
            item_id=data["item_id"],
            record_id=data["record_id"],
            method_id=data["method_id"],
            query=data["query"],
            texts=tuple(data["texts"]),
            question=data["question"],
            llm_outcome=outcome,
            max_grade=data.get("max_grade"),
            subtopics=tuple(data.get("subtopics", ())),
            sub_questions=tuple(data.get("sub_questions", ())),
            record_ids=tuple(data.get("record_ids", ())),
            swap=data.get("swap", False),
        )


@dataclass(frozen=True)
class AuditLabel:
    """One human submission for one item."""

    item_id: str
    label: object
    assessor_id: str
    submitted_at: str

    def to_dict(self) -> dict:
        return {
            "item_id": self.item_id,
            "label": self.label,
            "assessor_id": self.assessor_id,
            "submitted_at": self.submitted_at,
        }


@dataclass(frozen=True)
class AuditBatch:
    """The items drawn by one sampling call."""

    items: tuple[AuditItem, ...]
    requested_n: int
    seed: int
    warning: bool = False

    def __len__(self) -> int:
        return len(self.items)


class AuditStore:
    """Append-only JSON Lines store of audit items and labels."""

    def __init__(self, path: str | Path | None = None):
        self._path = Path(path) if path else None
        self._lock = threading.Lock()
        self._items: dict[str, AuditItem] = {}
        self._item_order: list[str] = []
        self._labels: list[AuditLabel] = []
        if self._path and self._path.exists():
            with open(self._path, encoding="utf-8") as fh:
                for lineno, line in enumerate(fh, start=1):
                    if not line.strip():
                        continue
                    try:
                        data = json.loads(line)
                        kind = data.pop("type")
                    except (json.JSONDecodeError, KeyError) as exc:
                        raise AuditError(f"{self._path}:{lineno}: corrupt audit line: {exc}")
                    if kind == "item":
                        item = AuditItem.from_stored_dict(data)
                        if item.item_id not in self._items:
                            self._item_order.append(item.item_id)
                        self._items[item.item_id] = item
                    elif kind == "label":
                        self._labels.append(
                            AuditLabel(
                                item_id=data["item_id"],
                                label=data["label"],
                                assessor_id=data["assessor_id"],
                                submitted_at=data["submitted_at"],
                            )
                        )
                    else:
                        raise AuditError(f"{self._path}:{lineno}: unknown record type {kind!r}")

    def _write(self, kind: str, data: Mapping) -> None:
        if self._path:
            self._path.parent.mkdir(parents=True, exist_ok=True)
            with open(self._path, "a", encoding="utf-8") as fh:
                fh.write(json.dumps({"type": kind, **data}, ensure_ascii=False) + "\n")

    def add_item(self, item: AuditItem) -> None:
        with self._lock:
            if item.item_id in self._items:
                return
            self._items[item.item_id] = item
            self._item_order.append(item.item_id)
            self._write("item", item.to_stored_dict())

    def add_batch(self, batch: AuditBatch) -> None:
        for item in batch.items:
            self.add_item(item)

    def add_label(self, label: AuditLabel) -> None:
        with self._lock:
            if label.item_id not in self._items:
                raise AuditError(f"unknown audit item {label.item_id!r}")
            self._items[label.item_id].validate_label(label.label)
            self._labels.append(label)
            self._write("label", label.to_dict())

    def items(self) -> list[AuditItem]:
        return [self._items[item_id] for item_id in self._item_order]

    def get_item(self, item_id: str) -> AuditItem:
        try:
            return self._items[item_id]
        except KeyError:
            raise AuditError(f"unknown audit item {item_id!r}") from None

    def labels(self) -> list[AuditLabel]:
        return list(self._labels)

    def latest_labels(self) -> dict[tuple[str, str], AuditLabel]:
        """Latest submission per (item, assessor); later appends win ties."""
        latest: dict[tuple[str, str], AuditLabel] = {}
        for label in self._labels:
            key = (label.item_id, label.assessor_id)
            current = latest.get(key)
            if current is None or label.submitted_at >= current.submitted_at:
                latest[key] = label
        return latest

    def pending_for(self, assessor_id: str) -> list[AuditItem]:
        done = {
            item_id
            for (item_id, assessor) in self.latest_labels()
            if assessor == assessor_id
        }
        return [item for item in self.items() if item.item_id not in done]


def _item_digest(*parts: object) -> str:
    canonical = json.dumps(list(parts), sort_keys=True, separators=(",", ":"))
    return hashlib.sha256(canonical.encode("utf-8")).hexdigest()[:16]


def _build_candidates(
    log: JudgmentLog, templates: Mapping[str, PromptTemplate]
) -> list[AuditItem]:
    """Fold judgment records into auditable items, bundling subtopics."""
    items: list[AuditItem] = []
    bundles: dict[tuple[str, str], list[JudgmentRecord]] = {}

    for record in log:
        if record.unparsed:
            continue
        bindings = record.bindings
        if record.template_id == "binary":
            items.append(
                AuditItem(
                    item_id=_item_digest("binary", record.record_id),
                    record_id=record.record_id,
                    method_id="binary",
                    query=bindings["query"],
                    texts=(bindings["passage"],),
                    question=templates["binary"].render_question(bindings),
                    llm_outcome=record.parsed_outcome,
                )
            )
        elif record.template_id == "graded":
            items.append(
                AuditItem(
                    item_id=_item_digest("graded", record.record_id),
                    record_id=record.record_id,
                    method_id="graded",
                    query=bindings["query"],
                    texts=(bindings["passage"],),
                    question=templates["graded"].render_question(bindings),
                    llm_outcome=record.parsed_outcome,
                    max_grade=int(bindings.get("max_grade", 3)),
                )
            )
        elif record.template_id == "preference":
            items.append(
                AuditItem(
                    item_id=_item_digest("preference", record.record_id),
                    record_id=record.record_id,
                    method_id="preference",
                    query=bindings["query"],
                    texts=(bindings["passage_a"], bindings["passage_b"]),
                    question=templates["preference"].render_question(bindings),
                    llm_outcome=record.parsed_outcome,
                )
            )
        elif record.template_id == "subtopic_assess":
            key = (bindings.get("query", ""), bindings["passage"])
            bundles.setdefault(key, []).append(record)

    for (query, passage) in sorted(bundles):
        records = bundles[(query, passage)]
        # present generated subtopics first, the query restatement last
        records.sort(
            key=lambda r: r.bindings["subtopic"].startswith(_QUERY_RESTATEMENT_PREFIX)
        )
        subtopics = tuple(r.bindings["subtopic"] for r in records)
        items.append(
            AuditItem(
                item_id=_item_digest("subtopic", *(r.record_id for r in records)),
                record_id=records[0].record_id,
                method_id="subtopic",
                query=query,
                texts=(passage,),
                question=templates["subtopic_assess"].render_question(records[0].bindings),
                llm_outcome=tuple(r.parsed_outcome for r in records),
                subtopics=subtopics,
                sub_questions=tuple(
                    templates["subtopic_assess"].render_question(r.bindings)
                    for r in records
                ),
                record_ids=tuple(r.record_id for r in records),
            )
        )
    return items


def _outcome_stratum(item: AuditItem) -> str:
    if item.method_id == "subtopic":
        positives = sum(1 for o in item.llm_outcome if o == "yes")
        return f"{positives}/{len(item.llm_outcome)}"
    return str(item.llm_outcome)


def audit_sample(
    log: JudgmentLog,
    n: int,
    seed: int = 0,
    templates: Mapping[str, PromptTemplate] | None = None,
    methods: Sequence[str] | None = None,
) -> AuditBatch:
    """Draw a stratified audit batch from the judgment log.

    Strata are (method, LLM outcome). Selection round-robins over
    methods and, within each method, over its outcome strata, so a small
    n still touches every method and both sides of each verdict. If n
    exceeds the auditable records, everything is returned with the
    warning flag set. Deterministic given seed and log contents.
    """
    if n < 1:
        raise AuditError("n must be >= 1")
    catalog = templates if templates is not None else load_templates()
    candidates = _build_candidates(log, catalog)
    if methods is not None:
        candidates = [item for item in candidates if item.method_id in methods]
    if not candidates:
        raise AuditError("no auditable judgment records in the log")

    rng = random.Random(seed)

    strata: dict[str, dict[str, list[AuditItem]]] = {}
    for item in candidates:
        strata.setdefault(item.method_id, {}).setdefault(_outcome_stratum(item), []).append(item)
    for outcome_groups in strata.values():
        for group in outcome_groups.values():
            rng.shuffle(group)

    method_cycle = sorted(strata)
    outcome_cycles = {
        method: sorted(outcome_groups) for method, outcome_groups in strata.items()
    }
    outcome_positions = {method: 0 for method in method_cycle}

    picked: list[AuditItem] = []
    while len(picked) < n:
        progressed = False
        for method in method_cycle:
            if len(picked) >= n:
                break
            outcomes = outcome_cycles[method]
            for _ in range(len(outcomes)):
                position = outcome_positions[method] % len(outcomes)
                outcome_positions[method] += 1
                group = strata[method][outcomes[position]]
                if group:
                    picked.append(group.pop())
                    progressed = True
                    break
        if not progressed:
            break

    warning = len(picked) < n
    items = []
    for item in picked:
        if item.method_id == "preference" and rng.random() < 0.5:
            items.append(
                dataclasses.replace(item, texts=(item.texts[1], item.texts[0]), swap=True)
            )
        else:
            items.append(item)
    return AuditBatch(items=tuple(items), requested_n=n, seed=seed, warning=warning)


def record_human_label(
    store: AuditStore, item_id: str, label, assessor_id: str, submitted_at: str | None = None
) -> AuditLabel:
    """Validate and append one human label; the latest per assessor wins."""
    if not assessor_id or not str(assessor_id).strip():
        raise AuditError("assessor_id must be non-empty")
    item = store.get_item(item_id)
    validated = item.validate_label(label)
    audit_label = AuditLabel(
        item_id=item_id,
        label=validated,
        assessor_id=str(assessor_id),
        submitted_at=submitted_at or datetime.now(timezone.utc).isoformat(),
    )
    store.add_label(audit_label)
    return audit_label


def human_matches_llm(item: AuditItem, label) -> bool:
    """Does a human label agree with the judge outcome for this item?"""
    if item.method_id == "binary":
        return label == item.llm_outcome
    if item.method_id == "graded":
        return label == item.llm_outcome
    if item.method_id == "preference":
        # label is relative to presented order; map back to the judged one
        if item.swap:
            oriented = "second" if label == "A" else "first"
        else:
            oriented = "first" if label == "A" else "second"
        return oriented == item.llm_outcome
    return list(label) == list(item.llm_outcome)


@dataclass(frozen=True)
class AuditReport:
    """Per-method human agreement over the latest labels."""

    per_method: Mapping[str, Mapping[str, object]]
    disagreements: tuple[str, ...]
    embedding_consistency: float | None
    n_labels: int

    def __post_init__(self):
        for method, stats in self.per_method.items():
            if not 0 <= stats["n_agree"] <= stats["n_audited"]:
                raise AuditError(f"{method}: n_agree exceeds n_audited")
            if not 0.0 <= stats["agreement"] <= 1.0:
                raise AuditError(f"{method}: agreement fraction out of range")
        if self.embedding_consistency is not None and not (
            0.0 <= self.embedding_consistency <= 1.0
        ):
            raise AuditError("embedding consistency out of range")

    def to_dict(self) -> dict:
        return {
            "per_method": {m: dict(v) for m, v in self.per_method.items()},
            "disagreements": list(self.disagreements),
            "embedding_consistency": self.embedding_consistency,
            "n_labels": self.n_labels,
        }

    def to_json(self) -> str:
        return json.dumps(self.to_dict(), indent=2, sort_keys=True)


def audit_report(store: AuditStore, embedder=None) -> AuditReport:
    """Aggregate agreement between humans and the judge.

    Counting unit is one (item, assessor) latest label; subtopic bundles
    count each sub-question separately so fractions stay meaningful. A
    method with no labels is absent from the result, not reported as
    zero. With an embedding backend, labeled preference items also yield
    an indirect consistency fraction: how often cosine similarity to the
    query orders the two texts the same way the human did (exact cosine
    ties are excluded).
    """
    latest = store.latest_labels()
    counts: dict[str, dict[str, int]] = {}
    disagreements: list[str] = []
    consistency_hits = 0
    consistency_total = 0

    for (item_id, _assessor), label in sorted(latest.items()):
        item = store.get_item(item_id)
        stats = counts.setdefault(item.method_id, {"n_audited": 0, "n_agree": 0})
        if item.method_id == "subtopic":
            pairs = list(zip(label.label, item.llm_outcome))
            stats["n_audited"] += len(pairs)
            stats["n_agree"] += sum(1 for human, llm in pairs if human == llm)
        else:
            stats["n_audited"] += 1
            stats["n_agree"] += int(human_matches_llm(item, label.label))
        if not human_matches_llm(item, label.label) and item.item_id not in disagreements:
            disagreements.append(item.item_id)

        if item.method_id == "preference" and embedder is not None:
            anchor = embedder.vector(text=item.query)
            cos_a = cosine_similarity(anchor, embedder.vector(text=item.texts[0]))
            cos_b = cosine_similarity(anchor, embedder.vector(text=item.texts[1]))
            if cos_a != cos_b:
                consistency_total += 1
                embedding_pick = "A" if cos_a > cos_b else "B"
                consistency_hits += int(embedding_pick == label.label)

    per_method = {
        method: {
            "n_audited": stats["n_audited"],
            "n_agree": stats["n_agree"],
            "agreement": stats["n_agree"] / stats["n_audited"],
        }
        for method, stats in sorted(counts.items())
    }
    consistency = (
        consistency_hits / consistency_total if consistency_total else None
    )
    return AuditReport(
        per_method=per_method,
        disagreements=tuple(disagreements),
        embedding_consistency=consistency,
        n_labels=len(latest),
    )
