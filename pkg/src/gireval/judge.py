"""Pluggable LLM-judge and embedding backends with a cached judgment log.

The judge side renders prompt templates, calls a chat-completion backend
(remote HTTP or a deterministic mock), parses replies into method-specific
outcomes, and persists every verdict to an append-only JSON Lines log. A
request's digest (record_id) keys a cache over the log, so identical
requests never trigger a second backend call, including under concurrency.

Prompt templates live in text files. Each file holds an optional preamble
(instructions, few-shot examples) and a question section separated by a
line containing only ``%%%``; the question section is the exact question a
human auditor is later asked.
"""

from __future__ import annotations

import hashlib
import json
import os
import re
import threading
import time
from concurrent.futures import Future
from dataclasses import dataclass, field
from datetime import datetime, timezone
from pathlib import Path
from typing import Callable, Iterable, Iterator, Mapping, Sequence

import numpy as np
import requests

from .corpus import DEFAULT_MAX_GRADE, EmbeddingStore

TEMPLATE_IDS = (
    "binary",
    "graded",
    "subtopic_gen",
    "subtopic_assess",
    "preference",
    "generate_normal",
    "generate_liar",
)

_SECTION_SEPARATOR = "%%%"
_PLACEHOLDER_RE = re.compile(r"\{([a-z_]+)\}")
_TEMPLATE_DIR = Path(__file__).resolve().parent / "templates"

JUDGE_API_KEY_VAR = "JUDGE_API_KEY"
EMBED_API_KEY_VAR = "EMBED_API_KEY"


class JudgeError(Exception):
    """Base class for judge-side failures."""


class MissingBindingError(JudgeError):
    """A template placeholder has no binding."""


class JudgeTransportError(JudgeError):
    """Backend could not be reached or returned a malformed payload."""


class ReplyParseError(JudgeError):
    """No recognizable verdict in a backend reply."""


class UnparsableReplyError(JudgeError):
    """Reply stayed unparseable after one reprompt; the record is flagged."""

    def __init__(self, record: "JudgmentRecord"):
        super().__init__(
            f"reply for {record.template_id} request {record.record_id[:12]} "
            "unparseable after reprompt"
        )
        self.record = record


@dataclass(frozen=True)
class PromptTemplate:
    """A prompt body split into preamble and question sections."""

    template_id: str
    preamble: str
    question: str

    @classmethod
    def from_text(cls, template_id: str, text: str) -> "PromptTemplate":
        lines = text.split("\n")
        if _SECTION_SEPARATOR in (line.strip() for line in lines):
            idx = next(i for i, line in enumerate(lines) if line.strip() == _SECTION_SEPARATOR)
            preamble = "\n".join(lines[:idx]).strip("\n")
            question = "\n".join(lines[idx + 1 :]).strip("\n")
        else:
            preamble, question = "", text.strip("\n")
        return cls(template_id=template_id, preamble=preamble, question=question)

    def placeholders(self) -> set[str]:
        return set(_PLACEHOLDER_RE.findall(self.preamble + "\n" + self.question))

    def render(self, bindings: Mapping[str, str]) -> str:
        """Render the full prompt; byte-stable for identical input."""
        parts = [s for s in (self.preamble, self.question) if s]
        return _substitute("\n\n".join(parts), bindings, self.template_id)

    def render_question(self, bindings: Mapping[str, str]) -> str:
        """Render only the question section (what a human auditor is shown)."""
        return _substitute(self.question, bindings, self.template_id)


def _substitute(body: str, bindings: Mapping[str, str], template_id: str) -> str:
    def replace(match: re.Match) -> str:
        name = match.group(1)
        if name not in bindings:
            raise MissingBindingError(
                f"template {template_id!r} references {{{name}}} with no binding"
            )
        return str(bindings[name])

    return _PLACEHOLDER_RE.sub(replace, body)


def load_templates(template_dir: str | Path | None = None) -> dict[str, PromptTemplate]:
    """Load the template catalog from a directory of ``<template_id>.txt`` files."""
    directory = Path(template_dir) if template_dir else _TEMPLATE_DIR
    catalog = {}
    for template_id in TEMPLATE_IDS:
        path = directory / f"{template_id}.txt"
        if not path.exists():
            raise JudgeError(f"missing template file {path}")
        catalog[template_id] = PromptTemplate.from_text(
            template_id, path.read_text(encoding="utf-8")
        )
    return catalog


@dataclass(frozen=True)
class JudgeRequest:
    """One judge invocation: template, bindings, model, sampling params."""

    template_id: str
    bindings: Mapping[str, str]
    model_id: str
    temperature: float = 0.0
    seed: int | None = None

    def __post_init__(self):
        if self.template_id not in TEMPLATE_IDS:
            raise JudgeError(f"unknown template_id {self.template_id!r}")
        if self.temperature < 0:
            raise JudgeError("temperature must be >= 0")

    @property
    def record_id(self) -> str:
        """Stable digest of the request; binding insertion order is irrelevant."""
        canonical = json.dumps(
            {
                "template_id": self.template_id,
                "bindings": {k: str(v) for k, v in self.bindings.items()},
                "model_id": self.model_id,
                "params": {"temperature": self.temperature, "seed": self.seed},
            },
            sort_keys=True,
            separators=(",", ":"),
            ensure_ascii=False,
        )
        return hashlib.sha256(canonical.encode("utf-8")).hexdigest()


def render_prompt(
    request: JudgeRequest, templates: Mapping[str, PromptTemplate] | None = None
) -> str:
    """Render the full prompt for a request."""
    catalog = templates if templates is not None else load_templates()
    return catalog[request.template_id].render(request.bindings)


# ---------------------------------------------------------------- parsing

_NEGATIVE_RE = re.compile(r"\b(?:not[ -]relevant|non[ -]relevant|irrelevant)\b")
_POSITIVE_RE = re.compile(r"\brelevant\b")
_YES_RE = re.compile(r"\byes\b")
_NO_RE = re.compile(r"\bno\b")
_INT_RE = re.compile(r"-?\d+")
_FIRST_RE = re.compile(r"\b(?:response|passage|answer|option)\s*1\b|\bfirst\b")
_SECOND_RE = re.compile(r"\b(?:response|passage|answer|option)\s*2\b|\bsecond\b")
_SUBTOPIC_TAG_RE = re.compile(r"<subtopic[^>]*>(.*?)</subtopic>", re.DOTALL | re.IGNORECASE)
_NUMBERED_LINE_RE = re.compile(r"^\s*\d+\s*[.):-]\s+(.*\S)\s*$")


def parse_reply(template_id: str, raw_reply: str, max_grade: int = DEFAULT_MAX_GRADE):
    """Parse a raw backend reply into the method-specific outcome.

    Returns "relevant"/"not_relevant" for binary, an integer grade for
    graded, "first"/"second" for preference, "yes"/"no" for
    subtopic_assess, a list of subtopic strings for subtopic_gen, and the
    stripped text for the generate templates.
    """
    if not raw_reply or not raw_reply.strip():
        raise ReplyParseError(f"empty reply for template {template_id!r}")
    text = raw_reply.strip()
    lowered = text.lower()

    if template_id == "binary":
        if _NEGATIVE_RE.search(lowered):
            return "not_relevant"
        if _POSITIVE_RE.search(lowered):
            return "relevant"
        if _YES_RE.search(lowered):
            return "relevant"
        if _NO_RE.search(lowered):
            return "not_relevant"
        raise ReplyParseError(f"no binary verdict in {text!r}")

    if template_id == "graded":
        match = _INT_RE.search(lowered)
        if not match:
            raise ReplyParseError(f"no grade in {text!r}")
        grade = int(match.group())
        if not 0 <= grade <= max_grade:
            raise ReplyParseError(f"grade {grade} out of range [0, {max_grade}]")
        return grade

    if template_id == "preference":
        first = _FIRST_RE.search(lowered)
        second = _SECOND_RE.search(lowered)
        if first and second:
            return "first" if first.start() < second.start() else "second"
        if first:
            return "first"
        if second:
            return "second"
        match = _INT_RE.search(lowered)  # bare "1" / "2" replies
        if match and match.group() in ("1", "2"):
            return "first" if match.group() == "1" else "second"
        raise ReplyParseError(f"no preference verdict in {text!r}")

    if template_id == "subtopic_assess":
        yes, no = _YES_RE.search(lowered), _NO_RE.search(lowered)
        if yes and no:
            return "yes" if yes.start() < no.start() else "no"
        if yes:
            return "yes"
        if no:
            return "no"
        raise ReplyParseError(f"no yes/no verdict in {text!r}")

    if template_id == "subtopic_gen":
        subtopics = [s.strip() for s in _SUBTOPIC_TAG_RE.findall(text) if s.strip()]
        if not subtopics:
            for line in text.split("\n"):
                match = _NUMBERED_LINE_RE.match(line)
                if match:
                    subtopics.append(match.group(1))
        if not subtopics:
            raise ReplyParseError(f"no subtopics found in {text!r}")
        return subtopics

    if template_id in ("generate_normal", "generate_liar"):
        return text

    raise JudgeError(f"unknown template_id {template_id!r}")


# ---------------------------------------------------------------- records and log


@dataclass(frozen=True)
class JudgmentRecord:
    """One persisted judge verdict; record_id is a pure function of the request."""

    record_id: str
    template_id: str
    model_id: str
    bindings: Mapping[str, str]
    params: Mapping[str, object]
    raw_reply: str
    parsed_outcome: object
    unparsed: bool
    timestamp: str

    def to_json(self) -> str:
        return json.dumps(
            {
                "record_id": self.record_id,
                "template_id": self.template_id,
                "model_id": self.model_id,
                "bindings": dict(self.bindings),
                "params": dict(self.params),
                "raw_reply": self.raw_reply,
                "parsed_outcome": self.parsed_outcome,
                "unparsed": self.unparsed,
                "timestamp": self.timestamp,
            },
            ensure_ascii=False,
            sort_keys=True,
        )

    @classmethod
    def from_json(cls, line: str) -> "JudgmentRecord":
        data = json.loads(line)
        return cls(
            record_id=data["record_id"],
            template_id=data["template_id"],
            model_id=data["model_id"],
            bindings=data["bindings"],
            params=data["params"],
            raw_reply=data["raw_reply"],
            parsed_outcome=data["parsed_outcome"],
            unparsed=data.get("unparsed", False),
            timestamp=data["timestamp"],
        )


class JudgmentLog:
    """Append-only JSON Lines store of judgment records, cached in memory.

    Appends are serialized through a single lock; reads see immutable
    record objects. With ``path=None`` the log is memory-only.
    """

    def __init__(self, path: str | Path | None = None):
        self._path = Path(path) if path else None
        self._lock = threading.Lock()
        self._by_id: dict[str, JudgmentRecord] = {}
        self._order: list[str] = []
        if self._path and self._path.exists():
            with open(self._path, encoding="utf-8") as fh:
                for lineno, line in enumerate(fh, start=1):
                    if not line.strip():
                        continue
                    try:
                        record = JudgmentRecord.from_json(line)
                    except (json.JSONDecodeError, KeyError) as exc:
                        raise JudgeError(f"{self._path}:{lineno}: corrupt log line: {exc}")
                    if record.record_id not in self._by_id:
                        self._order.append(record.record_id)
                    self._by_id[record.record_id] = record

    @property
    def path(self) -> Path | None:
        return self._path

    def __len__(self) -> int:
        return len(self._by_id)

    def __contains__(self, record_id: str) -> bool:
        return record_id in self._by_id

    def __iter__(self) -> Iterator[JudgmentRecord]:
        return iter([self._by_id[rid] for rid in self._order])

    def get(self, record_id: str) -> JudgmentRecord | None:
        return self._by_id.get(record_id)

    def append(self, record: JudgmentRecord) -> None:
        with self._lock:
            if self._path:
                self._path.parent.mkdir(parents=True, exist_ok=True)
                with open(self._path, "a", encoding="utf-8") as fh:
                    fh.write(record.to_json() + "\n")
            if record.record_id not in self._by_id:
                self._order.append(record.record_id)
            self._by_id[record.record_id] = record


# ---------------------------------------------------------------- backends


class HttpJudgeBackend:
    """Chat-completion backend over HTTP POST {model, messages, temperature}."""

    def __init__(
        self,
        endpoint: str,
        api_key: str | None = None,
        timeout: float = 60.0,
        session: requests.Session | None = None,
    ):
        self.endpoint = endpoint
        self.api_key = api_key if api_key is not None else os.environ.get(JUDGE_API_KEY_VAR)
        self.timeout = timeout
        self._session = session or requests.Session()

    def complete(self, request: JudgeRequest, prompt: str) -> str:
        body: dict = {
            "model": request.model_id,
            "messages": [{"role": "user", "content": prompt}],
            "temperature": request.temperature,
        }
        if request.seed is not None:
            body["seed"] = request.seed
        headers = {"Content-Type": "application/json"}
        if self.api_key:
            headers["Authorization"] = f"Bearer {self.api_key}"
        try:
            resp = self._session.post(
                self.endpoint, json=body, headers=headers, timeout=self.timeout
            )
            resp.raise_for_status()
            data = resp.json()
        except requests.RequestException as exc:
            raise JudgeTransportError(f"judge backend request failed: {exc}") from exc
        except ValueError as exc:
            raise JudgeTransportError(f"judge backend returned non-JSON body: {exc}") from exc
        try:
            if "choices" in data:
                return data["choices"][0]["message"]["content"]
            return data["content"]
        except (KeyError, IndexError, TypeError) as exc:
            raise JudgeTransportError(f"unexpected judge backend payload: {data!r}") from exc


class MockJudgeBackend:
    """Deterministic fixture-driven backend for hermetic tests.

    Fixtures map a request digest (record_id) to a reply, or to a list of
    replies consumed one per call (the last entry repeats). ``reply_fn``
    handles requests with no fixture; ``default`` is a final fallback.
    """

    def __init__(
        self,
        fixtures: Mapping[str, str | Sequence[str]] | None = None,
        default: str | None = None,
        reply_fn: Callable[[JudgeRequest, str], str] | None = None,
    ):
        self._fixtures: dict[str, list[str]] = {}
        for key, value in (fixtures or {}).items():
            self._fixtures[key] = [value] if isinstance(value, str) else list(value)
        self.default = default
        self.reply_fn = reply_fn
        self.calls = 0
        self._lock = threading.Lock()

    def complete(self, request: JudgeRequest, prompt: str) -> str:
        with self._lock:
            self.calls += 1
            replies = self._fixtures.get(request.record_id)
            if replies:
                return replies.pop(0) if len(replies) > 1 else replies[0]
        if self.reply_fn is not None:
            return self.reply_fn(request, prompt)
        if self.default is not None:
            return self.default
        raise JudgeTransportError(
            f"no mock fixture for {request.template_id} request {request.record_id[:12]}"
        )

    @classmethod
    def from_file(cls, path: str | Path) -> "MockJudgeBackend":
        """Load fixtures from a JSON object; key "__default__" sets the fallback."""
        data = json.loads(Path(path).read_text(encoding="utf-8"))
        default = data.pop("__default__", None)
        return cls(fixtures=data, default=default)


# ---------------------------------------------------------------- judge orchestration


@dataclass
class _InFlight:
    future: Future = field(default_factory=Future)


class Judge:
    """Cache-first judge: render, call backend, parse, log.

    A request is keyed by its record_id. Cache hits (including records
    loaded from an existing log file) never reach the backend; concurrent
    duplicates share a single in-flight call. Transport failures retry
    with bounded exponential backoff. An unparseable reply is reprompted
    once; if still unparseable the record is logged flagged as unparsed
    and surfaced as UnparsableReplyError.
    """

    def __init__(
        self,
        backend,
        model_id: str,
        log: JudgmentLog | str | Path | None = None,
        temperature: float = 0.0,
        seed: int | None = None,
        max_grade: int = DEFAULT_MAX_GRADE,
        templates: Mapping[str, PromptTemplate] | None = None,
        max_retries: int = 3,
        backoff_base: float = 0.5,
        backoff_cap: float = 8.0,
        sleep: Callable[[float], None] = time.sleep,
    ):
        self.backend = backend
        self.model_id = model_id
        self.log = log if isinstance(log, JudgmentLog) else JudgmentLog(log)
        self.temperature = temperature
        self.seed = seed
        self.max_grade = max_grade
        self.templates = dict(templates) if templates is not None else load_templates()
        self.max_retries = max_retries
        self.backoff_base = backoff_base
        self.backoff_cap = backoff_cap
        self._sleep = sleep
        self._lock = threading.Lock()
        self._inflight: dict[str, _InFlight] = {}

    def request(self, template_id: str, bindings: Mapping[str, str]) -> JudgeRequest:
        return JudgeRequest(
            template_id=template_id,
            bindings=dict(bindings),
            model_id=self.model_id,
            temperature=self.temperature,
            seed=self.seed,
        )

    def render(self, request: JudgeRequest) -> str:
        return render_prompt(request, self.templates)

    def render_question(self, request: JudgeRequest) -> str:
        return self.templates[request.template_id].render_question(request.bindings)

    def judge(self, template_id: str, bindings: Mapping[str, str]) -> JudgmentRecord:
        """Return the judgment record for (template_id, bindings), judging on miss."""
        return self.call_judge(self.request(template_id, bindings))

    def call_judge(self, request: JudgeRequest) -> JudgmentRecord:
        """Cache-first lookup for a fully built request; backend called on miss only."""
        record_id = request.record_id

        with self._lock:
            cached = self.log.get(record_id)
            if cached is not None:
                return self._deliver(cached)
            entry = self._inflight.get(record_id)
            if entry is None:
                entry = _InFlight()
                self._inflight[record_id] = entry
                owner = True
            else:
                owner = False

        if not owner:
            return self._deliver(entry.future.result())

        try:
            record = self._judge_uncached(request)
        except BaseException as exc:
            with self._lock:
                del self._inflight[record_id]
            entry.future.set_exception(exc)
            # Future.result() raises this exception for waiters; re-raise for the owner.
            raise
        with self._lock:
            del self._inflight[record_id]
        entry.future.set_result(record)
        return self._deliver(record)

    @staticmethod
    def _deliver(record: JudgmentRecord) -> JudgmentRecord:
        if record.unparsed:
            raise UnparsableReplyError(record)
        return record

    def _judge_uncached(self, request: JudgeRequest) -> JudgmentRecord:
        prompt = self.render(request)
        max_grade = int(request.bindings.get("max_grade", self.max_grade))
        raw = self._complete_with_retry(request, prompt)
        try:
            outcome = parse_reply(request.template_id, raw, max_grade=max_grade)
            unparsed = False
        except ReplyParseError:
            raw = self._complete_with_retry(request, prompt)  # one reprompt
            try:
                outcome = parse_reply(request.template_id, raw, max_grade=max_grade)
                unparsed = False
            except ReplyParseError:
                outcome = None
                unparsed = True
        record = JudgmentRecord(
            record_id=request.record_id,
            template_id=request.template_id,
            model_id=request.model_id,
            bindings=dict(request.bindings),
            params={"temperature": request.temperature, "seed": request.seed},
            raw_reply=raw,
            parsed_outcome=outcome,
            unparsed=unparsed,
            timestamp=datetime.now(timezone.utc).isoformat(),
        )
        self.log.append(record)
        return record

    def _complete_with_retry(self, request: JudgeRequest, prompt: str) -> str:
        attempts = self.max_retries + 1
        for attempt in range(attempts):
            try:
                return self.backend.complete(request, prompt)
            except JudgeTransportError:
                if attempt == attempts - 1:
                    raise
                self._sleep(min(self.backoff_cap, self.backoff_base * 2**attempt))
        raise AssertionError("unreachable")


# ---------------------------------------------------------------- embeddings


class StoreEmbeddingBackend:
    """Embedding lookup over a precomputed EmbeddingStore (store-only mode)."""

    def __init__(self, store: EmbeddingStore):
        self.store = store

    @property
    def dim(self) -> int:
        return self.store.dim

    def vector(self, item_id: str | None = None, text: str | None = None) -> np.ndarray:
        if item_id is None:
            raise JudgeError("store-only embedding backend needs an item id")
        return self.store.get(item_id)


class MockEmbeddingBackend:
    """Hash-seeded pseudorandom unit vectors; deterministic per input text."""

    def __init__(self, dim: int = 32):
        if dim <= 0:
            raise JudgeError("embedding dimension must be positive")
        self.dim = dim

    def vector(self, item_id: str | None = None, text: str | None = None) -> np.ndarray:
        key = text if text is not None else item_id
        if key is None:
            raise JudgeError("mock embedding backend needs an id or text")
        seed = int.from_bytes(hashlib.sha256(key.encode("utf-8")).digest()[:8], "big")
        vec = np.random.default_rng(seed).standard_normal(self.dim)
        norm = np.linalg.norm(vec)
        if norm < 1e-12:  # astronomically unlikely, but cosine needs a nonzero vector
            vec[0] = 1.0
            norm = 1.0
        return vec / norm


class HttpEmbeddingBackend:
    """Remote embedder over HTTP POST {model, input} -> {vector}."""

    def __init__(
        self,
        endpoint: str,
        model_id: str,
        api_key: str | None = None,
        timeout: float = 60.0,
        session: requests.Session | None = None,
    ):
        self.endpoint = endpoint
        self.model_id = model_id
        self.api_key = api_key if api_key is not None else os.environ.get(EMBED_API_KEY_VAR)
        self.timeout = timeout
        self._session = session or requests.Session()

    def vector(self, item_id: str | None = None, text: str | None = None) -> np.ndarray:
        payload_text = text if text is not None else item_id
        if payload_text is None:
            raise JudgeError("remote embedding backend needs text or an id")
        headers = {"Content-Type": "application/json"}
        if self.api_key:
            headers["Authorization"] = f"Bearer {self.api_key}"
        try:
            resp = self._session.post(
                self.endpoint,
                json={"model": self.model_id, "input": payload_text},
                headers=headers,
                timeout=self.timeout,
            )
            resp.raise_for_status()
            data = resp.json()
        except requests.RequestException as exc:
            raise JudgeTransportError(f"embedding backend request failed: {exc}") from exc
        except ValueError as exc:
            raise JudgeTransportError(f"embedding backend returned non-JSON body: {exc}") from exc
        try:
            if "vector" in data:
                return np.asarray(data["vector"], dtype=np.float64)
            return np.asarray(data["data"][0]["embedding"], dtype=np.float64)
        except (KeyError, IndexError, TypeError) as exc:
            raise JudgeTransportError(f"unexpected embedding payload: {data!r}") from exc


def embed_text(
    backend, item: str, *, is_id: bool = False
) -> np.ndarray:
    """Embed an item through a backend, treating it as raw text by default."""
    if is_id:
        return backend.vector(item_id=item)
    return backend.vector(text=item)
