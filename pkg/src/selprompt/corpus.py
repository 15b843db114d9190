"""Unified task instance model, dataset loading, and sampling.

Datasets are line-delimited JSON, one instance per line, with per-task
required fields. Converters from the public dataset formats live in
``selprompt.convert``.
"""

from __future__ import annotations

import json
import random
from dataclasses import dataclass, field
from pathlib import Path

from .configspace import TaskKind
from .errors import SchemaError, TagLengthError
from .postproc import validate_biose

NLI_LABELS = ("entailment", "contradiction", "neutral")


@dataclass(frozen=True)
class QAPayload:
    question: str
    context: str
    answers: tuple[str, ...]


@dataclass(frozen=True)
class NERPayload:
    tokens: tuple[str, ...]
    tags: tuple[str, ...]


@dataclass(frozen=True)
class NLIPayload:
    premise: str
    hypothesis: str
    label: str


@dataclass(frozen=True)
class SUMPayload:
    document: str
    reference_summary: str


Payload = QAPayload | NERPayload | NLIPayload | SUMPayload


@dataclass(frozen=True)
class TaskInstance:
    id: str
    language: str
    task: TaskKind
    payload: Payload

    def context_text(self) -> str:
        """The instance text that counts against the context length budget."""
        p = self.payload
        if isinstance(p, QAPayload):
            return p.context + " " + p.question
        if isinstance(p, NERPayload):
            return " ".join(p.tokens)
        if isinstance(p, NLIPayload):
            return p.premise + " " + p.hypothesis
        return p.document


@dataclass(frozen=True)
class SamplePolicy:
    """Bounds applied when drawing the evaluation sample."""

    max_instances: int = 250
    max_context_units: int = 16000

    def __post_init__(self) -> None:
        if self.max_instances <= 0 or self.max_context_units <= 0:
            raise ValueError("sample policy bounds must be strictly positive")


def _require(obj: dict, fields: tuple[str, ...], index: int) -> None:
    for name in fields:
        if name not in obj:
            raise SchemaError(f"record {index}: missing field {name!r}", index=index, field=name)


def _build_payload(obj: dict, task: TaskKind, index: int) -> Payload:
    if task is TaskKind.QA:
        _require(obj, ("question", "context", "answers"), index)
        answers = obj["answers"]
        if not isinstance(answers, list) or not answers:
            raise SchemaError(
                f"record {index}: answers must be a non-empty list", index=index, field="answers"
            )
        return QAPayload(str(obj["question"]), str(obj["context"]), tuple(str(a) for a in answers))
    if task is TaskKind.NER:
        _require(obj, ("tokens", "tags"), index)
        tokens = tuple(str(t) for t in obj["tokens"])
        tags = tuple(str(t) for t in obj["tags"])
        if len(tokens) != len(tags):
            raise TagLengthError(
                f"record {index}: {len(tokens)} tokens but {len(tags)} tags",
                index=index,
                field="tags",
            )
        try:
            validate_biose(tags)
        except ValueError as exc:
            raise SchemaError(f"record {index}: {exc}", index=index, field="tags") from exc
        return NERPayload(tokens, tags)
    if task is TaskKind.NLI:
        _require(obj, ("premise", "hypothesis", "label"), index)
        label = str(obj["label"]).lower()
        if label not in NLI_LABELS:
            raise SchemaError(
                f"record {index}: label {obj['label']!r} not one of {NLI_LABELS}",
                index=index,
                field="label",
            )
        return NLIPayload(str(obj["premise"]), str(obj["hypothesis"]), label)
    _require(obj, ("document", "reference_summary"), index)
    return SUMPayload(str(obj["document"]), str(obj["reference_summary"]))


def load_dataset(path: str | Path, task: TaskKind) -> list[TaskInstance]:
    """Load and validate a unified-schema dataset file, preserving order."""
    instances: list[TaskInstance] = []
    text = Path(path).read_text(encoding="utf-8")
    for index, line in enumerate(text.splitlines()):
        line = line.strip()
        if not line:
            continue
        try:
            obj = json.loads(line)
        except json.JSONDecodeError as exc:
            raise SchemaError(f"record {index}: invalid JSON ({exc})", index=index) from exc
        _require(obj, ("id", "language"), index)
        payload = _build_payload(obj, task, index)
        instances.append(TaskInstance(str(obj["id"]), str(obj["language"]), task, payload))
    return instances


def sample(
    instances: list[TaskInstance], policy: SamplePolicy, seed: int
) -> list[TaskInstance]:
    """Length-filter then draw a seeded uniform sample of up to max_instances.

    Deterministic for a fixed seed; may return fewer instances than requested.
    """
    fitting = [i for i in instances if len(i.context_text()) <= policy.max_context_units]
    if len(fitting) <= policy.max_instances:
        return list(fitting)
    rng = random.Random(seed)
    picked = sorted(rng.sample(range(len(fitting)), policy.max_instances))
    return [fitting[i] for i in picked]


def split_examples_pool(
    instances: list[TaskInstance], k: int, seed: int
) -> tuple[list[TaskInstance], list[TaskInstance]]:
    """Split off a k-instance demonstration pool; the remainder is evaluated.

    The two parts are disjoint and together cover the input. Raises when k
    would leave nothing to evaluate.
    """
    if k >= len(instances):
        raise ValueError(f"pool size {k} must be smaller than the dataset ({len(instances)})")
    if k < 0:
        raise ValueError("pool size must be non-negative")
    rng = random.Random(seed)
    pool_idx = set(rng.sample(range(len(instances)), k))
    pool = [inst for i, inst in enumerate(instances) if i in pool_idx]
    rest = [inst for i, inst in enumerate(instances) if i not in pool_idx]
    return pool, rest


def dataset_digest(path: str | Path) -> str:
    """Stable content hash used to bind run manifests to their inputs."""
    import hashlib

    return hashlib.sha256(Path(path).read_bytes()).hexdigest()
