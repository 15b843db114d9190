"""Languages, resource classes, and the space of prompt translation configurations.

A configuration assigns a language (source or English) to each of the four
prompt components: instruction, context, examples, and output. The examples
slot may also be absent entirely (zero-shot). Configurations are written as
four-letter codes over {S, E, Z} in component order, e.g. ``SSZE`` for a
zero-shot prompt with a source-language instruction and context and an
English output directive.
"""

from __future__ import annotations

import enum
import json
from dataclasses import dataclass
from importlib import resources
from pathlib import Path

from .errors import ConfigCodeError, DomainError, SchemaError, UnknownLanguageError


class TaskKind(str, enum.Enum):
    QA = "qa"
    NER = "ner"
    NLI = "nli"
    SUM = "sum"


class ComponentLang(str, enum.Enum):
    SOURCE = "S"
    ENGLISH = "E"


class ExamplesMode(str, enum.Enum):
    """Language of the demonstrations block; NONE means zero-shot."""

    SOURCE = "S"
    ENGLISH = "E"
    NONE = "Z"


class ResourceClass(str, enum.Enum):
    A = "A"  # high resource
    B = "B"  # medium resource
    C = "C"  # low resource
    D = "D"  # unrepresented

    @property
    def rank(self) -> int:
        return "ABCD".index(self.value)


# Canonical letter order used for sorting and enumeration.
_LETTER_ORDER = {"S": 0, "E": 1, "Z": 2}

COMPONENT_NAMES = ("instruction", "context", "examples", "output")


@dataclass(frozen=True)
class Configuration:
    """A per-component language assignment for one task's prompts.

    NLI has no free output slot: the model answers with a fixed label word,
    so the output language is bound to the instruction language.
    """

    task: TaskKind
    instruction: ComponentLang
    context: ComponentLang
    examples: ExamplesMode
    output: ComponentLang

    def __post_init__(self) -> None:
        if self.task is TaskKind.NLI and self.output.value != self.instruction.value:
            raise ConfigCodeError(
                "NLI output language is bound to the instruction language",
                slot="output",
            )

    @property
    def code(self) -> str:
        return (
            self.instruction.value
            + self.context.value
            + self.examples.value
            + self.output.value
        )

    @property
    def is_zero_shot(self) -> bool:
        return self.examples is ExamplesMode.NONE

    def sort_key(self) -> tuple[int, int, int, int]:
        return tuple(_LETTER_ORDER[ch] for ch in self.code)  # type: ignore[return-value]

    def __str__(self) -> str:
        return self.code


def enumerate_configurations(task: TaskKind, *, zero_shot_only: bool = False) -> list[Configuration]:
    """All valid configurations for a task, in canonical order.

    QA/NER/SUM have 24 (2 * 2 * 3 * 2); NLI has 12 because its output slot is
    bound to the instruction. ``zero_shot_only`` restricts to the
    examples-free subset (8, or 4 for NLI).
    """
    langs = (ComponentLang.SOURCE, ComponentLang.ENGLISH)
    modes = (ExamplesMode.SOURCE, ExamplesMode.ENGLISH, ExamplesMode.NONE)
    configs = []
    for instruction in langs:
        for context in langs:
            for examples in modes:
                if zero_shot_only and examples is not ExamplesMode.NONE:
                    continue
                if task is TaskKind.NLI:
                    outputs = (ComponentLang(instruction.value),)
                else:
                    outputs = langs
                for output in outputs:
                    configs.append(
                        Configuration(task, instruction, context, examples, output)
                    )
    configs.sort(key=Configuration.sort_key)
    return configs


def parse_config_code(code: str, task: TaskKind) -> Configuration:
    """Decode a configuration code; the inverse of ``Configuration.code``.

    NLI accepts three-letter codes (instruction, context, examples) since the
    output slot is implied; a four-letter NLI code must repeat the
    instruction letter in the output slot.
    """
    code = code.strip().upper()
    if task is TaskKind.NLI and len(code) == 3:
        code = code + code[0]
    if len(code) != 4:
        raise ConfigCodeError(
            f"configuration code must have 4 letters, got {code!r}"
        )
    for pos, (name, letter) in enumerate(zip(COMPONENT_NAMES, code)):
        allowed = "SEZ" if name == "examples" else "SE"
        if letter not in allowed:
            raise ConfigCodeError(
                f"invalid letter {letter!r} in {name} slot of {code!r}"
                f" (allowed: {', '.join(allowed)})",
                slot=name,
            )
    try:
        return Configuration(
            task,
            ComponentLang(code[0]),
            ComponentLang(code[1]),
            ExamplesMode(code[2]),
            ComponentLang(code[3]),
        )
    except ConfigCodeError:
        raise
    except ValueError as exc:  # pragma: no cover - guarded by the loop above
        raise ConfigCodeError(str(exc)) from exc


def classify_language(token_share: float) -> ResourceClass:
    """Resource class from the share of pre-training tokens, in percent.

    A: p >= 0.1, B: 0.01 < p < 0.1, C: 0 < p <= 0.01, D: p = 0.
    """
    if token_share < 0:
        raise DomainError(f"token share must be non-negative, got {token_share}")
    if token_share >= 0.1:
        return ResourceClass.A
    if token_share > 0.01:
        return ResourceClass.B
    if token_share > 0:
        return ResourceClass.C
    return ResourceClass.D


@dataclass(frozen=True)
class LanguageInfo:
    """Registry entry for one language.

    ``token_share`` is the percentage of pre-training tokens; it may be None
    for user-supplied languages, which must then declare ``resource_class``
    explicitly.
    """

    code: str
    name: str
    script: str
    token_share: float | None
    resource_class: ResourceClass

    def __post_init__(self) -> None:
        if self.token_share is not None:
            derived = classify_language(self.token_share)
            if derived is not self.resource_class:
                raise SchemaError(
                    f"language {self.code!r}: class {self.resource_class.value} does not"
                    f" match token share {self.token_share} (expected {derived.value})",
                    field="class",
                )


def _registry_record(obj: dict, index: int) -> LanguageInfo:
    for field in ("code", "name", "script", "class"):
        if field not in obj:
            raise SchemaError(f"language record missing {field!r}", index=index, field=field)
    share = obj.get("token_share_percent")
    try:
        cls = ResourceClass(obj["class"])
    except ValueError as exc:
        raise SchemaError(
            f"unknown resource class {obj['class']!r}", index=index, field="class"
        ) from exc
    if share is None and "token_share_percent" not in obj:
        raise UnknownLanguageError(
            f"language {obj['code']!r} has no token share; declare an explicit class"
            " with \"token_share_percent\": null"
        )
    return LanguageInfo(
        code=obj["code"],
        name=obj["name"],
        script=obj["script"],
        token_share=share,
        resource_class=cls,
    )


def load_language_registry(path: str | Path | None = None) -> dict[str, LanguageInfo]:
    """Load the language registry (JSON lines), keyed by language code.

    Without a path, the bundled registry ships the languages covered by the
    evaluation datasets together with their pre-training token shares.
    """
    if path is None:
        text = resources.files("selprompt.data").joinpath("languages.jsonl").read_text("utf-8")
    else:
        text = Path(path).read_text(encoding="utf-8")
    registry: dict[str, LanguageInfo] = {}
    for index, line in enumerate(text.splitlines()):
        line = line.strip()
        if not line:
            continue
        try:
            obj = json.loads(line)
        except json.JSONDecodeError as exc:
            raise SchemaError(f"invalid registry line: {exc}", index=index) from exc
        info = _registry_record(obj, index)
        registry[info.code] = info
    return registry


def load_reference_configurations() -> list[str]:
    """The bundled list of all 24 few/zero-shot configuration codes."""
    text = resources.files("selprompt.data").joinpath("all_configurations.txt").read_text("utf-8")
    return [line.strip() for line in text.splitlines() if line.strip()]


def language_display_name(code: str, registry: dict[str, LanguageInfo] | None = None) -> str:
    """English display name for a language code; falls back to the code."""
    if registry is None:
        registry = load_language_registry()
    info = registry.get(code)
    return info.name if info is not None else code
