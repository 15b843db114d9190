"""Compile a configuration plus a task instance into final prompt text.

Prompt layout is instruction, then demonstrations, then the instance input.
Templates are editable text files with three sections ([instruction],
[example], [input]) and named slots; the shipped defaults carry the canonical
English instruction for each task. Components whose configured language is
not the language their material is written in go through the translator.
"""

from __future__ import annotations

from dataclasses import dataclass
from importlib import resources
from pathlib import Path

from .configspace import (
    ComponentLang,
    Configuration,
    ExamplesMode,
    LanguageInfo,
    TaskKind,
    language_display_name,
    load_language_registry,
)
from .corpus import NERPayload, NLIPayload, QAPayload, SUMPayload, TaskInstance
from .errors import ContractError
from .postproc import labels_to_spans
from .translation import TranslationCache, TranslationRequest, translate

ENGLISH = "en"


@dataclass(frozen=True)
class PromptTemplate:
    task: TaskKind
    instruction_text: str
    example_block_format: str
    context_block_format: str

    def __post_init__(self) -> None:
        slots = self.instruction_text.count("{output_language}")
        if self.task is TaskKind.NLI:
            if slots != 0:
                raise ContractError("the NLI instruction takes no output-language slot")
        elif slots != 1:
            raise ContractError(
                f"{self.task.value} instruction must contain exactly one output-language slot"
            )


@dataclass(frozen=True)
class CompiledPrompt:
    """Final prompt text with per-component character spans.

    Spans are half-open [start, end) character offsets into ``text``; the
    examples span is absent for zero-shot prompts.
    """

    text: str
    config: Configuration
    expected_output_lang: str
    component_spans: dict[str, tuple[int, int]]


def _parse_sections(raw: str) -> dict[str, str]:
    sections: dict[str, list[str]] = {}
    current: str | None = None
    for line in raw.splitlines():
        stripped = line.strip()
        if stripped.startswith("[") and stripped.endswith("]") and stripped[1:-1] in (
            "instruction",
            "example",
            "input",
        ):
            current = stripped[1:-1]
            sections[current] = []
            continue
        if current is not None:
            sections[current].append(line)
    return {name: "\n".join(lines).strip() for name, lines in sections.items()}


def load_template(task: TaskKind, path: str | Path | None = None) -> PromptTemplate:
    if path is None:
        raw = (
            resources.files("selprompt.data")
            .joinpath(f"templates/{task.value}.txt")
            .read_text("utf-8")
        )
    else:
        raw = Path(path).read_text(encoding="utf-8")
    sections = _parse_sections(raw)
    for required in ("instruction", "example", "input"):
        if required not in sections:
            raise ContractError(f"template for {task.value} lacks a [{required}] section")
    return PromptTemplate(task, sections["instruction"], sections["example"], sections["input"])


def canonical_instructions(task: TaskKind) -> str:
    """The shipped English instruction text for a task, slot included."""
    return load_template(task).instruction_text


def format_entities(entities: list[tuple[str, str]]) -> str:
    return repr([(t, s) for t, s in entities])


def _gold_entities(payload: NERPayload) -> list[tuple[str, str]]:
    spans = labels_to_spans(list(payload.tags))
    return [
        (span.type, " ".join(payload.tokens[span.start_token : span.end_token + 1]))
        for span in spans
    ]


class _Translator:
    """Tracks whether any call is made; identity requests never reach it."""

    def __init__(self, provider, cache: TranslationCache | None):
        self.provider = provider
        self.cache = cache

    def __call__(self, text: str, source: str, target: str) -> str:
        if source == target:
            return text
        if self.provider is None:
            raise ContractError(
                "this configuration requires translation but no translator was supplied"
            )
        return translate(TranslationRequest(text, source, target), self.provider, self.cache)


def _instance_fields(instance: TaskInstance, include_gold: bool) -> dict[str, str]:
    p = instance.payload
    if isinstance(p, QAPayload):
        fields = {"context": p.context, "question": p.question}
        if include_gold:
            fields["answer"] = p.answers[0]
        return fields
    if isinstance(p, NERPayload):
        fields = {"sentence": " ".join(p.tokens)}
        if include_gold:
            fields["entities"] = ""  # formatted separately, surfaces may be translated
        return fields
    if isinstance(p, NLIPayload):
        fields = {"premise": p.premise, "hypothesis": p.hypothesis}
        if include_gold:
            fields["label"] = p.label
        return fields
    assert isinstance(p, SUMPayload)
    fields = {"document": p.document}
    if include_gold:
        fields["summary"] = p.reference_summary
    return fields


def _render_demo(
    template: PromptTemplate,
    demo: TaskInstance,
    target_lang: str,
    source_lang: str,
    tr: _Translator,
) -> str:
    fields = _instance_fields(demo, include_gold=True)
    for name, value in fields.items():
        if name in ("label", "entities"):
            continue
        fields[name] = tr(value, source_lang, target_lang)
    if isinstance(demo.payload, NERPayload):
        entities = [
            (etype, tr(surface, source_lang, target_lang))
            for etype, surface in _gold_entities(demo.payload)
        ]
        fields["entities"] = format_entities(entities)
    # NLI labels stay the fixed English words in every configuration
    return template.example_block_format.format(**fields)


def compile(
    config: Configuration,
    instance: TaskInstance,
    demos: list[TaskInstance] | None = None,
    source_lang: str | None = None,
    translator=None,
    cache: TranslationCache | None = None,
    registry: dict[str, LanguageInfo] | None = None,
    template: PromptTemplate | None = None,
) -> CompiledPrompt:
    """Render the full prompt for one (configuration, instance) cell.

    Demonstrations must be supplied exactly when the configuration is
    few-shot, and must share the instance's language. Translation happens
    per component: the canonical English instruction is translated as a
    whole (output-language directive included), while context and
    demonstration fields are translated field by field.
    """
    demos = demos or []
    if config.is_zero_shot and demos:
        raise ContractError("zero-shot configuration but demonstrations were supplied")
    if not config.is_zero_shot and not demos:
        raise ContractError("few-shot configuration needs at least one demonstration")
    if config.task is not instance.task:
        raise ContractError(f"configuration is for {config.task.value}, instance is {instance.task.value}")
    source_lang = source_lang or instance.language
    for demo in demos:
        if demo.language != source_lang:
            raise ContractError("demonstrations must share the instance's language")
    if registry is None:
        registry = load_language_registry()
    tr = _Translator(translator, cache)
    if template is None:
        template = load_template(config.task)

    expected_output_lang = ENGLISH if config.output is ComponentLang.ENGLISH else source_lang
    output_language_name = language_display_name(expected_output_lang, registry)

    instruction = template.instruction_text
    if config.task is not TaskKind.NLI:
        instruction = instruction.format(output_language=output_language_name)
    if config.instruction is ComponentLang.SOURCE:
        instruction = tr(instruction, ENGLISH, source_lang)

    context_lang = ENGLISH if config.context is ComponentLang.ENGLISH else source_lang
    input_fields = _instance_fields(instance, include_gold=False)
    for name, value in input_fields.items():
        input_fields[name] = tr(value, source_lang, context_lang)
    input_block = template.context_block_format.format(**input_fields)

    demo_blocks: list[str] = []
    if demos:
        demo_lang = ENGLISH if config.examples is ExamplesMode.ENGLISH else source_lang
        demo_blocks = [_render_demo(template, demo, demo_lang, source_lang, tr) for demo in demos]

    parts: list[str] = []
    spans: dict[str, tuple[int, int]] = {}
    cursor = 0

    def append(name: str | None, chunk: str) -> None:
        nonlocal cursor
        if parts:
            parts.append("\n\n")
            cursor += 2
        start = cursor
        parts.append(chunk)
        cursor += len(chunk)
        if name is not None:
            spans[name] = (start, cursor)

    append("instruction", instruction)
    if demo_blocks:
        joined = "\n\n".join(demo_blocks)
        append("examples", joined)
    append("context", input_block)

    return CompiledPrompt(
        text="".join(parts),
        config=config,
        expected_output_lang=expected_output_lang,
        component_spans=spans,
    )
