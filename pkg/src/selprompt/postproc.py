"""Normalization and formatting of raw model output, per task.

Raw completions rarely arrive in the requested shape; the parsers here are
tolerant and record what went wrong instead of failing. Error classes follow
the taxonomy used in the sweep summaries: format inconsistency, extraneous
information, unwarranted refusal, and wrong-language output.
"""

from __future__ import annotations

import ast
import enum
import json
import re
import string
import unicodedata
from dataclasses import dataclass
from importlib import resources
from pathlib import Path
from typing import Callable

ENTITY_TYPES = frozenset({"PER", "ORG", "LOC"})

NLI_CANONICAL = ("entailment", "contradiction", "neutral")


class ErrorClass(str, enum.Enum):
    NONE = "none"
    FORMAT_INCONSISTENCY = "format_inconsistency"
    EXTRANEOUS_INFORMATION = "extraneous_information"
    UNWARRANTED_REFUSAL = "unwarranted_refusal"
    WRONG_LANGUAGE = "wrong_language"


@dataclass(frozen=True)
class EntitySpan:
    """Typed token span, inclusive on both ends."""

    type: str
    start_token: int
    end_token: int

    def __post_init__(self) -> None:
        if self.type not in ENTITY_TYPES:
            raise ValueError(f"unknown entity type {self.type!r}")
        if not 0 <= self.start_token <= self.end_token:
            raise ValueError(f"bad span bounds [{self.start_token}, {self.end_token}]")


@dataclass(frozen=True)
class NormalizedOutput:
    """Per-task normalized value plus what we learned while normalizing."""

    task: str
    value: object
    output_language_ok: bool | None
    error_class: ErrorClass


# ---------------------------------------------------------------------------
# BIOSE sequences


_TAG_RE = re.compile(r"^(?:O|[BIES]-(?:PER|ORG|LOC))$")


def validate_biose(tags: tuple[str, ...] | list[str]) -> None:
    """Raise ValueError unless ``tags`` is a well-formed BIOSE sequence."""
    open_type: str | None = None
    for i, tag in enumerate(tags):
        if not _TAG_RE.match(tag):
            raise ValueError(f"malformed tag {tag!r} at position {i}")
        if tag == "O" or tag.startswith("S-"):
            if open_type is not None:
                raise ValueError(f"unclosed span before position {i}")
            continue
        prefix, etype = tag.split("-", 1)
        if prefix == "B":
            if open_type is not None:
                raise ValueError(f"nested span start at position {i}")
            open_type = etype
        elif prefix == "I":
            if open_type != etype:
                raise ValueError(f"dangling {tag} at position {i}")
        else:  # E
            if open_type != etype:
                raise ValueError(f"dangling {tag} at position {i}")
            open_type = None
    if open_type is not None:
        raise ValueError("sequence ends inside an open span")


def labels_to_spans(tags: tuple[str, ...] | list[str]) -> list[EntitySpan]:
    """Decode a validated BIOSE sequence into typed spans."""
    validate_biose(tags)
    spans: list[EntitySpan] = []
    start = -1
    for i, tag in enumerate(tags):
        if tag == "O":
            continue
        prefix, etype = tag.split("-", 1)
        if prefix == "S":
            spans.append(EntitySpan(etype, i, i))
        elif prefix == "B":
            start = i
        elif prefix == "E":
            spans.append(EntitySpan(etype, start, i))
    return spans


def spans_to_labels(spans: list[EntitySpan], length: int) -> list[str]:
    """Encode non-overlapping spans as a BIOSE sequence of ``length`` tags."""
    tags = ["O"] * length
    for span in spans:
        if span.end_token >= length:
            raise ValueError(f"span {span} exceeds sequence length {length}")
        if any(tags[i] != "O" for i in range(span.start_token, span.end_token + 1)):
            raise ValueError(f"span {span} overlaps a previous span")
        if span.start_token == span.end_token:
            tags[span.start_token] = f"S-{span.type}"
        else:
            tags[span.start_token] = f"B-{span.type}"
            for i in range(span.start_token + 1, span.end_token):
                tags[i] = f"I-{span.type}"
            tags[span.end_token] = f"E-{span.type}"
    return tags


# ---------------------------------------------------------------------------
# QA answers

_ARTICLES_RE = re.compile(r"\b(a|an|the)\b")
_PUNCT_TABLE = str.maketrans("", "", string.punctuation)
_WRAPPER_PAIRS = [("[", "]"), ("(", ")"), ('"', '"'), ("'", "'"), ("«", "»")]


def _strip_wrappers(text: str) -> str:
    text = text.strip()
    changed = True
    while changed and len(text) >= 2:
        changed = False
        for left, right in _WRAPPER_PAIRS:
            if text.startswith(left) and text.endswith(right):
                text = text[len(left) : len(text) - len(right)].strip()
                changed = True
    return text


def normalize_qa(raw: str, *, strip_articles: bool = True) -> str:
    """Lowercase, strip punctuation and extra whitespace, drop wrappers.

    English articles are removed as standalone tokens; pass
    ``strip_articles=False`` when the gold language is not English.
    """
    text = _strip_wrappers(raw).lower()
    text = text.translate(_PUNCT_TABLE)
    if strip_articles:
        text = _ARTICLES_RE.sub(" ", text)
    return " ".join(text.split())


# ---------------------------------------------------------------------------
# NER output

_TUPLE_ITEM_RE = re.compile(
    r"\(\s*['\"]?(PER|ORG|LOC)['\"]?\s*[,:]\s*['\"]?([^'\")]+?)['\"]?\s*,?\s*\)",
    re.IGNORECASE,
)
_COLON_ITEM_RE = re.compile(r"\b(PER|ORG|LOC)\b\s*[:,]\s*([^\]\n'\",;]+)", re.IGNORECASE)
_REFUSAL_CUES = (
    "cannot",
    "can't",
    "unable",
    "refuse",
    "i will provide",
    "i will not",
    "not provided",
    "no answer",
    "sorry",
)


def _looks_like_refusal(text: str) -> bool:
    lowered = text.lower()
    return any(cue in lowered for cue in _REFUSAL_CUES)


def _entities_from_obj(obj: object) -> tuple[list[tuple[str, str]], bool] | None:
    """Entities from a literal-parsed value, plus whether the shape was canonical."""
    if not isinstance(obj, (list, tuple)):
        return None
    entities: list[tuple[str, str]] = []
    canonical = True
    for item in obj:
        if isinstance(item, (tuple, list)) and len(item) == 2:
            tag, surface = str(item[0]).strip().upper(), str(item[1]).strip()
            if tag not in ENTITY_TYPES and surface.upper() in ENTITY_TYPES:
                tag, surface = surface.upper(), str(item[0]).strip()
                canonical = False
            if tag in ENTITY_TYPES and surface:
                entities.append((tag, surface))
            else:
                canonical = False
        elif isinstance(item, str):
            canonical = False
            m = _COLON_ITEM_RE.search(item)
            if m:
                entities.append((m.group(1).upper(), m.group(2).strip()))
        else:
            canonical = False
    return entities, canonical


def _literal_parse(text: str) -> object | None:
    for parser in (ast.literal_eval, json.loads):
        try:
            return parser(text)
        except (ValueError, SyntaxError, MemoryError, RecursionError):
            continue
    return None


def _scrape_entities(text: str) -> list[tuple[str, str]]:
    found = [(m.group(1).upper(), m.group(2).strip()) for m in _TUPLE_ITEM_RE.finditer(text)]
    if not found:
        found = [
            (m.group(1).upper(), m.group(2).strip().strip("['\"]"))
            for m in _COLON_ITEM_RE.finditer(text)
        ]
    return [(t, s) for t, s in found if s]


def parse_ner(raw: str) -> tuple[list[tuple[str, str]], ErrorClass]:
    """Extract (type, surface) pairs from a raw NER completion.

    Accepts the canonical tuple list plus the deviant shapes models actually
    produce: string lists, one-entity-per-line output, leading labels, and
    trailing commentary. Never raises; the second element classifies whatever
    deviation was seen.
    """
    text = raw.strip()
    if not text:
        return [], ErrorClass.FORMAT_INCONSISTENCY

    parsed = _literal_parse(text)
    if parsed is not None:
        got = _entities_from_obj(parsed)
        if got is not None:
            entities, canonical = got
            return entities, ErrorClass.NONE if canonical else ErrorClass.FORMAT_INCONSISTENCY

    first = text.find("[")
    last = text.rfind("]")
    if first != -1 and last > first:
        prefix, region, suffix = text[:first], text[first : last + 1], text[last + 1 :]
        has_outside_prose = bool(re.search(r"\w", prefix)) or bool(re.search(r"\w", suffix))
        entities: list[tuple[str, str]] = []
        parsed_region = _literal_parse(region)
        if parsed_region is not None:
            got = _entities_from_obj(parsed_region)
            if got is not None:
                entities = got[0]
        if not entities:
            entities = _scrape_entities(region)
        if has_outside_prose:
            return entities, ErrorClass.EXTRANEOUS_INFORMATION
        return entities, ErrorClass.FORMAT_INCONSISTENCY

    scraped = _scrape_entities(text)
    if scraped:
        return scraped, ErrorClass.FORMAT_INCONSISTENCY
    if _looks_like_refusal(text):
        return [], ErrorClass.UNWARRANTED_REFUSAL
    return [], ErrorClass.FORMAT_INCONSISTENCY


def _is_latin(text: str) -> bool:
    return all(
        unicodedata.name(ch, "").startswith("LATIN") for ch in text if ch.isalpha()
    )


def _fold(text: str) -> str:
    text = " ".join(text.split())
    return text.lower() if _is_latin(text) else text


def project_biose(
    tokens: tuple[str, ...] | list[str], entities: list[tuple[str, str]]
) -> tuple[list[str], int]:
    """Locate entity surfaces in the token sequence and emit BIOSE tags.

    Each surface claims its first unconsumed left-to-right match; matching is
    whitespace-normalized, case-insensitive for Latin text only. Returns the
    tag sequence and the number of entities that could not be placed.
    """
    n = len(tokens)
    folded = [_fold(t) for t in tokens]
    taken = [False] * n
    spans: list[EntitySpan] = []
    dropped = 0
    for etype, surface in entities:
        if etype not in ENTITY_TYPES:
            dropped += 1
            continue
        placed = _find_span(folded, taken, _fold(surface))
        if placed is None:
            dropped += 1
            continue
        start, end = placed
        for i in range(start, end + 1):
            taken[i] = True
        spans.append(EntitySpan(etype, start, end))
    return spans_to_labels(spans, n), dropped


def _find_span(folded: list[str], taken: list[bool], surface: str) -> tuple[int, int] | None:
    words = surface.split()
    if not words:
        return None
    n = len(folded)
    for start in range(n - len(words) + 1):
        if folded[start : start + len(words)] == words and not any(
            taken[start : start + len(words)]
        ):
            return start, start + len(words) - 1
    # scripts without word delimiters: match a token run by concatenation
    compact = surface.replace(" ", "")
    for start in range(n):
        if taken[start]:
            continue
        glued = ""
        for end in range(start, n):
            if taken[end]:
                break
            glued += folded[end]
            if glued == compact:
                return start, end
            if len(glued) > len(compact):
                break
    return None


# ---------------------------------------------------------------------------
# NLI labels


def load_nli_lexicon(path: str | Path | None = None) -> dict[str, str]:
    """Variant-to-canonical label map, flattened across languages."""
    if path is None:
        text = resources.files("selprompt.data").joinpath("nli_labels.jsonl").read_text("utf-8")
    else:
        text = Path(path).read_text(encoding="utf-8")
    lexicon: dict[str, str] = {}
    for line in text.splitlines():
        line = line.strip()
        if not line:
            continue
        obj = json.loads(line)
        lexicon[str(obj["variant"]).lower()] = str(obj["canonical"]).lower()
    return lexicon


def normalize_nli(
    raw: str, label_lexicon: dict[str, str] | None = None
) -> tuple[str | None, ErrorClass]:
    """Pick the first recognized label word out of a raw NLI completion.

    English canonical labels win outright; lexicon variants map to their
    canonical label but are flagged as wrong-language output. No label at all
    is a format inconsistency and scores as incorrect.
    """
    if label_lexicon is None:
        label_lexicon = load_nli_lexicon()
    words = [w.strip(string.punctuation).lower() for w in raw.split()]
    words = [w for w in words if w]
    for word in words:
        if word in NLI_CANONICAL:
            exact = len(words) == 1
            return word, ErrorClass.NONE if exact else ErrorClass.EXTRANEOUS_INFORMATION
    for word in words:
        if word in label_lexicon:
            return label_lexicon[word], ErrorClass.WRONG_LANGUAGE
    return None, ErrorClass.FORMAT_INCONSISTENCY


# ---------------------------------------------------------------------------
# Summaries


def load_summary_prefixes(path: str | Path | None = None) -> list[str]:
    if path is None:
        text = resources.files("selprompt.data").joinpath("summary_prefixes.txt").read_text("utf-8")
    else:
        text = Path(path).read_text(encoding="utf-8")
    return [line.strip() for line in text.splitlines() if line.strip()]


def normalize_sum(raw: str, prefix_lexicon: list[str] | None = None) -> str:
    """Strip any leading summary prefix ("The Summary:", "Resumo:", ...)."""
    if prefix_lexicon is None:
        prefix_lexicon = load_summary_prefixes()
    text = raw.strip()
    stripped = True
    while stripped:
        stripped = False
        lowered = text.lower()
        for prefix in prefix_lexicon:
            if lowered.startswith(prefix.lower()):
                text = text[len(prefix) :].strip()
                stripped = True
                break
    return text


# ---------------------------------------------------------------------------
# Output language checking

_SCRIPT_PREFIXES = (
    ("LATIN", "Latin"),
    ("CYRILLIC", "Cyrillic"),
    ("GREEK", "Greek"),
    ("ARABIC", "Arabic"),
    ("HEBREW", "Hebrew"),
    ("DEVANAGARI", "Devanagari"),
    ("BENGALI", "Bengali"),
    ("MALAYALAM", "Malayalam"),
    ("TELUGU", "Telugu"),
    ("TAMIL", "Tamil"),
    ("KANNADA", "Kannada"),
    ("GUJARATI", "Gujarati"),
    ("THAI", "Thai"),
    ("HANGUL", "Hangul"),
    ("HIRAGANA", "Hiragana"),
    ("KATAKANA", "Katakana"),
    ("CJK", "Han"),
)

# expected registry script -> acceptable dominant scripts
_COMPATIBLE = {
    "Japanese": {"Han", "Hiragana", "Katakana"},
}


def _char_script(ch: str) -> str | None:
    if not ch.isalpha():
        return None
    name = unicodedata.name(ch, "")
    for prefix, bucket in _SCRIPT_PREFIXES:
        if name.startswith(prefix):
            return bucket
    return None


def dominant_script(text: str) -> str | None:
    """Majority script over alphabetic characters; None when there are none.

    Exact ties resolve to the alphabetically first script name, so the result
    is deterministic.
    """
    counts: dict[str, int] = {}
    for ch in text:
        bucket = _char_script(ch)
        if bucket:
            counts[bucket] = counts.get(bucket, 0) + 1
    if not counts:
        return None
    return min(counts, key=lambda b: (-counts[b], b))


def check_output_language(
    text: str,
    expected_lang: str,
    detector: Callable[[str], str | None] | None = None,
    registry: dict | None = None,
) -> bool | None:
    """True iff the text's detected script is compatible with the language.

    Returns None (indeterminate) for empty or script-free text; callers count
    that state separately. The default detector is the majority-script
    heuristic; plug in a real language identifier for finer judgments.
    """
    from .configspace import load_language_registry

    if detector is None:
        detector = dominant_script
    detected = detector(text)
    if detected is None:
        return None
    if registry is None:
        registry = load_language_registry()
    info = registry.get(expected_lang)
    if info is None:
        return None
    accepted = _COMPATIBLE.get(info.script, {info.script})
    return detected in accepted
