"""Analyses over result tables: binning, rule mining, optima, and gaps.

A result table holds one mean score per (task, model, language,
configuration). From it we derive score bins, mine association rules between
component-language choices and score bins, extract top configurations and
their improvement over the direct-inference and full pre-translation
baselines, and compute per-component performance gaps.
"""

from __future__ import annotations

import csv
import math
from collections import Counter
from dataclasses import dataclass, field
from itertools import combinations
from pathlib import Path
from typing import Iterable, Sequence

from .configspace import (
    COMPONENT_NAMES,
    Configuration,
    LanguageInfo,
    TaskKind,
    enumerate_configurations,
    parse_config_code,
)
from .errors import (
    DomainError,
    MissingConfigsError,
    UndefinedImprovementError,
)
from .metrics import CorrelationResult, Metric, Score, bleu, chrf, pearson, point_biserial, rouge, tokenizer_for

DIRECT_INFERENCE_CODE = "SSZS"
PRE_TRANSLATION_CODE = "EEEE"


@dataclass(frozen=True)
class ResultRow:
    task: str
    model: str
    language: str
    config_code: str
    score: float

    def key(self) -> tuple[str, str, str, str]:
        return (self.task, self.model, self.language, self.config_code)


class ResultTable:
    """Immutable collection of scored rows with unique keys."""

    def __init__(self, rows: Iterable[ResultRow]):
        rows = list(rows)
        seen: set[tuple[str, str, str, str]] = set()
        for row in rows:
            if not math.isfinite(row.score):
                raise DomainError(f"non-finite score for {row.key()}")
            if row.key() in seen:
                raise DomainError(f"duplicate result row for {row.key()}")
            seen.add(row.key())
        self.rows: tuple[ResultRow, ...] = tuple(rows)
        self._index = {row.key(): row for row in self.rows}

    def __len__(self) -> int:
        return len(self.rows)

    def __iter__(self):
        return iter(self.rows)

    def get(self, task: str, model: str, language: str, config_code: str) -> ResultRow | None:
        return self._index.get((task, model, language, config_code))

    def filter(self, task: str | None = None, model: str | None = None,
               language: str | None = None) -> "ResultTable":
        return ResultTable(
            row
            for row in self.rows
            if (task is None or row.task == task)
            and (model is None or row.model == model)
            and (language is None or row.language == language)
        )

    def tasks(self) -> list[str]:
        return sorted({row.task for row in self.rows})

    def models(self) -> list[str]:
        return sorted({row.model for row in self.rows})

    def languages(self) -> list[str]:
        return sorted({row.language for row in self.rows})

    @classmethod
    def from_csv(cls, path: str | Path) -> "ResultTable":
        rows = []
        with open(path, newline="", encoding="utf-8") as fh:
            for record in csv.DictReader(fh):
                rows.append(
                    ResultRow(
                        task=record["task"],
                        model=record["model"],
                        language=record["language"],
                        config_code=record["config_code"].strip().upper(),
                        score=float(record["score"]),
                    )
                )
        return cls(rows)

    def to_csv(self, path: str | Path) -> None:
        with open(path, "w", newline="", encoding="utf-8") as fh:
            writer = csv.writer(fh)
            writer.writerow(["task", "model", "language", "config_code", "score"])
            for row in self.rows:
                writer.writerow([row.task, row.model, row.language, row.config_code, row.score])


def load_bundled_results(name: str) -> ResultTable:
    """One of the shipped benchmark fixtures (qa_xquad, qa_indicqa, ...)."""
    from importlib import resources

    ref = resources.files("selprompt.data").joinpath(f"results/{name}.csv")
    with resources.as_file(ref) as path:
        return ResultTable.from_csv(path)


def merge_tables(*tables: ResultTable) -> ResultTable:
    rows: list[ResultRow] = []
    for table in tables:
        rows.extend(table.rows)
    return ResultTable(rows)


# ---------------------------------------------------------------------------
# Score binning

BINS = ("low", "medium", "high")


def nearest_rank(sorted_values: Sequence[float], percentile: float) -> float:
    """The ceil(p*n)-th order statistic, 1-indexed."""
    if not sorted_values:
        raise DomainError("cannot take a percentile of nothing")
    rank = math.ceil(percentile / 100.0 * len(sorted_values))
    rank = max(1, min(rank, len(sorted_values)))
    return sorted_values[rank - 1]


def bin_scores(
    table: ResultTable, low_pct: float = 30, high_pct: float = 60
) -> dict[tuple[str, str, str, str], str]:
    """Assign each row a low/medium/high bin within its score column.

    Columns are the (task, model, language) groups; boundaries are the
    nearest-rank percentiles of each column. Scores below the low boundary
    are "low", below the high boundary "medium", and "high" otherwise, so a
    constant column lands entirely in "high".
    """
    if len(table) == 0:
        raise DomainError("cannot bin an empty table")
    groups: dict[tuple[str, str, str], list[ResultRow]] = {}
    for row in table:
        groups.setdefault((row.task, row.model, row.language), []).append(row)
    bins: dict[tuple[str, str, str, str], str] = {}
    for group_key, rows in groups.items():
        if len(rows) < 3:
            raise DomainError(f"group {group_key} has fewer than 3 rows; cannot bin")
        ordered = sorted(r.score for r in rows)
        p_low = nearest_rank(ordered, low_pct)
        p_high = nearest_rank(ordered, high_pct)
        for row in rows:
            if row.score < p_low:
                bins[row.key()] = "low"
            elif row.score < p_high:
                bins[row.key()] = "medium"
            else:
                bins[row.key()] = "high"
    return bins


# ---------------------------------------------------------------------------
# Association rules

Transaction = frozenset[str]


def make_transaction(**attributes: str) -> Transaction:
    return frozenset(f"{name}={value}" for name, value in attributes.items())


@dataclass(frozen=True)
class Rule:
    antecedent: frozenset[str]
    consequent: frozenset[str]
    support: float
    confidence: float

    def __post_init__(self) -> None:
        if self.antecedent & self.consequent:
            raise DomainError("rule sides must be disjoint")

    def sort_key(self):
        return (-self.confidence, -self.support, tuple(sorted(self.antecedent)),
                tuple(sorted(self.consequent)))


@dataclass(frozen=True)
class MiningProfile:
    """Named threshold preset for rule mining."""

    name: str
    min_support: float
    min_confidence: float


# "broad" mirrors the exploratory filtering; "strict" the headline one.
MINING_PROFILES = {
    "broad": MiningProfile("broad", 0.05, 0.75),
    "strict": MiningProfile("strict", 0.15, 0.8),
}


def frequent_itemsets(
    transactions: Sequence[Transaction], min_support: float
) -> dict[frozenset[str], float]:
    """All itemsets with support >= min_support, by level-wise growth.

    Candidate k-itemsets are built from frequent (k-1)-itemsets and pruned by
    downward closure before counting.
    """
    if not transactions:
        raise DomainError("no transactions to mine")
    if not 0 < min_support <= 1:
        raise DomainError("min_support must be in (0, 1]")
    n = len(transactions)
    counts: Counter[frozenset[str]] = Counter()
    for t in transactions:
        for item in t:
            counts[frozenset((item,))] += 1
    frequent: dict[frozenset[str], float] = {
        items: c / n for items, c in counts.items() if c / n >= min_support
    }
    current = [s for s in frequent]
    k = 2
    while current:
        candidate_pool: set[frozenset[str]] = set()
        for a, b in combinations(current, 2):
            union = a | b
            if len(union) == k:
                candidate_pool.add(union)
        candidates = [
            c
            for c in candidate_pool
            if all(frozenset(sub) in frequent for sub in combinations(c, k - 1))
        ]
        if not candidates:
            break
        level_counts: Counter[frozenset[str]] = Counter()
        for t in transactions:
            for c in candidates:
                if c <= t:
                    level_counts[c] += 1
        next_level = [c for c in candidates if level_counts[c] / n >= min_support]
        for c in next_level:
            frequent[c] = level_counts[c] / n
        current = next_level
        k += 1
    return frequent


def apriori(
    transactions: Sequence[Transaction],
    min_support: float = 0.05,
    min_confidence: float = 0.75,
) -> list[Rule]:
    """All rules meeting the support and confidence thresholds.

    support(A -> C) is the support of A ∪ C; confidence is
    support(A ∪ C) / support(A). Returned rules are sorted by confidence,
    then support, then items, so output order is stable.
    """
    if not 0 < min_confidence <= 1:
        raise DomainError("min_confidence must be in (0, 1]")
    frequent = frequent_itemsets(transactions, min_support)
    rules: list[Rule] = []
    for itemset, support in frequent.items():
        if len(itemset) < 2:
            continue
        items = sorted(itemset)
        for r in range(1, len(items)):
            for antecedent_items in combinations(items, r):
                antecedent = frozenset(antecedent_items)
                confidence = support / frequent[antecedent]
                if confidence >= min_confidence:
                    rules.append(Rule(antecedent, itemset - antecedent, support, confidence))
    rules.sort(key=Rule.sort_key)
    return rules


def build_transactions(
    table: ResultTable,
    registry: dict[str, LanguageInfo],
    bins: dict[tuple[str, str, str, str], str] | None = None,
    low_pct: float = 30,
    high_pct: float = 60,
) -> list[Transaction]:
    """One transaction per result row: component items, resource class, bin."""
    if bins is None:
        bins = bin_scores(table, low_pct, high_pct)
    transactions = []
    for row in table:
        info = registry.get(row.language)
        if info is None:
            raise DomainError(f"language {row.language!r} is not in the registry")
        code = row.config_code
        transactions.append(
            make_transaction(
                instruction=code[0],
                context=code[1],
                examples=code[2],
                output=code[3],
                cls=info.resource_class.value,
                score_bin=bins[row.key()],
            )
        )
    return transactions


# ---------------------------------------------------------------------------
# Top configurations and baselines


def _config_order_key(task: TaskKind, code: str):
    return parse_config_code(code, task).sort_key()


def top_configuration(
    table: ResultTable,
    language: str,
    model: str,
    task: str | None = None,
    require_complete: bool = True,
) -> tuple[Configuration, float]:
    """Best-scoring configuration for a (task, language, model) key.

    Ties break toward the canonically first configuration. With
    ``require_complete`` (the default), missing configurations are an error
    listing the absent codes; pass False for tables with known gaps.
    """
    if task is None:
        tasks = table.tasks()
        if len(tasks) != 1:
            raise DomainError(f"table holds tasks {tasks}; specify one")
        task = tasks[0]
    kind = TaskKind(task)
    subset = [r for r in table if r.task == task and r.language == language and r.model == model]
    if not subset:
        raise MissingConfigsError(
            f"no rows for ({task}, {language}, {model})",
            missing=[c.code for c in enumerate_configurations(kind)],
        )
    if require_complete:
        present = {r.config_code for r in subset}
        missing = [c.code for c in enumerate_configurations(kind) if c.code not in present]
        if missing:
            raise MissingConfigsError(
                f"({task}, {language}, {model}) lacks configurations: {', '.join(missing)}",
                missing=missing,
            )
    best = min(subset, key=lambda r: (-r.score, _config_order_key(kind, r.config_code)))
    return parse_config_code(best.config_code, kind), best.score


def improvement_over_baselines(
    table: ResultTable,
    language: str,
    model: str,
    task: str | None = None,
    direct_code: str = DIRECT_INFERENCE_CODE,
    pretranslate_code: str = PRE_TRANSLATION_CODE,
    require_complete: bool = True,
) -> dict[str, float]:
    """Relative improvement (%) of the top configuration over both baselines."""
    config, top = top_configuration(table, language, model, task, require_complete)
    task_name = config.task.value
    if config.task is TaskKind.NLI:
        direct_code = parse_config_code(direct_code[:3], TaskKind.NLI).code
        pretranslate_code = parse_config_code(pretranslate_code[:3], TaskKind.NLI).code
    out: dict[str, float] = {"top_score": top}
    for name, code in (("vs_direct", direct_code), ("vs_pretranslate", pretranslate_code)):
        row = table.get(task_name, model, language, code)
        if row is None:
            raise MissingConfigsError(
                f"baseline {code} missing for ({task_name}, {language}, {model})", missing=[code]
            )
        if row.score == 0:
            raise UndefinedImprovementError(
                f"baseline {code} scored 0 for ({task_name}, {language}, {model})"
            )
        out[name] = 100.0 * (top - row.score) / row.score
    return out


# ---------------------------------------------------------------------------
# Performance gap


@dataclass(frozen=True)
class GapReport:
    component: str
    mean_gap: float
    k: int


def performance_gap(
    table: ResultTable,
    component: str,
    task: str | None = None,
    model: str | None = None,
    language: str | None = None,
) -> GapReport:
    """Mean English-minus-source score difference over matched config pairs.

    Pairs differ only in the given component and are matched within each
    (task, model, language) group. Only few-shot configurations pair up, so
    a complete 24-configuration group contributes 8 pairs per component.
    """
    if component not in COMPONENT_NAMES:
        raise DomainError(f"unknown component {component!r}")
    pos = COMPONENT_NAMES.index(component)
    subset = table.filter(task=task, model=model, language=language)
    groups: dict[tuple[str, str, str], dict[str, float]] = {}
    for row in subset:
        groups.setdefault((row.task, row.model, row.language), {})[row.config_code] = row.score
    diffs: list[float] = []
    for scores in groups.values():
        for code, value in scores.items():
            if code[2] == "Z":  # zero-shot rows have no pairable examples slot
                continue
            if code[pos] != "E":
                continue
            twin = code[:pos] + "S" + code[pos + 1 :]
            if twin in scores:
                diffs.append(value - scores[twin])
    if not diffs:
        raise DomainError(f"no config pairs differ only in {component}")
    return GapReport(component, sum(diffs) / len(diffs), len(diffs))


# ---------------------------------------------------------------------------
# Per-instance component correlation


def component_correlation(
    records: Sequence[tuple[str, float]], component: str
) -> CorrelationResult:
    """Point-biserial correlation between a component's language and scores.

    ``records`` holds (config_code, instance_score) pairs. The binary
    indicator is 1 when the component is in the source language, so positive
    coefficients favor the source language. Zero-shot records are excluded
    when correlating the examples slot.
    """
    if component not in COMPONENT_NAMES:
        raise DomainError(f"unknown component {component!r}")
    pos = COMPONENT_NAMES.index(component)
    binary: list[int] = []
    scores: list[float] = []
    for code, value in records:
        letter = code[pos].upper()
        if letter == "Z":
            continue
        binary.append(1 if letter == "S" else 0)
        scores.append(value)
    return point_biserial(binary, scores)


# ---------------------------------------------------------------------------
# Translation-quality study


@dataclass(frozen=True)
class MtQualityReport:
    per_language: dict[str, dict[str, float]]
    similarity_correlation: CorrelationResult


def mt_quality_study(
    pairs: Sequence[dict],
    similarity: dict[str, float],
    include_bleu: bool = False,
    include_chrf: bool = False,
) -> MtQualityReport:
    """Per-language translation quality and its correlation with similarity.

    Each pair is {hypothesis, reference, language}; quality is the mean
    ROUGE-1 against the reference, optionally alongside corpus BLEU and mean
    chrF. The correlation pairs each language's similarity-to-English value
    with its ROUGE-1 quality.
    """
    by_language: dict[str, list[dict]] = {}
    for pair in pairs:
        by_language.setdefault(pair["language"], []).append(pair)
    for language in by_language:
        if language not in similarity:
            raise DomainError(f"no similarity entry for language {language!r}")
    per_language: dict[str, dict[str, float]] = {}
    for language in sorted(by_language):
        items = by_language[language]
        tokenizer = tokenizer_for(language)
        rouge_scores = [
            rouge(p["hypothesis"], p["reference"], 1, tokenizer).value for p in items
        ]
        stats = {"rouge1": sum(rouge_scores) / len(rouge_scores), "n": float(len(items))}
        if include_bleu:
            stats["bleu"] = bleu(
                [p["hypothesis"] for p in items], [p["reference"] for p in items]
            ).value
        if include_chrf:
            stats["chrf"] = sum(
                chrf(p["hypothesis"], p["reference"]).value for p in items
            ) / len(items)
        per_language[language] = stats
    languages = sorted(per_language)
    if len(languages) < 2:
        raise DomainError("need at least two languages to correlate")
    sims = [similarity[lang] for lang in languages]
    quals = [per_language[lang]["rouge1"] for lang in languages]
    if len(languages) == 2:
        # two points define the coefficient exactly; the test is uninformative
        ds = sims[1] - sims[0]
        dq = quals[1] - quals[0]
        if ds == 0 or dq == 0:
            raise DomainError("two-language correlation is degenerate")
        corr = CorrelationResult(1.0 if ds * dq > 0 else -1.0, 1.0, 2)
    else:
        corr = pearson(sims, quals)
    return MtQualityReport(per_language, corr)


def load_similarity_file(path: str | Path) -> dict[str, float]:
    """Two-column text file: language code, similarity in [0, 1]."""
    similarity: dict[str, float] = {}
    for line in Path(path).read_text(encoding="utf-8").splitlines():
        line = line.strip()
        if not line or line.startswith("#"):
            continue
        code, value = line.split()
        similarity[code] = float(value)
    return similarity
