"""Scoring functions: token/entity F1, ROUGE, BLEU, chrF, and correlations.

All scores live in [0, 1]; presentation layers may scale by 100. Correlation
p-values come from a two-sided Student-t test with n-2 degrees of freedom,
computed via the regularized incomplete beta function.
"""

from __future__ import annotations

import enum
import math
from collections import Counter
from dataclasses import dataclass
from importlib import resources
from pathlib import Path
from typing import Callable, Sequence

from .errors import ContractError, DomainError, UndefinedCorrelationError
from .postproc import labels_to_spans


class Metric(str, enum.Enum):
    TOKEN_F1 = "token_f1"
    ENTITY_F1 = "entity_f1"
    ACCURACY = "accuracy"
    ROUGE1 = "rouge1"
    ROUGE2 = "rouge2"
    ROUGEL = "rougeL"
    BLEU = "bleu"
    CHRF = "chrf"


@dataclass(frozen=True)
class Score:
    value: float
    metric: Metric

    def __post_init__(self) -> None:
        if not -1e-12 <= self.value <= 1 + 1e-12:
            raise ValueError(f"score {self.value} outside [0, 1]")


@dataclass(frozen=True)
class CorrelationResult:
    coefficient: float
    p_value: float
    n: int


def _f1(precision: float, recall: float) -> float:
    if precision + recall == 0:
        return 0.0
    return 2 * precision * recall / (precision + recall)


# ---------------------------------------------------------------------------
# Token-level F1 (extractive QA)


def token_f1(pred: str, golds: Sequence[str]) -> Score:
    """Bag-of-tokens F1 against each gold answer; the best gold counts.

    Inputs are expected to be normalized already. Two empty strings agree
    perfectly; an empty prediction against a non-empty gold scores zero.
    """
    if not golds:
        raise DomainError("token_f1 needs at least one gold answer")
    best = 0.0
    pred_tokens = pred.split()
    for gold in golds:
        gold_tokens = gold.split()
        if not pred_tokens or not gold_tokens:
            best = max(best, float(pred_tokens == gold_tokens))
            continue
        common = Counter(pred_tokens) & Counter(gold_tokens)
        same = sum(common.values())
        if same == 0:
            continue
        best = max(best, _f1(same / len(pred_tokens), same / len(gold_tokens)))
    return Score(best, Metric.TOKEN_F1)


# ---------------------------------------------------------------------------
# Entity-level F1 (NER)


def entity_f1(pred_labels: Sequence[str], gold_labels: Sequence[str]) -> Score:
    """Micro F1 over exact (type, start, end) span matches."""
    if len(pred_labels) != len(gold_labels):
        raise ContractError(
            f"label sequences differ in length: {len(pred_labels)} vs {len(gold_labels)}"
        )
    pred_spans = set(labels_to_spans(list(pred_labels)))
    gold_spans = set(labels_to_spans(list(gold_labels)))
    if not pred_spans and not gold_spans:
        return Score(1.0, Metric.ENTITY_F1)
    if not pred_spans or not gold_spans:
        return Score(0.0, Metric.ENTITY_F1)
    hit = len(pred_spans & gold_spans)
    return Score(_f1(hit / len(pred_spans), hit / len(gold_spans)), Metric.ENTITY_F1)


# ---------------------------------------------------------------------------
# ROUGE


def whitespace_tokenizer(text: str) -> list[str]:
    return text.split()


def character_tokenizer(text: str) -> list[str]:
    return [ch for ch in text if not ch.isspace()]


_CHAR_SCRIPTS = {"Han", "Japanese", "Thai", "Hiragana", "Katakana"}


def load_tokenizer_overrides(path: str | Path | None = None) -> dict[str, str]:
    if path is None:
        text = resources.files("selprompt.data").joinpath("tokenizer_overrides.txt").read_text("utf-8")
    else:
        text = Path(path).read_text(encoding="utf-8")
    overrides: dict[str, str] = {}
    for line in text.splitlines():
        line = line.strip()
        if not line or line.startswith("#"):
            continue
        code, policy = line.split()
        overrides[code] = policy
    return overrides


def tokenizer_for(
    language: str,
    overrides: dict[str, str] | None = None,
    registry: dict | None = None,
) -> Callable[[str], list[str]]:
    """Whitespace tokenizer for space-delimited scripts, characters otherwise."""
    if overrides is None:
        overrides = load_tokenizer_overrides()
    policy = overrides.get(language)
    if policy is None:
        if registry is None:
            from .configspace import load_language_registry

            registry = load_language_registry()
        info = registry.get(language)
        policy = "char" if info is not None and info.script in _CHAR_SCRIPTS else "whitespace"
    return character_tokenizer if policy == "char" else whitespace_tokenizer


def _ngrams(tokens: list[str], n: int) -> Counter:
    return Counter(tuple(tokens[i : i + n]) for i in range(len(tokens) - n + 1))


def _lcs_length(a: list[str], b: list[str]) -> int:
    if not a or not b:
        return 0
    prev = [0] * (len(b) + 1)
    for x in a:
        cur = [0]
        for j, y in enumerate(b, start=1):
            cur.append(prev[j - 1] + 1 if x == y else max(prev[j], cur[j - 1]))
        prev = cur
    return prev[-1]


def rouge(
    pred: str,
    ref: str,
    variant: int | str = 1,
    tokenizer: Callable[[str], list[str]] | None = None,
) -> Score:
    """ROUGE F-measure: n-gram overlap for variants 1/2, LCS for variant L."""
    if tokenizer is None:
        tokenizer = whitespace_tokenizer
    pred_tokens = tokenizer(pred)
    ref_tokens = tokenizer(ref)
    variant_key = str(variant).upper()
    metric = {"1": Metric.ROUGE1, "2": Metric.ROUGE2, "L": Metric.ROUGEL}.get(variant_key)
    if metric is None:
        raise DomainError(f"unknown ROUGE variant {variant!r}")
    if not pred_tokens and not ref_tokens:
        return Score(1.0, metric)
    if not pred_tokens or not ref_tokens:
        return Score(0.0, metric)
    if variant_key == "L":
        lcs = _lcs_length(pred_tokens, ref_tokens)
        return Score(_f1(lcs / len(pred_tokens), lcs / len(ref_tokens)), metric)
    n = int(variant_key)
    pred_grams = _ngrams(pred_tokens, n)
    ref_grams = _ngrams(ref_tokens, n)
    total_pred = sum(pred_grams.values())
    total_ref = sum(ref_grams.values())
    if total_pred == 0 or total_ref == 0:
        return Score(float(total_pred == total_ref), metric)
    overlap = sum((pred_grams & ref_grams).values())
    return Score(_f1(overlap / total_pred, overlap / total_ref), metric)


# ---------------------------------------------------------------------------
# BLEU


def _bleu_stats(candidate: list[str], reference: list[str], max_n: int):
    clipped = [0] * max_n
    totals = [0] * max_n
    for n in range(1, max_n + 1):
        cand_grams = _ngrams(candidate, n)
        ref_grams = _ngrams(reference, n)
        totals[n - 1] = sum(cand_grams.values())
        clipped[n - 1] = sum((cand_grams & ref_grams).values())
    return clipped, totals


def bleu(candidates: Sequence[str], references: Sequence[str], max_n: int = 4) -> Score:
    """Corpus BLEU: geometric mean of modified n-gram precisions times the
    brevity penalty. Unsmoothed, so a zero precision at any order zeroes the
    score."""
    if not candidates or len(candidates) != len(references):
        raise DomainError("bleu needs non-empty, aligned candidate/reference lists")
    clipped = [0] * max_n
    totals = [0] * max_n
    cand_len = 0
    ref_len = 0
    for cand, ref in zip(candidates, references):
        cand_tokens = cand.split()
        ref_tokens = ref.split()
        cand_len += len(cand_tokens)
        ref_len += len(ref_tokens)
        c, t = _bleu_stats(cand_tokens, ref_tokens, max_n)
        for i in range(max_n):
            clipped[i] += c[i]
            totals[i] += t[i]
    if cand_len == 0:
        return Score(0.0, Metric.BLEU)
    log_sum = 0.0
    for i in range(max_n):
        if totals[i] == 0 or clipped[i] == 0:
            return Score(0.0, Metric.BLEU)
        log_sum += math.log(clipped[i] / totals[i])
    bp = 1.0 if cand_len > ref_len else math.exp(1 - ref_len / cand_len)
    return Score(bp * math.exp(log_sum / max_n), Metric.BLEU)


def sentence_bleu(candidate: str, reference: str, max_n: int = 4) -> Score:
    """Single-pair BLEU with add-one smoothing on the higher-order precisions."""
    cand_tokens = candidate.split()
    ref_tokens = reference.split()
    if not cand_tokens:
        return Score(0.0, Metric.BLEU)
    clipped, totals = _bleu_stats(cand_tokens, ref_tokens, max_n)
    log_sum = 0.0
    for i in range(max_n):
        if i == 0:
            if totals[0] == 0 or clipped[0] == 0:
                return Score(0.0, Metric.BLEU)
            p = clipped[0] / totals[0]
        else:
            p = (clipped[i] + 1) / (totals[i] + 1)
        log_sum += math.log(p)
    bp = 1.0 if len(cand_tokens) > len(ref_tokens) else math.exp(1 - len(ref_tokens) / len(cand_tokens))
    return Score(bp * math.exp(log_sum / max_n), Metric.BLEU)


# ---------------------------------------------------------------------------
# chrF


def chrf(pred: str, ref: str, max_order: int = 6, beta: float = 2.0) -> Score:
    """Character n-gram F-score with whitespace removed before matching."""
    pred_chars = [ch for ch in pred if not ch.isspace()]
    ref_chars = [ch for ch in ref if not ch.isspace()]
    if not pred_chars and not ref_chars:
        return Score(1.0, Metric.CHRF)
    precisions = []
    recalls = []
    for n in range(1, max_order + 1):
        pred_grams = _ngrams(pred_chars, n)
        ref_grams = _ngrams(ref_chars, n)
        total_pred = sum(pred_grams.values())
        total_ref = sum(ref_grams.values())
        if total_pred == 0 and total_ref == 0:
            continue
        overlap = sum((pred_grams & ref_grams).values())
        precisions.append(overlap / total_pred if total_pred else 0.0)
        recalls.append(overlap / total_ref if total_ref else 0.0)
    if not precisions:
        return Score(0.0, Metric.CHRF)
    avg_p = sum(precisions) / len(precisions)
    avg_r = sum(recalls) / len(recalls)
    if avg_p + avg_r == 0:
        return Score(0.0, Metric.CHRF)
    b2 = beta * beta
    value = (1 + b2) * avg_p * avg_r / (b2 * avg_p + avg_r)
    return Score(value, Metric.CHRF)


# ---------------------------------------------------------------------------
# Correlations


def _betacf(a: float, b: float, x: float) -> float:
    # Lentz's continued fraction for the incomplete beta function.
    max_iter = 300
    eps = 3e-16
    fpmin = 1e-300
    qab, qap, qam = a + b, a + 1.0, a - 1.0
    c = 1.0
    d = 1.0 - qab * x / qap
    if abs(d) < fpmin:
        d = fpmin
    d = 1.0 / d
    h = d
    for m in range(1, max_iter + 1):
        m2 = 2 * m
        aa = m * (b - m) * x / ((qam + m2) * (a + m2))
        d = 1.0 + aa * d
        if abs(d) < fpmin:
            d = fpmin
        c = 1.0 + aa / c
        if abs(c) < fpmin:
            c = fpmin
        d = 1.0 / d
        h *= d * c
        aa = -(a + m) * (qab + m) * x / ((a + m2) * (qap + m2))
        d = 1.0 + aa * d
        if abs(d) < fpmin:
            d = fpmin
        c = 1.0 + aa / c
        if abs(c) < fpmin:
            c = fpmin
        d = 1.0 / d
        delta = d * c
        h *= delta
        if abs(delta - 1.0) < eps:
            break
    return h


def _betainc(a: float, b: float, x: float) -> float:
    """Regularized incomplete beta function I_x(a, b)."""
    if x <= 0.0:
        return 0.0
    if x >= 1.0:
        return 1.0
    ln_front = (
        math.lgamma(a + b)
        - math.lgamma(a)
        - math.lgamma(b)
        + a * math.log(x)
        + b * math.log1p(-x)
    )
    front = math.exp(ln_front)
    if x < (a + 1.0) / (a + b + 2.0):
        return front * _betacf(a, b, x) / a
    return 1.0 - front * _betacf(b, a, 1.0 - x) / b


def _two_sided_t_pvalue(t: float, df: int) -> float:
    if df <= 0:
        raise UndefinedCorrelationError("p-value needs at least 3 samples")
    if math.isinf(t):
        return 0.0
    return _betainc(df / 2.0, 0.5, df / (df + t * t))


def pearson(x: Sequence[float], y: Sequence[float]) -> CorrelationResult:
    """Product-moment correlation with a two-sided t-test p-value."""
    n = len(x)
    if n != len(y):
        raise DomainError(f"vector lengths differ: {n} vs {len(y)}")
    if n < 3:
        raise UndefinedCorrelationError("pearson needs at least 3 samples")
    mx = sum(x) / n
    my = sum(y) / n
    sxx = sum((v - mx) ** 2 for v in x)
    syy = sum((v - my) ** 2 for v in y)
    if sxx == 0 or syy == 0:
        raise UndefinedCorrelationError("zero variance input")
    sxy = sum((a - mx) * (b - my) for a, b in zip(x, y))
    r = sxy / math.sqrt(sxx * syy)
    r = max(-1.0, min(1.0, r))
    if 1 - r * r <= 0:
        return CorrelationResult(r, 0.0, n)
    t = r * math.sqrt((n - 2) / (1 - r * r))
    return CorrelationResult(r, _two_sided_t_pvalue(abs(t), n - 2), n)


def point_biserial(binary: Sequence[int], scores: Sequence[float]) -> CorrelationResult:
    """Correlation between a 0/1 indicator and a continuous score.

    Computed by the group-means formula; numerically it coincides with
    ``pearson`` on the 0/1 encoding.
    """
    n = len(binary)
    if n != len(scores):
        raise DomainError(f"vector lengths differ: {n} vs {len(scores)}")
    if any(b not in (0, 1) for b in binary):
        raise DomainError("binary vector may contain only 0 and 1")
    if n < 3:
        raise UndefinedCorrelationError("point_biserial needs at least 3 samples")
    n1 = sum(binary)
    n0 = n - n1
    if n1 == 0 or n0 == 0:
        raise UndefinedCorrelationError("both binary groups must be non-empty")
    mean_all = sum(scores) / n
    syy = sum((s - mean_all) ** 2 for s in scores)
    if syy == 0:
        raise UndefinedCorrelationError("scores are all equal")
    mean1 = sum(s for b, s in zip(binary, scores) if b == 1) / n1
    mean0 = sum(s for b, s in zip(binary, scores) if b == 0) / n0
    r = (mean1 - mean0) * math.sqrt(n1 * n0) / (math.sqrt(n) * math.sqrt(syy))
    r = max(-1.0, min(1.0, r))
    if 1 - r * r <= 0:
        return CorrelationResult(r, 0.0, n)
    t = r * math.sqrt((n - 2) / (1 - r * r))
    return CorrelationResult(r, _two_sided_t_pvalue(abs(t), n - 2), n)
