"""Translation quality metrics: BLEU, ChrF, WER, cosine, greedy BERT-style F1.

All functions are pure and sentence-level. Lexical metrics tokenize on
whitespace internally; they are known to be fragile on unstandardized
dialect spelling, which is exactly what the normalized [0,1] outputs and
the correlation study downstream are meant to expose.
"""

from __future__ import annotations

import math
import re
from collections import Counter
from dataclasses import dataclass
from enum import Enum
from typing import Sequence

import numpy as np


class MetricError(Exception):
    """Base class for metric input errors."""


class EmptyReference(MetricError):
    """Reference text has no content to score against."""


class EmptyInput(MetricError):
    """An input that must be non-empty is empty."""


class ZeroVector(MetricError):
    """A vector with zero norm cannot be direction-compared."""


class DimensionMismatch(MetricError):
    """Vector/matrix operands disagree on dimension."""


class MetricKind(Enum):
    BLEU = "BLEU"
    CHRF = "ChrF"
    WER = "WER"
    COSINE_SIM = "CosineSim"
    BERT_F1 = "BertF1"


def edit_distance(a: Sequence, b: Sequence) -> int:
    """Levenshtein distance with uniform unit costs, O(len(a)*len(b))."""
    if len(a) < len(b):
        a, b = b, a
    previous = list(range(len(b) + 1))
    for i, item_a in enumerate(a, start=1):
        current = [i]
        for j, item_b in enumerate(b, start=1):
            cost = 0 if item_a == item_b else 1
            current.append(min(previous[j] + 1, current[j - 1] + 1, previous[j - 1] + cost))
        previous = current
    return previous[len(b)]


def levenshtein_similarity(a: str, b: str) -> float:
    """Normalized similarity: 1 - distance / max length. Both empty -> 1.0."""
    longest = max(len(a), len(b))
    if longest == 0:
        return 1.0
    return 1.0 - edit_distance(a, b) / longest


def _ngram_counts(tokens: Sequence[str], n: int) -> Counter:
    return Counter(tuple(tokens[i : i + n]) for i in range(len(tokens) - n + 1))


def bleu(hypothesis: str, reference: str, max_n: int = 4) -> float:
    """Sentence BLEU on a 0-100 scale.

    Geometric mean of modified n-gram precisions up to ``max_n`` times the
    brevity penalty. Orders with zero matches get exponential smoothing
    (each successive zero order halves the credited count floor); orders
    the hypothesis is too short to populate are dropped from the mean.
    """
    if max_n < 1:
        raise MetricError(f"max_n must be >= 1, got {max_n}")
    ref_tokens = reference.split()
    if not ref_tokens:
        raise EmptyReference("reference has no tokens")
    hyp_tokens = hypothesis.split()
    if not hyp_tokens:
        return 0.0

    log_sum = 0.0
    effective_orders = 0
    smooth = 1.0
    for n in range(1, max_n + 1):
        total = len(hyp_tokens) - n + 1
        if total <= 0:
            break
        hyp_counts = _ngram_counts(hyp_tokens, n)
        ref_counts = _ngram_counts(ref_tokens, n)
        matched = sum(min(count, ref_counts[gram]) for gram, count in hyp_counts.items())
        if matched == 0:
            smooth *= 2.0
            precision = 1.0 / (smooth * total)
        else:
            precision = matched / total
        log_sum += math.log(precision)
        effective_orders += 1

    geo_mean = math.exp(log_sum / effective_orders)
    hyp_len, ref_len = len(hyp_tokens), len(ref_tokens)
    brevity = 1.0 if hyp_len >= ref_len else math.exp(1.0 - ref_len / hyp_len)
    return 100.0 * brevity * geo_mean


_ALL_WHITESPACE_RE = re.compile(r"\s+")


def _char_ngrams(text: str, n: int) -> Counter:
    return Counter(text[i : i + n] for i in range(len(text) - n + 1))


def chrf(hypothesis: str, reference: str, n: int = 6, beta: float = 2.0) -> float:
    """Character n-gram F-beta averaged over orders 1..n, 0-100 scale.

    Whitespace is removed entirely before extracting n-grams, so spacing
    variants compare equal. Orders where either side has no n-grams are
    skipped rather than scored zero, keeping identity at exactly 100.
    """
    if n < 1:
        raise MetricError(f"n must be >= 1, got {n}")
    if beta <= 0:
        raise MetricError(f"beta must be > 0, got {beta}")
    ref_chars = _ALL_WHITESPACE_RE.sub("", reference)
    if not ref_chars:
        raise EmptyReference("reference has no non-whitespace characters")
    hyp_chars = _ALL_WHITESPACE_RE.sub("", hypothesis)

    beta_sq = beta * beta
    f_sum = 0.0
    effective_orders = 0
    for order in range(1, n + 1):
        hyp_grams = _char_ngrams(hyp_chars, order)
        ref_grams = _char_ngrams(ref_chars, order)
        hyp_total = sum(hyp_grams.values())
        ref_total = sum(ref_grams.values())
        if hyp_total == 0 or ref_total == 0:
            continue
        overlap = sum((hyp_grams & ref_grams).values())
        precision = overlap / hyp_total
        recall = overlap / ref_total
        if precision + recall > 0:
            f_sum += (1 + beta_sq) * precision * recall / (beta_sq * precision + recall)
        effective_orders += 1

    if effective_orders == 0:
        return 0.0
    return 100.0 * f_sum / effective_orders


def wer(hypothesis: str, reference: str) -> float:
    """Word error rate as a percentage; may exceed 100 for long hypotheses."""
    ref_tokens = reference.split()
    if not ref_tokens:
        raise EmptyReference("reference has no tokens")
    hyp_tokens = hypothesis.split()
    return 100.0 * edit_distance(hyp_tokens, ref_tokens) / len(ref_tokens)


def cosine_similarity(a: Sequence[float], b: Sequence[float]) -> float:
    """Cosine of the angle between two nonzero vectors of equal dimension."""
    va = np.asarray(a, dtype=float)
    vb = np.asarray(b, dtype=float)
    if va.shape != vb.shape:
        raise DimensionMismatch(f"dimensions differ: {va.shape} vs {vb.shape}")
    norm_a = float(np.linalg.norm(va))
    norm_b = float(np.linalg.norm(vb))
    if norm_a == 0.0 or norm_b == 0.0:
        raise ZeroVector("cosine similarity undefined for zero vectors")
    return float(np.dot(va, vb) / (norm_a * norm_b))


def bertscore_f1(hyp_token_vectors: np.ndarray, ref_token_vectors: np.ndarray) -> float:
    """Greedy-matching token-embedding F1 without idf weighting.

    Precision is the mean over hypothesis tokens of the max cosine against
    any reference token; recall is symmetric; F1 their harmonic mean.
    Rows are unit-normalized internally. Row order is irrelevant.
    """
    hyp = np.asarray(hyp_token_vectors, dtype=float)
    ref = np.asarray(ref_token_vectors, dtype=float)
    if hyp.ndim != 2 or ref.ndim != 2 or hyp.shape[0] == 0 or ref.shape[0] == 0:
        raise EmptyInput("token vector matrices must be non-empty 2-D arrays")
    if hyp.shape[1] != ref.shape[1]:
        raise DimensionMismatch(f"embedding dims differ: {hyp.shape[1]} vs {ref.shape[1]}")

    hyp_norms = np.linalg.norm(hyp, axis=1, keepdims=True)
    ref_norms = np.linalg.norm(ref, axis=1, keepdims=True)
    if np.any(hyp_norms == 0) or np.any(ref_norms == 0):
        raise ZeroVector("token vectors must be nonzero to normalize")
    sim = (hyp / hyp_norms) @ (ref / ref_norms).T

    precision = float(sim.max(axis=1).mean())
    recall = float(sim.max(axis=0).mean())
    if precision + recall <= 0:
        return 0.0
    f1 = 2 * precision * recall / (precision + recall)
    return min(max(f1, 0.0), 1.0)


def normalize_metric(raw: float, kind: MetricKind) -> float:
    """Map a raw metric value onto [0,1] for correlation analysis.

    BLEU/ChrF divide by 100; WER clamps to [0,100] then divides by 100
    (its negative correlations are reported as-is downstream); similarity
    scores clamp to [0,1].
    """
    if not math.isfinite(raw):
        raise MetricError(f"cannot normalize non-finite value {raw!r}")
    if kind in (MetricKind.BLEU, MetricKind.CHRF):
        return raw / 100.0
    if kind is MetricKind.WER:
        return min(max(raw, 0.0), 100.0) / 100.0
    return min(max(raw, 0.0), 1.0)


@dataclass(frozen=True)
class MetricValue:
    """A raw metric value paired with its [0,1] normalization."""

    kind: MetricKind
    raw: float
    normalized: float

    @classmethod
    def of(cls, kind: MetricKind, raw: float) -> "MetricValue":
        return cls(kind=kind, raw=raw, normalized=normalize_metric(raw, kind))
