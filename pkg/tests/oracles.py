"""Independent brute-force oracles used to freeze expected test values.

Everything here is deliberately written with plain Python loops (and exact
Fraction arithmetic where it matters), not with the library code under
test, so each check has two genuinely different routes to the answer.
"""

from __future__ import annotations

import math
from fractions import Fraction


def eq1_score(likert, weights) -> float:
    """Weighted Likert score via exact rational arithmetic."""
    total = Fraction(0)
    for w, l in zip(weights, likert):
        total += Fraction(w).limit_denominator(10**9) * Fraction(l, 5)
    return float(total)


def mean(xs) -> float:
    return sum(xs) / len(xs)


def pearson(a, b) -> float:
    ma, mb = mean(a), mean(b)
    num = sum((x - ma) * (y - mb) for x, y in zip(a, b))
    da = math.sqrt(sum((x - ma) ** 2 for x in a))
    db = math.sqrt(sum((y - mb) ** 2 for y in b))
    return num / (da * db)


def ccc(a, b) -> float:
    """Population-moment concordance, loop arithmetic."""
    n = len(a)
    ma, mb = mean(a), mean(b)
    var_a = sum((x - ma) ** 2 for x in a) / n
    var_b = sum((y - mb) ** 2 for y in b) / n
    cov = sum((x - ma) * (y - mb) for x, y in zip(a, b)) / n
    return 2 * cov / (var_a + var_b + (ma - mb) ** 2)


def mae(a, b) -> float:
    return mean([abs(x - y) for x, y in zip(a, b)])


def cbs(a, b, threshold: float, scale_max: float):
    critical = [i for i, x in enumerate(a) if x < threshold]
    if not critical:
        return None
    agree = sum(1 for i in critical if b[i] < threshold)
    recall = agree / len(critical)
    return recall * (1 - mae(a, b) / scale_max)


def ranks_with_ties(xs) -> list[float]:
    """Average fractional ranks, 1-based."""
    order = sorted(range(len(xs)), key=lambda i: xs[i])
    ranks = [0.0] * len(xs)
    i = 0
    while i < len(order):
        j = i
        while j + 1 < len(order) and xs[order[j + 1]] == xs[order[i]]:
            j += 1
        avg_rank = (i + j) / 2 + 1
        for k in range(i, j + 1):
            ranks[order[k]] = avg_rank
        i = j + 1
    return ranks


def spearman(a, b) -> float:
    return pearson(ranks_with_ties(a), ranks_with_ties(b))


def bm25_scores(docs: dict[str, list[str]], query: list[str], k1: float = 1.2, b: float = 0.75) -> dict[str, float]:
    """Okapi BM25 with ln(1 + (N - df + 0.5)/(df + 0.5)) IDF."""
    n = len(docs)
    avgdl = mean([len(toks) for toks in docs.values()])
    scores = {}
    for doc_id, toks in docs.items():
        dl = len(toks)
        s = 0.0
        for term in query:
            tf = toks.count(term)
            if tf == 0:
                continue
            df = sum(1 for t in docs.values() if term in t)
            idf = math.log(1 + (n - df + 0.5) / (df + 0.5))
            s += idf * tf * (k1 + 1) / (tf + k1 * (1 - b + b * dl / avgdl))
        if s != 0.0:
            scores[doc_id] = s
    return scores


def levenshtein(a, b) -> int:
    rows = len(a) + 1
    cols = len(b) + 1
    dist = [[0] * cols for _ in range(rows)]
    for i in range(rows):
        dist[i][0] = i
    for j in range(cols):
        dist[0][j] = j
    for i in range(1, rows):
        for j in range(1, cols):
            cost = 0 if a[i - 1] == b[j - 1] else 1
            dist[i][j] = min(dist[i - 1][j] + 1, dist[i][j - 1] + 1, dist[i - 1][j - 1] + cost)
    return dist[-1][-1]


def char_similarity(a: str, b: str) -> float:
    longest = max(len(a), len(b))
    if longest == 0:
        return 1.0
    return 1.0 - levenshtein(a, b) / longest


def blended_ranking(
    pool: dict[str, dict],
    dense_w: float,
    sparse_w: float,
    district_bonus: float,
    char_bonus_w: float,
) -> list[str]:
    """Brute-force blended ranking over a candidate pool.

    pool: pair_id -> {dense, sparse_raw, district_match, char_sim}
    """
    raws = [c["sparse_raw"] for c in pool.values()]
    low, high = min(raws), max(raws)
    span = high - low
    blended = {}
    for pid, c in pool.items():
        scaled = 0.0 if span == 0 else (c["sparse_raw"] - low) / span
        score = dense_w * c["dense"] + sparse_w * scaled
        if c["district_match"]:
            score += district_bonus
        score += char_bonus_w * c["char_sim"]
        blended[pid] = score
    return sorted(pool, key=lambda pid: (-blended[pid], pid))


def group_by_mean(rows: list[tuple[str, str, float]]) -> dict[tuple[str, str], tuple[float, int]]:
    """(model, dialect, score) rows -> {(model, dialect): (mean, count)}."""
    acc: dict[tuple[str, str], list[float]] = {}
    for model, dialect, score in rows:
        acc.setdefault((model, dialect), []).append(score)
    return {key: (mean(vals), len(vals)) for key, vals in acc.items()}
