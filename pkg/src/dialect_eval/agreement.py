"""Inter-judge agreement and correlation statistics.

Concordance (CCC) is computed with population (1/n) moments, matching the
original estimator; a sample-moment variant sits behind ``ddof=1`` for
sensitivity checks. Critical-bias sensitivity (CBS) is asymmetric by
construction: the first series defines the critical set.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Mapping, Sequence

import numpy as np
from scipy.stats import rankdata

CCC_PASS_THRESHOLD = 0.80
CBS_PASS_THRESHOLD = 0.75


class AgreementError(Exception):
    """Base class for agreement computation errors."""


class ZeroVariance(AgreementError):
    """Correlation undefined: at least one series is constant."""


class DegenerateSeries(AgreementError):
    """Both series constant; concordance denominator vanishes."""


@dataclass(frozen=True)
class ScoreSeries:
    """Paired per-item scores from two raters over the same items."""

    ids: tuple[str, ...]
    a: tuple[float, ...]
    b: tuple[float, ...]
    scale_max: float = 10.0

    def __post_init__(self) -> None:
        if not (len(self.ids) == len(self.a) == len(self.b)):
            raise AgreementError("ids, a, and b must have equal length")
        if len(self.ids) < 2:
            raise AgreementError("a score series needs at least 2 items")
        if self.scale_max <= 0:
            raise AgreementError("scale_max must be positive")
        for value in (*self.a, *self.b):
            if not (0.0 <= value <= self.scale_max):
                raise AgreementError(
                    f"score {value} outside [0, {self.scale_max}]"
                )

    @classmethod
    def from_rows(
        cls,
        rows: Sequence[tuple[str, float, float]],
        scale_max: float = 10.0,
    ) -> "ScoreSeries":
        ids, a, b = zip(*rows)
        return cls(ids=tuple(ids), a=tuple(map(float, a)), b=tuple(map(float, b)), scale_max=scale_max)

    def swapped(self) -> "ScoreSeries":
        return ScoreSeries(ids=self.ids, a=self.b, b=self.a, scale_max=self.scale_max)

    def __len__(self) -> int:
        return len(self.ids)


@dataclass(frozen=True)
class CbsParams:
    """Critical-set threshold and score scale for CBS."""

    threshold: float = 4.0
    scale_max: float = 10.0

    def __post_init__(self) -> None:
        if not (0.0 < self.threshold < self.scale_max):
            raise AgreementError(
                f"threshold must lie strictly inside (0, {self.scale_max})"
            )


def _pearson_from_arrays(x: np.ndarray, y: np.ndarray) -> float:
    sx = x - x.mean()
    sy = y - y.mean()
    denom = float(np.sqrt((sx * sx).sum() * (sy * sy).sum()))
    if denom == 0.0:
        raise ZeroVariance("correlation undefined for constant series")
    return float((sx * sy).sum() / denom)


def pearson(s: ScoreSeries) -> float:
    """Product-moment correlation between the two raters."""
    return _pearson_from_arrays(np.asarray(s.a), np.asarray(s.b))


def spearman(s: ScoreSeries) -> float:
    """Rank correlation with average ranks on ties."""
    ranks_a = rankdata(s.a, method="average")
    ranks_b = rankdata(s.b, method="average")
    return _pearson_from_arrays(ranks_a, ranks_b)


def ccc(s: ScoreSeries, ddof: int = 0) -> float:
    """Concordance correlation: agreement with the identity line.

    2*cov / (var_a + var_b + (mean_a - mean_b)^2), population moments by
    default. Unlike Pearson, location and scale shifts are penalized.
    """
    x = np.asarray(s.a, dtype=float)
    y = np.asarray(s.b, dtype=float)
    mean_x, mean_y = float(x.mean()), float(y.mean())
    var_x = float(x.var(ddof=ddof))
    var_y = float(y.var(ddof=ddof))
    n = len(x)
    cov = float(((x - mean_x) * (y - mean_y)).sum() / (n - ddof))
    denom = var_x + var_y + (mean_x - mean_y) ** 2
    if denom == 0.0:
        raise DegenerateSeries("both series constant; concordance undefined")
    return 2.0 * cov / denom


def mae(s: ScoreSeries) -> float:
    """Mean absolute difference between the paired scores."""
    return float(np.abs(np.asarray(s.a) - np.asarray(s.b)).mean())


def cbs(s: ScoreSeries, p: CbsParams | None = None) -> float | None:
    """Critical Bias Sensitivity: danger-zone recall x global alignment.

    The critical set is the items the FIRST rater scores strictly below the
    threshold; recall is the fraction of those the second rater also scores
    below it. The alignment factor is 1 - MAE/scale_max over ALL items.
    Returns None when the critical set is empty (undefined, not an error).
    """
    params = p or CbsParams()
    a = np.asarray(s.a)
    b = np.asarray(s.b)
    critical = a < params.threshold
    n_critical = int(critical.sum())
    if n_critical == 0:
        return None
    recall = float((b[critical] < params.threshold).sum() / n_critical)
    alignment = 1.0 - mae(s) / params.scale_max
    return recall * alignment


def critical_count(s: ScoreSeries, p: CbsParams | None = None) -> int:
    params = p or CbsParams()
    return int((np.asarray(s.a) < params.threshold).sum())


@dataclass(frozen=True)
class AgreementReport:
    """All agreement statistics for one rater pair, with threshold flags."""

    ccc: float
    cbs: float | None
    pearson: float
    spearman: float
    mae: float
    n_items: int
    n_critical: int
    passes_ccc: bool
    passes_cbs: bool

    def to_record(self) -> dict:
        return {
            "ccc": self.ccc,
            "cbs": self.cbs,
            "pearson": self.pearson,
            "spearman": self.spearman,
            "mae": self.mae,
            "n_items": self.n_items,
            "n_critical": self.n_critical,
            "passes_ccc": self.passes_ccc,
            "passes_cbs": self.passes_cbs,
        }


def agreement_report(s: ScoreSeries, p: CbsParams | None = None) -> AgreementReport:
    """Compute the full statistics bundle and pass/fail threshold flags.

    passes_ccc <=> ccc >= 0.80; passes_cbs <=> cbs defined and >= 0.75.
    """
    params = p or CbsParams(scale_max=s.scale_max)
    ccc_value = ccc(s)
    cbs_value = cbs(s, params)
    return AgreementReport(
        ccc=ccc_value,
        cbs=cbs_value,
        pearson=pearson(s),
        spearman=spearman(s),
        mae=mae(s),
        n_items=len(s),
        n_critical=critical_count(s, params),
        passes_ccc=ccc_value >= CCC_PASS_THRESHOLD,
        passes_cbs=cbs_value is not None and cbs_value >= CBS_PASS_THRESHOLD,
    )


@dataclass(frozen=True)
class CorrelationRow:
    metric: str
    pearson: float
    spearman: float
    ccc: float

    def to_record(self) -> dict:
        return {
            "metric": self.metric,
            "pearson": self.pearson,
            "spearman": self.spearman,
            "ccc": self.ccc,
        }


def correlation_study(
    metric_columns: Mapping[str, Sequence[float]],
    human: Sequence[float],
) -> list[CorrelationRow]:
    """Row-level correlation of each normalized metric column vs human scores.

    All columns must already be normalized to [0,1] (human scores divided
    by their scale upstream). WER columns enter as-is; their negative
    correlations are part of the report, not an error.
    """
    human_values = tuple(float(v) for v in human)
    rows: list[CorrelationRow] = []
    for name, column in metric_columns.items():
        if len(column) != len(human_values):
            raise AgreementError(
                f"column {name!r} has {len(column)} rows, human has {len(human_values)}"
            )
        series = ScoreSeries(
            ids=tuple(str(i) for i in range(len(human_values))),
            a=tuple(float(v) for v in column),
            b=human_values,
            scale_max=1.0,
        )
        rows.append(
            CorrelationRow(
                metric=name,
                pearson=pearson(series),
                spearman=spearman(series),
                ccc=ccc(series),
            )
        )
    return rows


def format_report_table(reports: Mapping[str, AgreementReport]) -> str:
    """Aligned plain-text table, one row per rater pair."""
    headers = ["pair", "ccc", "cbs", "pearson", "spearman", "mae", "n", "n_crit", "ccc>=0.80", "cbs>=0.75"]
    rows = []
    for name, rep in reports.items():
        rows.append(
            [
                name,
                f"{rep.ccc:.4f}",
                "undef" if rep.cbs is None else f"{rep.cbs:.4f}",
                f"{rep.pearson:.4f}",
                f"{rep.spearman:.4f}",
                f"{rep.mae:.4f}",
                str(rep.n_items),
                str(rep.n_critical),
                "pass" if rep.passes_ccc else "FAIL",
                "pass" if rep.passes_cbs else "FAIL",
            ]
        )
    widths = [max(len(h), *(len(r[i]) for r in rows)) if rows else len(h) for i, h in enumerate(headers)]
    lines = [
        "  ".join(h.ljust(widths[i]) for i, h in enumerate(headers)),
        "  ".join("-" * widths[i] for i in range(len(headers))),
    ]
    lines.extend("  ".join(cell.ljust(widths[i]) for i, cell in enumerate(row)) for row in rows)
    return "\n".join(lines)
