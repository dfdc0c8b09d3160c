from __future__ import annotations

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from dialect_eval.agreement import (
    AgreementError,
    CbsParams,
    DegenerateSeries,
    ScoreSeries,
    ZeroVariance,
    agreement_report,
    cbs,
    ccc,
    correlation_study,
    format_report_table,
    mae,
    pearson,
    spearman,
)

from . import oracles


def series(a, b, scale_max=10.0):
    return ScoreSeries.from_rows(
        [(str(i), x, y) for i, (x, y) in enumerate(zip(a, b))], scale_max=scale_max
    )


scores = st.lists(
    st.floats(min_value=0.0, max_value=10.0, allow_nan=False), min_size=3, max_size=40
)


class TestSeriesValidation:
    def test_length_mismatch(self):
        with pytest.raises(AgreementError):
            ScoreSeries(ids=("a", "b"), a=(1.0,), b=(1.0, 2.0))

    def test_needs_two_items(self):
        with pytest.raises(AgreementError):
            series([1.0], [2.0])

    def test_out_of_scale_rejected(self):
        with pytest.raises(AgreementError):
            series([1.0, 11.0], [2.0, 3.0])


class TestPearson:
    def test_identity(self):
        assert pearson(series([1, 2, 3], [1, 2, 3])) == pytest.approx(1.0)

    def test_reflected(self):
        assert pearson(series([1, 2, 3], [9, 8, 7])) == pytest.approx(-1.0)

    def test_positive_affine_invariance(self):
        a = [0.1, 0.5, 0.9]
        assert pearson(series(a, [10 * x for x in a])) == pytest.approx(1.0)

    def test_constant_raises(self):
        with pytest.raises(ZeroVariance):
            pearson(series([1, 1, 1], [1, 2, 3]))


class TestSpearman:
    def test_monotone_invariance(self):
        assert spearman(series([1, 2, 3, 4], [0.1, 2.0, 2.5, 9.9])) == pytest.approx(1.0)

    def test_worked_example(self):
        assert spearman(series([1, 2, 3], [3, 1, 2])) == pytest.approx(-0.5, abs=1e-12)

    def test_tied_ranks(self):
        assert spearman(series([1, 1, 2], [5, 5, 9])) == pytest.approx(1.0)

    @given(scores, scores)
    @settings(max_examples=60)
    def test_matches_rank_oracle(self, a, b):
        n = min(len(a), len(b))
        a, b = a[:n], b[:n]
        s = series(a, b)
        try:
            ours = spearman(s)
        except ZeroVariance:
            return
        assert ours == pytest.approx(oracles.spearman(a, b), abs=1e-9)


class TestCcc:
    def test_perfect_concordance(self):
        assert ccc(series([1, 2, 3], [1, 2, 3])) == pytest.approx(1.0)

    def test_shift_worked_example(self):
        assert ccc(series([1, 2, 3], [2, 3, 4])) == pytest.approx(4 / 7, abs=1e-12)

    def test_symmetric(self):
        s = series([1, 4, 7, 2], [2, 5, 5, 3])
        assert ccc(s) == pytest.approx(ccc(s.swapped()), abs=1e-12)

    def test_degenerate_raises(self):
        with pytest.raises(DegenerateSeries):
            ccc(series([2, 2, 2], [2, 2, 2]))

    def test_sample_moment_variant(self):
        s = series([1, 2, 3], [2, 3, 4])
        # ddof=1: 2*cov_s / (var_s + var_s + shift^2) = 2/(1+1+1) = 2/3
        assert ccc(s, ddof=1) == pytest.approx(2 / 3, abs=1e-12)

    @given(scores, scores)
    @settings(max_examples=80)
    def test_attenuation_vs_pearson(self, a, b):
        n = min(len(a), len(b))
        a, b = a[:n], b[:n]
        s = series(a, b)
        try:
            p = pearson(s)
        except ZeroVariance:
            return
        assert abs(ccc(s)) <= abs(p) + 1e-12

    @given(scores, scores)
    @settings(max_examples=60)
    def test_matches_loop_oracle(self, a, b):
        n = min(len(a), len(b))
        a, b = a[:n], b[:n]
        s = series(a, b)
        try:
            ours = ccc(s)
        except DegenerateSeries:
            return
        assert ours == pytest.approx(oracles.ccc(a, b), abs=1e-9)


class TestMae:
    def test_identical(self):
        assert mae(series([1, 2], [1, 2])) == 0.0

    def test_worked_example(self):
        assert mae(series([3.0, 3.5, 8.0], [3.2, 5.0, 8.0])) == pytest.approx(0.56666667, abs=1e-6)

    def test_constant_offset(self):
        assert mae(series([1, 2, 3], [3, 4, 5])) == pytest.approx(2.0)


class TestCbs:
    def test_worked_example(self):
        s = series([3.0, 3.5, 8.0], [3.2, 5.0, 8.0])
        assert cbs(s, CbsParams(4.0, 10.0)) == pytest.approx(0.471667, abs=1e-6)

    def test_perfect_agreement(self):
        s = series([3.0, 8.0], [3.0, 8.0])
        assert cbs(s, CbsParams(4.0, 10.0)) == pytest.approx(1.0)

    def test_empty_critical_set_undefined(self):
        s = series([5.0, 8.0], [1.0, 2.0])
        assert cbs(s, CbsParams(4.0, 10.0)) is None

    def test_asymmetric(self):
        s = series([3.0, 5.0, 3.0], [3.0, 9.0, 9.0])
        forward = cbs(s, CbsParams(4.0, 10.0))
        backward = cbs(s.swapped(), CbsParams(4.0, 10.0))
        assert forward is not None and backward is not None
        assert forward != pytest.approx(backward)

    def test_strict_inequality_at_threshold(self):
        s = series([4.0, 3.9], [1.0, 1.0])
        # 4.0 is NOT critical (strict <); only the 3.9 row is
        assert oracles.cbs([4.0, 3.9], [1.0, 1.0], 4.0, 10.0) == cbs(s, CbsParams(4.0, 10.0))

    def test_params_validation(self):
        with pytest.raises(AgreementError):
            CbsParams(threshold=0.0, scale_max=10.0)
        with pytest.raises(AgreementError):
            CbsParams(threshold=10.0, scale_max=10.0)

    @given(scores, scores)
    @settings(max_examples=80)
    def test_bounds_and_oracle(self, a, b):
        n = min(len(a), len(b))
        a, b = a[:n], b[:n]
        value = cbs(series(a, b), CbsParams(4.0, 10.0))
        expected = oracles.cbs(a, b, 4.0, 10.0)
        if value is None:
            assert expected is None
        else:
            assert 0.0 <= value <= 1.0
            assert value == pytest.approx(expected, abs=1e-9)


def engineered_shift_series(target_ccc: float, n: int = 7) -> ScoreSeries:
    """b = a + d with d chosen so that ccc == target exactly.

    For a pure shift: ccc = 2*var / (2*var + d^2)  =>  d = sigma*sqrt(2(1-t)/t).
    """
    a = np.arange(n, dtype=float)
    sigma = float(a.std())
    d = sigma * np.sqrt(2 * (1 - target_ccc) / target_ccc)
    b = a + d
    assert b.max() <= 10.0
    return series(list(a), list(b))


class TestAgreementReport:
    def test_passes_at_0_8614(self):
        report = agreement_report(engineered_shift_series(0.8614))
        assert report.ccc == pytest.approx(0.8614, abs=1e-9)
        assert report.passes_ccc is True

    def test_fails_at_0_7769(self):
        report = agreement_report(engineered_shift_series(0.7769))
        assert report.ccc == pytest.approx(0.7769, abs=1e-9)
        assert report.passes_ccc is False

    def test_undefined_cbs_fails_threshold(self):
        s = series([5.0, 8.0, 9.0], [5.0, 8.0, 9.0])
        report = agreement_report(s, CbsParams(4.0, 10.0))
        assert report.cbs is None
        assert report.passes_cbs is False

    def test_report_fields_consistent(self):
        s = series([3.0, 3.5, 8.0], [3.2, 5.0, 8.0])
        report = agreement_report(s, CbsParams(4.0, 10.0))
        assert report.n_items == 3
        assert report.n_critical == 2
        assert report.mae == pytest.approx(mae(s))
        assert report.passes_cbs is False  # 0.4717 < 0.75

    def test_table_formatting_smoke(self):
        s = series([3.0, 3.5, 8.0], [3.2, 5.0, 8.0])
        text = format_report_table({"primary vs secondary": agreement_report(s)})
        assert "primary vs secondary" in text
        assert "ccc" in text


class TestCorrelationStudy:
    def test_identical_column(self):
        human = [0.1, 0.5, 0.9, 0.3]
        rows = correlation_study({"metric": human}, human)
        assert rows[0].pearson == pytest.approx(1.0)
        assert rows[0].spearman == pytest.approx(1.0)
        assert rows[0].ccc == pytest.approx(1.0)

    def test_anti_correlated_column(self):
        human = [0.1, 0.5, 0.9, 0.3]
        rows = correlation_study({"wer": [1 - h for h in human]}, human)
        assert rows[0].pearson == pytest.approx(-1.0)

    def test_ten_row_table_matches_oracle(self):
        rng = np.random.default_rng(42)
        human = [round(float(x), 3) for x in rng.uniform(0, 1, 10)]
        columns = {
            "m1": [round(float(x), 3) for x in rng.uniform(0, 1, 10)],
            "m2": [min(1.0, h + 0.05) for h in human],
        }
        for row in correlation_study(columns, human):
            col = columns[row.metric]
            assert row.pearson == pytest.approx(oracles.pearson(col, human), abs=1e-9)
            assert row.spearman == pytest.approx(oracles.spearman(col, human), abs=1e-9)
            assert row.ccc == pytest.approx(oracles.ccc(col, human), abs=1e-9)

    def test_length_mismatch_raises(self):
        with pytest.raises(AgreementError):
            correlation_study({"m": [0.1, 0.2]}, [0.1, 0.2, 0.3])
