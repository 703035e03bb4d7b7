"""Unit tests for the lacunary series h, g, H and R."""

import math

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from src.errors import PreconditionError
from src.services.dyadic import DyadicAngle, VSeqVariant
from src.services.series import (
    H_array,
    SeriesKind,
    cocycle_residual,
    eval_g,
    eval_h,
    eval_h_plus,
    eval_H_trunc,
    eval_increment,
    eval_R_trunc,
    h_real,
    h_real_array,
    holomorphy_gaps,
    holomorphy_summary,
    truncated_series,
    working_alpha,
)

angles = st.builds(DyadicAngle, st.integers(min_value=0, max_value=2**48), st.integers(min_value=0, max_value=48))

SAMPLE_THETAS = [DyadicAngle(n, 10) for n in (0, 1, 37, 255, 512, 1001)]


@pytest.mark.unit
class TestTruncatedSeries:
    """Test term lists and tail bounds."""

    def test_h_terms_paired(self):
        """Test that h carries k and -k for each active index."""
        series = truncated_series(SeriesKind.H_SERIES, 3)
        assert [t.k for t in series.terms] == [1, -1, 2, -2, 3, -3]
        assert [t.freq_exponent for t in series.terms[::2]] == [1, 4, 37]
        assert not series.formal

    def test_one_sided_kinds(self):
        """Test that h+ and h- keep one sign each."""
        plus = truncated_series(SeriesKind.HP_PLUS, 2)
        minus = truncated_series(SeriesKind.HP_MINUS, 2)
        assert all(t.k > 0 for t in plus.terms)
        assert all(t.k < 0 for t in minus.terms)

    def test_H_is_formal(self):
        """Test that H has no tail bound."""
        assert truncated_series(SeriesKind.H_FULL, 3).formal

    def test_terms_beyond_budget_are_dropped(self):
        """Test that K = 5 keeps three terms and lists the rest."""
        series = truncated_series(SeriesKind.H_SERIES, 5)
        assert len(series.terms) == 6
        assert series.dropped_terms == [4, 5]
        assert series.tail_bound.clamped

    def test_bad_cutoff(self):
        """Test that K < 1 is rejected."""
        with pytest.raises(PreconditionError):
            truncated_series(SeriesKind.H_SERIES, 0)

    def test_working_alpha_floor(self):
        """Test that the working alpha is alpha_3 for every small K."""
        for K in (1, 2, 3, 7):
            assert working_alpha(K).K == 3


@pytest.mark.unit
class TestSeriesValues:
    """Test evaluated series against closed forms."""

    def test_h_at_zero_K1(self):
        """Test h_1(0) = 2 (cos(2 pi frac(n_1 alpha)) - 1)."""
        a = 2**-3 + 2**-36
        value = eval_h(DyadicAngle.zero(), 1).value
        assert value.real == pytest.approx(2 * (math.cos(2 * math.pi * a) - 1), abs=1e-12)
        assert value.real == pytest.approx(-0.585786, abs=1e-6)
        assert abs(value.imag) < 1e-12

    def test_h_tail_at_K2(self):
        """Test the tail exponent -3 * 2^37 of h_2."""
        assert eval_h(DyadicAngle(1, 5), 2).tail_bound.log2 == -3 * 2**37

    def test_h_is_real(self):
        """Test that paired terms cancel the imaginary part."""
        for theta in SAMPLE_THETAS:
            assert abs(eval_h(theta, 3).value.imag) < 1e-12

    def test_h_plus_minus_conjugate(self):
        """Test h_- = conj(h_+) on the circle and h = h_+ + h_-."""
        theta = DyadicAngle(37, 10)
        plus = eval_h_plus(theta, 3).value
        minus = eval_h_plus(theta, 3, minus=True).value
        assert minus == pytest.approx(plus.conjugate(), abs=1e-12)
        assert eval_h(theta, 3).value == pytest.approx(plus + minus, abs=1e-12)

    def test_h_real_matches_eval_h(self):
        """Test the paired real form against the complex sum."""
        for theta in SAMPLE_THETAS:
            assert h_real(theta, 3) == pytest.approx(eval_h(theta, 3).value.real, abs=1e-12)

    def test_g_has_unit_modulus(self):
        """Test |g| = 1."""
        for theta in SAMPLE_THETAS:
            assert abs(eval_g(theta, 3).value) == pytest.approx(1.0, abs=1e-12)

    def test_H_values(self):
        """Test H_2(0) = 3 and H_1(1/4) = -2."""
        assert eval_H_trunc(DyadicAngle.zero(), 2).value.real == pytest.approx(3.0)
        assert eval_H_trunc(DyadicAngle(1, 2), 1).value.real == pytest.approx(-2.0)
        assert eval_H_trunc(DyadicAngle.zero(), 2).to_dict()["tail_bound"] is None

    def test_R_is_exp_of_H(self):
        """Test R = exp(2 pi i H)."""
        theta = DyadicAngle(255, 10)
        H = eval_H_trunc(theta, 3).value.real
        R = eval_R_trunc(theta, 3).value
        assert R == pytest.approx(complex(math.cos(2 * math.pi * H), math.sin(2 * math.pi * H)), abs=1e-12)

    def test_to_dict_fields(self):
        """Test the serialized form."""
        data = eval_h(DyadicAngle.zero(), 5).to_dict()
        assert data["dropped_terms"] == [4, 5]
        assert data["alpha_cutoff"] == 3
        assert data["formal_truncation"] is False
        assert data["tail_bound"].endswith("(clamped)")

    def test_arrays_match_scalars(self):
        """Test the vectorised H and h against the exact evaluators."""
        thetas = np.array([float(t) for t in SAMPLE_THETAS])
        H = H_array(thetas, 3)
        h = h_real_array(thetas, 3)
        for i, theta in enumerate(SAMPLE_THETAS):
            assert H[i] == pytest.approx(eval_H_trunc(theta, 3).value.real, abs=1e-12)
            assert h[i] == pytest.approx(h_real(theta, 3), abs=1e-12)


@pytest.mark.unit
class TestIncrement:
    """Test H(theta + shift) - H(theta)."""

    def test_increment_is_H_difference(self):
        """Test the increment against two direct H evaluations."""
        theta = DyadicAngle(37, 10)
        shift = DyadicAngle(3, 7)
        expected = eval_H_trunc(theta + shift, 3).value.real - eval_H_trunc(theta, 3).value.real
        assert eval_increment(theta, shift, 3) == pytest.approx(expected, abs=1e-12)

    def test_zero_shift(self):
        """Test that a zero shift gives a zero increment."""
        assert eval_increment(DyadicAngle(37, 10), DyadicAngle.zero(), 3) == 0.0

    @settings(max_examples=100)
    @given(angles, angles, angles)
    def test_increments_compose(self, theta, a, b):
        """Test I(theta, a + b) = I(theta, a) + I(theta + a, b)."""
        whole = eval_increment(theta, a + b, 3)
        parts = eval_increment(theta, a, 3) + eval_increment(theta + a, b, 3)
        assert whole == pytest.approx(parts, abs=1e-11)


@pytest.mark.unit
class TestCocycleResidual:
    """Test h = H(. + alpha) - H term by term."""

    def test_matching_alpha_has_no_residual(self):
        """Test that the residual vanishes when H shifts by the same alpha."""
        for theta in SAMPLE_THETAS:
            residual = cocycle_residual(theta, 2, alpha_cutoff=3)
            assert residual.total < 1e-9

    def test_truncated_alpha_residual_scale(self):
        """Test that alpha_2 leaves about 2 pi 2^{v_k - 37} / k per term."""
        residual = cocycle_residual(DyadicAngle(37, 10), 2, alpha_cutoff=2)
        assert residual.per_term[1] == pytest.approx(9.14e-11, rel=0.05)
        assert residual.per_term[2] == pytest.approx(3.66e-10, rel=0.05)
        for k, value in residual.per_term.items():
            assert 0.5 < value / residual.predicted_scale(k) < 2.0

    def test_to_dict(self):
        """Test the serialized residual."""
        data = cocycle_residual(DyadicAngle.zero(), 2, alpha_cutoff=2).to_dict()
        assert set(data["per_term"]) == {"-2", "-1", "1", "2"}
        assert data["alpha_cutoff"] == 2
        assert data["reference_cutoff"] == 3

    def test_bad_cutoff(self):
        """Test that the alpha cutoff must be positive."""
        with pytest.raises(PreconditionError):
            cocycle_residual(DyadicAngle.zero(), 2, alpha_cutoff=0)


@pytest.mark.unit
class TestHolomorphy:
    """Test Cauchy gaps of h_+ on circles."""

    def test_strengthened_gaps_within_bounds(self):
        """Test that gaps shrink and meet the Abel bound at every radius."""
        report = holomorphy_gaps(3)
        assert set(report) == {0.5, 1.0, 2.0}
        assert all(holomorphy_summary(report).values())

    def test_last_gap_is_a_tail_bound(self):
        """Test that the k = 3 term, whose phase is below the budget, is bounded."""
        entries = holomorphy_gaps(3)[1.0]
        assert [e.gap_is_bound for e in entries] == [False, False, True]
        assert entries[2].gap_log2 < -2**37

    def test_original_variant_runs(self):
        """Test that the original recursion produces gaps for every radius."""
        report = holomorphy_gaps(3, variant=VSeqVariant.ORIGINAL)
        assert all(len(entries) == 3 for entries in report.values())

    def test_bad_radius(self):
        """Test that radii must be positive."""
        with pytest.raises(PreconditionError):
            holomorphy_gaps(2, radii=(0.0,))
