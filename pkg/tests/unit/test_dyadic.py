"""Unit tests for exact dyadic arithmetic and the constants of alpha."""

from fractions import Fraction

import pytest
from hypothesis import given, settings, strategies as st

from src.errors import DigitBudgetExceeded, PreconditionError
from src.services.dyadic import (
    DyadicAngle,
    TailBound,
    VSeqVariant,
    alpha_partial,
    alpha_tail,
    constants_report,
    decay_bound_holds,
    frac_n_alpha,
    lemma_mod_check,
    representable_cutoff,
    try_v,
    v_seq,
)

V4 = 412316860454

angles = st.builds(DyadicAngle, st.integers(min_value=0, max_value=2**80), st.integers(min_value=0, max_value=80))


@pytest.mark.unit
class TestDyadicAngle:
    """Test the exact angle type."""

    def test_canonical_form(self):
        """Test that equal angles have equal fields."""
        assert DyadicAngle(2, 2) == DyadicAngle(1, 1)
        assert DyadicAngle(4, 2) == DyadicAngle.zero()
        assert DyadicAngle(5, 2) == DyadicAngle(1, 2)
        assert DyadicAngle(-1, 3) == DyadicAngle(7, 3)

    def test_negative_exponent_rejected(self):
        """Test that a negative exponent is not an angle."""
        with pytest.raises(ValueError):
            DyadicAngle(1, -1)

    def test_hex_rendering(self):
        """Test the bit-exact hex form."""
        assert DyadicAngle(1, 1).hex() == "0x1p-1"
        assert alpha_partial(3).value.hex() == "0x1200000001p-37"

    def test_parse_forms(self):
        """Test hex, decimal and p/q input."""
        assert DyadicAngle.parse("0x3p-3") == DyadicAngle(3, 3)
        assert DyadicAngle.parse("0.375") == DyadicAngle(3, 3)
        assert DyadicAngle.parse("3/8") == DyadicAngle(3, 3)
        assert DyadicAngle.parse("1.25") == DyadicAngle(1, 2)

    def test_parse_rejects_non_dyadic(self):
        """Test that 0.1 needs an explicit rounding precision."""
        with pytest.raises(ValueError, match="not a dyadic"):
            DyadicAngle.parse("0.1")
        assert DyadicAngle.parse("0.1", round_bits=8) == DyadicAngle(26, 8)

    def test_from_float_is_exact(self):
        """Test that a float converts to its exact dyadic value."""
        assert DyadicAngle.from_float(0.1).to_fraction() == Fraction(0.1)
        with pytest.raises(ValueError):
            DyadicAngle.from_float(float("nan"))

    def test_mul_pow2(self):
        """Test shifting, including the shift that clears every bit."""
        a = DyadicAngle(3, 4)
        assert a.mul_pow2(1) == DyadicAngle(3, 3)
        assert a.mul_pow2(4) == DyadicAngle.zero()
        assert a.mul_pow2(100) == DyadicAngle.zero()
        with pytest.raises(ValueError):
            a.mul_pow2(-1)

    def test_round_to_ties_to_even(self):
        """Test round-half-even on dropped bits."""
        assert DyadicAngle(3, 2).round_to(1) == DyadicAngle.zero()
        assert DyadicAngle(1, 2).round_to(1) == DyadicAngle.zero()
        assert DyadicAngle(5, 3).round_to(2) == DyadicAngle(1, 1)
        assert DyadicAngle(3, 3).round_to(10) == DyadicAngle(3, 3)

    def test_circle_distance(self):
        """Test that distance wraps around the circle."""
        assert DyadicAngle(1, 3).circle_distance(DyadicAngle(7, 3)) == 0.25
        assert DyadicAngle(1, 1).circle_distance(DyadicAngle.zero()) == 0.5

    def test_ordering(self):
        """Test comparison of representatives in [0, 1)."""
        assert DyadicAngle(1, 3) < DyadicAngle(1, 1)
        assert DyadicAngle(1, 1) <= DyadicAngle(2, 2)

    @given(angles, angles, angles)
    def test_addition_is_associative(self, a, b, c):
        """Test (a + b) + c == a + (b + c) exactly."""
        assert (a + b) + c == a + (b + c)

    @given(angles, angles)
    def test_subtraction_inverts_addition(self, a, b):
        """Test a - b == a + (-b) and a + (-a) == 0."""
        assert a - b == a + (-b)
        assert a + (-a) == DyadicAngle.zero()

    @given(angles, st.integers(min_value=0, max_value=60), st.integers(min_value=0, max_value=60))
    def test_mul_pow2_composes(self, a, i, j):
        """Test 2^i (2^j a) == 2^{i+j} a mod 1."""
        assert a.mul_pow2(j).mul_pow2(i) == a.mul_pow2(i + j)

    @given(angles, angles, st.integers(min_value=-(2**70), max_value=2**70))
    def test_mul_int_distributes(self, a, b, n):
        """Test n (a + b) == n a + n b mod 1."""
        assert (a + b).mul_int(n) == a.mul_int(n) + b.mul_int(n)

    @settings(max_examples=50)
    @given(angles)
    def test_hex_parses_back(self, a):
        """Test that the hex form is bit-exact."""
        assert DyadicAngle.parse(a.hex()) == a


@pytest.mark.unit
class TestTailBound:
    """Test symbolic tail bounds."""

    def test_exponent_stays_exact(self):
        """Test that exponents far below float range are kept."""
        bound = alpha_tail(3)
        assert bound.log2 == 1 - V4
        assert bound.as_float() == 0.0
        assert bound.below(-400000000000)

    def test_sum_keeps_dominant_exponent(self):
        """Test that adding a much smaller bound keeps the larger exponent."""
        total = TailBound.exponent(-10, 1.0) + TailBound.exponent(-1000, 3.0)
        assert total.log2 == -10
        assert total.coefficient >= 1.0

    def test_sum_rounds_up(self):
        """Test that the sum of equal bounds is at least their true sum."""
        total = TailBound.exponent(-3, 1.0) + TailBound.exponent(-3, 1.0)
        assert total.as_float() >= 0.25

    def test_none_is_neutral(self):
        """Test that the empty bound is the additive identity."""
        bound = TailBound.exponent(-5, 2.0)
        assert TailBound.none() + bound == bound
        assert bound + TailBound.none() == bound

    def test_clamped_propagates(self):
        """Test that a clamped summand marks the sum from either side."""
        assert (TailBound.beyond_budget() + TailBound.exponent(-10)).clamped
        assert (TailBound.exponent(-2**21) + TailBound.beyond_budget()).clamped
        assert not (TailBound.exponent(-3) + TailBound.exponent(-10)).clamped
        assert "clamped" in TailBound.beyond_budget().render()

    def test_scale_and_shift(self):
        """Test coefficient scaling and exponent shifting."""
        bound = TailBound.exponent(-10, 1.5).scale(-2.0).shift(3)
        assert bound.coefficient == 3.0
        assert bound.log2 == -7


@pytest.mark.unit
class TestVSeq:
    """Test the exponent sequence."""

    def test_strengthened_values(self):
        """Test v_1..v_4 of the strengthened recursion."""
        assert v_seq(4).as_list() == [1, 4, 37, V4]

    def test_original_values(self):
        """Test v_1..v_4 of the original recursion."""
        assert v_seq(4, VSeqVariant.ORIGINAL).as_list() == [1, 4, 21, 2097174]

    def test_one_based_indexing(self):
        """Test that v_k is addressed from k = 1."""
        seq = v_seq(3)
        assert seq[1] == 1
        assert seq[3] == 37
        with pytest.raises(IndexError):
            seq[4]

    def test_v5_exceeds_budget(self):
        """Test that v_5 has too many bits to compute."""
        with pytest.raises(DigitBudgetExceeded) as excinfo:
            v_seq(5)
        assert excinfo.value.bits_needed > excinfo.value.budget
        assert try_v(5) is None

    def test_representable_cutoff(self):
        """Test that alpha is representable up to K = 3 under a 2^20-bit budget."""
        assert representable_cutoff(10) == 3
        assert representable_cutoff(2) == 2
        assert representable_cutoff(4, VSeqVariant.ORIGINAL) == 3

    def test_bad_K(self):
        """Test that K < 1 is rejected."""
        with pytest.raises(PreconditionError):
            v_seq(0)


@pytest.mark.unit
class TestAlpha:
    """Test the partial sums of alpha and n_k alpha mod 1."""

    def test_alpha_3_exact(self):
        """Test alpha_3 = 77309411329 / 2^37."""
        alpha = alpha_partial(3)
        assert alpha.value.to_fraction() == Fraction(77309411329, 2**37)
        assert alpha.tail.log2 == 1 - V4

    def test_alpha_4_over_budget(self):
        """Test that alpha_4 needs v_4 bits and is refused."""
        with pytest.raises(DigitBudgetExceeded):
            alpha_partial(4)

    def test_frac_n1_alpha(self):
        """Test n_1 alpha_3 mod 1 = 2^-3 + 2^-36."""
        item = frac_n_alpha(1, 3)
        assert item.value.to_fraction() == Fraction(1, 8) + Fraction(1, 2**36)
        assert item.meets_decay_bound()

    def test_frac_n2_alpha(self):
        """Test n_2 alpha_3 mod 1 = 2^-33."""
        item = frac_n_alpha(2, 3)
        assert item.value.to_fraction() == Fraction(1, 2**33)
        assert item.decay_bound_log2 == -32
        assert item.meets_decay_bound()

    def test_frac_agrees_with_shifted_alpha(self):
        """Test that shift-and-add matches shifting alpha_3 itself."""
        alpha = alpha_partial(3).value
        assert alpha.mul_pow2(33) == DyadicAngle(1, 4)
        for k, v in ((1, 1), (2, 4)):
            assert frac_n_alpha(k, 3).value == alpha.mul_pow2(v)

    def test_frac_precondition(self):
        """Test that k must lie below K."""
        with pytest.raises(PreconditionError):
            frac_n_alpha(3, 3)
        with pytest.raises(PreconditionError):
            frac_n_alpha(0, 3)

    @pytest.mark.parametrize("k", [1, 2, 3])
    def test_decay_bound_holds(self, k):
        """Test n_k alpha mod 1 < 2^{-k n_k} for the strengthened recursion."""
        assert decay_bound_holds(k)

    def test_original_recursion_misses_decay_bound(self):
        """Test that the original recursion decays too slowly at k = 2."""
        assert decay_bound_holds(1, VSeqVariant.ORIGINAL)
        assert not decay_bound_holds(2, VSeqVariant.ORIGINAL)


@pytest.mark.unit
class TestLemmaMod:
    """Test distances from 2^j c alpha to alpha Z."""

    def test_dyadic_multiplier_reaches_zero(self):
        """Test that c = 3/8 gives distance 0 from j = 3 on."""
        report = lemma_mod_check(Fraction(3, 8), range(0, 41))
        assert report.dyadic_order == 3
        assert report.zero_from_order
        assert report.distances[2] > 0

    def test_non_dyadic_multiplier_stays_away(self):
        """Test that c = 1/3 stays at alpha/3 > alpha/4."""
        report = lemma_mod_check(Fraction(1, 3), range(0, 41))
        alpha = alpha_partial(3).value.to_fraction()
        assert report.dyadic_order is None
        assert report.min_distance == alpha / 3
        assert report.stays_above_threshold

    def test_bad_range(self):
        """Test that an empty or negative j range is rejected."""
        with pytest.raises(PreconditionError):
            lemma_mod_check(Fraction(1, 3), [])
        with pytest.raises(PreconditionError):
            lemma_mod_check(Fraction(1, 3), [-1])


@pytest.mark.unit
class TestConstantsReport:
    """Test the constants dump."""

    def test_report_at_default_cutoff(self):
        """Test the dump for K = 3."""
        report = constants_report(3)
        assert report["v"] == [1, 4, 37]
        assert report["alpha_hex"] == "0x1200000001p-37"
        assert report["frac_n_alpha"]["2"]["hex"] == "0x1p-33"
        assert report["decay_bound_holds"] == {"1": True, "2": True}

    def test_report_beyond_representable(self):
        """Test that K = 4 lists v_4 but keeps alpha at K = 3."""
        report = constants_report(4)
        assert report["v"][-1] == V4
        assert report["alpha_cutoff"] == 3
        assert report["decay_bound_holds"]["3"] is True
