"""
Exact dyadic arithmetic for the Furstenberg constants.

Angles live in [0, 1) as m / 2^e with arbitrary-precision m. The frequencies
n_k = 2^{v_k} are never materialized: multiplying by n_k is a shift by v_k bits.
"""

from __future__ import annotations

import enum
import math
import re
from dataclasses import dataclass, field
from fractions import Fraction
from functools import lru_cache
from typing import Dict, Iterable, List, Optional, Tuple

from src.config import LabConfig
from src.errors import DigitBudgetExceeded, PreconditionError


def _budget(budget: Optional[int]) -> int:
    return LabConfig.DIGIT_BUDGET_BITS if budget is None else budget


@dataclass(frozen=True, order=False)
class DyadicAngle:
    """
    Exact angle numerator / 2^exponent reduced mod 1.

    The representation is canonical: numerator is odd, or the angle is zero and
    stored as 0 / 2^0. Equal angles therefore compare equal field by field.
    """

    numerator: int
    exponent: int

    def __post_init__(self):
        if self.exponent < 0:
            raise ValueError("exponent must be non-negative")
        num = self.numerator % (1 << self.exponent) if self.exponent else 0
        exp = self.exponent
        if num == 0:
            exp = 0
        else:
            shift = (num & -num).bit_length() - 1
            num >>= shift
            exp -= shift
        object.__setattr__(self, "numerator", num)
        object.__setattr__(self, "exponent", exp)

    @classmethod
    def zero(cls) -> DyadicAngle:
        return cls(0, 0)

    @classmethod
    def unit(cls, exponent: int, budget: Optional[int] = None) -> DyadicAngle:
        """The angle 2^{-exponent} (zero when exponent == 0)."""
        if exponent > _budget(budget):
            raise DigitBudgetExceeded(f"2^-{exponent}", exponent, _budget(budget))
        return cls(1, exponent)

    @classmethod
    def from_fraction(cls, value: Fraction) -> DyadicAngle:
        value = Fraction(value) % 1
        den = value.denominator
        if den & (den - 1):
            raise ValueError(f"{value} is not a dyadic rational")
        return cls(value.numerator, den.bit_length() - 1)

    @classmethod
    def from_float(cls, value: float) -> DyadicAngle:
        """Exact angle of a float (every finite float is a dyadic rational)."""
        if not math.isfinite(value):
            raise ValueError("angle must be finite")
        return cls.from_fraction(Fraction(value))

    @classmethod
    def parse(cls, text: str, round_bits: Optional[int] = None) -> DyadicAngle:
        """
        Parse ``0x<hex>p-<e>``, a decimal, or ``p/q``.

        Non-dyadic decimals are rejected unless ``round_bits`` is given, in which
        case they are rounded to that many fractional bits.
        """
        text = text.strip()
        match = re.fullmatch(r"0x([0-9a-fA-F]+)p-(\d+)", text)
        if match:
            return cls(int(match.group(1), 16), int(match.group(2)))
        value = Fraction(text)
        den = value.denominator
        if den & (den - 1):
            if round_bits is None:
                raise ValueError(f"{text!r} is not a dyadic rational")
            return cls(round(value * (1 << round_bits)), round_bits)
        return cls.from_fraction(value)

    def hex(self) -> str:
        """Bit-exact rendering, e.g. ``0x1200000001p-37``."""
        return f"{self.numerator:#x}p-{self.exponent}"

    def to_fraction(self) -> Fraction:
        return Fraction(self.numerator, 1 << self.exponent)

    def __float__(self) -> float:
        if self.numerator == 0:
            return 0.0
        if self.exponent <= 1074 + self.numerator.bit_length():
            return self.numerator / (1 << self.exponent)
        return 0.0

    def _aligned(self, other: DyadicAngle) -> Tuple[int, int, int]:
        exp = max(self.exponent, other.exponent)
        return (
            self.numerator << (exp - self.exponent),
            other.numerator << (exp - other.exponent),
            exp,
        )

    def __add__(self, other: DyadicAngle) -> DyadicAngle:
        a, b, exp = self._aligned(other)
        return DyadicAngle(a + b, exp)

    def __sub__(self, other: DyadicAngle) -> DyadicAngle:
        a, b, exp = self._aligned(other)
        return DyadicAngle(a - b, exp)

    def __neg__(self) -> DyadicAngle:
        return DyadicAngle(-self.numerator, self.exponent)

    def __lt__(self, other: DyadicAngle) -> bool:
        a, b, _ = self._aligned(other)
        return a < b

    def __le__(self, other: DyadicAngle) -> bool:
        return self == other or self < other

    def mul_pow2(self, j: int) -> DyadicAngle:
        """2^j * self mod 1: a left shift followed by reduction."""
        if j < 0:
            raise ValueError("shift must be non-negative")
        if j >= self.exponent:
            return DyadicAngle.zero()
        return DyadicAngle(self.numerator, self.exponent - j)

    def mul_int(self, n: int) -> DyadicAngle:
        """n * self mod 1 for an arbitrary integer n."""
        return DyadicAngle(self.numerator * n, self.exponent)

    def round_to(self, bits: int) -> DyadicAngle:
        """Round to at most ``bits`` fractional bits (ties to even)."""
        if self.exponent <= bits:
            return self
        drop = self.exponent - bits
        q, r = divmod(self.numerator, 1 << drop)
        half = 1 << (drop - 1)
        if r > half or (r == half and q & 1):
            q += 1
        return DyadicAngle(q, bits)

    def add_real(self, delta: float, bits: int) -> DyadicAngle:
        """Add a real increment, rounding the result to ``bits`` fractional bits."""
        return (self + DyadicAngle.from_float(delta % 1.0)).round_to(bits)

    def circle_distance(self, other: DyadicAngle) -> float:
        """Distance on R/Z in turns, in [0, 1/2]."""
        diff = self - other
        frac = diff.to_fraction()
        return float(min(frac, 1 - frac))


@dataclass(frozen=True)
class TailBound:
    """
    Upper bound ``coefficient * 2**log2`` with an exact integer exponent.

    The exponent stays exact far below float range (2^-412316860453 is fine).
    ``clamped`` marks bounds whose true exponent could not be computed within
    the digit budget and was replaced by -budget; the bound stays valid, only weaker.
    """

    log2: int
    coefficient: float = 1.0
    clamped: bool = False

    @classmethod
    def exponent(cls, log2: int, coefficient: float = 1.0) -> TailBound:
        return cls(log2, coefficient)

    @classmethod
    def beyond_budget(cls, budget: Optional[int] = None, coefficient: float = 1.0) -> TailBound:
        return cls(-_budget(budget), coefficient, True)

    @classmethod
    def none(cls) -> TailBound:
        return cls(log2=0, coefficient=0.0)

    def as_float(self) -> float:
        if self.coefficient == 0.0:
            return 0.0
        return math.ldexp(self.coefficient, max(self.log2, -2000))

    def scale(self, factor: float) -> TailBound:
        return TailBound(self.log2, self.coefficient * abs(factor), self.clamped)

    def shift(self, bits: int) -> TailBound:
        return TailBound(self.log2 + bits, self.coefficient, self.clamped)

    def __add__(self, other: TailBound) -> TailBound:
        if self.coefficient == 0.0:
            return other
        if other.coefficient == 0.0:
            return self
        hi, lo = (self, other) if self.log2 >= other.log2 else (other, self)
        gap = hi.log2 - lo.log2
        extra = math.ldexp(lo.coefficient, -gap) if gap < 2000 else 0.0
        # round up so the sum stays an upper bound
        coefficient = math.nextafter(hi.coefficient + extra, math.inf)
        return TailBound(hi.log2, coefficient, hi.clamped or lo.clamped)

    def below(self, log2: int) -> bool:
        """Whether the bound is strictly below 2^log2."""
        if self.coefficient == 0.0:
            return True
        return math.log2(self.coefficient) < log2 - self.log2

    def render(self) -> str:
        suffix = " (clamped)" if self.clamped else ""
        return f"{self.coefficient!r}*2^{self.log2}{suffix}"


class VSeqVariant(str, enum.Enum):
    """Recursion for the exponents v_k."""

    STRENGTHENED = "strengthened"  # v_{k+1} = k*2^{v_k} + v_k + 1, h entire on C*
    ORIGINAL = "original"  # v_{k+1} = 2^{v_k} + v_k + 1, h only on 1/2 < |z| < 2


@dataclass(frozen=True)
class VSeq:
    values: Tuple[int, ...]
    variant: VSeqVariant = VSeqVariant.STRENGTHENED

    def __getitem__(self, k: int) -> int:
        """v_k for 1-based k."""
        if not 1 <= k <= len(self.values):
            raise IndexError(f"v_{k} not computed (have v_1..v_{len(self.values)})")
        return self.values[k - 1]

    def __len__(self) -> int:
        return len(self.values)

    def as_list(self) -> List[int]:
        return list(self.values)


@lru_cache(maxsize=None)
def _v_values(K: int, variant: VSeqVariant, budget: int) -> Tuple[int, ...]:
    values = [1]
    for k in range(1, K):
        v = values[-1]
        mult = k if variant is VSeqVariant.STRENGTHENED else 1
        bits = v + mult.bit_length() + 1
        if bits > budget:
            raise DigitBudgetExceeded(f"v_{k + 1}", bits, budget)
        values.append(mult * (1 << v) + v + 1)
    return tuple(values)


def v_seq(
    K: int,
    variant: VSeqVariant = VSeqVariant.STRENGTHENED,
    budget: Optional[int] = None,
) -> VSeq:
    """
    Exponents v_1..v_K of the frequencies n_k = 2^{v_k}.

    Raises DigitBudgetExceeded when some v_k itself would need more bits than
    the budget (v_5 has about 4*10^11 bits).
    """
    if K < 1:
        raise PreconditionError("v_seq needs K >= 1")
    return VSeq(_v_values(K, VSeqVariant(variant), _budget(budget)), VSeqVariant(variant))


def try_v(k: int, variant: VSeqVariant = VSeqVariant.STRENGTHENED, budget: Optional[int] = None) -> Optional[int]:
    """v_k, or None when it cannot be computed within the budget."""
    try:
        return v_seq(k, variant, budget)[k]
    except DigitBudgetExceeded:
        return None


def representable_cutoff(
    K: int,
    variant: VSeqVariant = VSeqVariant.STRENGTHENED,
    budget: Optional[int] = None,
) -> int:
    """Largest K' <= K for which alpha_partial(K') fits in the digit budget."""
    best = 1
    for k in range(1, K + 1):
        v = try_v(k, variant, budget)
        if v is None or v > _budget(budget):
            break
        best = k
    return best


@dataclass(frozen=True)
class AlphaPartial:
    """Partial sum sum_{k<=K} 2^{-v_k} with a symbolic tail bound."""

    value: DyadicAngle
    K: int
    tail: TailBound
    vseq: VSeq

    def __float__(self) -> float:
        return float(self.value)


def alpha_tail(K: int, variant: VSeqVariant = VSeqVariant.STRENGTHENED, budget: Optional[int] = None) -> TailBound:
    """sum_{k>K} 2^{-v_k} < 2 * 2^{-v_{K+1}} (the v_k grow at least geometrically)."""
    v_next = try_v(K + 1, variant, budget)
    if v_next is None:
        # v_{K+1} > 2^{v_K} >= budget, so -budget is still an upper bound exponent
        return TailBound.beyond_budget(budget)
    return TailBound.exponent(1 - v_next)


@lru_cache(maxsize=None)
def _alpha_partial(K: int, variant: VSeqVariant, budget: int) -> AlphaPartial:
    seq = v_seq(K, variant, budget)
    top = seq[K]
    if top > budget:
        raise DigitBudgetExceeded(f"alpha_partial({K})", top, budget)
    numerator = sum(1 << (top - v) for v in seq.values)
    return AlphaPartial(DyadicAngle(numerator, top), K, alpha_tail(K, variant, budget), seq)


def alpha_partial(
    K: int,
    variant: VSeqVariant = VSeqVariant.STRENGTHENED,
    budget: Optional[int] = None,
) -> AlphaPartial:
    """Exact dyadic alpha_K = sum_{k=1..K} 2^{-v_k}; alpha_3 = 77309411329 / 2^37."""
    if K < 1:
        raise PreconditionError("alpha_partial needs K >= 1")
    return _alpha_partial(K, VSeqVariant(variant), _budget(budget))


def mul_pow2_mod1(a: DyadicAngle, j: int) -> DyadicAngle:
    """2^j * a mod 1, exact."""
    return a.mul_pow2(j)


@dataclass(frozen=True)
class FracNAlpha:
    """n_k * alpha mod 1 computed from alpha_K, with the tail from omitted terms."""

    k: int
    K: int
    value: DyadicAngle
    tail: TailBound
    decay_bound_log2: Optional[int]

    def meets_decay_bound(self) -> Optional[bool]:
        """
        Exact check of n_k alpha - [n_k alpha] < 2^{-k n_k}.

        value is a multiple of 2^{-E}; if value < 2^B and the tail is below
        2^{-E}, then value + tail < 2^B. None when the bound is not materializable.
        """
        if self.decay_bound_log2 is None:
            return None
        B = self.decay_bound_log2
        E = self.value.exponent
        if E + B < 0:
            value_ok = self.value.numerator == 0
        else:
            value_ok = self.value.numerator < (1 << (E + B))
        tail_ok = self.tail.coefficient <= 1.0 and self.tail.log2 <= min(-E, B - 1)
        return value_ok and tail_ok


def decay_bound_log2(k: int, variant: VSeqVariant = VSeqVariant.STRENGTHENED, budget: Optional[int] = None) -> Optional[int]:
    """-k * n_k as an integer, or None when n_k = 2^{v_k} is over budget."""
    v = try_v(k, variant, budget)
    if v is None or v > _budget(budget):
        return None
    return -k * (1 << v)


def frac_n_alpha(
    k: int,
    K: int,
    variant: VSeqVariant = VSeqVariant.STRENGTHENED,
    budget: Optional[int] = None,
) -> FracNAlpha:
    """
    n_k alpha mod 1 = sum_{l=k+1..K} 2^{v_k - v_l}, by direct shift-and-add.

    Independent of alpha_partial so the two can be checked against each other.
    """
    if not 1 <= k < K:
        raise PreconditionError(f"frac_n_alpha needs 1 <= k < K (got k={k}, K={K})")
    seq = v_seq(K, variant, budget)
    top = seq[K] - seq[k]
    if top > _budget(budget):
        raise DigitBudgetExceeded(f"n_{k} alpha_{K} mod 1", top, _budget(budget))
    numerator = sum(1 << (seq[K] - seq[l]) for l in range(k + 1, K + 1))
    tail = alpha_tail(K, variant, budget).shift(seq[k])
    return FracNAlpha(k, K, DyadicAngle(numerator, top), tail, decay_bound_log2(k, variant, budget))


def decay_bound_holds(
    k: int,
    variant: VSeqVariant = VSeqVariant.STRENGTHENED,
    budget: Optional[int] = None,
) -> bool:
    """
    Whether n_k alpha mod 1 < 2^{-k n_k}.

    Uses the exact comparison when alpha_{k+1} fits the budget and otherwise
    compares exponents only: the full tail is < 2^{1 + v_k - v_{k+1}}.
    """
    bound = decay_bound_log2(k, variant, budget)
    v_next = try_v(k + 1, variant, budget)
    if bound is None or v_next is None:
        raise DigitBudgetExceeded(f"decay bound for k={k}", 0, _budget(budget))
    if v_next <= _budget(budget):
        K = representable_cutoff(k + 3, variant, budget)
        result = frac_n_alpha(k, max(K, k + 1), variant, budget).meets_decay_bound()
        return bool(result)
    return 1 + try_v(k, variant, budget) - v_next <= bound


@dataclass
class LemmaModReport:
    """Distances dist(2^j y, alpha Z) for y = c * alpha_K over a range of j."""

    multiplier: Fraction
    K: int
    distances: Dict[int, Fraction] = field(default_factory=dict)
    dyadic_order: Optional[int] = None
    threshold: Fraction = Fraction(0)

    @property
    def min_distance(self) -> Fraction:
        return min(self.distances.values())

    @property
    def max_distance(self) -> Fraction:
        return max(self.distances.values())

    @property
    def zero_from_order(self) -> bool:
        """Distance is exactly 0 for every tested j >= N."""
        if self.dyadic_order is None:
            return False
        return all(d == 0 for j, d in self.distances.items() if j >= self.dyadic_order)

    @property
    def stays_above_threshold(self) -> bool:
        return self.min_distance > self.threshold


def lemma_mod_check(
    multiplier: Fraction,
    j_range: Iterable[int],
    K: int = 3,
    variant: VSeqVariant = VSeqVariant.STRENGTHENED,
) -> LemmaModReport:
    """
    Distances from 2^j * y to alpha Z on the real line for y = multiplier * alpha_K.

    dist(2^j c alpha, alpha Z) = alpha * ||2^j c|| with ||.|| the distance to Z.
    For dyadic c = k / 2^N the distance vanishes for all j >= N; for other
    rationals it stays bounded away from zero (threshold alpha / 4).
    """
    c = Fraction(multiplier)
    alpha = alpha_partial(K, variant).value.to_fraction()
    den = c.denominator
    order = den.bit_length() - 1 if den & (den - 1) == 0 else None
    report = LemmaModReport(c, K, dyadic_order=order, threshold=alpha / 4)
    for j in j_range:
        if j < 0:
            raise PreconditionError("lemma_mod_check needs j >= 0")
        scaled = c * (1 << j)
        frac = scaled - math.floor(scaled)
        report.distances[j] = alpha * min(frac, 1 - frac)
    if not report.distances:
        raise PreconditionError("lemma_mod_check needs a non-empty j range")
    return report


def constants_report(K: int, variant: VSeqVariant = VSeqVariant.STRENGTHENED) -> Dict:
    """The constants dump: v_1..v_K, alpha_K and n_k alpha mod 1 for k < K."""
    seq = v_seq(K, variant)
    K_alpha = representable_cutoff(K, variant)
    alpha = alpha_partial(K_alpha, variant)
    fracs = {}
    for k in range(1, K_alpha):
        item = frac_n_alpha(k, K_alpha, variant)
        fracs[str(k)] = {
            "hex": item.value.hex(),
            "float": float(item.value),
            "tail_bound": item.tail.render(),
            "decay_bound_log2": item.decay_bound_log2,
            "meets_decay_bound": item.meets_decay_bound(),
        }
    bounds = {}
    for k in range(1, K):
        try:
            bounds[str(k)] = decay_bound_holds(k, variant)
        except DigitBudgetExceeded:
            bounds[str(k)] = None
    return {
        "variant": seq.variant.value,
        "v": seq.as_list(),
        "alpha_cutoff": K_alpha,
        "alpha_hex": alpha.value.hex(),
        "alpha_float": float(alpha),
        "alpha_tail_bound": alpha.tail.render(),
        "frac_n_alpha": fracs,
        "decay_bound_holds": bounds,
    }
