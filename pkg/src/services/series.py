"""
Lacunary series h, h_+, h_-, g, H and R truncated at index K.

Phases n_k * theta mod 1 are formed exactly as dyadics; only the final
trigonometric evaluation is floating point.
"""

import cmath
import enum
import logging
import math
from dataclasses import dataclass, field
from typing import Dict, List, Optional, Sequence, Tuple

import numpy as np

from src.config import LabConfig
from src.errors import PreconditionError
from src.services.dyadic import (
    AlphaPartial,
    DyadicAngle,
    TailBound,
    VSeqVariant,
    alpha_partial,
    frac_n_alpha,
    representable_cutoff,
    try_v,
    v_seq,
)

logger = logging.getLogger(__name__)

TWO_PI = 2.0 * math.pi

# float64 angles carry at most 1074 fractional bits; larger shifts land on 0 mod 1
_FLOAT_SHIFT_LIMIT = 1100


class SeriesKind(str, enum.Enum):
    H_SERIES = "h"
    HP_PLUS = "h+"
    HP_MINUS = "h-"
    H_FULL = "H"


@dataclass(frozen=True)
class LacunaryTerm:
    """One term of a lacunary series: index k != 0 with frequency sign(k) * 2^{v_|k|}."""

    k: int
    freq_exponent: int

    def __post_init__(self):
        if self.k == 0:
            raise PreconditionError("lacunary terms need k != 0")

    @property
    def sign(self) -> int:
        return 1 if self.k > 0 else -1

    def phase(self, theta: DyadicAngle) -> DyadicAngle:
        """sign(k) * n_|k| * theta mod 1, exact."""
        shifted = theta.mul_pow2(self.freq_exponent)
        return shifted if self.sign > 0 else -shifted


@dataclass
class TruncatedSeries:
    """A lacunary series cut at K with its tail bound and the terms dropped at desk scale."""

    kind: SeriesKind
    K: int
    terms: List[LacunaryTerm]
    tail_bound: TailBound
    dropped_terms: List[int] = field(default_factory=list)

    @property
    def formal(self) -> bool:
        """H has no uniform tail bound; its truncations are formal."""
        return self.kind is SeriesKind.H_FULL


@dataclass
class SeriesValue:
    value: complex
    tail_bound: TailBound
    K: int
    alpha_cutoff: int
    dropped_terms: List[int]
    formal: bool = False

    def to_dict(self) -> Dict:
        return {
            "value_re": self.value.real,
            "value_im": self.value.imag,
            "tail_bound": None if self.formal else self.tail_bound.render(),
            "tail_bound_f64": None if self.formal else self.tail_bound.as_float(),
            "formal_truncation": self.formal,
            "K": self.K,
            "alpha_cutoff": self.alpha_cutoff,
            "dropped_terms": list(self.dropped_terms),
        }


def working_alpha(K: int = LabConfig.SERIES_CUTOFF) -> AlphaPartial:
    """
    The alpha used by h, g and the dynamics.

    The documented cutoff is K + 1; it is raised to at least the default series
    cutoff and clipped to the largest representable index.
    """
    wanted = max(K + 1, LabConfig.SERIES_CUTOFF)
    cutoff = representable_cutoff(wanted)
    if cutoff < wanted:
        logger.info("alpha cutoff %d clipped to %d (digit budget)", wanted, cutoff)
    return alpha_partial(cutoff)


def _active_indices(K: int) -> Tuple[int, List[int]]:
    if K < 1:
        raise PreconditionError("series need K >= 1")
    active = min(K, representable_cutoff(K))
    dropped = list(range(active + 1, K + 1))
    if dropped:
        logger.info("series terms %s dropped (phases beyond the digit budget)", dropped)
    return active, dropped


def _h_tail(K: int) -> TailBound:
    # sum_{|k|>K} (1/|k|) 2pi 2^{-|k| n_|k|} <= 2 * 2 * (1/(K+1)) * 2pi * 2^{-(K+1) n_{K+1}}
    coefficient = 4.0 * TWO_PI / (K + 1)
    v_next = try_v(K + 1)
    if v_next is None or v_next > LabConfig.DIGIT_BUDGET_BITS:
        return TailBound.beyond_budget(coefficient=coefficient)
    return TailBound.exponent(-(K + 1) * (1 << v_next), coefficient)


def _alpha_error(active: int, alpha: AlphaPartial) -> TailBound:
    """Effect of replacing alpha by its partial sum in the k <= active phases."""
    seq = v_seq(active)
    total = TailBound.none()
    for k in range(1, active + 1):
        total = total + alpha.tail.shift(seq[k]).scale(2.0 * TWO_PI / k)
    return total


def truncated_series(kind: SeriesKind, K: int) -> TruncatedSeries:
    """Terms and tail bound for one kind of series at cutoff K."""
    kind = SeriesKind(kind)
    active, dropped = _active_indices(K)
    seq = v_seq(active)
    positive = [LacunaryTerm(k, seq[k]) for k in range(1, active + 1)]
    negative = [LacunaryTerm(-k, seq[k]) for k in range(1, active + 1)]
    if kind is SeriesKind.HP_PLUS:
        terms = positive
    elif kind is SeriesKind.HP_MINUS:
        terms = negative
    else:
        terms = [t for pair in zip(positive, negative) for t in pair]
    tail = TailBound.none() if kind is SeriesKind.H_FULL else _h_tail(active)
    if kind in (SeriesKind.HP_PLUS, SeriesKind.HP_MINUS):
        tail = tail.scale(0.5)
    return TruncatedSeries(kind, K, terms, tail, dropped)


def _difference_term(phase: DyadicAngle, shift: DyadicAngle) -> complex:
    """
    e^{2 pi i (phase + shift)} - e^{2 pi i phase} in half-angle form.

    Equals 2i sin(pi shift) e^{2 pi i (phase + shift/2)}; phase + shift/2 is exact.
    """
    mid = phase + DyadicAngle(shift.numerator, shift.exponent + 1)
    return 2j * math.sin(math.pi * float(shift)) * cmath.exp(2j * math.pi * float(mid))


def shift_sum(theta: DyadicAngle, shift: DyadicAngle, terms: Sequence[LacunaryTerm]) -> complex:
    parts = []
    for term in terms:
        phase = term.phase(theta)
        step = term.phase(shift)
        parts.append(_difference_term(phase, step) / abs(term.k))
    return complex(math.fsum(p.real for p in parts), math.fsum(p.imag for p in parts))


def eval_h(theta: DyadicAngle, K: int) -> SeriesValue:
    """
    Truncated h(theta) = sum_{0<|k|<=K} (1/|k|)(e^{2 pi i n_k alpha} - 1) e^{2 pi i n_k theta}.

    Args:
        theta: Exact angle
        K: Series cutoff (terms beyond the representable index are dropped and listed)

    Returns:
        SeriesValue whose tail bound covers the omitted terms and the alpha truncation
    """
    series = truncated_series(SeriesKind.H_SERIES, K)
    alpha = working_alpha(K)
    value = shift_sum(theta, alpha.value, series.terms)
    active = len(series.terms) // 2
    bound = series.tail_bound + _alpha_error(active, alpha)
    return SeriesValue(value, bound, K, alpha.K, series.dropped_terms)


def eval_h_plus(theta: DyadicAngle, K: int, minus: bool = False) -> SeriesValue:
    """h_+ (or h_- with ``minus``) on the unit circle."""
    series = truncated_series(SeriesKind.HP_MINUS if minus else SeriesKind.HP_PLUS, K)
    alpha = working_alpha(K)
    value = shift_sum(theta, alpha.value, series.terms)
    return SeriesValue(value, series.tail_bound, K, alpha.K, series.dropped_terms)


def eval_increment(theta: DyadicAngle, shift: DyadicAngle, K: int) -> float:
    """
    Real increment H_K(theta + shift) - H_K(theta), summed over k > 0 in paired form.

    With shift = n * alpha mod 1 this is the n-step fiber increment sum_{j<n} h(theta + j alpha).
    """
    active, _ = _active_indices(K)
    seq = v_seq(active)
    parts = []
    for k in range(1, active + 1):
        phase = theta.mul_pow2(seq[k])
        step = shift.mul_pow2(seq[k])
        mid = phase + DyadicAngle(step.numerator, step.exponent + 1)
        parts.append(-4.0 / k * math.sin(math.pi * float(step)) * math.sin(TWO_PI * float(mid)))
    return math.fsum(parts)


def h_real(theta: DyadicAngle, K: int) -> float:
    """The real scalar with g = e^{2 pi i h_real}."""
    return eval_increment(theta, working_alpha(K).value, K)


def eval_g(theta: DyadicAngle, K: int) -> SeriesValue:
    """g = e^{2 pi i h}; unit modulus because only the real part of h is exponentiated."""
    h = eval_h(theta, K)
    value = cmath.exp(2j * math.pi * h.value.real)
    # |e^{2 pi i x} - e^{2 pi i y}| <= 2 pi |x - y|
    bound = h.tail_bound.scale(TWO_PI)
    return SeriesValue(value, bound, K, h.alpha_cutoff, h.dropped_terms)


def eval_H_trunc(theta: DyadicAngle, K: int) -> SeriesValue:
    """Formal truncation H_K(theta) = sum_{0<|k|<=K} (1/|k|) e^{2 pi i n_k theta}."""
    series = truncated_series(SeriesKind.H_FULL, K)
    parts = []
    for term in series.terms:
        parts.append(cmath.exp(2j * math.pi * float(term.phase(theta))) / abs(term.k))
    value = complex(math.fsum(p.real for p in parts), math.fsum(p.imag for p in parts))
    return SeriesValue(value, series.tail_bound, K, 0, series.dropped_terms, formal=True)


def eval_R_trunc(theta: DyadicAngle, K: int) -> SeriesValue:
    H = eval_H_trunc(theta, K)
    value = cmath.exp(2j * math.pi * H.value.real)
    return SeriesValue(value, H.tail_bound, K, 0, H.dropped_terms, formal=True)


@dataclass
class CocycleResidual:
    """Per-term residuals of h = H(. + alpha) - H on one angle."""

    theta: DyadicAngle
    K: int
    alpha_cutoff: int
    reference_cutoff: int
    per_term: Dict[int, float]
    predicted: Dict[int, TailBound]

    @property
    def total(self) -> float:
        return max(self.per_term.values()) if self.per_term else 0.0

    def predicted_scale(self, k: int) -> float:
        """2 pi 2^{v_|k| - v_{c+1}} / |k|: the leading alpha-tail contribution for term k."""
        seq = v_seq(abs(k))
        v_next = try_v(self.alpha_cutoff + 1)
        if v_next is None:
            return 0.0
        return TWO_PI * math.ldexp(1.0, max(seq[abs(k)] - v_next, -2000)) / abs(k)

    def to_dict(self) -> Dict:
        return {
            "theta_hex": self.theta.hex(),
            "K": self.K,
            "alpha_cutoff": self.alpha_cutoff,
            "reference_cutoff": self.reference_cutoff,
            "per_term": {str(k): v for k, v in sorted(self.per_term.items())},
            "predicted": {str(k): b.render() for k, b in sorted(self.predicted.items())},
            "total": self.total,
        }


def cocycle_residual(theta: DyadicAngle, K: int, alpha_cutoff: Optional[int] = None) -> CocycleResidual:
    """
    |H_k(theta + alpha_c) - H_k(theta) - h_k(theta)| for each 0 < |k| <= K.

    h is built from the best representable alpha and H is shifted by alpha_c,
    so the residual measures the alpha_c truncation: about 2 pi 2^{v_k - v_{c+1}} / |k|.
    """
    series = truncated_series(SeriesKind.H_FULL, K)
    reference = working_alpha(K)
    if alpha_cutoff is None:
        alpha_cutoff = representable_cutoff(K + 1)
    if alpha_cutoff < 1:
        raise PreconditionError("alpha cutoff must be >= 1")
    alpha_cutoff = min(alpha_cutoff, representable_cutoff(alpha_cutoff))
    shifted_alpha = alpha_partial(alpha_cutoff)
    shifted = theta + shifted_alpha.value
    per_term: Dict[int, float] = {}
    predicted: Dict[int, TailBound] = {}
    for term in series.terms:
        H_after = cmath.exp(2j * math.pi * float(term.phase(shifted))) / abs(term.k)
        H_before = cmath.exp(2j * math.pi * float(term.phase(theta))) / abs(term.k)
        h_term = _difference_term(term.phase(theta), term.phase(reference.value)) / abs(term.k)
        per_term[term.k] = abs(H_after - H_before - h_term)
        predicted[term.k] = shifted_alpha.tail.shift(term.freq_exponent).scale(TWO_PI / abs(term.k))
    return CocycleResidual(theta, K, alpha_cutoff, reference.K, per_term, predicted)


@dataclass
class HolomorphyGap:
    radius: float
    K: int
    gap_log2: float
    bound_log2: float
    gap_is_bound: bool

    @property
    def bound_holds(self) -> bool:
        return self.gap_log2 <= self.bound_log2 + 1e-9


def holomorphy_gaps(
    K_max: int = 3,
    radii: Sequence[float] = (0.5, 1.0, 2.0),
    variant: VSeqVariant = VSeqVariant.STRENGTHENED,
) -> Dict[float, List[HolomorphyGap]]:
    """
    Cauchy gaps |h_+^{(K)} - h_+^{(K-1)}| at |zeta| = r, in log2 space.

    The gap at K is the modulus of term K, (1/K)|e^{2 pi i n_K alpha} - 1| r^{n_K},
    compared against the Abel estimate 2 pi (r / 2^m)^{n_K} with m = K for the
    strengthened recursion and m = 1 for the original one. n_K = 2^37 overflows
    any float power, hence the log2 bookkeeping.
    """
    variant = VSeqVariant(variant)
    seq = v_seq(K_max, variant)
    cutoff = representable_cutoff(K_max + 1, variant)
    report: Dict[float, List[HolomorphyGap]] = {}
    for r in radii:
        if r <= 0:
            raise PreconditionError("radii must be positive")
        entries = []
        for k in range(1, K_max + 1):
            n_k = float(1 << seq[k]) if seq[k] < 1000 else math.ldexp(1.0, 1000)
            if k < cutoff:
                item = frac_n_alpha(k, cutoff, variant)
                a = float(item.value)
            else:
                a = 0.0
            if a > 0.0:
                modulus_log2 = math.log2(2.0 * math.sin(math.pi * a))
                is_bound = False
            else:
                tail = item.tail if k < cutoff else _variant_tail(k, variant)
                modulus_log2 = math.log2(TWO_PI) + tail.log2 + math.log2(max(tail.coefficient, 1e-300))
                is_bound = True
            gap = modulus_log2 - math.log2(k) + n_k * math.log2(r)
            mult = k if variant is VSeqVariant.STRENGTHENED else 1
            bound = math.log2(TWO_PI) + n_k * (math.log2(r) - mult)
            entries.append(HolomorphyGap(r, k, gap, bound, is_bound))
        report[r] = entries
    return report


def _variant_tail(k: int, variant: VSeqVariant) -> TailBound:
    v_k = v_seq(k, variant)[k]
    v_next = try_v(k + 1, variant)
    if v_next is None:
        return TailBound.beyond_budget()
    return TailBound(1 + v_k - v_next)


def holomorphy_summary(report: Dict[float, List[HolomorphyGap]]) -> Dict[str, bool]:
    """Per radius: every gap within its bound and the gaps strictly shrinking."""
    summary = {}
    for r, entries in report.items():
        shrinking = all(b.gap_log2 < a.gap_log2 for a, b in zip(entries, entries[1:]))
        summary[repr(r)] = shrinking and all(e.bound_holds for e in entries)
    return summary


def phases_array(theta: np.ndarray, freq_exponent: int) -> np.ndarray:
    """2^v * theta mod 1 for float64 angles; exact since float angles are dyadic."""
    if freq_exponent > _FLOAT_SHIFT_LIMIT:
        return np.zeros_like(theta, dtype=float)
    return np.mod(np.ldexp(np.asarray(theta, dtype=float), freq_exponent), 1.0)


def H_array(theta: np.ndarray, K: int) -> np.ndarray:
    """Vectorised H_K on float64 angles (real: k and -k terms are conjugate)."""
    active, _ = _active_indices(K)
    seq = v_seq(active)
    total = np.zeros_like(np.asarray(theta, dtype=float))
    for k in range(1, active + 1):
        total += (2.0 / k) * np.cos(TWO_PI * phases_array(theta, seq[k]))
    return total


def h_real_array(theta: np.ndarray, K: int) -> np.ndarray:
    """Vectorised real h_K on float64 angles."""
    active, _ = _active_indices(K)
    seq = v_seq(active)
    alpha = working_alpha(K).value
    total = np.zeros_like(np.asarray(theta, dtype=float))
    for k in range(1, active + 1):
        step = alpha.mul_pow2(seq[k])
        half = float(DyadicAngle(step.numerator, step.exponent + 1))
        phase = phases_array(theta, seq[k])
        total += (-4.0 / k) * math.sin(math.pi * float(step)) * np.sin(TWO_PI * (phase + half))
    return total
