"""
The Furstenberg skew product T(theta1, theta2) = (theta1 + alpha, theta2 + h(theta1)).

theta1 is an exact dyadic; theta2 is a fixed-precision dyadic rounded after
every update. Iterate counts are plain Python ints of any size.
"""

import logging
import math
from dataclasses import dataclass, field
from fractions import Fraction
from typing import Dict, Iterator, List, Optional, Sequence, Tuple

import numpy as np

from src.config import LabConfig
from src.errors import DigitBudgetExceeded, PreconditionError, SearchExhausted
from src.services.dyadic import (
    DyadicAngle,
    TailBound,
    representable_cutoff,
    try_v,
    v_seq,
)
from src.services.series import SeriesKind, eval_increment, shift_sum, truncated_series, working_alpha

logger = logging.getLogger(__name__)


@dataclass(frozen=True)
class TorusPoint:
    theta1: DyadicAngle
    theta2: DyadicAngle

    @classmethod
    def origin(cls) -> "TorusPoint":
        return cls(DyadicAngle.zero(), DyadicAngle.zero())

    @classmethod
    def from_floats(cls, theta1: float, theta2: float) -> "TorusPoint":
        return cls(DyadicAngle.from_float(theta1), DyadicAngle.from_float(theta2))

    @classmethod
    def parse(cls, text: str, round_bits: Optional[int] = None) -> "TorusPoint":
        """Parse ``theta1,theta2`` where each angle is hex-dyadic, decimal or p/q."""
        parts = text.split(",")
        if len(parts) != 2:
            raise ValueError(f"expected 'theta1,theta2', got {text!r}")
        return cls(
            DyadicAngle.parse(parts[0], round_bits),
            DyadicAngle.parse(parts[1], round_bits),
        )

    def as_floats(self) -> Tuple[float, float]:
        return float(self.theta1), float(self.theta2)

    def to_dict(self) -> Dict:
        return {
            "theta1_hex": self.theta1.hex(),
            "theta2_hex": self.theta2.hex(),
            "theta1_f64": float(self.theta1),
            "theta2_f64": float(self.theta2),
        }


def torus_distance(p: TorusPoint, q: TorusPoint) -> float:
    """Max of the two circle distances, in turns."""
    return max(p.theta1.circle_distance(q.theta1), p.theta2.circle_distance(q.theta2))


def commuting_alpha(coefficients: Sequence[int]) -> DyadicAngle:
    """alpha' = sum_k c_k 2^{-v_k} with odd c_k; shares n_k and the invariant f with alpha."""
    K = len(coefficients)
    if K < 1 or any(c % 2 == 0 for c in coefficients):
        raise PreconditionError("commuting family needs odd coefficients, one per term")
    cutoff = representable_cutoff(K)
    seq = v_seq(cutoff)
    total = DyadicAngle.zero()
    for k in range(1, cutoff + 1):
        total = total + DyadicAngle.unit(seq[k]).mul_int(coefficients[k - 1])
    return total


class FurstenbergMap:
    """
    T_alpha truncated at K.

    The fiber increment over n steps is H_K(theta1 + n alpha) - H_K(theta1),
    evaluated with exact phases, so n may be astronomically large.
    """

    def __init__(
        self,
        K: int = LabConfig.SERIES_CUTOFF,
        precision_bits: int = LabConfig.THETA2_PRECISION_BITS,
        coefficients: Optional[Sequence[int]] = None,
    ):
        if K < 1:
            raise PreconditionError("K must be >= 1")
        self.K = K
        self.precision_bits = precision_bits
        self.coefficients = tuple(coefficients) if coefficients else None
        if self.coefficients is None:
            self.alpha = working_alpha(K).value
        else:
            self.alpha = commuting_alpha(self.coefficients)

    def __repr__(self):
        return f"FurstenbergMap(K={self.K}, alpha={self.alpha.hex()})"

    def increment(self, theta1: DyadicAngle, n: int) -> float:
        return eval_increment(theta1, self.alpha.mul_int(n), self.K)

    def step(self, p: TorusPoint) -> TorusPoint:
        delta = eval_increment(p.theta1, self.alpha, self.K)
        return TorusPoint(p.theta1 + self.alpha, p.theta2.add_real(delta, self.precision_bits))

    def iterate_closed(self, p: TorusPoint, n: int) -> TorusPoint:
        if n < 0:
            raise PreconditionError("iterate count must be non-negative")
        if n == 0:
            return p
        shift = self.alpha.mul_int(n)
        delta = eval_increment(p.theta1, shift, self.K)
        return TorusPoint(p.theta1 + shift, p.theta2.add_real(delta, self.precision_bits))

    def orbit(self, p: TorusPoint, n: int) -> List[TorusPoint]:
        """p, T p, ..., T^n p by step composition."""
        points = [p]
        for _ in range(n):
            points.append(self.step(points[-1]))
        return points

    def rounding_budget(self, steps: int) -> float:
        """Accumulated theta2 rounding after ``steps`` updates."""
        return steps * math.ldexp(1.0, -self.precision_bits)


def step(p: TorusPoint, K: int = LabConfig.SERIES_CUTOFF) -> TorusPoint:
    return FurstenbergMap(K).step(p)


def iterate_closed(p: TorusPoint, n: int, K: int = LabConfig.SERIES_CUTOFF) -> TorusPoint:
    """
    T^n(p) in closed form.

    Args:
        p: Starting point
        n: Exact iterate count, any size
        K: Series cutoff

    Returns:
        The iterate; theta1 is exact, theta2 carries one rounding
    """
    return FurstenbergMap(K).iterate_closed(p, n)


def orbit(p: TorusPoint, n: int, K: int = LabConfig.SERIES_CUTOFF) -> List[TorusPoint]:
    return FurstenbergMap(K).orbit(p, n)


@dataclass
class SteerResult:
    point: TorusPoint
    u: float
    s_sum: complex
    s: int
    block_exponent: int
    drift: float
    r: float
    window: Tuple[float, float]

    @property
    def block_steps(self) -> int:
        return 1 << self.block_exponent

    @property
    def in_window(self) -> bool:
        return self.window[0] <= self.u <= self.window[1]

    def to_dict(self) -> Dict:
        return {
            "point": self.point.to_dict(),
            "u": self.u,
            "s_sum_im": self.s_sum.imag,
            "s": self.s,
            "block_steps": str(self.block_steps),
            "drift": self.drift,
            "r": self.r,
            "window": list(self.window),
            "in_window": self.in_window,
            "r_small": abs(self.r) < LabConfig.STEER_C,
        }


def block_exponent(s: int, K: int = LabConfig.SERIES_CUTOFF) -> int:
    """log2 of m_s = n_{s+1} / (2^4 n_s)."""
    if s < 2:
        raise PreconditionError("steering blocks start at s = 2 (m_1 = 1/2 is not an integer)")
    if s + 1 > K + 1:
        raise PreconditionError(f"s = {s} needs s + 1 <= K + 1 = {K + 1}")
    v_next = try_v(s + 1)
    seq = v_seq(s)
    if v_next is None:
        raise DigitBudgetExceeded(f"m_{s}", 0, LabConfig.DIGIT_BUDGET_BITS)
    exponent = v_next - seq[s] - 4
    if exponent > LabConfig.DIGIT_BUDGET_BITS:
        raise DigitBudgetExceeded(f"m_{s}", exponent, LabConfig.DIGIT_BUDGET_BITS)
    return exponent


def steering_window(s: int) -> Tuple[float, float]:
    return (-LabConfig.steer_b() / s, -LabConfig.steer_a() / s)


def steer_block(p: TorusPoint, s: int, K: int = LabConfig.SERIES_CUTOFF, fmap: Optional[FurstenbergMap] = None) -> SteerResult:
    """
    Apply T^{m_s} in closed form and report the fiber increment u.

    When theta1 = r / n_s with |r| small mod Z, u lies in [-b/s, -a/s].
    """
    fmap = fmap or FurstenbergMap(K)
    exponent = block_exponent(s, fmap.K)
    m_s = 1 << exponent
    shift = fmap.alpha.mul_pow2(exponent)
    seq = v_seq(s)
    scaled = p.theta1.mul_pow2(seq[s]).to_fraction()
    r = float(scaled if scaled <= Fraction(1, 2) else scaled - 1)
    series = truncated_series(SeriesKind.H_SERIES, fmap.K)
    s_sum = shift_sum(p.theta1, shift, series.terms)
    u = eval_increment(p.theta1, shift, fmap.K)
    point = fmap.iterate_closed(p, m_s)
    drift = point.theta1.circle_distance(p.theta1)
    return SteerResult(point, u, s_sum, s, exponent, drift, r, steering_window(s))


@dataclass
class RRecursion:
    """r^{(j)} from the steering recursion and its drift nu_j mod Z."""

    r: Fraction
    s: int
    j: int
    r_j: Fraction
    nu: Fraction
    tail: TailBound
    orbit_phase: DyadicAngle
    predicted_phase: DyadicAngle

    @property
    def phase_bound(self) -> Fraction:
        """j 2^{-j} 2^{-s}, or 2^{-s} (C = 1) when j = 0."""
        if self.j == 0:
            return Fraction(1, 1 << self.s)
        return Fraction(self.j, 1 << (self.j + self.s))

    @property
    def bound_holds(self) -> bool:
        return self.nu + Fraction(self.tail.as_float()) < self.phase_bound

    @property
    def agrees_with_orbit(self) -> bool:
        return self.orbit_phase == self.predicted_phase

    def to_dict(self) -> Dict:
        return {
            "r": str(self.r),
            "s": self.s,
            "j": self.j,
            "nu": str(self.nu),
            "nu_tail": self.tail.render(),
            "phase_bound": str(self.phase_bound),
            "bound_holds": self.bound_holds,
            "agrees_with_orbit": self.agrees_with_orbit,
        }


def r_recursion(r, s: int, j: int, K: int = LabConfig.SERIES_CUTOFF) -> RRecursion:
    """
    Evaluate r^{(j)} = r n_{s+j}/n_s + sum_{l=1..j} m_{s+l-1} sum_{t>=s+l} n_{s+j}/n_t.

    Inner sums run exactly up to the representable cutoff; the rest is a tail
    bound. The result is checked against n_{s+j} Theta_j computed from the
    actual j-block steering orbit starting at theta1 = r / n_s.
    """
    if s < 2:
        raise PreconditionError("r_recursion needs s >= 2")
    if j < 0 or s + j > K:
        raise PreconditionError(f"r_recursion needs 0 <= j and s + j <= K (s={s}, j={j}, K={K})")
    cutoff = representable_cutoff(K + 1)
    if s + j > cutoff:
        raise DigitBudgetExceeded(f"n_{s + j}", try_v(s + j) or 0, LabConfig.DIGIT_BUDGET_BITS)
    r = Fraction(r)
    seq = v_seq(cutoff)
    top = seq[s + j]
    r_j = r * (1 << (top - seq[s]))
    extra = Fraction(0)
    tail = TailBound.none()
    alpha_tail = working_alpha(K).tail
    for l in range(1, j + 1):
        m_exp = block_exponent(s + l - 1, K)
        inner = sum(Fraction(1 << top, 1 << seq[t]) for t in range(s + l, cutoff + 1))
        extra += inner * (1 << m_exp)
        tail = tail + alpha_tail.shift(m_exp + top)
    r_j += extra
    nu = extra - math.floor(extra)

    theta = DyadicAngle.from_fraction(r / (1 << seq[s]))
    alpha = working_alpha(K).value
    for l in range(1, j + 1):
        theta = theta + alpha.mul_pow2(block_exponent(s + l - 1, K))
    orbit_phase = theta.mul_pow2(top)
    predicted = DyadicAngle.from_fraction(r * (1 << (top - seq[s])) + nu)
    return RRecursion(r, s, j, r_j, nu, tail, orbit_phase, predicted)


def nearest_reachable(theta1: DyadicAngle, target: DyadicAngle, alpha: DyadicAngle) -> DyadicAngle:
    """The point of theta1 + alpha Z closest to target (the orbit is theta1 + 2^{-E} Z)."""
    E = alpha.exponent
    delta = (target - theta1).to_fraction()
    steps = round(delta * (1 << E))
    return theta1 + DyadicAngle(steps, E)


def rotation_count(theta1: DyadicAngle, target: DyadicAngle, alpha: DyadicAngle) -> int:
    """
    The least j >= 0 with theta1 + j alpha = target exactly.

    alpha = P / 2^E with P odd, so j = delta 2^E P^{-1} mod 2^E.
    """
    E = alpha.exponent
    if E == 0:
        raise PreconditionError("rotation by 0 reaches nothing")
    delta = target - theta1
    if delta.exponent > E:
        raise PreconditionError(f"{target.hex()} is not on the orbit of {theta1.hex()}")
    modulus = 1 << E
    D = delta.numerator << (E - delta.exponent)
    return (D * pow(alpha.numerator, -1, modulus)) % modulus


@dataclass
class DensityCertificate:
    base_point: TorusPoint
    target: TorusPoint
    epsilon: float
    rotation_steps: int
    block_list: List[int] = field(default_factory=list)
    block_steps: List[int] = field(default_factory=list)
    total_steps: int = 0
    achieved_distance: float = math.inf
    strategy: str = "trivial"
    s_nominal: Optional[int] = None
    s_used: Optional[int] = None

    def to_dict(self) -> Dict:
        return {
            "base_point": self.base_point.to_dict(),
            "target": self.target.to_dict(),
            "epsilon": self.epsilon,
            "rotation_steps": str(self.rotation_steps),
            "block_list": list(self.block_list),
            "block_steps": [str(m) for m in self.block_steps],
            "total_steps": str(self.total_steps),
            "achieved_distance": self.achieved_distance,
            "strategy": self.strategy,
            "s_nominal": self.s_nominal,
            "s_used": self.s_used,
        }

    @classmethod
    def from_dict(cls, data: Dict) -> "DensityCertificate":
        def point(d):
            return TorusPoint(DyadicAngle.parse(d["theta1_hex"]), DyadicAngle.parse(d["theta2_hex"]))

        return cls(
            base_point=point(data["base_point"]),
            target=point(data["target"]),
            epsilon=float(data["epsilon"]),
            rotation_steps=int(data["rotation_steps"]),
            block_list=list(data.get("block_list", [])),
            block_steps=[int(m) for m in data.get("block_steps", [])],
            total_steps=int(data["total_steps"]),
            achieved_distance=float(data.get("achieved_distance", math.inf)),
            strategy=data.get("strategy", "trivial"),
            s_nominal=data.get("s_nominal"),
            s_used=data.get("s_used"),
        )


def nominal_block_index(eps: float) -> int:
    """Smallest s >= STEER_N with b/s < eps/(4 pi) and 2 pi sum_{j>=s} 2^{-j} < eps/4."""
    s = LabConfig.STEER_N
    while not (LabConfig.steer_b() / s < eps / (4 * math.pi) and 2 * math.pi * 2.0 ** (1 - s) < eps / 4):
        s += 1
    return s


def _window_half_width(eps: float) -> float:
    return min(0.045, 0.9 * eps)


def _window_endpoints(target: TorusPoint, eps: float) -> Iterator[DyadicAngle]:
    """First-circle end positions scanned across the eps window around the target."""
    half_width = _window_half_width(eps)
    t1 = target.theta1.to_fraction()
    for offset in np.linspace(-half_width, half_width, LabConfig.LANDING_GRID_POINTS):
        yield DyadicAngle.from_fraction(t1 + Fraction(float(offset)))


def steering_block_count(fmap: FurstenbergMap, s: int, eps: float) -> int:
    """Number of m_s blocks whose accumulated first-circle drift fits inside the eps window."""
    drift = fmap.alpha.mul_pow2(block_exponent(s, fmap.K)).circle_distance(DyadicAngle.zero())
    if drift == 0:
        return 0
    return min(LabConfig.STEER_MAX_BLOCKS, int(_window_half_width(eps) // drift))


def _landing(
    fmap: FurstenbergMap,
    p: TorusPoint,
    target: TorusPoint,
    eps: float,
) -> Tuple[int, float]:
    """Land theta1 directly on reachable points near target.theta1; return the best iterate count."""
    best: Tuple[int, float] = (0, math.inf)
    for end in _window_endpoints(target, eps):
        landed = nearest_reachable(p.theta1, end, fmap.alpha)
        j = rotation_count(p.theta1, landed, fmap.alpha)
        distance = torus_distance(fmap.iterate_closed(p, j), target)
        if distance < best[1]:
            best = (j, distance)
            if distance <= eps / 2:
                break
    return best


def density_certificate(
    p: TorusPoint,
    target: TorusPoint,
    eps: float,
    K: int = LabConfig.SERIES_CUTOFF,
    fmap: Optional[FurstenbergMap] = None,
) -> DensityCertificate:
    """
    Constructive proof that the orbit of p comes within eps of target.

    Lands theta1 b block drifts behind a point of the eps window, then applies
    b steering blocks T^{m_s} so the drift carries theta1 back into the window
    while each block moves theta2 by u. Falls back to landing theta1 directly
    when no block fits the window. The returned count is checked with
    iterate_closed.

    Raises:
        PreconditionError: eps <= 0
        SearchExhausted: no strategy reached eps (carries the best certificate)
    """
    if eps <= 0:
        raise PreconditionError("eps must be positive")
    fmap = fmap or FurstenbergMap(K)
    if torus_distance(p, target) <= eps:
        return DensityCertificate(p, target, eps, 0, achieved_distance=torus_distance(p, target))

    s_nominal = nominal_block_index(eps)
    s_max = representable_cutoff(fmap.K + 1) - 1
    best = DensityCertificate(p, target, eps, 0, strategy="steering", s_nominal=s_nominal)
    if s_max >= LabConfig.STEER_N:
        s = min(s_nominal, s_max)
        if s < s_nominal:
            logger.info("block index %d capped to %d at desk scale", s_nominal, s)
        blocks = steering_block_count(fmap, s, eps)
        if blocks > 0:
            best = _steer(fmap, p, target, eps, s, blocks)
            best.s_nominal = s_nominal

    if best.achieved_distance > eps:
        logger.info("steering reached %.4g > eps=%.4g, landing directly", best.achieved_distance, eps)
        j_land, distance = _landing(fmap, p, target, eps)
        if distance < best.achieved_distance:
            best = DensityCertificate(
                p, target, eps, j_land, total_steps=j_land, achieved_distance=distance,
                strategy="landing", s_nominal=s_nominal, s_used=best.s_used,
            )

    ok, achieved = verify_certificate(best, fmap=fmap)
    best.achieved_distance = achieved
    if not ok:
        raise SearchExhausted(f"no certificate within eps={eps}; best distance {achieved:.4g}", best)
    logger.info("certificate via %s: %d steps, distance %.4g", best.strategy, best.total_steps, achieved)
    return best


def _steer(
    fmap: FurstenbergMap,
    p: TorusPoint,
    target: TorusPoint,
    eps: float,
    s: int,
    blocks: int,
) -> DensityCertificate:
    """Land blocks * frac(m_s alpha) behind each window point, then apply the m_s blocks."""
    m_s = 1 << block_exponent(s, fmap.K)
    span = fmap.alpha.mul_int(blocks * m_s)
    best = DensityCertificate(p, target, eps, 0, strategy="steering", s_used=s)
    for end in _window_endpoints(target, eps):
        landed = nearest_reachable(p.theta1, end - span, fmap.alpha)
        j = rotation_count(p.theta1, landed, fmap.alpha)
        total = j + blocks * m_s
        distance = torus_distance(fmap.iterate_closed(p, total), target)
        if distance < best.achieved_distance:
            best = DensityCertificate(
                p, target, eps, j, [s] * blocks, [m_s] * blocks, total,
                distance, "steering", None, s,
            )
            if distance <= eps / 2:
                break
    logger.debug("steering with %d blocks of m_%d reached %.4g", blocks, s, best.achieved_distance)
    return best


def verify_certificate(
    cert: DensityCertificate,
    K: int = LabConfig.SERIES_CUTOFF,
    fmap: Optional[FurstenbergMap] = None,
) -> Tuple[bool, float]:
    """Recompute T^{total_steps}(base_point) in closed form and measure the distance to target."""
    fmap = fmap or FurstenbergMap(K)
    if cert.total_steps != cert.rotation_steps + sum(cert.block_steps):
        return False, math.inf
    end = fmap.iterate_closed(cert.base_point, cert.total_steps)
    distance = torus_distance(end, cert.target)
    return distance <= cert.epsilon, distance
