"""
Invariant-measure laboratory for the Furstenberg map and its suspensions.

Measures are weighted sample clouds on T^2 stored as numpy arrays of angles in
turns. f_K(theta1, theta2) = exp(2 pi i (H_K(theta1) - theta2)) is the truncated
invariant function; its level sets carry the extremal invariant measures.
"""

import cmath
import enum
import logging
import math
from dataclasses import dataclass, field
from typing import Callable, Dict, List, Optional, Sequence, Tuple, Union

import numpy as np
from scipy import optimize, stats

from src.config import LabConfig
from src.errors import InsufficientSamples, PreconditionError
from src.services.dyadic import DyadicAngle, frac_n_alpha, representable_cutoff
from src.services.groups import SurfaceGroup
from src.services.series import H_array, eval_R_trunc, h_real_array, working_alpha
from src.tools.dynamics import FurstenbergMap, TorusPoint
from src.utils.seeding import SeededRNG

logger = logging.getLogger(__name__)

TestFunction = Callable[[np.ndarray, np.ndarray], np.ndarray]
S0 = Union[float, complex]


def s0_turns(s0: S0) -> float:
    """A level-set parameter as an angle in turns (complex values must have modulus 1)."""
    if isinstance(s0, complex):
        if abs(abs(s0) - 1.0) > 1e-9:
            raise PreconditionError("s0 must lie on the unit circle")
        return (cmath.phase(s0) / (2 * math.pi)) % 1.0
    return float(s0) % 1.0


def circle_gap(a: np.ndarray, b: float) -> np.ndarray:
    """Circle distance in turns between angles a and b."""
    d = np.mod(np.asarray(a) - b, 1.0)
    return np.minimum(d, 1.0 - d)


def f_trunc(p: TorusPoint, K: int) -> complex:
    """f_K(p) = R_K(zeta1) / zeta2."""
    R = eval_R_trunc(p.theta1, K).value
    return R * cmath.exp(-2j * math.pi * float(p.theta2))


def f_turns_array(theta1: np.ndarray, theta2: np.ndarray, K: int) -> np.ndarray:
    """arg f_K / 2 pi in [0, 1)."""
    return np.mod(H_array(theta1, K) - theta2, 1.0)


def f_trunc_array(theta1: np.ndarray, theta2: np.ndarray, K: int) -> np.ndarray:
    return np.exp(2j * np.pi * (H_array(theta1, K) - theta2))


@dataclass
class TruncatedInvariant:
    """f_K with the bookkeeping of how far it is from exact invariance under T."""

    K: int

    def __call__(self, p: TorusPoint) -> complex:
        return f_trunc(p, self.K)

    def evaluate(self, theta1: np.ndarray, theta2: np.ndarray) -> np.ndarray:
        return f_trunc_array(theta1, theta2, self.K)

    def defect_budget(self) -> float:
        """
        sup |f_K(T p) / f_K(p) - 1| for T built at the representable cutoff.

        The ratio is exp(2 pi i (h_K - h_K')), and |h_K - h_K'| is at most
        sum_{K<k<=K'} (2/k) 2 sin(pi frac(n_k alpha)).
        """
        top = representable_cutoff(max(self.K + 1, LabConfig.SERIES_CUTOFF))
        gap = 0.0
        for k in range(self.K + 1, top + 1):
            if k < top:
                a = float(frac_n_alpha(k, top).value)
            else:
                a = 0.0
            gap += (2.0 / k) * 2.0 * math.sin(math.pi * a)
        tail = working_alpha(self.K).tail.as_float()
        return 2 * math.pi * gap + tail


class FiberMapKind(str, enum.Enum):
    ROTATION = "rotation"
    FURSTENBERG = "furstenberg"
    ATTRACTOR = "attractor"


@dataclass
class FiberMap:
    """
    A diffeomorphism of T^2 acting on arrays of angles.

    ROTATION moves theta1 by ``angle``; FURSTENBERG is the truncated skew
    product; ATTRACTOR is theta -> theta - beta sin(2 pi theta) on both
    coordinates, with an attracting fixed point at the origin.
    """

    kind: FiberMapKind
    angle: float = 0.0
    K: int = LabConfig.SERIES_CUTOFF
    beta: float = LabConfig.ATTRACTOR_BETA

    def __post_init__(self):
        self.kind = FiberMapKind(self.kind)
        if self.kind is FiberMapKind.ATTRACTOR and not 0 < self.beta < 1 / (2 * math.pi):
            raise PreconditionError("ATTRACTOR needs 0 < beta < 1/(2 pi) to stay a diffeomorphism")
        if self.kind is FiberMapKind.FURSTENBERG:
            # alpha has 37 fractional bits, so the float is exact
            self.angle = float(working_alpha(self.K).value)

    @classmethod
    def rotation(cls, angle: float = (math.sqrt(5) - 1) / 2) -> "FiberMap":
        return cls(FiberMapKind.ROTATION, angle=angle)

    @classmethod
    def furstenberg(cls, K: int = LabConfig.SERIES_CUTOFF) -> "FiberMap":
        return cls(FiberMapKind.FURSTENBERG, K=K)

    @classmethod
    def attractor(cls, beta: float = LabConfig.ATTRACTOR_BETA) -> "FiberMap":
        return cls(FiberMapKind.ATTRACTOR, beta=beta)

    @property
    def name(self) -> str:
        return self.kind.value

    def is_identity(self) -> bool:
        return self.kind is FiberMapKind.ROTATION and self.angle % 1.0 == 0.0

    def apply(self, theta1: np.ndarray, theta2: np.ndarray) -> Tuple[np.ndarray, np.ndarray]:
        theta1 = np.asarray(theta1, dtype=float)
        theta2 = np.asarray(theta2, dtype=float)
        if self.kind is FiberMapKind.ROTATION:
            return np.mod(theta1 + self.angle, 1.0), theta2
        if self.kind is FiberMapKind.FURSTENBERG:
            return np.mod(theta1 + self.angle, 1.0), np.mod(theta2 + h_real_array(theta1, self.K), 1.0)
        return self._contract(theta1), self._contract(theta2)

    def inverse(self, theta1: np.ndarray, theta2: np.ndarray) -> Tuple[np.ndarray, np.ndarray]:
        theta1 = np.asarray(theta1, dtype=float)
        theta2 = np.asarray(theta2, dtype=float)
        if self.kind is FiberMapKind.ROTATION:
            return np.mod(theta1 - self.angle, 1.0), theta2
        if self.kind is FiberMapKind.FURSTENBERG:
            back = np.mod(theta1 - self.angle, 1.0)
            return back, np.mod(theta2 - h_real_array(back, self.K), 1.0)
        return self._expand(theta1), self._expand(theta2)

    def _contract(self, theta: np.ndarray) -> np.ndarray:
        return np.mod(theta - self.beta * np.sin(2 * np.pi * theta), 1.0)

    def _expand(self, theta: np.ndarray) -> np.ndarray:
        """Solve x - beta sin(2 pi x) = theta; the map is monotone so Newton converges."""
        beta = self.beta
        x = optimize.newton(
            lambda x: x - beta * np.sin(2 * np.pi * x) - theta,
            np.array(theta, dtype=float, copy=True),
            fprime=lambda x: 1 - 2 * np.pi * beta * np.cos(2 * np.pi * x),
            tol=1e-14,
            maxiter=100,
        )
        return np.mod(x, 1.0)

    def to_dict(self) -> Dict:
        return {"kind": self.kind.value, "angle": self.angle, "K": self.K, "beta": self.beta}


@dataclass
class EmpiricalMeasure:
    theta1: np.ndarray
    theta2: np.ndarray
    weights: np.ndarray

    def __post_init__(self):
        self.theta1 = np.asarray(self.theta1, dtype=float)
        self.theta2 = np.asarray(self.theta2, dtype=float)
        self.weights = np.asarray(self.weights, dtype=float)
        if not (self.theta1.shape == self.theta2.shape == self.weights.shape):
            raise ValueError("sample arrays must have equal shapes")
        if np.any(self.weights < 0):
            raise ValueError("weights must be non-negative")

    @classmethod
    def uniform_weights(cls, theta1: np.ndarray, theta2: np.ndarray) -> "EmpiricalMeasure":
        n = len(theta1)
        return cls(theta1, theta2, np.full(n, 1.0 / n) if n else np.zeros(0))

    @classmethod
    def point_mass(cls, p: Union[TorusPoint, Tuple[float, float]]) -> "EmpiricalMeasure":
        t1, t2 = p.as_floats() if isinstance(p, TorusPoint) else p
        return cls(np.array([t1]), np.array([t2]), np.array([1.0]))

    @classmethod
    def haar(cls, n: int, seed: int = LabConfig.DEFAULT_SEED, workers: Optional[int] = None) -> "EmpiricalMeasure":
        samples = SeededRNG(seed).uniform_torus(n, workers)
        return cls.uniform_weights(samples[:, 0], samples[:, 1])

    @classmethod
    def haar_grid(cls, side: int = 256) -> "EmpiricalMeasure":
        """Midpoint lattice approximation of Haar measure, for quadrature oracles."""
        axis = (np.arange(side) + 0.5) / side
        t1, t2 = np.meshgrid(axis, axis, indexing="ij")
        return cls.uniform_weights(t1.ravel(), t2.ravel())

    def __len__(self) -> int:
        return len(self.theta1)

    @property
    def total(self) -> float:
        return float(self.weights.sum())

    def integrate(self, fn: TestFunction) -> complex:
        values = np.asarray(fn(self.theta1, self.theta2))
        return complex(np.sum(self.weights * values))

    def pushforward(self, fmap: FiberMap) -> "EmpiricalMeasure":
        t1, t2 = fmap.apply(self.theta1, self.theta2)
        return EmpiricalMeasure(t1, t2, self.weights)

    def head(self, n: int) -> "EmpiricalMeasure":
        """The Cesaro measure of the first n samples, renormalized."""
        return EmpiricalMeasure.uniform_weights(self.theta1[:n], self.theta2[:n])


def trig_test_functions(max_degree: int = 1) -> Dict[str, TestFunction]:
    """cos and sin of 2 pi (p theta1 + q theta2) for 0 < max(|p|, |q|) <= max_degree, up to sign."""
    functions: Dict[str, TestFunction] = {}
    for p in range(0, max_degree + 1):
        for q in range(-max_degree, max_degree + 1):
            if (p, q) <= (0, 0):
                continue
            functions[f"cos({p},{q})"] = lambda t1, t2, p=p, q=q: np.cos(2 * np.pi * (p * t1 + q * t2))
            functions[f"sin({p},{q})"] = lambda t1, t2, p=p, q=q: np.sin(2 * np.pi * (p * t1 + q * t2))
    return functions


def builtin_test_function(name: str, K: int = LabConfig.SERIES_CUTOFF) -> TestFunction:
    """ZETA1, ZETA2, F (f_K), RE_F (Re f_K) or ONE."""
    name = name.upper()
    if name == "ZETA1":
        return lambda t1, t2: np.exp(2j * np.pi * t1)
    if name == "ZETA2":
        return lambda t1, t2: np.exp(2j * np.pi * t2)
    if name == "F":
        return lambda t1, t2: f_trunc_array(t1, t2, K)
    if name == "RE_F":
        return lambda t1, t2: f_trunc_array(t1, t2, K).real
    if name == "ONE":
        return lambda t1, t2: np.ones_like(np.asarray(t1, dtype=float))
    raise PreconditionError(f"unknown test function {name!r}")


@dataclass
class CutMeasure:
    """mu_{s0, delta}: Haar restricted to {f_K in the arc of length delta around s0}."""

    measure: EmpiricalMeasure
    s0: float
    delta: float
    K: int
    sampled: int
    accepted: int
    f_turns: np.ndarray

    @property
    def acceptance_fraction(self) -> float:
        return self.accepted / self.sampled

    @property
    def sigma(self) -> float:
        """Binomial standard deviation of the acceptance fraction."""
        return math.sqrt(self.delta * (1 - self.delta) / self.sampled)

    def f_range(self) -> Tuple[float, float]:
        """Arc of f-values hit, as (start, length) in turns measured from s0."""
        offsets = np.mod(self.f_turns - self.s0 + 0.5, 1.0) - 0.5
        return float(offsets.min()), float(offsets.max() - offsets.min())

    def to_dict(self) -> Dict:
        return {
            "s0_turns": self.s0,
            "delta": self.delta,
            "K": self.K,
            "sampled": self.sampled,
            "accepted": self.accepted,
            "acceptance_fraction": self.acceptance_fraction,
            "sigma": self.sigma,
        }


def mu_s0_delta(
    s0: S0,
    delta: float,
    K: int = LabConfig.SERIES_CUTOFF,
    N: int = 10**6,
    seed: int = LabConfig.DEFAULT_SEED,
    workers: Optional[int] = None,
) -> CutMeasure:
    """
    Rejection-sample Haar measure keeping points with f_K within delta/2 turns of s0.

    The acceptance fraction estimates delta (the f-level sets foliate T^2 with
    uniform first-coordinate marginals). If N * delta is below the minimum
    acceptance count, N is widened once; a still-short sample raises.
    """
    if not 0 < delta <= 1:
        raise PreconditionError("delta must lie in (0, 1]")
    if N < 1:
        raise PreconditionError("N must be positive")
    centre = s0_turns(s0)
    if N * delta < LabConfig.MIN_ACCEPTED:
        widened = math.ceil(2 * LabConfig.MIN_ACCEPTED / delta)
        logger.warning("N=%d too small for delta=%g, widening to %d", N, delta, widened)
        N = widened
    samples = SeededRNG(seed).uniform_torus(N, workers)
    t1, t2 = samples[:, 0], samples[:, 1]
    turns = f_turns_array(t1, t2, K)
    keep = np.ones(N, dtype=bool) if delta >= 1 else circle_gap(turns, centre) < delta / 2
    accepted = int(keep.sum())
    if accepted < LabConfig.MIN_ACCEPTED:
        raise InsufficientSamples(f"only {accepted} of {N} samples accepted for delta={delta}")
    measure = EmpiricalMeasure.uniform_weights(t1[keep], t2[keep])
    return CutMeasure(measure, centre, delta, K, N, accepted, turns[keep])


@dataclass
class GraphMeasure:
    """Lebesgue measure on theta1 lifted to the graph theta2 = H_K(theta1) - s0 (f_K = s0 there)."""

    s0: float
    K: int = LabConfig.SERIES_CUTOFF
    resolution_bits: int = 14

    def __post_init__(self):
        self.s0 = s0_turns(self.s0)
        if self.resolution_bits < 10:
            raise PreconditionError("graph quadrature needs at least 2^10 points")

    def grid(self) -> Tuple[np.ndarray, np.ndarray]:
        theta1 = np.arange(1 << self.resolution_bits, dtype=float) / (1 << self.resolution_bits)
        theta2 = np.mod(H_array(theta1, self.K) - self.s0, 1.0)
        return theta1, theta2

    def as_measure(self) -> EmpiricalMeasure:
        return EmpiricalMeasure.uniform_weights(*self.grid())


def graph_integrate(gm: GraphMeasure, testfn: Union[str, TestFunction]) -> complex:
    """Quadrature of a test function over the graph against uniform theta1."""
    fn = builtin_test_function(testfn, gm.K) if isinstance(testfn, str) else testfn
    theta1, theta2 = gm.grid()
    values = np.asarray(fn(theta1, theta2))
    real = math.fsum(np.real(values)) / len(theta1)
    imag = math.fsum(np.imag(values)) / len(theta1) if np.iscomplexobj(values) else 0.0
    return complex(real, imag)


def marginal_uniformity(measure: EmpiricalMeasure, bins: int = 1 << 10) -> float:
    """Chi-square p-value of the weighted first-circle marginal against the uniform law."""
    if len(measure) < bins:
        raise PreconditionError(f"{len(measure)} samples cannot fill {bins} bins")
    weights, _ = np.histogram(measure.theta1, bins=bins, range=(0.0, 1.0), weights=measure.weights)
    counts = weights * (len(measure) / measure.total)
    return float(stats.chisquare(counts).pvalue)


def graph_uniformity(gm: GraphMeasure, bins: int = 1 << 10, fmap: Optional[FiberMap] = None) -> float:
    """
    Chi-square p-value of the first-circle marginal of F_* nu for the graph measure nu.

    F defaults to the Furstenberg map, which preserves nu; a map that does not
    preserve Lebesgue measure on the first circle is rejected.
    """
    fmap = fmap or FiberMap.furstenberg(gm.K)
    return marginal_uniformity(gm.as_measure().pushforward(fmap), bins)


@dataclass
class BirkhoffResult:
    counts: List[int]
    averages: List[complex]

    def to_dict(self) -> Dict:
        return {
            "n": [str(n) for n in self.counts],
            "re": [a.real for a in self.averages],
            "im": [a.imag for a in self.averages],
        }


def log_grid(n: int) -> List[int]:
    """1, 2, 4, ... up to n, always ending at n."""
    grid = []
    m = 1
    while m < n:
        grid.append(m)
        m *= 2
    grid.append(n)
    return grid


def orbit_arrays(p: TorusPoint, n: int, fmap: Optional[FurstenbergMap] = None) -> Tuple[np.ndarray, np.ndarray]:
    """
    Angles of p, T p, ..., T^{n-1} p as float arrays.

    theta1 is advanced exactly; theta2 uses the closed form
    theta2 + H_K(theta1 + j alpha) - H_K(theta1), which is exact when theta1 fits a double.
    """
    fmap = fmap or FurstenbergMap()
    E = max(p.theta1.exponent, fmap.alpha.exponent)
    if E > 53:
        points = fmap.orbit(p, n - 1)
        return (
            np.array([float(q.theta1) for q in points]),
            np.array([float(q.theta2) for q in points]),
        )
    modulus = 1 << E
    num = p.theta1.numerator << (E - p.theta1.exponent)
    step = fmap.alpha.numerator << (E - fmap.alpha.exponent)
    nums = np.empty(n, dtype=float)
    for j in range(n):
        nums[j] = num
        num = (num + step) % modulus
    theta1 = np.ldexp(nums, -E)
    base = H_array(np.array([theta1[0]]), fmap.K)[0]
    theta2 = np.mod(float(p.theta2) + H_array(theta1, fmap.K) - base, 1.0)
    return theta1, theta2


def birkhoff(
    p: TorusPoint,
    testfn: Union[str, TestFunction],
    n: int,
    K: int = LabConfig.SERIES_CUTOFF,
    fmap: Optional[FurstenbergMap] = None,
) -> BirkhoffResult:
    """Running averages (1/m) sum_{j<m} testfn(T^j p) on a logarithmic grid of m <= n."""
    if n < 1:
        raise PreconditionError("birkhoff needs n >= 1")
    fn = builtin_test_function(testfn, K) if isinstance(testfn, str) else testfn
    theta1, theta2 = orbit_arrays(p, n, fmap)
    values = np.asarray(fn(theta1, theta2), dtype=complex)
    sums = np.cumsum(values)
    grid = log_grid(n)
    return BirkhoffResult(grid, [complex(sums[m - 1] / m) for m in grid])


def invariance_defect(
    m: EmpiricalMeasure,
    fmap: FiberMap,
    testfns: Optional[Union[Dict[str, TestFunction], Sequence[TestFunction]]] = None,
) -> float:
    """max over test functions of |integral of phi o F dm - integral of phi dm|."""
    if testfns is None:
        testfns = trig_test_functions()
    functions = list(testfns.values()) if isinstance(testfns, dict) else list(testfns)
    pushed = m.pushforward(fmap)
    return max(abs(pushed.integrate(fn) - m.integrate(fn)) for fn in functions)


def wasserstein_to_uniform(theta: np.ndarray) -> float:
    """W1 between the empirical law of theta and the uniform law on [0, 1)."""
    n = len(theta)
    reference = (np.arange(n) + 0.5) / n
    return float(stats.wasserstein_distance(np.asarray(theta), reference))


@dataclass
class KrylovBogolyubovResult:
    measure: EmpiricalMeasure
    defects: Dict[str, float]
    history: Dict[int, float]
    converged: bool
    candidate_defects: Dict[str, float] = field(default_factory=dict)
    wasserstein_theta1: float = math.nan

    @property
    def non_converged(self) -> bool:
        return not self.converged

    def to_dict(self) -> Dict:
        return {
            "samples": len(self.measure),
            "defects": dict(self.defects),
            "history": {str(n): d for n, d in sorted(self.history.items())},
            "converged": self.converged,
            "non_convergence_flag": self.non_converged,
            "candidate_defects": dict(self.candidate_defects),
            "wasserstein_theta1": self.wasserstein_theta1,
        }


def krylov_bogolyubov(
    maps: Sequence[FiberMap],
    n: int,
    seed: int = LabConfig.DEFAULT_SEED,
    initial: Optional[Union[TorusPoint, Tuple[float, float]]] = None,
    tolerance: float = LabConfig.DEFECT_TOLERANCE,
) -> KrylovBogolyubovResult:
    """
    Cesaro averages of pushforwards of a point mass along round-robin words.

    The cloud x_0, x_1 = F_0(x_0), x_2 = F_1(x_1), ... cycles through the maps.
    Defects (max over generators) are recorded at n/8, n/4, n/2 and n; the run
    counts as converged when the final defect is within tolerance or has
    dropped by a factor of four over those three doublings.

    The Haar measure is reported as the rotation-invariant candidate, with its
    defect under each map.
    """
    if not maps:
        raise PreconditionError("krylov_bogolyubov needs at least one map")
    if n < 8:
        raise PreconditionError("krylov_bogolyubov needs n >= 8")
    if initial is None:
        start = SeededRNG(seed).generator().random(2)
        x1, x2 = np.array([start[0]]), np.array([start[1]])
    else:
        t1, t2 = initial.as_floats() if isinstance(initial, TorusPoint) else initial
        x1, x2 = np.array([float(t1)]), np.array([float(t2)])
    theta1 = np.empty(n)
    theta2 = np.empty(n)
    for j in range(n):
        theta1[j], theta2[j] = x1[0], x2[0]
        x1, x2 = maps[j % len(maps)].apply(x1, x2)
    cloud = EmpiricalMeasure.uniform_weights(theta1, theta2)

    def defects_of(measure: EmpiricalMeasure) -> Dict[str, float]:
        return {f"{i}:{fm.name}": invariance_defect(measure, fm) for i, fm in enumerate(maps)}

    history = {}
    for size in (n // 8, n // 4, n // 2, n):
        history[size] = max(defects_of(cloud.head(size)).values())
    defects = defects_of(cloud)
    final = history[n]
    converged = final <= tolerance or final <= history[n // 8] / 4
    if not converged:
        logger.warning("Krylov-Bogolyubov averages did not converge: defect %.3g at n=%d", final, n)
    haar = EmpiricalMeasure.haar_grid()
    candidate = {f"{i}:{fm.name}": invariance_defect(haar, fm) for i, fm in enumerate(maps)}
    return KrylovBogolyubovResult(
        cloud, defects, history, converged, candidate, wasserstein_to_uniform(theta1)
    )


def level_set_point(
    s0: S0,
    K: int = LabConfig.SERIES_CUTOFF,
    theta1: Union[DyadicAngle, float] = 0.0,
    precision_bits: int = LabConfig.THETA2_PRECISION_BITS,
) -> TorusPoint:
    """A point with f_K(p) = s0, to theta2 precision."""
    t1 = theta1 if isinstance(theta1, DyadicAngle) else DyadicAngle.from_float(theta1)
    H = H_array(np.array([float(t1)]), K)[0]
    theta2 = DyadicAngle.from_float((H - s0_turns(s0)) % 1.0).round_to(precision_bits)
    return TorusPoint(t1, theta2)


class Suspension:
    """
    Holonomy of a suspension over a genus-g surface.

    Generator 2i-1 is a_i and 2i is b_i. F(a_1) is the Furstenberg map; with
    ``attractor`` F(a_2) is the attracting map; every other generator acts
    trivially, so the surface relator holds because each commutator has a
    trivial entry.
    """

    def __init__(self, genus: int = 2, K: int = LabConfig.SERIES_CUTOFF, attractor: bool = False):
        if genus < 1:
            raise PreconditionError("genus must be >= 1")
        if attractor and genus < 2:
            raise PreconditionError("the attracting generator needs genus >= 2")
        self.genus = genus
        self.maps: Dict[int, FiberMap] = {g: FiberMap.rotation(0.0) for g in range(1, 2 * genus + 1)}
        self.maps[1] = FiberMap.furstenberg(K)
        if attractor:
            self.maps[3] = FiberMap.attractor()

    def act(self, word: Sequence[int], theta1: np.ndarray, theta2: np.ndarray) -> Tuple[np.ndarray, np.ndarray]:
        """Left action: the last letter acts first."""
        t1, t2 = np.asarray(theta1, dtype=float), np.asarray(theta2, dtype=float)
        for letter in reversed(word):
            fmap = self.maps[abs(letter)]
            t1, t2 = fmap.apply(t1, t2) if letter > 0 else fmap.inverse(t1, t2)
        return t1, t2

    def relator_defect(self, samples: int = 1024, seed: int = LabConfig.DEFAULT_SEED) -> float:
        """Max torus distance moved by the surface relator on seeded sample points."""
        points = SeededRNG(seed).uniform_torus(samples)
        relator = SurfaceGroup(self.genus).relator
        t1, t2 = self.act(relator, points[:, 0], points[:, 1])
        return float(max(circle_gap(t1 - points[:, 0], 0.0).max(), circle_gap(t2 - points[:, 1], 0.0).max()))

    def holonomy(self) -> List[FiberMap]:
        """The non-trivial generator maps, ready for krylov_bogolyubov."""
        return [fm for _, fm in sorted(self.maps.items()) if not fm.is_identity()]
