"""
Towers of double covers that open closed loops.

Each level is the index-two subgroup cut out by a mod-2 cocycle. A loop whose
cocycle value is 1 lifts to an open path; a loop with value 0 lifts to two
closed loops, one from each sheet, and every such lift is carried to the next
level. A word is OPEN at level k once none of its lifts to level k is closed.
"""

from __future__ import annotations

import itertools
import logging
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from typing import Any, Dict, List, Optional, Sequence, Tuple, Union

import numpy as np

from src.config import LabConfig
from src.errors import PreconditionError, VerificationError
from src.services.groups import (
    Cocycle,
    IndexTwoSubgroup,
    Presentation,
    SurfaceGroup,
    Word,
    cocycle_eval,
    format_word,
    free_reduce,
    index_two_subgroup,
    parity_vector,
    schreier_labels,
)
from src.utils.seeding import SeededRNG

logger = logging.getLogger(__name__)

_BLOCK = 4096


@dataclass(frozen=True)
class CoverStep:
    """
    One double cover: base group, cocycle, and the rewriting data.

    The cover keeps all 2n - 1 Reidemeister-Schreier generators and both
    lifted relators; it is not reduced to a one-relator surface presentation
    on 4g' generators. Its genus is read from dim H^1(cover; Z/2) / 2.
    """

    level: int
    subgroup: IndexTwoSubgroup

    @property
    def base(self) -> Presentation:
        return self.subgroup.base

    @property
    def cocycle(self) -> Cocycle:
        return self.subgroup.cocycle

    @property
    def cover(self) -> Presentation:
        return self.subgroup.cover

    @property
    def transversal(self) -> int:
        return self.subgroup.transversal

    def rewrite(self, word: Sequence[int], coset: int = 0) -> Tuple[Word, int]:
        return self.subgroup.rewrite(word, coset)

    def to_dict(self) -> Dict[str, Any]:
        return {
            "level": self.level,
            "generators": self.base.n_gens,
            "transversal": self.transversal,
            "cocycle": list(self.cocycle.values),
            "base_genus": self.base.genus,
            "cover_genus": self.cover.genus,
        }


@dataclass(frozen=True)
class Open:
    """The lift is an open path."""


@dataclass(frozen=True)
class ClosedLift:
    """The lift from the identity sheet is the closed loop ``lift``."""

    lift: Word


def double_cover(group: Presentation, c: Cocycle, level: int = 1) -> CoverStep:
    """
    The double cover of a group defined by a non-zero cocycle.

    Args:
        group: Base presentation
        c: Non-zero mod-2 cocycle
        level: Position of the step in a tower

    Returns:
        CoverStep whose cover has 2n - 1 generators

    Raises:
        PreconditionError: c is zero or fails to vanish on a relator
    """
    step = CoverStep(level, index_two_subgroup(group, c))
    if group.relators:
        expected = 2 * group.genus - 1
        if step.cover.genus != expected:
            logger.warning("cover genus %d, Euler characteristic predicts %d", step.cover.genus, expected)
    return step


def lift_word(step: CoverStep, word: Sequence[int]) -> Union[Open, ClosedLift]:
    if cocycle_eval(step.cocycle, word):
        return Open()
    lifted, _ = step.rewrite(word, 0)
    return ClosedLift(lifted)


def closed_lifts(step: CoverStep, word: Sequence[int]) -> List[Word]:
    """Both closed lifts of an even word, or nothing for an odd one."""
    if cocycle_eval(step.cocycle, word):
        return []
    return [step.rewrite(word, 0)[0], step.rewrite(word, 1)[0]]


@dataclass
class WordStatus:
    word: Word
    open_level: Optional[int] = None
    lifts: List[Word] = field(default_factory=list)

    @property
    def is_open(self) -> bool:
        return self.open_level is not None

    def to_dict(self) -> Dict[str, Any]:
        return {
            "word": list(self.word),
            "text": format_word(self.word),
            "open_level": self.open_level,
            "closed_lifts": len(self.lifts),
        }


@dataclass
class CoverTower:
    """A sequence of double covers and the status of each target word."""

    base: Presentation
    steps: List[CoverStep] = field(default_factory=list)
    statuses: List[WordStatus] = field(default_factory=list)
    max_depth: int = LabConfig.TOWER_MAX_DEPTH

    @property
    def depth(self) -> int:
        return len(self.steps)

    @property
    def words(self) -> List[Word]:
        return [s.word for s in self.statuses]

    @property
    def all_open(self) -> bool:
        return all(s.is_open for s in self.statuses)

    @property
    def survivors(self) -> List[WordStatus]:
        return [s for s in self.statuses if not s.is_open]

    def genera(self) -> List[int]:
        return [self.base.genus] + [step.cover.genus for step in self.steps]

    def open_counts(self) -> List[int]:
        """Number of words open by each level 1..depth."""
        return [
            sum(1 for s in self.statuses if s.is_open and s.open_level <= level)
            for level in range(1, self.depth + 1)
        ]

    def to_dict(self) -> Dict[str, Any]:
        return {
            "base_genus": self.base.genus,
            "base_generators": self.base.n_gens,
            "max_depth": self.max_depth,
            "genera": self.genera(),
            "levels": [step.to_dict() for step in self.steps],
            "words": [s.to_dict() for s in self.statuses],
            "all_open": self.all_open,
        }


def _coefficient_block(start: int, stop: int, dim: int) -> np.ndarray:
    ints = np.arange(start, stop, dtype=np.int64)
    return ((ints[:, None] >> np.arange(dim, dtype=np.int64)) & 1).astype(np.int64)


def _count_opened(values: np.ndarray, coefficients: np.ndarray) -> np.ndarray:
    return ((values @ coefficients.T) % 2).sum(axis=0)


def _candidates(
    values: np.ndarray, dim: int, seed: int
) -> Tuple[List[np.ndarray], int]:
    """Coefficient vectors reaching the best opened count, and that count."""
    best_count = -1
    best: List[np.ndarray] = []
    limit = LabConfig.COCYCLE_LOOKAHEAD

    def absorb(block: np.ndarray, counts: np.ndarray) -> None:
        nonlocal best_count, best
        top = int(counts.max())
        if top < best_count:
            return
        if top > best_count:
            best_count, best = top, []
        for row in np.flatnonzero(counts == top):
            if len(best) < limit:
                best.append(block[row])

    if dim <= LabConfig.COCYCLE_EXHAUSTIVE_DIM:
        total = 1 << dim
        for start in range(1, total, _BLOCK):
            block = _coefficient_block(start, min(start + _BLOCK, total), dim)
            absorb(block, _count_opened(values, block))
        return best, best_count

    rng = SeededRNG(seed).generator()
    block = rng.integers(0, 2, size=(LabConfig.COCYCLE_RANDOM_TRIALS, dim), dtype=np.int64)
    block = block[block.any(axis=1)]
    counts = _count_opened(values, block)
    current = block[int(np.argmax(counts))].copy()
    current_count = int(counts.max())
    improved = True
    while improved:
        improved = False
        flips = np.tile(current, (dim, 1))
        flips[np.arange(dim), np.arange(dim)] ^= 1
        flips = flips[flips.any(axis=1)]
        flip_counts = _count_opened(values, flips)
        if int(flip_counts.max()) > current_count:
            current = flips[int(np.argmax(flip_counts))].copy()
            current_count = int(flip_counts.max())
            improved = True
    absorb(current[None, :], np.array([current_count]))
    return best, best_count


def choose_cocycle(
    group: Presentation, lifts: Sequence[Word], seed: int = LabConfig.DEFAULT_SEED
) -> Tuple[Cocycle, int]:
    """
    Pick the cocycle that opens the most lifts.

    The search runs over every non-zero class when H^1 has dimension at most
    COCYCLE_EXHAUSTIVE_DIM, else over seeded random classes refined by single
    coordinate flips. Ties are broken by looking one level ahead: prefer the
    class whose remaining closed lifts have non-zero mod-2 homology in the
    cover (so they can open there), then shorter lifts, then the first found.

    Returns:
        (cocycle, number of lifts it opens)
    """
    dim = group.h1_dim
    if dim == 0:
        raise PreconditionError("group has no non-zero mod-2 classes")
    basis = group.h1_basis.astype(np.int64)
    if lifts:
        parities = np.vstack([parity_vector(w, group.n_gens) for w in lifts]).astype(np.int64)
    else:
        parities = np.zeros((0, group.n_gens), dtype=np.int64)
    values = (parities @ basis.T) % 2
    options, opened = _candidates(values, dim, seed)

    if len(options) == 1 or not lifts:
        return group.cocycle_from_coefficients(options[0]), opened

    best_key: Optional[Tuple[int, int]] = None
    best_cocycle: Optional[Cocycle] = None
    for coefficients in options:
        c = group.cocycle_from_coefficients(coefficients)
        subgroup = index_two_subgroup(group, c)
        remaining = [w for w in lifts if cocycle_eval(c, w) == 0]
        next_lifts = [subgroup.rewrite(w, coset)[0] for w in remaining for coset in (0, 1)]
        openable = int(subgroup.cover.nonzero_classes(next_lifts).sum()) if next_lifts else 0
        key = (openable, -sum(len(w) for w in next_lifts))
        if best_key is None or key > best_key:
            best_key, best_cocycle = key, c
    return best_cocycle, opened


def open_all(
    group: Presentation,
    words: Sequence[Sequence[int]],
    max_depth: int = LabConfig.TOWER_MAX_DEPTH,
    seed: int = LabConfig.DEFAULT_SEED,
) -> CoverTower:
    """
    Build covers greedily until every word is open or max_depth is reached.

    Args:
        group: Base presentation, usually a SurfaceGroup
        words: Non-trivial words over the base generators
        max_depth: Maximum number of double covers
        seed: Seed for the randomized cocycle search on large levels

    Returns:
        CoverTower with per-word open levels; survivors keep their closed lifts

    Raises:
        PreconditionError: a word is trivial
    """
    if max_depth < 0:
        raise PreconditionError("max_depth must be non-negative")
    statuses = []
    for w in words:
        reduced = free_reduce(w)
        trivial = group.is_trivial(reduced) if isinstance(group, SurfaceGroup) else not reduced
        if trivial:
            raise PreconditionError(f"word {format_word(w)} is trivial and never opens")
        statuses.append(WordStatus(reduced, None, [reduced]))

    tower = CoverTower(group, [], statuses, max_depth)
    current = group
    for level in range(1, max_depth + 1):
        pending = [s for s in statuses if not s.is_open]
        if not pending:
            break
        lifts = [w for s in pending for w in s.lifts]
        c, opened = choose_cocycle(current, lifts, seed + level)
        step = double_cover(current, c, level)
        for status in pending:
            status.lifts = [lift for w in status.lifts for lift in closed_lifts(step, w)]
            if not status.lifts:
                status.open_level = level
        tower.steps.append(step)
        current = step.cover
        logger.info(
            "level %d: cocycle opens %d of %d lifts, genus %d -> %d, %d words still closed",
            level, opened, len(lifts), step.base.genus, step.cover.genus,
            sum(1 for s in statuses if not s.is_open),
        )

    if tower.survivors:
        logger.warning("%d words still closed after %d levels", len(tower.survivors), tower.depth)
    return tower


# Independent check: walk the sheets of the 2^k-fold cover directly.

@dataclass(frozen=True)
class SheetLevel:
    generators: int
    transversal: int
    cocycle: Tuple[int, ...]
    labels: Dict[Tuple[int, int], int] = field(hash=False, compare=False)


def sheet_levels(tower: Union[CoverTower, Dict[str, Any]]) -> List[SheetLevel]:
    """
    Read the per-level data the sheet walk needs and check it is well formed.

    Raises:
        VerificationError: generator counts, cocycle lengths or transversals disagree
    """
    levels = [step.to_dict() for step in tower.steps] if isinstance(tower, CoverTower) else tower["levels"]
    out: List[SheetLevel] = []
    expected: Optional[int] = None
    for entry in levels:
        n = int(entry["generators"])
        t = int(entry["transversal"])
        c = tuple(int(v) for v in entry["cocycle"])
        if expected is not None and n != expected:
            raise VerificationError(f"level {entry.get('level')} has {n} generators, expected {expected}", entry)
        if len(c) != n or not any(c):
            raise VerificationError(f"level {entry.get('level')} cocycle is malformed", entry)
        if not 1 <= t <= n or c[t - 1] != 1:
            raise VerificationError(f"level {entry.get('level')} transversal {t} is not odd under the cocycle", entry)
        out.append(SheetLevel(n, t, c, schreier_labels(n, t)))
        expected = 2 * n - 1
    return out


def walk_sheets(levels: Sequence[SheetLevel], word: Sequence[int], sheet: Sequence[int]) -> Tuple[int, ...]:
    """
    Follow a base word from a sheet of the cover at depth len(sheet).

    A sheet is one bit per level. Each letter is pushed up the tower: at
    level j it moves bit j by that level's cocycle and becomes the matching
    generator of level j + 1, or vanishes on the dropped tree edge.
    """
    bits = list(sheet)
    for letter in word:
        current = letter
        for j in range(len(bits)):
            level = levels[j]
            y = abs(current)
            if current > 0:
                nxt = level.labels.get((bits[j], y))
                bits[j] ^= level.cocycle[y - 1]
            else:
                bits[j] ^= level.cocycle[y - 1]
                nxt = level.labels.get((bits[j], y))
            if nxt is None:
                break
            current = nxt if current > 0 else -nxt
    return tuple(bits)


def first_open_level(levels: Sequence[SheetLevel], word: Sequence[int]) -> Optional[int]:
    """Smallest k such that the word moves every sheet at depth k."""
    for k in range(1, len(levels) + 1):
        fixed = any(
            walk_sheets(levels[:k], word, sheet) == sheet
            for sheet in itertools.product((0, 1), repeat=k)
        )
        if not fixed:
            return k
    return None


@dataclass
class VerificationReport:
    entries: List[Dict[str, Any]]

    @property
    def mismatches(self) -> List[Dict[str, Any]]:
        return [e for e in self.entries if not e["confirmed"]]

    @property
    def ok(self) -> bool:
        return not self.mismatches

    def to_dict(self) -> Dict[str, Any]:
        return {"ok": self.ok, "checked": len(self.entries), "mismatches": self.mismatches, "entries": self.entries}


def verify_tower(
    tower: Union[CoverTower, Dict[str, Any]],
    words: Optional[Sequence[Sequence[int]]] = None,
    strict: bool = True,
    workers: Optional[int] = None,
) -> VerificationReport:
    """
    Re-derive every word's open level by walking sheets, without rewriting.

    Args:
        tower: A CoverTower or its to_dict() form (as read back from JSON)
        words: Restrict the check to these words (default: all in the tower)
        strict: Raise on the first disagreement instead of only reporting it
        workers: Thread count for the per-word walks

    Returns:
        VerificationReport with claimed and recomputed levels per word

    Raises:
        VerificationError: malformed tower, or (strict) a claim that does not hold
    """
    levels = sheet_levels(tower)
    if isinstance(tower, CoverTower):
        claims = {s.word: s.open_level for s in tower.statuses}
    else:
        claims = {tuple(int(x) for x in w["word"]): w["open_level"] for w in tower["words"]}
    targets = [tuple(w) for w in words] if words is not None else list(claims)
    for w in targets:
        if w not in claims:
            raise VerificationError(f"word {format_word(w)} is not part of the tower", list(w))

    with ThreadPoolExecutor(max_workers=workers) as pool:
        found = list(pool.map(lambda w: first_open_level(levels, w), targets))

    entries = [
        {"word": list(w), "text": format_word(w), "claimed": claims[w], "recomputed": level, "confirmed": claims[w] == level}
        for w, level in zip(targets, found)
    ]
    report = VerificationReport(entries)
    if report.mismatches:
        logger.warning("tower verification: %d of %d claims disagree", len(report.mismatches), len(entries))
        if strict:
            first = report.mismatches[0]
            raise VerificationError(
                f"word {first['text']} claimed open at {first['claimed']}, sheet walk gives {first['recomputed']}",
                first,
            )
    else:
        logger.info("tower verification: %d claims confirmed", len(entries))
    return report
