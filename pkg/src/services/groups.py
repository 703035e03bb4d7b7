"""
Words, surface-group presentations and index-two subgroups.

A word is a tuple of non-zero ints: letter ``i`` is generator i (1-based) and
``-i`` its inverse. In a genus-g surface group generator ``2i-1`` is a_i and
``2i`` is b_i, and the single relator is [a_1, b_1] ... [a_g, b_g].
"""

from __future__ import annotations

import itertools
import logging
from dataclasses import dataclass, field
from functools import cached_property
from typing import Dict, Iterator, List, Optional, Sequence, Tuple

import numpy as np

from src.errors import PreconditionError

logger = logging.getLogger(__name__)

Word = Tuple[int, ...]


# Free group operations

def free_reduce(word: Sequence[int]) -> Word:
    """Cancel adjacent ``x x^-1`` pairs until none remain."""
    stack: List[int] = []
    for letter in word:
        if letter == 0:
            raise ValueError("0 is not a letter")
        if stack and stack[-1] == -letter:
            stack.pop()
        else:
            stack.append(letter)
    return tuple(stack)


def inverse(word: Sequence[int]) -> Word:
    return tuple(-letter for letter in reversed(word))


def multiply(*words: Sequence[int]) -> Word:
    return free_reduce(itertools.chain.from_iterable(words))


def commutator(x: Sequence[int], y: Sequence[int]) -> Word:
    return multiply(x, y, inverse(x), inverse(y))


def cyclic_reduce(word: Sequence[int]) -> Word:
    w = free_reduce(word)
    while len(w) > 1 and w[0] == -w[-1]:
        w = w[1:-1]
    return w


def parity_vector(word: Sequence[int], n_gens: int) -> np.ndarray:
    """Exponent-sum parity of each generator, as a uint8 vector of length n_gens."""
    vec = np.zeros(n_gens, dtype=np.uint8)
    for letter in word:
        index = abs(letter) - 1
        if index >= n_gens:
            raise ValueError(f"letter {letter} outside {n_gens} generators")
        vec[index] ^= 1
    return vec


def enumerate_reduced_words(n_gens: int, max_length: int, min_length: int = 1) -> Iterator[Word]:
    """
    All freely reduced words of length min_length..max_length.

    Words come in order of length, then lexicographically by letter with the
    alphabet ordered 1, -1, 2, -2, ...
    """
    alphabet = [s * i for i in range(1, n_gens + 1) for s in (1, -1)]

    def extend(prefix: Word, remaining: int) -> Iterator[Word]:
        if remaining == 0:
            yield prefix
            return
        for letter in alphabet:
            if prefix and prefix[-1] == -letter:
                continue
            yield from extend(prefix + (letter,), remaining - 1)

    for length in range(max(min_length, 0), max_length + 1):
        if length == 0:
            yield ()
            continue
        yield from extend((), length)


def format_word(word: Sequence[int], surface: bool = True) -> str:
    """Render a word as ``a1 b1 A1 B1`` (surface) or ``x3 X7`` (generic)."""
    if not word:
        return "1"
    parts = []
    for letter in word:
        index = abs(letter)
        if surface:
            name = ("a" if index % 2 == 1 else "b") + str((index + 1) // 2)
        else:
            name = f"x{index}"
        parts.append(name if letter > 0 else name.upper())
    return " ".join(parts)


def parse_word(text: str) -> Word:
    """Inverse of format_word for surface words; accepts ``1`` for the empty word."""
    word: List[int] = []
    for token in text.split():
        if token == "1":
            continue
        kind, number = token[0], token[1:]
        if kind.lower() not in ("a", "b", "x") or not number.isdigit():
            raise ValueError(f"cannot parse letter {token!r}")
        n = int(number)
        if kind.lower() == "x":
            index = n
        else:
            index = 2 * n - 1 if kind.lower() == "a" else 2 * n
        word.append(index if kind.islower() else -index)
    return tuple(word)


# GF(2) linear algebra

def rref_mod2(matrix: np.ndarray) -> Tuple[np.ndarray, List[int]]:
    """Reduced row echelon form over GF(2) and the pivot columns."""
    a = (np.asarray(matrix, dtype=np.uint8) & 1).copy()
    if a.ndim != 2:
        raise ValueError("expected a 2-d matrix")
    m, n = a.shape
    row = 0
    pivots: List[int] = []
    for col in range(n):
        if row == m:
            break
        hits = np.flatnonzero(a[row:, col])
        if hits.size == 0:
            continue
        pivot = row + int(hits[0])
        if pivot != row:
            a[[row, pivot], :] = a[[pivot, row], :]
        others = np.flatnonzero(a[:, col])
        others = others[others != row]
        a[others, :] ^= a[row, :]
        pivots.append(col)
        row += 1
    return a, pivots


def rank_mod2(matrix: np.ndarray) -> int:
    if np.asarray(matrix).size == 0:
        return 0
    return len(rref_mod2(matrix)[1])


def nullspace_mod2(matrix: np.ndarray, n_cols: Optional[int] = None) -> np.ndarray:
    """
    Basis of {x : A x = 0} over GF(2), one vector per row.

    Args:
        matrix: (m, n) 0/1 array; m may be zero
        n_cols: Column count when the matrix has no rows

    Returns:
        (n - rank, n) uint8 array
    """
    a = np.asarray(matrix, dtype=np.uint8)
    if a.ndim != 2 or a.shape[0] == 0:
        return np.eye(n_cols if n_cols is not None else a.shape[-1], dtype=np.uint8)
    n = a.shape[1]
    reduced, pivots = rref_mod2(a)
    free = [c for c in range(n) if c not in set(pivots)]
    basis = np.zeros((len(free), n), dtype=np.uint8)
    for i, col in enumerate(free):
        basis[i, col] = 1
        for r, p in enumerate(pivots):
            basis[i, p] = reduced[r, col]
    return basis


def in_rowspace_mod2(matrix: np.ndarray, vector: np.ndarray) -> bool:
    a = np.asarray(matrix, dtype=np.uint8)
    v = np.asarray(vector, dtype=np.uint8) & 1
    if not v.any():
        return True
    if a.size == 0:
        return False
    return rank_mod2(np.vstack([a, v])) == rank_mod2(a)


# Cocycles

@dataclass(frozen=True)
class Cocycle:
    """A mod-2 class given by its values on the generators."""

    values: Tuple[int, ...]

    def __post_init__(self):
        if any(v not in (0, 1) for v in self.values):
            raise ValueError("cocycle values must be 0 or 1")

    @classmethod
    def from_vector(cls, vector: Sequence[int]) -> Cocycle:
        return cls(tuple(int(v) & 1 for v in vector))

    @classmethod
    def dual(cls, index: int, n_gens: int) -> Cocycle:
        """The cocycle e_index* (1-based) that is 1 on one generator only."""
        values = [0] * n_gens
        values[index - 1] = 1
        return cls(tuple(values))

    @property
    def vector(self) -> np.ndarray:
        return np.array(self.values, dtype=np.uint8)

    @property
    def n_gens(self) -> int:
        return len(self.values)

    def is_zero(self) -> bool:
        return not any(self.values)

    def __call__(self, word: Sequence[int]) -> int:
        return cocycle_eval(self, word)


def cocycle_eval(c: Cocycle, word: Sequence[int]) -> int:
    """Sum over letters of c(generator) mod 2; 1 means the lift is an open path."""
    total = 0
    for letter in word:
        total ^= c.values[abs(letter) - 1]
    return total


# Presentations

@dataclass(frozen=True)
class Presentation:
    """Finitely presented group <x_1..x_n | relators>."""

    n_gens: int
    relators: Tuple[Word, ...]
    name: str = ""

    def __post_init__(self):
        for r in self.relators:
            if any(abs(x) > self.n_gens or x == 0 for x in r):
                raise ValueError(f"relator {r} uses letters outside {self.n_gens} generators")

    @cached_property
    def relator_parities(self) -> np.ndarray:
        if not self.relators:
            return np.zeros((0, self.n_gens), dtype=np.uint8)
        return np.vstack([parity_vector(r, self.n_gens) for r in self.relators])

    @cached_property
    def h1_basis(self) -> np.ndarray:
        """Basis of H^1(G; Z/2) as vectors of generator values."""
        return nullspace_mod2(self.relator_parities, self.n_gens)

    @property
    def h1_dim(self) -> int:
        return int(self.h1_basis.shape[0])

    @property
    def genus(self) -> int:
        """Genus read off H^1 for a closed orientable surface group."""
        return self.h1_dim // 2

    def is_cocycle(self, c: Cocycle) -> bool:
        if c.n_gens != self.n_gens:
            return False
        return all(cocycle_eval(c, r) == 0 for r in self.relators)

    def cocycle_from_coefficients(self, coefficients: Sequence[int]) -> Cocycle:
        """Combine H^1 basis vectors with 0/1 coefficients."""
        coeffs = np.asarray(coefficients, dtype=np.uint8) & 1
        if coeffs.shape != (self.h1_dim,):
            raise ValueError(f"expected {self.h1_dim} coefficients")
        return Cocycle.from_vector((coeffs @ self.h1_basis) % 2)

    @cached_property
    def _relator_echelon(self) -> Tuple[np.ndarray, List[int]]:
        if not self.relators:
            return np.zeros((0, self.n_gens), dtype=np.uint8), []
        reduced, pivots = rref_mod2(self.relator_parities)
        return reduced[: len(pivots)], pivots

    def nonzero_classes(self, words: Sequence[Sequence[int]]) -> np.ndarray:
        """Boolean mask: which words have non-zero mod-2 homology class."""
        if not words:
            return np.zeros(0, dtype=bool)
        vecs = np.vstack([parity_vector(w, self.n_gens) for w in words])
        rows, pivots = self._relator_echelon
        for row, p in zip(rows, pivots):
            hit = vecs[:, p] == 1
            vecs[hit] ^= row
        return vecs.any(axis=1)

    def homology_class_nonzero(self, word: Sequence[int]) -> bool:
        """Whether the mod-2 homology class of a word is non-zero."""
        return not in_rowspace_mod2(self.relator_parities, parity_vector(word, self.n_gens))


class SurfaceGroup(Presentation):
    """The one-relator presentation of a closed orientable genus-g surface group."""

    def __init__(self, genus: int):
        if genus < 1:
            raise ValueError("genus must be at least 1")
        relator: List[int] = []
        for i in range(1, genus + 1):
            a, b = 2 * i - 1, 2 * i
            relator.extend((a, b, -a, -b))
        super().__init__(2 * genus, (tuple(relator),), f"S_{genus}")
        object.__setattr__(self, "surface_genus", genus)

    @property
    def relator(self) -> Word:
        return self.relators[0]

    @property
    def genus(self) -> int:
        return self.surface_genus

    @property
    def generators(self) -> List[Word]:
        return [(i,) for i in range(1, self.n_gens + 1)]

    @cached_property
    def _relator_cycles(self) -> List[Word]:
        cycles = set()
        for base in (self.relator, inverse(self.relator)):
            for k in range(len(base)):
                cycles.add(base[k:] + base[:k])
        return sorted(cycles)

    def reduce(self, word: Sequence[int]) -> Tuple[Word, bool]:
        """
        Shorten a word and decide whether it is trivial.

        Genus 1 uses exponent sums. For genus >= 2 this is Dehn's algorithm:
        a subword that agrees with more than half of a cyclic rotation of the
        relator or its inverse is replaced by the inverse of the rest of that
        rotation, until no such subword exists.

        Returns:
            (shortened word, True iff the word is the identity)
        """
        w = free_reduce(word)
        if self.surface_genus == 1:
            sums = [0, 0]
            for letter in w:
                sums[abs(letter) - 1] += 1 if letter > 0 else -1
            normal = (1,) * sums[0] if sums[0] >= 0 else (-1,) * -sums[0]
            normal += (2,) * sums[1] if sums[1] >= 0 else (-2,) * -sums[1]
            return normal, not normal

        half = 2 * self.surface_genus
        full = len(self.relator)
        changed = True
        while changed and w:
            changed = False
            for start in range(len(w)):
                for cycle in self._relator_cycles:
                    length = 0
                    while length < full and start + length < len(w) and w[start + length] == cycle[length]:
                        length += 1
                    if length > half:
                        w = free_reduce(w[:start] + inverse(cycle[length:]) + w[start + length:])
                        changed = True
                        break
                if changed:
                    break
        return w, not w

    def is_trivial(self, word: Sequence[int]) -> bool:
        return self.reduce(word)[1]


# Index-two subgroups (Reidemeister-Schreier with transversal {1, t})

@dataclass(frozen=True)
class IndexTwoSubgroup:
    """
    The kernel of a non-zero cocycle, presented by Reidemeister-Schreier.

    Cosets are 0 (the kernel) and 1, with representatives 1 and t where t is
    the first generator with c(t) = 1. The Schreier generator for coset u and
    base generator x is T_u x T_{u.x}^-1; the one for (0, t) is trivial and
    dropped, so the subgroup has 2n - 1 generators.
    """

    base: Presentation
    cocycle: Cocycle
    transversal: int
    labels: Dict[Tuple[int, int], int] = field(hash=False)
    cover: Presentation = field(hash=False)

    def rewrite(self, word: Sequence[int], coset: int = 0) -> Tuple[Word, int]:
        """
        Rewrite a base word read from the given coset.

        Returns:
            (freely reduced word over the cover generators, final coset)
        """
        values = self.cocycle.values
        out: List[int] = []
        u = coset
        for letter in word:
            x = abs(letter)
            if letter > 0:
                index = self.labels.get((u, x))
                if index is not None:
                    out.append(index)
                u ^= values[x - 1]
            else:
                u ^= values[x - 1]
                index = self.labels.get((u, x))
                if index is not None:
                    out.append(-index)
        return free_reduce(out), u


def schreier_labels(n_gens: int, transversal: int) -> Dict[Tuple[int, int], int]:
    """Number the Schreier generators (u, x) in order u = 0, 1 then x, skipping (0, t)."""
    labels: Dict[Tuple[int, int], int] = {}
    for u in (0, 1):
        for x in range(1, n_gens + 1):
            if (u, x) == (0, transversal):
                continue
            labels[(u, x)] = len(labels) + 1
    return labels


def index_two_subgroup(group: Presentation, c: Cocycle) -> IndexTwoSubgroup:
    """
    Present ker(c: G -> Z/2).

    Args:
        group: Base presentation
        c: Non-zero cocycle that vanishes on every relator

    Returns:
        The subgroup with its rewriting data; its relators are every base
        relator rewritten from both cosets

    Raises:
        PreconditionError: c is zero or not a cocycle of the group
    """
    if c.n_gens != group.n_gens:
        raise PreconditionError(f"cocycle has {c.n_gens} values for {group.n_gens} generators")
    if c.is_zero():
        raise PreconditionError("the zero cocycle defines a disconnected cover")
    if not group.is_cocycle(c):
        raise PreconditionError("cocycle is odd on a relator")

    transversal = c.values.index(1) + 1
    labels = schreier_labels(group.n_gens, transversal)
    partial = IndexTwoSubgroup(group, c, transversal, labels, Presentation(len(labels), ()))

    relators = []
    for r in group.relators:
        for coset in (0, 1):
            lifted, end = partial.rewrite(r, coset)
            if end != coset:
                raise PreconditionError("relator lift is open; cocycle is invalid")
            if lifted:
                relators.append(lifted)
    cover = Presentation(len(labels), tuple(relators), f"ker({group.name or 'G'})")
    logger.debug("index-two subgroup: %d -> %d generators, %d relators", group.n_gens, cover.n_gens, len(relators))
    return IndexTwoSubgroup(group, c, transversal, labels, cover)
