"""Seeded random streams that do not depend on the worker count."""

from __future__ import annotations

from concurrent.futures import ThreadPoolExecutor
from typing import Callable, List, Optional

import numpy as np

from src.config import LabConfig


class SeededRNG:
    """
    A master seed split into per-chunk numpy generators.

    Chunk i always draws from the i-th child of SeedSequence(seed), so a sample
    of size n is the same whether one thread or many produce it.
    """

    def __init__(self, seed: int = LabConfig.DEFAULT_SEED, chunk_size: int = LabConfig.SAMPLE_CHUNK):
        if chunk_size < 1:
            raise ValueError("chunk_size must be positive")
        self._seed = seed
        self._sequence = np.random.SeedSequence(seed)
        self.chunk_size = chunk_size

    @property
    def seed(self) -> int:
        return self._seed

    def fork(self) -> SeededRNG:
        """A child stream for a sub-task, independent of this one's chunks."""
        child = self._sequence.spawn(1)[0]
        rng = SeededRNG.__new__(SeededRNG)
        rng._seed = self._seed
        rng._sequence = child
        rng.chunk_size = self.chunk_size
        return rng

    def generator(self) -> np.random.Generator:
        """A single generator for small sequential draws."""
        return np.random.Generator(np.random.PCG64(self._sequence))

    def _chunk_sizes(self, n: int) -> List[int]:
        full, rest = divmod(n, self.chunk_size)
        return [self.chunk_size] * full + ([rest] if rest else [])

    def chunked(
        self,
        n: int,
        draw: Callable[[np.random.Generator, int], np.ndarray],
        workers: Optional[int] = None,
    ) -> np.ndarray:
        """
        Run ``draw(generator, size)`` per chunk and concatenate in chunk order.

        Args:
            n: Total sample count
            draw: Produces an array whose first axis has length ``size``
            workers: Thread count (None lets the executor decide)

        Returns:
            Concatenated samples, identical for every worker count
        """
        sizes = self._chunk_sizes(n)
        if not sizes:
            return draw(self.generator(), 0)
        children = np.random.SeedSequence(self._sequence.entropy, spawn_key=self._sequence.spawn_key).spawn(len(sizes))
        generators = [np.random.Generator(np.random.PCG64(child)) for child in children]
        with ThreadPoolExecutor(max_workers=workers) as pool:
            parts = list(pool.map(draw, generators, sizes))
        return np.concatenate(parts, axis=0)

    def uniform_torus(self, n: int, workers: Optional[int] = None) -> np.ndarray:
        """n Haar-distributed points of T^2 as an (n, 2) array of angles in [0, 1)."""
        return self.chunked(n, lambda gen, size: gen.random((size, 2)), workers)

    def integers(self, low: int, high: int, n: int) -> np.ndarray:
        return self.generator().integers(low, high, size=n)
