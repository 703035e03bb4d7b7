"""Configuration management for the Furstenberg lab."""

import math
from pathlib import Path
from typing import Any, Dict, Optional


class LabConfig:
    """Library-wide defaults. Every run echoes the values it used."""

    # Exact arithmetic
    DIGIT_BUDGET_BITS: int = 2**20
    SERIES_CUTOFF: int = 3
    THETA2_PRECISION_BITS: int = 128

    # Steering constants; a and b are multiples of 1 - cos(pi/8)
    STEER_C: float = 1 / 64
    STEER_A_FACTOR: float = 0.9
    STEER_B_FACTOR: float = 3.1
    STEER_N: int = 2

    # Density certificates
    LANDING_GRID_POINTS: int = 4096
    STEER_MAX_BLOCKS: int = 64

    # Measures
    ATTRACTOR_BETA: float = 0.1
    SAMPLE_CHUNK: int = 65536
    MIN_ACCEPTED: int = 100
    DEFECT_TOLERANCE: float = 1e-2

    # Cover towers
    COCYCLE_EXHAUSTIVE_DIM: int = 16
    COCYCLE_RANDOM_TRIALS: int = 4096
    TOWER_MAX_DEPTH: int = 6
    COCYCLE_LOOKAHEAD: int = 32

    DEFAULT_SEED: int = 20240607

    @classmethod
    def steer_a(cls) -> float:
        return cls.STEER_A_FACTOR * (1 - math.cos(math.pi / 8))

    @classmethod
    def steer_b(cls) -> float:
        return cls.STEER_B_FACTOR * (1 - math.cos(math.pi / 8))

    @classmethod
    def validate(cls) -> None:
        """Validate that the defaults are mutually consistent."""
        problems = []
        if cls.DIGIT_BUDGET_BITS < 64:
            problems.append("DIGIT_BUDGET_BITS must be at least 64")
        if cls.SERIES_CUTOFF < 1:
            problems.append("SERIES_CUTOFF must be >= 1")
        if cls.THETA2_PRECISION_BITS < 53:
            problems.append("THETA2_PRECISION_BITS must be >= 53")
        if not 0 < cls.STEER_A_FACTOR < cls.STEER_B_FACTOR:
            problems.append("steering constants need 0 < a < b")
        if cls.STEER_N < 2:
            problems.append("STEER_N must be >= 2 (m_1 is not an integer)")
        if cls.STEER_MAX_BLOCKS < 0 or cls.LANDING_GRID_POINTS < 1:
            problems.append("density search budgets must be non-negative")
        if not 0 < cls.ATTRACTOR_BETA < 1 / (2 * math.pi):
            problems.append("ATTRACTOR_BETA must lie in (0, 1/2pi) for a diffeomorphism")
        if problems:
            raise ValueError(f"Invalid lab configuration: {'; '.join(problems)}")


class RunConfig:
    """Configuration of one CLI run: defaults, then config file, then flags."""

    SUBCOMMANDS = ("constants", "series", "orbit", "steer", "density", "measure", "tower")
    EMIT_FORMATS = ("json", "csv")

    def __init__(
        self,
        subcommand: str,
        K: int = LabConfig.SERIES_CUTOFF,
        seed: int = LabConfig.DEFAULT_SEED,
        precision_bits: int = LabConfig.THETA2_PRECISION_BITS,
        emit: str = "json",
        output: Optional[str] = None,
        options: Optional[Dict[str, Any]] = None,
    ):
        self.subcommand = subcommand
        self.K = K
        self.seed = seed
        self.precision_bits = precision_bits
        self.emit = emit
        self.output = output
        self.options = dict(options or {})

    @staticmethod
    def read_file(path: str) -> Dict[str, str]:
        """
        Read a key=value config file.

        Blank lines and lines starting with '#' are ignored; keys use the
        flag spelling with underscores (e.g. ``precision_bits = 96``).
        """
        values: Dict[str, str] = {}
        for lineno, raw in enumerate(Path(path).read_text().splitlines(), start=1):
            line = raw.strip()
            if not line or line.startswith("#"):
                continue
            if "=" not in line:
                raise ValueError(f"{path}:{lineno}: expected key=value, got {raw!r}")
            key, value = line.split("=", 1)
            values[key.strip().replace("-", "_")] = value.strip()
        return values

    def validate(self) -> None:
        """Validate the run configuration, reporting every invalid field at once."""
        problems = []
        if self.subcommand not in self.SUBCOMMANDS:
            problems.append(f"unknown subcommand {self.subcommand!r}")
        if self.K < 1:
            problems.append("K must be >= 1")
        if not 0 <= self.seed < 2**64:
            problems.append("seed must be an unsigned 64-bit integer")
        if self.precision_bits < 53:
            problems.append("precision_bits must be >= 53")
        if self.emit not in self.EMIT_FORMATS:
            problems.append(f"emit must be one of {', '.join(self.EMIT_FORMATS)}")
        if problems:
            raise ValueError(f"Invalid run configuration: {'; '.join(problems)}")

    def echo(self) -> Dict[str, Any]:
        """Configuration as written into every output header."""
        return {
            "subcommand": self.subcommand,
            "K": self.K,
            "seed": self.seed,
            "precision_bits": self.precision_bits,
            "emit": self.emit,
            "output": self.output,
            "options": {key: self.options[key] for key in sorted(self.options)},
        }
