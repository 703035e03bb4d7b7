"""Pytest configuration and fixtures."""

import json

import pytest

from src.cli import main
from src.config import LabConfig
from src.services.dyadic import DyadicAngle
from src.services.groups import SurfaceGroup
from src.tools.dynamics import FurstenbergMap, TorusPoint
from src.utils.seeding import SeededRNG


@pytest.fixture
def genus2():
    """The genus-2 surface group <a1, b1, a2, b2 | [a1,b1][a2,b2]>."""
    return SurfaceGroup(2)


@pytest.fixture
def fmap():
    """The default Furstenberg map (K = 3, 128-bit theta2)."""
    return FurstenbergMap()


@pytest.fixture
def origin():
    return TorusPoint.origin()


@pytest.fixture
def rng():
    """Seeded numpy generator for test data."""
    return SeededRNG(LabConfig.DEFAULT_SEED).generator()


@pytest.fixture
def random_points(rng):
    """Ten seeded dyadic starting points with 40-bit coordinates."""
    return [
        TorusPoint(DyadicAngle(int(a), 40), DyadicAngle(int(b), 40))
        for a, b in rng.integers(0, 2**40, size=(10, 2))
    ]


@pytest.fixture
def run_cli(capsys):
    """Run the CLI and return (exit code, stdout text)."""

    def _run(*argv):
        code = main(list(argv))
        return code, capsys.readouterr().out

    return _run


@pytest.fixture
def run_cli_json(run_cli):
    """Run the CLI with JSON output and return (exit code, parsed document or None)."""

    def _run(*argv):
        code, out = run_cli(*argv)
        return code, json.loads(out) if out.strip() else None

    return _run
