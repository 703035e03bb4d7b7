"""Unit tests for double covers, cover towers and sheet-walk verification."""

import copy
import json
import logging
from functools import lru_cache

import pytest
from hypothesis import given, settings, strategies as st

from src.errors import PreconditionError, VerificationError
from src.services.groups import Cocycle, SurfaceGroup, cocycle_eval
from src.tools.covertower import (
    ClosedLift,
    CoverTower,
    Open,
    choose_cocycle,
    closed_lifts,
    double_cover,
    first_open_level,
    lift_word,
    open_all,
    sheet_levels,
    verify_tower,
    walk_sheets,
)

COMMUTATOR = (1, 2, -1, -2)
GENERATORS = [(1,), (2,), (3,), (4,)]

words = st.lists(st.sampled_from([1, -1, 2, -2, 3, -3, 4, -4]), max_size=10).map(tuple)


@pytest.fixture
def generator_tower(genus2):
    """Tower that opens the four generators of the genus-2 group."""
    return open_all(genus2, GENERATORS, max_depth=2)


@lru_cache(maxsize=None)
def two_level_tower():
    """Two fixed double covers over the genus-2 group."""
    genus2 = SurfaceGroup(2)
    first = double_cover(genus2, Cocycle.dual(1, 4), level=1)
    second = double_cover(first.cover, first.cover.cocycle_from_coefficients([1, 0, 0, 0, 0, 0]), level=2)
    return first, second, CoverTower(genus2, [first, second])


@pytest.mark.unit
class TestDoubleCover:
    """Test single double covers and lifts."""

    def test_cover_genus(self, genus2):
        """Test that a genus-2 double cover has genus 3."""
        step = double_cover(genus2, Cocycle.dual(1, 4))
        assert step.cover.genus == 3
        assert step.to_dict()["cover_genus"] == 3
        assert step.to_dict()["transversal"] == 1

    def test_cover_presentation_is_unreduced(self, genus2):
        """Test that the cover keeps 2n - 1 generators and two relators."""
        cover = double_cover(genus2, Cocycle.dual(1, 4)).cover
        assert cover.n_gens == 2 * genus2.n_gens - 1
        assert len(cover.relators) == 2
        assert cover.h1_dim == 6

    def test_genera_double_minus_one(self, genus2):
        """Test the chain 2, 3, 5, 9 of repeated double covers."""
        group = genus2
        genera = [group.genus]
        for level in range(1, 4):
            coefficients = [1] + [0] * (group.h1_dim - 1)
            group = double_cover(group, group.cocycle_from_coefficients(coefficients), level).cover
            genera.append(group.genus)
        assert genera == [2, 3, 5, 9]

    def test_odd_word_lifts_open(self, genus2):
        """Test that c(w) = 1 gives an open lift."""
        step = double_cover(genus2, Cocycle.dual(1, 4))
        assert lift_word(step, (1,)) == Open()
        assert closed_lifts(step, (1,)) == []

    def test_even_word_lifts_closed(self, genus2):
        """Test the closed lift of b2 under e1*."""
        step = double_cover(genus2, Cocycle.dual(1, 4))
        assert lift_word(step, (4,)) == ClosedLift((3,))
        assert len(closed_lifts(step, (4,))) == 2

    def test_commutator_lift_class(self, genus2):
        """Test which classes leave the [a1, b1] lift homologically visible."""
        visible = double_cover(genus2, Cocycle((1, 0, 1, 0)))
        hidden = double_cover(genus2, Cocycle.dual(1, 4))
        assert visible.cover.homology_class_nonzero(lift_word(visible, COMMUTATOR).lift)
        assert not hidden.cover.homology_class_nonzero(lift_word(hidden, COMMUTATOR).lift)

    def test_zero_cocycle(self, genus2):
        """Test that the zero class has no connected cover."""
        with pytest.raises(PreconditionError):
            double_cover(genus2, Cocycle((0, 0, 0, 0)))


@pytest.mark.unit
class TestChooseCocycle:
    """Test the greedy cocycle choice."""

    def test_generators_take_all_ones(self, genus2):
        """Test that (1, 1, 1, 1) is the only class odd on every generator."""
        c, opened = choose_cocycle(genus2, GENERATORS)
        assert c == Cocycle((1, 1, 1, 1))
        assert opened == 4

    def test_commutator_opens_nothing_at_first(self, genus2):
        """Test that every class is even on [a1, b1]."""
        for n in range(1, 16):
            c = genus2.cocycle_from_coefficients([(n >> i) & 1 for i in range(4)])
            assert cocycle_eval(c, COMMUTATOR) == 0
        _, opened = choose_cocycle(genus2, [COMMUTATOR])
        assert opened == 0


@pytest.mark.unit
class TestOpenAll:
    """Test greedy tower construction."""

    def test_generators_open_at_level_one(self, generator_tower):
        """Test that one cover opens all four generators."""
        assert generator_tower.depth == 1
        assert generator_tower.all_open
        assert [s.open_level for s in generator_tower.statuses] == [1, 1, 1, 1]
        assert generator_tower.steps[0].cocycle == Cocycle((1, 1, 1, 1))
        assert generator_tower.open_counts() == [4]

    @pytest.mark.parametrize("word", [COMMUTATOR, (1, 1)])
    def test_even_words_open_at_level_two(self, genus2, word):
        """Test that [a1, b1] and a1^2 need a second cover."""
        tower = open_all(genus2, [word], max_depth=4)
        assert tower.statuses[0].open_level == 2
        assert tower.genera() == [2, 3, 5]

    def test_depth_limit_leaves_survivors(self, genus2, caplog):
        """Test that an unopened word is reported with its closed lifts."""
        with caplog.at_level(logging.WARNING, logger="src.tools.covertower"):
            tower = open_all(genus2, [COMMUTATOR], max_depth=1)
        assert not tower.all_open
        assert len(tower.survivors) == 1
        assert len(tower.survivors[0].lifts) == 2
        assert "still closed" in caplog.text

    def test_empty_word_list(self, genus2):
        """Test that nothing to open builds no covers."""
        tower = open_all(genus2, [])
        assert tower.depth == 0
        assert tower.all_open

    def test_trivial_word_rejected(self, genus2):
        """Test that the relator is refused."""
        with pytest.raises(PreconditionError, match="trivial"):
            open_all(genus2, [genus2.relator])
        with pytest.raises(PreconditionError):
            open_all(genus2, [(1, -1)])

    def test_negative_depth_rejected(self, genus2):
        """Test that max_depth must be non-negative."""
        with pytest.raises(PreconditionError):
            open_all(genus2, GENERATORS, max_depth=-1)

    def test_to_dict(self, generator_tower):
        """Test the serialized tower."""
        data = generator_tower.to_dict()
        assert data["genera"] == [2, 3]
        assert data["all_open"] is True
        assert data["words"][0]["text"] == "a1"
        assert data["levels"][0]["cocycle"] == [1, 1, 1, 1]


@pytest.mark.unit
class TestSheetWalk:
    """Test the rewriting-free sheet walk."""

    def test_single_level_bit_is_cocycle(self, genus2):
        """Test that one level moves the sheet by c(w)."""
        levels = sheet_levels(CoverTower(genus2, [double_cover(genus2, Cocycle((1, 0, 1, 0)))]))
        assert walk_sheets(levels, (1,), (0,)) == (1,)
        assert walk_sheets(levels, (1, 3), (1,)) == (1,)

    @settings(max_examples=200)
    @given(words, st.integers(0, 1), st.integers(0, 1))
    def test_walk_agrees_with_rewriting(self, word, s0, s1):
        """Test the second sheet bit against the rewritten lift."""
        first, second, tower = two_level_tower()
        levels = sheet_levels(tower)
        bits = walk_sheets(levels, word, (s0, s1))
        assert bits[0] == s0 ^ cocycle_eval(first.cocycle, word)
        if bits[0] == s0:
            lifted, _ = first.rewrite(word, s0)
            assert bits[1] == s1 ^ cocycle_eval(second.cocycle, lifted)

    def test_first_open_level(self, genus2):
        """Test open levels recomputed from the sheets."""
        tower = open_all(genus2, [COMMUTATOR], max_depth=4)
        levels = sheet_levels(tower)
        assert first_open_level(levels, COMMUTATOR) == 2
        assert first_open_level(levels[:1], COMMUTATOR) is None


@pytest.mark.unit
class TestVerifyTower:
    """Test independent verification of tower claims."""

    def test_verify_tower(self, generator_tower):
        """Test that every claim is confirmed."""
        report = verify_tower(generator_tower)
        assert report.ok
        assert report.to_dict()["checked"] == 4

    def test_verify_serialized_tower(self, generator_tower):
        """Test verification of a tower read back from JSON."""
        data = json.loads(json.dumps(generator_tower.to_dict()))
        assert verify_tower(data, workers=2).ok

    def test_tampered_cocycle_detected(self, generator_tower):
        """Test that changing one cocycle value breaks the claim for b1."""
        data = copy.deepcopy(generator_tower.to_dict())
        data["levels"][0]["cocycle"] = [1, 0, 1, 1]
        with pytest.raises(VerificationError) as excinfo:
            verify_tower(data)
        assert excinfo.value.offending["word"] == [2]
        assert excinfo.value.offending["recomputed"] is None

    def test_tampered_cocycle_reported(self, generator_tower):
        """Test that non-strict mode lists the mismatch."""
        data = copy.deepcopy(generator_tower.to_dict())
        data["levels"][0]["cocycle"] = [1, 0, 1, 1]
        report = verify_tower(data, strict=False)
        assert not report.ok
        assert [m["word"] for m in report.mismatches] == [[2]]

    def test_malformed_transversal(self, generator_tower):
        """Test that a transversal even under the cocycle is refused."""
        data = copy.deepcopy(generator_tower.to_dict())
        data["levels"][0]["cocycle"] = [0, 1, 1, 1]
        with pytest.raises(VerificationError, match="transversal"):
            verify_tower(data)

    def test_unknown_word(self, generator_tower):
        """Test that words outside the tower are refused."""
        with pytest.raises(VerificationError, match="not part of the tower"):
            verify_tower(generator_tower, words=[COMMUTATOR])
