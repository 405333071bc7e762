import pytest

from convoyplan.conflicts import (
    Conflict,
    candidate_splits,
    detect_first_conflict,
    entities_at,
    overlap_cells,
    resolve,
    split_asym,
    split_normal,
    split_sym,
)
from convoyplan.domain import Entity, GridMap, SlotRef, single_entity
from convoyplan.planner import Planner
from convoyplan.search import RESOLVERS, _constraints_as_map
from tests.conftest import make_instance


def _plan(instance, assignments, constraints=None):
    planner = Planner(instance.grid)
    plan = planner.cost_so_far(instance, assignments, constraints or {})
    assert plan is not None
    return planner, plan


@pytest.fixture
def head_on():
    # two singles forced through each other on a 1-wide detour-free row,
    # plus one open row above so splits stay satisfiable
    return make_instance(
        5, 2, [(0, 0), (4, 0)], [([(4, 0)], [(3, 0)]), ([(0, 0)], [(1, 0)])]
    )


class TestEntitiesAt:
    def test_singles_before_any_assignment(self, pair_instance):
        _, plan = _plan(pair_instance, ((), ()))
        alive = entities_at(pair_instance, plan, 0)
        assert [e.kind for e, _ in alive] == ["single", "single"]
        assert [a for _, a in alive] == [(0, 0), (5, 0)]

    def test_convoy_during_window(self, pair_instance):
        assignments = ((SlotRef(0, 0),), (SlotRef(0, 1),))
        _, plan = _plan(pair_instance, assignments)
        t_sync, completion = plan.convoy_windows[0]
        assert (t_sync, completion) == (4, 6)
        alive = entities_at(pair_instance, plan, t_sync)
        assert len(alive) == 1
        assert alive[0][0].kind == "convoy"
        assert alive[0][0].members == (0, 1)
        # at completion the convoy has dissolved back into singles
        alive_end = entities_at(pair_instance, plan, completion)
        assert [e.kind for e, _ in alive_end] == ["single", "single"]

    def test_rest_position_after_end(self, triv_instance):
        assignments = ((SlotRef(0, 0),),)
        _, plan = _plan(triv_instance, assignments)
        alive = entities_at(triv_instance, plan, 99)
        assert alive[0][1] == (2, 2)


class TestDetect:
    def test_no_conflict_none(self, pair_instance):
        assignments = ((SlotRef(0, 0),), (SlotRef(0, 1),))
        _, plan = _plan(pair_instance, assignments)
        assert detect_first_conflict(pair_instance, plan) is None

    def test_earliest_conflict_reported(self, head_on):
        assignments = ((SlotRef(0, 0),), ((SlotRef(1, 0),)))
        _, plan = _plan(head_on, assignments)
        c = detect_first_conflict(head_on, plan)
        assert c is not None
        assert c.entity_a.reference_agent == 0
        assert c.entity_b.reference_agent == 1
        assert c.anchor_a == c.anchor_b  # same cell at the meeting time
        assert c.t == 2

    def test_rest_conflict_detected(self):
        # agent 1 idles on the cell agent 0's leg must cross
        inst = make_instance(5, 1, [(0, 0), (2, 0)], [([(4, 0)], [(3, 0)])])
        assignments = ((SlotRef(0, 0),), ())
        _, plan = _plan(inst, assignments)
        c = detect_first_conflict(inst, plan)
        assert c is not None
        assert c.t == 2
        assert c.anchor_a == (2, 0)


def _convoy_conflict():
    """A 2x1 convoy overlapping a single on one cell of its footprint."""
    grid = GridMap(6, 6, frozenset())
    convoy = Entity((0, 1), ((0, 0), (1, 0)), 0)
    single = single_entity(2)
    conflict = Conflict(convoy, single, (2, 2), (3, 2), 4)
    return grid, conflict


class TestSplits:
    def test_normal_constrains_both_anchors(self):
        grid, c = _convoy_conflict()
        a, b = split_normal(c)
        assert a.agent_id == 0 and b.agent_id == 2
        assert [(k.vertex, k.timestep) for k in a.constraints] == [((2, 2), 4)]
        assert [(k.vertex, k.timestep) for k in b.constraints] == [((3, 2), 4)]

    def test_overlap_cells(self):
        _, c = _convoy_conflict()
        assert overlap_cells(c) == [(3, 2)]

    def test_asym_broadens_the_other_side(self):
        grid, c = _convoy_conflict()
        a, b = split_asym(c, grid)
        # side a: the convoy keeps its single anchor ban
        assert [(k.vertex, k.timestep) for k in a.constraints] == [((2, 2), 4)]
        # side b: the single is banned from the convoy's whole footprint
        assert {k.vertex for k in b.constraints} == {(2, 2), (3, 2)}

    def test_sym_excludes_shared_cell_for_both(self):
        grid, c = _convoy_conflict()
        a, b = split_sym(c, grid)
        # all convoy anchors covering (3,2): (3,2) itself and (2,2)
        assert {k.vertex for k in a.constraints} == {(2, 2), (3, 2)}
        assert {k.vertex for k in b.constraints} == {(3, 2)}

    def test_all_sides_exclude_the_conflict_placement(self):
        grid, c = _convoy_conflict()
        for a, b in candidate_splits(c, grid):
            assert any(k.vertex == c.anchor_a and k.timestep == c.t for k in a.constraints)
            assert any(k.vertex == c.anchor_b and k.timestep == c.t for k in b.constraints)
            assert all(k.agent_id == c.entity_a.reference_agent for k in a.constraints)
            assert all(k.agent_id == c.entity_b.reference_agent for k in b.constraints)

    def test_single_single_degenerates_to_normal(self):
        grid = GridMap(5, 5, frozenset())
        c = Conflict(single_entity(0), single_entity(1), (2, 2), (2, 2), 3)
        seen = {tuple((s.agent_id, s.constraints) for s in split) for split in candidate_splits(c, grid)}
        assert len(seen) == 1  # normal, asym, and sym all collapse to one split


class TestResolve:
    def test_every_resolver_returns_sound_split(self, head_on):
        assignments = ((SlotRef(0, 0),), ((SlotRef(1, 0),)))
        planner, plan = _plan(head_on, assignments)
        conflict = detect_first_conflict(head_on, plan)
        for name in RESOLVERS:
            a, b = resolve(
                name, conflict, head_on.grid, planner, head_on, plan,
                _constraints_as_map((frozenset(), frozenset())),
            )
            assert a.agent_id == 0 and b.agent_id == 1
            assert a.constraints and b.constraints
            assert any(k.vertex == conflict.anchor_a and k.timestep == conflict.t
                       for k in a.constraints)
            assert any(k.vertex == conflict.anchor_b and k.timestep == conflict.t
                       for k in b.constraints)

    def test_unknown_resolver_rejected(self, head_on):
        assignments = ((SlotRef(0, 0),), ((SlotRef(1, 0),)))
        planner, plan = _plan(head_on, assignments)
        conflict = detect_first_conflict(head_on, plan)
        with pytest.raises((KeyError, ValueError)):
            resolve("bogus", conflict, head_on.grid, planner, head_on, plan, {})
