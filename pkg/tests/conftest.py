"""Shared instance builders and reference fixtures.

Reference soc values were frozen from the exhaustive oracle; the arithmetic
ones (triv, adjacent, pair, symtie) also follow from Manhattan sums on empty
grids.
"""

from __future__ import annotations

import pytest

from convoyplan.domain import AgentSpec, GridMap, Instance, TaskSpec


def make_instance(w, h, agents, tasks, blocked=()):
    grid = GridMap(w, h, frozenset(blocked))
    ags = tuple(AgentSpec(i, p) for i, p in enumerate(agents))
    ts = tuple(TaskSpec.from_configs(i, list(s), list(g)) for i, (s, g) in enumerate(tasks))
    return Instance(grid, ags, ts)


# one agent walks to the slot (2 steps) and convoys the payload (2 steps)
TRIV_SOC = 4
# agent already on the slot, goal one step away
ADJACENT_SOC = 1
# both members arrive at t=4, convoy takes 2 -> 6 + 6
PAIR_SOC = 12
# two k=1 tasks with head-on routes along the middle row
CROSSING_SOC = 9
# symmetric 2-slot task, both slot orderings tie
SYMTIE_SOC = 8
# three chained k=2 tasks; an optimal chain rests an agent on a later slot
CHAIN3_SOC = 34


@pytest.fixture
def triv_instance():
    return make_instance(5, 5, [(0, 0)], [([(2, 0)], [(2, 2)])])


@pytest.fixture
def adjacent_instance():
    return make_instance(3, 3, [(1, 1)], [([(1, 1)], [(1, 2)])])


@pytest.fixture
def pair_instance():
    return make_instance(6, 6, [(0, 0), (5, 0)], [([(2, 2), (3, 2)], [(2, 4), (3, 4)])])


@pytest.fixture
def crossing_instance():
    return make_instance(
        5, 5, [(0, 2), (4, 2)], [([(3, 2)], [(0, 2)]), ([(1, 2)], [(4, 2)])]
    )


@pytest.fixture
def symtie_instance():
    return make_instance(6, 4, [(1, 3), (4, 3)], [([(2, 3), (3, 3)], [(2, 0), (3, 0)])])


@pytest.fixture
def chain3_instance():
    return make_instance(
        7,
        8,
        [(4, 0), (2, 6), (6, 3)],
        [
            ([(0, 4), (0, 5)], [(2, 1), (2, 2)]),
            ([(5, 4), (5, 5)], [(0, 3), (0, 4)]),
            ([(5, 1), (5, 2)], [(5, 3), (5, 4)]),
        ],
    )


@pytest.fixture
def boxed_instance():
    # agent 0 is walled into the corner and can never reach the task
    return make_instance(
        5,
        5,
        [(0, 0)],
        [([(3, 3)], [(4, 3)])],
        blocked=[(1, 0), (0, 1), (1, 1)],
    )
