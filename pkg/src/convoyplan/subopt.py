"""Suboptimal solvers: difficulty-guided selection, nearest-task pruning,
and greedy prioritized planning.

Task difficulty is the optimal team cost under a Hungarian assignment of
available agents to slots, where an entry costs the unconstrained travel
time from the agent's end location to the slot plus the task's unconstrained
convoy execution time.  `bt` restricts new-task openings to the easiest task
(best-task-first), `wt` to the hardest; `nn1`/`nn2` let each agent open only
its 1 or 2 nearest unassigned tasks.  All four reuse the optimal engine, so
only the new-task branching is pruned.

`greedy-pp` plans tasks one at a time (easiest first, Hungarian team) against
a reservation table and never backtracks; it fails with status "stuck" when
some leg cannot be placed.
"""

from __future__ import annotations

import time
from typing import Optional, Sequence

from scipy.optimize import linear_sum_assignment

from .domain import (
    PHASE_ASSEMBLY,
    PHASE_CONVOY,
    PHASE_IDLE,
    AgentPath,
    Instance,
    PathSegment,
    SlotRef,
    Solution,
    SolverStats,
    TaskSpec,
    Vertex,
    manhattan,
)
from .planner import SINGLE_SHAPE, NodePlan, Planner, PlanningError, Trajectory
from .search import Limits, SolveResult, run_search

INFEASIBLE = 10**9


# ---------------------------------------------------------------------------
# Team cost matrices and difficulty
# ---------------------------------------------------------------------------


def hungarian(matrix: Sequence[Sequence[int]]) -> tuple[dict[int, int], int]:
    """Minimum-cost column->row assignment; requires rows >= columns."""
    rows = len(matrix)
    cols = len(matrix[0]) if rows else 0
    if rows < cols:
        raise ValueError("hungarian needs at least as many rows as columns")
    row_ind, col_ind = linear_sum_assignment(matrix)
    chosen = {int(c): int(r) for r, c in zip(row_ind, col_ind)}
    total = sum(matrix[r][c] for c, r in chosen.items())
    return chosen, total


def team_cost_matrix(
    planner: Planner, task: TaskSpec, end_locs: Sequence[tuple[int, Vertex]]
) -> list[list[int]]:
    """Rows follow end_locs order, columns are slots 0..k-1."""
    exec_time = planner.static_distance(task.shape, task.start_anchor, task.goal_anchor)
    matrix: list[list[int]] = []
    for _, loc in end_locs:
        row = []
        for slot_cell in task.start_config:
            travel = planner.static_distance(SINGLE_SHAPE, loc, slot_cell)
            if travel < 0 or exec_time < 0:
                row.append(INFEASIBLE)
            else:
                row.append(travel + exec_time)
        matrix.append(row)
    return matrix


def task_difficulty(
    planner: Planner, task: TaskSpec, end_locs: Sequence[tuple[int, Vertex]]
) -> int:
    _, total = hungarian(team_cost_matrix(planner, task, end_locs))
    return total


# ---------------------------------------------------------------------------
# Selector and nearest-task variants
# ---------------------------------------------------------------------------


def _end_locs(instance: Instance, plan: NodePlan) -> list[tuple[int, Vertex]]:
    return [(a, plan.paths[a].vertices[-1]) for a in range(instance.n_agents)]


def selector_choice(
    mode: str,
    instance: Instance,
    planner: Planner,
    plan: NodePlan,
    unassigned: Sequence[int],
) -> set[int]:
    """The single easiest (bt) or hardest (wt) unassigned task; ties by id."""
    locs = _end_locs(instance, plan)
    best_tid: Optional[int] = None
    best_d = 0
    for tid in sorted(unassigned):
        d = task_difficulty(planner, instance.tasks[tid], locs)
        if best_tid is None or (d < best_d if mode == "bt" else d > best_d):
            best_tid, best_d = tid, d
    return set() if best_tid is None else {best_tid}


def solve_selector(
    instance: Instance,
    mode: str,
    expansion: str = "incremental",
    resolver: str = "sym",
    limits: Optional[Limits] = None,
) -> SolveResult:
    def choose(inst, planner, plan, unassigned):
        return selector_choice(mode, inst, planner, plan, unassigned)

    return run_search(instance, expansion, resolver, limits, task_choice_filter=choose)


def nearest_allowed(
    instance: Instance,
    plan: NodePlan,
    agent: int,
    tid: int,
    unassigned: Sequence[int],
    nn_k: int,
) -> bool:
    """True iff tid is among the agent's nn_k nearest unassigned tasks."""
    loc = plan.paths[agent].vertices[-1]
    ranked = sorted(
        (min(manhattan(loc, cell) for cell in instance.tasks[t].start_config), t)
        for t in unassigned
    )
    return tid in {t for _, t in ranked[:nn_k]}


def solve_nearest(
    instance: Instance,
    nn_k: int,
    expansion: str = "incremental",
    resolver: str = "sym",
    limits: Optional[Limits] = None,
) -> SolveResult:
    def allow(inst, plan, agent, tid, unassigned):
        return nearest_allowed(inst, plan, agent, tid, unassigned, nn_k)

    return run_search(instance, expansion, resolver, limits, new_task_filter=allow)


# ---------------------------------------------------------------------------
# Greedy prioritized planning
# ---------------------------------------------------------------------------


class _Stuck(Exception):
    pass


class _ReservationTable:
    """Concrete (cell, t) bookings plus open-ended per-agent tails.

    Agents that were never routed have no tail, only their t=0 start cell:
    later plans may drive through their parking, and the final evasion pass
    moves them aside (or their own first leg departs in time).
    """

    def __init__(self, instance: Instance) -> None:
        self.concrete: dict[tuple[Vertex, int], int] = {
            (instance.agents[a].start, 0): a for a in range(instance.n_agents)
        }
        self.tails: dict[int, tuple[Vertex, int]] = {}

    def occupancy_constraints(self, exclude: set[int], horizon: int) -> frozenset:
        pairs = set()
        for (cell, t), owner in self.concrete.items():
            if owner not in exclude and t <= horizon:
                pairs.add((cell, t))
        for owner, (cell, since) in self.tails.items():
            if owner not in exclude:
                for t in range(since, horizon + 1):
                    pairs.add((cell, t))
        return frozenset(pairs)

    def clean(self, cells_times: Sequence[tuple[Vertex, int]], exclude: set[int]) -> bool:
        for cell, t in cells_times:
            owner = self.concrete.get((cell, t))
            if owner is not None and owner not in exclude:
                return False
            for other, (tc, since) in self.tails.items():
                if other not in exclude and cell == tc and t >= since:
                    return False
        return True

    def tail_on(self, cell: Vertex, exclude: set[int]) -> bool:
        return any(
            owner not in exclude and tc == cell for owner, (tc, _) in self.tails.items()
        )

    def latest_concrete(self, cell: Vertex, exclude: set[int]) -> int:
        worst = -1
        for (c, t), owner in self.concrete.items():
            if c == cell and owner not in exclude and t > worst:
                worst = t
        return worst

    def book(self, cells_times: Sequence[tuple[Vertex, int]], owner: int) -> None:
        for cell, t in cells_times:
            self.concrete[(cell, t)] = owner


def _leg_cells(traj: Trajectory, offset: Vertex = (0, 0)) -> list[tuple[Vertex, int]]:
    ox, oy = offset
    return [
        ((x + ox, y + oy), traj.start_time + i)
        for i, (x, y) in enumerate(traj.anchors)
    ]


def solve_greedy(instance: Instance, limits: Optional[Limits] = None) -> SolveResult:
    limits = limits or Limits()
    stats = SolverStats()
    started = time.perf_counter()
    planner = Planner(instance.grid)
    table = _ReservationTable(instance)
    n = instance.n_agents

    loc: list[Vertex] = [instance.agents[a].start for a in range(n)]
    free_t = [0] * n
    vertices: list[list[Vertex]] = [[instance.agents[a].start] for a in range(n)]
    segments: list[list[PathSegment]] = [[] for _ in range(n)]
    duties: list[list[SlotRef]] = [[] for _ in range(n)]
    remaining = set(t.id for t in instance.tasks)

    def finish(status: str, solution: Optional[Solution] = None) -> SolveResult:
        stats.status = status
        stats.runtime_ms = (time.perf_counter() - started) * 1000.0
        if solution is not None:
            solution.stats.__dict__.update(stats.__dict__)
        return SolveResult(status, solution, stats)

    def plan_leg(
        shape: tuple[Vertex, ...],
        member_ids: tuple[int, ...],
        start: Vertex,
        goal: Vertex,
        start_time: int,
        min_arrival: int,
        exclude: set[int],
    ) -> Trajectory:
        """A* against the reservation table, re-widening the tail horizon if
        the result overruns it."""
        base = max(
            [start_time, min_arrival]
            + [t for (_, t) in table.concrete]
            + [since for (_, since) in table.tails.values()]
        )
        horizon = base + 2 * instance.grid.passable_count + 4
        for _ in range(3):
            pairs = table.occupancy_constraints(exclude, horizon)
            cons = {a: pairs for a in member_ids}
            try:
                traj = planner.unified_astar(
                    shape, member_ids, start, goal, start_time, cons, min_arrival
                )
            except PlanningError as exc:
                raise _Stuck(str(exc)) from exc
            occupied = [
                ct for off in shape for ct in _leg_cells(traj, off)
            ]
            if table.clean(occupied, exclude):
                return traj
            horizon *= 2
        raise _Stuck("reservation horizon overrun")

    try:
        while remaining:
            if (time.perf_counter() - started) > limits.timeout_s:
                return finish("timeout")
            end_locs = [(a, loc[a]) for a in range(n)]
            choice: Optional[tuple[int, int]] = None
            for tid in sorted(remaining):
                d = task_difficulty(planner, instance.tasks[tid], end_locs)
                if choice is None or d < choice[0]:
                    choice = (d, tid)
            assert choice is not None
            difficulty, tid = choice
            if difficulty >= INFEASIBLE:
                raise _Stuck(f"task {tid} unreachable for every team")
            task = instance.tasks[tid]
            matrix = team_cost_matrix(planner, task, end_locs)
            col_to_row, _ = hungarian(matrix)
            if any(matrix[r][c] >= INFEASIBLE for c, r in col_to_row.items()):
                raise _Stuck(f"task {tid} has no feasible team")
            team = tuple(end_locs[col_to_row[s]][0] for s in range(task.k))

            arrivals: dict[int, int] = {}
            legs: dict[int, Trajectory] = {}
            for slot, a in enumerate(team):
                slot_cell = task.start_config[slot]
                if table.tail_on(slot_cell, exclude={a}):
                    raise _Stuck(f"slot {slot_cell} of task {tid} is parked on")
                min_arrival = table.latest_concrete(slot_cell, exclude={a}) + 1
                table.tails.pop(a, None)
                traj = plan_leg(
                    SINGLE_SHAPE, (a,), loc[a], slot_cell, free_t[a], min_arrival, {a}
                )
                table.book(_leg_cells(traj), a)
                table.tails[a] = (slot_cell, traj.arrival)
                legs[a] = traj
                arrivals[a] = traj.arrival

            t_sync = max(arrivals.values())
            team_set = set(team)
            for slot, a in enumerate(team):
                slot_cell = task.start_config[slot]
                table.book(
                    [(slot_cell, t) for t in range(arrivals[a], t_sync + 1)], a
                )
                table.tails.pop(a, None)

            min_arrival = 0
            for slot in range(task.k):
                landing = task.goal_config[slot]
                if table.tail_on(landing, exclude=team_set):
                    raise _Stuck(f"goal cell {landing} of task {tid} is parked on")
                latest = table.latest_concrete(landing, exclude=team_set)
                min_arrival = max(min_arrival, latest + 1)
            convoy = plan_leg(
                task.shape,
                team,
                task.start_anchor,
                task.goal_anchor,
                t_sync,
                min_arrival,
                team_set,
            )
            completion = convoy.arrival

            for slot, a in enumerate(team):
                off = task.shape[slot]
                table.book(_leg_cells(convoy, off), a)
                table.tails[a] = (task.goal_config[slot], completion)
                leg = legs[a]
                vertices[a].extend(leg.anchors[1:])
                vertices[a].extend([task.start_config[slot]] * (t_sync - arrivals[a]))
                vertices[a].extend(
                    (x + off[0], y + off[1]) for x, y in convoy.anchors[1:]
                )
                segments[a].append(
                    PathSegment(
                        leg.start_time,
                        t_sync,
                        PHASE_ASSEMBLY,
                        task_id=tid,
                        slot=slot,
                        arrival=arrivals[a],
                    )
                )
                segments[a].append(
                    PathSegment(t_sync, completion, PHASE_CONVOY, task_id=tid, slot=slot)
                )
                duties[a].append(SlotRef(tid, slot))
                loc[a] = task.goal_config[slot]
                free_t[a] = completion
            remaining.discard(tid)
            stats.task_expansions += 1

        for a in range(n):
            if duties[a]:
                table.tails.setdefault(a, (loc[a], free_t[a]))
                continue
            parking = loc[a]
            overrun = any(
                cell == parking and t >= 1 and owner != a
                for (cell, t), owner in table.concrete.items()
            )
            if not overrun and not table.tail_on(parking, exclude={a}):
                table.tails[a] = (parking, 0)
                continue
            dist = planner.distance_table(SINGLE_SHAPE, parking)
            ranked = sorted(
                (d, instance.grid.vertex(i))
                for i, d in enumerate(dist)
                if d > 0
            )
            moved = False
            for _, target in ranked[:60]:
                if table.tail_on(target, exclude={a}):
                    continue
                try:
                    traj = plan_leg(SINGLE_SHAPE, (a,), parking, target, 0, 0, {a})
                except _Stuck:
                    continue
                if table.latest_concrete(target, exclude={a}) > traj.arrival:
                    continue
                table.book(_leg_cells(traj), a)
                table.tails[a] = (target, traj.arrival)
                vertices[a] = list(traj.anchors)
                moved = True
                break
            if not moved:
                raise _Stuck(f"idle agent {a} cannot clear its parking cell")
    except _Stuck:
        return finish("stuck")

    paths = []
    for a in range(n):
        segs = segments[a] or [PathSegment(0, 0, PHASE_IDLE)]
        paths.append(AgentPath(a, tuple(vertices[a]), tuple(segs)))
    soc = sum(p.completion for p in paths)
    solution = Solution(
        assignments=tuple(tuple(d) for d in duties),
        paths=tuple(paths),
        soc=soc,
        stats=SolverStats(),
    )
    return finish("solved", solution)
