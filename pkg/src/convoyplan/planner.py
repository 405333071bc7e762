"""Low-level planning: constrained space-time search for singles and convoys.

A convoy is planned exactly like a single agent, over the anchor positions
where its whole footprint fits; member constraints are translated into anchor
constraints through each member's slot offset.  Task execution follows a
three-step scheme: independent member legs to the slot cells, synchronization
at t_sync = max arrival (early members wait on their slots), then one rigid
convoy leg from the start anchor to the goal anchor.

Constraints bind the determined part of an itinerary only.  The implicit
rest at an agent's final vertex is visible to conflict detection but is not
re-planned away; see conflicts.py for how such conflicts resolve.
"""

from __future__ import annotations

from array import array
from dataclasses import dataclass, field
from typing import Mapping, Optional, Sequence

from .domain import (
    PHASE_ASSEMBLY,
    PHASE_CONVOY,
    PHASE_IDLE,
    AgentPath,
    GridMap,
    Instance,
    PathSegment,
    SlotRef,
    TaskSpec,
    Vertex,
    footprint,
)
from . import kernels

ConstraintMap = Mapping[int, frozenset[tuple[Vertex, int]]]

EMPTY_CONSTRAINTS: frozenset[tuple[Vertex, int]] = frozenset()


class PlanningError(Exception):
    """Base class for low-level planning failures."""


class Unreachable(PlanningError):
    """The goal cannot be reached on the static grid (no constraints involved)."""


class NoPathWithinHorizon(PlanningError):
    """Constraints exclude every path up to the horizon bound."""


@dataclass(frozen=True)
class Trajectory:
    """Anchor positions for consecutive timesteps starting at start_time."""

    anchors: tuple[Vertex, ...]
    start_time: int

    @property
    def arrival(self) -> int:
        return self.start_time + len(self.anchors) - 1

    def at(self, t: int) -> Vertex:
        return self.anchors[t - self.start_time]


@dataclass(frozen=True)
class MDD:
    """Level sets of anchors on some constrained path of exactly `cost` steps."""

    cost: int
    start_time: int
    levels: tuple[frozenset[Vertex], ...]

    @property
    def is_empty(self) -> bool:
        return not self.levels


@dataclass
class TaskPlan:
    task_id: int
    members: tuple[int, ...]
    member_trajectories: dict[int, Trajectory]
    arrivals: dict[int, int]
    t_sync: int
    convoy: Trajectory
    completion: int


@dataclass
class NodePlan:
    """Planned itineraries for one search node."""

    paths: tuple[AgentPath, ...]
    g: int
    convoy_windows: dict[int, tuple[int, int]] = field(default_factory=dict)
    task_members: dict[int, tuple[int, ...]] = field(default_factory=dict)


SINGLE_SHAPE: tuple[Vertex, ...] = ((0, 0),)


class Planner:
    """Per-instance planning context with shape/distance/leg caches.

    Not thread-safe; create one per solver invocation.  Caches only ever
    memoize pure functions of their keys, so reuse cannot change results.
    """

    def __init__(self, grid: GridMap) -> None:
        self.grid = grid
        self._anchor_ok: dict[tuple[Vertex, ...], bytes] = {}
        self._dist: dict[tuple[tuple[Vertex, ...], Vertex], array] = {}
        self._legs: dict[tuple, Optional[Trajectory]] = {}

    # -- static geometry ---------------------------------------------------

    def anchor_bitmap(self, shape: tuple[Vertex, ...]) -> bytes:
        """Per-cell flag: can the shape be anchored here with all cells passable."""
        cached = self._anchor_ok.get(shape)
        if cached is not None:
            return cached
        grid = self.grid
        bits = bytearray(grid.width * grid.height)
        for y in range(grid.height):
            for x in range(grid.width):
                if all(grid.passable(v) for v in footprint(shape, (x, y))):
                    bits[y * grid.width + x] = 1
        result = bytes(bits)
        self._anchor_ok[shape] = result
        return result

    def distance_table(self, shape: tuple[Vertex, ...], goal: Vertex) -> array:
        key = (shape, goal)
        cached = self._dist.get(key)
        if cached is None:
            cached = kernels.grid_distances(
                self.anchor_bitmap(shape), self.grid.width, self.grid.height, self.grid.index(goal)
            )
            self._dist[key] = cached
        return cached

    def static_distance(self, shape: tuple[Vertex, ...], frm: Vertex, to: Vertex) -> int:
        """Unconstrained anchor travel steps, or -1 when unreachable."""
        if not self.grid.in_bounds(frm):
            return -1
        return self.distance_table(shape, to)[self.grid.index(frm)]

    # -- constrained search ------------------------------------------------

    def _blocked_codes(
        self,
        shape: tuple[Vertex, ...],
        members: Sequence[int],
        constraints: ConstraintMap,
        start_time: int,
        max_rel_t: int,
    ) -> array:
        grid = self.grid
        ncells = grid.width * grid.height
        codes = set()
        for (dx, dy), agent in zip(shape, members):
            for (vx, vy), t in constraints.get(agent, EMPTY_CONSTRAINTS):
                rel = t - start_time
                if 0 <= rel <= max_rel_t:
                    ax, ay = vx - dx, vy - dy
                    if 0 <= ax < grid.width and 0 <= ay < grid.height:
                        codes.add(rel * ncells + ay * grid.width + ax)
        return array("q", sorted(codes))

    def _max_constraint_time(self, members: Sequence[int], constraints: ConstraintMap) -> int:
        worst = 0
        for agent in members:
            for _, t in constraints.get(agent, EMPTY_CONSTRAINTS):
                if t > worst:
                    worst = t
        return worst

    def unified_astar(
        self,
        shape: tuple[Vertex, ...],
        members: tuple[int, ...],
        start_anchor: Vertex,
        goal_anchor: Vertex,
        start_time: int,
        constraints: ConstraintMap,
        min_arrival: int = 0,
    ) -> Trajectory:
        """Shortest constrained anchor trajectory; raises on failure.

        min_arrival (absolute) forces the goal to be reached at or after that
        timestep, used for wait-at-slot replans.
        """
        min_goal_rel = max(0, min_arrival - start_time)
        key = (
            shape,
            start_anchor,
            goal_anchor,
            start_time,
            min_goal_rel,
            tuple(constraints.get(a, EMPTY_CONSTRAINTS) for a in members),
        )
        if key in self._legs:
            traj = self._legs[key]
            if traj is None:
                raise NoPathWithinHorizon(f"no path to {goal_anchor} within horizon")
            return traj

        grid = self.grid
        ok = self.anchor_bitmap(shape)
        dist = self.distance_table(shape, goal_anchor)
        start_idx = grid.index(start_anchor)
        goal_idx = grid.index(goal_anchor)
        if not ok[start_idx] or not ok[goal_idx] or dist[start_idx] < 0:
            raise Unreachable(f"no placement path from {start_anchor} to {goal_anchor}")

        max_rel_t = grid.passable_count + self._max_constraint_time(members, constraints)
        if min_goal_rel + grid.passable_count > max_rel_t:
            max_rel_t = min_goal_rel + grid.passable_count
        blocked = self._blocked_codes(shape, members, constraints, start_time, max_rel_t)
        raw = kernels.find_path_spacetime(
            ok, grid.width, grid.height, dist, start_idx, goal_idx, max_rel_t, blocked, min_goal_rel
        )
        if raw is None:
            self._legs[key] = None
            raise NoPathWithinHorizon(f"no path to {goal_anchor} within horizon {max_rel_t}")
        traj = Trajectory(tuple(grid.vertex(i) for i in raw), start_time)
        self._legs[key] = traj
        return traj

    # -- task execution ----------------------------------------------------

    def plan_task_execution(
        self,
        task: TaskSpec,
        members: tuple[int, ...],
        origins: Mapping[int, tuple[Vertex, int]],
        constraints: ConstraintMap,
    ) -> TaskPlan:
        """Member legs, synchronization, and the convoy leg for one task.

        origins maps each member to (current cell, release time).  Members
        arriving early wait on their slot; a constraint that hits a slot
        during the wait forces that member to re-plan with a later arrival,
        and t_sync grows monotonically until the waits are clean.
        """
        legs: dict[int, Trajectory] = {}
        arrivals: dict[int, int] = {}
        min_arrivals: dict[int, int] = {}
        for slot, agent in enumerate(members):
            origin, release = origins[agent]
            traj = self.unified_astar(
                SINGLE_SHAPE, (agent,), origin, task.start_config[slot], release, constraints
            )
            legs[agent] = traj
            arrivals[agent] = traj.arrival
            min_arrivals[agent] = 0

        t_sync = max(arrivals.values())
        while True:
            dirty = None
            for slot, agent in enumerate(members):
                slot_cell = task.start_config[slot]
                worst = -1
                for (v, t) in constraints.get(agent, EMPTY_CONSTRAINTS):
                    if v == slot_cell and arrivals[agent] <= t <= t_sync and t > worst:
                        worst = t
                if worst >= 0:
                    dirty = (slot, agent, worst)
                    break
            if dirty is None:
                break
            slot, agent, worst = dirty
            origin, release = origins[agent]
            min_arrivals[agent] = max(min_arrivals[agent], worst + 1)
            traj = self.unified_astar(
                SINGLE_SHAPE,
                (agent,),
                origin,
                task.start_config[slot],
                release,
                constraints,
                min_arrival=min_arrivals[agent],
            )
            legs[agent] = traj
            arrivals[agent] = traj.arrival
            if arrivals[agent] > t_sync:
                t_sync = arrivals[agent]

        convoy = self.unified_astar(
            task.shape, members, task.start_anchor, task.goal_anchor, t_sync, constraints
        )
        return TaskPlan(
            task_id=task.id,
            members=members,
            member_trajectories=legs,
            arrivals=arrivals,
            t_sync=t_sync,
            convoy=convoy,
            completion=convoy.arrival,
        )

    # -- whole-node planning ----------------------------------------------

    def cost_so_far(
        self,
        instance: Instance,
        assignments: Sequence[Sequence[SlotRef]],
        constraints: ConstraintMap,
    ) -> Optional[NodePlan]:
        """Paths and summed determined cost for a (partial) assignment.

        Fully assigned tasks are planned with synchronization and their
        convoy leg; members of a partially assigned task get only their
        travel leg, contributing the arrival time.  Returns None when some
        leg is impossible under the constraints.
        """
        n = instance.n_agents
        duties: list[list[SlotRef]] = [list(assignments[a]) for a in range(n)]
        pointer = [0] * n
        loc: list[Vertex] = [instance.agents[a].start for a in range(n)]
        free_t = [0] * n
        vertices: list[list[Vertex]] = [[instance.agents[a].start] for a in range(n)]
        segments: list[list[PathSegment]] = [[] for _ in range(n)]
        determined: list[int] = [0] * n

        slot_holder: dict[int, dict[int, int]] = {}
        for a in range(n):
            for ref in duties[a]:
                slot_holder.setdefault(ref.task_id, {})[ref.slot] = a
        full_tasks = {
            tid for tid, slots in slot_holder.items() if len(slots) == instance.tasks[tid].k
        }

        windows: dict[int, tuple[int, int]] = {}
        members_of: dict[int, tuple[int, ...]] = {}
        planned: set[int] = set()

        def current_duty(a: int) -> Optional[SlotRef]:
            return duties[a][pointer[a]] if pointer[a] < len(duties[a]) else None

        try:
            progressed = True
            while progressed:
                progressed = False
                for tid in sorted(full_tasks - planned):
                    task = instance.tasks[tid]
                    members = tuple(slot_holder[tid][s] for s in range(task.k))
                    if any(
                        (d := current_duty(a)) is None or d.task_id != tid for a in members
                    ):
                        continue
                    origins = {a: (loc[a], free_t[a]) for a in members}
                    plan = self.plan_task_execution(task, members, origins, constraints)
                    for slot, a in enumerate(members):
                        leg = plan.member_trajectories[a]
                        vertices[a].extend(leg.anchors[1:])
                        vertices[a].extend(
                            [task.start_config[slot]] * (plan.t_sync - plan.arrivals[a])
                        )
                        off = task.shape[slot]
                        vertices[a].extend(
                            (ax + off[0], ay + off[1]) for ax, ay in plan.convoy.anchors[1:]
                        )
                        segments[a].append(
                            PathSegment(
                                leg.start_time,
                                plan.t_sync,
                                PHASE_ASSEMBLY,
                                task_id=tid,
                                slot=slot,
                                arrival=plan.arrivals[a],
                            )
                        )
                        segments[a].append(
                            PathSegment(
                                plan.t_sync, plan.completion, PHASE_CONVOY, task_id=tid, slot=slot
                            )
                        )
                        loc[a] = task.goal_config[slot]
                        free_t[a] = plan.completion
                        determined[a] = plan.completion
                        pointer[a] += 1
                    windows[tid] = (plan.t_sync, plan.completion)
                    members_of[tid] = members
                    planned.add(tid)
                    progressed = True

            # travel legs of the (at most one) partially assigned task
            for a in range(n):
                ref = current_duty(a)
                if ref is None or ref.task_id in full_tasks:
                    continue
                task = instance.tasks[ref.task_id]
                leg = self.unified_astar(
                    SINGLE_SHAPE,
                    (a,),
                    loc[a],
                    task.start_config[ref.slot],
                    free_t[a],
                    constraints,
                )
                vertices[a].extend(leg.anchors[1:])
                segments[a].append(
                    PathSegment(
                        leg.start_time,
                        leg.arrival,
                        PHASE_ASSEMBLY,
                        task_id=ref.task_id,
                        slot=ref.slot,
                        arrival=leg.arrival,
                    )
                )
                determined[a] = leg.arrival
        except PlanningError:
            return None

        for tid in full_tasks:
            if tid not in planned:  # cannot happen for branch-consistent duty orders
                raise AssertionError(f"task {tid} never became ready")

        # A constraint on the rest-at-final-vertex padding is unsatisfiable:
        # the agent has nothing left to replan, so the node is infeasible.
        # Solutions where the rester stays put live under the sibling branch
        # that constrains the other party instead.
        for a, cells in constraints.items():
            end = determined[a]
            final = vertices[a][-1]
            if any(v == final and t > end for v, t in cells):
                return None

        paths = []
        for a in range(n):
            segs = segments[a]
            if not segs:
                segs = [PathSegment(0, 0, PHASE_IDLE)]
            paths.append(AgentPath(a, tuple(vertices[a]), tuple(segs)))
        return NodePlan(
            paths=tuple(paths),
            g=sum(determined),
            convoy_windows=windows,
            task_members=members_of,
        )

    # -- MDDs --------------------------------------------------------------

    def build_mdd(
        self,
        shape: tuple[Vertex, ...],
        members: tuple[int, ...],
        start_anchor: Vertex,
        goal_anchor: Vertex,
        start_time: int,
        cost: int,
        constraints: ConstraintMap,
    ) -> MDD:
        """Anchors lying on some constrained trajectory of exactly `cost` steps."""
        grid = self.grid
        ok = self.anchor_bitmap(shape)
        ncells = grid.width * grid.height
        blocked = set(
            self._blocked_codes(shape, members, constraints, start_time, cost).tolist()
        )

        def clear(anchor: Vertex, rel: int) -> bool:
            idx = grid.index(anchor)
            return bool(ok[idx]) and (rel * ncells + idx) not in blocked

        if cost < 0 or not clear(start_anchor, 0):
            return MDD(cost, start_time, ())
        forward: list[set[Vertex]] = [{start_anchor}]
        for rel in range(1, cost + 1):
            layer: set[Vertex] = set()
            for (x, y) in forward[rel - 1]:
                for dx, dy in ((0, 0), (1, 0), (-1, 0), (0, 1), (0, -1)):
                    nxt = (x + dx, y + dy)
                    if grid.in_bounds(nxt) and clear(nxt, rel):
                        layer.add(nxt)
            forward.append(layer)
        if goal_anchor not in forward[cost]:
            return MDD(cost, start_time, ())
        levels: list[frozenset[Vertex]] = [frozenset()] * (cost + 1)
        levels[cost] = frozenset({goal_anchor})
        for rel in range(cost - 1, -1, -1):
            keep = set()
            for (x, y) in forward[rel]:
                for dx, dy in ((0, 0), (1, 0), (-1, 0), (0, 1), (0, -1)):
                    if (x + dx, y + dy) in levels[rel + 1]:
                        keep.add((x, y))
                        break
            levels[rel] = frozenset(keep)
        return MDD(cost, start_time, tuple(levels))
