"""Two-level best-first search over task assignments and conflict constraints.

Tree nodes carry a (possibly partial) slot assignment and per-agent vertex
constraints.  A popped node is expanded by conflict resolution when its paths
collide, otherwise by task expansion.  A conflict whose parties are all in
active phases blocks task expansion until resolved; one that involves a
resting agent admits task children as well, because a rester cannot replan
and only a later assignment can move it off the contested cell.  The first
conflict-free node with every slot assigned is an optimal solution for the
chosen expansion strategy.

Expansion strategies over assignments:

  incremental     open one task at a time; fill its lowest open slot with
                  every eligible agent; when no task is open, open any
                  unassigned task by giving some agent slot 0
  incremental-lr  like incremental, but a new task may be opened at any of
                  its k slots (left-right symmetric openings)
  combinatorial   assign whole teams: every ordered k-permutation of agents
                  for every unassigned task

The admissible heuristic sums, per member already committed to the open
task, the Manhattan distance from its slot to its goal cell (the convoy leg
it still owes), plus, per unfilled slot, the cheapest Manhattan approach
from any agent's end location or from another unfinished task's goal cells.
"""

from __future__ import annotations

import heapq
import sys
import time
from dataclasses import dataclass, fields, is_dataclass
from itertools import permutations
from typing import Callable, Optional, Sequence

from . import conflicts
from .conflicts import Conflict
from .domain import (
    Instance,
    SlotRef,
    Solution,
    SolverStats,
    Vertex,
    manhattan,
)
from .planner import NodePlan, Planner

Assignments = tuple[tuple[SlotRef, ...], ...]
ConstraintSets = tuple[frozenset[tuple[Vertex, int]], ...]

EXPANSIONS = ("incremental", "incremental-lr", "combinatorial")
RESOLVERS = ("normal", "asym", "sym", "max1", "max2")


@dataclass
class Limits:
    timeout_s: float = 500.0
    mem_limit_bytes: int = 4 * 1024**3


@dataclass
class SolveResult:
    status: str  # solved | timeout | memout | exhausted | stuck
    solution: Optional[Solution]
    stats: SolverStats

    @property
    def solved(self) -> bool:
        return self.status == "solved"


@dataclass
class CTNode:
    assignments: Assignments
    constraints: ConstraintSets
    plan: NodePlan
    conflict: Optional[Conflict]
    h: int

    @property
    def g(self) -> int:
        return self.plan.g

    @property
    def key(self) -> tuple[Assignments, ConstraintSets]:
        return (self.assignments, self.constraints)


def deep_sizeof(obj: object) -> int:
    """Recursive in-memory footprint with shared-object deduplication."""
    seen: set[int] = set()
    stack = [obj]
    total = 0
    while stack:
        o = stack.pop()
        if id(o) in seen:
            continue
        seen.add(id(o))
        total += sys.getsizeof(o)
        if isinstance(o, dict):
            stack.extend(o.keys())
            stack.extend(o.values())
        elif isinstance(o, (list, tuple, set, frozenset)):
            stack.extend(o)
        elif is_dataclass(o) and not isinstance(o, type):
            stack.extend(getattr(o, f.name) for f in fields(o))
    return total


# ---------------------------------------------------------------------------
# Heuristic
# ---------------------------------------------------------------------------


def _filled_slots(assignments: Assignments) -> set[tuple[int, int]]:
    return {(r.task_id, r.slot) for refs in assignments for r in refs}


def open_task_of(instance: Instance, assignments: Assignments) -> Optional[int]:
    """Id of the single partially assigned task, if any."""
    counts: dict[int, int] = {}
    for refs in assignments:
        for r in refs:
            counts[r.task_id] = counts.get(r.task_id, 0) + 1
    for tid, c in counts.items():
        if c < instance.tasks[tid].k:
            return tid
    return None


def heuristic(instance: Instance, assignments: Assignments, plan: NodePlan) -> int:
    filled = _filled_slots(assignments)
    h = 0
    open_tid = open_task_of(instance, assignments)
    if open_tid is not None:
        task = instance.tasks[open_tid]
        for refs in assignments:
            for r in refs:
                if r.task_id == open_tid:
                    h += manhattan(task.start_config[r.slot], task.goal_config[r.slot])
    unfinished = {
        t.id
        for t in instance.tasks
        if any((t.id, s) not in filled for s in range(t.k))
    }
    end_locs = [p.vertices[-1] for p in plan.paths]
    for tid in unfinished:
        task = instance.tasks[tid]
        for s in range(task.k):
            if (tid, s) in filled:
                continue
            cell = task.start_config[s]
            best: Optional[int] = None
            for loc in end_locs:
                d = manhattan(loc, cell)
                if best is None or d < best:
                    best = d
            for other in unfinished:
                if other == tid:
                    continue
                for g_cell in instance.tasks[other].goal_config:
                    d = manhattan(g_cell, cell)
                    if best is None or d < best:
                        best = d
            if best is not None:
                h += best
    return h


# ---------------------------------------------------------------------------
# Task expansion strategies
# ---------------------------------------------------------------------------

NewTaskFilter = Callable[[Instance, NodePlan, int, int, Sequence[int]], bool]
TaskChoiceFilter = Callable[[Instance, Planner, NodePlan, Sequence[int]], set[int]]


def _with_ref(assignments: Assignments, agent: int, ref: SlotRef) -> Assignments:
    out = list(assignments)
    out[agent] = out[agent] + (ref,)
    return tuple(out)


def expand_assignments(
    instance: Instance,
    planner: Planner,
    assignments: Assignments,
    plan: NodePlan,
    expansion: str,
    new_task_filter: Optional[NewTaskFilter] = None,
    task_choice_filter: Optional[TaskChoiceFilter] = None,
) -> list[Assignments]:
    """Child assignment tuples in a pinned deterministic order."""
    filled = _filled_slots(assignments)
    open_tid = open_task_of(instance, assignments)
    children: list[Assignments] = []

    if open_tid is not None:
        # fill the lowest open slot of the open task
        task = instance.tasks[open_tid]
        slot = min(s for s in range(task.k) if (open_tid, s) not in filled)
        holders = {
            a for a, refs in enumerate(assignments) for r in refs if r.task_id == open_tid
        }
        for a in range(instance.n_agents):
            if a not in holders:
                children.append(_with_ref(assignments, a, SlotRef(open_tid, slot)))
        return children

    unassigned = [
        t.id for t in instance.tasks if all((t.id, s) not in filled for s in range(t.k))
    ]
    if task_choice_filter is not None and unassigned:
        keep = task_choice_filter(instance, planner, plan, unassigned)
        unassigned = [tid for tid in unassigned if tid in keep]

    for tid in unassigned:
        task = instance.tasks[tid]
        if expansion == "combinatorial":
            for team in permutations(range(instance.n_agents), task.k):
                if new_task_filter is not None and any(
                    not new_task_filter(instance, plan, a, tid, unassigned) for a in team
                ):
                    continue
                out = list(assignments)
                for slot, a in enumerate(team):
                    out[a] = out[a] + (SlotRef(tid, slot),)
                children.append(tuple(out))
        else:
            slots = range(task.k) if expansion == "incremental-lr" else (0,)
            for slot in slots:
                for a in range(instance.n_agents):
                    if new_task_filter is not None and not new_task_filter(
                        instance, plan, a, tid, unassigned
                    ):
                        continue
                    children.append(_with_ref(assignments, a, SlotRef(tid, slot)))
    return children


# ---------------------------------------------------------------------------
# Engine
# ---------------------------------------------------------------------------


def _constraints_as_map(constraints: ConstraintSets) -> dict[int, frozenset]:
    return {a: cs for a, cs in enumerate(constraints) if cs}


def _involves_rest(plan: NodePlan, conflict: conflicts.Conflict) -> bool:
    """True when either side of the conflict is a rest-at-final-vertex pad."""
    for entity in (conflict.entity_a, conflict.entity_b):
        if entity.task_id is None:
            agent = entity.members[0]
            if conflict.t > plan.paths[agent].determined_end:
                return True
    return False


def run_search(
    instance: Instance,
    expansion: str = "incremental",
    resolver: str = "sym",
    limits: Optional[Limits] = None,
    new_task_filter: Optional[NewTaskFilter] = None,
    task_choice_filter: Optional[TaskChoiceFilter] = None,
    on_edge: Optional[Callable[[int, int], None]] = None,
) -> SolveResult:
    if expansion not in EXPANSIONS:
        raise ValueError(f"unknown expansion {expansion!r}")
    if resolver not in RESOLVERS:
        raise ValueError(f"unknown resolver {resolver!r}")
    limits = limits or Limits()
    stats = SolverStats()
    started = time.perf_counter()

    def elapsed_ms() -> float:
        return (time.perf_counter() - started) * 1000.0

    def finish(status: str, solution: Optional[Solution] = None) -> SolveResult:
        stats.status = status
        stats.runtime_ms = elapsed_ms()
        if solution is not None:
            solution.stats.__dict__.update(stats.__dict__)
        return SolveResult(status, solution, stats)

    planner = Planner(instance.grid)
    total_slots = instance.total_slots

    root_assignments: Assignments = tuple(() for _ in range(instance.n_agents))
    root_constraints: ConstraintSets = tuple(
        frozenset() for _ in range(instance.n_agents)
    )
    root_plan = planner.cost_so_far(instance, root_assignments, {})
    if root_plan is None:
        return finish("exhausted")
    root = CTNode(
        root_assignments,
        root_constraints,
        root_plan,
        conflicts.detect_first_conflict(instance, root_plan),
        heuristic(instance, root_assignments, root_plan),
    )
    node_footprint = max(1, deep_sizeof(root))
    stats.nodes_generated = 1
    if stats.nodes_generated * node_footprint > limits.mem_limit_bytes:
        return finish("memout")

    seq = 0
    open_heap: list[tuple[int, int, int, CTNode]] = [(root.g + root.h, -root.g, seq, root)]
    closed: set = {root.key}
    stats.peak_open_size = 1

    def push(node: CTNode) -> bool:
        """Queue a child; False signals the memory limit was hit."""
        nonlocal seq
        if stats.nodes_generated * node_footprint > limits.mem_limit_bytes:
            return False
        seq += 1
        heapq.heappush(open_heap, (node.g + node.h, -node.g, seq, node))
        if len(open_heap) > stats.peak_open_size:
            stats.peak_open_size = len(open_heap)
        return True

    def make_child(
        assignments: Assignments, constraints: ConstraintSets
    ) -> Optional[CTNode]:
        """Evaluate a generated state; None when pruned (duplicate or no paths)."""
        key = (assignments, constraints)
        if key in closed:
            stats.duplicates_skipped += 1
            return None
        closed.add(key)
        stats.nodes_generated += 1
        plan = planner.cost_so_far(instance, assignments, _constraints_as_map(constraints))
        if plan is None:
            return None
        child = CTNode(
            assignments,
            constraints,
            plan,
            conflicts.detect_first_conflict(instance, plan),
            heuristic(instance, assignments, plan),
        )
        if on_edge is not None:
            on_edge(node.g, child.g)
        return child

    while open_heap:
        if elapsed_ms() / 1000.0 > limits.timeout_s:
            return finish("timeout")
        _, _, _, node = heapq.heappop(open_heap)
        stats.nodes_popped += 1

        assigned = sum(len(refs) for refs in node.assignments)
        if node.conflict is None and assigned == total_slots:
            solution = Solution(
                assignments=node.assignments,
                paths=node.plan.paths,
                soc=node.g,
                stats=SolverStats(),
            )
            return finish("solved", solution)

        # Conflicts between active entities must be resolved before any
        # assignment grows.  A conflict involving a resting entity also
        # admits task children: the rester cannot replan, so only further
        # assignments (its next duty moves it away) can dissolve the clash.
        expand_tasks = node.conflict is None or _involves_rest(node.plan, node.conflict)
        if node.conflict is not None:
            stats.conflict_expansions += 1
            split = conflicts.resolve(
                resolver,
                node.conflict,
                instance.grid,
                planner,
                instance,
                node.plan,
                _constraints_as_map(node.constraints),
            )
            for side in split:
                extra = frozenset((c.vertex, c.timestep) for c in side.constraints)
                merged = list(node.constraints)
                merged[side.agent_id] = merged[side.agent_id] | extra
                child = make_child(node.assignments, tuple(merged))
                if child is not None and not push(child):
                    return finish("memout")
        if expand_tasks:
            stats.task_expansions += 1
            for assignments in expand_assignments(
                instance,
                planner,
                node.assignments,
                node.plan,
                expansion,
                new_task_filter,
                task_choice_filter,
            ):
                child = make_child(assignments, node.constraints)
                if child is not None and not push(child):
                    return finish("memout")

    return finish("exhausted")


def solve(
    instance: Instance,
    algo: str = "optimal",
    expansion: str = "incremental",
    resolver: str = "sym",
    limits: Optional[Limits] = None,
) -> SolveResult:
    """Entry point shared by the CLI and the benchmark harness."""
    if algo == "optimal":
        return run_search(instance, expansion, resolver, limits)
    from . import subopt

    if algo in ("bt", "wt"):
        return subopt.solve_selector(instance, algo, expansion, resolver, limits)
    if algo in ("nn1", "nn2"):
        return subopt.solve_nearest(instance, int(algo[2]), expansion, resolver, limits)
    if algo == "greedy-pp":
        return subopt.solve_greedy(instance, limits)
    raise ValueError(f"unknown algo {algo!r}")
