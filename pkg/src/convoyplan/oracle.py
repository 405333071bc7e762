"""Exhaustive ground-truth solver and independent solution validator.

Shares no planning code with the production solvers: distances come from a
local BFS, conflicts and costs are recomputed from first principles.  Meant
for desk-scale instances only; the state bound makes the limit explicit.
"""

from __future__ import annotations

import heapq
import itertools
from collections import deque
from dataclasses import dataclass
from typing import Iterator, Optional

from .domain import (
    PHASE_ASSEMBLY,
    PHASE_CONVOY,
    AgentPath,
    GridMap,
    Instance,
    PathSegment,
    SlotRef,
    Solution,
    SolverStats,
    TaskSpec,
    Vertex,
    footprint,
    solution_cost,
    validate_placement,
)

PENDING, ACTIVE, DONE = 0, 1, 2

_MOVES = ((0, 0), (1, 0), (-1, 0), (0, 1), (0, -1))


class OracleBoundExceeded(Exception):
    """The joint state space outgrew the configured exploration bound."""


# ---------------------------------------------------------------------------
# Local breadth-first distances (independent of the solver kernels)
# ---------------------------------------------------------------------------


def _cell_distances(grid: GridMap, target: Vertex) -> dict[Vertex, int]:
    dist = {target: 0}
    queue = deque((target,))
    while queue:
        x, y = queue.popleft()
        base = dist[(x, y)]
        for dx, dy in _MOVES[1:]:
            nxt = (x + dx, y + dy)
            if nxt not in dist and grid.passable(nxt):
                dist[nxt] = base + 1
                queue.append(nxt)
    return dist


def _anchor_distances(
    grid: GridMap, shape: tuple[Vertex, ...], target: Vertex
) -> dict[Vertex, int]:
    """BFS over anchors at which the whole shape fits, from the goal anchor."""
    if not validate_placement(grid, shape, target):
        return {}
    dist = {target: 0}
    queue = deque((target,))
    while queue:
        x, y = queue.popleft()
        base = dist[(x, y)]
        for dx, dy in _MOVES[1:]:
            nxt = (x + dx, y + dy)
            if nxt not in dist and validate_placement(grid, shape, nxt):
                dist[nxt] = base + 1
                queue.append(nxt)
    return dist


# ---------------------------------------------------------------------------
# Assignment profiles
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class _Profile:
    """One complete slot assignment plus a task execution order per agent."""

    members: tuple[tuple[int, ...], ...]  # per task, agent per slot
    orders: tuple[tuple[int, ...], ...]  # per agent, its tasks in order


def _profiles(instance: Instance, cap: int) -> Iterator[_Profile]:
    agent_ids = range(instance.n_agents)
    per_task = [
        list(itertools.permutations(agent_ids, task.k)) for task in instance.tasks
    ]
    for members in itertools.product(*per_task):
        loads: dict[int, list[int]] = {}
        for tid, team in enumerate(members):
            for a in team:
                loads.setdefault(a, []).append(tid)
        if any(len(ts) > cap for ts in loads.values()):
            continue
        per_agent = [
            list(itertools.permutations(loads.get(a, ()))) for a in agent_ids
        ]
        for orders in itertools.product(*per_agent):
            yield _Profile(tuple(members), tuple(orders))


# ---------------------------------------------------------------------------
# Joint-state search for a fixed profile
# ---------------------------------------------------------------------------


class _ProfileSearch:
    """Best-first search over joint agent states for one assignment profile."""

    def __init__(self, instance: Instance, profile: _Profile, tables: "_Tables"):
        self.instance = instance
        self.profile = profile
        self.tables = tables
        self.slot_cell = {}
        self.offset = {}
        self.team_slots: list[tuple[tuple[int, Vertex], ...]] = []
        for tid, team in enumerate(profile.members):
            task = instance.tasks[tid]
            for slot, a in enumerate(team):
                self.slot_cell[a, tid] = (
                    task.start_anchor[0] + task.shape[slot][0],
                    task.start_anchor[1] + task.shape[slot][1],
                )
                self.offset[a, tid] = task.shape[slot]
            self.team_slots.append(
                tuple((a, self.slot_cell[a, tid]) for a in team)
            )
        self._groups_cache: dict[tuple[int, ...], tuple] = {}
        self._convoy_cache: dict[tuple[int, Vertex], tuple] = {}
        # state-independent chain tails: cost after the first remaining duty
        self.suffix = {}
        self.feasible = True
        for a, order in enumerate(profile.orders):
            tail = 0
            self.suffix[a, len(order)] = 0
            for i in range(len(order) - 1, -1, -1):
                tid = order[i]
                task = instance.tasks[tid]
                exec_lb = tables.anchor(tid).get(task.start_anchor)
                if exec_lb is None:
                    self.feasible = False
                    break
                if i + 1 < len(order):
                    nxt = order[i + 1]
                    here = (
                        task.goal_anchor[0] + self.offset[a, tid][0],
                        task.goal_anchor[1] + self.offset[a, tid][1],
                    )
                    hop = tables.cell(self.slot_cell[a, nxt]).get(here)
                    if hop is None:
                        self.feasible = False
                        break
                    tail += hop
                tail += exec_lb
                self.suffix[a, i] = tail
            if not self.feasible:
                break

    def duty_index(self, agent: int, status: tuple[int, ...]) -> int:
        order = self.profile.orders[agent]
        for i, tid in enumerate(order):
            if status[tid] != DONE:
                return i
        return len(order)

    def normalize(
        self, positions: tuple[Vertex, ...], status: tuple[int, ...]
    ) -> tuple[int, ...]:
        """Apply forced formation and dissolution until a fixpoint."""
        st = list(status)
        changed = True
        while changed:
            changed = False
            for tid, team in enumerate(self.profile.members):
                if st[tid] == PENDING:
                    ready = all(
                        self._current_duty(a, st) == tid
                        and positions[a] == self.slot_cell[a, tid]
                        for a in team
                    )
                    if ready:
                        st[tid] = ACTIVE
                        changed = True
                if st[tid] == ACTIVE:
                    anchor = positions[team[0]]
                    if anchor == self.instance.tasks[tid].goal_anchor:
                        st[tid] = DONE
                        changed = True
        return tuple(st)

    def _current_duty(self, agent: int, st: list[int]) -> Optional[int]:
        for tid in self.profile.orders[agent]:
            if st[tid] != DONE:
                return tid
        return None

    def busy(self, status: tuple[int, ...]) -> int:
        return sum(
            1
            for a, order in enumerate(self.profile.orders)
            if any(status[tid] != DONE for tid in order)
        )

    def h(self, positions: tuple[Vertex, ...], status: tuple[int, ...]) -> Optional[int]:
        total = 0
        for a, order in enumerate(self.profile.orders):
            i = self.duty_index(a, status)
            if i == len(order):
                continue
            tid = order[i]
            task = self.instance.tasks[tid]
            if status[tid] == ACTIVE:
                off = self.offset[a, tid]
                anchor = (positions[a][0] - off[0], positions[a][1] - off[1])
                step = self.tables.anchor(tid).get(anchor)
            else:
                # the convoy waits for its slowest member, so every member's
                # completion is bounded below by the whole team's worst
                # distance-to-slot, not just its own
                arrival = 0
                for mb, cell in self.team_slots[tid]:
                    hop = self.tables.cell(cell).get(positions[mb])
                    if hop is None:
                        return None
                    if hop > arrival:
                        arrival = hop
                exec_lb = self.tables.anchor(tid).get(task.start_anchor)
                step = None if exec_lb is None else arrival + exec_lb
            if step is None:
                return None
            total += step + self.suffix[a, i + 1]
        return total

    def _groups(
        self, status: tuple[int, ...]
    ) -> tuple[tuple[int, ...], tuple[int, ...]]:
        """(active task ids, free agent ids) for a status; memoized."""
        cached = self._groups_cache.get(status)
        if cached is not None:
            return cached
        convoys: list[int] = []
        free: list[int] = []
        for a, order in enumerate(self.profile.orders):
            duty = None
            for tid in order:
                if status[tid] != DONE:
                    duty = tid
                    break
            if duty is None:
                continue
            if status[duty] == ACTIVE:
                if duty not in convoys:
                    convoys.append(duty)
            else:
                free.append(a)
        out = (tuple(convoys), tuple(free))
        self._groups_cache[status] = out
        return out

    def _convoy_moves(self, tid: int, anchor: Vertex) -> tuple:
        """Member placements for each legal anchor step of an active convoy."""
        cached = self._convoy_cache.get((tid, anchor))
        if cached is not None:
            return cached
        team = self.profile.members[tid]
        task = self.instance.tasks[tid]
        reachable = self.tables.anchor(tid)
        moves = []
        for dx, dy in _MOVES:
            nxt = (anchor[0] + dx, anchor[1] + dy)
            if nxt in reachable:
                moves.append(
                    tuple(
                        (a, (nxt[0] + task.shape[s][0], nxt[1] + task.shape[s][1]))
                        for s, a in enumerate(team)
                    )
                )
        out = tuple(moves)
        self._convoy_cache[(tid, anchor)] = out
        return out

    def successors(
        self, positions: tuple[Vertex, ...], status: tuple[int, ...]
    ) -> Iterator[tuple[tuple[Vertex, ...], tuple[int, ...]]]:
        convoys, free = self._groups(status)
        nbrs = self.tables.neighbours
        options: list[tuple] = []
        for tid in convoys:
            team0 = self.profile.members[tid][0]
            off0 = self.offset[team0, tid]
            anchor = (positions[team0][0] - off0[0], positions[team0][1] - off0[1])
            options.append(self._convoy_moves(tid, anchor))
        for a in free:
            options.append(tuple(((a, c),) for c in nbrs(positions[a])))

        n = len(positions)
        for combo in itertools.product(*options):
            nxt = list(positions)
            for part in combo:
                for a, cell in part:
                    nxt[a] = cell
            if len(set(nxt)) != n:
                continue
            pos = tuple(nxt)
            yield pos, self.normalize(pos, status)


@dataclass
class _Tables:
    """Memoized BFS distance tables shared across profiles."""

    instance: Instance

    def __post_init__(self) -> None:
        self._cell: dict[Vertex, dict[Vertex, int]] = {}
        self._anchor: dict[int, dict[Vertex, int]] = {}
        self._nbrs: dict[Vertex, tuple[Vertex, ...]] = {}

    def neighbours(self, cell: Vertex) -> tuple[Vertex, ...]:
        """Stay plus passable 4-neighbours; memoized."""
        cached = self._nbrs.get(cell)
        if cached is None:
            grid = self.instance.grid
            cached = tuple(
                (cell[0] + dx, cell[1] + dy)
                for dx, dy in _MOVES
                if grid.passable((cell[0] + dx, cell[1] + dy))
            )
            self._nbrs[cell] = cached
        return cached

    def cell(self, target: Vertex) -> dict[Vertex, int]:
        if target not in self._cell:
            self._cell[target] = _cell_distances(self.instance.grid, target)
        return self._cell[target]

    def anchor(self, tid: int) -> dict[Vertex, int]:
        if tid not in self._anchor:
            task = self.instance.tasks[tid]
            self._anchor[tid] = _anchor_distances(
                self.instance.grid, task.shape, task.goal_anchor
            )
        return self._anchor[tid]


# ---------------------------------------------------------------------------
# Public API
# ---------------------------------------------------------------------------


def exhaustive_optimal(
    instance: Instance,
    assignment_cap: int = 2,
    state_bound: int = 10_000_000,
    mode: str = "astar",
) -> Optional[Solution]:
    """Globally minimal sum-of-costs by enumeration, or None when infeasible.

    Enumerates every complete slot assignment (task chains per agent up to
    `assignment_cap`) and solves each with a best-first search over the joint
    state graph.  `mode` selects the heuristic ("astar") or none ("ucs");
    both return the same cost.  Raises OracleBoundExceeded when the total
    number of generated joint states exceeds `state_bound`.
    """
    if mode not in ("astar", "ucs"):
        raise ValueError(f"unknown oracle mode: {mode!r}")
    tables = _Tables(instance)
    starts = tuple(a.start for a in instance.agents)
    best_soc: Optional[int] = None
    best: Optional[tuple[_Profile, list[tuple[tuple[Vertex, ...], tuple[int, ...]]]]] = None
    budget = [state_bound]

    # Rank profiles by their admissible root bound so the most promising one
    # sets the incumbent; the sorted order lets the loop stop at the first
    # bound that cannot improve on it.
    candidates = []
    for idx, profile in enumerate(_profiles(instance, assignment_cap)):
        search = _ProfileSearch(instance, profile, tables)
        if not search.feasible:
            continue
        status0 = search.normalize(starts, (PENDING,) * len(instance.tasks))
        h0 = search.h(starts, status0)
        if h0 is not None:
            candidates.append((h0, idx, search, status0))
    candidates.sort(key=lambda c: (c[0], c[1]))

    for h0, _, search, status0 in candidates:
        if best_soc is not None and h0 >= best_soc:
            break
        result = _solve_profile(search, starts, status0, mode, best_soc, budget)
        if result is not None:
            soc, chain = result
            if best_soc is None or soc < best_soc:
                best_soc = soc
                best = (search.profile, chain)
    if best is None:
        return None
    return _reconstruct(instance, best[0], best[1], best_soc)


def _solve_profile(
    search: _ProfileSearch,
    starts: tuple[Vertex, ...],
    status0: tuple[int, ...],
    mode: str,
    incumbent: Optional[int],
    budget: list[int],
) -> Optional[tuple[int, list[tuple[tuple[Vertex, ...], tuple[int, ...]]]]]:
    """Best-first search for one profile; returns (soc, state chain)."""
    n_tasks = len(search.instance.tasks)
    goal = (DONE,) * n_tasks
    start_state = (starts, status0)
    if status0 == goal:
        return 0, [start_state]

    use_h = mode == "astar"
    g_of = {start_state: 0}
    parent: dict = {start_state: None}
    counter = itertools.count()
    h0 = search.h(starts, status0) if use_h else 0
    open_heap = [(h0, next(counter), 0, start_state)]
    while open_heap:
        _, _, g, state = heapq.heappop(open_heap)
        if g != g_of[state]:
            continue
        positions, status = state
        if status == goal:
            chain = []
            cur: Optional[tuple] = state
            while cur is not None:
                chain.append(cur)
                cur = parent[cur]
            chain.reverse()
            return g, chain
        step_cost = search.busy(status)
        for child in search.successors(positions, status):
            child_g = g + step_cost
            old = g_of.get(child)
            if old is not None and old <= child_g:
                continue
            if incumbent is not None and child_g >= incumbent:
                continue
            budget[0] -= 1
            if budget[0] < 0:
                raise OracleBoundExceeded("joint state bound exhausted")
            ch = search.h(*child) if use_h else 0
            if ch is None:
                continue
            if incumbent is not None and child_g + ch >= incumbent:
                continue
            g_of[child] = child_g
            parent[child] = state
            heapq.heappush(open_heap, (child_g + ch, next(counter), child_g, child))
    return None


def _reconstruct(
    instance: Instance,
    profile: _Profile,
    chain: list[tuple[tuple[Vertex, ...], tuple[int, ...]]],
    soc: int,
) -> Solution:
    """Turn the winning joint-state chain into a per-agent Solution."""
    formed = {}
    done = {}
    for t, (_, status) in enumerate(chain):
        for tid, st in enumerate(status):
            if st == ACTIVE and tid not in formed:
                formed[tid] = t
            if st == DONE and tid not in done:
                done[tid] = t
                formed.setdefault(tid, t)

    assignments = []
    paths = []
    for a in range(instance.n_agents):
        refs = []
        segments = []
        prev_end = 0
        for tid in profile.orders[a]:
            task = instance.tasks[tid]
            slot = profile.members[tid].index(a)
            refs.append(SlotRef(tid, slot))
            t_sync, t_done = formed[tid], done[tid]
            slot_cell = (
                task.start_anchor[0] + task.shape[slot][0],
                task.start_anchor[1] + task.shape[slot][1],
            )
            arrival = t_sync
            while arrival > prev_end and chain[arrival - 1][0][a] == slot_cell:
                arrival -= 1
            segments.append(
                PathSegment(prev_end, t_sync, PHASE_ASSEMBLY, tid, slot, arrival)
            )
            segments.append(PathSegment(t_sync, t_done, PHASE_CONVOY, tid, slot))
            prev_end = t_done
        vertices = tuple(chain[t][0][a] for t in range(prev_end + 1))
        assignments.append(tuple(refs))
        paths.append(AgentPath(a, vertices, tuple(segments)))

    stats = SolverStats(status="solved")
    return Solution(tuple(assignments), tuple(paths), soc, stats)


# ---------------------------------------------------------------------------
# Independent validator
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class Violation:
    kind: str
    agent_id: Optional[int]
    t: Optional[int]
    detail: str


def validate(instance: Instance, solution: Solution) -> list[Violation]:
    """All rule violations in `solution`; an empty list means it is valid.

    Checks structure, slot coverage, assembly continuity, convoy rigidity and
    synchronization, goal arrival, padded vertex conflicts, and the sum of
    costs, using only domain arithmetic.
    """
    out: list[Violation] = []
    grid = instance.grid
    n = instance.n_agents

    if len(solution.paths) != n or len(solution.assignments) != n:
        out.append(
            Violation(
                "structure", None, None,
                f"expected {n} paths/assignment rows, got "
                f"{len(solution.paths)}/{len(solution.assignments)}",
            )
        )
        return out

    for a, path in enumerate(solution.paths):
        if path.agent_id != a:
            out.append(Violation("structure", a, None, "agent id mismatch"))
        if not path.vertices:
            out.append(Violation("structure", a, None, "empty path"))
            continue
        if path.vertices[0] != instance.agents[a].start:
            out.append(
                Violation(
                    "structure", a, 0,
                    f"path starts at {path.vertices[0]}, agent starts at "
                    f"{instance.agents[a].start}",
                )
            )
        for t, v in enumerate(path.vertices):
            if not grid.passable(v):
                out.append(Violation("structure", a, t, f"impassable vertex {v}"))
        for t in range(1, len(path.vertices)):
            (x0, y0), (x1, y1) = path.vertices[t - 1], path.vertices[t]
            if abs(x1 - x0) + abs(y1 - y0) > 1:
                out.append(
                    Violation("structure", a, t, f"non-adjacent step {x0, y0}->{x1, y1}")
                )
    if any(not p.vertices for p in solution.paths):
        # positions are undefined, nothing further can be checked
        return out

    # slot coverage from the assignment rows
    seen: dict[tuple[int, int], int] = {}
    for a, refs in enumerate(solution.assignments):
        for ref in refs:
            key = (ref.task_id, ref.slot)
            if key in seen:
                out.append(
                    Violation(
                        "coverage", a, None,
                        f"slot {key} assigned to both agent {seen[key]} and {a}",
                    )
                )
            seen[key] = a
    for task in instance.tasks:
        for slot in range(task.k):
            if (task.id, slot) not in seen:
                out.append(
                    Violation(
                        "coverage", None, None,
                        f"slot (task {task.id}, {slot}) unassigned",
                    )
                )
    if any(v.kind == "coverage" for v in out):
        return out

    def pos(a: int, t: int) -> Vertex:
        return solution.paths[a].at(t)

    # per-task assembly, rigidity, synchronization, goal arrival
    for task in instance.tasks:
        tid = task.id
        members = [seen[(tid, slot)] for slot in range(task.k)]
        windows = []
        for slot, a in enumerate(members):
            conv = [
                s for s in solution.paths[a].segments
                if s.phase == PHASE_CONVOY and s.task_id == tid
            ]
            if len(conv) != 1:
                out.append(
                    Violation(
                        "segments", a, None,
                        f"agent {a} has {len(conv)} convoy segments for task {tid}",
                    )
                )
                continue
            windows.append((slot, a, conv[0]))
        if len(windows) != task.k:
            continue
        sync_ts = {seg.start_t for _, _, seg in windows}
        done_ts = {seg.end_t for _, _, seg in windows}
        if len(sync_ts) != 1 or len(done_ts) != 1:
            out.append(
                Violation(
                    "sync", None, None,
                    f"task {tid} convoy windows disagree: {sorted(sync_ts)} / "
                    f"{sorted(done_ts)}",
                )
            )
            continue
        t_sync, t_done = sync_ts.pop(), done_ts.pop()
        for slot, a, seg in windows:
            slot_cell = (
                task.start_anchor[0] + task.shape[slot][0],
                task.start_anchor[1] + task.shape[slot][1],
            )
            asm = [
                s for s in solution.paths[a].segments
                if s.phase == PHASE_ASSEMBLY and s.task_id == tid
            ]
            arrival = asm[0].arrival if asm and asm[0].arrival is not None else t_sync
            for t in range(arrival, t_sync + 1):
                if pos(a, t) != slot_cell:
                    out.append(
                        Violation(
                            "assembly", a, t,
                            f"member off slot {slot_cell} before sync of task {tid}",
                        )
                    )
                    break
        anchor_holder = seen[(tid, 0)]
        for t in range(t_sync, t_done + 1):
            anchor = pos(anchor_holder, t)
            for slot, a, _ in windows:
                want = (anchor[0] + task.shape[slot][0], anchor[1] + task.shape[slot][1])
                if pos(a, t) != want:
                    out.append(
                        Violation(
                            "rigidity", a, t,
                            f"member at {pos(a, t)}, convoy shape needs {want}",
                        )
                    )
        if pos(anchor_holder, t_done) != task.goal_anchor:
            out.append(
                Violation(
                    "goal", anchor_holder, t_done,
                    f"task {tid} convoy ends at {pos(anchor_holder, t_done)}, "
                    f"goal anchor is {task.goal_anchor}",
                )
            )

    # padded vertex conflicts
    horizon = max(len(p.vertices) - 1 for p in solution.paths)
    for t in range(horizon + 1):
        occupied: dict[Vertex, int] = {}
        for a in range(n):
            cell = pos(a, t)
            if cell in occupied:
                out.append(
                    Violation(
                        "vertex-conflict", a, t,
                        f"agents {occupied[cell]} and {a} both at {cell}",
                    )
                )
            else:
                occupied[cell] = a
    recomputed = solution_cost(solution.paths)
    if recomputed != solution.soc:
        out.append(
            Violation(
                "soc", None, None,
                f"declared soc {solution.soc} != recomputed {recomputed}",
            )
        )
    return out
