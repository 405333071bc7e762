"""Scenario generation: three instance families over random grids.

All randomness flows through the package PRNG seeded by `derive_seed`, with
one substream per phase (map, tasks, agents), so a scenario is a pure
function of its config and every prefix of the task stream is itself a valid
scenario (the benchmark grows instances one task at a time).

Families:

  random          obstacles, tasks, and agents placed uniformly among valid
                  positions
  spatial         task starts drawn toward the top-right corner, goals
                  toward the bottom-left, agents toward the remaining
                  corners, creating a congested central band
  collision-rich  task 0 placed uniformly; every later task's start and goal
                  anchors sit strictly on opposite sides of the bounding box
                  of task 0's unconstrained convoy path, so routes cross it
"""

from __future__ import annotations

from dataclasses import dataclass
from functools import lru_cache
from typing import Mapping, Optional, Sequence

from .domain import (
    AgentSpec,
    DomainError,
    GridMap,
    Instance,
    TaskSpec,
    Vertex,
    validate_placement,
)
from .kernels import grid_distances
from .rng import Xoshiro256StarStar, derive_seed

FAMILIES = ("random", "spatial", "collision-rich")

PLACEMENT_BUDGET = 10_000

_MOVES4 = ((1, 0), (-1, 0), (0, 1), (0, -1))


class GenerationError(Exception):
    """A placement budget ran out or a family constraint cannot be met."""


# ---------------------------------------------------------------------------
# Shapes
# ---------------------------------------------------------------------------


def _canonical(cells: frozenset[Vertex]) -> tuple[Vertex, ...]:
    ordered = sorted(cells)
    ox, oy = ordered[0]
    return tuple((x - ox, y - oy) for x, y in ordered)


@lru_cache(maxsize=None)
def polyominoes(k: int) -> tuple[tuple[Vertex, ...], ...]:
    """All fixed polyominoes with k cells, offsets relative to slot 0.

    Fixed means distinct under translation only; rotations and reflections
    count separately (1, 2, 6, 19 shapes for k = 1..4).  The first offset is
    always (0, 0) and the rest follow in lexicographic order.
    """
    if not 1 <= k <= 4:
        raise DomainError(f"shape sampling supports k in 1..4, got {k}")
    shapes = {((0, 0),)}
    for _ in range(k - 1):
        grown = set()
        for shape in shapes:
            for x, y in shape:
                for dx, dy in _MOVES4:
                    cell = (x + dx, y + dy)
                    if cell not in shape:
                        grown.add(_canonical(frozenset(shape) | {cell}))
        shapes = grown
    return tuple(sorted(shapes))


# ---------------------------------------------------------------------------
# Config
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class ScenarioConfig:
    """Parameters of one generated scenario."""

    family: str
    width: int
    height: int
    obstacle_density: float
    task_type_counts: Mapping[int, int]
    agent_count: int
    seed: int

    def __post_init__(self) -> None:
        if self.family not in FAMILIES:
            raise DomainError(f"unknown family {self.family!r}")
        if self.width < 1 or self.height < 1:
            raise DomainError("grid dimensions must be positive")
        if not 0.0 <= self.obstacle_density < 1.0:
            raise DomainError("obstacle density must lie in [0, 1)")
        counts = dict(self.task_type_counts)
        if not counts or any(c < 0 for c in counts.values()) or sum(counts.values()) == 0:
            raise DomainError("task type counts must include at least one task")
        for k in counts:
            if not 1 <= k <= 4:
                raise DomainError(f"task type k={k} outside supported range 1..4")
        max_k = max(k for k, c in counts.items() if c > 0)
        if self.agent_count < max_k:
            raise DomainError("agent count below the largest team size")
        cells = self.width * self.height
        passable = cells - int(self.obstacle_density * cells)
        slots = sum(k * c for k, c in counts.items())
        if passable < self.agent_count + 2 * slots:
            raise DomainError("density leaves too few passable cells")

    @property
    def total_slots(self) -> int:
        return sum(k * c for k, c in self.task_type_counts.items())


def next_task_type(
    current_counts: Mapping[int, int], target_ratio: Mapping[int, float]
) -> int:
    """Weighted round-robin: the k with the largest share deficit, ties low."""
    total = sum(current_counts.get(k, 0) for k in target_ratio)
    best_k = None
    best_deficit = None
    for k in sorted(target_ratio):
        share = current_counts.get(k, 0) / total if total else 0.0
        deficit = target_ratio[k] - share
        if best_deficit is None or deficit > best_deficit:
            best_k, best_deficit = k, deficit
    assert best_k is not None
    return best_k


def linearize_counts(task_type_counts: Mapping[int, int]) -> tuple[int, ...]:
    """Fixed task-size order for a count table, via the round-robin rule."""
    remaining = {k: c for k, c in task_type_counts.items() if c > 0}
    total = sum(remaining.values())
    ratio = {k: c / total for k, c in remaining.items()}
    counts: dict[int, int] = {k: 0 for k in remaining}
    out = []
    for _ in range(total):
        pick = None
        for k in _deficit_order(counts, ratio):
            if counts[k] < remaining[k]:
                pick = k
                break
        assert pick is not None
        counts[pick] += 1
        out.append(pick)
    return tuple(out)


def _deficit_order(counts: Mapping[int, int], ratio: Mapping[int, float]) -> list[int]:
    total = sum(counts.values())
    def deficit(k: int) -> float:
        share = counts[k] / total if total else 0.0
        return ratio[k] - share
    return sorted(ratio, key=lambda k: (-deficit(k), k))


# ---------------------------------------------------------------------------
# Stream generation
# ---------------------------------------------------------------------------


def _generate_map(rng: Xoshiro256StarStar, width: int, height: int, density: float) -> GridMap:
    cells = [(x, y) for y in range(height) for x in range(width)]
    n_blocked = int(density * len(cells))
    blocked = frozenset(rng.sample(cells, n_blocked)) if n_blocked else frozenset()
    return GridMap(width, height, blocked)


class _TaskSampler:
    """Places one task after another, tracking goal-cell disjointness."""

    def __init__(self, grid: GridMap, family: str, rng: Xoshiro256StarStar):
        self.grid = grid
        self.family = family
        self.rng = rng
        self.goal_cells: set[Vertex] = set()
        self.reference_box: Optional[tuple[int, int, int, int]] = None
        self._anchor_ok: dict[tuple[Vertex, ...], bytes] = {}
        self._cells = [
            (x, y) for y in range(grid.height) for x in range(grid.width)
        ]

    def _bitmap(self, shape: tuple[Vertex, ...]) -> bytes:
        bm = self._anchor_ok.get(shape)
        if bm is None:
            out = bytearray(self.grid.width * self.grid.height)
            for cell in self._cells:
                if validate_placement(self.grid, shape, cell):
                    out[self.grid.index(cell)] = 1
            bm = bytes(out)
            self._anchor_ok[shape] = bm
        return bm

    def _reachable(self, shape: tuple[Vertex, ...], start: Vertex, goal: Vertex) -> bool:
        dist = grid_distances(
            self._bitmap(shape),
            self.grid.width,
            self.grid.height,
            self.grid.index(start),
        )
        return dist[self.grid.index(goal)] >= 0

    def _goal_ok(self, shape: tuple[Vertex, ...], anchor: Vertex) -> bool:
        cells = [(anchor[0] + dx, anchor[1] + dy) for dx, dy in shape]
        return not any(c in self.goal_cells for c in cells)

    def _draw_cell(self, weighted: Optional[Sequence[int]] = None) -> Vertex:
        if weighted is None:
            return self._cells[self.rng.randrange(len(self._cells))]
        return self._cells[self.rng.weighted_index(weighted)]

    def _start_weights(self) -> list[int]:
        return [1 + x + y for x, y in self._cells]

    def _goal_weights(self) -> list[int]:
        w, h = self.grid.width, self.grid.height
        return [1 + (w - 1 - x) + (h - 1 - y) for x, y in self._cells]

    def sample(self, tid: int, k: int) -> TaskSpec:
        shapes = polyominoes(k)
        if self.family == "collision-rich" and tid == 0:
            task = self._sample_reference(k, shapes)
        elif self.family == "collision-rich":
            task = self._sample_crossing(tid, k, shapes)
        else:
            task = self._sample_plain(tid, k, shapes)
        self.goal_cells.update(task.goal_config)
        return task

    def _usable_box(self, box: tuple[int, int, int, int]) -> bool:
        """Some axis must keep cells strictly on both sides of the box."""
        xmin, ymin, xmax, ymax = box
        return (xmin > 0 and xmax < self.grid.width - 1) or (
            ymin > 0 and ymax < self.grid.height - 1
        )

    def _sample_reference(self, k: int, shapes) -> TaskSpec:
        for _ in range(200):
            task = self._sample_plain(0, k, shapes)
            box = self._path_box(task)
            if self._usable_box(box):
                self.reference_box = box
                return task
        raise GenerationError("task 0: every reference path pins the grid edge")

    def _sample_plain(self, tid: int, k: int, shapes) -> TaskSpec:
        spatial = self.family == "spatial"
        sw = self._start_weights() if spatial else None
        gw = self._goal_weights() if spatial else None
        for _ in range(PLACEMENT_BUDGET):
            shape = shapes[self.rng.randrange(len(shapes))]
            start = self._draw_cell(sw)
            if not validate_placement(self.grid, shape, start):
                continue
            goal = self._draw_cell(gw)
            if not validate_placement(self.grid, shape, goal):
                continue
            if not self._goal_ok(shape, goal):
                continue
            if not self._reachable(shape, start, goal):
                continue
            return _task_from_anchors(tid, shape, start, goal)
        raise GenerationError(f"task {tid}: placement budget exhausted")

    def _path_box(self, task: TaskSpec) -> tuple[int, int, int, int]:
        """Bounding box of the footprint of one unconstrained convoy path."""
        grid = self.grid
        bm = self._bitmap(task.shape)
        dist = grid_distances(bm, grid.width, grid.height, grid.index(task.start_anchor))
        cur = task.goal_anchor
        anchors = [cur]
        while cur != task.start_anchor:
            d = dist[grid.index(cur)]
            for dx, dy in _MOVES4:
                nxt = (cur[0] + dx, cur[1] + dy)
                if (
                    grid.in_bounds(nxt)
                    and bm[grid.index(nxt)]
                    and dist[grid.index(nxt)] == d - 1
                ):
                    cur = nxt
                    break
            else:  # cannot happen: reachability was checked at placement
                raise AssertionError("broken distance field")
            anchors.append(cur)
        xs = [a[0] + dx for a in anchors for dx, dy in task.shape]
        ys = [a[1] + dy for a in anchors for dx, dy in task.shape]
        return (min(xs), min(ys), max(xs), max(ys))

    def _sample_crossing(self, tid: int, k: int, shapes) -> TaskSpec:
        assert self.reference_box is not None
        xmin, ymin, xmax, ymax = self.reference_box
        axis_first = "x" if tid % 2 == 1 else "y"
        axes = (axis_first, "x" if axis_first == "y" else "y")
        budget = PLACEMENT_BUDGET // 4
        for axis in axes:
            for flip in (False, True):
                lo, hi = (xmin, xmax) if axis == "x" else (ymin, ymax)
                coord = 0 if axis == "x" else 1
                below = [c for c in self._cells if c[coord] < lo]
                above = [c for c in self._cells if c[coord] > hi]
                start_side, goal_side = (above, below) if flip else (below, above)
                if not start_side or not goal_side:
                    continue
                for _ in range(budget):
                    shape = shapes[self.rng.randrange(len(shapes))]
                    start = start_side[self.rng.randrange(len(start_side))]
                    if not validate_placement(self.grid, shape, start):
                        continue
                    goal = goal_side[self.rng.randrange(len(goal_side))]
                    if not validate_placement(self.grid, shape, goal):
                        continue
                    if not self._goal_ok(shape, goal):
                        continue
                    if not self._reachable(shape, start, goal):
                        continue
                    return _task_from_anchors(tid, shape, start, goal)
        raise GenerationError(
            f"task {tid}: no opposite-side placement around {self.reference_box}"
        )


def _task_from_anchors(
    tid: int, shape: tuple[Vertex, ...], start: Vertex, goal: Vertex
) -> TaskSpec:
    starts = [(start[0] + dx, start[1] + dy) for dx, dy in shape]
    goals = [(goal[0] + dx, goal[1] + dy) for dx, dy in shape]
    return TaskSpec.from_configs(tid, starts, goals)


def _generate_agents(
    rng: Xoshiro256StarStar,
    grid: GridMap,
    family: str,
    count: int,
    forbidden: set[Vertex],
) -> tuple[AgentSpec, ...]:
    cells = [(x, y) for y in range(grid.height) for x in range(grid.width)]
    weights = None
    if family == "spatial":
        h, w = grid.height, grid.width
        weights = [1 + abs(x * (h - 1) - y * (w - 1)) for x, y in cells]
    taken: set[Vertex] = set()
    agents = []
    for aid in range(count):
        for _ in range(PLACEMENT_BUDGET):
            if weights is None:
                cell = cells[rng.randrange(len(cells))]
            else:
                cell = cells[rng.weighted_index(weights)]
            if grid.passable(cell) and cell not in forbidden and cell not in taken:
                taken.add(cell)
                agents.append(AgentSpec(aid, cell))
                break
        else:
            raise GenerationError(f"agent {aid}: placement budget exhausted")
    return tuple(agents)


@dataclass(frozen=True)
class ScenarioStream:
    """A full generated sequence of tasks and agents over one map.

    Instances taken from prefixes share the map, the first tasks, and the
    first agents, which is what the incremental benchmark protocol needs.
    """

    grid: GridMap
    tasks: tuple[TaskSpec, ...]
    agents: tuple[AgentSpec, ...]

    def prefix(self, n_tasks: int, task_agent_ratio: Optional[float] = None) -> Instance:
        tasks = self.tasks[:n_tasks]
        if not tasks:
            raise DomainError("prefix needs at least one task")
        max_k = max(t.k for t in tasks)
        if task_agent_ratio is None:
            count = len(self.agents)
        else:
            slots = sum(t.k for t in tasks)
            count = round(slots * task_agent_ratio)
        count = max(max_k, min(count, len(self.agents)))
        return Instance(self.grid, self.agents[:count], tasks)


def generate_stream(
    family: str,
    width: int,
    height: int,
    obstacle_density: float,
    task_sizes: Sequence[int],
    agent_count: int,
    seed: int,
) -> ScenarioStream:
    """Generate map, then every task in order, then every agent."""
    if family not in FAMILIES:
        raise DomainError(f"unknown family {family!r}")
    map_rng = Xoshiro256StarStar(derive_seed(seed, 1))
    grid = _generate_map(map_rng, width, height, obstacle_density)
    task_rng = Xoshiro256StarStar(derive_seed(seed, 2))
    sampler = _TaskSampler(grid, family, task_rng)
    tasks = tuple(sampler.sample(tid, k) for tid, k in enumerate(task_sizes))
    agent_rng = Xoshiro256StarStar(derive_seed(seed, 3))
    agents = _generate_agents(agent_rng, grid, family, agent_count, sampler.goal_cells)
    return ScenarioStream(grid, tasks, agents)


def generate(config: ScenarioConfig) -> Instance:
    """One complete instance for a scenario config."""
    stream = generate_stream(
        config.family,
        config.width,
        config.height,
        config.obstacle_density,
        linearize_counts(config.task_type_counts),
        config.agent_count,
        config.seed,
    )
    return Instance(stream.grid, stream.agents, stream.tasks)
