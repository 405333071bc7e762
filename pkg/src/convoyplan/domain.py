"""Core problem types: grids, agents, tasks, paths, solutions.

Coordinates are (x, y) with x growing rightwards and y growing upwards;
cell (0, 0) is the bottom-left corner.  Agents occupy one cell and move in
unit steps (stay or one of the four cardinal directions).  A task with k
slots is carried by a convoy of k agents that moves as a rigid unit: every
member keeps its fixed offset from the slot-0 agent (the anchor).
"""

from __future__ import annotations

from dataclasses import dataclass, field
from functools import cached_property
from typing import Iterable, Optional

Vertex = tuple[int, int]

MOVES: tuple[Vertex, ...] = ((0, 0), (1, 0), (-1, 0), (0, 1), (0, -1))


class DomainError(ValueError):
    """Raised when a grid, task, or instance violates a structural rule."""


def manhattan(a: Vertex, b: Vertex) -> int:
    return abs(a[0] - b[0]) + abs(a[1] - b[1])


# ---------------------------------------------------------------------------
# Grid
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class GridMap:
    """Rectangular grid with a set of blocked cells."""

    width: int
    height: int
    blocked: frozenset[Vertex] = frozenset()

    def __post_init__(self) -> None:
        if self.width < 1 or self.height < 1:
            raise DomainError("grid dimensions must be positive")
        for v in self.blocked:
            if not self.in_bounds(v):
                raise DomainError(f"blocked cell {v} outside {self.width}x{self.height} grid")

    def in_bounds(self, v: Vertex) -> bool:
        return 0 <= v[0] < self.width and 0 <= v[1] < self.height

    def passable(self, v: Vertex) -> bool:
        return self.in_bounds(v) and v not in self.blocked

    @cached_property
    def passable_count(self) -> int:
        return self.width * self.height - len(self.blocked)

    def index(self, v: Vertex) -> int:
        return v[1] * self.width + v[0]

    def vertex(self, idx: int) -> Vertex:
        return (idx % self.width, idx // self.width)

    @cached_property
    def passable_bitmap(self) -> bytes:
        """width*height bytes, 1 where the cell is passable."""
        bits = bytearray(self.width * self.height)
        for y in range(self.height):
            for x in range(self.width):
                if (x, y) not in self.blocked:
                    bits[y * self.width + x] = 1
        return bytes(bits)


# ---------------------------------------------------------------------------
# Agents and tasks
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class AgentSpec:
    id: int
    start: Vertex


def _offsets_connected(offsets: Iterable[Vertex]) -> bool:
    cells = set(offsets)
    if not cells:
        return False
    seen = {next(iter(cells))}
    frontier = list(seen)
    while frontier:
        x, y = frontier.pop()
        for dx, dy in MOVES[1:]:
            n = (x + dx, y + dy)
            if n in cells and n not in seen:
                seen.add(n)
                frontier.append(n)
    return len(seen) == len(cells)


@dataclass(frozen=True)
class TaskSpec:
    """A transport task: k slot cells at the start, k target cells at the goal.

    shape[i] is the offset of slot i from slot 0, so shape[0] == (0, 0) and
    goal_config must be a pure translation of start_config.
    """

    id: int
    k: int
    start_config: tuple[Vertex, ...]
    goal_config: tuple[Vertex, ...]
    shape: tuple[Vertex, ...]

    def __post_init__(self) -> None:
        if self.k < 1:
            raise DomainError(f"task {self.id}: k must be >= 1")
        if len(self.start_config) != self.k or len(self.goal_config) != self.k:
            raise DomainError(f"task {self.id}: config length != k")
        if len(set(self.start_config)) != self.k or len(set(self.goal_config)) != self.k:
            raise DomainError(f"task {self.id}: duplicate cells in a configuration")
        if len(self.shape) != self.k or self.shape[0] != (0, 0):
            raise DomainError(f"task {self.id}: shape must have k offsets with shape[0] == (0, 0)")
        ax, ay = self.start_config[0]
        gx, gy = self.goal_config[0]
        for i, (dx, dy) in enumerate(self.shape):
            if self.start_config[i] != (ax + dx, ay + dy):
                raise DomainError(f"task {self.id}: start_config does not match shape at slot {i}")
            if self.goal_config[i] != (gx + dx, gy + dy):
                raise DomainError(f"task {self.id}: goal is not a rigid translation of the start")
        if not _offsets_connected(self.shape):
            raise DomainError(f"task {self.id}: shape is not 4-connected")

    @classmethod
    def from_configs(cls, id: int, starts: Iterable[Vertex], goals: Iterable[Vertex]) -> "TaskSpec":
        starts = tuple(tuple(v) for v in starts)
        goals = tuple(tuple(v) for v in goals)
        if not starts:
            raise DomainError(f"task {id}: empty configuration")
        ax, ay = starts[0]
        shape = tuple((x - ax, y - ay) for x, y in starts)
        return cls(id=id, k=len(starts), start_config=starts, goal_config=goals, shape=shape)

    @property
    def start_anchor(self) -> Vertex:
        return self.start_config[0]

    @property
    def goal_anchor(self) -> Vertex:
        return self.goal_config[0]


@dataclass(frozen=True)
class SlotRef:
    """Reference to slot `slot` of task `task_id`."""

    task_id: int
    slot: int


@dataclass(frozen=True)
class Constraint:
    """Agent `agent_id` may not occupy `vertex` at `timestep`."""

    agent_id: int
    vertex: Vertex
    timestep: int


# ---------------------------------------------------------------------------
# Entities and footprints
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class Entity:
    """A moving unit: a lone agent or a formed convoy.

    members are agent ids in slot order; members[0] is the reference agent
    whose cell is the anchor.  task_id is None for singles.
    """

    members: tuple[int, ...]
    shape: tuple[Vertex, ...]
    task_id: Optional[int] = None

    def __post_init__(self) -> None:
        if len(self.members) != len(self.shape) or not self.members:
            raise DomainError("entity members and shape must align and be nonempty")

    @property
    def kind(self) -> str:
        return "single" if len(self.members) == 1 else "convoy"

    @property
    def reference_agent(self) -> int:
        return self.members[0]


def single_entity(agent_id: int) -> Entity:
    return Entity(members=(agent_id,), shape=((0, 0),))


def footprint(shape: tuple[Vertex, ...], anchor: Vertex) -> tuple[Vertex, ...]:
    """Cells covered by a shape anchored at `anchor`, in slot order."""
    ax, ay = anchor
    return tuple((ax + dx, ay + dy) for dx, dy in shape)


def validate_placement(grid: GridMap, shape: tuple[Vertex, ...], anchor: Vertex) -> bool:
    """True iff every footprint cell is in bounds and passable."""
    return all(grid.passable(v) for v in footprint(shape, anchor))


# ---------------------------------------------------------------------------
# Paths and solutions
# ---------------------------------------------------------------------------

PHASE_IDLE = "idle"
PHASE_ASSEMBLY = "assembly"
PHASE_CONVOY = "convoy"


@dataclass(frozen=True)
class PathSegment:
    """Closed time interval [start_t, end_t] of one itinerary phase.

    Assembly segments cover travel to the slot plus any pre-sync wait; their
    `arrival` is the timestep the member reached the slot and stayed.
    """

    start_t: int
    end_t: int
    phase: str
    task_id: Optional[int] = None
    slot: Optional[int] = None
    arrival: Optional[int] = None


@dataclass(frozen=True)
class AgentPath:
    """Per-timestep vertices from t=0 through the agent's determined end."""

    agent_id: int
    vertices: tuple[Vertex, ...]
    segments: tuple[PathSegment, ...]

    def at(self, t: int) -> Vertex:
        """Position at time t; agents rest at their final vertex forever."""
        if t < len(self.vertices):
            return self.vertices[t]
        return self.vertices[-1]

    @property
    def determined_end(self) -> int:
        """Last timestep with a planned (non-rest) position."""
        return len(self.vertices) - 1

    @property
    def completion(self) -> int:
        """End of the final convoy segment; 0 when no task was executed."""
        for seg in reversed(self.segments):
            if seg.phase == PHASE_CONVOY:
                return seg.end_t
        return 0


@dataclass
class SolverStats:
    task_expansions: int = 0
    conflict_expansions: int = 0
    nodes_generated: int = 0
    nodes_popped: int = 0
    duplicates_skipped: int = 0
    runtime_ms: float = 0.0
    peak_open_size: int = 0
    status: str = "unknown"


@dataclass(frozen=True)
class Solution:
    """A complete plan: per-agent slot itineraries, paths, and sum of costs."""

    assignments: tuple[tuple[SlotRef, ...], ...]
    paths: tuple[AgentPath, ...]
    soc: int
    stats: SolverStats = field(compare=False, default_factory=SolverStats)


def solution_cost(paths: Iterable[AgentPath]) -> int:
    """Sum over agents of the completion time of their final convoy segment."""
    return sum(p.completion for p in paths)


# ---------------------------------------------------------------------------
# Instances
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class Instance:
    grid: GridMap
    agents: tuple[AgentSpec, ...]
    tasks: tuple[TaskSpec, ...]

    def __post_init__(self) -> None:
        starts = [a.start for a in self.agents]
        if len(set(starts)) != len(starts):
            raise DomainError("agent starts must be distinct")
        for a in self.agents:
            if not self.grid.passable(a.start):
                raise DomainError(f"agent {a.id} starts on a blocked or out-of-bounds cell")
        for i, a in enumerate(self.agents):
            if a.id != i:
                raise DomainError("agent ids must be 0..n-1 in order")
        for j, t in enumerate(self.tasks):
            if t.id != j:
                raise DomainError("task ids must be 0..m-1 in order")
            for v in t.start_config + t.goal_config:
                if not self.grid.passable(v):
                    raise DomainError(f"task {t.id} uses blocked or out-of-bounds cell {v}")
        max_k = max((t.k for t in self.tasks), default=0)
        if max_k > len(self.agents):
            raise DomainError("not enough agents for the largest task")

    @property
    def n_agents(self) -> int:
        return len(self.agents)

    @property
    def total_slots(self) -> int:
        return sum(t.k for t in self.tasks)
