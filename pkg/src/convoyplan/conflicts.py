"""Conflict detection and the constraint-split strategies.

A conflict exists at time t whenever the footprints of two distinct entities
overlap; since footprints are cell sets this is equivalent to two agents of
different entities sharing a cell.  Each split produces two constraint sets,
one per involved entity, always on the entity's reference agent:

  normal  one constraint per side at the entity's own anchor
  asym    the lower-id entity gets its single anchor constraint, the other
          side is blocked from every anchor whose footprint overlaps it
  sym     a single overlap cell p is chosen (lexicographically smallest) and
          both sides are blocked from every anchor covering p
  max-d   all of the above are candidates; each candidate's sides are scored
          by how many extra timesteps (0..d, saturating at d+1) the entity's
          current leg needs under the new constraints, using MDDs, and the
          pair maximizing min(score_a, score_b) is kept
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Iterator, Optional

from .domain import (
    PHASE_ASSEMBLY,
    Constraint,
    Entity,
    GridMap,
    Instance,
    Vertex,
    footprint,
    single_entity,
    validate_placement,
)
from .planner import SINGLE_SHAPE, ConstraintMap, NodePlan, Planner


@dataclass(frozen=True)
class Conflict:
    """Footprint overlap between entity_a (smaller reference id) and entity_b at t."""

    entity_a: Entity
    entity_b: Entity
    anchor_a: Vertex
    anchor_b: Vertex
    t: int


@dataclass(frozen=True)
class SplitSide:
    """Constraints for one branch; all on a single (reference) agent."""

    agent_id: int
    constraints: tuple[Constraint, ...]


Split = tuple[SplitSide, SplitSide]


# ---------------------------------------------------------------------------
# Detection
# ---------------------------------------------------------------------------


def entities_at(instance: Instance, plan: NodePlan, t: int) -> list[tuple[Entity, Vertex]]:
    """Entities alive at time t with their anchors, ordered by reference agent.

    A convoy for task j exists for t_sync <= t < completion; outside that
    window (including the completion step itself) members count as singles.
    """
    in_convoy: dict[int, tuple[int, int]] = {}
    for tid, (t_sync, completion) in plan.convoy_windows.items():
        if t_sync <= t < completion:
            for slot, agent in enumerate(plan.task_members[tid]):
                in_convoy[agent] = (tid, slot)
    out: list[tuple[Entity, Vertex]] = []
    seen_tasks: set[int] = set()
    for a in range(instance.n_agents):
        duty = in_convoy.get(a)
        if duty is None:
            out.append((single_entity(a), plan.paths[a].at(t)))
        else:
            tid, slot = duty
            if tid not in seen_tasks:
                seen_tasks.add(tid)
                task = instance.tasks[tid]
                members = plan.task_members[tid]
                anchor = plan.paths[members[0]].at(t)
                out.append((Entity(members, task.shape, tid), anchor))
    out.sort(key=lambda ea: ea[0].reference_agent)
    return out


def detect_first_conflict(instance: Instance, plan: NodePlan) -> Optional[Conflict]:
    """Earliest-time footprint overlap; ties broken by smallest entity-id pair."""
    max_t = max(p.determined_end for p in plan.paths)
    for t in range(max_t + 1):
        alive = entities_at(instance, plan, t)
        owner: dict[Vertex, int] = {}
        pairs: list[tuple[int, int]] = []
        for i, (entity, anchor) in enumerate(alive):
            for cell in footprint(entity.shape, anchor):
                j = owner.setdefault(cell, i)
                if j != i:
                    pairs.append((j, i))
        if pairs:
            j, i = min(
                pairs,
                key=lambda p: (
                    alive[p[0]][0].reference_agent,
                    alive[p[1]][0].reference_agent,
                ),
            )
            ea, aa = alive[j]
            eb, ab = alive[i]
            return Conflict(ea, eb, aa, ab, t)
    return None


# ---------------------------------------------------------------------------
# Splits
# ---------------------------------------------------------------------------


def _side(agent: int, vertices: list[Vertex], t: int) -> SplitSide:
    cons = tuple(Constraint(agent, v, t) for v in sorted(set(vertices)))
    return SplitSide(agent, cons)


def split_normal(conflict: Conflict) -> Split:
    return (
        _side(conflict.entity_a.reference_agent, [conflict.anchor_a], conflict.t),
        _side(conflict.entity_b.reference_agent, [conflict.anchor_b], conflict.t),
    )


def _overlapping_anchors(
    grid: GridMap, shape: tuple[Vertex, ...], cells: tuple[Vertex, ...]
) -> list[Vertex]:
    """Valid anchors for `shape` whose footprint touches any of `cells`."""
    anchors: set[Vertex] = set()
    for (ux, uy) in cells:
        for (dx, dy) in shape:
            cand = (ux - dx, uy - dy)
            if validate_placement(grid, shape, cand):
                anchors.add(cand)
    return sorted(anchors)


def split_asym(conflict: Conflict, grid: GridMap) -> Split:
    """Single anchor constraint on the lower-id entity; the other entity is
    excluded from every anchor overlapping that footprint."""
    return _asym_oriented(conflict, grid, single_is_a=True)


def _asym_oriented(conflict: Conflict, grid: GridMap, single_is_a: bool) -> Split:
    if single_is_a:
        single_e, single_anchor = conflict.entity_a, conflict.anchor_a
        broad_e = conflict.entity_b
    else:
        single_e, single_anchor = conflict.entity_b, conflict.anchor_b
        broad_e = conflict.entity_a
    cells = footprint(single_e.shape, single_anchor)
    broad = _side(
        broad_e.reference_agent,
        _overlapping_anchors(grid, broad_e.shape, cells),
        conflict.t,
    )
    narrow = _side(single_e.reference_agent, [single_anchor], conflict.t)
    if single_is_a:
        return (narrow, broad)
    return (broad, narrow)


def overlap_cells(conflict: Conflict) -> list[Vertex]:
    fa = set(footprint(conflict.entity_a.shape, conflict.anchor_a))
    fb = set(footprint(conflict.entity_b.shape, conflict.anchor_b))
    return sorted(fa & fb)


def split_sym(conflict: Conflict, grid: GridMap) -> Split:
    """Both entities are excluded from covering one shared cell."""
    p = overlap_cells(conflict)[0]
    return _sym_at(conflict, grid, p)


def _sym_at(conflict: Conflict, grid: GridMap, p: Vertex) -> Split:
    return (
        _side(
            conflict.entity_a.reference_agent,
            _overlapping_anchors(grid, conflict.entity_a.shape, (p,)),
            conflict.t,
        ),
        _side(
            conflict.entity_b.reference_agent,
            _overlapping_anchors(grid, conflict.entity_b.shape, (p,)),
            conflict.t,
        ),
    )


def candidate_splits(conflict: Conflict, grid: GridMap) -> Iterator[Split]:
    """Enumeration order is pinned: normal, both asym orientations, sym per
    overlap cell in lexicographic order."""
    yield split_normal(conflict)
    yield _asym_oriented(conflict, grid, single_is_a=True)
    yield _asym_oriented(conflict, grid, single_is_a=False)
    for p in overlap_cells(conflict):
        yield _sym_at(conflict, grid, p)


# ---------------------------------------------------------------------------
# MAX-d scoring
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class LegInfo:
    """The active leg of an entity at conflict time, for MDD scoring."""

    shape: tuple[Vertex, ...]
    members: tuple[int, ...]
    start_anchor: Vertex
    goal_anchor: Vertex
    start_time: int
    cost: int


def leg_info(
    instance: Instance, plan: NodePlan, entity: Entity, t: int
) -> Optional[LegInfo]:
    """Active leg of `entity` at time t; None when it is resting or idle.

    For a member waiting on its slot the wait is folded into the leg cost,
    so a constraint at the wait cell cannot look free.
    """
    if entity.task_id is not None:
        t_sync, completion = plan.convoy_windows[entity.task_id]
        task = instance.tasks[entity.task_id]
        return LegInfo(
            task.shape,
            entity.members,
            task.start_anchor,
            task.goal_anchor,
            t_sync,
            completion - t_sync,
        )
    agent = entity.members[0]
    path = plan.paths[agent]
    for seg in path.segments:
        if seg.phase == PHASE_ASSEMBLY and seg.start_t <= t <= seg.end_t:
            task = instance.tasks[seg.task_id]
            arrival = seg.arrival if seg.arrival is not None else seg.end_t
            return LegInfo(
                SINGLE_SHAPE,
                (agent,),
                path.vertices[seg.start_t],
                task.start_config[seg.slot],
                seg.start_t,
                max(arrival, t) - seg.start_t,
            )
    return None


def _side_weight(
    planner: Planner,
    side: SplitSide,
    leg: Optional[LegInfo],
    constraints: ConstraintMap,
    d: int,
) -> int:
    if leg is None:
        return d + 1  # a resting entity cannot absorb any constraint cheaply
    extra = frozenset((c.vertex, c.timestep) for c in side.constraints)
    merged = dict(constraints)
    merged[side.agent_id] = constraints.get(side.agent_id, frozenset()) | extra
    for delta in range(d + 1):
        mdd = planner.build_mdd(
            leg.shape,
            leg.members,
            leg.start_anchor,
            leg.goal_anchor,
            leg.start_time,
            leg.cost + delta,
            merged,
        )
        if not mdd.is_empty:
            return delta
    return d + 1


def split_max(
    conflict: Conflict,
    grid: GridMap,
    planner: Planner,
    instance: Instance,
    plan: NodePlan,
    constraints: ConstraintMap,
    d: int,
) -> Split:
    """Pick the candidate split maximizing min(side scores); first wins ties."""
    leg_a = leg_info(instance, plan, conflict.entity_a, conflict.t)
    leg_b = leg_info(instance, plan, conflict.entity_b, conflict.t)
    best: Optional[Split] = None
    best_score = -1
    for split in candidate_splits(conflict, grid):
        wa = _side_weight(planner, split[0], leg_a, constraints, d)
        wb = _side_weight(planner, split[1], leg_b, constraints, d)
        score = min(wa, wb)
        if score > best_score:
            best, best_score = split, score
    assert best is not None
    return best


def resolve(
    resolver: str,
    conflict: Conflict,
    grid: GridMap,
    planner: Planner,
    instance: Instance,
    plan: NodePlan,
    constraints: ConstraintMap,
) -> Split:
    if resolver == "normal":
        return split_normal(conflict)
    if resolver == "asym":
        return split_asym(conflict, grid)
    if resolver == "sym":
        return split_sym(conflict, grid)
    if resolver == "max1":
        return split_max(conflict, grid, planner, instance, plan, constraints, 1)
    if resolver == "max2":
        return split_max(conflict, grid, planner, instance, plan, constraints, 2)
    raise ValueError(f"unknown resolver {resolver!r}")
