"""File formats: grid maps, scenario files, and solution files.

Maps use the MovingAI grid layout: a four-line header, then one row of
terrain characters per line, top row first.  Internally the origin is the
bottom-left cell, so file row 0 maps to y = height - 1.  Scenarios and
solutions are JSON; writers emit canonical bytes (sorted keys, fixed
separators, trailing newline) so identical inputs produce identical files.
"""

from __future__ import annotations

import json
from pathlib import Path
from typing import Optional, Union

from .domain import (
    AgentSpec,
    GridMap,
    Instance,
    PathSegment,
    SlotRef,
    Solution,
    SolverStats,
    TaskSpec,
    AgentPath,
)

PASSABLE_CHARS = frozenset(".G")
BLOCKED_CHARS = frozenset("@TO")

_STATS_KEYS = (
    ("taskExpansions", "task_expansions"),
    ("conflictExpansions", "conflict_expansions"),
    ("nodesGenerated", "nodes_generated"),
    ("nodesPopped", "nodes_popped"),
    ("duplicatesSkipped", "duplicates_skipped"),
    ("peakOpenSize", "peak_open_size"),
)


class FormatError(Exception):
    """Malformed input file; the message carries line or field diagnostics."""


# ---------------------------------------------------------------------------
# Grid maps
# ---------------------------------------------------------------------------


def map_from_text(text: str) -> GridMap:
    lines = text.splitlines()
    if len(lines) < 4:
        raise FormatError("map header truncated: need 4 header lines")
    if not lines[0].startswith("type"):
        raise FormatError("line 1: expected 'type ...' header")
    try:
        height = int(lines[1].split()[1])
        width = int(lines[2].split()[1])
    except (IndexError, ValueError) as exc:
        raise FormatError(f"lines 2-3: malformed height/width header ({exc})") from exc
    if lines[1].split()[0] != "height" or lines[2].split()[0] != "width":
        raise FormatError("lines 2-3: expected 'height N' then 'width N'")
    if lines[3].strip() != "map":
        raise FormatError("line 4: expected 'map'")
    rows = lines[4 : 4 + height]
    if len(rows) < height:
        raise FormatError(f"expected {height} map rows, found {len(rows)}")
    blocked = set()
    for file_row, row in enumerate(rows):
        if len(row) != width:
            raise FormatError(
                f"line {5 + file_row}: row length {len(row)} != width {width}"
            )
        y = height - 1 - file_row
        for x, ch in enumerate(row):
            if ch in BLOCKED_CHARS:
                blocked.add((x, y))
            elif ch not in PASSABLE_CHARS:
                raise FormatError(
                    f"line {5 + file_row}, column {x + 1}: unknown terrain {ch!r}"
                )
    return GridMap(width, height, frozenset(blocked))


def map_to_text(grid: GridMap) -> str:
    out = ["type octile", f"height {grid.height}", f"width {grid.width}", "map"]
    for y in range(grid.height - 1, -1, -1):
        out.append(
            "".join(
                "." if (x, y) not in grid.blocked else "@" for x in range(grid.width)
            )
        )
    return "\n".join(out) + "\n"


def read_map(path: Union[str, Path]) -> GridMap:
    return map_from_text(Path(path).read_text())


def write_map(grid: GridMap, path: Union[str, Path]) -> None:
    Path(path).write_text(map_to_text(grid))


# ---------------------------------------------------------------------------
# Scenarios
# ---------------------------------------------------------------------------


def _vertex(obj: object, where: str) -> tuple[int, int]:
    if (
        not isinstance(obj, (list, tuple))
        or len(obj) != 2
        or not all(isinstance(c, int) for c in obj)
    ):
        raise FormatError(f"{where}: expected [x, y] integer pair, got {obj!r}")
    return (obj[0], obj[1])


def scenario_from_text(text: str) -> tuple[tuple[AgentSpec, ...], tuple[TaskSpec, ...]]:
    try:
        data = json.loads(text)
    except json.JSONDecodeError as exc:
        raise FormatError(f"scenario JSON: {exc}") from exc
    if not isinstance(data, dict):
        raise FormatError("scenario root: expected an object")
    for key in ("agents", "tasks"):
        if key not in data or not isinstance(data[key], list):
            raise FormatError(f"scenario field {key!r}: missing or not a list")
    agents = tuple(
        AgentSpec(i, _vertex(pos, f"agents[{i}]")) for i, pos in enumerate(data["agents"])
    )
    tasks = []
    for tid, entry in enumerate(data["tasks"]):
        where = f"tasks[{tid}]"
        if not isinstance(entry, dict):
            raise FormatError(f"{where}: expected an object")
        for key in ("k", "starts", "goals"):
            if key not in entry:
                raise FormatError(f"{where}: missing field {key!r}")
        k = entry["k"]
        if not isinstance(k, int):
            raise FormatError(f"{where}.k: expected an integer")
        starts = [_vertex(v, f"{where}.starts[{i}]") for i, v in enumerate(entry["starts"])]
        goals = [_vertex(v, f"{where}.goals[{i}]") for i, v in enumerate(entry["goals"])]
        if len(starts) != k or len(goals) != k:
            raise FormatError(f"{where}: starts/goals length != k={k}")
        tasks.append(TaskSpec.from_configs(tid, starts, goals))
    return agents, tuple(tasks)


def scenario_to_text(agents: tuple[AgentSpec, ...], tasks: tuple[TaskSpec, ...]) -> str:
    data = {
        "agents": [list(a.start) for a in agents],
        "tasks": [
            {
                "k": t.k,
                "starts": [list(v) for v in t.start_config],
                "goals": [list(v) for v in t.goal_config],
            }
            for t in tasks
        ],
    }
    return json.dumps(data, sort_keys=True, separators=(",", ":")) + "\n"


def read_scenario(path: Union[str, Path]) -> tuple[tuple[AgentSpec, ...], tuple[TaskSpec, ...]]:
    return scenario_from_text(Path(path).read_text())


def write_scenario(
    agents: tuple[AgentSpec, ...], tasks: tuple[TaskSpec, ...], path: Union[str, Path]
) -> None:
    Path(path).write_text(scenario_to_text(agents, tasks))


def load_instance(map_path: Union[str, Path], scen_path: Union[str, Path]) -> Instance:
    grid = read_map(map_path)
    agents, tasks = read_scenario(scen_path)
    return Instance(grid, agents, tasks)


# ---------------------------------------------------------------------------
# Solutions
# ---------------------------------------------------------------------------


def _stats_to_json(stats: SolverStats) -> dict:
    # runtimeMs deliberately omitted: identical runs must give identical bytes
    return {key: getattr(stats, attr) for key, attr in _STATS_KEYS}


def _stats_from_json(obj: dict, status: str) -> SolverStats:
    stats = SolverStats(status=status)
    for key, attr in _STATS_KEYS:
        if key in obj:
            setattr(stats, attr, obj[key])
    return stats


def solution_to_text(status: str, solution: Optional[Solution]) -> str:
    if solution is None:
        data: dict = {"status": status, "stats": _stats_to_json(SolverStats(status=status))}
        return json.dumps(data, sort_keys=True, separators=(",", ":")) + "\n"
    data = {
        "status": status,
        "soc": solution.soc,
        "assignments": [
            [[ref.task_id, ref.slot] for ref in refs] for refs in solution.assignments
        ],
        "paths": [[list(v) for v in p.vertices] for p in solution.paths],
        "segments": [
            [
                [s.start_t, s.end_t, s.phase, s.task_id, s.slot, s.arrival]
                for s in p.segments
            ]
            for p in solution.paths
        ],
        "stats": _stats_to_json(solution.stats),
    }
    return json.dumps(data, sort_keys=True, separators=(",", ":")) + "\n"


def solution_from_text(text: str) -> tuple[str, Optional[Solution]]:
    try:
        data = json.loads(text)
    except json.JSONDecodeError as exc:
        raise FormatError(f"solution JSON: {exc}") from exc
    if not isinstance(data, dict) or "status" not in data:
        raise FormatError("solution root: expected an object with 'status'")
    status = data["status"]
    if "paths" not in data:
        return status, None
    stats = _stats_from_json(data.get("stats", {}), status)
    paths = []
    for a, (verts, segs) in enumerate(zip(data["paths"], data["segments"])):
        vertices = tuple(_vertex(v, f"paths[{a}]") for v in verts)
        segments = tuple(
            PathSegment(s[0], s[1], s[2], task_id=s[3], slot=s[4], arrival=s[5])
            for s in segs
        )
        paths.append(AgentPath(a, vertices, segments))
    assignments = tuple(
        tuple(SlotRef(t, s) for t, s in refs) for refs in data["assignments"]
    )
    return status, Solution(assignments, tuple(paths), data["soc"], stats)


def read_solution(path: Union[str, Path]) -> tuple[str, Optional[Solution]]:
    return solution_from_text(Path(path).read_text())


def write_solution(
    status: str, solution: Optional[Solution], path: Union[str, Path]
) -> None:
    Path(path).write_text(solution_to_text(status, solution))
