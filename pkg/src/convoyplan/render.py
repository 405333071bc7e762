"""Static SVG rendering of instances and solutions.

Two modes: "trajectory" draws each agent's full path as a polyline over one
grid; "frames" stacks one small grid per timestep so convoy formation and
synchronized motion can be read frame by frame.  Output is a plain SVG
string built with no drawing dependencies.
"""

from __future__ import annotations

from typing import Optional

from .domain import GridMap, Instance, Solution, Vertex

CELL = 26
MARGIN = 14

MODES = ("trajectory", "frames")


def _agent_color(i: int) -> str:
    return f"hsl({(i * 67) % 360}, 72%, 40%)"


def _task_color(i: int) -> str:
    return f"hsl({(i * 67 + 31) % 360}, 65%, 52%)"


class _Canvas:
    def __init__(self) -> None:
        self.parts: list[str] = []

    def add(self, piece: str) -> None:
        self.parts.append(piece)

    def svg(self, width: float, height: float) -> str:
        head = (
            f'<svg xmlns="http://www.w3.org/2000/svg" width="{width:g}" '
            f'height="{height:g}" viewBox="0 0 {width:g} {height:g}">\n'
        )
        return head + "\n".join(self.parts) + "\n</svg>\n"


def _cell_xy(grid: GridMap, v: Vertex, ox: float, oy: float) -> tuple[float, float]:
    # SVG y grows downward; grid y grows upward
    x = ox + v[0] * CELL
    y = oy + (grid.height - 1 - v[1]) * CELL
    return x, y


def _center(grid: GridMap, v: Vertex, ox: float, oy: float) -> tuple[float, float]:
    x, y = _cell_xy(grid, v, ox, oy)
    return x + CELL / 2, y + CELL / 2


def _draw_grid(c: _Canvas, grid: GridMap, ox: float, oy: float) -> None:
    w, h = grid.width * CELL, grid.height * CELL
    c.add(f'<rect x="{ox}" y="{oy}" width="{w}" height="{h}" fill="#fdfdf8"/>')
    for y in range(grid.height):
        for x in range(grid.width):
            if not grid.passable((x, y)):
                px, py = _cell_xy(grid, (x, y), ox, oy)
                c.add(
                    f'<rect x="{px}" y="{py}" width="{CELL}" height="{CELL}" '
                    f'fill="#3a3a3a"/>'
                )
    for i in range(grid.width + 1):
        x = ox + i * CELL
        c.add(f'<line x1="{x}" y1="{oy}" x2="{x}" y2="{oy + h}" stroke="#ccc" stroke-width="0.6"/>')
    for i in range(grid.height + 1):
        y = oy + i * CELL
        c.add(f'<line x1="{ox}" y1="{y}" x2="{ox + w}" y2="{y}" stroke="#ccc" stroke-width="0.6"/>')
    c.add(
        f'<rect x="{ox}" y="{oy}" width="{w}" height="{h}" fill="none" '
        f'stroke="#555" stroke-width="1.4"/>'
    )


def _draw_tasks(c: _Canvas, instance: Instance, ox: float, oy: float) -> None:
    grid = instance.grid
    for task in instance.tasks:
        color = _task_color(task.id)
        for v in task.start_config:
            px, py = _cell_xy(grid, v, ox, oy)
            c.add(
                f'<rect x="{px + 2}" y="{py + 2}" width="{CELL - 4}" height="{CELL - 4}" '
                f'fill="none" stroke="{color}" stroke-width="2.2"/>'
            )
        for v in task.goal_config:
            px, py = _cell_xy(grid, v, ox, oy)
            c.add(
                f'<rect x="{px + 2}" y="{py + 2}" width="{CELL - 4}" height="{CELL - 4}" '
                f'fill="{color}" fill-opacity="0.28" stroke="{color}" '
                f'stroke-width="1.1" stroke-dasharray="3 2"/>'
            )
        sx, sy = _center(grid, task.start_anchor, ox, oy)
        c.add(
            f'<text x="{sx}" y="{sy + 3}" font-size="9" text-anchor="middle" '
            f'fill="{color}" font-family="sans-serif">T{task.id}</text>'
        )


def _draw_agents(c: _Canvas, instance: Instance, ox: float, oy: float) -> None:
    for agent in instance.agents:
        cx, cy = _center(instance.grid, agent.start, ox, oy)
        color = _agent_color(agent.id)
        c.add(f'<circle cx="{cx}" cy="{cy}" r="{CELL * 0.3:g}" fill="{color}"/>')
        c.add(
            f'<text x="{cx}" y="{cy + 3}" font-size="8" text-anchor="middle" '
            f'fill="#fff" font-family="sans-serif">{agent.id}</text>'
        )


def _trajectory(c: _Canvas, instance: Instance, solution: Solution, ox: float, oy: float) -> None:
    grid = instance.grid
    n = max(len(instance.agents), 1)
    for aid, path in enumerate(solution.paths):
        color = _agent_color(aid)
        # nudge each polyline off-center so overlapping routes stay visible
        shift = (aid - (n - 1) / 2) * min(6.0, CELL * 0.5 / n)
        pts = []
        for v in path.vertices:
            cx, cy = _center(grid, v, ox, oy)
            pts.append(f"{cx + shift:g},{cy + shift:g}")
        if len(pts) >= 2:
            c.add(
                f'<polyline points="{" ".join(pts)}" fill="none" stroke="{color}" '
                f'stroke-width="2" stroke-opacity="0.8" stroke-linejoin="round"/>'
            )
        ex, ey = _center(grid, path.vertices[-1], ox, oy)
        c.add(
            f'<rect x="{ex + shift - 4:g}" y="{ey + shift - 4:g}" width="8" height="8" '
            f'fill="{color}"/>'
        )


def _phase_at(solution: Solution, aid: int, t: int) -> Optional[str]:
    for seg in solution.paths[aid].segments:
        if seg.start_t <= t <= seg.end_t:
            return seg.phase
    return None


def render_svg(
    instance: Instance, solution: Optional[Solution] = None, mode: str = "trajectory"
) -> str:
    """Render an instance, and a solution when given, to an SVG string."""
    if mode not in MODES:
        raise ValueError(f"unknown render mode {mode!r}")
    grid = instance.grid
    if solution is None or mode == "trajectory":
        c = _Canvas()
        _draw_grid(c, grid, MARGIN, MARGIN)
        _draw_tasks(c, instance, MARGIN, MARGIN)
        if solution is not None:
            _trajectory(c, instance, solution, MARGIN, MARGIN)
        _draw_agents(c, instance, MARGIN, MARGIN)
        return c.svg(grid.width * CELL + 2 * MARGIN, grid.height * CELL + 2 * MARGIN)

    horizon = max((p.determined_end for p in solution.paths), default=0)
    c = _Canvas()
    frame_h = grid.height * CELL + MARGIN
    for t in range(horizon + 1):
        oy = MARGIN + t * (frame_h + 12)
        c.add(
            f'<text x="{MARGIN}" y="{oy - 4}" font-size="11" '
            f'font-family="sans-serif" fill="#333">t = {t}</text>'
        )
        _draw_grid(c, grid, MARGIN, oy)
        _draw_tasks(c, instance, MARGIN, oy)
        for aid, path in enumerate(solution.paths):
            cx, cy = _center(grid, path.at(t), MARGIN, oy)
            color = _agent_color(aid)
            phase = _phase_at(solution, aid, t)
            if phase == "convoy":
                c.add(
                    f'<circle cx="{cx}" cy="{cy}" r="{CELL * 0.42:g}" fill="none" '
                    f'stroke="{color}" stroke-width="2.4"/>'
                )
            c.add(f'<circle cx="{cx}" cy="{cy}" r="{CELL * 0.28:g}" fill="{color}"/>')
            c.add(
                f'<text x="{cx}" y="{cy + 3}" font-size="8" text-anchor="middle" '
                f'fill="#fff" font-family="sans-serif">{aid}</text>'
            )
    total_h = MARGIN + (horizon + 1) * (frame_h + 12) + MARGIN
    return c.svg(grid.width * CELL + 2 * MARGIN, total_h)
