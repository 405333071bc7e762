"""Pure-Python space-time search kernel.

Fallback twin of the compiled extension `_spacetime`; both expose the same
two functions with identical tie-breaking, so solver output does not depend
on which backend is loaded.

States are (cell, relative time) pairs.  Because every move (including a
stay) costs one step, the cost g of a state always equals its relative time,
so a state is pushed at most once and the heap can hold bare integer keys:

    key = f << 40 | (GMAX - g) << 20 | x << 10 | y

which orders pops by smallest f, then largest g, then lexicographic (x, y).
"""

from __future__ import annotations

import heapq
from array import array
from bisect import bisect_left
from collections import deque

BACKEND = "python"

_DX = (0, 1, -1, 0, 0)
_DY = (0, 0, 0, 1, -1)
_GMAX = (1 << 20) - 1
_UNDISCOVERED = 255
_ROOT = 5
_MAX_STATES = 1 << 26


def grid_distances(anchor_ok: bytes, width: int, height: int, source: int) -> array:
    """BFS step counts from `source` over cells where anchor_ok is set; -1 if cut off."""
    ncells = width * height
    dist = array("i", bytes(4 * ncells))
    for i in range(ncells):
        dist[i] = -1
    if not (0 <= source < ncells) or not anchor_ok[source]:
        return dist
    dist[source] = 0
    queue = deque((source,))
    while queue:
        idx = queue.popleft()
        d = dist[idx] + 1
        x = idx % width
        y = idx // width
        for k in range(1, 5):
            nx = x + _DX[k]
            ny = y + _DY[k]
            if 0 <= nx < width and 0 <= ny < height:
                nidx = ny * width + nx
                if anchor_ok[nidx] and dist[nidx] < 0:
                    dist[nidx] = d
                    queue.append(nidx)
    return dist


def find_path_spacetime(
    anchor_ok: bytes,
    width: int,
    height: int,
    dist,
    start: int,
    goal: int,
    max_rel_t: int,
    blocked_sorted,
    min_goal_rel: int = 0,
):
    """A* from (start, 0) to the earliest (goal, t) with t >= min_goal_rel.

    `dist` is the grid_distances table from `goal` (the admissible heuristic);
    `blocked_sorted` is an ascending array of forbidden t*ncells+cell codes.
    Returns the anchor index per relative timestep, or None when no path
    exists within max_rel_t.
    """
    if width > 1024 or height > 1024:
        raise ValueError("grid dimensions above 1024 are not supported")
    ncells = width * height
    if max_rel_t < 0 or (max_rel_t + 1) * ncells > _MAX_STATES:
        raise ValueError("search horizon out of range")
    if not anchor_ok[start] or not anchor_ok[goal]:
        return None
    if dist[start] < 0:
        return None

    nblocked = len(blocked_sorted)

    def is_blocked(code: int) -> bool:
        i = bisect_left(blocked_sorted, code)
        return i < nblocked and blocked_sorted[i] == code

    if is_blocked(start):
        return None

    parent = bytearray((_UNDISCOVERED,)) * (ncells * (max_rel_t + 1))
    parent[start] = _ROOT
    h0 = dist[start] if dist[start] > min_goal_rel else min_goal_rel
    heap = [(h0 << 40) | (_GMAX << 20) | ((start % width) << 10) | (start // width)]

    while heap:
        key = heapq.heappop(heap)
        y = key & 1023
        x = (key >> 10) & 1023
        g = _GMAX - ((key >> 20) & _GMAX)
        idx = y * width + x
        if idx == goal and g >= min_goal_rel:
            return _reconstruct(parent, width, ncells, goal, g)
        if g == max_rel_t:
            continue
        ng = g + 1
        base = ng * ncells
        for k in range(5):
            nx = x + _DX[k]
            ny = y + _DY[k]
            if not (0 <= nx < width and 0 <= ny < height):
                continue
            nidx = ny * width + nx
            if not anchor_ok[nidx]:
                continue
            hd = dist[nidx]
            if hd < 0:
                continue
            scode = base + nidx
            if parent[scode] != _UNDISCOVERED or is_blocked(scode):
                continue
            parent[scode] = k
            slack = min_goal_rel - ng
            if slack > hd:
                hd = slack
            heapq.heappush(
                heap, ((ng + hd) << 40) | ((_GMAX - ng) << 20) | (nx << 10) | ny
            )
    return None


def _reconstruct(parent: bytearray, width: int, ncells: int, goal: int, arrival: int):
    out = [0] * (arrival + 1)
    idx = goal
    for rel in range(arrival, -1, -1):
        out[rel] = idx
        if rel:
            k = parent[rel * ncells + idx]
            idx = (idx % width - _DX[k]) + (idx // width - _DY[k]) * width
    return out
