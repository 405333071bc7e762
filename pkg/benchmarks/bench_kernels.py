"""Timing comparison of the compiled space-time kernels vs the pure-Python
fallback.

Run: python3 benchmarks/bench_kernels.py [--repeat N]

Both backends expose grid_distances (multi-source BFS over anchor cells) and
find_path_spacetime (constrained space-time A*).  The suite times each on a
32x32 map with scattered obstacles and a constraint load typical of deep
constraint-tree nodes, then prints per-call microseconds and the speedup.
"""

import argparse
import random
import statistics
import time
from array import array

from convoyplan import _spacetime_py

try:
    from convoyplan import _spacetime
except ImportError:
    _spacetime = None

WIDTH = HEIGHT = 32
DENSITY = 0.15


def build_world(seed: int = 7):
    rng = random.Random(seed)
    cells = WIDTH * HEIGHT
    blocked = set(rng.sample(range(cells), int(DENSITY * cells)))
    anchor_ok = bytes(0 if i in blocked else 1 for i in range(cells))
    open_cells = [i for i in range(cells) if anchor_ok[i]]
    return rng, anchor_ok, open_cells


def bench_grid_distances(backend, rng, anchor_ok, open_cells, repeat):
    sources = [rng.choice(open_cells) for _ in range(repeat)]
    started = time.perf_counter()
    for src in sources:
        backend.grid_distances(anchor_ok, WIDTH, HEIGHT, src)
    return (time.perf_counter() - started) / repeat


def bench_find_path(backend, rng, anchor_ok, open_cells, repeat):
    cases = []
    for _ in range(repeat):
        start, goal = rng.sample(open_cells, 2)
        dist = _spacetime_py.grid_distances(anchor_ok, WIDTH, HEIGHT, goal)
        if dist[start] < 0:
            continue
        ncells = WIDTH * HEIGHT
        horizon = 4 * (WIDTH + HEIGHT)
        codes = set()
        while len(codes) < 64:
            cell = rng.choice(open_cells)
            t = rng.randrange(1, horizon)
            if cell != start or t != 0:
                codes.add(t * ncells + cell)
        cases.append((start, goal, dist, horizon, array("q", sorted(codes))))
    started = time.perf_counter()
    for start, goal, dist, horizon, blocked in cases:
        backend.find_path_spacetime(
            anchor_ok, WIDTH, HEIGHT, dist, start, goal, horizon, blocked
        )
    return (time.perf_counter() - started) / max(1, len(cases))


def run(repeat: int) -> None:
    backends = [("python", _spacetime_py)]
    if _spacetime is not None:
        backends.insert(0, ("compiled", _spacetime))
    else:
        print("compiled extension not built; timing the fallback only")

    results: dict[str, dict[str, float]] = {}
    for name, backend in backends:
        rng, anchor_ok, open_cells = build_world()
        per_call = {
            "grid_distances": bench_grid_distances(
                backend, rng, anchor_ok, open_cells, repeat
            ),
            "find_path_spacetime": bench_find_path(
                backend, rng, anchor_ok, open_cells, repeat
            ),
        }
        results[name] = per_call

    print(f"map {WIDTH}x{HEIGHT}, density {DENSITY}, {repeat} calls per kernel")
    for kernel in ("grid_distances", "find_path_spacetime"):
        line = [f"{kernel:22s}"]
        for name, _ in backends:
            line.append(f"{name} {results[name][kernel] * 1e6:9.1f} us")
        if _spacetime is not None:
            speedup = results["python"][kernel] / results["compiled"][kernel]
            line.append(f"speedup {speedup:5.1f}x")
        print("  ".join(line))


def main() -> None:
    parser = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    parser.add_argument("--repeat", type=int, default=200)
    args = parser.parse_args()
    run(args.repeat)


if __name__ == "__main__":
    main()
