"""Command-line interface.

Subcommands: solve, generate, bench, validate, oracle, render.  Machine
output (solution JSON, scenario files, benchmark CSV) is written even when a
run fails, so harnesses can aggregate timeouts; the human-readable summary
is one line on stdout.

Exit codes: 0 solved/ok, 1 solver or validation failure, 2 usage or parse
errors.
"""

from __future__ import annotations

import argparse
import json
import sys
import time
from pathlib import Path
from typing import Optional, Sequence

from . import bench as bench_mod
from . import io as io_mod
from . import oracle as oracle_mod
from . import render as render_mod
from . import scen as scen_mod
from .domain import DomainError, SolverStats
from .search import EXPANSIONS, RESOLVERS, Limits, solve


def _add_instance_flags(p: argparse.ArgumentParser) -> None:
    p.add_argument("--map", required=True, help="grid map file")
    p.add_argument("--scen", required=True, help="scenario file")


def _build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="convoyplan",
        description="Cooperative transport task allocation and path finding.",
    )
    sub = parser.add_subparsers(dest="subcommand", required=True)

    p = sub.add_parser("solve", help="run a solver on a map + scenario")
    _add_instance_flags(p)
    p.add_argument("--algo", default="optimal", choices=bench_mod.ALGOS)
    p.add_argument("--expansion", default="incremental", choices=EXPANSIONS)
    p.add_argument("--resolver", default="sym", choices=RESOLVERS)
    p.add_argument("--timeout", type=float, default=500.0, help="seconds")
    p.add_argument("--mem-limit", type=int, default=4 * 1024**3, help="bytes")
    p.add_argument("--out", default=None, help="solution path (.sol.json)")

    p = sub.add_parser("generate", help="write a map + scenario pair")
    p.add_argument("--scenario-family", default="random", choices=scen_mod.FAMILIES)
    p.add_argument("--width", type=int, default=8)
    p.add_argument("--height", type=int, default=8)
    p.add_argument("--obstacle-density", type=float, default=0.1)
    p.add_argument(
        "--tasks",
        default="1:2",
        help="task type counts, e.g. '3' (three 1-agent tasks) or '1:2,2:1'",
    )
    p.add_argument("--agents", type=int, default=None, help="default: total slots")
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--out", required=True, help="output path prefix")

    p = sub.add_parser("bench", help="run a benchmark plan")
    p.add_argument("plan", help="benchmark plan JSON file")
    p.add_argument("--out", default="benchout", help="output directory")

    p = sub.add_parser("validate", help="check a solution against its instance")
    _add_instance_flags(p)
    p.add_argument("solution", help="solution file (.sol.json)")

    p = sub.add_parser("oracle", help="exhaustive optimal solve (desk scale)")
    _add_instance_flags(p)
    p.add_argument("--out", default=None, help="solution path (.sol.json)")

    p = sub.add_parser("render", help="draw an instance or solution as SVG")
    _add_instance_flags(p)
    p.add_argument("solution", nargs="?", default=None, help="solution file")
    p.add_argument("mode", nargs="?", default="trajectory", choices=render_mod.MODES)
    p.add_argument("--out", default=None, help="output SVG path")

    return parser


def _parse_task_counts(text: str) -> dict[int, int]:
    text = text.strip()
    if ":" not in text:
        return {1: int(text)}
    counts: dict[int, int] = {}
    for part in text.split(","):
        k, _, c = part.partition(":")
        counts[int(k)] = counts.get(int(k), 0) + int(c)
    return counts


def _summary(status: str, soc, stats: SolverStats) -> str:
    soc_txt = soc if soc is not None else "-"
    return (
        f"status={status} soc={soc_txt} runtimeMs={stats.runtime_ms:.1f} "
        f"taskExpansions={stats.task_expansions} "
        f"conflictExpansions={stats.conflict_expansions}"
    )


def _default_out(scen_path: str, suffix: str) -> Path:
    name = Path(scen_path).name
    for ending in (".scen.json", ".json", ".scen"):
        if name.endswith(ending):
            name = name[: -len(ending)]
            break
    return Path(scen_path).parent / f"{name}{suffix}"


def _cmd_solve(args) -> int:
    instance = io_mod.load_instance(args.map, args.scen)
    limits = Limits(args.timeout, args.mem_limit)
    result = solve(instance, args.algo, args.expansion, args.resolver, limits)
    out = Path(args.out) if args.out else _default_out(args.scen, ".sol.json")
    io_mod.write_solution(result.status, result.solution, out)
    soc = result.solution.soc if result.solved and result.solution else None
    print(_summary(result.status, soc, result.stats))
    return 0 if result.solved else 1


def _cmd_generate(args) -> int:
    counts = _parse_task_counts(args.tasks)
    slots = sum(k * c for k, c in counts.items())
    agents = args.agents if args.agents is not None else slots
    config = scen_mod.ScenarioConfig(
        family=args.scenario_family,
        width=args.width,
        height=args.height,
        obstacle_density=args.obstacle_density,
        task_type_counts=counts,
        agent_count=agents,
        seed=args.seed,
    )
    instance = scen_mod.generate(config)
    prefix = Path(args.out)
    map_path = prefix.with_name(prefix.name + ".map")
    scen_path = prefix.with_name(prefix.name + ".scen.json")
    io_mod.write_map(instance.grid, map_path)
    io_mod.write_scenario(instance.agents, instance.tasks, scen_path)
    print(
        f"wrote {map_path} and {scen_path} "
        f"(agents={len(instance.agents)} tasks={len(instance.tasks)})"
    )
    return 0


def _cmd_bench(args) -> int:
    plan = bench_mod.BenchPlan.from_json(Path(args.plan).read_text())
    suite = bench_mod.run_suite(plan, out_dir=args.out)
    totals = suite.report["totals"]
    statuses = ",".join(f"{k}={v}" for k, v in sorted(totals["statuses"].items()))
    print(
        f"records={totals['records']} {statuses} "
        f"runtimeMs={totals['runtimeMs']:.1f} out={args.out}"
    )
    return 0 if not suite.report["errors"] else 1


def _cmd_validate(args) -> int:
    instance = io_mod.load_instance(args.map, args.scen)
    status, solution = io_mod.read_solution(args.solution)
    if solution is None:
        print(f"status={status} (no solution to validate)")
        return 1
    violations = oracle_mod.validate(instance, solution)
    if violations:
        for v in violations:
            print(f"violation kind={v.kind} agent={v.agent_id} t={v.t} {v.detail}")
        return 1
    print(f"ok soc={solution.soc}")
    return 0


def _cmd_oracle(args) -> int:
    instance = io_mod.load_instance(args.map, args.scen)
    started = time.perf_counter()
    try:
        solution = oracle_mod.exhaustive_optimal(
            instance, assignment_cap=len(instance.tasks)
        )
    except oracle_mod.OracleBoundExceeded as exc:
        print(f"oracle refused: {exc}", file=sys.stderr)
        return 1
    runtime_ms = (time.perf_counter() - started) * 1000.0
    status = "solved" if solution is not None else "exhausted"
    out = Path(args.out) if args.out else _default_out(args.scen, ".sol.json")
    io_mod.write_solution(status, solution, out)
    stats = solution.stats if solution is not None else SolverStats(status=status)
    stats.runtime_ms = runtime_ms
    print(_summary(status, solution.soc if solution else None, stats))
    return 0 if solution is not None else 1


def _cmd_render(args) -> int:
    instance = io_mod.load_instance(args.map, args.scen)
    solution = None
    if args.solution is not None:
        status, solution = io_mod.read_solution(args.solution)
        if solution is None:
            print(f"status={status}: rendering the instance only", file=sys.stderr)
    svg = render_mod.render_svg(instance, solution, args.mode)
    if args.out:
        out = Path(args.out)
    elif args.solution:
        out = Path(args.solution + ".svg")
    else:
        out = _default_out(args.scen, ".svg")
    out.write_text(svg)
    print(f"wrote {out}")
    return 0


_COMMANDS = {
    "solve": _cmd_solve,
    "generate": _cmd_generate,
    "bench": _cmd_bench,
    "validate": _cmd_validate,
    "oracle": _cmd_oracle,
    "render": _cmd_render,
}


def main(argv: Optional[Sequence[str]] = None) -> int:
    parser = _build_parser()
    args = parser.parse_args(argv)
    try:
        return _COMMANDS[args.subcommand](args)
    except (
        io_mod.FormatError,
        DomainError,
        scen_mod.GenerationError,
        FileNotFoundError,
        json.JSONDecodeError,
        ValueError,
    ) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2


if __name__ == "__main__":
    raise SystemExit(main())
