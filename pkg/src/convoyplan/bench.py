"""Incremental benchmark harness.

Instances grow one task at a time per seed.  Each (algorithm triple, seed)
pair is an independent lane that advances to the next size only while runs
keep succeeding.  Task sizes follow a weighted round-robin over the target
type ratio, and the agent count is re-derived from the task-agent ratio at
every size, so a lane's instance at size s is a strict prefix extension of
its instance at size s - 1.

Outputs one CSV of per-run records with a fixed header and one JSON report
of aggregates.  Infrastructure failures (generation or file errors) become
records with status "error" and never abort the suite.
"""

from __future__ import annotations

import csv
import json
import statistics
from dataclasses import dataclass, field
from pathlib import Path
from typing import Mapping, Optional, Sequence

from . import scen
from .domain import DomainError
from .scen import GenerationError, next_task_type  # noqa: F401  (re-export)
from .search import EXPANSIONS, RESOLVERS, Limits, solve

ALGOS = ("optimal", "bt", "wt", "nn1", "nn2", "greedy-pp")

CSV_HEADER = (
    "instanceId",
    "seed",
    "taskCount",
    "agentCount",
    "algo",
    "expansion",
    "resolver",
    "status",
    "soc",
    "runtimeMs",
    "taskExpansions",
    "conflictExpansions",
    "gapPercent",
)


@dataclass(frozen=True)
class BaseScenario:
    family: str
    width: int
    height: int
    obstacle_density: float
    seeds: tuple[int, ...]

    def __post_init__(self) -> None:
        if self.family not in scen.FAMILIES:
            raise DomainError(f"unknown family {self.family!r}")
        if not self.seeds:
            raise DomainError("benchmark needs at least one seed")


@dataclass(frozen=True)
class BenchPlan:
    """Everything run_suite needs, mirrored 1:1 by the JSON config file."""

    base_scenario: BaseScenario
    target_type_ratio: Mapping[int, float]
    task_agent_ratio: float
    max_tasks: int
    timeout_seconds: float
    mem_limit_bytes: int
    algorithms: tuple[tuple[str, str, str], ...]

    def __post_init__(self) -> None:
        ratio = dict(self.target_type_ratio)
        if not ratio or abs(sum(ratio.values()) - 1.0) > 1e-9:
            raise DomainError("target type ratio must sum to 1")
        for k in ratio:
            if not 1 <= k <= 4:
                raise DomainError(f"task type k={k} outside supported range 1..4")
        if self.max_tasks < 1:
            raise DomainError("maxTasks must be positive")
        if self.timeout_seconds <= 0:
            raise DomainError("timeout must be positive")
        if self.task_agent_ratio <= 0:
            raise DomainError("task-agent ratio must be positive")
        for triple in self.algorithms:
            algo, expansion, resolver = triple
            if algo not in ALGOS or expansion not in EXPANSIONS or resolver not in RESOLVERS:
                raise DomainError(f"unknown algorithm triple {triple!r}")
        if not self.algorithms:
            raise DomainError("benchmark needs at least one algorithm triple")

    def task_sizes(self) -> tuple[int, ...]:
        """The fixed task-size sequence every seed uses."""
        counts = {k: 0 for k in self.target_type_ratio}
        out = []
        for _ in range(self.max_tasks):
            k = next_task_type(counts, self.target_type_ratio)
            counts[k] += 1
            out.append(k)
        return tuple(out)

    def agent_count(self, sizes_prefix: Sequence[int]) -> int:
        slots = sum(sizes_prefix)
        return max(max(sizes_prefix), round(slots * self.task_agent_ratio))

    @classmethod
    def from_json(cls, text: str) -> "BenchPlan":
        raw = json.loads(text)
        try:
            return cls._from_raw(raw)
        except (KeyError, TypeError) as exc:
            raise DomainError(f"benchmark plan field missing or malformed: {exc}") from exc

    @classmethod
    def _from_raw(cls, raw: dict) -> "BenchPlan":
        base = raw["baseScenario"]
        return cls(
            base_scenario=BaseScenario(
                family=base["family"],
                width=base["width"],
                height=base["height"],
                obstacle_density=base["obstacleDensity"],
                seeds=tuple(base["seeds"]),
            ),
            target_type_ratio={int(k): v for k, v in raw["targetTypeRatio"].items()},
            task_agent_ratio=raw["taskAgentRatio"],
            max_tasks=raw["maxTasks"],
            timeout_seconds=raw["timeoutSeconds"],
            mem_limit_bytes=raw["memLimitBytes"],
            algorithms=tuple(tuple(t) for t in raw["algorithms"]),
        )

    def to_json(self) -> str:
        base = self.base_scenario
        raw = {
            "baseScenario": {
                "family": base.family,
                "width": base.width,
                "height": base.height,
                "obstacleDensity": base.obstacle_density,
                "seeds": list(base.seeds),
            },
            "targetTypeRatio": {str(k): v for k, v in self.target_type_ratio.items()},
            "taskAgentRatio": self.task_agent_ratio,
            "maxTasks": self.max_tasks,
            "timeoutSeconds": self.timeout_seconds,
            "memLimitBytes": self.mem_limit_bytes,
            "algorithms": [list(t) for t in self.algorithms],
        }
        return json.dumps(raw, indent=2, sort_keys=True) + "\n"


@dataclass
class RunRecord:
    instance_id: str
    seed: int
    task_count: int
    agent_count: int
    algo: str
    expansion: str
    resolver: str
    status: str
    soc: Optional[int]
    runtime_ms: float
    task_expansions: int
    conflict_expansions: int
    gap_percent: Optional[float] = None
    error: Optional[str] = None

    def row(self) -> list:
        return [
            self.instance_id,
            self.seed,
            self.task_count,
            self.agent_count,
            self.algo,
            self.expansion,
            self.resolver,
            self.status,
            "" if self.soc is None else self.soc,
            round(self.runtime_ms, 3),
            self.task_expansions,
            self.conflict_expansions,
            "" if self.gap_percent is None else round(self.gap_percent, 4),
        ]


@dataclass
class SuiteReport:
    records: list[RunRecord] = field(default_factory=list)
    report: dict = field(default_factory=dict)


def _triple_key(algo: str, expansion: str, resolver: str) -> str:
    return f"{algo}/{expansion}/{resolver}"


def run_suite(plan: BenchPlan, out_dir: Optional[str | Path] = None) -> SuiteReport:
    """Execute every lane, then aggregate; optionally write the two outputs."""
    sizes = plan.task_sizes()
    base = plan.base_scenario
    limits = Limits(plan.timeout_seconds, plan.mem_limit_bytes)

    streams: dict[int, scen.ScenarioStream] = {}
    stream_errors: dict[int, str] = {}
    for seed in base.seeds:
        try:
            streams[seed] = scen.generate_stream(
                base.family,
                base.width,
                base.height,
                base.obstacle_density,
                sizes,
                plan.agent_count(sizes),
                seed,
            )
        except (GenerationError, DomainError) as exc:
            stream_errors[seed] = str(exc)

    records: list[RunRecord] = []
    for triple in plan.algorithms:
        algo, expansion, resolver = triple
        for seed in base.seeds:
            if seed in stream_errors:
                records.append(
                    RunRecord(
                        instance_id=f"{base.family}-s{seed}-n0",
                        seed=seed,
                        task_count=0,
                        agent_count=0,
                        algo=algo,
                        expansion=expansion,
                        resolver=resolver,
                        status="error",
                        soc=None,
                        runtime_ms=0.0,
                        task_expansions=0,
                        conflict_expansions=0,
                        error=stream_errors[seed],
                    )
                )
                continue
            stream = streams[seed]
            for n in range(1, plan.max_tasks + 1):
                instance = stream.prefix(n, plan.task_agent_ratio)
                record = _run_one(
                    instance_id=f"{base.family}-s{seed}-n{n}",
                    seed=seed,
                    instance=instance,
                    triple=triple,
                    limits=limits,
                )
                records.append(record)
                if record.status != "solved":
                    break

    _fill_gaps(records)
    report = _aggregate(plan, records)
    out = SuiteReport(records=records, report=report)
    if out_dir is not None:
        write_outputs(out, out_dir)
    return out


def _run_one(instance_id, seed, instance, triple, limits) -> RunRecord:
    algo, expansion, resolver = triple
    try:
        result = solve(instance, algo, expansion, resolver, limits)
    except Exception as exc:  # surfaced per record, suite keeps going
        return RunRecord(
            instance_id=instance_id,
            seed=seed,
            task_count=len(instance.tasks),
            agent_count=len(instance.agents),
            algo=algo,
            expansion=expansion,
            resolver=resolver,
            status="error",
            soc=None,
            runtime_ms=0.0,
            task_expansions=0,
            conflict_expansions=0,
            error=f"{type(exc).__name__}: {exc}",
        )
    soc = result.solution.soc if result.solved and result.solution else None
    return RunRecord(
        instance_id=instance_id,
        seed=seed,
        task_count=len(instance.tasks),
        agent_count=len(instance.agents),
        algo=algo,
        expansion=expansion,
        resolver=resolver,
        status=result.status,
        soc=soc,
        runtime_ms=result.stats.runtime_ms,
        task_expansions=result.stats.task_expansions,
        conflict_expansions=result.stats.conflict_expansions,
    )


def _fill_gaps(records: list[RunRecord]) -> None:
    """Gap of every solved record vs the best solved optimal soc on the
    same (seed, taskCount) instance."""
    best: dict[tuple[int, int], int] = {}
    for r in records:
        if r.algo == "optimal" and r.status == "solved" and r.soc is not None:
            key = (r.seed, r.task_count)
            if key not in best or r.soc < best[key]:
                best[key] = r.soc
    for r in records:
        if r.status != "solved" or r.soc is None:
            continue
        opt = best.get((r.seed, r.task_count))
        if opt is None or opt == 0:
            continue
        r.gap_percent = 100.0 * (r.soc - opt) / opt


def _aggregate(plan: BenchPlan, records: list[RunRecord]) -> dict:
    by_triple: dict[str, list[RunRecord]] = {}
    for r in records:
        by_triple.setdefault(_triple_key(r.algo, r.expansion, r.resolver), []).append(r)

    seeds = len(plan.base_scenario.seeds)
    per_triple = {}
    for key, rows in sorted(by_triple.items()):
        solved = [r for r in rows if r.status == "solved"]
        success_rate = {}
        for n in range(1, plan.max_tasks + 1):
            wins = sum(1 for r in solved if r.task_count == n)
            success_rate[str(n)] = wins / seeds if seeds else 0.0
        te = [r.task_expansions for r in solved]
        ce = [r.conflict_expansions for r in solved]
        ratios = [
            r.task_expansions / r.conflict_expansions
            for r in solved
            if r.conflict_expansions > 0
        ]
        gaps = [r.gap_percent for r in solved if r.gap_percent is not None]
        per_triple[key] = {
            "runs": len(rows),
            "solved": len(solved),
            "successRate": success_rate,
            "taskExpansions": _stats_block(te),
            "conflictExpansions": _stats_block(ce),
            "expansionRatio": _stats_block(ratios),
            "gapPercent": _stats_block(gaps),
            "totalRuntimeMs": round(sum(r.runtime_ms for r in rows), 3),
        }

    statuses: dict[str, int] = {}
    for r in records:
        statuses[r.status] = statuses.get(r.status, 0) + 1
    errors = [
        {"instanceId": r.instance_id, "algo": r.algo, "error": r.error}
        for r in records
        if r.error
    ]
    return {
        "taskSizes": list(plan.task_sizes()),
        "totals": {
            "records": len(records),
            "statuses": statuses,
            "runtimeMs": round(sum(r.runtime_ms for r in records), 3),
            "taskExpansions": sum(r.task_expansions for r in records),
            "conflictExpansions": sum(r.conflict_expansions for r in records),
        },
        "perTriple": per_triple,
        "errors": errors,
    }


def _stats_block(values: Sequence[float]) -> dict:
    if not values:
        return {"count": 0}
    return {
        "count": len(values),
        "mean": round(statistics.fmean(values), 4),
        "median": round(statistics.median(values), 4),
        "min": round(min(values), 4),
        "max": round(max(values), 4),
    }


def write_outputs(suite: SuiteReport, out_dir: str | Path) -> tuple[Path, Path]:
    out = Path(out_dir)
    out.mkdir(parents=True, exist_ok=True)
    records_path = out / "records.csv"
    with records_path.open("w", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(CSV_HEADER)
        for r in suite.records:
            writer.writerow(r.row())
    report_path = out / "report.json"
    report_path.write_text(json.dumps(suite.report, indent=2, sort_keys=True) + "\n")
    return records_path, report_path
