"""End-to-end command-line flows, run in-process."""

import json

import pytest

from convoyplan.bench import BaseScenario, BenchPlan
from convoyplan.cli import main
from convoyplan.io import read_scenario, read_solution


def gen_args(out, family="random", tasks="1:2", extra=()):
    return [
        "generate",
        "--scenario-family",
        family,
        "--width",
        "6",
        "--height",
        "6",
        "--obstacle-density",
        "0.0",
        "--tasks",
        tasks,
        "--seed",
        "3",
        "--out",
        str(out),
        *extra,
    ]


@pytest.fixture()
def instance_files(tmp_path):
    out = tmp_path / "demo"
    assert main(gen_args(out)) == 0
    return str(out) + ".map", str(out) + ".scen.json"


class TestGenerate:
    def test_writes_map_and_scenario(self, tmp_path, capsys):
        out = tmp_path / "g"
        assert main(gen_args(out)) == 0
        assert (tmp_path / "g.map").exists()
        assert (tmp_path / "g.scen.json").exists()
        assert "wrote" in capsys.readouterr().out

    def test_byte_identical_across_runs(self, tmp_path):
        main(gen_args(tmp_path / "a"))
        main(gen_args(tmp_path / "b"))
        assert (tmp_path / "a.map").read_bytes() == (tmp_path / "b.map").read_bytes()
        assert (
            (tmp_path / "a.scen.json").read_bytes()
            == (tmp_path / "b.scen.json").read_bytes()
        )

    def test_plain_count_means_single_agent_tasks(self, tmp_path):
        main(gen_args(tmp_path / "g", tasks="3"))
        _, tasks = read_scenario(tmp_path / "g.scen.json")
        assert [t.k for t in tasks] == [1, 1, 1]

    def test_mixed_task_counts(self, tmp_path):
        main(gen_args(tmp_path / "g", tasks="1:2,2:1", extra=["--agents", "3"]))
        _, tasks = read_scenario(tmp_path / "g.scen.json")
        assert sorted(t.k for t in tasks) == [1, 1, 2]

    def test_invalid_density_is_usage_error(self, tmp_path, capsys):
        code = main(
            gen_args(tmp_path / "g", extra=["--obstacle-density", "1.5"])
        )
        assert code == 2
        assert "error:" in capsys.readouterr().err


class TestSolve:
    def test_solve_and_validate(self, instance_files, tmp_path, capsys):
        map_path, scen_path = instance_files
        assert main(["solve", "--map", map_path, "--scen", scen_path]) == 0
        out = capsys.readouterr().out
        assert "status=solved" in out and "soc=" in out
        sol_path = str(tmp_path / "demo.sol.json")
        status, solution = read_solution(sol_path)
        assert status == "solved" and solution is not None
        assert main(["validate", "--map", map_path, "--scen", scen_path, sol_path]) == 0
        assert "ok soc=" in capsys.readouterr().out

    def test_explicit_out_path(self, instance_files, tmp_path):
        map_path, scen_path = instance_files
        target = tmp_path / "custom.sol.json"
        assert main(
            ["solve", "--map", map_path, "--scen", scen_path, "--out", str(target)]
        ) == 0
        assert target.exists()

    def test_solver_choice_flags(self, instance_files, tmp_path, capsys):
        map_path, scen_path = instance_files
        code = main(
            [
                "solve",
                "--map",
                map_path,
                "--scen",
                scen_path,
                "--algo",
                "greedy-pp",
                "--expansion",
                "combinatorial",
                "--resolver",
                "max1",
                "--out",
                str(tmp_path / "g.sol.json"),
            ]
        )
        assert code == 0
        assert "status=solved" in capsys.readouterr().out

    def test_timeout_still_writes_machine_output(self, instance_files, tmp_path, capsys):
        map_path, scen_path = instance_files
        code = main(
            [
                "solve",
                "--map",
                map_path,
                "--scen",
                scen_path,
                "--timeout",
                "1e-9",
                "--out",
                str(tmp_path / "t.sol.json"),
            ]
        )
        assert code == 1
        assert "status=timeout" in capsys.readouterr().out
        status, solution = read_solution(tmp_path / "t.sol.json")
        assert status == "timeout" and solution is None

    def test_missing_file_is_usage_error(self, tmp_path, capsys):
        code = main(
            ["solve", "--map", str(tmp_path / "no.map"), "--scen", str(tmp_path / "no")]
        )
        assert code == 2
        assert "error:" in capsys.readouterr().err

    def test_unknown_algo_rejected_by_parser(self, instance_files):
        map_path, scen_path = instance_files
        with pytest.raises(SystemExit) as err:
            main(["solve", "--map", map_path, "--scen", scen_path, "--algo", "ilp"])
        assert err.value.code == 2

    def test_missing_required_flag(self):
        with pytest.raises(SystemExit) as err:
            main(["solve", "--map", "x.map"])
        assert err.value.code == 2


class TestOracle:
    def test_oracle_matches_solver(self, instance_files, tmp_path, capsys):
        map_path, scen_path = instance_files
        main(["solve", "--map", map_path, "--scen", scen_path])
        _, solver_solution = read_solution(tmp_path / "demo.sol.json")
        code = main(
            [
                "oracle",
                "--map",
                map_path,
                "--scen",
                scen_path,
                "--out",
                str(tmp_path / "oracle.sol.json"),
            ]
        )
        assert code == 0
        assert "status=solved" in capsys.readouterr().out
        _, oracle_solution = read_solution(tmp_path / "oracle.sol.json")
        assert oracle_solution.soc == solver_solution.soc


class TestValidateErrors:
    def test_corrupt_solution_file(self, instance_files, tmp_path, capsys):
        map_path, scen_path = instance_files
        bad = tmp_path / "bad.sol.json"
        bad.write_text("{nope")
        code = main(["validate", "--map", map_path, "--scen", scen_path, str(bad)])
        assert code == 2
        assert "error:" in capsys.readouterr().err

    def test_failure_file_cannot_validate(self, instance_files, tmp_path, capsys):
        map_path, scen_path = instance_files
        failure = tmp_path / "fail.sol.json"
        failure.write_text('{"status":"timeout","stats":{}}\n')
        code = main(["validate", "--map", map_path, "--scen", scen_path, str(failure)])
        assert code == 1
        assert "no solution to validate" in capsys.readouterr().out


class TestBench:
    def plan_file(self, tmp_path, scenario):
        plan = BenchPlan(
            base_scenario=scenario,
            target_type_ratio={1: 1.0},
            task_agent_ratio=1.0,
            max_tasks=1,
            timeout_seconds=30.0,
            mem_limit_bytes=2**31,
            algorithms=(("optimal", "incremental", "normal"),),
        )
        path = tmp_path / "plan.json"
        path.write_text(plan.to_json())
        return path

    def test_bench_outputs(self, tmp_path, capsys):
        path = self.plan_file(tmp_path, BaseScenario("random", 6, 6, 0.0, (1, 2)))
        out_dir = tmp_path / "results"
        assert main(["bench", str(path), "--out", str(out_dir)]) == 0
        assert (out_dir / "records.csv").exists()
        assert (out_dir / "report.json").exists()
        stdout = capsys.readouterr().out
        assert "records=2" in stdout and "solved=2" in stdout

    def test_bench_with_generation_errors_fails(self, tmp_path):
        path = self.plan_file(
            tmp_path, BaseScenario("collision-rich", 2, 1, 0.0, (1,))
        )
        assert main(["bench", str(path), "--out", str(tmp_path / "r")]) == 1

    def test_malformed_plan(self, tmp_path, capsys):
        path = tmp_path / "plan.json"
        path.write_text("{}")
        assert main(["bench", str(path), "--out", str(tmp_path / "r")]) == 2
        assert "error:" in capsys.readouterr().err


class TestRender:
    def test_instance_only_svg(self, instance_files, tmp_path):
        map_path, scen_path = instance_files
        assert main(["render", "--map", map_path, "--scen", scen_path]) == 0
        svg = (tmp_path / "demo.svg").read_text()
        assert svg.startswith("<svg") and svg.rstrip().endswith("</svg>")

    @pytest.mark.parametrize("mode", ["trajectory", "frames"])
    def test_solution_render_modes(self, instance_files, tmp_path, mode):
        map_path, scen_path = instance_files
        main(["solve", "--map", map_path, "--scen", scen_path])
        sol_path = str(tmp_path / "demo.sol.json")
        assert main(
            ["render", "--map", map_path, "--scen", scen_path, sol_path, mode]
        ) == 0
        assert (tmp_path / "demo.sol.json.svg").exists()

    def test_explicit_out(self, instance_files, tmp_path):
        map_path, scen_path = instance_files
        target = tmp_path / "picture.svg"
        assert main(
            ["render", "--map", map_path, "--scen", scen_path, "--out", str(target)]
        ) == 0
        assert target.exists()


class TestUsage:
    def test_unknown_subcommand(self):
        with pytest.raises(SystemExit) as err:
            main(["paint"])
        assert err.value.code == 2

    def test_no_subcommand(self):
        with pytest.raises(SystemExit) as err:
            main([])
        assert err.value.code == 2
