"""File formats: grid maps, scenario JSON, solution JSON."""

import json

import pytest

from convoyplan.domain import (
    AgentSpec,
    GridMap,
    PathSegment,
    AgentPath,
    SlotRef,
    Solution,
    SolverStats,
    TaskSpec,
)
from convoyplan.io import (
    FormatError,
    load_instance,
    map_from_text,
    map_to_text,
    read_map,
    read_scenario,
    read_solution,
    scenario_from_text,
    scenario_to_text,
    solution_from_text,
    solution_to_text,
    write_map,
    write_scenario,
    write_solution,
)
from convoyplan.oracle import exhaustive_optimal

MAP_3X2 = "type octile\nheight 2\nwidth 3\nmap\n.@.\n...\n"


class TestMapFormat:
    def test_round_trip(self):
        grid = GridMap(5, 4, frozenset({(1, 1), (4, 0), (2, 3)}))
        assert map_from_text(map_to_text(grid)) == grid

    def test_first_row_is_top_of_grid(self):
        grid = map_from_text(MAP_3X2)
        # '@' sits in the first (top) row, so y = height-1 = 1
        assert grid.blocked == frozenset({(1, 1)})

    def test_terrain_aliases(self):
        grid = map_from_text("type octile\nheight 1\nwidth 4\nmap\n.GT@\n")
        assert grid.blocked == frozenset({(2, 0), (3, 0)})

    def test_write_read_file(self, tmp_path):
        grid = GridMap(3, 3, frozenset({(0, 0)}))
        path = tmp_path / "a.map"
        write_map(grid, path)
        assert read_map(path) == grid

    @pytest.mark.parametrize(
        "text,fragment",
        [
            ("type octile\nheight 2\n", "header truncated"),
            ("octile\nheight 1\nwidth 1\nmap\n.\n", "line 1"),
            ("type octile\nheight x\nwidth 1\nmap\n.\n", "lines 2-3"),
            ("type octile\nwidth 1\nheight 1\nmap\n.\n", "lines 2-3"),
            ("type octile\nheight 1\nwidth 1\ngrid\n.\n", "line 4"),
            ("type octile\nheight 3\nwidth 1\nmap\n.\n.\n", "expected 3 map rows"),
            ("type octile\nheight 2\nwidth 2\nmap\n..\n...\n", "line 6"),
            ("type octile\nheight 1\nwidth 3\nmap\n.#.\n", "column 2"),
        ],
    )
    def test_malformed_maps(self, text, fragment):
        with pytest.raises(FormatError) as err:
            map_from_text(text)
        assert fragment in str(err.value)


def sample_scenario():
    agents = (
        AgentSpec(0, (0, 0)),
        AgentSpec(1, (5, 5)),
        AgentSpec(2, (3, 0)),
        AgentSpec(3, (0, 5)),
    )
    tasks = (
        TaskSpec.from_configs(0, [(1, 1)], [(4, 1)]),
        TaskSpec.from_configs(1, [(2, 2), (2, 3)], [(4, 2), (4, 3)]),
        TaskSpec.from_configs(
            2,
            [(0, 4), (1, 4), (1, 5), (2, 5)],
            [(3, 2), (4, 2), (4, 3), (5, 3)],
        ),
    )
    return agents, tasks


class TestScenarioFormat:
    def test_round_trip_mixed_team_sizes(self):
        agents, tasks = sample_scenario()
        parsed_agents, parsed_tasks = scenario_from_text(scenario_to_text(agents, tasks))
        assert parsed_agents == agents
        assert parsed_tasks == tasks
        assert [t.k for t in parsed_tasks] == [1, 2, 4]

    def test_shape_rebuilt_from_starts(self):
        _, tasks = sample_scenario()
        text = scenario_to_text((), tasks)
        _, parsed = scenario_from_text(text)
        assert parsed[2].shape == tasks[2].shape
        assert parsed[2].shape[0] == (0, 0)

    def test_serialization_is_deterministic(self):
        agents, tasks = sample_scenario()
        assert scenario_to_text(agents, tasks) == scenario_to_text(agents, tasks)

    def test_compact_json_with_newline(self):
        agents, tasks = sample_scenario()
        text = scenario_to_text(agents, tasks)
        assert text.endswith("\n")
        assert ": " not in text and ", " not in text
        assert json.loads(text)

    def test_write_read_file(self, tmp_path):
        agents, tasks = sample_scenario()
        path = tmp_path / "a.scen.json"
        write_scenario(agents, tasks, path)
        assert read_scenario(path) == (agents, tasks)

    @pytest.mark.parametrize(
        "text,fragment",
        [
            ("[", "scenario JSON"),
            ("[]", "expected an object"),
            ('{"agents":[]}', "'tasks'"),
            ('{"agents":{},"tasks":[]}', "'agents'"),
            ('{"agents":[[0]],"tasks":[]}', "agents[0]"),
            ('{"agents":[[0,"y"]],"tasks":[]}', "agents[0]"),
            ('{"agents":[],"tasks":[[1]]}', "tasks[0]"),
            ('{"agents":[],"tasks":[{"k":1,"starts":[[0,0]]}]}', "'goals'"),
            (
                '{"agents":[],"tasks":[{"k":"1","starts":[[0,0]],"goals":[[1,0]]}]}',
                "tasks[0].k",
            ),
            (
                '{"agents":[],"tasks":[{"k":2,"starts":[[0,0]],"goals":[[1,0]]}]}',
                "length != k=2",
            ),
            (
                '{"agents":[],"tasks":[{"k":1,"starts":[[0,0]],"goals":[[1,0,2]]}]}',
                "goals[0]",
            ),
        ],
    )
    def test_malformed_scenarios(self, text, fragment):
        with pytest.raises(FormatError) as err:
            scenario_from_text(text)
        assert fragment in str(err.value)


class TestSolutionFormat:
    @pytest.fixture()
    def solved(self, pair_instance):
        sol = exhaustive_optimal(pair_instance)
        sol.stats.task_expansions = 7
        sol.stats.runtime_ms = 123.4
        return sol

    def test_round_trip(self, solved):
        status, parsed = solution_from_text(solution_to_text("solved", solved))
        assert status == "solved"
        assert parsed == solved
        assert parsed.stats.task_expansions == 7

    def test_runtime_excluded_for_reproducibility(self, solved):
        text = solution_to_text("solved", solved)
        assert "runtimeMs" not in text
        assert solution_to_text("solved", solved) == text

    def test_failure_file_has_stats_only(self):
        text = solution_to_text("timeout", None)
        data = json.loads(text)
        assert data["status"] == "timeout"
        assert "paths" not in data
        assert data["stats"]["nodesGenerated"] == 0
        status, solution = solution_from_text(text)
        assert status == "timeout"
        assert solution is None

    def test_write_read_file(self, tmp_path, solved):
        path = tmp_path / "a.sol.json"
        write_solution("solved", solved, path)
        status, parsed = read_solution(path)
        assert status == "solved"
        assert parsed == solved

    def test_segments_preserved(self, solved):
        _, parsed = solution_from_text(solution_to_text("solved", solved))
        for original, round_tripped in zip(solved.paths, parsed.paths):
            assert original.segments == round_tripped.segments
            assert original.completion == round_tripped.completion

    def test_handmade_solution_serializes(self):
        path = AgentPath(0, ((0, 0), (1, 0)), (PathSegment(0, 0, "idle"),))
        solution = Solution(((),), (path,), 0, SolverStats(status="solved"))
        status, parsed = solution_from_text(solution_to_text("solved", solution))
        assert parsed.paths[0].vertices == ((0, 0), (1, 0))
        assert parsed.assignments == ((),)

    def test_assignment_refs_preserved(self, solved):
        _, parsed = solution_from_text(solution_to_text("solved", solved))
        assert parsed.assignments == solved.assignments
        assert all(
            isinstance(ref, SlotRef) for refs in parsed.assignments for ref in refs
        )

    def test_malformed_solution(self):
        with pytest.raises(FormatError):
            solution_from_text("{]")
        with pytest.raises(FormatError):
            solution_from_text('{"soc":3}')


class TestLoadInstance:
    def test_compose(self, tmp_path):
        grid = GridMap(6, 6, frozenset({(3, 3)}))
        agents, tasks = sample_scenario()
        write_map(grid, tmp_path / "i.map")
        write_scenario(agents, tasks, tmp_path / "i.scen.json")
        inst = load_instance(tmp_path / "i.map", tmp_path / "i.scen.json")
        assert inst.grid == grid
        assert inst.agents == agents
        assert inst.tasks == tasks
