import json

import pytest
from click.testing import CliRunner

from gurag_reach.cli import main

from conftest import GOLDEN, MALFORMED


@pytest.fixture
def runner():
    return CliRunner()


def invoke(runner, *args, env=None):
    env = {"GURAG_REACH_COLOR": "0", **(env or {})}
    return runner.invoke(main, list(args), env=env, catch_exceptions=False)


def report(result):
    doc = json.loads(result.output)
    assert doc["schemaVersion"] == 1
    return doc


class TestClassify:
    def test_levels_and_flags(self, runner):
        res = invoke(runner, "classify", str(GOLDEN / "chain.gurag"))
        assert res.exit_code == 0
        doc = report(res)
        assert doc["level"] == "G0"
        assert doc["noNegation"] and doc["noDeletion"]

    def test_g1plus(self, runner):
        res = invoke(runner, "classify", str(GOLDEN / "srd_groups.gurag"))
        assert report(res)["level"] == "G1plus"


class TestSolve:
    def test_auto_picks_nonneg(self, runner):
        res = invoke(runner, "solve", str(GOLDEN / "chain.gurag"))
        assert res.exit_code == 0
        doc = report(res)
        assert doc["engine"] == "nonneg"
        assert doc["outcome"] == "reachable"
        assert doc["plan"][0] == "addU(r, a, v1)"
        assert "elapsedMs" not in doc

    def test_forced_bfs(self, runner):
        res = invoke(runner, "solve", str(GOLDEN / "chain.gurag"), "--engine", "bfs")
        doc = report(res)
        assert doc["engine"] == "bfs"
        assert doc["statesExplored"] > 0

    def test_unreachable_exit_code(self, runner, tmp_path):
        f = tmp_path / "u.gurag"
        f.write_text("attr a scope { x }\nrole r\nrules {\n}\n"
                     "query strict { e_a(u) = { x } }\n")
        res = invoke(runner, "solve", str(f))
        assert res.exit_code == 1
        assert report(res)["outcome"] == "unreachable"

    def test_bound_exceeded_exit_code(self, runner):
        res = invoke(runner, "solve", str(GOLDEN / "chain.gurag"),
                     "--engine", "bfs", "--max-depth", "2")
        assert res.exit_code == 2
        doc = report(res)
        assert doc["outcome"] == "bound-exceeded" and doc["bound"] == "depth"

    def test_restriction_violation_exit_code(self, runner):
        # roomadmin uses negation, so forcing the nonneg engine must refuse
        res = invoke(runner, "solve", str(GOLDEN / "roomadmin.gurag"),
                     "--engine", "nonneg")
        assert res.exit_code == 4

    def test_auto_falls_back_across_group_cycle(self, runner):
        res = invoke(runner, "solve", str(GOLDEN / "srd_cycle.gurag"))
        assert res.exit_code == 0
        doc = report(res)
        assert doc["engine"] == "srd+bfs"
        assert doc["outcome"] == "reachable"
        assert "group-cycle-discarded" in doc["notes"]

    def test_timing_opt_in(self, runner):
        res = invoke(runner, "solve", str(GOLDEN / "chain.gurag"), "--timing")
        assert "elapsedMs" in report(res)

    def test_missing_query_is_parse_error(self, runner):
        res = invoke(runner, "solve", str(GOLDEN / "bob.gurag"))
        assert res.exit_code == 3


class TestOracle:
    def test_pinned_anomaly_plan(self, runner):
        res = invoke(runner, "oracle", str(GOLDEN / "roomadmin.gurag"))
        assert res.exit_code == 0
        doc = report(res)
        assert doc["plan"] == [
            "assign(RoomAdmin, G1)",
            "addU(RoomAdmin, roomAcc, 1.02)",
            "addUG(RoomAdmin, G2, roomAcc, 2.01)",
        ]

    def test_kernel_selection_reported(self, runner):
        res = invoke(runner, "oracle", str(GOLDEN / "chain.gurag"),
                     "--kernel", "python")
        assert report(res)["kernel"] == "python"


class TestValidate:
    def test_valid_plan(self, runner):
        res = invoke(runner, "validate", str(GOLDEN / "empty.gurag"))
        assert res.exit_code == 0
        assert report(res)["verdict"] == "valid"

    def test_invalid_plan(self, runner, tmp_path):
        f = tmp_path / "bad.gurag"
        f.write_text("attr a scope { x }\nrole r\nrules {\n}\n"
                     "query strict { e_a(u) = { } }\n"
                     "plan { addU(r, a, x) }\n")
        res = invoke(runner, "validate", str(f))
        assert res.exit_code == 1
        doc = report(res)
        assert doc["verdict"] == "invalid"
        assert doc["failedAt"] == 0 and doc["reason"] == "no matching rule"

    def test_query_unsatisfied(self, runner, tmp_path):
        f = tmp_path / "u.gurag"
        f.write_text("attr a scope { x }\nrole r\nrules {\n}\n"
                     "query strict { e_a(u) = { x } }\nplan { }\n")
        res = invoke(runner, "validate", str(f))
        assert res.exit_code == 1
        assert report(res)["verdict"] == "query-unsatisfied"


class TestFmt:
    def test_canonical_check_passes_on_golden(self, runner):
        for path in sorted(GOLDEN.glob("*.gurag")):
            res = invoke(runner, "fmt", "--check", str(path))
            assert res.exit_code == 0, path.name

    def test_normalizes_messy_input(self, runner, tmp_path):
        f = tmp_path / "messy.gurag"
        f.write_text("role r\nattr a scope {y,x}   # comment\n")
        res = invoke(runner, "fmt", str(f))
        assert res.exit_code == 0
        assert res.output == "attr a scope { x, y }\nrole r\nuser { groups = { } }\nrules {\n}\n"

    def test_check_fails_on_non_canonical(self, runner, tmp_path):
        f = tmp_path / "messy.gurag"
        f.write_text("role r\nattr a scope { x }\n")
        res = invoke(runner, "fmt", "--check", str(f))
        assert res.exit_code == 1

    def test_in_place(self, runner, tmp_path):
        f = tmp_path / "messy.gurag"
        f.write_text("role r\nattr a scope { x }\n")
        res = invoke(runner, "fmt", "--in-place", str(f))
        assert res.exit_code == 0
        assert f.read_text().startswith("attr a scope { x }\n")

    def test_parse_error_exit_code_and_diagnostics(self, runner):
        path = MALFORMED / "m01.gurag"
        res = invoke(runner, "fmt", str(path))
        assert res.exit_code == 3
        # positioned diagnostic on stderr (CliRunner merges into output)
        assert ":2:" in res.output and "error" in res.output


class TestFuzzCommand:
    def test_runs_and_reports(self, runner):
        res = invoke(runner, "fuzz", "--class", "nonneg", "--count", "25")
        assert res.exit_code == 0
        doc = report(res)
        assert doc["total"] == 25 and doc["diverge"] == 0


def test_missing_file_is_parse_error(runner):
    res = invoke(runner, "solve", "no/such/file.gurag")
    assert res.exit_code == 3
