"""CLI: subcommand routing, exit codes, store-backed session workflow."""

import json

import pytest
from click.testing import CliRunner

from prefloop.cli import main


@pytest.fixture()
def runner():
    return CliRunner()


def invoke(runner, *args, **kwargs):
    return runner.invoke(main, list(args), catch_exceptions=False, **kwargs)


class TestRepoCommands:
    def test_validate_default(self, runner):
        result = invoke(runner, "repo", "validate", "default")
        assert result.exit_code == 0
        assert "28 features OK" in result.output

    def test_validate_default_json(self, runner):
        result = invoke(runner, "--json", "repo", "validate", "default")
        assert result.exit_code == 0
        assert json.loads(result.output) == {
            "ok": True, "features": 28, "dimensions": 8, "version": "1.0",
        }

    def test_validate_bad_file(self, runner, tmp_path):
        bad = tmp_path / "repo.json"
        bad.write_text('{"version": "x", "dimensions": ["d"], "features": []}')
        result = invoke(runner, "repo", "validate", str(bad))
        assert result.exit_code == 1


class TestUsageErrors:
    def test_unknown_subcommand_exits_2(self, runner):
        result = runner.invoke(main, ["frobnicate"])
        assert result.exit_code == 2

    def test_missing_required_option_exits_2(self, runner):
        result = runner.invoke(main, ["session", "new"])
        assert result.exit_code == 2


class TestSessionWorkflow:
    def test_new_feedback_next_prefs_close(self, runner, tmp_path):
        store = str(tmp_path / "sessions")
        result = invoke(
            runner, "--json", "session", "new",
            "--prompt", "a lighthouse on a cliff", "--seed", "42", "--store", store,
        )
        assert result.exit_code == 0
        sid = json.loads(result.output)["session_id"]

        result = invoke(
            runner, "session", "feedback", sid,
            "--like", "1", "--like", "2", "--dislike", "3", "--store", store,
        )
        assert result.exit_code == 0

        result = invoke(runner, "session", "next", sid, "--store", store)
        assert result.exit_code == 0

        result = invoke(runner, "session", "prefs", sid, "--store", store)
        assert result.exit_code == 0
        assert "ODDS RATIO" in result.output

        result = invoke(runner, "session", "regenerate", sid, "--store", store)
        assert result.exit_code == 0

        result = invoke(runner, "session", "show", sid, "--store", store)
        assert result.exit_code == 0
        assert "awaiting_feedback" in result.output

        result = invoke(runner, "session", "close", sid, "--store", store)
        assert result.exit_code == 0

    def test_feedback_in_wrong_phase_exits_1(self, runner, tmp_path):
        store = str(tmp_path / "sessions")
        result = invoke(
            runner, "--json", "session", "new",
            "--prompt", "a fox", "--seed", "1", "--store", store,
        )
        sid = json.loads(result.output)["session_id"]
        invoke(runner, "session", "feedback", sid, "--like", "1", "--dislike", "2",
               "--store", store)
        result = runner.invoke(
            main,
            ["--json", "session", "feedback", sid, "--like", "1", "--store", store],
        )
        assert result.exit_code == 1
        err = json.loads(result.output.strip().splitlines()[-1])
        assert err["error"] == "WrongPhaseError"

    def test_interactive_drives_one_round(self, runner, tmp_path):
        store = str(tmp_path / "sessions")
        result = invoke(
            runner, "session", "interactive",
            "--prompt", "a fox", "--seed", "3", "--store", store,
            input="ldlu\nq\n",
        )
        assert result.exit_code == 0
        assert "ODDS RATIO" in result.output


class TestSimCommand:
    def test_zero_trials_is_domain_error(self, runner):
        result = runner.invoke(main, ["sim", "run", "--trials", "0"])
        assert result.exit_code == 1

    def test_small_run_writes_report(self, runner, tmp_path):
        out = tmp_path / "report.json"
        profile = tmp_path / "profile.json"
        profile.write_text(json.dumps({
            "discrete_targets": {"visual_flow": "circular"},
            "ordinal_targets": {},
            "like_threshold": 0.5,
        }))
        result = invoke(
            runner, "sim", "run", "--profile", str(profile),
            "--rounds", "2", "--trials", "2", "--out", str(out), "--seed", "5",
        )
        assert result.exit_code == 0
        report = json.loads(out.read_text())
        assert report["trials"] == 2
        assert len(report["reports"]) == 2
        assert "summary" in report

    def test_http_backend_rejected_for_sims(self, runner):
        result = runner.invoke(
            main, ["sim", "run", "--backend", "http", "--trials", "1"]
        )
        assert result.exit_code == 1
