"""End-to-end command-line tests: every subcommand, exit codes, determinism."""

from __future__ import annotations

from datetime import datetime, timedelta, timezone

import pytest

from sentrade.cli import main

CALENDAR = """
timezone = America/New_York
open = 09:30
close = 16:00
"""

# tfw small enough that sixty synthetic sessions train and evaluate quickly
CONFIG = """
tfw_min = 10
tfw_max = 12
beta = 0.4
gamma = 0.0
"""


@pytest.fixture
def workspace(tmp_path):
    (tmp_path / "calendar.txt").write_text(CALENDAR, encoding="utf-8")
    (tmp_path / "run.cfg").write_text(CONFIG, encoding="utf-8")
    return tmp_path


def write_week_inputs(tmp_path):
    """Tick and bucket files for the trading week of 2012-03-05."""
    tick_rows = ["timestamp,price"]
    bucket_rows = ["bucket_start,positive,negative,neutral"]
    for day in range(5):  # Monday through Friday
        base = datetime(2012, 3, 5, tzinfo=timezone.utc) + timedelta(days=day)
        open_instant = base + timedelta(hours=15)  # 10:00 New York, EST
        close_instant = base + timedelta(hours=20, minutes=30)  # 15:30 New York
        tick_rows.append(f"{open_instant:%Y-%m-%dT%H:%M:%SZ},{100.0 + day!r}")
        tick_rows.append(f"{close_instant:%Y-%m-%dT%H:%M:%SZ},{100.5 + day!r}")
        bucket_rows.append(f"{open_instant + timedelta(hours=1):%Y-%m-%dT%H:%M:%SZ},5,3,1")
        bucket_rows.append(f"{close_instant + timedelta(hours=4, minutes=30):%Y-%m-%dT%H:%M:%SZ},2,7,0")
    (tmp_path / "ticks.csv").write_text("\n".join(tick_rows) + "\n", encoding="utf-8")
    (tmp_path / "buckets.csv").write_text("\n".join(bucket_rows) + "\n", encoding="utf-8")


def synth_sessions(tmp_path, name="data_", n=60, seed=7):
    code = main(
        ["synth", "--kind", "B", "--n", str(n), "--seed", str(seed), "--out", str(tmp_path / name)]
    )
    assert code == 0
    return tmp_path / f"{name}sessions.csv"


class TestUsageErrors:
    def test_no_command(self, capsys):
        assert main([]) == 1
        assert "error:" in capsys.readouterr().err

    def test_unknown_flag(self, capsys):
        assert main(["synth", "--kind", "B", "--n", "10", "--frobnicate"]) == 1

    def test_help_exits_zero(self, capsys):
        assert main(["--help"]) == 0
        assert "aggregate" in capsys.readouterr().out


class TestSynthCommand:
    def test_writes_deterministic_file(self, tmp_path, capsys):
        first = synth_sessions(tmp_path, "one_")
        second = synth_sessions(tmp_path, "two_")
        assert first.read_bytes() == second.read_bytes()
        assert "wrote 60 sessions" in capsys.readouterr().err

    def test_embeds_scenario_comment(self, tmp_path):
        path = synth_sessions(tmp_path, seed=3)
        first_line = path.read_text(encoding="utf-8").splitlines()[0]
        assert first_line.startswith("# synth kind=B")
        assert "seed=3" in first_line

    def test_invalid_scenario(self, tmp_path, capsys):
        code = main(["synth", "--kind", "A", "--n", "10", "--signal-strength", "2.0",
                     "--out", str(tmp_path / "x_")])
        assert code == 1
        assert "stationary" in capsys.readouterr().err


class TestAggregateCommand:
    def test_week_produces_nine_sessions(self, workspace, capsys):
        write_week_inputs(workspace)
        code = main(
            [
                "aggregate",
                "--prices", str(workspace / "ticks.csv"),
                "--sentiment", str(workspace / "buckets.csv"),
                "--calendar", str(workspace / "calendar.txt"),
                "--out", str(workspace / "agg_"),
            ]
        )
        assert code == 0
        assert "wrote 9 sessions" in capsys.readouterr().err
        lines = (workspace / "agg_sessions.csv").read_text(encoding="utf-8").splitlines()
        assert len(lines) == 10  # header plus nine sessions
        assert lines[0].startswith("index,kind,")
        assert lines[1].split(",")[1] == "day"
        assert lines[2].split(",")[1] == "night"

    def test_missing_prices_file(self, workspace, capsys):
        write_week_inputs(workspace)
        code = main(
            [
                "aggregate",
                "--prices", str(workspace / "absent.csv"),
                "--sentiment", str(workspace / "buckets.csv"),
                "--calendar", str(workspace / "calendar.txt"),
                "--out", str(workspace / "agg_"),
            ]
        )
        assert code == 2
        assert "absent.csv" in capsys.readouterr().err

    def test_bad_config_exits_one(self, workspace, capsys):
        write_week_inputs(workspace)
        (workspace / "bad.cfg").write_text("betta = 0.4\n", encoding="utf-8")
        code = main(
            [
                "aggregate",
                "--prices", str(workspace / "ticks.csv"),
                "--sentiment", str(workspace / "buckets.csv"),
                "--calendar", str(workspace / "calendar.txt"),
                "--config", str(workspace / "bad.cfg"),
                "--out", str(workspace / "agg_"),
            ]
        )
        assert code == 1
        assert "unknown key" in capsys.readouterr().err


class TestTrainCommand:
    def test_configured_params_become_singleton_search(self, workspace, capsys):
        sessions = synth_sessions(workspace)
        code = main(
            [
                "train",
                "--sessions", str(sessions),
                "--config", str(workspace / "run.cfg"),
                "--out", str(workspace / "t_"),
            ]
        )
        assert code == 0
        out = capsys.readouterr().out
        assert "beta = 0.4" in out
        assert "gamma = 0.0" in out
        training = (workspace / "t_training.csv").read_text(encoding="utf-8").splitlines()
        assert training[0] == "beta,gamma,train_return"
        assert len(training) == 2
        params = (workspace / "t_params.txt").read_text(encoding="utf-8")
        assert "beta = 0.4" in params

    def test_params_destination_flag(self, workspace):
        sessions = synth_sessions(workspace)
        code = main(
            [
                "train",
                "--sessions", str(sessions),
                "--config", str(workspace / "run.cfg"),
                "--out", str(workspace / "t_"),
                "--params", str(workspace / "chosen.txt"),
            ]
        )
        assert code == 0
        assert (workspace / "chosen.txt").exists()

    def test_series_too_short(self, workspace, capsys):
        sessions = synth_sessions(workspace, n=30)
        code = main(
            ["train", "--sessions", str(sessions), "--config", str(workspace / "run.cfg"),
             "--out", str(workspace / "t_")]
        )
        assert code == 2
        assert "at least" in capsys.readouterr().err


class TestBacktestCommand:
    def run_backtest(self, workspace, sessions, *extra):
        return main(
            [
                "backtest",
                "--sessions", str(sessions),
                "--config", str(workspace / "run.cfg"),
                "--out", str(workspace / "b_"),
                *extra,
            ]
        )

    def test_produces_reports(self, workspace, capsys):
        sessions = synth_sessions(workspace)
        assert self.run_backtest(workspace, sessions) == 0
        out = capsys.readouterr().out
        assert "strategy" in out and "hit_rate" in out
        predictions = (workspace / "b_predictions.csv").read_text(encoding="utf-8").splitlines()
        assert predictions[0] == "index,chosen_tfw,chosen_class,predicted_sign,realized_return,correct"
        assert len(predictions) == 1 + 60 - 18  # eval span after the 30% split
        report = (workspace / "b_report.csv").read_text(encoding="utf-8").splitlines()
        assert report[0].startswith("index,decision,step_pnl,")
        assert len(report) == len(predictions)

    def test_dump_models(self, workspace):
        sessions = synth_sessions(workspace)
        assert self.run_backtest(workspace, sessions, "--dump-models") == 0
        models = (workspace / "b_models.csv").read_text(encoding="utf-8").splitlines()
        assert models[0] == "window_end,tfw,variables,class,p_max,predicted_next,passed"
        assert len(models) > 1
        # every (session, window) pair carries one row per candidate
        assert (len(models) - 1) == (60 - 18) * 3 * 29

    def test_unset_params_exit_one(self, workspace, capsys):
        sessions = synth_sessions(workspace)
        (workspace / "bare.cfg").write_text("tfw_min = 10\ntfw_max = 12\n", encoding="utf-8")
        code = main(
            ["backtest", "--sessions", str(sessions), "--config", str(workspace / "bare.cfg"),
             "--out", str(workspace / "b_")]
        )
        assert code == 1
        assert "unset" in capsys.readouterr().err

    def test_params_file_overrides(self, workspace):
        sessions = synth_sessions(workspace)
        (workspace / "bare.cfg").write_text("tfw_min = 10\ntfw_max = 12\n", encoding="utf-8")
        (workspace / "p.txt").write_text("beta = 0.4\ngamma = 0.0\n", encoding="utf-8")
        code = main(
            ["backtest", "--sessions", str(sessions), "--config", str(workspace / "bare.cfg"),
             "--params", str(workspace / "p.txt"), "--out", str(workspace / "b_")]
        )
        assert code == 0

    def test_eval_span_too_short_exit_two(self, workspace, capsys):
        sessions = synth_sessions(workspace, n=40)
        (workspace / "p.txt").write_text("beta = 0.4\ngamma = 0.0\n", encoding="utf-8")
        # default windows reach 40, so the warm-up swallows all 40 sessions
        code = main(
            ["backtest", "--sessions", str(sessions), "--params", str(workspace / "p.txt"),
             "--out", str(workspace / "b_")]
        )
        assert code == 2
        assert "no sessions to evaluate" in capsys.readouterr().err

    def test_missing_sessions_file(self, workspace, capsys):
        code = self.run_backtest(workspace, workspace / "absent.csv")
        assert code == 2
        assert "absent.csv" in capsys.readouterr().err


class TestPipelineReproducibility:
    def test_train_then_backtest_is_byte_stable(self, workspace):
        sessions = synth_sessions(workspace)

        def run(prefix, threads):
            assert main(
                ["train", "--sessions", str(sessions), "--config", str(workspace / "run.cfg"),
                 "--threads", str(threads), "--out", str(workspace / prefix)]
            ) == 0
            assert main(
                ["backtest", "--sessions", str(sessions), "--config", str(workspace / "run.cfg"),
                 "--params", str(workspace / f"{prefix}params.txt"),
                 "--threads", str(threads), "--out", str(workspace / prefix)]
            ) == 0
            return {
                name: (workspace / f"{prefix}{name}").read_bytes()
                for name in ("training.csv", "params.txt", "predictions.csv", "report.csv")
            }

        first = run("r1_", threads=1)
        second = run("r2_", threads=1)
        threaded = run("r4_", threads=4)
        assert first == second
        assert first == threaded
