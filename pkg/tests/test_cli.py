import json

import numpy as np
import pytest

from qtur.cli import build_parser, main, _resolve


def run(argv):
    return main(argv)


class TestHelpCoverage:
    def test_every_flag_is_documented(self):
        parser = build_parser()
        subparsers = next(
            a for a in parser._actions if a.__class__.__name__ == "_SubParsersAction"
        )
        assert set(subparsers.choices) == {"simulate", "activity", "sweep", "check-bound"}
        for name, sub in subparsers.choices.items():
            for action in sub._actions:
                assert action.help, f"{name}: {action.dest} lacks help text"

    def test_help_exits_cleanly(self, capsys):
        with pytest.raises(SystemExit) as exc:
            main(["simulate", "--help"])
        assert exc.value.code == 0
        assert "--n-traj" in capsys.readouterr().out


class TestSimulate:
    def test_happy_path_writes_stats(self, tmp_path, capsys):
        out = tmp_path / "stats.json"
        code = run(
            [
                "simulate", "--mode", "jump", "--preset", "rabi", "--delta", "1",
                "--omega", "1", "--kappa", "1", "--nu", "1", "--tau", "1",
                "--n-traj", "1000", "--seed", "7", "--dt", "1e-3",
                "--output", str(out),
            ]
        )
        assert code == 0
        payload = json.loads(out.read_text())
        assert payload["n_traj"] == 1000
        assert payload["variance"] > 0
        assert len(payload["mean_state"]) == 2

    def test_missing_model_file_names_path(self, tmp_path, capsys):
        code = run(["simulate", "--mode", "jump", "--model", str(tmp_path / "nope.json"),
                    "--tau", "0.5", "--n-traj", "100", "--output", str(tmp_path / "s.json")])
        assert code == 1
        assert "nope.json" in capsys.readouterr().err

    def test_single_trajectory_rejected(self, tmp_path, capsys):
        code = run(["simulate", "--mode", "jump", "--tau", "0.5", "--n-traj", "1",
                    "--output", str(tmp_path / "s.json")])
        assert code == 1
        assert "at least 2" in capsys.readouterr().err

    def test_homodyne_mode_with_dump(self, tmp_path):
        out = tmp_path / "stats.json"
        dump = tmp_path / "records.csv"
        code = run(["simulate", "--mode", "homodyne", "--tau", "0.2", "--n-traj", "50",
                    "--seed", "3", "--dt", "1e-3", "--output", str(out), "--dump", str(dump)])
        assert code == 0
        assert dump.read_text().startswith("trajectory_id,Z")

    def test_deterministic_output_bytes(self, tmp_path):
        args = ["simulate", "--mode", "jump", "--tau", "0.3", "--n-traj", "200",
                "--seed", "5", "--dt", "1e-3"]
        a, b = tmp_path / "a.json", tmp_path / "b.json"
        assert run(args + ["--output", str(a)]) == 0
        assert run(args + ["--output", str(b)]) == 0
        assert a.read_bytes() == b.read_bytes()


class TestActivity:
    def test_feedback_on_and_off(self, tmp_path):
        for nu in ("0", "1"):
            out = tmp_path / f"act{nu}.json"
            code = run(["activity", "--mode", "jump", "--delta", "1", "--omega", "1",
                        "--kappa", "1", "--nu", nu, "--tau", "1", "--output", str(out)])
            assert code == 0
            assert json.loads(out.read_text())["B"] > 0

    def test_asymptotic_dark_state(self, tmp_path):
        out = tmp_path / "asym.json"
        code = run(["activity", "--mode", "jump", "--delta", "0", "--omega", "0",
                    "--kappa", "1", "--nu", "0", "--tau", "1", "--asymptotic",
                    "--initial-state", "excited", "--output", str(out)])
        assert code == 0
        payload = json.loads(out.read_text())
        assert abs(payload["asymptotic"]["a_term"]) <= 1e-12
        assert abs(payload["asymptotic"]["rate"]) <= 1e-9

    def test_coarse_dtheta_fails_convergence(self, tmp_path, capsys):
        code = run(["activity", "--mode", "jump", "--tau", "1", "--dtheta", "0.3",
                    "--output", str(tmp_path / "x.json")])
        assert code == 3
        err = capsys.readouterr().err
        assert "ratio" in err

    def test_asymptotic_rejected_for_homodyne(self, tmp_path, capsys):
        code = run(["activity", "--mode", "homodyne", "--tau", "1", "--asymptotic",
                    "--output", str(tmp_path / "x.json")])
        assert code == 1
        assert "jump mode" in capsys.readouterr().err


class TestSweep:
    def test_small_sweep_summary_and_determinism(self, tmp_path, capsys):
        base = ["sweep", "--points", "2", "--n-traj", "200", "--seed", "3",
                "--dt", "2e-3", "--tau-range", "0.2", "0.5", "--reference-nu", "0"]
        a, b = tmp_path / "a.csv", tmp_path / "b.csv"
        assert run(base + ["--output", str(a)]) == 0
        out = capsys.readouterr().out
        assert "points=2" in out and "satisfied=" in out and "reference-violations=" in out
        assert run(base + ["--output", str(b)]) == 0
        assert a.read_bytes() == b.read_bytes()

    def test_zero_points_rejected(self, tmp_path, capsys):
        code = run(["sweep", "--points", "0", "--output", str(tmp_path / "x.csv")])
        assert code == 1
        assert "at least 1" in capsys.readouterr().err

    def test_json_format(self, tmp_path):
        out = tmp_path / "sweep.json"
        code = run(["sweep", "--points", "1", "--n-traj", "150", "--seed", "4",
                    "--dt", "2e-3", "--tau-range", "0.2", "0.3", "--format", "json",
                    "--output", str(out)])
        assert code == 0
        assert isinstance(json.loads(out.read_text()), list)


class TestCheckBound:
    def test_satisfied_point_exits_zero(self, tmp_path, capsys):
        out = tmp_path / "check.json"
        code = run(["check-bound", "--mode", "jump", "--delta", "1", "--omega", "1",
                    "--kappa", "1", "--nu", "1", "--tau", "1", "--n-traj", "2000",
                    "--seed", "1", "--dt", "1e-3", "--output", str(out)])
        assert code == 0
        assert "satisfied=true" in capsys.readouterr().out
        assert json.loads(out.read_text())["satisfied"] is True

    def test_degenerate_point_reports_error(self, tmp_path, capsys):
        code = run(["check-bound", "--mode", "jump", "--delta", "0", "--omega", "0",
                    "--kappa", "1", "--nu", "0", "--tau", "1", "--n-traj", "100",
                    "--seed", "1"])
        assert code == 1
        assert "indistinguishable from zero" in capsys.readouterr().err


class TestConfigPrecedence:
    def test_flags_override_config_over_defaults(self, tmp_path):
        config = tmp_path / "config.json"
        config.write_text(json.dumps({"tau": 0.4, "n_traj": 400, "seed": 12}))
        out = tmp_path / "stats.json"
        code = run(["simulate", "--mode", "jump", "--config", str(config),
                    "--tau", "0.6", "--dt", "1e-3", "--output", str(out)])
        assert code == 0
        payload = json.loads(out.read_text())
        assert payload["tau"] == 0.6
        assert payload["n_traj"] == 400

    def test_unknown_config_keys_rejected(self, tmp_path, capsys):
        config = tmp_path / "config.json"
        config.write_text(json.dumps({"bogus": 1}))
        code = run(["simulate", "--config", str(config), "--output", "x.json"])
        assert code == 1
        assert "bogus" in capsys.readouterr().err

    def test_threads_environment_fallback(self, monkeypatch):
        parser = build_parser()
        monkeypatch.setenv("QTUR_THREADS", "3")
        cfg = _resolve(parser.parse_args(["simulate"]))
        assert cfg["threads"] == 3
        cfg = _resolve(parser.parse_args(["simulate", "--threads", "2"]))
        assert cfg["threads"] == 2
        monkeypatch.delenv("QTUR_THREADS")
        cfg = _resolve(parser.parse_args(["simulate"]))
        assert cfg["threads"] == 1
