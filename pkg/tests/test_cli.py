import json
import subprocess
import sys

import pytest

from isodmrg.cli import main
from isodmrg.presets import (
    FIG2_SHOT_LEVELS,
    FIG3_COMPARE_LATTICE,
    FIG3_LATTICES,
    FIGURES,
    reproduce,
)
from isodmrg.runner import RunConfig, load_config
from isodmrg.errors import ConfigError


def run_cli(args):
    return main(list(args))


BASE = [
    "run",
    "--lattice",
    "3x2",
    "--D",
    "2",
    "--g",
    "3.5",
    "--method",
    "exact",
    "--sweeps",
    "2",
    "--seed",
    "1",
]


class TestRunCommand:
    def test_exact_run_exits_zero_and_writes_artifacts(self, tmp_path, capsys):
        out = tmp_path / "run"
        code = run_cli(BASE + ["--out", str(out)])
        assert code == 0
        printed = capsys.readouterr().out
        assert "final_energy=" in printed
        assert "rel_error=" in printed
        csv_path = out / "sweep.csv"
        summary_path = out / "summary.json"
        assert csv_path.exists() and summary_path.exists()
        blob = json.loads(summary_path.read_text())
        assert blob["config"]["lattice_x"] == 3
        assert blob["config"]["method"] == "exact"
        assert blob["final_energy"] < 0

    def test_csv_has_one_row_per_step(self, tmp_path):
        out = tmp_path / "run"
        code = run_cli(
            [
                "run",
                "--lattice",
                "4x4",
                "--method",
                "exact",
                "--sweeps",
                "5",
                "--seed",
                "1",
                "--out",
                str(out),
            ]
        )
        assert code == 0
        lines = (out / "sweep.csv").read_text().strip().splitlines()
        # 2x4 tensor grid -> 8 steps per sweep, 5 sweeps
        assert len(lines) == 1 + 40

    def test_rerun_is_byte_identical(self, tmp_path):
        out_a, out_b = tmp_path / "a", tmp_path / "b"
        assert run_cli(BASE + ["--out", str(out_a)]) == 0
        assert run_cli(BASE + ["--out", str(out_b)]) == 0
        assert (out_a / "sweep.csv").read_bytes() == (out_b / "sweep.csv").read_bytes()

    def test_summary_json_reloads_as_config(self, tmp_path):
        out_a, out_b = tmp_path / "a", tmp_path / "b"
        assert run_cli(BASE + ["--out", str(out_a)]) == 0
        code = run_cli(
            ["run", "--config", str(out_a / "summary.json"), "--out", str(out_b)]
        )
        assert code == 0
        assert (out_a / "sweep.csv").read_bytes() == (out_b / "sweep.csv").read_bytes()

    def test_invalid_lattice_exits_config_error(self, tmp_path, capsys):
        code = run_cli(["run", "--lattice", "2x2", "--out", str(tmp_path / "x")])
        assert code == 2
        assert "error" in capsys.readouterr().err.lower()

    def test_invalid_method_exits_config_error(self, tmp_path):
        with pytest.raises(SystemExit):  # argparse choices rejection
            run_cli(["run", "--method", "magic", "--out", str(tmp_path / "x")])

    def test_guard_violation_exits_three(self, tmp_path, capsys):
        code = run_cli(
            [
                "run",
                "--lattice",
                "6x5",
                "--out",
                str(tmp_path / "x"),
            ]
        )
        assert code == 3
        assert "guard" in capsys.readouterr().err.lower()

    def test_malformed_config_file_exits_config_error(self, tmp_path, capsys):
        bad = tmp_path / "bad.json"
        bad.write_text("{not json")
        code = run_cli(["run", "--config", str(bad), "--out", str(tmp_path / "x")])
        assert code == 2

    def test_tomography_summary_echoes_shots(self, tmp_path):
        out = tmp_path / "run"
        code = run_cli(
            [
                "run",
                "--lattice",
                "3x3",
                "--method",
                "tomography",
                "--shots",
                "100000",
                "--sweeps",
                "1",
                "--seed",
                "2",
                "--out",
                str(out),
            ]
        )
        assert code == 0
        blob = json.loads((out / "summary.json").read_text())
        assert blob["shots_initial"] == 100000
        assert blob["config"]["shots"] == 100000
        assert blob["total_shots"] > 0


class TestPresets:
    def test_fig2_grid_has_four_curves(self):
        assert len(FIG2_SHOT_LEVELS) + 1 == 4
        assert FIG2_SHOT_LEVELS == (1000, 10000, 100000)

    def test_fig3_compares_on_a_common_lattice(self):
        assert FIG3_COMPARE_LATTICE in FIG3_LATTICES

    def test_unknown_figure_rejected(self, tmp_path):
        assert FIGURES == ("fig2", "fig3")
        with pytest.raises(ValueError):
            reproduce("fig9", tmp_path)


class TestConfigLoading:
    def test_round_trip(self):
        config = RunConfig(lattice_x=3, lattice_y=2, method="lanczos", krylov_k=4)
        assert RunConfig.from_dict(config.to_dict()) == config

    def test_rejects_unknown_fields(self):
        with pytest.raises(ConfigError):
            RunConfig.from_dict({"lattice_x": 3, "lattice_y": 2, "banana": 1})

    def test_rejects_non_power_of_two_bond(self):
        with pytest.raises(ConfigError):
            RunConfig(d=3)

    def test_rejects_narrow_lattice(self):
        with pytest.raises(ConfigError):
            RunConfig(lattice_x=2)

    def test_load_config_reports_line_numbers(self, tmp_path):
        bad = tmp_path / "bad.json"
        bad.write_text('{\n  "lattice_x": 3,\n  oops\n}\n')
        with pytest.raises(ConfigError) as err:
            load_config(str(bad))
        assert "line 3" in str(err.value)

    def test_overrides_win(self, tmp_path):
        path = tmp_path / "conf.json"
        path.write_text(json.dumps(RunConfig().to_dict()))
        config = load_config(str(path), overrides={"sweeps": 9})
        assert config.sweeps == 9


class TestConsoleScript:
    def test_module_invocation_prints_usage(self):
        proc = subprocess.run(
            [sys.executable, "-m", "isodmrg.cli", "--help"],
            capture_output=True,
            text=True,
        )
        assert proc.returncode == 0
        assert "run" in proc.stdout and "reproduce" in proc.stdout
