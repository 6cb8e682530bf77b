"""Config loading, dispatch exit codes, and artifact contracts."""

import json
import os
import subprocess
import sys

import pytest

from diskvort.cli import ConfigError, dispatch, load_config


MINIMAL = "[solver]\nnu = 0.25\n"

SMALL_RUN = """\
[domain]
K = 2
J = 2

[solver]
nu = 0.1
dt = 0.005
t_final = 0.05

[init]
kind = random
seed = 42

[output]
every = 2
"""


def write(tmp_path, text, name="run.ini"):
    p = tmp_path / name
    p.write_text(text)
    return p


def outdir_files(outdir):
    found = []
    for root, _, names in os.walk(outdir):
        for n in names:
            full = os.path.join(root, n)
            found.append(os.path.relpath(full, outdir))
    return set(found)


class TestLoadConfig:
    def test_minimal_config_applies_defaults(self, tmp_path):
        cfg = load_config(write(tmp_path, MINIMAL))
        assert cfg.nu == 0.25
        assert (cfg.K, cfg.J) == (8, 8)
        assert cfg.dt == 1e-3 and cfg.t_final == 1.0
        assert cfg.init_modes == (((0, 1, "cos"), 1.0),)
        assert cfg.init_seed is None
        assert cfg.output_every == 10

    def test_negative_nu_named(self, tmp_path):
        path = write(tmp_path, "[solver]\nnu = -1\n")
        with pytest.raises(ConfigError, match="nu must be > 0"):
            load_config(path)

    def test_unknown_keys_rejected(self, tmp_path):
        path = write(tmp_path, "[solver]\nnu = 0.1\nviscosity = 2\n[extra]\nx = 1\n")
        with pytest.raises(ConfigError) as exc:
            load_config(path)
        text = str(exc.value)
        assert "unknown key 'viscosity' in [solver]" in text
        assert "unknown section [extra]" in text

    def test_parse_error_carries_line_number(self, tmp_path):
        path = write(tmp_path, "nu = 0.1\n[solver]\n")
        with pytest.raises(ConfigError, match="line"):
            load_config(path)

    def test_range_violations_reported_together(self, tmp_path):
        path = write(
            tmp_path,
            "[solver]\nnu = -2\ndt = -0.1\n[output]\nevery = 0\n",
        )
        with pytest.raises(ConfigError) as exc:
            load_config(path)
        assert len(exc.value.problems) >= 2

    def test_seed_mandatory_for_random(self, tmp_path):
        path = write(tmp_path, "[solver]\nnu = 0.1\n[init]\nkind = random\n")
        with pytest.raises(ConfigError, match="seed is mandatory"):
            load_config(path)

    def test_seed_rejected_for_mode_init(self, tmp_path):
        path = write(tmp_path, "[solver]\nnu = 0.1\n[init]\nseed = 3\n")
        with pytest.raises(ConfigError, match="only meaningful"):
            load_config(path)

    def test_malformed_modes(self, tmp_path):
        path = write(tmp_path, "[solver]\nnu = 0.1\n[init]\nmodes = 0 1 cos\n")
        with pytest.raises(ConfigError, match="k j parity amplitude"):
            load_config(path)
        path = write(tmp_path, "[solver]\nnu = 0.1\n[init]\nmodes = 0 1 up 1.0\n")
        with pytest.raises(ConfigError, match="parity"):
            load_config(path)

    def test_cfl_violation_rejected_before_stepping(self, tmp_path):
        path = write(
            tmp_path,
            "[domain]\nK = 4\nJ = 8\n[solver]\nnu = 0.1\ndt = 0.05\nt_final = 0.2\n"
            "[init]\nmodes = 4 8 cos 40.0\n",
        )
        with pytest.raises(ConfigError, match="stability bound"):
            load_config(path)
        # the same data passes at a small enough step
        ok = write(
            tmp_path,
            "[domain]\nK = 4\nJ = 8\n[solver]\nnu = 0.1\ndt = 0.001\nt_final = 0.2\n"
            "[init]\nmodes = 4 8 cos 40.0\n",
            name="ok.ini",
        )
        assert load_config(ok).dt == 0.001

    def test_missing_file(self, tmp_path):
        with pytest.raises(ConfigError, match="cannot read"):
            load_config(tmp_path / "absent.ini")


class TestDispatch:
    def test_unknown_subcommand_exits_2(self, capsys):
        assert dispatch(["frobnicate"]) == 2
        assert "invalid choice" in capsys.readouterr().err

    def test_unknown_flag_exits_2(self, capsys):
        assert dispatch(["spectrum", "--nope"]) == 2

    def test_help_exits_0(self, capsys):
        assert dispatch(["--help"]) == 0
        assert "spectrum" in capsys.readouterr().out

    def test_config_error_exits_2(self, tmp_path, capsys):
        path = write(tmp_path, "[solver]\nnu = -1\n")
        code = dispatch(["ns", "--config", str(path), "--outdir", str(tmp_path / "o")])
        assert code == 2
        assert "nu must be > 0" in capsys.readouterr().err

    def test_bad_thread_count_exits_2(self, capsys):
        assert dispatch(["--threads", "0", "spectrum"]) == 2

    def test_thread_flag_sets_environment(self, tmp_path, monkeypatch, capsys):
        for var in (
            "OMP_NUM_THREADS",
            "OPENBLAS_NUM_THREADS",
            "MKL_NUM_THREADS",
            "NUMEXPR_NUM_THREADS",
        ):
            monkeypatch.setenv(var, "sentinel")
        code = dispatch(
            ["--threads", "2", "spectrum", "--K", "0", "--J", "1", "--outdir", str(tmp_path)]
        )
        assert code == 0
        assert os.environ["OMP_NUM_THREADS"] == "2"
        assert os.environ["OPENBLAS_NUM_THREADS"] == "2"


class TestSpectrumCommand:
    def test_json_table_and_pin(self, tmp_path, capsys):
        code = dispatch(["spectrum", "--K", "4", "--J", "4", "--outdir", str(tmp_path)])
        assert code == 0
        payload = json.loads(capsys.readouterr().out)
        assert len(payload["modes"]) >= 24
        smallest = min(m["lambda"] for m in payload["modes"])
        assert abs(smallest - 14.6819706) / 14.6819706 <= 1e-6
        on_disk = json.loads((tmp_path / "eigenvalues.json").read_text())
        assert on_disk == payload

    def test_rejects_bad_sizes(self, tmp_path, capsys):
        assert dispatch(["spectrum", "--J", "0", "--outdir", str(tmp_path)]) == 2


class TestRunArtifacts:
    def test_manifest_lifecycle_and_no_orphans(self, tmp_path):
        cfg = write(tmp_path, SMALL_RUN)
        out = tmp_path / "out"
        assert dispatch(["ns", "--config", str(cfg), "--outdir", str(out)]) == 0
        man = json.loads((out / "manifest.json").read_text())
        assert man["status"] == "completed"
        assert man["subcommand"] == "ns"
        assert man["seed"] == 42
        assert man["wall_clock_s"] > 0
        # defaults echoed alongside explicit values
        assert man["parameters"]["solver"]["cfl"] == 0.5
        assert man["parameters"]["output"]["every"] == 2
        assert outdir_files(out) == set(man["files"]) | {"manifest.json"}

    def test_rerun_same_seed_byte_identical(self, tmp_path):
        cfg = write(tmp_path, SMALL_RUN)
        a, b = tmp_path / "a", tmp_path / "b"
        assert dispatch(["ns", "--config", str(cfg), "--outdir", str(a)]) == 0
        assert dispatch(["ns", "--config", str(cfg), "--outdir", str(b)]) == 0
        assert (a / "trajectory.csv").read_bytes() == (b / "trajectory.csv").read_bytes()

    def test_csv_carries_17_significant_digits(self, tmp_path):
        cfg = write(tmp_path, SMALL_RUN)
        out = tmp_path / "out"
        dispatch(["ns", "--config", str(cfg), "--outdir", str(out)])
        lines = (out / "trajectory.csv").read_text().splitlines()
        cell = lines[2].split(",")[1]
        assert f"{float(cell):.17g}" == cell

    def test_snapshots_at_cadence(self, tmp_path):
        cfg = write(tmp_path, SMALL_RUN + "snapshot_every = 3\n")
        out = tmp_path / "out"
        assert dispatch(["ns", "--config", str(cfg), "--outdir", str(out)]) == 0
        man = json.loads((out / "manifest.json").read_text())
        snaps = sorted(f for f in man["files"] if f.startswith("snapshots/"))
        assert snaps == ["snapshots/state_000000.csv", "snapshots/state_000003.csv"]
        header, first = (out / snaps[0]).read_text().splitlines()[:2]
        assert header == "k,j,parity,coeff"
        assert first.split(",")[2] in ("cos", "sin")

    def test_crashed_run_leaves_running_manifest(self, tmp_path, monkeypatch):
        import diskvort.solver

        def boom(cfg, ctx=None):
            raise RuntimeError("induced failure")

        monkeypatch.setattr(diskvort.solver, "run", boom)
        cfg = write(tmp_path, SMALL_RUN)
        out = tmp_path / "out"
        with pytest.raises(RuntimeError, match="induced"):
            dispatch(["ns", "--config", str(cfg), "--outdir", str(out)])
        man = json.loads((out / "manifest.json").read_text())
        assert man["status"] == "running"
        assert man["wall_clock_s"] is None

    def test_stokes_runs_without_cfl_guard(self, tmp_path):
        # linear runs take any dt; the advective bound applies to ns only
        cfg = write(
            tmp_path,
            "[domain]\nK = 2\nJ = 2\n[solver]\nnu = 0.1\ndt = 0.05\nt_final = 0.2\n"
            "[init]\nmodes = 2 2 cos 40.0\n",
        )
        out = tmp_path / "out"
        assert dispatch(["stokes", "--config", str(cfg), "--outdir", str(out)]) == 0


class TestCheckCommands:
    def test_biot_savart_check(self, tmp_path, capsys):
        assert dispatch(["biot-savart-check", "--outdir", str(tmp_path)]) == 0
        report = json.loads((tmp_path / "report.json").read_text())
        assert report["newtonian-agreement"]["passed"]
        assert report["green-equivalence"]["passed"]

    def test_annulus_verify(self, tmp_path, capsys):
        assert dispatch(["annulus-verify", "--outdir", str(tmp_path)]) == 0
        out = capsys.readouterr().out
        assert out.count("PASS") == 5
        assert (tmp_path / "circulation.csv").exists()

    def test_accept_subset(self, tmp_path, capsys):
        assert dispatch(["accept", "--only", "1,5", "--outdir", str(tmp_path)]) == 0
        report = json.loads((tmp_path / "report.json").read_text())
        assert report["all_passed"]
        assert [r["number"] for r in report["results"]] == [1, 5]

    def test_accept_rejects_bad_selection(self, tmp_path, capsys):
        assert dispatch(["accept", "--only", "abc", "--outdir", str(tmp_path)]) == 2
        assert dispatch(["accept", "--only", "0,13", "--outdir", str(tmp_path)]) == 2


class TestPressureCommand:
    def test_reports_residual(self, tmp_path, capsys):
        cfg = write(
            tmp_path,
            "[domain]\nK = 2\nJ = 4\n[solver]\nnu = 0.1\ndt = 0.005\nt_final = 0.05\n"
            "[init]\nmodes = 0 1 cos 0.4 ; 2 1 cos 0.25\n[output]\nevery = 1\n",
        )
        out = tmp_path / "out"
        assert dispatch(["pressure", "--config", str(cfg), "--outdir", str(out)]) == 0
        report = json.loads((out / "report.json").read_text())
        assert report["momentum_residual"] < 0.1
        assert (out / "pressure.csv").read_text().startswith("r,theta,p")


def test_console_entry_point():
    proc = subprocess.run(
        [sys.executable, "-m", "diskvort.cli", "--help"],
        capture_output=True,
        text=True,
    )
    assert proc.returncode == 0
    assert "spectrum" in proc.stdout and "accept" in proc.stdout
