"""Command-line interface tests: config handling, artifacts, manifests,
error paths, and sweep aggregation.  Short horizons keep these fast; the
physics itself is graded elsewhere.
"""
import json
import math

import pytest

from diffesc.cli import EXIT_FAILURE, EXIT_OK, EXIT_USAGE, main

SHORT_ESC = """
[scenario]
kind = esc
duration = {duration}
record_every = 10
snapshot_every = {snapshot}

[map]
y_star = 5.0
theta_star = 2.0
curvature = -2.0

[dither]
amplitude = {amplitude}
frequency = 10.0

[gains]
K = 0.2
corner = 10.0

[actuator]
length = 1.0
nodes = 51
dt = 0.001
scheme = {scheme}
diffusion = {diffusion}
"""


def write_cfg(tmp_path, name="run.cfg", duration=2.0, amplitude=0.2, snapshot=0,
              scheme="crank_nicolson", diffusion=1.0, extra=""):
    path = tmp_path / name
    text = SHORT_ESC.format(duration=duration, amplitude=amplitude, snapshot=snapshot,
                            scheme=scheme, diffusion=diffusion)
    path.write_text(text + extra)
    return path


class TestDesignDither:
    def test_prints_constants_and_table(self, capsys):
        assert main(["design-dither", "--a", "0.2", "--omega", "10", "--L", "1"]) == EXIT_OK
        out = capsys.readouterr().out
        assert "A   = 0.134816" in out
        assert "phi = -1.439606" in out
        assert "a*sin(wt)" in out

    def test_amplitude_doubles_phase_fixed(self, capsys):
        main(["design-dither", "--a", "0.2", "--omega", "10", "--L", "1"])
        first = capsys.readouterr().out
        main(["design-dither", "--a", "0.4", "--omega", "10", "--L", "1"])
        second = capsys.readouterr().out

        def grab(text, key):
            line = next(l for l in text.splitlines() if l.startswith(key))
            return float(line.split("=")[1].split()[0])

        assert grab(second, "A") == pytest.approx(2 * grab(first, "A"), abs=5e-6)
        assert grab(second, "phi") == grab(first, "phi")

    def test_rejects_nonpositive(self, capsys):
        assert main(["design-dither", "--a", "-0.2", "--omega", "10", "--L", "1"]) == EXIT_USAGE
        assert "positive" in capsys.readouterr().err


class TestRun:
    def test_empty_config_is_usage_error(self, tmp_path, capsys):
        cfg = tmp_path / "empty.cfg"
        cfg.write_text("")
        assert main(["run", "--config", str(cfg), "--out", str(tmp_path / "o")]) == EXIT_USAGE
        assert "empty" in capsys.readouterr().err

    def test_missing_config_is_usage_error(self, tmp_path):
        assert main(["run", "--config", "no_such_thing", "--out", str(tmp_path)]) == EXIT_USAGE

    def test_forbidden_gain_rejected_with_message(self, tmp_path, capsys):
        cfg = write_cfg(tmp_path, extra=f"\n[average]\nK_bar = {-math.pi**2/4!r}\n")
        # force the average path to read K_bar by making it an average scenario
        text = cfg.read_text().replace("kind = esc", "kind = average")
        cfg.write_text(text)
        rc = main(["run", "--config", str(cfg), "--out", str(tmp_path / "o")])
        assert rc == EXIT_USAGE
        assert "singular value" in capsys.readouterr().err

    def test_esc_run_writes_artifacts_and_manifest(self, tmp_path):
        cfg = write_cfg(tmp_path, snapshot=200)
        out = tmp_path / "out"
        assert main(["run", "--config", str(cfg), "--out", str(out)]) == EXIT_OK
        for name in ("trajectory.csv", "field.csv", "report.txt", "manifest.json",
                     "output.svg", "control.svg", "input.svg", "dither.svg", "field.svg"):
            assert (out / name).is_file(), name
        manifest = json.loads((out / "manifest.json").read_text())
        listed = {f["name"] for f in manifest["files"]}
        actual = {p.name for p in out.iterdir() if p.name != "manifest.json"}
        assert listed == actual
        assert not (out / ".failed").exists()

    def test_rerun_reproduces_identical_checksums(self, tmp_path):
        cfg = write_cfg(tmp_path)
        out1, out2 = tmp_path / "o1", tmp_path / "o2"
        assert main(["run", "--config", str(cfg), "--out", str(out1)]) == EXIT_OK
        assert main(["run", "--config", str(cfg), "--out", str(out2)]) == EXIT_OK
        m1 = json.loads((out1 / "manifest.json").read_text())["files"]
        m2 = json.loads((out2 / "manifest.json").read_text())["files"]
        assert m1 == m2

    def test_nonunit_diffusion_rejected_for_esc(self, tmp_path, capsys):
        cfg = write_cfg(tmp_path, diffusion=0.5)
        assert main(["run", "--config", str(cfg), "--out", str(tmp_path / "o")]) == EXIT_USAGE
        assert "diffusion" in capsys.readouterr().err

    def test_runtime_failure_writes_failed_marker(self, tmp_path):
        # explicit scheme with a step far beyond its stability bound fails
        # inside the run, after the output directory exists
        cfg = write_cfg(tmp_path, scheme="explicit_euler")
        out = tmp_path / "o"
        assert main(["run", "--config", str(cfg), "--out", str(out)]) == EXIT_FAILURE
        assert (out / ".failed").is_file()
        assert "unstable" in (out / ".failed").read_text()

    def test_average_run_artifacts(self, tmp_path):
        assert main(["run", "--config", "average_system", "--out", str(tmp_path / "avg")]) == EXIT_OK
        report = (tmp_path / "avg" / "report.txt").read_text()
        assert "fitted_decay_rate" in report
        rate = float(next(l for l in report.splitlines()
                          if l.startswith("fitted_decay_rate")).split(":")[1])
        assert rate > 0.5

    def test_gain_probe_reports_growth(self, tmp_path):
        assert main(["run", "--config", "gain_probe", "--out", str(tmp_path / "probe")]) == EXIT_OK
        report = (tmp_path / "probe" / "report.txt").read_text()
        rate = float(next(l for l in report.splitlines()
                          if l.startswith("fitted_decay_rate")).split(":")[1])
        assert rate < 0.0


class TestSweep:
    def test_single_value_marked_inconclusive(self, tmp_path):
        cfg = write_cfg(tmp_path, duration=2.0)
        out = tmp_path / "sweep"
        rc = main(["sweep", "--config", str(cfg), "--param", "a",
                   "--values", "0.2", "--out", str(out)])
        assert rc == EXIT_OK
        report = (out / "sweep_report.txt").read_text()
        assert "scaling_inconclusive: True" in report

    def test_bad_parameter_rejected(self, tmp_path, capsys):
        cfg = write_cfg(tmp_path)
        rc = main(["sweep", "--config", str(cfg), "--param", "c",
                   "--values", "1,2,3", "--out", str(tmp_path / "s")])
        assert rc == EXIT_USAGE

    def test_gain_sweep_isolates_forbidden_runs(self, tmp_path):
        # K = pi^2/8 makes the derived compensator gain land on a singular
        # value; that run must fail while the others complete
        cfg = write_cfg(tmp_path, duration=2.0)
        out = tmp_path / "gain_sweep"
        bad_K = math.pi**2 / 8.0
        rc = main(["sweep", "--config", str(cfg), "--param", "K",
                   "--values", f"0.2,{bad_K!r}", "--out", str(out)])
        assert rc == EXIT_OK
        report = (out / "sweep_report.txt").read_text()
        assert "values_completed: 0.2" in report
        assert "values_failed: " in report and "none" not in report.split("values_failed:")[1].splitlines()[0]
        assert (out / "K_0.2" / "trajectory.csv").is_file()

    def test_amplitude_sweep_aggregates(self, tmp_path):
        cfg = write_cfg(tmp_path, duration=4.0)
        out = tmp_path / "amp"
        rc = main(["sweep", "--config", str(cfg), "--param", "a",
                   "--values", "0.2,0.1,0.05", "--out", str(out)])
        assert rc == EXIT_OK
        report = (out / "sweep_report.txt").read_text()
        assert "output_residual_exponent" in report
        for a in ("0.2", "0.1", "0.05"):
            assert (out / f"a_{a}" / "manifest.json").is_file()


def test_usage_without_command_returns_usage_code():
    assert main([]) == EXIT_USAGE
