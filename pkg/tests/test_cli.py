import csv
import json
import shutil
import subprocess
import sys

import pytest

from superlase.cli import main
from superlase.runner import CSV_COLUMNS

BASE = "[atoms]\nn = 1e5\n[pump]\neta = 3k\n"
SWEEP = BASE + "[sweep]\neta_min = 300\neta_max = 3k\npoints_per_decade = 3\n"


def run(tmp_path, text, command, name="out"):
    cfg = tmp_path / f"{name}.cfg"
    cfg.write_text(text)
    out = tmp_path / name
    return main([command, "--config", str(cfg), "--out", str(out)]), out


class TestUsage:
    def test_unknown_command(self, tmp_path, capsys):
        assert main(["dance", "--config", "x"]) == 1

    def test_missing_config_file(self, tmp_path):
        assert main(["steady", "--config", str(tmp_path / "nope.cfg")]) == 1

    def test_bad_config_reports_line(self, tmp_path, capsys):
        rc, _ = run(tmp_path, BASE + "[cavity]\nloss = 3\n", "steady")
        assert rc == 1
        assert "line 6" in capsys.readouterr().err

    def test_bad_threads(self, tmp_path):
        cfg = tmp_path / "a.cfg"
        cfg.write_text(BASE)
        assert main(["steady", "--config", str(cfg), "--threads", "0"]) == 1

    @pytest.mark.skipif(shutil.which("superlase") is None, reason="entry point not installed")
    def test_console_script(self, tmp_path):
        proc = subprocess.run(["superlase", "bogus"], capture_output=True, text=True)
        assert proc.returncode == 1


class TestCommands:
    def test_steady(self, tmp_path):
        rc, out = run(tmp_path, BASE, "steady")
        assert rc == 0
        data = json.loads((out / "steady.json").read_text())
        assert data["schema_version"] == 1 and data["command"] == "steady"
        assert data["converged"] and 1e2 < data["n_photon"] < 1e4

    def test_linewidth_triangle(self, tmp_path):
        rc, out = run(tmp_path, BASE, "linewidth")
        assert rc == 0
        data = json.loads((out / "linewidth.json").read_text())
        reg = data["linewidth_hz_regression"]
        assert data["linewidth_hz_analytic"] == pytest.approx(reg, rel=0.1)
        assert data["linewidth_hz_filter"] == pytest.approx(reg, rel=0.1)

    def test_pulling(self, tmp_path):
        text = BASE.replace("3k", "5k") + "[raman]\nratio = 10\n"
        rc, out = run(tmp_path, text, "pulling")
        assert rc == 0
        data = json.loads((out / "pulling.json").read_text())
        assert 0.95 <= data["c_p_two_photon"] <= 1.05

    def test_sweep_columns(self, tmp_path):
        rc, out = run(tmp_path, SWEEP, "sweep")
        assert rc == 0
        with open(out / "sweep.csv", newline="") as fh:
            rows = list(csv.reader(fh))
        assert tuple(rows[0]) == CSV_COLUMNS
        assert len(rows) == 1 + 4
        assert all(r[CSV_COLUMNS.index("converged")] == "true" for r in rows[1:])
        summary = json.loads((out / "sweep_summary.json").read_text())
        assert len(summary["thresholds_hz"]) == 1

    def test_sweep_json_and_svg(self, tmp_path):
        rc, out = run(tmp_path, SWEEP + "[output]\nformat = json\n", "sweep", "j")
        assert rc == 0
        data = json.loads((out / "sweep.json").read_text())
        assert data["columns"] == list(CSV_COLUMNS) and len(data["rows"]) == 4
        rc, out = run(tmp_path, SWEEP + "[output]\nformat = svg\n", "sweep", "s")
        assert rc == 0
        assert (out / "sweep.svg").read_text().lstrip().startswith("<?xml")


@pytest.mark.property
def test_csv_determinism(tmp_path):
    _, a = run(tmp_path, SWEEP, "sweep", "a")
    _, b = run(tmp_path, SWEEP, "sweep", "b")
    assert (a / "sweep.csv").read_bytes() == (b / "sweep.csv").read_bytes()


def test_module_invocation(tmp_path):
    proc = subprocess.run([sys.executable, "-m", "superlase.cli", "--help"],
                          capture_output=True, text=True)
    assert proc.returncode == 0
    assert "steady" in proc.stdout
