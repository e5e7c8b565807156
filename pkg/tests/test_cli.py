import subprocess
import sys

import pytest

from xgeoml.cli import main

SMALL = """\
io.input = data/dataset.csv
io.truth = data/truth.csv
io.output_dir = out
learner.kind = linear
kernel.kind = binary
kernel.k = 20
explain.pd.features = 0
"""


@pytest.fixture
def workdir(tmp_path, monkeypatch):
    monkeypatch.chdir(tmp_path)
    assert main(["synth", "--preset", "linear", "--grid-side", "12", "--out-dir", "data"]) == 0
    (tmp_path / "fit.cfg").write_text(SMALL)
    return tmp_path


def test_synth_full_size_and_repeatable(tmp_path):
    for name in ("a", "b"):
        assert main(["synth", "--preset", "nonlinear", "--seed", "42", "--out-dir", str(tmp_path / name)]) == 0
    lines = (tmp_path / "a" / "dataset.csv").read_text().splitlines()
    assert lines[0] == "id,cx,cy,x1,x2,x3,x4,y" and len(lines) == 901
    for f in ("dataset.csv", "truth.csv"):
        assert (tmp_path / "a" / f).read_bytes() == (tmp_path / "b" / f).read_bytes()


def test_synth_rejects_tiny_grid(tmp_path, capsys):
    assert main(["synth", "--grid-side", "1", "--out-dir", str(tmp_path)]) == 1
    assert "grid_side" in capsys.readouterr().err


def test_fit_writes_outputs(workdir):
    assert main(["fit", "fit.cfg"]) == 0
    out = workdir / "out"
    for f in ("attributions.csv", "predictions.csv", "pd.csv", "report.txt"):
        assert (out / f).exists()
    report = (out / "report.txt").read_text()
    r2 = float(next(line for line in report.splitlines() if line.startswith("result.loo_r2")).split("=")[1])
    assert r2 > 0.8
    assert "result.corr.lime.x1" in report and "kernel.k = 20" in report


def test_fit_rerun_from_report_is_identical(workdir):
    assert main(["fit", "fit.cfg"]) == 0
    first = (workdir / "out" / "attributions.csv").read_bytes()
    (workdir / "again.cfg").write_text((workdir / "out" / "report.txt").read_text())
    assert main(["fit", "again.cfg"]) == 0
    assert (workdir / "out" / "attributions.csv").read_bytes() == first


def test_fit_missing_dataset(workdir, capsys):
    (workdir / "bad.cfg").write_text(SMALL.replace("data/dataset.csv", "missing.csv"))
    assert main(["fit", "bad.cfg"]) == 1
    assert "missing.csv" in capsys.readouterr().err


def test_fit_unknown_key_fails_before_compute(workdir):
    (workdir / "bad.cfg").write_text(SMALL + "kernel.width = 3\n")
    assert main(["fit", "bad.cfg"]) == 1
    assert not (workdir / "out").exists()


def test_fit_compute_failure_exit_code(workdir):
    (workdir / "bad.cfg").write_text(SMALL + "kernel.bandwidth_mode = fixed\nkernel.b = 1\n")
    assert main(["fit", "bad.cfg"]) == 2


def test_fit_holdout_protocol(workdir):
    assert main(["fit", "fit.cfg", "--set", "eval.protocol=holdout"]) == 0
    assert "result.holdout.test_r2" in (workdir / "out" / "report.txt").read_text()


def test_scan_singleton_grid(workdir):
    cfg = SMALL + "scan.kinds = binary\nscan.modes = adaptive\nscan.grid.adaptive = 30\n"
    (workdir / "scan.cfg").write_text(cfg)
    assert main(["scan", "scan.cfg"]) == 0
    lines = (workdir / "out" / "scan.csv").read_text().splitlines()
    assert len(lines) == 2 and lines[1].startswith("binary,adaptive,30,")


def test_scan_six_panels(workdir):
    cfg = SMALL + "scan.grid.adaptive = 15,30,60\nscan.grid.fixed = 2,3,5\n"
    (workdir / "scan.cfg").write_text(cfg)
    assert main(["scan", "scan.cfg"]) == 0
    svg = (workdir / "out" / "scan.svg").read_text()
    assert svg.count('class="panel"') == 6 and svg.count("<polyline") == 6
    report = (workdir / "out" / "report.txt").read_text()
    assert report.count(".chosen = ") == 6


def test_render(workdir):
    assert main(["fit", "fit.cfg"]) == 0
    assert main(["render", "data/truth.csv", "--dataset", "data/dataset.csv", "--column", "beta_cosine",
                 "--out", "t.svg"]) == 0
    assert (workdir / "t.svg").read_text().count("<rect") == 144 + 1
    assert main(["render", "out/attributions.csv", "--dataset", "data/dataset.csv", "--feature", "x2",
                 "--explainer", "lime", "--out", "l.svg"]) == 0
    assert main(["render", "data/truth.csv", "--dataset", "data/dataset.csv", "--column", "nope",
                 "--out", "x.svg"]) == 1


def test_module_entry_point(tmp_path):
    proc = subprocess.run([sys.executable, "-m", "xgeoml", "synth", "--grid-side", "3", "--out-dir", str(tmp_path)],
                          capture_output=True, text=True)
    assert proc.returncode == 0
    assert (tmp_path / "dataset.csv").exists()
