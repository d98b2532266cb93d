import csv
import json
import subprocess
import sys
from pathlib import Path

import pytest

from renormvol.cli import main

CONFIGS = Path(__file__).resolve().parent.parent / "configs"


def _write(tmp_path, text, name="run.ini"):
    p = tmp_path / name
    p.write_text(text)
    return str(p)


def _record(out):
    return json.loads((Path(out) / "result.json").read_text())


def test_verify_unit_sphere_passes(tmp_path):
    out = tmp_path / "o"
    assert main(["--config", str(CONFIGS / "sphere_verify.ini"), "--out", str(out)]) == 0
    rec = _record(out)
    assert set(rec) == {"config_echo", "fields", "globals", "checks"}
    assert all(c["pass"] for c in rec["checks"])
    assert {"name", "residual", "tol", "pass"} <= set(rec["checks"][0])
    assert rec["config_echo"]["surface"]["preset"] == "sphere"


def test_compute_fields_and_determinism(tmp_path):
    cfg = str(CONFIGS / "sphere_verify.ini")
    assert main(["compute", "--config", cfg, "--out", str(tmp_path / "a")]) == 0
    assert main(["compute", "--config", cfg, "--out", str(tmp_path / "b")]) == 0
    a = (tmp_path / "a" / "result.json").read_bytes()
    assert a == (tmp_path / "b" / "result.json").read_bytes()
    rec = json.loads(a)
    for name in ("H", "Lo2", "R", "phi_0", "phi_1", "obstruction", "v_1", "v_2"):
        assert len(rec["fields"][name]) == 64
    assert rec["globals"]["energy"] == pytest.approx(-6.283185307179586, abs=1e-12)


def test_check_failure_exit_code(tmp_path):
    code = main(["--config", str(CONFIGS / "s3_geodesic_sphere.ini"), "--out", str(tmp_path), "--tol-scale", "1e-6"])
    assert code == 1
    rec = _record(tmp_path)
    failed = [c for c in rec["checks"] if not c["pass"]]
    assert failed and all("module" in c for c in failed)


@pytest.mark.parametrize(
    "text",
    [
        "[run]\ncommand = compute\n[surface]\npreset = blob\n",
        "[run]\ncommand = compute\n[surface]\npreset = geodesic-sphere\n",
        "[run]\ncommand = vary\n[surface]\npreset = sphere\n",
        "[run]\ncommand = sweep\n[sweep]\nstart = 0.5\n",
    ],
)
def test_config_errors_exit_2(tmp_path, text):
    assert main(["--config", _write(tmp_path, text), "--out", str(tmp_path)]) == 2


def test_missing_config_exit_2(tmp_path):
    assert main(["--config", str(tmp_path / "nope.ini")]) == 2


def test_probe_writes_csv(tmp_path):
    assert main(["--config", str(CONFIGS / "ball_probe.ini"), "--out", str(tmp_path)]) == 0
    with open(tmp_path / "probe.csv") as fh:
        rows = list(csv.reader(fh))
    assert rows[0] == ["eps", "volume"]
    assert len(rows) == 25


def test_anomaly_command(tmp_path):
    assert main(["--config", str(CONFIGS / "ellipsoid_anomaly.ini"), "--out", str(tmp_path)]) == 0
    g = _record(tmp_path)["globals"]
    assert g["difference"] < 1e-9
    assert "min_area_anomaly" in g


def test_small_sweep(tmp_path):
    text = "[run]\ncommand = sweep\n[sweep]\nstart = 1.2\nstop = 2.0\ncount = 5\nrefine = false\n"
    assert main(["--config", _write(tmp_path, text), "--out", str(tmp_path), "--threads", "2"]) == 0
    with open(tmp_path / "sweep.csv") as fh:
        rows = list(csv.reader(fh))
    assert rows[0] == ["t", "energy", "oracle"]
    assert len(rows) == 6


def test_collar_export_and_import(tmp_path):
    base = "[run]\ncommand = compute\n[surface]\npreset = torus\ngrid = 32, 32\n"
    assert main(["--config", _write(tmp_path, base + "[output]\ncollar = collar.json\n"), "--out", str(tmp_path)]) == 0
    first = _record(tmp_path)["globals"]["energy"]
    collar = tmp_path / "collar.json"
    assert collar.exists()
    text = base + f"collar = {collar}\n"
    assert main(["--config", _write(tmp_path, text, "imp.ini"), "--out", str(tmp_path / "imp")]) == 0
    assert _record(tmp_path / "imp")["globals"]["energy"] == first


def test_homogeneous_verify(tmp_path):
    assert main(["--config", str(CONFIGS / "homogeneous_n4.ini"), "--out", str(tmp_path)]) == 0


def test_module_entry_point(tmp_path):
    proc = subprocess.run(
        [sys.executable, "-m", "renormvol", "--config", str(CONFIGS / "sphere_verify.ini"), "--out", str(tmp_path)],
        capture_output=True,
        text=True,
    )
    assert proc.returncode == 0
    assert "PASS renvol.round_sphere_energy" in proc.stderr


def test_failed_self_test_stops_the_run(tmp_path, monkeypatch):
    from renormvol import cli

    monkeypatch.setattr(cli, "indicial_self_test", lambda: ["n=3, k=1: broken"])
    assert main(["--config", str(CONFIGS / "sphere_verify.ini"), "--out", str(tmp_path)]) == 1
    rec = _record(tmp_path)
    assert rec["checks"][0]["name"] == "yamabe.indicial" and not rec["checks"][0]["pass"]
    assert "broken" in rec["globals"]["indicial_problems"]
