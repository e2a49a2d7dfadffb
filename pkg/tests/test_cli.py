import json
import subprocess
import sys

import pytest

from bergzeros import cli


def run(argv, capsys):
    code = cli.run(argv)
    out, err = capsys.readouterr()
    return code, out, err


def test_kernel_prints_closed_and_truncated(capsys):
    code, out, _ = run(["kernel", "--model", "fock", "--p", "7", "--z", "1.3,-0.4"], capsys)
    lines = dict(line.split(" ", 1) for line in out.splitlines())
    assert code == 0
    assert lines["closed_form"] == "7"
    assert abs(float(lines["truncated"]) - 7) < 1e-11


def test_missing_field(capsys):
    code, _, err = run(["kernel", "--p", "2"], capsys)
    assert code == 2 and err.startswith("config.missing_field")


def test_unknown_subcommand(capsys):
    code, _, err = run(["bogus"], capsys)
    assert code == 2 and err.startswith("config.")


def test_domain_error(capsys):
    code, _, err = run(["kernel", "--model", "disc", "--z", "1.5,0"], capsys)
    assert code == 2 and "domain" in err


def test_calibrate(capsys):
    code, out, _ = run(["calibrate"], capsys)
    assert code == 0
    lines = out.splitlines()
    assert len(lines) >= 8 and all(line.startswith("PASS") for line in lines)


def test_density(capsys):
    code, out, _ = run(["density", "--model", "disc", "--z", "0,0"], capsys)
    vals = dict(line.split() for line in out.splitlines())
    assert code == 0 and abs(float(vals["closed_form"]) - float(vals["finite_difference"])) < 1e-5


def test_zeros_single_sample(capsys, tmp_path):
    out_name = str(tmp_path / "z")
    code, out, _ = run(["zeros", "--p", "2", "--radius", "1.0", "--seed", "3", "--out", out_name], capsys)
    d = json.loads((tmp_path / "z.report.json").read_text())
    assert code == 0 and d["validation"]["status"] == "VALID"
    assert d["version"] and d["provenance"] == {"seed": 3, "stream": 0}


def test_experiment_outputs(capsys, tmp_path):
    name = str(tmp_path / "h")
    code, out, _ = run(["hole", "--p-list", "1,4", "--trials", "2000", "--seed", "1", "--out", name], capsys)
    assert code == 0
    rep = json.loads((tmp_path / "h.report.json").read_text())
    assert rep["kind"] == "hole" and rep["provenance"]["version"]
    assert (tmp_path / "h.table.csv").read_text().startswith("p,estimate")


def test_unresolved_exit_code(capsys, tmp_path):
    name = str(tmp_path / "u")
    code, _, err = run(["hole", "--p-list", "36", "--trials", "200", "--out", name], capsys)
    assert code == 3 and "unresolved" in err
    assert (tmp_path / "u.report.json").exists()


def test_config_file_and_dump(capsys, tmp_path):
    cfg = tmp_path / "c.json"
    cfg.write_text(json.dumps({"kind": "zero_count", "p": 3, "trials": 10}))
    code, out, _ = run(["zeros", "--trials", "10", "--dump-config"], capsys)
    assert code == 0 and json.loads(out)["kind"] == "zero_count"
    code, out, _ = run(["densitymap", "--config", str(cfg)], capsys)
    assert code == 2
    cfg.write_text(json.dumps({"kind": "density_map", "p": 3, "trials": 10, "extra": 1}))
    code, _, err = run(["densitymap", "--config", str(cfg)], capsys)
    assert code == 2 and err.startswith("config.unknown_key")
    cfg.write_text(json.dumps({"kind": "density_map", "p": 3, "trials": 0}))
    code, out, _ = run(["densitymap", "--config", str(cfg), "--dump-config", "--trials", "5"], capsys)
    d = json.loads(out)
    assert d["p"] == 3 and d["trials"] == 5


def test_io_error(capsys):
    code, _, err = run(["kernel", "--z", "0,0", "--out", "/nonexistent/dir/x"], capsys)
    assert code == 4 and err.startswith("io.error")


def test_toeplitz_and_semiclassical(capsys):
    code, out, _ = run(["toeplitz", "--symbol", "gauss", "--N", "10", "--show", "2"], capsys)
    vals = dict(line.split() for line in out.splitlines())
    assert code == 0 and float(vals["lambda_0"]) == pytest.approx(0.5)
    code, out, _ = run(["semiclassical", "--symbol", "gauss", "--x", "0,0"], capsys)
    vals = dict(line.split() for line in out.splitlines())
    assert float(vals["b2"]) == pytest.approx(3.0) and vals["vanishing"] == "ORDER0"


def test_module_entry_point():
    res = subprocess.run([sys.executable, "-m", "bergzeros", "--version"], capture_output=True, text=True)
    assert res.returncode == 0 and res.stdout.strip()
