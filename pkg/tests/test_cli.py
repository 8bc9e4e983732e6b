import csv
import json

import pytest

from needlet_whittle.bandsim import noise_free_spectrum, read_spectrum_csv, write_spectrum_csv
from needlet_whittle.cli import ConfigError, main, parse_real, resolve_config
from needlet_whittle.estimator import estimate_needlet
from needlet_whittle.spectrum import SpectrumModel


def run(capsys, *argv):
    code = main(list(argv))
    out, err = capsys.readouterr()
    return code, out, err


def test_parse_real():
    assert parse_real("2^(1/8)") == pytest.approx(2 ** 0.125)
    assert parse_real("2^0.5") == pytest.approx(2**0.5)
    assert parse_real(3) == 3.0
    assert parse_real("1.5") == 1.5
    for bad in ("two", True, None):
        with pytest.raises(ConfigError):
            parse_real(bad)


def test_table1_default_grid(capsys):
    code, out, _ = run(capsys, "table1")
    assert code == 0
    rows = list(csv.DictReader(out.splitlines()))
    assert len(rows) == 12
    cell = next(r for r in rows if float(r["B"]) == pytest.approx(2**0.5) and float(r["alpha0"]) == 3)
    assert float(cell["b2d"]) == pytest.approx(10.77, abs=0.01)
    # machine CSV keeps full precision
    assert len(cell["rho2"].replace(".", "").lstrip("0")) >= 15


def test_table1_human_and_out(capsys, tmp_path):
    code, out, _ = run(capsys, "table1", "--B", "2", "--alpha0", "2", "--human")
    assert code == 0 and "16.6" in out
    code, _, _ = run(capsys, "table1", "--B", "2", "--alpha0", "3", "--out", str(tmp_path))
    text = (tmp_path / "table1.csv").read_text()
    assert text.startswith("# needlet_whittle:") and "# config:" in text


@pytest.mark.parametrize("argv", [["table1", "--B"], ["table1", "--alpha0"], ["table1", "--B", "0.5"], []])
def test_table1_usage_errors(capsys, argv):
    assert run(capsys, *argv)[0] == 2


def write_config(tmp_path, data, name="c.json"):
    p = tmp_path / name
    p.write_text(json.dumps(data) if not isinstance(data, str) else data)
    return str(p)


BASE = {"B": 2, "L": [128], "alpha0": [3], "replications": 20, "seed": 1,
        "estimators": ["needlet_full", "needlet_narrow", "fourier_full", "fourier_narrow"]}


def test_simulate_dry_run_round_trip(capsys, tmp_path):
    code, out, _ = run(capsys, "simulate", "--config", write_config(tmp_path, BASE), "--dry-run")
    assert code == 0
    resolved = json.loads(out)
    code, out2, _ = run(capsys, "simulate", "--config", write_config(tmp_path, resolved, "r.json"), "--dry-run")
    assert code == 0 and json.loads(out2) == resolved
    assert resolve_config(resolved).to_dict() == resolved


def test_simulate_outputs(capsys, tmp_path):
    cfg = write_config(tmp_path, {**BASE, "alpha0": [2, 3]})
    out = tmp_path / "out"
    code, _, _ = run(capsys, "simulate", "--config", cfg, "--out", str(out), "--seed", "9", "--threads", "2")
    assert code == 0
    manifest = json.loads((out / "manifest.json").read_text())
    assert manifest["seed"] == 9 and manifest["config"]["seed"] == 9
    lines = (out / "summary.csv").read_text().splitlines()
    assert lines[1] == "# seed: 9"
    rows = list(csv.DictReader([l for l in lines if not l.startswith("#")]))
    assert len(rows) == 8
    reps = [l for l in (out / "replications.csv").read_text().splitlines() if not l.startswith("#")]
    assert len(reps) == 1 + 2 * 20 * 4


@pytest.mark.parametrize(
    "data, message",
    [
        ('{"B": 2, "L": [128]\n "alpha0": 3}', "line 2"),
        ({"B": 2, "alpha0": 3}, "'L'"),
        ({**BASE, "B": 1}, "B"),
        ({**BASE, "L": [128, "x"]}, "L[1]"),
        ({**BASE, "estimators": ["bogus"]}, "estimators"),
        ({**BASE, "replications": 1}, "replications"),
        ({**BASE, "colour": 1}, "unknown"),
        ({**BASE, "model": {"form": "kappa", "kapa": 1}}, "model"),
        ({**BASE, "narrow": {"J1": 9}}, "narrow band"),
        ({**BASE, "estimator": {"alpha_range": [3, 2]}}, "estimator"),
    ],
)
def test_simulate_config_errors(capsys, tmp_path, data, message):
    code, _, err = run(capsys, "simulate", "--config", write_config(tmp_path, data), "--dry-run")
    assert code == 2
    assert message in err


def test_simulate_missing_file(capsys, tmp_path):
    assert run(capsys, "simulate", "--config", str(tmp_path / "nope.json"))[0] == 2


def test_dump_then_estimate_matches_in_process(capsys, tmp_path):
    path = tmp_path / "s.csv"
    code, _, _ = run(capsys, "dump-spectrum", "--alpha0", "3", "--L", "256", "--seed", "4", "--out", str(path))
    assert code == 0
    code, out, _ = run(capsys, "estimate", str(path), "--B", "2", "--fourier", "--narrow-J1", "4")
    assert code == 0
    report = json.loads(out)
    direct = estimate_needlet(read_spectrum_csv(path), 2.0)
    assert report["needlet_full"]["alpha_hat"] == direct.alpha_hat
    assert report["predicted_sd"] > 0
    assert {"needlet_narrow", "fourier_full"} <= set(report)


def test_estimate_noise_free(capsys, tmp_path):
    path = tmp_path / "clean.csv"
    write_spectrum_csv(noise_free_spectrum(SpectrumModel(3.0), 512), path)
    code, out, _ = run(capsys, "estimate", str(path), "--B", "2^(1/2)")
    assert code == 0
    assert json.loads(out)["needlet_full"]["alpha_hat"] == pytest.approx(3.0, abs=1e-4)


def test_estimate_reports_gaps(capsys, tmp_path):
    p = tmp_path / "gap.csv"
    p.write_text("l,cl_hat\n" + "".join(f"{l},{l**-3.0}\n" for l in range(1, 200) if l != 77))
    code, _, err = run(capsys, "estimate", str(p), "--B", "2")
    assert code == 2 and "missing multipoles [77]" in err


def test_estimate_insufficient_range(capsys, tmp_path):
    p = tmp_path / "short.csv"
    p.write_text("l,cl_hat\n1,1.0\n2,0.1\n3,0.03\n")
    assert run(capsys, "estimate", str(p), "--B", "2")[0] == 2


def test_dump_spectrum_stdout_and_config(capsys, tmp_path):
    code, out, _ = run(capsys, "dump-spectrum", "--alpha0", "2", "--L", "10", "--kappa", "1")
    assert code == 0 and out.count("\n") == 10 + 1 + 3
    cfg = write_config(tmp_path, BASE)
    code, out, _ = run(capsys, "dump-spectrum", "--config", cfg)
    assert code == 0 and "# seed: 1" in out
    assert run(capsys, "dump-spectrum")[0] == 2
