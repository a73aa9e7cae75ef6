import csv
import io
import json
import math
import subprocess
import sys

import numpy as np
import pytest

from assouad_spectra import cli, moran
from assouad_spectra.carpets import assouad_spectrum
from assouad_spectra.figures import FIG3_LEFT

FIG2 = FIG3_LEFT.to_dict()


def run_cli(tmp_path, *args, config=None):
    argv = list(args)
    if config is not None:
        path = tmp_path / "config.json"
        path.write_text(config if isinstance(config, str) else json.dumps(config))
        argv += ["--config", str(path)]
    out = tmp_path / "out"
    argv += ["--out", str(out)]
    return cli.main(argv), out


def read_csv(path):
    rows = list(csv.reader(io.StringIO(path.read_text())))
    return rows[0], np.array(rows[1:], dtype=float)


def sig_digits(text):
    mantissa = text.lstrip("-").split("e")[0].replace(".", "").lstrip("0")
    return len(mantissa)


def test_carpet_subcommand(tmp_path):
    status, out = run_cli(tmp_path, "carpet", "--grid", "99", config=FIG2)
    assert status == 0
    header, data = read_csv(out / "assouad.csv")
    assert header == ["theta", "value"] and data.shape == (99, 2)
    for theta, value in data[::10]:
        assert value == pytest.approx(assouad_spectrum(FIG3_LEFT, theta), abs=1e-11)
    summary = json.loads((out / "summary.json").read_text())
    assert summary["transition"] == pytest.approx(math.log(2) / math.log(3), abs=1e-11)
    assert json.loads((out / "lower.json").read_text())["kind"] == "lower"


def test_twelve_significant_digits(tmp_path):
    status, out = run_cli(tmp_path, "carpet", "--grid", "7", config=FIG2)
    assert status == 0
    for line in (out / "assouad.csv").read_text().splitlines()[1:]:
        assert all(sig_digits(cell) <= 12 for cell in line.split(","))


def test_deterministic_outputs(tmp_path):
    a = tmp_path / "a"
    b = tmp_path / "b"
    a.mkdir(), b.mkdir()
    for where in (a, b):
        status, out = run_cli(where, "percolation", "--depth", "7", "--trials", "4", "--seed", "5")
        assert status == 0
    for name in ("percolation.json", "per_trial.csv"):
        assert (a / "out" / name).read_bytes() == (b / "out" / name).read_bytes()


def test_malformed_json_writes_nothing(tmp_path):
    status, out = run_cli(tmp_path, "carpet", config="{not json")
    assert status == 2
    assert not out.exists()


@pytest.mark.parametrize(
    "sub, payload",
    [
        ("carpet", {"m": 3, "n": 2, "rects": [[0, 0], [1, 1]]}),
        ("carpet", {"m": 2, "n": 3, "rects": [[0, 0], [0, 0]]}),
        ("carpet", [1, 2]),
        ("ifs", {"maps": [{"r": 1.5, "a": 0}]}),
        ("tails", {"periodic": {"q": 0, "residues": []}}),
        ("moran", {"c": {"constant": 0.5}, "N": {"nonsense": 1}}),
    ],
)
def test_invalid_payload_exit_2(tmp_path, sub, payload):
    status, out = run_cli(tmp_path, sub, config=payload)
    assert status == 2
    assert not out.exists()


def test_missing_config_exit_2(tmp_path):
    assert run_cli(tmp_path, "carpet")[0] == 2
    assert run_cli(tmp_path)[0] == 2


def test_resource_cap_exit_3(tmp_path):
    payload = {"maps": [{"r": 0.5, "a": 0.0}, {"r": 0.3, "a": 0.7}], "caps": {"word_cap": 10}}
    status, out = run_cli(tmp_path, "ifs", "--t", "estimate", config=payload)
    assert status == 3
    assert not out.exists()


def test_verify_pass_and_fail(tmp_path):
    status, out = run_cli(tmp_path, "verify", "pressure")
    assert status == 0
    assert json.loads((out / "report.json").read_text())["passed"] is True
    # a carpet whose extremal column grows beyond the level cap cannot be checked
    status, _ = run_cli(tmp_path, "verify", "carpet", config={**FIG2, "caps": {"level_cap": 4}})
    assert status == 3


def test_verify_failure_exit_4(tmp_path, monkeypatch):
    monkeypatch.setitem(cli.VERIFIERS, "pressure", lambda config: {"check": "pressure", "passed": False})
    status, out = run_cli(tmp_path, "verify", "pressure")
    assert status == 4
    assert json.loads((out / "report.json").read_text())["passed"] is False


def test_verify_carpet_report(tmp_path):
    status, out = run_cli(tmp_path, "verify", "carpet")
    assert status == 0
    check = json.loads((out / "report.json").read_text())["checks"][0]
    assert abs(check["oracle_slope"] - check["closed_form"]) <= 0.05
    assert abs(check["symbolic_slope"] - check["closed_form"]) <= 0.05


def test_ifs_bound_and_assert(tmp_path):
    payload = {"maps": [{"r": 0.5, "a": 0.0}, {"r": 0.5, "a": 0.0}, {"r": 0.25, "a": 0.75}], "upper_box": 1.0}
    status, out = run_cli(tmp_path, "ifs", "--t", "0.9", "--assert", "wsp", "--theta-grid", "9", config=payload)
    assert status == 0
    report = json.loads((out / "ifs.json").read_text())
    assert report["t_source"] == "user" and report["t"] == 0.9
    _, bound = read_csv(out / "bound.csv")
    assert np.all(bound[:, 1] <= 1.0 + 1e-12) and bound.shape == (9, 2)
    _, asserted = read_csv(out / "spectrum.csv")
    assert np.all(asserted[:, 1] == 1.0)


def test_tails_subcommand(tmp_path):
    status, out = run_cli(tmp_path, "tails", config={"periodic": {"q": 3, "residues": [0]}, "K": 600, "lambda": [1.5, 2]})
    assert status == 0
    data = json.loads((out / "tails.json").read_text())
    assert data["exact"]["exact"] == "1/3"
    assert data["inequality_check"]["ok"] is True
    assert [row["lambda"] for row in data["tail"]] == [1.5, 2]


def test_moran_subcommand(tmp_path):
    payload = {"c": {"constant": 0.5}, "N": {"recipe": {"t": 0.5, "lambda": 2.0, "f_base": 8}}, "K": 400, "tail_fraction": 0.875}
    status, out = run_cli(tmp_path, "moran", "--grid", "4", config=payload)
    assert status == 0
    _, data = read_csv(out / "assouad.csv")
    assert data.shape == (4, 2)
    # past the transition at 1/lambda the recipe spectrum is flat at t
    assert data[-1, 1] == pytest.approx(moran.recipe_spectrum(0.5, 2.0, 0.8), abs=0.05)


def test_moran_length_cap(tmp_path):
    payload = {"c": {"constant": 0.5}, "N": {"recipe": {"t": 0.5, "lambda": 2.0}}, "K": 10_000, "caps": {"max_length": 1000}}
    assert run_cli(tmp_path, "moran", config=payload)[0] == 3


@pytest.mark.parametrize("name, count", [("fig3", 4), ("fig4", 2), ("fig6", 6)])
def test_figure_bundles(tmp_path, name, count):
    status, out = run_cli(tmp_path, "--figure", name, "--grid", "19")
    assert status == 0
    files = sorted(out.iterdir())
    assert len(files) == count
    for path in files:
        header, data = read_csv(path)
        assert header == ["theta", "value", "envelope_lo", "envelope_hi"]
        assert np.all(data[:, 2] <= data[:, 1] + 1e-9) and np.all(data[:, 1] <= data[:, 3] + 1e-9)


def test_atomic_write_leaves_no_temp(tmp_path):
    cli.write_atomic(tmp_path / "x" / "a.txt", "one\n")
    cli.write_atomic(tmp_path / "x" / "a.txt", "two\n")
    assert [p.name for p in (tmp_path / "x").iterdir()] == ["a.txt"]
    assert (tmp_path / "x" / "a.txt").read_text() == "two\n"


def test_console_entry_point(tmp_path):
    proc = subprocess.run(
        [sys.executable, "-m", "assouad_spectra.cli", "verify", "gw", "--out", str(tmp_path)],
        capture_output=True, text=True, check=False,
    )
    assert proc.returncode == 0, proc.stderr
    assert json.loads((tmp_path / "report.json").read_text())["checks"][0]["max_relative_error"] == 0
