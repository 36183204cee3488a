import csv
import io
import json
import subprocess
import sys

import numpy as np
import pytest

from gcpmotion import cli
from gcpmotion.cli import PRESETS, RunConfig, main
from gcpmotion.errors import ConfigError, NumericalError
from gcpmotion.law import MotionParams, interior_density_closed, limiting_density


def run_cli(capsys, *argv):
    code = main(list(argv))
    out, err = capsys.readouterr()
    return code, out, err


def read_csv(text):
    rows = list(csv.reader(io.StringIO(text)))
    return rows[0], np.array(rows[1:], dtype=float) if len(rows) > 1 else np.empty((0, len(rows[0])))


def test_fig3_left_curves(capsys):
    code, out, _ = run_cli(capsys, "--preset", "fig3a", "--grid", "41")
    assert code == 0
    header, data = read_csv(out)
    assert header[:2] == ["series", "lambda1"]
    s = data[:, 0]
    assert set(s) == {0, 1, 2}
    for k, lam in zip(range(3), (1, 2, 10)):
        eta1 = data[s == k, header.index("eta1")]
        assert eta1[0] == 1.0 and np.all(np.diff(eta1) < 0)
        t = data[s == k, header.index("t")]
        np.testing.assert_allclose(eta1, 1 / (1 + lam * t), rtol=1e-15)
    assert data[:, header.index("t")].max() == 10.0


@pytest.mark.parametrize("preset", ["fig3b", "fig3c"])
def test_other_mass_presets(capsys, preset):
    code, out, _ = run_cli(capsys, "--preset", preset, "--grid", "11")
    assert code == 0
    header, data = read_csv(out)
    total = data[:, 6:10].sum(axis=1)
    np.testing.assert_allclose(total, 1.0, atol=1e-9)


def test_density_slice_matches_law(capsys):
    code, out, _ = run_cli(capsys, "--preset", "fig4l", "--grid", "slice:0.5:41")
    assert code == 0
    header, data = read_csv(out)
    assert header == list(cli.GRID_COLUMNS)
    assert np.all(data[:, 0] == 0.5) and len(data) > 50
    mp = MotionParams.regular()
    rng = np.random.default_rng(0)
    for row in data[rng.choice(len(data), 5, replace=False)]:
        ev = interior_density_closed(mp, row[:3], 1.0)
        np.testing.assert_allclose(row[4:8], ev.p, rtol=1e-15)
        assert row[8] == pytest.approx(ev.total, rel=1e-15)
    # the slice at x1 = 1/2 is the triangle with vertices at the midpoints towards v2, v3, v4
    assert data[:, 1].min() > -0.5 / (2 * np.sqrt(2)) - 1e-12


def test_limiting_slice(capsys):
    code, out, _ = run_cli(capsys, "--preset", "fig5r", "--grid", "slice:1:21")
    assert code == 0
    header, data = read_csv(out)
    assert header == list(cli.LIMIT_COLUMNS)
    ctx = MotionParams.regular().ctx
    np.testing.assert_allclose(data[:, 4], limiting_density(ctx, data[:, :3], 2.0), rtol=1e-14)


def test_density_series_method(capsys):
    code, out, _ = run_cli(capsys, "--command", "density", "--grid", "4", "--method", "series", "--tol", "1e-10")
    assert code == 0
    _, data = read_csv(out)
    ev = interior_density_closed(MotionParams.regular(), data[:, :3], 1.0)
    np.testing.assert_allclose(data[:, 4:8], ev.p, rtol=1e-6)


def test_simulate_without_grid_reports_components_only(capsys):
    code, out, _ = run_cli(capsys, "--command", "simulate", "--n", "2000", "--seed", "3")
    assert code == 0
    header, data = read_csv(out.replace("vertex", "0").replace("edge", "1").replace("face", "2").replace("interior", "3"))
    assert header == ["component", "count", "frequency"]
    assert data[:, 1].sum() == 2000
    code, out, _ = run_cli(capsys, "--command", "simulate", "--n", "2000", "--seed", "3", "--format", "json")
    doc = json.loads(out)
    assert doc["summary"]["histogram_bins"] is None and "histogram" not in doc["summary"]


def test_simulate_with_grid(capsys):
    code, out, _ = run_cli(capsys, "--command", "simulate", "--n", "5000", "--grid", "4,5,6")
    header, data = read_csv(out)
    assert len(data) == 4 * 5 * 6
    assert header[6] == "count"


@pytest.mark.parametrize(
    "argv",
    [
        ("--command", "simulate", "--n", "3000", "--grid", "5", "--seed", "9"),
        ("--command", "fpt", "--n", "3000", "--beta", "1", "--t", "10", "--seed", "9"),
        ("--command", "compare", "--n", "20000", "--grid", "6", "--seed", "9"),
        ("--command", "compare", "--n", "20000", "--grid", "6", "--seed", "9", "--format", "json"),
        ("--preset", "fig4r", "--grid", "slice:1:9"),
    ],
)
def test_byte_identical_outputs(tmp_path, monkeypatch, argv):
    # the JSON document echoes the config, output path included, so both runs use the same name
    outputs = []
    for name in ("a", "b"):
        d = tmp_path / name
        d.mkdir()
        monkeypatch.chdir(d)
        assert main([*argv, "--out", "run.out"]) == 0
        outputs.append((d / "run.out").read_bytes())
    assert outputs[0] == outputs[1] and len(outputs[0]) > 0


def test_config_round_trip(capsys, tmp_path):
    cfg_path = tmp_path / "run.json"
    out1 = tmp_path / "one.csv"
    out2 = tmp_path / "two.csv"
    argv = ["--preset", "fig3b", "--grid", "7", "--lambda4", "2.5", "--save-config", str(cfg_path), "--out", str(out1)]
    assert main(argv) == 0
    cfg = RunConfig.loads(cfg_path.read_text())
    assert RunConfig.loads(cfg.dumps()) == cfg
    assert cfg.lambdas[3] == 2.5 and cfg.sweep is not None and cfg.preset == "fig3b"
    assert main(["--config", str(cfg_path), "--out", str(out2)]) == 0
    assert out1.read_bytes() == out2.read_bytes()


def test_config_dict_round_trip_is_lossless():
    cfg = RunConfig(
        command="fpt", lambdas=(0.1, 2, 3.5, 1e-3), c=0.7, t=12.0, beta=0.3, n=17, seed=5, grid="slice:0.1:5", tol=1e-7
    )
    assert RunConfig.from_dict(json.loads(cfg.dumps())) == cfg


@pytest.mark.parametrize(
    "argv,needle",
    [
        (("--lambda1", "-1"), "intensity"),
        (("--command", "density", "--grid", "slice:5:10"), "outside"),
        (("--command", "density", "--grid", "3,3"), "grid"),
        (("--command", "bogus",), "invalid choice"),
        (("--command", "fpt", "--n", "10"), "beta"),
        (("--command", "fpt", "--n", "10", "--beta", "2", "--t", "1"), "horizon"),
        (("--t", "0",), "t must be positive"),
        (("--command", "simulate", "--n", "0"), "n must be"),
        (("--command", "simulate", "--grid", "slice:0.1:4"), "box grid"),
        (("--config", "/nonexistent/file.json"), "cannot read"),
        (("--seed", "-2", "--command", "simulate", "--n", "5"), "seed"),
    ],
)
def test_invalid_configs_exit_2(capsys, argv, needle):
    code, out, err = run_cli(capsys, *argv)
    assert code == 2
    assert out == ""
    lines = err.strip().splitlines()
    assert len(lines) == 1
    doc = json.loads(lines[0])
    assert doc["exit"] == 2 and needle in doc["message"]


def test_unknown_config_keys_rejected(tmp_path, capsys):
    p = tmp_path / "bad.json"
    p.write_text(json.dumps({"command": "masses", "speed": 3}))
    code, _, err = run_cli(capsys, "--config", str(p))
    assert code == 2 and json.loads(err)["error"] == "ConfigError"
    with pytest.raises(ConfigError):
        RunConfig.loads("[1, 2]")


def test_numerical_failure_exit_3(capsys, monkeypatch):
    def boom(cfg):
        raise NumericalError("quadrature stalled", achieved=3e-5)

    monkeypatch.setitem(cli.HANDLERS, "masses", boom)
    code, _, err = run_cli(capsys, "--command", "masses")
    assert code == 3
    doc = json.loads(err)
    assert doc["error"] == "NumericalError" and doc["achieved"] == 3e-5


def test_json_masses_document(capsys):
    code, out, _ = run_cli(capsys, "--command", "masses", "--grid", "3", "--format", "json")
    doc = json.loads(out)
    assert list(doc) == sorted(doc)
    assert doc["data"]["columns"] == list(cli.MASS_COLUMNS)
    assert len(doc["data"]["rows"]) == 3


def test_all_presets_defined():
    assert set(PRESETS) == {"fig3a", "fig3b", "fig3c", "fig4l", "fig4r", "fig5l", "fig5r"}
    for name, p in PRESETS.items():
        RunConfig(**p)


def test_module_entry_point():
    proc = subprocess.run(
        [sys.executable, "-m", "gcpmotion", "--command", "masses", "--grid", "2", "--t", "1"],
        capture_output=True,
        text=True,
        check=False,
    )
    assert proc.returncode == 0
    assert proc.stdout.splitlines()[2].split(",")[6] == "0.5"
