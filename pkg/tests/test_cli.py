import csv
import json

import pytest
import yaml

from hetnet import cli
from hetnet.errors import ConfigError

SMALL = {
    "profile": "nlos",
    "sweep": {"density_ratio": [5, 10]},
    "outputs": ["assoc_probs", "distance_pdf"],
    "mc": {"enabled": True, "n": 3000, "seed": 3},
    "distance": {"ratio": 10, "bins": 8},
}


def write(tmp_path, data, name="scenario.yaml"):
    path = tmp_path / name
    path.write_text(yaml.safe_dump(data))
    return path


def read_csv(path):
    with open(path, newline="") as fh:
        return list(csv.DictReader(fh))


def test_run_writes_outputs(tmp_path):
    out = tmp_path / "out"
    assert cli.main(["run", str(write(tmp_path, SMALL)), "--out", str(out)]) == cli.EXIT_OK
    rows = read_csv(out / "assoc_probs.csv")
    header = (out / "assoc_probs.csv").read_text().splitlines()[0]
    assert header.startswith("ratio,alpha_s,case1,case2,case4,case1_mc,case1_ci")
    for row in rows:
        total = sum(float(row[f"case{c}"]) for c in (1, 2, 4))
        assert total == pytest.approx(1.0, abs=1e-8)
        assert float(row["case3_mc"]) == 0.0
    assert (out / "distance_pdf.csv").read_text().splitlines()[0] == "case,tier,x_m,pdf,mc_density"
    manifest = json.loads((out / "manifest.json").read_text())
    assert manifest["status"] == "ok" and manifest["exit_code"] == 0
    assert manifest["mc"]["seed"] == 3
    assert b"\r" not in (out / "assoc_probs.csv").read_bytes()


def test_overrides_and_los_flag(tmp_path):
    data = dict(SMALL, outputs=["assoc_probs"])
    out = tmp_path / "o"
    assert cli.main(["run", str(write(tmp_path, data)), "--out", str(out), "--los", "--mc-n", "1000",
                     "--seed", "11", "--threads", "2"]) == 0
    rows = read_csv(out / "assoc_probs.csv")
    assert all(float(r["alpha_s"]) == 2.0 for r in rows)
    manifest = json.loads((out / "manifest.json").read_text())
    assert manifest["mc"]["n"] == 1000 and manifest["mc"]["seed"] == 11


def test_alpha_sweep(tmp_path):
    data = {"sweep": {"alpha_s": [2.0, 3.0, 4.0], "ratio": 10}, "outputs": ["assoc_probs"]}
    out = tmp_path / "o"
    assert cli.main(["run", str(write(tmp_path, data)), "--out", str(out)]) == 0
    rows = read_csv(out / "assoc_probs.csv")
    assert [float(r["alpha_s"]) for r in rows] == [2.0, 3.0, 4.0]
    assert all(float(r["ratio"]) == pytest.approx(10.0) for r in rows)
    assert "case1_mc" not in rows[0]


def test_same_seed_same_bytes(tmp_path, monkeypatch):
    path = write(tmp_path, SMALL)
    assert cli.main(["run", str(path), "--out", str(tmp_path / "a"), "--threads", "1"]) == 0
    monkeypatch.setenv("HETNET_THREADS", "3")
    assert cli.main(["run", str(path), "--out", str(tmp_path / "b")]) == 0
    for name in ("assoc_probs.csv", "distance_pdf.csv"):
        assert (tmp_path / "a" / name).read_bytes() == (tmp_path / "b" / name).read_bytes()
    assert json.loads((tmp_path / "b" / "manifest.json").read_text())["threads"] == 3


@pytest.mark.parametrize("data", [
    {"sweep": {"density_ratio": [5, 2]}},
    {"sweep": {"density_ratio": []}},
    {"sweep": {"density_ratio": [1], "alpha_s": [2]}},
    {"outputs": ["figure"]},
    {"network": {"bogus": 1}},
    {"network": {"alpha_m": 1.5}},
    {"profile": "urban"},
    {"unexpected": 1},
    ["not", "a", "mapping"],
])
def test_config_errors_exit_2(tmp_path, data):
    out = tmp_path / "o"
    assert cli.main(["run", str(write(tmp_path, data)), "--out", str(out)]) == cli.EXIT_CONFIG
    manifest = json.loads((out / "manifest.json").read_text())
    assert manifest["status"] == "error" and "config" in manifest["error"]


def test_yaml_syntax_error(tmp_path):
    path = tmp_path / "bad.yaml"
    path.write_text("sweep: [unclosed\n")
    assert cli.main(["run", str(path), "--out", str(tmp_path / "o")]) == cli.EXIT_CONFIG


def test_missing_file_is_io_error(tmp_path):
    out = tmp_path / "o"
    assert cli.main(["run", str(tmp_path / "nope.yaml"), "--out", str(out)]) == cli.EXIT_IO
    assert json.loads((out / "manifest.json").read_text())["exit_code"] == cli.EXIT_IO


def test_unwritable_output_is_io_error(tmp_path):
    blocker = tmp_path / "file"
    blocker.write_text("x")
    assert cli.main(["run", str(write(tmp_path, SMALL)), "--out", str(blocker / "sub")]) == cli.EXIT_IO


def test_module_error_exit_4(tmp_path, monkeypatch):
    from hetnet.errors import NonConvergenceError

    def boom(*a, **k):
        raise NonConvergenceError("forced", None)

    monkeypatch.setattr(cli, "prob_case_closed", boom)
    data = dict(SMALL, outputs=["assoc_probs"], mc={"enabled": False})
    out = tmp_path / "o"
    assert cli.main(["run", str(write(tmp_path, data)), "--out", str(out)]) == cli.EXIT_MODULE
    assert "NonConvergenceError" in json.loads((out / "manifest.json").read_text())["error"]


def test_help_documents_exit_codes(capsys):
    with pytest.raises(SystemExit):
        cli.main(["run", "--help"])
    text = capsys.readouterr().out
    for code in ("0", "1", "2", "3", "4"):
        assert f"  {code}  " in text
    assert "HETNET_THREADS" in text


def test_parse_scenario_defaults():
    sc = cli.parse_scenario({})
    assert sc.sweep_name is None and len(sc.points()) == 1
    assert not sc.mc_enabled
    with pytest.raises(ConfigError):
        cli.parse_scenario({"mc": {"enabled": True, "n": 0}})
