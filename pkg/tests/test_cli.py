import json

import numpy as np
import pytest

from pdestruct import GridSpec, parse_function_spec, sample_grid
from pdestruct.cli import SCHEMA, RunConfig, build_parser, dumps, main, run


def run_cli(argv, capsys):
    code = main(argv)
    out = capsys.readouterr()
    return code, out.out, out.err


def test_catalog(capsys):
    code, out, _ = run_cli(["catalog"], capsys)
    assert code == 0
    rep = json.loads(out)
    assert rep["schema"] == SCHEMA and rep["command"] == "catalog"
    assert {"schwartz", "sextic", "plane_wave", "poly_transport", "wave_pair"} <= set(rep["metrics"]["functions"])


def test_verify_plane_wave(capsys):
    code, out, _ = run_cli(["verify", "--fn", "plane_wave:sin:k=1", "--k", "1", "--h", "1e-4"], capsys)
    assert code == 0
    rep = json.loads(out)
    assert rep["metrics"]["residual"] <= 1e-6
    assert all(rep["verdicts"].values())
    assert rep["config"]["fn"] == "plane_wave:sin:k=1" and rep["config"]["h"] == 1e-4


def test_verify_wrong_k_fails(capsys):
    code, out, _ = run_cli(["verify", "--fn", "plane_wave:sin:k=1", "--k", "2"], capsys)
    assert code == 1
    assert json.loads(out)["verdicts"]["residual_within_tol"] is False


def test_decompose_schwartz_refused(capsys):
    code, out, err = run_cli(["decompose", "--fn", "schwartz", "--n", "2"], capsys)
    assert code == 1
    rep = json.loads(out)
    assert rep["error"]["kind"] == "HypothesisViolation"
    assert "residual gate" in rep["error"]["message"] and "residual gate" in err


def test_decompose_and_side_files(tmp_path, capsys):
    out = tmp_path / "r.json"
    d = tmp_path / "csv"
    code, _, _ = run_cli(
        ["decompose", "--fn", "poly_transport:square,cube", "--n", "2", "--out", str(out), "--out-dir", str(d)], capsys
    )
    assert code == 0
    rep = json.loads(out.read_text())
    assert rep["artifacts"]["phi_1"]["file"] == "phi_1.csv"
    lines = (d / "phi_2.csv").read_text().splitlines()
    assert lines[0] == "t,value" and len(lines) == 802
    t, v = map(float, lines[1].split(","))
    assert v == pytest.approx(t**3, abs=1e-9)


def test_wave_and_regularity(tmp_path, capsys):
    code, out, _ = run_cli(["wave", "--fn", "wave_pair:cube,cos"], capsys)
    assert code == 0 and json.loads(out)["metrics"]["reconstruction_error"] <= 1e-5
    code, out, _ = run_cli(["wave", "--fn", "schwartz"], capsys)
    assert code == 1
    code, out, _ = run_cli(
        ["regularity", "--fn", "sextic", "--rect=-1,1,-1,1", "--nx", "41", "--threshold", "0.5", "--out-dir", str(tmp_path)],
        capsys,
    )
    rep = json.loads(out)
    assert code == 0 and rep["metrics"]["flagged_count"] == 1
    assert rep["artifacts"]["flagged_points"] == [{"i": 20, "j": 20, "x": 0.0, "y": 0.0}]
    assert (tmp_path / "oscillation.csv").read_text().startswith("x,y,value")


def test_lambda_map(capsys):
    code, out, _ = run_cli(["lambda-map", "--fn", "plane_wave:abs:k=1", "--rect=-0.5,0.5,-0.5,0.5", "--nx", "81", "--tol", "0.05"], capsys)
    rep = json.loads(out)
    assert code == 0 and rep["metrics"]["usc_violation_count"] == 0
    assert rep["metrics"]["zero_count"] == 81
    # too coarse for the ladder: neighbours of the zero line straddle dyadic steps
    code, out, _ = run_cli(["lambda-map", "--fn", "plane_wave:abs:k=1", "--rect=-0.5,0.5,-0.5,0.5", "--nx", "41"], capsys)
    assert code == 1 and json.loads(out)["verdicts"]["upper_semicontinuous"] is False


def test_vector(capsys):
    code, out, _ = run_cli(["vector", "--map", "difference"], capsys)
    assert code == 0
    code, out, _ = run_cli(["vector", "--map", "sum"], capsys)
    assert code == 1 and json.loads(out)["metrics"]["translation_max_defect"] >= 1


def test_grid_input(tmp_path, capsys):
    s = GridSpec.square(-2, 2, 41)
    path = tmp_path / "g.csv"
    path.write_text(sample_grid(parse_function_spec("plane_wave:sin:k=1"), s).to_csv())
    code, out, _ = run_cli(["verify", "--grid", str(path), "--h", "0.1", "--tol", "1e-2"], capsys)
    assert code == 0, out
    js = tmp_path / "g.json"
    js.write_text(sample_grid(parse_function_spec("plane_wave:abs:k=1"), s).to_json())
    code, out, _ = run_cli(["lambda-map", "--grid", str(js), "--nx", "41"], capsys)
    assert code in (0, 1)
    assert json.loads(out)["artifacts"]["lambda"]["nx"] == 39


def test_usage_errors(tmp_path, capsys):
    code, out, err = run_cli(["verify", "--grid", str(tmp_path / "missing.csv")], capsys)
    assert code == 2 and "missing.csv" in err and out == ""
    bad = tmp_path / "bad.csv"
    bad.write_text("x,y,value\n0,0,1\n0,1,zz\n")
    code, _, err = run_cli(["verify", "--grid", str(bad)], capsys)
    assert code == 2 and "bad.csv" in err and "line 3" in err
    code, _, err = run_cli(["verify"], capsys)
    assert code == 2
    code, _, err = run_cli(["verify", "--fn", "schwartz", "--h", "-1"], capsys)
    assert code == 2
    code, _, err = run_cli(["nosuch"], capsys)
    assert code == 2
    code, _, err = run_cli(["verify", "--fn", "nosuch"], capsys)
    assert code == 2 and "schwartz" in err


def test_no_output_on_usage_error(tmp_path, capsys):
    out = tmp_path / "r.json"
    code, _, _ = run_cli(["verify", "--fn", "nosuch", "--out", str(out)], capsys)
    assert code == 2 and not out.exists()


def test_config_file(tmp_path, capsys):
    cfg = tmp_path / "c.json"
    cfg.write_text(json.dumps({"fn": "plane_wave:sin:k=1", "k": 2.0}))
    code, out, _ = run_cli(["verify", "--config", str(cfg), "--k", "1"], capsys)
    assert code == 0 and json.loads(out)["config"]["k"] == 1.0
    cfg.write_text(json.dumps({"fn": "schwartz", "bogus": 1}))
    code, _, err = run_cli(["verify", "--config", str(cfg)], capsys)
    assert code == 2 and "bogus" in err


def test_runconfig_validation():
    with pytest.raises(Exception):
        RunConfig.from_mapping({"command": "verify", "fn": "schwartz", "grid": "x.csv"})
    with pytest.raises(Exception):
        RunConfig.from_mapping({"command": "verify", "fn": "schwartz", "nx": 0})
    status, rep = run(RunConfig("verify", fn="schwartz", threads=0))
    assert status == 2 and "threads" in rep["error"]


@pytest.mark.parametrize(
    "argv",
    [
        ["regularity", "--fn", "sextic", "--nx", "31", "--threshold", "0.5"],
        ["lambda-map", "--fn", "schwartz", "--nx", "21", "--eps", "0.1"],
    ],
)
def test_thread_determinism(argv):
    a = run(RunConfig.from_mapping({**_ns(argv), "threads": 1}))
    b = run(RunConfig.from_mapping({**_ns(argv), "threads": 4}))
    for rep in (a[1], b[1]):
        rep.pop("_files")
        rep.pop("config")
    assert dumps(a[1]) == dumps(b[1])


def _ns(argv):
    return {k: v for k, v in vars(build_parser().parse_args(argv)).items()}


def test_report_json_has_no_nan():
    status, rep = run(RunConfig("regularity", fn="sextic", nx=11))
    rep.pop("_files")
    text = dumps(rep)
    assert "NaN" not in text and "Infinity" not in text
    assert np.isfinite(json.loads(text)["metrics"]["max_oscillation"])
