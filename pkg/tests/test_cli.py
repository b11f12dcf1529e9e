import json
import logging

import pytest

import qi_toolkit
from constants import MSG_SYNTH_REFUSED
from lib.plant_library import disc_plant, random_lqg_plant, tied_diagonal_basis
from lib.reports import ProbeReport, QiReport, SynthesisResult


@pytest.fixture(autouse=True)
def isolated_run(tmp_path, monkeypatch):
    # main() reconfigures the root logger; put it back afterwards
    monkeypatch.chdir(tmp_path)
    root = logging.getLogger()
    handlers, level = root.handlers[:], root.level
    yield
    for handler in root.handlers:
        if handler not in handlers:
            handler.close()
    root.handlers[:] = handlers
    root.setLevel(level)


def write_doc(tmp_path, data, name="doc.json"):
    path = tmp_path / name
    path.write_text(json.dumps(data, indent=2), encoding="utf-8")
    return str(path)


def diagonal_example_doc():
    doc = disc_plant().to_dict()
    doc.update(tied_diagonal_basis().to_dict())
    return doc


def json_after_seed(text):
    first, _, rest = text.partition("\n")
    assert first.startswith("seed=")
    return json.loads(rest)


def test_reproduce_affine(capsys):
    assert qi_toolkit.main(["reproduce", "--example", "affine"]) == 0
    out = capsys.readouterr().out
    assert out.startswith("seed=42")
    assert "[PASS] s_not_qi" in out
    assert "[PASS] closed_loops_equal" in out


def test_reproduce_writes_report(tmp_path, capsys):
    target = tmp_path / "runs" / "affine.json"
    assert qi_toolkit.main(["reproduce", "--example", "affine", "--out", str(target)]) == 0
    payload = json.loads(target.read_text(encoding="utf-8"))
    assert payload["example"] == "affine"
    assert payload["passed"] is True
    assert payload["seed"] == 42


def test_qi_check_witness_exit_code(tmp_path, capsys):
    path = write_doc(tmp_path, diagonal_example_doc())
    out_path = tmp_path / "qi.json"
    assert qi_toolkit.main(["qi-check", path, "--out", str(out_path)]) == 1
    payload = json.loads(capsys.readouterr().out)
    assert payload["qi"] is False
    assert payload["witness_controller"] is not None
    report = QiReport.from_dict(json.loads(out_path.read_text(encoding="utf-8")))
    assert not report.qi
    assert report.witness_controller.shape == (4, 4)


def test_qi_check_pattern_document(tmp_path, capsys):
    path = write_doc(
        tmp_path, {"pattern": [[1, 0], [1, 1]], "G_pattern": [[1, 0], [1, 1]]}
    )
    assert qi_toolkit.main(["qi-check", path]) == 0
    payload = json.loads(capsys.readouterr().out)
    assert payload["qi"] is True
    assert payload["method"] == "pattern"


def test_qi_check_fir_document(tmp_path, capsys):
    P = random_lqg_plant(4, 3)
    doc = {"G": P.G.to_dict(), "pattern": [[1, 0], [1, 1]], "horizon": 3}
    path = write_doc(tmp_path, doc)
    assert qi_toolkit.main(["qi-check", path]) == 0
    assert json.loads(capsys.readouterr().out)["method"] == "fir"


def test_synth_refuses_non_qi(tmp_path, capsys):
    path = write_doc(tmp_path, diagonal_example_doc())
    assert qi_toolkit.main(["synth", path]) == 1
    captured = capsys.readouterr()
    assert MSG_SYNTH_REFUSED in captured.err
    assert json.loads(captured.out)["qi"] is False


def test_synth_fir_round_trip(tmp_path, capsys):
    P = random_lqg_plant(6, 3)
    doc = P.to_dict()
    doc["pattern"] = [[1, 0], [1, 1]]
    path = write_doc(tmp_path, doc)
    assert qi_toolkit.main(["synth", path, "--horizon", "3"]) == 0
    payload = json.loads(capsys.readouterr().out)
    assert "p12_left_invertible" in payload["assumptions"]
    result = SynthesisResult.from_dict(payload)
    assert result.horizon == 3
    assert result.normal_equation_residual <= 1e-8
    assert result.qi_report.qi


def test_probe_writes_cloud_and_report(tmp_path, capsys):
    doc = {
        "P11": [[0.0], [0.0]],
        "P12": [[1.0, 0.0], [0.0, 1.0]],
        "P21": [[1.0], [1.0]],
        "G": [[0.2, 0.0], [0.0, -0.2]],
        "pattern": [[1, 0], [0, 1]],
    }
    path = write_doc(tmp_path, doc)
    target = tmp_path / "out" / "probe.json"
    code = qi_toolkit.main(
        ["probe", path, "--scheme", "grid", "--samples", "40000", "--out", str(target)]
    )
    payload = json_after_seed(capsys.readouterr().out)
    assert code == 0
    assert payload["verdict"] == "pass"
    assert payload["seed"] == 42
    assert target.exists()
    csv_path = tmp_path / "out" / "probe.csv"
    header = csv_path.read_text(encoding="utf-8").splitlines()[0]
    assert header == "p0,p1,x0,x1"
    saved = ProbeReport.from_dict(json.loads(target.read_text(encoding="utf-8")))
    assert saved.verdict == "pass"
    assert saved.witness is None


def test_invalid_json_exit_code(tmp_path, capsys):
    path = tmp_path / "doc.json"
    path.write_text('{\n  "G": [[1.0]],\n  "basis": [[[1.0]]\n}\n', encoding="utf-8")
    assert qi_toolkit.main(["qi-check", str(path)]) == 2
    assert "doc.json:4:" in capsys.readouterr().err


def test_schema_error_exit_code(tmp_path, capsys):
    doc = diagonal_example_doc()
    doc["G"] = [[1.0, 2.0]]
    path = write_doc(tmp_path, doc)
    assert qi_toolkit.main(["qi-check", path]) == 2
    assert "doc.json:" in capsys.readouterr().err


def test_missing_input_exit_code(tmp_path, capsys):
    assert qi_toolkit.main(["synth", str(tmp_path / "missing.json")]) == 2


def test_flag_range_is_checked():
    with pytest.raises(SystemExit) as info:
        qi_toolkit.main(["reproduce", "--example", "affine", "--tol", "-1"])
    assert info.value.code == 2


def test_config_file_then_flags(tmp_path, capsys):
    cfg = tmp_path / "run.cfg"
    cfg.write_text("[run]\nseed = 7\n", encoding="utf-8")
    assert qi_toolkit.main(["reproduce", "--example", "affine", "--config", str(cfg)]) == 0
    assert capsys.readouterr().out.startswith("seed=7")
    argv = ["reproduce", "--example", "affine", "--config", str(cfg), "--seed", "9"]
    assert qi_toolkit.main(argv) == 0
    assert capsys.readouterr().out.startswith("seed=9")


def test_log_file(tmp_path, capsys):
    log_path = tmp_path / "qi.log"
    argv = ["reproduce", "--example", "affine", "--log-file", str(log_path)]
    assert qi_toolkit.main(argv) == 0
    assert "reproducing example affine" in log_path.read_text(encoding="utf-8")


def test_build_run_config_defaults():
    args = qi_toolkit.build_parser().parse_args(["synth", "plant.json"])
    rc = qi_toolkit.build_run_config(args)
    assert (rc.tol, rc.horizon, rc.samples, rc.seed) == (1e-9, 32, 10000, 42)
    assert rc.input_path == "plant.json"
    assert rc.out_path is None


def test_rank_tol_from_config_then_flag(tmp_path):
    cfg = tmp_path / "run.cfg"
    cfg.write_text("[run]\nrank_tol = 1e-6\n", encoding="utf-8")
    parser = qi_toolkit.build_parser()
    argv = ["synth", "p.json", "--config", str(cfg)]
    assert qi_toolkit.build_run_config(parser.parse_args(argv)).rank_tol == 1e-6
    argv += ["--rank-tol", "1e-4"]
    assert qi_toolkit.build_run_config(parser.parse_args(argv)).rank_tol == 1e-4
    with pytest.raises(SystemExit) as info:
        parser.parse_args(["synth", "p.json", "--rank-tol", "0"])
    assert info.value.code == 2



def test_hmap_document_finds_witness(tmp_path, capsys):
    doc = {
        "G": [[0.0, 1.0], [1.0, 0.0]],
        "pattern": [[1, 0], [0, 1]],
        "ranges": [[-0.5, 0.5], [-0.5, 0.5]],
    }
    path = write_doc(tmp_path, doc)
    code = qi_toolkit.main(["probe", path, "--samples", "500", "--out", str(tmp_path / "h.json")])
    payload = json_after_seed(capsys.readouterr().out)
    assert code == 1
    assert payload["verdict"] == "nonconvex_witness"
    assert "gap is the membership residual of the midpoint" in payload["notes"]


def test_invertible_plant_uses_exact_membership(tmp_path, capsys):
    doc = {
        "P11": [[0.0, 0.0], [0.0, 0.0]],
        "P12": [[1.0, 0.0], [0.0, 1.0]],
        "P21": [[1.0, 0.0], [0.0, 1.0]],
        "G": [[0.5, 0.0], [-0.7, 0.3]],
        "pattern": [[1, 0], [1, 1]],
    }
    path = write_doc(tmp_path, doc)
    code = qi_toolkit.main(["probe", path, "--samples", "2000", "--out", str(tmp_path / "c.json")])
    payload = json_after_seed(capsys.readouterr().out)
    assert code == 0
    assert payload["verdict"] == "pass"
    assert "gap is the membership residual of the midpoint" in payload["notes"]


def test_dimension_error_reports_line(tmp_path, capsys):
    doc = {
        "G": [[1.0, 0.0, 0.0], [0.0, 1.0, 0.0], [0.0, 0.0, 1.0]],
        "basis": [[[1.0, 0.0], [0.0, 0.0]], [[0.0, 0.0], [0.0, 1.0]]],
    }
    path = write_doc(tmp_path, doc)
    assert qi_toolkit.main(["qi-check", path]) == 2
    # "G" opens on the second line of the indented document
    assert f"{path}:2:" in capsys.readouterr().err


def test_sampling_dimension_error_reports_line(tmp_path, capsys):
    doc = {"G": [[1.0, 0.0, 0.0]], "pattern": [[1, 0], [0, 1]]}
    path = write_doc(tmp_path, doc)
    assert qi_toolkit.main(["probe", path]) == 2
    assert f"{path}:2:" in capsys.readouterr().err
