import csv
import json

import numpy as np
import pytest

from lib import export_helpers
from lib.errors import SchemaError
from lib.probe import PointCloud
from lib.reports import ProbeReport, QiReport


def sample_cloud():
    params = np.array([[0.0, 1.0], [0.5, -0.25], [1.0 / 3.0, 2.0]])
    points = np.array([[0.1, 0.2, 0.3], [1e-17, -4.0, 5.5], [np.pi, 0.0, -1.0]])
    return PointCloud(points, params)


def test_export_cloud_csv_writes_file(tmp_path):
    out = tmp_path / "cloud.csv"
    export_helpers.export_cloud_csv(sample_cloud(), str(out))
    assert out.exists()
    with open(out, newline="", encoding="utf-8") as fh:
        rows = list(csv.reader(fh))
    # parameter columns first, then point columns
    assert rows[0] == ["p0", "p1", "x0", "x1", "x2"]
    assert len(rows) == 4


def test_load_cloud_csv_is_exact(tmp_path):
    out = tmp_path / "cloud.csv"
    cloud = sample_cloud()
    export_helpers.export_cloud_csv(cloud, str(out))
    loaded = export_helpers.load_cloud_csv(str(out))
    assert np.array_equal(loaded.points, cloud.points)
    assert np.array_equal(loaded.params, cloud.params)


def test_load_cloud_csv_reports_bad_line(tmp_path):
    out = tmp_path / "cloud.csv"
    out.write_text("p0,x0\n1.0,2.0\n1.0,abc\n", encoding="utf-8")
    with pytest.raises(SchemaError) as info:
        export_helpers.load_cloud_csv(str(out))
    assert info.value.line == 3


def test_export_report_json_writes_file(tmp_path):
    report = QiReport(
        qi=False,
        witness_controller=np.eye(2),
        witness_residual=0.5,
        witness_indices=(0, 1),
        tol=1e-9,
    )
    out = tmp_path / "qi.json"
    export_helpers.export_report_json(report, str(out), seed=7)
    assert out.exists()
    with open(out, encoding="utf-8") as fh:
        payload = json.load(fh)
    assert payload["seed"] == 7
    assert "export_time" in payload
    again = QiReport.from_dict(payload)
    assert not again.qi
    assert again.witness_indices == (0, 1)
    assert np.array_equal(again.witness_controller, np.eye(2))


def test_report_payload_replaces_non_finite_values():
    report = ProbeReport(
        kind="convexity",
        verdict="pass",
        coverage_radius=float("inf"),
        tolerances={"reject_tol": np.float64(0.25)},
    )
    payload = export_helpers.report_payload(report)
    assert payload["coverage_radius"] is None
    assert payload["tolerances"]["reject_tol"] == 0.25
    json.dumps(payload)
