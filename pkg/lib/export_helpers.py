"""Export helpers for point-cloud CSV and report JSON files."""

import csv
import json
from datetime import datetime

import numpy as np

from lib.errors import SchemaError
from lib.probe import PointCloud
from lib.reports import to_jsonable


def export_cloud_csv(cloud, file_path):
    """Write one row per point: parameter columns p0.. then point columns x0.."""
    n_params = cloud.params.shape[1]
    n_points = cloud.points.shape[1]
    with open(file_path, "w", newline="", encoding="utf-8") as f:
        writer = csv.writer(f)
        writer.writerow(
            [f"p{i}" for i in range(n_params)] + [f"x{i}" for i in range(n_points)]
        )
        for params, point in zip(cloud.params, cloud.points):
            writer.writerow([repr(float(v)) for v in params] + [repr(float(v)) for v in point])


def load_cloud_csv(file_path):
    """Read a cloud written by export_cloud_csv."""
    with open(file_path, newline="", encoding="utf-8") as f:
        reader = csv.reader(f)
        try:
            header = next(reader)
        except StopIteration:
            raise SchemaError("empty cloud file", path=file_path, line=1)
        p_cols = [i for i, h in enumerate(header) if h.startswith("p")]
        x_cols = [i for i, h in enumerate(header) if h.startswith("x")]
        if len(p_cols) + len(x_cols) != len(header):
            raise SchemaError("unexpected column in cloud header", path=file_path, line=1)
        rows = []
        for lineno, row in enumerate(reader, start=2):
            try:
                rows.append([float(v) for v in row])
            except ValueError:
                raise SchemaError("non-numeric cloud entry", path=file_path, line=lineno)
    data = np.array(rows, dtype=float).reshape(len(rows), len(header))
    return PointCloud(data[:, x_cols], data[:, p_cols])


def report_payload(report, seed=None):
    """JSON-ready dict of a report with the export time (and seed when given)."""
    data = to_jsonable(report.to_dict())
    data["export_time"] = datetime.now().isoformat()
    if seed is not None:
        data["seed"] = seed
    return data


def export_report_json(report, file_path, seed=None):
    """Export a report to a JSON file."""
    data = report_payload(report, seed)
    with open(file_path, "w", encoding="utf-8") as f:
        json.dump(data, f, indent=2)
    return data
