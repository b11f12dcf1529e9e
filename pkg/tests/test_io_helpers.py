import json
import os

import numpy as np
import pytest

from lib import io_helpers
from lib.errors import SchemaError
from lib.fir_core import FirSubspace
from lib.static_core import StaticPlant, SubspaceBasis
from lib.synthesis import FirPlant


STATIC_DOC = """{
  "P11": [[0.0]],
  "P12": [[1.0, 2.0]],
  "P21": [[1.0], [0.0]],
  "G": [[1.0, 0.0], [0.5, 1.0]],
  "pattern": [[1, 0], [1, 1]]
}
"""


def write(tmp_path, text, name="doc.json"):
    path = tmp_path / name
    path.write_text(text, encoding="utf-8")
    return str(path)


def test_resolve_output_path_tmpdir(tmp_path, monkeypatch):
    # Relative paths are resolved against the working directory and the
    # parent directories are created
    monkeypatch.chdir(tmp_path)
    resolved = io_helpers.resolve_output_path("runs/report.json", "x.json")
    assert os.path.isabs(resolved)
    assert os.path.normpath(resolved).endswith(
        os.path.normpath(os.path.join("runs", "report.json"))
    )
    assert (tmp_path / "runs").is_dir()


def test_resolve_output_path_uses_default_name(tmp_path, monkeypatch):
    monkeypatch.chdir(tmp_path)
    resolved = io_helpers.resolve_output_path(None, "probe_report.json")
    assert os.path.basename(resolved) == "probe_report.json"


def test_parse_static_plant_and_pattern(tmp_path):
    doc = io_helpers.read_json_document(write(tmp_path, STATIC_DOC))
    P = io_helpers.parse_static_plant(doc)
    assert isinstance(P, StaticPlant)
    assert P.controller_shape == (2, 2)
    S = io_helpers.parse_subspace(doc)
    assert isinstance(S, SubspaceBasis)
    assert len(S) == 3
    assert not io_helpers.is_fir_document(doc)


def test_bad_matrix_entry_reports_line(tmp_path):
    text = STATIC_DOC.replace('"G": [[1.0, 0.0]', '"G": [[1.0, "x"]')
    doc = io_helpers.read_json_document(write(tmp_path, text))
    with pytest.raises(SchemaError) as info:
        io_helpers.parse_static_plant(doc)
    assert info.value.line == 5
    assert info.value.path.endswith("doc.json")
    assert info.value.key == "G"


def test_invalid_json_reports_decoder_line(tmp_path):
    text = '{\n  "P11": [[0.0]],\n  "P12": [[1.0 2.0]]\n}\n'
    with pytest.raises(SchemaError) as info:
        io_helpers.read_json_document(write(tmp_path, text))
    assert info.value.line == 3


def test_dimension_mismatch_becomes_schema_error(tmp_path):
    text = STATIC_DOC.replace('"P21": [[1.0], [0.0]]', '"P21": [[1.0], [0.0], [2.0]]')
    doc = io_helpers.read_json_document(write(tmp_path, text))
    with pytest.raises(SchemaError) as info:
        io_helpers.parse_static_plant(doc)
    assert info.value.line is not None


def test_missing_blocks(tmp_path):
    doc = io_helpers.read_json_document(write(tmp_path, '{"G": [[1.0]]}'))
    with pytest.raises(SchemaError, match="P11"):
        io_helpers.parse_static_plant(doc)


def test_top_level_must_be_object(tmp_path):
    with pytest.raises(SchemaError):
        io_helpers.read_json_document(write(tmp_path, "[1, 2]"))


def test_fir_document_with_delays(tmp_path):
    data = {
        "P11": {"horizon": 1, "taps": [[[1.0]], [[0.5]]]},
        "P12": [[1.0, 0.0]],
        "P21": [[1.0], [0.0]],
        "G": {"horizon": 1, "taps": [[[0, 0], [0, 0]], [[1, 0], [1, 1]]]},
        "pattern": [[1, 0], [1, 1]],
        "delays": [[0, 0], [1, 0]],
        "horizon": 3,
    }
    doc = io_helpers.read_json_document(write(tmp_path, json.dumps(data, indent=2)))
    assert io_helpers.is_fir_document(doc)
    P = io_helpers.parse_fir_plant(doc)
    assert isinstance(P, FirPlant)
    S = io_helpers.parse_subspace(doc, fir=True, horizon=8)
    assert isinstance(S, FirSubspace)
    assert S.horizon == 3
    # (0,0): lags 0..3, (1,0): lags 1..3, (1,1): lags 0..3
    assert len(S) == 4 + 3 + 4


def test_negative_delays_rejected(tmp_path):
    data = {"G": [[1.0]], "pattern": [[1]], "delays": [[-1]], "horizon": 2}
    doc = io_helpers.read_json_document(write(tmp_path, json.dumps(data)))
    with pytest.raises(SchemaError, match="delays"):
        io_helpers.parse_subspace(doc, fir=True)


def test_fir_horizon_mismatch(tmp_path):
    data = {"G": {"horizon": 3, "taps": [[[0.0]], [[1.0]]]}, "basis": [[[1.0]]]}
    doc = io_helpers.read_json_document(write(tmp_path, json.dumps(data, indent=2)))
    with pytest.raises(SchemaError) as info:
        io_helpers.parse_fir_g(doc)
    assert info.value.line == 2


def test_empty_basis_needs_shape(tmp_path):
    doc = io_helpers.read_json_document(write(tmp_path, '{"basis": []}'))
    with pytest.raises(SchemaError, match="shape"):
        io_helpers.parse_subspace(doc)
    doc = io_helpers.read_json_document(
        write(tmp_path, '{"basis": [], "shape": [2, 3]}', "shaped.json")
    )
    S = io_helpers.parse_subspace(doc)
    assert S.shape == (2, 3)
    assert S.dimension == 0


def test_pattern_entries_must_be_binary(tmp_path):
    doc = io_helpers.read_json_document(
        write(tmp_path, '{"G_pattern": [[1, 2]], "pattern": [[1], [0]]}')
    )
    with pytest.raises(SchemaError, match="G_pattern"):
        io_helpers.parse_g_pattern(doc)
    S = io_helpers.parse_s_pattern(doc)
    assert np.array_equal(S.entries, [[True], [False]])
