import json
from datetime import datetime, timezone
from pathlib import Path

import numpy as np
import pytest

import app
from app.core.errors import DataValidationError, EmptyInputError, MissingColumnsError, RaggedTensorError, SchemaError
from app.core.model import CalibrationBundle
from app.core.synth import OracleConfig, generate_design_matrix, generate_grid
from app.formats.bundle import load_bundle, save_bundle
from app.formats.common import SCHEMA_COMMENT, build_time, file_digest, read_csv, sibling, write_report
from app.formats.design import read_design_matrix, write_design_matrix
from app.formats.runs import load_runs, read_manifest, write_grid


def test_csv_files_carry_schema_header(tmp_path: Path) -> None:
    manifest = write_grid(generate_grid(OracleConfig(), speeds=(6.0,), duration=0.4, fs=33.0), tmp_path)
    run_file = tmp_path / "runs" / "run_0000.csv"
    lines = run_file.read_text().splitlines()
    assert lines[0] + "\n" == SCHEMA_COMMENT
    assert lines[1] == "t,dp1,dp2,dp3,dp4,dp5"
    assert len(read_manifest(manifest).runs) == 17


def test_grid_round_trip_is_lossless(tmp_path: Path) -> None:
    runs = generate_grid(OracleConfig(noise_sigma=0.4, seed=2), speeds=(9.0,), duration=0.3, fs=33.0)
    loaded, digests = load_runs(write_grid(runs, tmp_path))
    assert len(loaded) == len(runs)
    for original, copy in zip(runs, loaded):
        assert copy.true_state == original.true_state
        np.testing.assert_array_equal(copy.dp, original.dp)
        np.testing.assert_array_equal(copy.t, original.t)
    assert len(digests) == len(runs) + 1
    assert all(d.startswith("sha256:") for d in digests.values())


def test_unsupported_schema_version(tmp_path: Path) -> None:
    path = tmp_path / "run.csv"
    path.write_text("# schema_version=2\nt,dp1,dp2,dp3,dp4,dp5\n0,1,2,3,4,5\n")
    with pytest.raises(SchemaError):
        read_csv(path)


def test_missing_columns_and_file(tmp_path: Path) -> None:
    path = tmp_path / "run.csv"
    path.write_text("t,dp1,dp2,dp3,dp5\n0,1,2,3,4\n")
    with pytest.raises(MissingColumnsError) as info:
        read_csv(path, ("t", "dp1", "dp4"))
    assert info.value.missing == ["dp4"]
    with pytest.raises(DataValidationError):
        read_csv(tmp_path / "absent.csv")


def test_manifest_errors(tmp_path: Path) -> None:
    with pytest.raises(EmptyInputError):
        read_manifest(tmp_path / "manifest.json")
    bad = tmp_path / "bad.json"
    bad.write_text(json.dumps({"runs": [{"file": "a.csv", "speed_mps": -1, "aoa_deg": 0, "aos_deg": 0}]}))
    with pytest.raises(SchemaError):
        read_manifest(bad)


def test_bundle_save_load(bundle: CalibrationBundle, tmp_path: Path) -> None:
    path = save_bundle(bundle, tmp_path / "nested" / "bundle.json")
    assert load_bundle(path) == bundle
    assert not list(path.parent.glob("*.tmp"))


def test_bundle_schema_mismatch(bundle_file: Path) -> None:
    data = json.loads(bundle_file.read_text())
    data["schema_version"] = 99
    bundle_file.write_text(json.dumps(data))
    with pytest.raises(SchemaError):
        load_bundle(bundle_file)
    bundle_file.write_text("{}")
    with pytest.raises(SchemaError):
        load_bundle(bundle_file)


def test_design_matrix_round_trip(tmp_path: Path) -> None:
    matrix = generate_design_matrix(speeds=(3.0, 6.0), angle_grid=[(0.0, 0.0), (10.0, 0.0)], samples=3)
    loaded = read_design_matrix(write_design_matrix(matrix, tmp_path / "matrix.csv"))
    assert loaded.designs == matrix.designs
    np.testing.assert_array_equal(loaded.tensor, matrix.tensor)


def test_design_matrix_missing_marker_and_ragged(tmp_path: Path) -> None:
    matrix = generate_design_matrix(speeds=(3.0, 6.0), angle_grid=[(0.0, 0.0), (10.0, 0.0)], samples=3)
    path = write_design_matrix(matrix, tmp_path / "matrix.csv")
    lines = path.read_text().splitlines()
    # blank the last dp_pa value: an explicit missing cell
    lines[-1] = lines[-1].rsplit(",", 1)[0] + ","
    path.write_text("\n".join(lines) + "\n")
    assert read_design_matrix(path).missing_count == 1
    # drop the row entirely: the tensor can no longer be filled
    path.write_text("\n".join(lines[:-1]) + "\n")
    with pytest.raises(RaggedTensorError):
        read_design_matrix(path)


def test_report_envelope(tmp_path: Path) -> None:
    path = write_report("demo", {"value": 1}, tmp_path / "r.json", seed=7, inputs={"a": "sha256:00"})
    body = json.loads(path.read_text())
    assert body["kind"] == "demo"
    assert body["tool_version"] == app.__version__
    assert body["seed"] == 7
    assert body["report"] == {"value": 1}


def test_helpers(tmp_path: Path) -> None:
    assert sibling("out/model.json", ".report.json") == Path("out/model.report.json")
    assert sibling("out/model", ".series.csv") == Path("out/model.series.csv")
    assert build_time(0) == datetime(1970, 1, 1, tzinfo=timezone.utc)
    a, b = tmp_path / "a", tmp_path / "b"
    a.write_text("x")
    b.write_text("x")
    assert file_digest(a) == file_digest(b)
