import json

import numpy as np
import pytest
from numpy.testing import assert_allclose

from diagnostics.trajectory import Snapshot, trajectory_columns
from flow.energy import FlowParams
from flow.flow_engine import StopSpec, run
from geometry.surface_mesh import icosphere
from utils.config import SurfaceSpec
from utils.data_loader import (
    initial_surface,
    read_obj,
    read_snapshots,
    read_trajectory_csv,
    write_obj,
    write_report,
    write_snapshots,
    write_trajectory_csv,
)
from utils.errors import InsufficientDataError, MeshError


@pytest.fixture(scope="module")
def short_run():
    return run(icosphere(1), FlowParams(lambda1=1.0), stop=StopSpec(max_steps=6), record_every=2, radii=(0.5,))


def test_obj_files(tmp_path, icosahedron):
    path = write_obj(icosahedron, tmp_path / "ico.obj")
    back = read_obj(path)
    assert_allclose(back.vertices, icosahedron.vertices)
    np.testing.assert_array_equal(back.faces, icosahedron.faces)
    with pytest.raises(MeshError):
        read_obj(tmp_path / "missing.obj")


def test_initial_surface_kinds():
    sphere = initial_surface(SurfaceSpec(kind="sphere", resolution=2, radius=0.5))
    assert_allclose(np.linalg.norm(sphere.vertices, axis=1), 0.5)
    torus = initial_surface(SurfaceSpec(kind="torus", resolution=6))
    assert torus.n_vertices == 12 * 6


def test_initial_surface_noise_is_seeded_and_bounded():
    spec = SurfaceSpec(kind="sphere", resolution=2, noise=0.1)
    a, b = initial_surface(spec, seed=3), initial_surface(spec, seed=3)
    np.testing.assert_array_equal(a.vertices, b.vertices)
    assert not np.array_equal(a.vertices, initial_surface(spec, seed=4).vertices)
    clean = initial_surface(SurfaceSpec(kind="sphere", resolution=2))
    h = clean.edge_lengths.min()
    assert np.abs(np.linalg.norm(a.vertices, axis=1) - 1.0).max() <= 0.1 * h * 1.01


def test_initial_surface_from_obj(tmp_path, icosahedron):
    path = write_obj(icosahedron, tmp_path / "start.obj")
    s = initial_surface(SurfaceSpec(kind="obj", path=str(path)))
    assert s.n_faces == 20


def test_trajectory_csv_round_trip(tmp_path, short_run):
    path = write_trajectory_csv(short_run, tmp_path / "trajectory.csv")
    header = path.read_text().splitlines()[0].split(",")
    assert header == trajectory_columns((0.5,))
    back = read_trajectory_csv(path)
    assert len(back) == len(short_run)
    assert back.radii == (0.5,)
    for original, loaded in zip(short_run.records, back.records):
        assert loaded.energy_total == original.energy_total
        assert loaded.eta[0.5] == original.eta[0.5]
        assert loaded.step == original.step


def test_missing_trajectory_csv(tmp_path):
    with pytest.raises(InsufficientDataError):
        read_trajectory_csv(tmp_path / "none.csv")


def test_snapshot_directory(tmp_path):
    snaps = [Snapshot(i, 0.5 * i, 10 * i, icosphere(1, radius=1.0 - 0.2 * i)) for i in range(3)]
    paths = write_snapshots(snaps, tmp_path / "snapshots")
    assert [p.name for p in paths] == ["snapshot_00000.obj", "snapshot_00001.obj", "snapshot_00002.obj"]
    back = read_snapshots(tmp_path / "snapshots")
    assert [s.step for s in back] == [0, 10, 20]
    assert_allclose([s.time for s in back], [0.0, 0.5, 1.0])
    assert_allclose(np.linalg.norm(back[2].surface.vertices, axis=1), 0.6)


def test_snapshot_directory_without_index(tmp_path):
    write_obj(icosphere(0), tmp_path / "snapshot_00000.obj")
    write_obj(icosphere(0), tmp_path / "snapshot_00001.obj")
    back = read_snapshots(tmp_path)
    assert [s.index for s in back] == [0, 1]
    with pytest.raises(InsufficientDataError):
        read_snapshots(tmp_path / "empty")


def test_report_handles_numpy_values(tmp_path):
    path = write_report({"a": np.float64(1.5), "b": np.arange(3), "c": np.bool_(True)}, tmp_path / "r.json")
    assert json.loads(path.read_text()) == {"a": 1.5, "b": [0, 1, 2], "c": True}


def test_trajectory_csv_keeps_last_bit_of_every_float(tmp_path, short_run):
    frame = short_run.to_frame()
    awkward = np.nextafter(frame["energy_total"].to_numpy(), np.inf) * (1.0 + 2.0 ** -40)
    frame["energy_total"] = awkward
    frame["time"] = frame["time"] + 0.1 + 0.2
    path = tmp_path / "awkward.csv"
    frame.to_csv(path, index=False, float_format="%.17g")
    back = read_trajectory_csv(path).to_frame()
    np.testing.assert_array_equal(back["energy_total"].to_numpy(), awkward)
    np.testing.assert_array_equal(back["time"].to_numpy(), frame["time"].to_numpy())
