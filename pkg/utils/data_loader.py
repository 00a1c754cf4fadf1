import json
import logging
from pathlib import Path

import numpy as np
import pandas as pd

from diagnostics.trajectory import Snapshot, Trajectory
from geometry.analytic_surfaces import AnalyticSurface, sample_mesh
from geometry.discrete_geometry import vertex_normals
from geometry.surface_mesh import load_surface, min_edge_length, save_surface
from utils.errors import InsufficientDataError, MeshError

logger = logging.getLogger(__name__)

SNAPSHOT_PATTERN = "snapshot_{:05d}.obj"


# =========================================================
# 📂 MESH FILES
# =========================================================
def read_obj(path):
    path = Path(path)
    if not path.is_file():
        raise MeshError(f"OBJ file not found: {path}")
    return load_surface(path.read_bytes())


def write_obj(surface, path):
    Path(path).write_text(save_surface(surface), encoding="utf-8")
    return Path(path)


def initial_surface(spec, seed=0):
    """
    Builds the starting mesh from a SurfaceSpec: an OBJ file or a sampled analytic
    surface, optionally jittered along the normals by `noise`·h_min (seeded).
    """
    if spec.kind == "obj":
        surface = read_obj(spec.path)
    else:
        surface = sample_mesh(AnalyticSurface.from_dict(spec.analytic_parameters()), spec.resolution)
    if spec.noise > 0:
        rng = np.random.default_rng(seed)
        amplitude = spec.noise * min_edge_length(surface)
        nu = np.asarray(vertex_normals(surface))
        jitter = rng.uniform(-amplitude, amplitude, size=surface.n_vertices)
        surface = surface.with_vertices(surface.vertices + jitter[:, None] * nu)
    return surface


# =========================================================
# 📸 SNAPSHOTS
# =========================================================
def write_snapshots(snapshots, directory):
    """OBJ per snapshot with zero-padded sequence numbers, plus an index CSV of times."""
    directory = Path(directory)
    directory.mkdir(parents=True, exist_ok=True)
    rows = []
    for snap in snapshots:
        path = write_obj(snap.surface, directory / SNAPSHOT_PATTERN.format(snap.index))
        rows.append({"index": snap.index, "time": snap.time, "step": snap.step, "file": path.name})
    pd.DataFrame(rows, columns=["index", "time", "step", "file"]).to_csv(directory / "snapshots.csv", index=False)
    return [directory / r["file"] for r in rows]


def read_snapshots(directory):
    directory = Path(directory)
    index = directory / "snapshots.csv"
    if index.is_file():
        df = pd.read_csv(index, float_precision="round_trip")
    else:
        files = sorted(directory.glob("snapshot_*.obj"))
        df = pd.DataFrame({
            "index": range(len(files)),
            "time": np.nan,
            "step": 0,
            "file": [f.name for f in files],
        })
    if df.empty:
        raise InsufficientDataError(f"no snapshots found in {directory}")
    return [
        Snapshot(int(row["index"]), float(row["time"]), int(row["step"]), read_obj(directory / row["file"]))
        for row in df.to_dict(orient="records")
    ]


# =========================================================
# 📊 TRAJECTORY CSV AND REPORTS
# =========================================================
def write_trajectory_csv(traj, path):
    traj.to_frame().to_csv(path, index=False, float_format="%.17g")
    return Path(path)


def read_trajectory_csv(path):
    path = Path(path)
    if not path.is_file():
        raise InsufficientDataError(f"trajectory CSV not found: {path}")
    df = pd.read_csv(path, keep_default_na=True, float_precision="round_trip")
    if df.empty:
        raise InsufficientDataError(f"trajectory CSV has no records: {path}")
    return Trajectory.from_frame(df)


def _json_default(value):
    if isinstance(value, np.generic):
        return value.item()
    if isinstance(value, np.ndarray):
        return value.tolist()
    if isinstance(value, Path):
        return str(value)
    raise TypeError(f"not JSON serializable: {type(value).__name__}")


def write_report(report, path):
    Path(path).write_text(json.dumps(report, indent=2, default=_json_default), encoding="utf-8")
    return Path(path)
