import logging
from dataclasses import dataclass, field

import numpy as np
import pandas as pd

from diagnostics.observables import DiagnosticsRecord
from utils.errors import InsufficientDataError

logger = logging.getLogger(__name__)

LEADING_COLUMNS = ["time", "area", "volume", "willmore", "energy_total", "int_Ao2", "int_A2", "li_yau"]
TRAILING_COLUMNS = ["roundness", "isoperimetric", "min_edge", "max_W", "event"]
EXTRA_COLUMNS = ["dissipation", "int_W00", "step", "n_vertices", "remesh_area_drift", "remesh_willmore_drift"]
TERMINATION_REASONS = ("extinction", "degeneration", "t_max", "step_budget")


def eta_column(rho):
    return f"eta_rho_{rho:g}"


def trajectory_columns(radii):
    """Fixed CSV order: leading, one eta column per ball radius, trailing, then extras."""
    return LEADING_COLUMNS + [eta_column(rho) for rho in radii] + TRAILING_COLUMNS + EXTRA_COLUMNS


@dataclass
class Snapshot:
    index: int
    time: float
    step: int
    surface: object


@dataclass
class Trajectory:
    records: list = field(default_factory=list)
    snapshots: list = field(default_factory=list)
    radii: tuple = ()
    reason: str = ""
    extinction_time: float = None
    floor_crossing_time: float = None
    initial_energy: float = None
    message: str = ""
    final_surface: object = None
    backtracked_steps: int = 0

    def __len__(self):
        return len(self.records)

    @property
    def final(self):
        if not self.records:
            raise InsufficientDataError("trajectory has no records")
        return self.records[-1]

    def to_frame(self):
        rows = []
        for r in self.records:
            row = r.to_dict()
            eta = row.pop("eta")
            row.update({eta_column(rho): eta.get(rho, np.nan) for rho in self.radii})
            rows.append(row)
        return pd.DataFrame(rows, columns=trajectory_columns(self.radii))

    @classmethod
    def from_frame(cls, df):
        """Rebuilds records from a trajectory CSV frame (snapshots are not part of the CSV)."""
        missing = [c for c in LEADING_COLUMNS + TRAILING_COLUMNS if c not in df.columns]
        if missing:
            raise InsufficientDataError(f"trajectory frame is missing columns {missing}")
        eta_columns = [c for c in df.columns if c.startswith("eta_rho_")]
        radii = tuple(float(c[len("eta_rho_"):]) for c in eta_columns)
        records = []
        for row in df.to_dict(orient="records"):
            event = row.get("event")
            records.append(DiagnosticsRecord(
                time=float(row["time"]),
                area=float(row["area"]),
                volume=float(row["volume"]),
                willmore=float(row["willmore"]),
                energy_total=float(row["energy_total"]),
                int_Ao2=float(row["int_Ao2"]),
                int_A2=float(row["int_A2"]),
                li_yau=bool(row["li_yau"]),
                eta={rho: float(row[c]) for rho, c in zip(radii, eta_columns)},
                roundness=float(row["roundness"]),
                isoperimetric=float(row["isoperimetric"]),
                min_edge=float(row["min_edge"]),
                max_W=float(row["max_W"]),
                event="" if event is None or (isinstance(event, float) and np.isnan(event)) else str(event),
                dissipation=float(row.get("dissipation", np.nan)),
                int_W00=float(row.get("int_W00", np.nan)),
                step=int(row.get("step", 0)),
                n_vertices=int(row.get("n_vertices", 0)),
                remesh_area_drift=float(row.get("remesh_area_drift", 0.0)),
                remesh_willmore_drift=float(row.get("remesh_willmore_drift", 0.0)),
            ))
        return cls(records=records, radii=radii)

    def summary(self):
        first, last = self.records[0], self.final
        return {
            "reason": self.reason,
            "records": len(self.records),
            "snapshots": len(self.snapshots),
            "steps": last.step,
            "final_time": last.time,
            "extinction_time": self.extinction_time,
            "floor_crossing_time": self.floor_crossing_time,
            "initial_energy": first.energy_total,
            "final_energy": last.energy_total,
            "initial_int_Ao2": first.int_Ao2,
            "final_int_Ao2": last.int_Ao2,
            "backtracked_steps": self.backtracked_steps,
            "final_vertices": last.n_vertices,
            "message": self.message,
        }
