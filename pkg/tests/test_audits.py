from dataclasses import replace

import numpy as np
import pandas as pd
import pytest
from numpy.testing import assert_allclose

from diagnostics.audits import blowup_analysis, monotonicity_audit
from diagnostics.observables import DiagnosticsRecord
from diagnostics.trajectory import Snapshot, Trajectory, trajectory_columns
from geometry.surface_mesh import icosphere
from utils.errors import InsufficientDataError

FOUR_PI = 4 * np.pi


def _record(step, energy, int_Ao2=0.0, willmore=FOUR_PI, event=""):
    return DiagnosticsRecord(
        time=0.01 * step,
        area=FOUR_PI,
        volume=FOUR_PI / 3,
        willmore=willmore + 0.5 * int_Ao2,
        energy_total=energy,
        int_Ao2=int_Ao2,
        int_A2=willmore * 2,
        li_yau=willmore + 0.5 * int_Ao2 < 8 * np.pi,
        eta={0.5: 1.0},
        roundness=0.0,
        isoperimetric=1.0,
        min_edge=0.1,
        max_W=4.0,
        event=event,
        dissipation=1.0,
        int_W00=0.0,
        step=step,
    )


def _trajectory(energies, **kwargs):
    return Trajectory(records=[_record(i, e, **kwargs) for i, e in enumerate(energies)], radii=(0.5,))


def test_descending_energies_pass():
    report = monotonicity_audit(_trajectory([30.0, 29.0, 28.5, 28.4]), theorem_mode=True)
    assert report.passed
    assert report.checked_pairs == 3
    assert report.to_dict()["counts"] == {"energy": 0, "tracefree": 0, "ledger": 0, "li_yau": 0, "remesh_drift": 0}


def test_reversed_trajectory_flags_every_pair():
    report = monotonicity_audit(_trajectory([28.4, 28.5, 29.0, 30.0]))
    assert report.count("energy") == 3
    assert not report.passed


def test_remesh_intervals_are_exempt():
    records = [_record(0, 30.0), _record(1, 30.5, event="remesh"), _record(2, 30.4)]
    report = monotonicity_audit(Trajectory(records=records))
    assert report.passed
    assert report.skipped_remesh == [1]
    assert report.checked_pairs == 1


def test_tracefree_growth_only_checked_in_theorem_mode():
    records = [_record(0, 30.0, int_Ao2=0.1), _record(1, 29.0, int_Ao2=0.5)]
    assert monotonicity_audit(Trajectory(records=records)).passed
    assert monotonicity_audit(Trajectory(records=records), theorem_mode=True).count("tracefree") == 1


def test_ledger_and_li_yau_violations():
    records = [_record(0, 60.0), _record(1, 59.0, willmore=9 * np.pi)]
    report = monotonicity_audit(Trajectory(records=records))
    assert report.count("ledger") == 1
    assert report.count("li_yau") == 1
    assert_allclose(report.ledger_tolerance, 0.05 * FOUR_PI)


def test_audit_needs_records():
    with pytest.raises(InsufficientDataError):
        monotonicity_audit(Trajectory())


def test_frame_round_trip_keeps_columns_and_values():
    traj = _trajectory([30.0, 29.0], event="")
    traj.records[1].event = "remesh;volume_sign"
    df = traj.to_frame()
    assert list(df.columns) == trajectory_columns((0.5,))
    assert "eta_rho_0.5" in df.columns
    back = Trajectory.from_frame(df)
    assert back.radii == (0.5,)
    assert back.records[1].event == "remesh;volume_sign"
    assert back.records[0].event == ""
    assert back.records[1].energy_total == 29.0
    assert back.records[1].step == 1


def test_frame_without_required_columns_is_rejected():
    with pytest.raises(InsufficientDataError):
        Trajectory.from_frame(pd.DataFrame({"time": [0.0]}))


def test_blowup_needs_three_snapshots():
    snaps = [Snapshot(i, 0.1 * i, i, icosphere(1)) for i in range(2)]
    with pytest.raises(InsufficientDataError):
        blowup_analysis(snaps)
    with pytest.raises(InsufficientDataError):
        blowup_analysis(Trajectory(snapshots=snaps))


def test_blowup_of_rounding_spheroids():
    base = icosphere(3)
    snaps = []
    for i, (size, stretch) in enumerate([(1.0, 1.6), (0.7, 1.3), (0.4, 1.1), (0.2, 1.02)]):
        V = size * base.vertices * np.array([1.0, 1.0, stretch]) + np.array([0.3, 0.0, -0.2])
        snaps.append(Snapshot(i, 0.01 * i, 10 * i, base.with_vertices(V)))
    report = blowup_analysis(snaps, window=3)
    assert len(report.residuals) == 3
    assert report.residual_decreasing
    assert report.tracefree_decreasing
    assert report.scales[0] > report.scales[-1]
    assert report.int_Ao2[-1] < report.initial_int_Ao2
    assert report.to_dict()["final_residual"] == report.final_residual


def test_remesh_drift_over_budget_is_a_violation():
    within = replace(_record(1, 30.5, event="remesh"), remesh_area_drift=5e-4, remesh_willmore_drift=1e-3)
    over = replace(_record(2, 30.6, event="remesh"), remesh_area_drift=2e-3, remesh_willmore_drift=1e-3)
    report = monotonicity_audit(Trajectory(records=[_record(0, 30.0), within, over]))
    assert report.count("remesh_drift") == 1
    assert report.count("energy") == 0
    assert report.violations[0]["step"] == 2
    assert_allclose(report.max_area_drift, 2e-3)
    assert monotonicity_audit(Trajectory(records=[_record(0, 30.0), over]), area_drift_budget=1e-2).passed


def test_property_failures_depend_on_theorem_mode():
    records = [_record(0, 30.0, int_Ao2=0.1), _record(1, 29.0, int_Ao2=0.5, willmore=9 * np.pi)]
    relaxed = monotonicity_audit(Trajectory(records=records))
    assert relaxed.count("li_yau") == 1
    assert relaxed.property_failures() == []
    strict = monotonicity_audit(Trajectory(records=records), theorem_mode=True)
    assert {v["kind"] for v in strict.property_failures()} == {"tracefree", "li_yau"}
