import logging
from dataclasses import asdict, dataclass, field

import numpy as np

from diagnostics.observables import rescale_blowup, roundness
from geometry.discrete_geometry import curvature_bundle, total_area
from utils.errors import InsufficientDataError

logger = logging.getLogger(__name__)

ENERGY_RTOL = 1e-8
TRACEFREE_ATOL = 1e-4 * 4.0 * np.pi
LEDGER_FLOOR = 0.05 * 4.0 * np.pi
VIOLATION_KINDS = ("energy", "tracefree", "ledger", "li_yau", "remesh_drift")
AREA_DRIFT_BUDGET = 1e-3
WILLMORE_DRIFT_BUDGET = 5e-3


# =========================================================
# 📉 MONOTONICITY AUDIT
# =========================================================
@dataclass
class AuditReport:
    violations: list = field(default_factory=list)
    checked_pairs: int = 0
    skipped_remesh: list = field(default_factory=list)
    ledger_tolerance: float = 0.0
    theorem_mode: bool = False
    max_area_drift: float = 0.0
    max_willmore_drift: float = 0.0

    def count(self, kind):
        return sum(1 for v in self.violations if v["kind"] == kind)

    def property_failures(self):
        """Violations of the flow's claims; the Li–Yau and ∫|A°|² claims only hold in theorem mode."""
        kinds = {"energy", "remesh_drift"} | ({"tracefree", "li_yau"} if self.theorem_mode else set())
        return [v for v in self.violations if v["kind"] in kinds]

    @property
    def passed(self):
        return not self.violations

    def to_dict(self):
        return dict(asdict(self), counts={k: self.count(k) for k in VIOLATION_KINDS}, passed=self.passed)


def monotonicity_audit(
    traj,
    theorem_mode=False,
    chi=2,
    energy_rtol=ENERGY_RTOL,
    tracefree_atol=TRACEFREE_ATOL,
    ledger_tol=None,
    area_drift_budget=AREA_DRIFT_BUDGET,
    willmore_drift_budget=WILLMORE_DRIFT_BUDGET,
):
    """
    Checks the record stream:
    (a) total energy non-increasing, up to energy_rtol·|E|;
    (b) ∫|A°|² non-increasing up to tracefree_atol (theorem mode only);
    (c) |¼∫H² - ½∫|A°|² - 2πχ| within ledger_tol, default max(5%·4π, 2 × initial defect);
    (d) ¼∫H² < 8π at every record;
    (e) area and Willmore drift of remeshing within their budgets.
    Intervals that end in a remeshing event are exempt from (a) and (b) but not from (e).
    """
    records = traj.records
    if not records:
        raise InsufficientDataError("monotonicity audit needs at least one record")
    defects = [abs(r.willmore - 0.5 * r.int_Ao2 - 2.0 * np.pi * chi) for r in records]
    if ledger_tol is None:
        ledger_tol = max(LEDGER_FLOOR, 2.0 * defects[0])
    report = AuditReport(ledger_tolerance=ledger_tol, theorem_mode=theorem_mode)

    for i, r in enumerate(records):
        if defects[i] > ledger_tol:
            report.violations.append({"kind": "ledger", "step": r.step, "time": r.time, "detail": defects[i]})
        if not r.li_yau:
            report.violations.append({"kind": "li_yau", "step": r.step, "time": r.time, "detail": r.willmore})
        if i == 0:
            continue
        prev = records[i - 1]
        if "remesh" in (r.event or ""):
            report.skipped_remesh.append(r.step)
            report.max_area_drift = max(report.max_area_drift, r.remesh_area_drift)
            report.max_willmore_drift = max(report.max_willmore_drift, r.remesh_willmore_drift)
            if r.remesh_area_drift > area_drift_budget or r.remesh_willmore_drift > willmore_drift_budget:
                report.violations.append({
                    "kind": "remesh_drift",
                    "step": r.step,
                    "time": r.time,
                    "detail": max(r.remesh_area_drift / area_drift_budget, r.remesh_willmore_drift / willmore_drift_budget),
                })
            continue
        report.checked_pairs += 1
        increase = r.energy_total - prev.energy_total
        if increase > energy_rtol * abs(prev.energy_total):
            report.violations.append({"kind": "energy", "step": r.step, "time": r.time, "detail": increase})
        if theorem_mode and r.int_Ao2 - prev.int_Ao2 > tracefree_atol:
            report.violations.append({"kind": "tracefree", "step": r.step, "time": r.time, "detail": r.int_Ao2 - prev.int_Ao2})

    if report.violations:
        logger.warning("⚠️ monotonicity audit: %d violations over %d pairs", len(report.violations), report.checked_pairs)
    return report


# =========================================================
# 🔬 BLOWUP ANALYSIS
# =========================================================
@dataclass
class BlowupReport:
    times: list
    scales: list
    residuals: list
    int_Ao2: list
    initial_int_Ao2: float

    @property
    def residual_decreasing(self):
        return self.residuals[-1] < self.residuals[0]

    @property
    def tracefree_decreasing(self):
        return self.int_Ao2[-1] < self.int_Ao2[0]

    @property
    def final_residual(self):
        return self.residuals[-1]

    def to_dict(self):
        return dict(
            asdict(self),
            residual_decreasing=self.residual_decreasing,
            tracefree_decreasing=self.tracefree_decreasing,
            final_residual=self.final_residual,
        )


def blowup_analysis(traj, window=5):
    """
    Rescales the last `window` snapshots around their area-weighted barycenter by
    r = √(area/4π) and fits spheres to the unit-area blowups.
    """
    snapshots = traj.snapshots if hasattr(traj, "snapshots") else list(traj)
    if len(snapshots) < 3:
        raise InsufficientDataError(f"blowup analysis needs at least 3 snapshots, got {len(snapshots)}")
    initial = curvature_bundle(snapshots[0].surface)
    late = snapshots[-max(3, window):]

    times, scales, residuals, tracefree = [], [], [], []
    for snap in late:
        s = snap.surface
        b = curvature_bundle(s)
        weights = np.asarray(b.vertex_areas)
        center = weights @ s.vertices / weights.sum()
        r = float(np.sqrt(total_area(s) / (4.0 * np.pi)))
        fit = roundness(rescale_blowup(s, center, r))
        times.append(snap.time)
        scales.append(r)
        residuals.append(fit.residual)
        tracefree.append(fit.int_Ao2)
    return BlowupReport(times, scales, residuals, tracefree, initial.integrate(initial.Ao2))
