import logging
from pathlib import Path

import numpy as np
import pandas as pd

from flow.energy import FlowParams, first_variation_check
from geometry.analytic_surfaces import AnalyticSurface, identity_suite, quadrature_integrate, torus_willmore_energy
from geometry.discrete_geometry import curvature_bundle, integrate, signed_volume, total_area
from geometry.surface_mesh import icosphere
from utils.config import output_root
from utils.data_loader import write_report
from utils.errors import WillmoreLabError

logger = logging.getLogger(__name__)

DEFAULT_LEVELS = (2, 3, 4)
GAUSS_BONNET_TOLERANCE = 1e-10
FINAL_H_TOLERANCE = 0.01
FIRST_VARIATION_TOLERANCE = 0.02
IDENTITY_TOLERANCE = 1e-4
VARIATION_PARAMS = FlowParams(c0=0.0, lambda1=1.0, lambda2=1.0)


def sphere_ladder(levels):
    """Unit-sphere errors per icosphere level, plus the first-variation residual (φ ≡ 1)."""
    rows = []
    for level in levels:
        s = icosphere(level)
        b = curvature_bundle(s)
        variation = first_variation_check(s, VARIATION_PARAMS, 1.0)
        rows.append({
            "level": level,
            "n_vertices": s.n_vertices,
            "H_max_rel_error": float(np.max(np.abs(np.asarray(b.H) - 2.0)) / 2.0),
            "K_max_rel_error": float(np.max(np.abs(np.asarray(b.K) - 1.0))),
            "area_rel_error": abs(total_area(s) / (4.0 * np.pi) - 1.0),
            "volume_rel_error": abs(signed_volume(s) / (4.0 * np.pi / 3.0) - 1.0),
            "gauss_bonnet_error": abs(integrate(s, b.K) - 4.0 * np.pi),
            "first_variation_residual": variation.residual,
        })
    df = pd.DataFrame(rows)
    # h halves per subdivision level
    for column in ("H_max_rel_error", "K_max_rel_error", "area_rel_error"):
        df[column.replace("_error", "_order")] = np.log2(df[column].shift(1) / df[column])
    return df


def _decreasing(values):
    return bool(np.all(np.diff(values) < 0))


def validate(levels=DEFAULT_LEVELS):
    """Returns (report dict, list of failed checks)."""
    ladder = sphere_ladder(levels)
    torus = identity_suite(AnalyticSurface.torus(2.0, 1.0), tolerance=IDENTITY_TOLERANCE)
    sphere = identity_suite(AnalyticSurface.sphere(1.0), tolerance=IDENTITY_TOLERANCE)
    ratio = np.sqrt(2.0)
    torus_energy = 0.25 * quadrature_integrate(AnalyticSurface.torus(ratio, 1.0), "H2")
    torus_energy_error = abs(torus_energy / torus_willmore_energy(ratio) - 1.0)
    analytic_variation = first_variation_check(AnalyticSurface.sphere(1.0), VARIATION_PARAMS, 1.0)

    checks = {
        "H error decreasing": _decreasing(ladder["H_max_rel_error"]),
        "K error decreasing": _decreasing(ladder["K_max_rel_error"]),
        "final H error within 1%": bool(ladder["H_max_rel_error"].iloc[-1] <= FINAL_H_TOLERANCE),
        "Gauss-Bonnet exact": bool((ladder["gauss_bonnet_error"] <= GAUSS_BONNET_TOLERANCE).all()),
        "first variation decreasing": _decreasing(ladder["first_variation_residual"]),
        "first variation within 2%": bool(ladder["first_variation_residual"].iloc[-1] <= FIRST_VARIATION_TOLERANCE),
        "analytic first variation": bool(analytic_variation.residual <= IDENTITY_TOLERANCE),
        "torus identity": torus.passed,
        "sphere identity": sphere.passed,
        "torus Willmore energy": bool(torus_energy_error <= IDENTITY_TOLERANCE),
    }
    failed = [name for name, ok in checks.items() if not ok]
    report = {
        "levels": list(levels),
        "sphere_ladder": ladder.to_dict(orient="records"),
        "identity_suites": {"torus": torus.to_dict(), "sphere": sphere.to_dict()},
        "torus_willmore": {"quadrature": torus_energy, "closed_form": torus_willmore_energy(ratio), "relative_error": torus_energy_error},
        "analytic_first_variation": analytic_variation.to_dict(),
        "checks": checks,
        "passed": not failed,
    }
    return report, failed


def run(args):
    """validate-operators [--levels a,b,c] [--out report.json]"""
    try:
        levels = tuple(int(x) for x in args.levels.split(",")) if args.levels else DEFAULT_LEVELS
    except ValueError:
        logger.error("❌ --levels must be a comma-separated list of integers, got %r", args.levels)
        return 1
    if len(levels) < 2 or any(level < 0 for level in levels):
        logger.error("❌ --levels needs at least two non-negative subdivision levels")
        return 1

    try:
        report, failed = validate(levels)
    except WillmoreLabError as e:
        logger.error("❌ operator validation crashed: %s", e)
        return 1

    out = Path(args.out) if args.out else output_root() / "validate_operators.json"
    out.parent.mkdir(parents=True, exist_ok=True)
    write_report(report, out)
    ladder = pd.DataFrame(report["sphere_ladder"])
    print(ladder[["level", "n_vertices", "H_max_rel_error", "K_max_rel_error", "gauss_bonnet_error", "first_variation_residual"]].to_string(index=False))
    for name in failed:
        logger.error("❌ check failed: %s", name)
    if failed:
        return 1
    logger.info("✅ all operator checks passed (report: %s)", out)
    return 0
