import logging
from pathlib import Path

from diagnostics.audits import blowup_analysis, monotonicity_audit
from utils.data_loader import read_snapshots, read_trajectory_csv, write_report
from utils.errors import WillmoreLabError

logger = logging.getLogger(__name__)


def analyze(csv_path, blowup_dir=None, theorem_mode=False, chi=2):
    traj = read_trajectory_csv(csv_path)
    audit = monotonicity_audit(traj, theorem_mode=theorem_mode, chi=chi)
    report = {
        "trajectory": str(csv_path),
        "records": len(traj),
        "monotonicity_audit": audit.to_dict(),
        "blowup": None,
    }
    passed = audit.passed
    if blowup_dir is not None:
        blowup = blowup_analysis(read_snapshots(blowup_dir))
        report["blowup"] = blowup.to_dict()
        if theorem_mode:
            passed = passed and blowup.residual_decreasing and blowup.tracefree_decreasing
    report["passed"] = passed
    return report


def run(args):
    """analyze <trajectory.csv> [--blowup <snapshot dir>] [--theorem-mode] [--out report.json]"""
    try:
        report = analyze(args.trajectory, args.blowup, args.theorem_mode, args.chi)
    except WillmoreLabError as e:
        logger.error("❌ %s", e)
        return 1

    out = Path(args.out) if args.out else Path(args.trajectory).with_name("analysis.json")
    write_report(report, out)
    counts = report["monotonicity_audit"]["counts"]
    print(", ".join(f"{kind}: {n}" for kind, n in counts.items()))
    if report["blowup"]:
        print(f"blowup residuals: {report['blowup']['residuals']}")
    if not report["passed"]:
        logger.error("❌ audit found violations (report: %s)", out)
        return 1
    logger.info("✅ audit clean (report: %s)", out)
    return 0
