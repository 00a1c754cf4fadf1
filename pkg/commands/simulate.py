import logging
from concurrent.futures import ThreadPoolExecutor

from diagnostics.audits import blowup_analysis, monotonicity_audit
from diagnostics.charts import write_trajectory_chart
from diagnostics.observables import roundness
from flow.energy import helfrich_energy, smallness_check
from flow.flow_engine import run as run_flow
from flow.sphere_oracle import SphereTrajectory, theorem_bound
from utils.config import load_config, save_config
from utils.data_loader import initial_surface, write_report, write_snapshots, write_trajectory_csv
from utils.db_manager import store_run
from utils.errors import OracleError, WillmoreLabError

logger = logging.getLogger(__name__)

EXIT_OK, EXIT_FAILURE, EXIT_DEGENERATED = 0, 1, 2


def _sphere_oracle(config):
    if config.surface.kind != "sphere" or config.params.c0 != 0:
        return None
    try:
        return SphereTrajectory(config.surface.radius, config.params.lambda1, config.params.lambda2)
    except OracleError:
        return None


def simulate(config, progress=False, db_url=None):
    """
    Runs one experiment and writes its artifacts:
    trajectory.csv, snapshots/, trajectory.html, config.json and report.json.
    Returns (exit code, report dict).
    """
    out = config.resolved_output_dir()
    out.mkdir(parents=True, exist_ok=True)
    surface = initial_surface(config.surface, config.seed)
    smallness = smallness_check(surface, config.params, config.epsilon2) if config.theorem_mode else None
    initial_energy = helfrich_energy(surface, config.params).total

    logger.info("📐 %s: %s, %d vertices", config.name, config.surface.kind, surface.n_vertices)
    traj = run_flow(
        surface,
        config.params,
        policy=config.policy,
        stop=config.stop,
        record_every=config.diagnostics.record_every,
        snapshot_every=config.snapshots.every,
        radii=config.diagnostics.radii,
        progress=progress,
    )

    artifacts = {
        "config": save_config(config, out / "config.json"),
        "trajectory_csv": write_trajectory_csv(traj, out / "trajectory.csv"),
    }
    frame = traj.to_frame()
    oracle = _sphere_oracle(config)
    artifacts["chart"] = write_trajectory_chart(frame, out / "trajectory.html", oracle=oracle, title=config.name)
    if traj.snapshots:
        artifacts["snapshots"] = write_snapshots(traj.snapshots, out / "snapshots")

    audit = monotonicity_audit(
        traj,
        theorem_mode=config.theorem_mode,
        area_drift_budget=config.policy.remesh.area_drift_budget,
        willmore_drift_budget=config.policy.remesh.willmore_drift_budget,
    )
    try:
        blowup = blowup_analysis(traj).to_dict()
    except WillmoreLabError as e:
        logger.info("blowup analysis skipped: %s", e)
        blowup = None
    try:
        final_roundness = roundness(traj.final_surface).to_dict()
    except WillmoreLabError as e:
        logger.warning("⚠️ final roundness unavailable: %s", e)
        final_roundness = None

    bound = theorem_bound(initial_energy, config.params.lambda1) if config.params.lambda1 > 0 else None
    observed = traj.extinction_time
    bound_ok = None if bound is None or observed is None else bool(observed < bound)

    if traj.reason == "degeneration":
        status, code = "degenerated", EXIT_DEGENERATED
    elif bound_ok is False or audit.property_failures():
        status, code = "property_failure", EXIT_FAILURE
    else:
        status, code = "success", EXIT_OK

    report = {
        "name": config.name,
        "status": status,
        "termination_reason": traj.reason,
        "message": traj.message,
        "summary": traj.summary(),
        "observed_extinction_time": observed,
        "initial_energy": initial_energy,
        "theorem_bound": bound,
        "theorem_bound_satisfied": bound_ok,
        "oracle_extinction_time": oracle.extinction_time if oracle else None,
        "oracle_relative_error": abs(observed / oracle.extinction_time - 1.0) if oracle and observed else None,
        "smallness": smallness.to_dict() if smallness else None,
        "monotonicity_audit": audit.to_dict(),
        "blowup": blowup,
        "final_roundness": final_roundness,
        "artifacts": {},
    }
    artifacts["report"] = out / "report.json"
    report["artifacts"] = {k: (list(map(str, v)) if isinstance(v, list) else str(v)) for k, v in artifacts.items()}
    write_report(report, artifacts["report"])
    store_run(config.name, {k: v for k, v in report.items() if not isinstance(v, dict)}, frame, db_url=db_url)

    marker = {"success": "✅", "degenerated": "⚠️", "property_failure": "❌"}[status]
    logger.info("%s %s: %s (T = %s, bound = %s)", marker, config.name, traj.reason, observed, bound)
    return code, report


def _simulate_path(path, progress, db_url):
    try:
        config = load_config(path)
        return simulate(config, progress=progress, db_url=db_url)[0]
    except WillmoreLabError as e:
        logger.error("❌ %s: %s", path, e)
        return EXIT_FAILURE


def run(args):
    """simulate <config.json> [...] [--jobs N]"""
    paths = list(args.configs)
    jobs = max(1, min(args.jobs, len(paths)))
    if jobs == 1:
        codes = [_simulate_path(p, args.progress, args.db_url) for p in paths]
    else:
        with ThreadPoolExecutor(max_workers=jobs) as pool:
            codes = list(pool.map(lambda p: _simulate_path(p, False, args.db_url), paths))
    return max(codes)
