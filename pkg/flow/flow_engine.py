import logging
import math
from collections import deque
from dataclasses import dataclass, field, replace

import numpy as np
from tqdm import tqdm

from diagnostics.observables import compute_record
from diagnostics.trajectory import Snapshot, Trajectory
from flow.energy import euler_lagrange, helfrich_energy
from flow.remesh import RemeshPolicy, remesh
from geometry.discrete_geometry import curvature_bundle, signed_volume, total_area
from geometry.surface_mesh import min_edge_length
from utils.errors import ConfigError, DegenerateMeshError, DegenerationError, FlowError, GeometryError, MeshError

logger = logging.getLogger(__name__)

# Area samples kept for the late-time extinction fit.
EXTRAPOLATION_SAMPLES = 10
# A new fit sample is taken each time the area falls by this factor.
EXTRAPOLATION_AREA_FACTOR = 0.9
# A step may raise the total energy by at most this fraction of |E|; dt is halved otherwise.
STEP_ENERGY_RTOL = 1e-10
MAX_BACKTRACKS = 12


# =========================================================
# ⚙️ STEP POLICY, STOPPING SPEC, STATE
# =========================================================
@dataclass(frozen=True)
class StepPolicy:
    cfl: float = 1e-2
    dt_max: float = None
    remesh_every: int = 25
    remesh: RemeshPolicy = field(default_factory=RemeshPolicy)

    def __post_init__(self):
        if not 0 < self.cfl <= 1:
            raise ConfigError(f"policy.cfl must be in (0, 1], got {self.cfl}")
        if self.dt_max is not None and not self.dt_max > 0:
            raise ConfigError(f"policy.dt_max must be > 0, got {self.dt_max}")
        if self.remesh_every < 0:
            raise ConfigError(f"policy.remesh_every must be >= 0 (0 disables), got {self.remesh_every}")

    def time_step(self, h_min, max_W):
        """dt = k·h⁴ / (1 + max|W|·h), capped by dt_max."""
        dt = self.cfl * h_min ** 4 / (1.0 + max_W * h_min)
        if self.dt_max is not None:
            dt = min(dt, self.dt_max)
        return dt


@dataclass(frozen=True)
class StopSpec:
    t_max: float = math.inf
    max_steps: int = 1_000_000
    area_floor_fraction: float = 1e-4

    def __post_init__(self):
        if not self.t_max > 0:
            raise ConfigError(f"stop.t_max must be > 0, got {self.t_max}")
        if self.max_steps < 1:
            raise ConfigError(f"stop.max_steps must be >= 1, got {self.max_steps}")
        if not 0 < self.area_floor_fraction < 1:
            raise ConfigError(f"stop.area_floor_fraction must be in (0, 1), got {self.area_floor_fraction}")


@dataclass(frozen=True)
class FlowState:
    surface: object
    time: float = 0.0
    step_index: int = 0
    params: object = None
    hooks: tuple = ()


# =========================================================
# 👣 ONE EXPLICIT STEP
# =========================================================
def step(state, policy, dt=None, bundle=None, W=None):
    """
    f ← f + dt·W·ν_out, which is ∂f/∂t = -W·ν with the inward normal.
    dt defaults to the policy's stability estimate; dt = 0 returns the state unchanged.
    """
    if dt is not None and dt < 0:
        raise FlowError(f"time step must be non-negative, got {dt}")
    if dt == 0:
        return state
    s = state.surface
    try:
        b = bundle or curvature_bundle(s)
        W = np.asarray(W if W is not None else euler_lagrange(s, state.params, bundle=b))
        if dt is None:
            dt = policy.time_step(min_edge_length(s), float(np.abs(W).max()))
        velocity = W[:, None] * np.asarray(b.nu)
        if not np.all(np.isfinite(velocity)):
            raise FlowError(f"non-finite velocity at step {state.step_index}")
        moved = s.with_vertices(s.vertices + dt * velocity)
    except (DegenerateMeshError, GeometryError) as e:
        raise DegenerationError(str(e), step_index=state.step_index, time=state.time) from e
    return replace(state, surface=moved, time=state.time + dt, step_index=state.step_index + 1)


def _extrapolate_extinction(samples):
    """Zero of a straight-line fit of area against time over the late samples."""
    if len(samples) < 3:
        return None
    t, area = np.array(samples).T
    slope, intercept = np.polyfit(t, area, 1)
    if not slope < 0:
        return None
    return float(-intercept / slope)


def _descent_step(state, policy, dt, bundle, W, energy):
    """
    Takes one step and halves dt while the total energy would rise by more than
    STEP_ENERGY_RTOL·|E|. After MAX_BACKTRACKS halvings the last step is kept.
    Returns (state, bundle, energy, halvings) of the accepted step.
    """
    params = state.params
    for halvings in range(MAX_BACKTRACKS + 1):
        moved = step(state, policy, dt=dt, bundle=bundle, W=W)
        b = curvature_bundle(moved.surface)
        e = helfrich_energy(moved.surface, params, bundle=b).total
        if e <= energy + STEP_ENERGY_RTOL * abs(energy):
            break
        dt *= 0.5
    else:
        logger.debug("energy still rising after %d halvings at step %d", MAX_BACKTRACKS, state.step_index)
    return moved, b, e, halvings


# =========================================================
# 🏃 RUN
# =========================================================
def run(
    initial,
    params,
    policy=None,
    stop=None,
    record_every=10,
    snapshot_every=None,
    radii=(),
    progress=False,
    hooks=(),
):
    """
    Steps until extinction (area below the floor), degeneration, t_max or the step budget.
    1. Records diagnostics every `record_every` steps and at termination.
    2. Keeps a snapshot every `snapshot_every` steps, plus the final surface.
    3. Remeshes every `policy.remesh_every` steps: quality repair when needed, and
       coarsening against the initial shortest edge so the step size stops collapsing with h⁴.
    4. Backtracks dt whenever a step would raise the total energy.
    5. Estimates the extinction time from the floor crossing and from the late area trend.
    Mesh and geometry failures anywhere in the loop end the run as a degeneration.
    """
    policy = policy or StepPolicy()
    stop = stop or StopSpec()
    if record_every < 1:
        raise ConfigError(f"record_every must be >= 1, got {record_every}")

    state = FlowState(surface=initial, params=params, hooks=tuple(hooks))
    traj = Trajectory(radii=tuple(radii))
    initial_area = total_area(initial)
    floor = stop.area_floor_fraction * initial_area
    traj.initial_energy = helfrich_energy(initial, params).total
    reference_edge = float(initial.edge_lengths.min())

    pending_events = []
    drift = {"area": 0.0, "willmore": 0.0}
    samples = deque(maxlen=EXTRAPOLATION_SAMPLES)
    samples.append((0.0, initial_area))
    last_sample_area = initial_area
    previous = (0.0, initial_area)
    volume_sign = np.sign(signed_volume(initial))

    def record(s, b=None):
        event = ";".join(pending_events)
        pending_events.clear()
        r = compute_record(s, params, state.time, state.step_index, radii, event, bundle=b)
        traj.records.append(replace(r, remesh_area_drift=drift["area"], remesh_willmore_drift=drift["willmore"]))
        drift.update(area=0.0, willmore=0.0)

    def snapshot(s):
        traj.snapshots.append(Snapshot(len(traj.snapshots), state.time, state.step_index, s))

    bar = tqdm(total=stop.max_steps, disable=not progress, desc="flow", unit="step")
    record(initial)
    if snapshot_every:
        snapshot(initial)

    b, energy = None, traj.initial_energy
    try:
        while True:
            s = state.surface
            area = total_area(s)
            if area < floor:
                traj.reason = "extinction"
                t0, a0 = previous
                traj.floor_crossing_time = t0 + (a0 - floor) / (a0 - area) * (state.time - t0) if a0 > area else state.time
                break
            if state.time >= stop.t_max:
                traj.reason = "t_max"
                break
            if state.step_index >= stop.max_steps:
                traj.reason = "step_budget"
                break
            previous = (state.time, area)

            try:
                if policy.remesh_every and state.step_index > 0 and state.step_index % policy.remesh_every == 0:
                    result = remesh(s, policy.remesh, reference_edge=reference_edge)
                    if result.performed:
                        pending_events.append("remesh")
                        drift.update(
                            area=max(drift["area"], result.area_drift),
                            willmore=max(drift["willmore"], result.willmore_drift),
                        )
                        state = replace(state, surface=result.surface)
                        s = state.surface
                        b = None
                if b is None:
                    b = curvature_bundle(s)
                    energy = helfrich_energy(s, params, bundle=b).total
                W = np.asarray(euler_lagrange(s, params, bundle=b))
                dt = policy.time_step(min_edge_length(s), float(np.abs(W).max()))
                dt = min(dt, stop.t_max - state.time)
                state, b, energy, halvings = _descent_step(state, policy, dt, b, W, energy)
            except (MeshError, GeometryError) as e:
                raise DegenerationError(str(e), step_index=state.step_index, time=state.time) from e
            if halvings:
                traj.backtracked_steps += 1
            bar.update(1)

            new_area = total_area(state.surface)
            if new_area <= EXTRAPOLATION_AREA_FACTOR * last_sample_area:
                samples.append((state.time, new_area))
                last_sample_area = new_area
            sign = np.sign(signed_volume(state.surface))
            if sign != volume_sign:
                logger.warning("⚠️ enclosed volume changed sign at step %d", state.step_index)
                pending_events.append("volume_sign")
                volume_sign = sign
            for hook in state.hooks:
                hook(state)

            if state.step_index % record_every == 0:
                record(state.surface, b)
            if snapshot_every and state.step_index % snapshot_every == 0:
                snapshot(state.surface)
    except DegenerationError as e:
        traj.reason = "degeneration"
        traj.message = str(e)
        logger.warning("⚠️ run degenerated at step %s (t = %s): %s", e.step_index, e.time, e)
    finally:
        bar.close()

    if traj.records[-1].step != state.step_index or pending_events:
        try:
            record(state.surface)
        except (GeometryError, MeshError) as e:
            logger.warning("⚠️ final record unavailable: %s", e)
    if snapshot_every and (not traj.snapshots or traj.snapshots[-1].step != state.step_index):
        snapshot(state.surface)

    traj.final_surface = state.surface
    if traj.reason == "extinction":
        samples.append((state.time, total_area(state.surface)))
        extrapolated = _extrapolate_extinction(list(samples))
        traj.extinction_time = extrapolated if extrapolated is not None else traj.floor_crossing_time
    logger.info(
        "✅ run finished: %s after %d steps (t = %.6g, %d vertices, %d backtracked steps)",
        traj.reason, state.step_index, state.time, state.surface.n_vertices, traj.backtracked_steps,
    )
    return traj
