import logging
from dataclasses import asdict, dataclass, field

import numpy as np
from scipy.optimize import least_squares
from scipy.spatial import cKDTree

from flow.energy import LI_YAU_THRESHOLD, FlowParams, dissipation, euler_lagrange, helfrich_energy
from geometry.discrete_geometry import curvature_bundle, signed_volume, total_area
from geometry.surface_mesh import min_edge_length
from utils.errors import GeometryError

logger = logging.getLogger(__name__)

# Smallest/largest singular value of centered points below this is near-planar.
PLANARITY_TOLERANCE = 1e-6


# =========================================================
# 🎯 CURVATURE CONCENTRATION η(ρ)
# =========================================================
def _curvature_mass(s, bundle=None):
    """|A|² dμ per vertex, the same density the records integrate as int_A2."""
    b = bundle or curvature_bundle(s)
    return b.A2 * np.asarray(b.vertex_areas)


def _squared_distances(V, center):
    dx = V[:, 0] - center[0]
    dy = V[:, 1] - center[1]
    dz = V[:, 2] - center[2]
    return dx * dx + dy * dy + dz * dz


def brute_force_concentration(s, rho, bundle=None):
    """Max over every vertex center of the |A|²-mass within Euclidean distance ρ."""
    if not rho > 0:
        raise GeometryError(f"ball radius must be positive, got {rho}")
    mass = _curvature_mass(s, bundle)
    V = s.vertices
    totals = np.empty(s.n_vertices)
    for i in range(s.n_vertices):
        inside = np.flatnonzero(_squared_distances(V, V[i]) <= rho * rho)
        totals[i] = mass[inside].sum()
    best = int(np.argmax(totals))
    return float(totals[best]), V[best].copy()


def concentration(s, rho, bundle=None):
    """
    KD-tree version of `brute_force_concentration` with identical results:
    candidates come from an enlarged ball query, are refiltered with the same
    distance formula and summed in index order.
    """
    if not rho > 0:
        raise GeometryError(f"ball radius must be positive, got {rho}")
    mass = _curvature_mass(s, bundle)
    V = s.vertices
    tree = cKDTree(V)
    neighbours = tree.query_ball_point(V, r=rho * (1.0 + 1e-9) + 1e-12)
    totals = np.empty(s.n_vertices)
    for i, candidates in enumerate(neighbours):
        idx = np.sort(np.asarray(candidates, dtype=np.int64))
        inside = idx[_squared_distances(V[idx], V[i]) <= rho * rho]
        totals[i] = mass[inside].sum()
    best = int(np.argmax(totals))
    return float(totals[best]), V[best].copy()


# =========================================================
# ⚪ ROUNDNESS (least-squares sphere fit)
# =========================================================
@dataclass
class RoundnessReport:
    residual: float
    center: np.ndarray
    radius: float
    int_Ao2: float

    def to_dict(self):
        return {"residual": self.residual, "center": self.center.tolist(), "radius": self.radius, "int_Ao2": self.int_Ao2}


def _calculate_residual_sphere(parameters, x_values, y_values, z_values):
    x_centre, y_centre, z_centre, radius = parameters
    distance_from_centre = np.sqrt((x_values - x_centre) ** 2 + (y_values - y_centre) ** 2 + (z_values - z_centre) ** 2)
    return distance_from_centre - radius


def fit_sphere(points):
    """
    1. Algebraic fit |x|² = 2c·x + d (linear least squares) for the initial guess.
    2. Geometric refinement of the radial residuals with scipy least_squares.
    Returns (center, radius, residuals).
    """
    points = np.asarray(points, dtype=float)
    centered = points - points.mean(axis=0)
    sv = np.linalg.svd(centered, compute_uv=False)
    if sv[0] == 0 or sv[-1] / sv[0] < PLANARITY_TOLERANCE:
        raise GeometryError("sphere fit is degenerate: points are (near-)planar")

    system = np.column_stack([2.0 * points, np.ones(len(points))])
    rhs = np.einsum("ij,ij->i", points, points)
    solution, *_ = np.linalg.lstsq(system, rhs, rcond=None)
    center0 = solution[:3]
    radius0 = np.sqrt(max(solution[3] + center0 @ center0, 1e-300))

    fit = least_squares(
        _calculate_residual_sphere,
        np.concatenate([center0, [radius0]]),
        method="trf",
        jac="3-point",
        ftol=1e-14,
        xtol=1e-14,
        gtol=1e-14,
        args=(points[:, 0], points[:, 1], points[:, 2]),
    )
    center, radius = fit.x[:3], abs(fit.x[3])
    return center, radius, fit.fun


def roundness(s, bundle=None):
    """Sphere fit of the vertices; residual = RMS radial deviation / fitted radius."""
    center, radius, residuals = fit_sphere(s.vertices)
    b = bundle or curvature_bundle(s)
    return RoundnessReport(
        residual=float(np.sqrt(np.mean(residuals ** 2)) / radius),
        center=center,
        radius=float(radius),
        int_Ao2=b.integrate(b.Ao2),
    )


def rescale_blowup(s, center, r):
    """f ↦ (f - center) / r."""
    if not r > 0:
        raise GeometryError(f"blowup scale must be positive, got {r}")
    return s.with_vertices((s.vertices - np.asarray(center, dtype=float)) / r)


def isoperimetric_ratio(s):
    """36πV²/A³; 1 for round spheres."""
    return 36.0 * np.pi * signed_volume(s) ** 2 / total_area(s) ** 3


# =========================================================
# 📋 TRAJECTORY RECORDS
# =========================================================
@dataclass
class DiagnosticsRecord:
    time: float
    area: float
    volume: float
    willmore: float
    energy_total: float
    int_Ao2: float
    int_A2: float
    li_yau: bool
    eta: dict = field(default_factory=dict)
    roundness: float = float("nan")
    isoperimetric: float = float("nan")
    min_edge: float = float("nan")
    max_W: float = float("nan")
    event: str = ""
    dissipation: float = float("nan")
    int_W00: float = float("nan")
    step: int = 0
    n_vertices: int = 0
    # largest remesh drift since the previous record
    remesh_area_drift: float = 0.0
    remesh_willmore_drift: float = 0.0

    def to_dict(self):
        return asdict(self)


def compute_record(s, params, time, step, radii=(), event="", bundle=None, W=None):
    b = bundle or curvature_bundle(s)
    if W is None:
        W = euler_lagrange(s, params, bundle=b)
    W = np.asarray(W)
    energy = helfrich_energy(s, params, bundle=b)
    W00 = np.asarray(euler_lagrange(s, FlowParams(), bundle=b))
    try:
        fitted = roundness(s, bundle=b).residual
    except GeometryError as e:
        logger.warning("⚠️ roundness unavailable at step %d: %s", step, e)
        fitted = float("nan")
    return DiagnosticsRecord(
        time=float(time),
        area=total_area(s),
        volume=signed_volume(s),
        willmore=b.willmore(),
        energy_total=energy.total,
        int_Ao2=b.integrate(b.Ao2),
        int_A2=b.integrate(b.A2),
        li_yau=bool(b.willmore() < LI_YAU_THRESHOLD),
        eta={rho: concentration(s, rho, bundle=b)[0] for rho in radii},
        roundness=fitted,
        isoperimetric=isoperimetric_ratio(s),
        min_edge=min_edge_length(s),
        max_W=float(np.abs(W).max()),
        event=event,
        dissipation=dissipation(s, params, bundle=b),
        int_W00=b.integrate(W00 ** 2),
        step=int(step),
        n_vertices=s.n_vertices,
    )
