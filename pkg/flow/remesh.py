import logging
from dataclasses import dataclass, field

import numpy as np

from geometry.discrete_geometry import curvature_bundle, total_area
from geometry.surface_mesh import (
    MeshQuality,
    TriangleSurface,
    corner_angles,
    mesh_quality,
    min_edge_length,
)
from utils.errors import ConfigError, DegenerateMeshError, DegenerationError, MeshError

logger = logging.getLogger(__name__)

# Opposite angles summing past pi + this are non-Delaunay.
DELAUNAY_SLACK = 1e-10
MAX_HALVINGS = 6
# A collapse may turn no surviving face normal by more than 30°.
COLLAPSE_NORMAL_COS = np.sqrt(3.0) / 2.0


# =========================================================
# ⚙️ REMESH POLICY
# =========================================================
@dataclass(frozen=True)
class RemeshPolicy:
    min_angle_deg: float = 25.0
    max_edge_ratio: float = 4.0
    degenerate_min_angle_deg: float = 1.0
    iterations: int = 3
    normal_tolerance: float = 0.05
    relaxation: float = 0.5
    area_drift_budget: float = 1e-3
    willmore_drift_budget: float = 5e-3
    # edge operations, relative to a reference edge length
    split_ratio: float = 4.0 / 3.0
    collapse_ratio: float = 0.8
    min_vertices: int = 162
    max_collapse_fraction: float = 0.02

    def __post_init__(self):
        if not 0 < self.degenerate_min_angle_deg < self.min_angle_deg < 60:
            raise ConfigError("remesh angles must satisfy 0 < degenerate_min_angle_deg < min_angle_deg < 60")
        if not self.max_edge_ratio > 1:
            raise ConfigError(f"remesh.max_edge_ratio must be > 1, got {self.max_edge_ratio}")
        if self.iterations < 1:
            raise ConfigError(f"remesh.iterations must be >= 1, got {self.iterations}")
        if not 0 < self.normal_tolerance <= 1:
            raise ConfigError(f"remesh.normal_tolerance must be in (0, 1], got {self.normal_tolerance}")
        if not 0 < self.relaxation <= 1:
            raise ConfigError(f"remesh.relaxation must be in (0, 1], got {self.relaxation}")
        if not 0 < self.collapse_ratio < 1 < self.split_ratio:
            raise ConfigError("remesh ratios must satisfy 0 < collapse_ratio < 1 < split_ratio")
        if self.min_vertices < 4:
            raise ConfigError(f"remesh.min_vertices must be >= 4, got {self.min_vertices}")
        if not 0 < self.max_collapse_fraction <= 0.5:
            raise ConfigError(f"remesh.max_collapse_fraction must be in (0, 0.5], got {self.max_collapse_fraction}")

    def acceptable(self, quality):
        return quality.min_angle_deg >= self.min_angle_deg and quality.edge_ratio <= self.max_edge_ratio


@dataclass
class RemeshResult:
    surface: TriangleSurface
    performed: bool
    flips: int = 0
    splits: int = 0
    collapses: int = 0
    max_displacement: float = 0.0
    max_normal_displacement: float = 0.0
    area_drift: float = 0.0
    willmore_drift: float = 0.0
    quality_before: MeshQuality = None
    quality_after: MeshQuality = None
    normal_budget: float = 0.0
    within_budget: bool = field(default=True)


# =========================================================
# 🔁 DELAUNAY EDGE FLIPS
# =========================================================
def _flip_pass(s):
    """
    One pass of intrinsic-Delaunay flips. Each face takes part in at most one flip.
    For f1 = (a, b, c) and f2 = (b, a, d) the new faces are (c, a, d) and (d, b, c).
    Returns (faces, number of flips).
    """
    t = s.topology
    faces = np.array(s.faces)
    angles = corner_angles(s)
    he = t.edge_halfedges
    f, c = he // 3, he % 3
    opposite = angles[f, (c + 2) % 3].sum(axis=1)
    candidates = np.flatnonzero(opposite > np.pi + DELAUNAY_SLACK)
    if len(candidates) == 0:
        return faces, 0

    V = s.vertices
    normals = s.face_cross / np.linalg.norm(s.face_cross, axis=1, keepdims=True)
    valence = np.diff(t.ring_offsets).copy()
    existing = set(map(tuple, t.edges.tolist()))
    touched = np.zeros(len(faces), dtype=bool)
    flips = 0

    for e in candidates[np.argsort(-opposite[candidates])]:
        f1, f2 = int(f[e, 0]), int(f[e, 1])
        if touched[f1] or touched[f2]:
            continue
        c1 = int(c[e, 0])
        a, b, apex1 = (int(faces[f1, (c1 + k) % 3]) for k in range(3))
        row2 = faces[f2].tolist()
        apex2 = next(v for v in row2 if v != a and v != b)
        if valence[a] <= 3 or valence[b] <= 3:
            continue
        if (min(apex1, apex2), max(apex1, apex2)) in existing:
            continue
        new1 = np.array([apex1, a, apex2])
        new2 = np.array([apex2, b, apex1])
        n1 = np.cross(V[new1[1]] - V[new1[0]], V[new1[2]] - V[new1[0]])
        n2 = np.cross(V[new2[1]] - V[new2[0]], V[new2[2]] - V[new2[0]])
        reference = normals[f1] + normals[f2]
        if np.dot(n1, reference) <= 0 or np.dot(n2, reference) <= 0:
            continue

        faces[f1], faces[f2] = new1, new2
        touched[f1] = touched[f2] = True
        existing.discard((min(a, b), max(a, b)))
        existing.add((min(apex1, apex2), max(apex1, apex2)))
        valence[a] -= 1
        valence[b] -= 1
        valence[apex1] += 1
        valence[apex2] += 1
        flips += 1
    return faces, flips


def delaunay_flips(s, max_passes=3):
    """Repeats flip passes until no edge qualifies; topology (and χ) is preserved."""
    total = 0
    for _ in range(max_passes):
        faces, flips = _flip_pass(s)
        if flips == 0:
            break
        s = TriangleSurface(s.vertices, faces)
        total += flips
    return s, total


# =========================================================
# ✂️ EDGE SPLITS AND COLLAPSES
# =========================================================
def _surface_point(V, nu, H, a, b, length):
    """Edge midpoint lifted by the chord sag H·|e|²/16 along the mean normal."""
    n = nu[a] + nu[b]
    n /= max(np.linalg.norm(n), 1e-300)
    return 0.5 * (V[a] + V[b]) + (0.5 * (H[a] + H[b]) * length ** 2 / 16.0) * n


def split_long_edges(s, threshold, bundle=None):
    """
    Splits every edge longer than `threshold` at a surface point, longest first.
    Each face takes part in at most one split per call. Adds V+1, E+3, F+2 per split, so χ is kept.
    Returns (surface, splits).
    """
    lengths = s.edge_lengths
    candidates = np.flatnonzero(lengths > threshold)
    if len(candidates) == 0:
        return s, 0
    b = bundle or curvature_bundle(s)
    nu, H = np.asarray(b.nu), np.asarray(b.H)
    V = s.vertices
    he = s.topology.edge_halfedges
    f, c = he // 3, he % 3
    faces = np.array(s.faces)
    touched = np.zeros(len(faces), dtype=bool)
    points, extra = [], []

    for e in candidates[np.argsort(-lengths[candidates], kind="stable")]:
        f1, f2 = int(f[e, 0]), int(f[e, 1])
        if touched[f1] or touched[f2]:
            continue
        c1 = int(c[e, 0])
        a, b_, apex1 = (int(faces[f1, (c1 + k) % 3]) for k in range(3))
        apex2 = next(int(v) for v in faces[f2] if v != a and v != b_)
        m = s.n_vertices + len(points)
        points.append(_surface_point(V, nu, H, a, b_, lengths[e]))
        # (a, b, apex1) and (b, a, apex2) become four faces around m
        faces[f1] = (a, m, apex1)
        faces[f2] = (b_, m, apex2)
        extra += [(m, b_, apex1), (m, a, apex2)]
        touched[f1] = touched[f2] = True

    split = TriangleSurface(np.vstack([V, points]), np.vstack([faces, extra]))
    return split, len(points)


def collapse_short_edges(s, threshold, min_vertices=4, max_collapses=None, bundle=None):
    """
    Contracts edges shorter than `threshold` into one surface point, shortest first.
    A collapse of (keep, drop) with opposite vertices c, d is taken only when
    1. neither end nor any of their neighbours took part in an earlier collapse of this call,
    2. keep and drop share exactly the neighbours c and d (the link condition, so χ and
       manifoldness survive), and c, d and the merged vertex keep valence >= 3,
    3. no surviving face normal turns by more than 30°.
    Returns (surface, collapses).
    """
    budget = s.n_vertices - min_vertices
    if max_collapses is not None:
        budget = min(budget, max_collapses)
    lengths = s.edge_lengths
    candidates = np.flatnonzero(lengths < threshold)
    if len(candidates) == 0 or budget <= 0:
        return s, 0

    b = bundle or curvature_bundle(s)
    nu, H = np.asarray(b.nu), np.asarray(b.H)
    V = np.array(s.vertices)
    faces = np.array(s.faces)
    edges = s.edges
    valence = np.diff(s.topology.ring_offsets).copy()
    locked = np.zeros(s.n_vertices, dtype=bool)
    removed = np.zeros(s.n_vertices, dtype=bool)
    dead = np.zeros(len(faces), dtype=bool)
    collapses = 0

    for e in candidates[np.argsort(lengths[candidates], kind="stable")]:
        if collapses >= budget:
            break
        keep, drop = int(edges[e, 0]), int(edges[e, 1])
        if locked[keep] or locked[drop]:
            continue
        ring_keep, ring_drop = s.one_ring(keep), s.one_ring(drop)
        common = np.intersect1d(ring_keep, ring_drop)
        if len(common) != 2 or np.any(valence[common] <= 3) or valence[keep] + valence[drop] - 4 < 3:
            continue

        star = np.union1d(s.vertex_faces(keep), s.vertex_faces(drop))
        on_edge = np.isin(faces[star], (keep, drop)).sum(axis=1) == 2
        survivors = star[~on_edge]
        point = _surface_point(V, nu, H, keep, drop, lengths[e])
        old = V[faces[survivors]]
        new = old.copy()
        new[np.isin(faces[survivors], (keep, drop))] = point
        n_old = np.cross(old[:, 1] - old[:, 0], old[:, 2] - old[:, 0])
        n_new = np.cross(new[:, 1] - new[:, 0], new[:, 2] - new[:, 0])
        scale = np.linalg.norm(n_old, axis=1) * np.linalg.norm(n_new, axis=1)
        cos = np.einsum("ij,ij->i", n_old, n_new) / np.maximum(scale, 1e-300)
        if not np.all(cos >= COLLAPSE_NORMAL_COS):
            continue

        V[keep] = point
        rows = faces[survivors]
        rows[rows == drop] = keep
        faces[survivors] = rows
        dead[star[on_edge]] = True
        removed[drop] = True
        valence[keep] += valence[drop] - 4
        valence[common] -= 1
        locked[[keep, drop]] = True
        locked[ring_keep] = True
        locked[ring_drop] = True
        collapses += 1

    if collapses == 0:
        return s, 0
    index = np.cumsum(~removed) - 1
    try:
        return TriangleSurface(V[~removed], index[faces[~dead]]), collapses
    except MeshError as err:
        logger.warning("⚠️ edge collapse rejected: %s", err)
        return s, 0


# =========================================================
# 🧽 TANGENTIAL SMOOTHING
# =========================================================
def _ring_centroids(s, V):
    edges = s.edges
    n = s.n_vertices
    valence = np.bincount(edges.ravel(), minlength=n).astype(float)
    sums = np.zeros((n, 3))
    np.add.at(sums, edges[:, 0], V[edges[:, 1]])
    np.add.at(sums, edges[:, 1], V[edges[:, 0]])
    return sums / valence[:, None]


def tangential_smoothing(s, policy, bundle=None):
    """
    Moves each vertex toward its one-ring centroid inside its tangent plane.
    1. Accumulate tangential moves d_t over `policy.iterations` relaxation sweeps.
    2. Clamp |d_t| so the curvature correction stays within tol * h_min.
    3. Apply d_t - (H/4)|d_t|^2 ν so vertices follow the surface.
    4. Halve the moves while any face normal would turn over or the smallest angle would shrink.
    Returns (surface, displacement, normal budget).
    """
    b = bundle or curvature_bundle(s)
    nu = np.asarray(b.nu)
    H = np.asarray(b.H)
    V0 = s.vertices
    h_min = min_edge_length(s)
    budget = policy.normal_tolerance * h_min
    floor = mesh_quality(s).min_angle_deg

    d = np.zeros_like(V0)
    for _ in range(policy.iterations):
        step = policy.relaxation * (_ring_centroids(s, V0 + d) - (V0 + d))
        d += step - np.einsum("ij,ij->i", step, nu)[:, None] * nu
    d -= np.einsum("ij,ij->i", d, nu)[:, None] * nu

    length = np.linalg.norm(d, axis=1)
    with np.errstate(divide="ignore"):
        cap = np.where(np.abs(H) > 0, np.sqrt(4.0 * budget / np.abs(H)), np.inf)
    scale = np.where(length > cap, cap / np.maximum(length, 1e-300), 1.0)
    d *= scale[:, None]

    old_normals = s.face_cross
    for _ in range(MAX_HALVINGS):
        sq = np.einsum("ij,ij->i", d, d)
        displacement = d - (0.25 * H * sq)[:, None] * nu
        V = V0 + displacement
        p = V[s.faces]
        new_normals = np.cross(p[:, 1] - p[:, 0], p[:, 2] - p[:, 0])
        if np.all(np.einsum("ij,ij->i", new_normals, old_normals) > 0):
            try:
                smoothed = s.with_vertices(V)
            except DegenerateMeshError:
                smoothed = None
            if smoothed is not None and mesh_quality(smoothed).min_angle_deg >= floor:
                return smoothed, displacement, budget
        d *= 0.5
    logger.debug("tangential smoothing skipped: no move kept the smallest angle")
    return s, np.zeros_like(V0), budget


# =========================================================
# 🛠️ REMESH
# =========================================================
def remesh(s, policy=None, force=False, reference_edge=None):
    """
    Edge collapses (coarsening), Delaunay flips, edge splits and tangential smoothing.
    1. With a `reference_edge`, edges below collapse_ratio·reference_edge are contracted
       while the mesh has more than `min_vertices` vertices.
    2. Flips, then splits of edges above split_ratio·(mean edge) when quality is still short;
       the split mesh is kept only when it raises the smallest angle.
    3. Smoothing never lowers the smallest angle.
    Skipped (identity) when quality is fine and nothing needs coarsening, unless `force` is set.
    Raises DegenerationError when the result is below the degenerate angle floor.
    """
    policy = policy or RemeshPolicy()
    before = mesh_quality(s)
    coarsen = (
        reference_edge is not None
        and s.n_vertices > policy.min_vertices
        and s.edge_lengths.min() < policy.collapse_ratio * reference_edge
    )
    if not force and not coarsen and policy.acceptable(before):
        return RemeshResult(surface=s, performed=False, quality_before=before, quality_after=before)

    b0 = curvature_bundle(s)
    area0, willmore0 = total_area(s), b0.willmore()
    current, collapses = s, 0
    if coarsen:
        current, collapses = collapse_short_edges(
            s,
            policy.collapse_ratio * reference_edge,
            min_vertices=policy.min_vertices,
            max_collapses=max(1, int(policy.max_collapse_fraction * s.n_vertices)),
            bundle=b0,
        )
    flipped, flips = delaunay_flips(current)

    splits = 0
    flipped_quality = mesh_quality(flipped)
    if force or not policy.acceptable(flipped_quality):
        threshold = policy.split_ratio * float(flipped.edge_lengths.mean())
        split, splits = split_long_edges(flipped, threshold)
        if splits:
            split, more = delaunay_flips(split)
            if mesh_quality(split).min_angle_deg > flipped_quality.min_angle_deg:
                flipped, flips = split, flips + more
            else:
                splits = 0

    smoothed, displacement, budget = tangential_smoothing(flipped, policy)

    after = mesh_quality(smoothed)
    if after.min_angle_deg < policy.degenerate_min_angle_deg:
        raise DegenerationError(
            f"remesh cannot reach the quality floor: min angle {after.min_angle_deg:.3f}°"
        )
    nu = np.asarray(curvature_bundle(flipped).nu)
    area_drift = abs(total_area(smoothed) - area0) / area0
    willmore_drift = abs(curvature_bundle(smoothed).willmore() - willmore0) / willmore0
    result = RemeshResult(
        surface=smoothed,
        performed=True,
        flips=flips,
        splits=splits,
        collapses=collapses,
        max_displacement=float(np.linalg.norm(displacement, axis=1).max()),
        max_normal_displacement=float(np.abs(np.einsum("ij,ij->i", displacement, nu)).max()),
        area_drift=area_drift,
        normal_budget=budget,
        willmore_drift=willmore_drift,
        quality_before=before,
        quality_after=after,
        within_budget=area_drift <= policy.area_drift_budget and willmore_drift <= policy.willmore_drift_budget,
    )
    if after.min_angle_deg < policy.min_angle_deg:
        logger.info("remesh below target angle: %.2f° -> %.2f°", before.min_angle_deg, after.min_angle_deg)
    if not result.within_budget:
        logger.warning("⚠️ remesh drift over budget: area %.2e, willmore %.2e", area_drift, willmore_drift)
    logger.debug(
        "remesh: %d flips, %d splits, %d collapses, %d vertices, min angle %.2f° -> %.2f°",
        flips, splits, collapses, smoothed.n_vertices, before.min_angle_deg, after.min_angle_deg,
    )
    return result
