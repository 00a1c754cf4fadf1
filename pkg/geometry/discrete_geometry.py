import logging
from dataclasses import dataclass
from functools import lru_cache

import numpy as np
from scipy import sparse

from geometry.surface_mesh import VertexField, as_scalar_values, corner_angles, euler_characteristic
from utils.errors import GeometryError

logger = logging.getLogger(__name__)

NORMAL_TOLERANCE = 1e-14


# =========================================================
# 🧱 COTANGENT OPERATOR (weights + mixed areas)
# =========================================================
@dataclass(frozen=True)
class CotanOperator:
    edges: np.ndarray         # (E, 2)
    weights: np.ndarray       # (E,) w_ij = (cot a + cot b) / 2
    vertex_areas: np.ndarray  # (n,) mixed Voronoi areas
    angles: np.ndarray        # (F, 3) interior corner angles

    def apply(self, u):
        """(L u)_i = sum_j w_ij (u_j - u_i); exactly zero on constants."""
        i, j = self.edges[:, 0], self.edges[:, 1]
        diff = u[j] - u[i]
        n = len(self.vertex_areas)
        flux = diff * (self.weights if diff.ndim == 1 else self.weights[:, None])
        if flux.ndim == 1:
            return np.bincount(i, flux, minlength=n) - np.bincount(j, flux, minlength=n)
        return np.stack(
            [np.bincount(i, flux[:, c], minlength=n) - np.bincount(j, flux[:, c], minlength=n)
             for c in range(flux.shape[1])],
            axis=1,
        )


def _mixed_areas(s, angles, cot):
    """
    Mixed Voronoi area per vertex:
    1. non-obtuse face -> Voronoi share (1/8)(|e|^2 cot + |e'|^2 cot')
    2. obtuse at this corner -> area / 2
    3. obtuse elsewhere -> area / 4
    """
    p = s.corners
    areas = s.face_areas
    obtuse_corner = angles > np.pi / 2
    obtuse_face = obtuse_corner.any(axis=1)
    contrib = np.empty_like(angles)
    for k in range(3):
        k1, k2 = (k + 1) % 3, (k + 2) % 3
        e1 = np.sum((p[:, k1] - p[:, k]) ** 2, axis=1)  # edge k-k1, opposite k2
        e2 = np.sum((p[:, k2] - p[:, k]) ** 2, axis=1)  # edge k-k2, opposite k1
        voronoi = (e1 * cot[:, k2] + e2 * cot[:, k1]) / 8.0
        contrib[:, k] = np.where(
            obtuse_corner[:, k], areas / 2.0, np.where(obtuse_face, areas / 4.0, voronoi)
        )
    return np.bincount(s.faces.ravel(), contrib.ravel(), minlength=s.n_vertices)


@lru_cache(maxsize=32)
def cotan_operator(s):
    angles = corner_angles(s)
    sin = np.sin(angles)
    if np.any(sin <= 0):
        raise GeometryError("cotangent weight is infinite (zero angle)")
    cot = np.cos(angles) / sin

    # half-edge h = 3*face + corner runs corner -> corner+1, opposite corner+2
    halfedges = s.topology.edge_halfedges
    faces_of, corner_of = halfedges // 3, halfedges % 3
    opposite = cot[faces_of, (corner_of + 2) % 3]
    weights = 0.5 * opposite.sum(axis=1)
    if not np.all(np.isfinite(weights)):
        raise GeometryError("non-finite cotangent weight")

    vertex_areas = _mixed_areas(s, angles, cot)
    if np.any(vertex_areas <= 0):
        raise GeometryError("non-positive mixed vertex area")
    return CotanOperator(edges=s.edges, weights=weights, vertex_areas=vertex_areas, angles=angles)


def cotan_laplacian(s):
    """Sparse symmetric stiffness matrix L with zero row sums (negative semi-definite)."""
    op = cotan_operator(s)
    i, j = op.edges[:, 0], op.edges[:, 1]
    n = s.n_vertices
    off = sparse.coo_matrix(
        (np.concatenate([op.weights, op.weights]), (np.concatenate([i, j]), np.concatenate([j, i]))),
        shape=(n, n),
    ).tocsr()
    return off - sparse.diags(np.asarray(off.sum(axis=1)).ravel())


def vertex_areas(s):
    return VertexField(cotan_operator(s).vertex_areas)


# =========================================================
# 📐 NORMALS AND CURVATURES
# =========================================================
def vertex_normals(s):
    """Angle-weighted average of the incident unit face normals (outward)."""
    op = cotan_operator(s)
    cross = s.face_cross
    unit = cross / np.linalg.norm(cross, axis=1, keepdims=True)
    accum = np.zeros((s.n_vertices, 3))
    for k in range(3):
        np.add.at(accum, s.faces[:, k], op.angles[:, k:k + 1] * unit)
    norms = np.linalg.norm(accum, axis=1)
    if np.any(norms < NORMAL_TOLERANCE):
        raise GeometryError(f"zero-length vertex normal at vertex {int(np.argmin(norms))}")
    return VertexField(accum / norms[:, None], kind="vector")


def mean_curvature_vector(s):
    """Delta f per vertex; equals -H * nu_out (points inward on spheres)."""
    op = cotan_operator(s)
    return VertexField(op.apply(s.vertices) / op.vertex_areas[:, None], kind="vector")


def mean_curvature(s, normals=None):
    nu = np.asarray(normals if normals is not None else vertex_normals(s))
    hvec = np.asarray(mean_curvature_vector(s))
    return VertexField(-np.einsum("ij,ij->i", hvec, nu))


def gauss_curvature(s):
    op = cotan_operator(s)
    angle_sums = np.bincount(s.faces.ravel(), op.angles.ravel(), minlength=s.n_vertices)
    return VertexField((2.0 * np.pi - angle_sums) / op.vertex_areas)


def tracefree_norm_sq(H, K):
    """|A°|^2 = max(H^2/2 - 2K, 0)."""
    h = as_scalar_values(H)
    k = as_scalar_values(K, len(h))
    return VertexField(np.maximum(0.5 * h ** 2 - 2.0 * k, 0.0))


def laplace_beltrami(s, u):
    op = cotan_operator(s)
    values = as_scalar_values(u, s.n_vertices)
    return VertexField(op.apply(values) / op.vertex_areas)


# =========================================================
# ∫ INTEGRALS
# =========================================================
def integrate(s, u):
    values = as_scalar_values(u, s.n_vertices)
    return float(np.dot(values, cotan_operator(s).vertex_areas))


def total_area(s):
    return float(s.face_areas.sum())


def signed_volume(s):
    p = s.corners
    return float(np.einsum("ij,ij->i", p[:, 0], np.cross(p[:, 1], p[:, 2])).sum() / 6.0)


@dataclass(frozen=True)
class CurvatureBundle:
    nu: VertexField
    H: VertexField
    K: VertexField
    Ao2: VertexField
    vertex_areas: VertexField

    @property
    def nu_in(self):
        return -np.asarray(self.nu)

    @property
    def A2(self):
        """|A|^2 = |A°|^2 + H^2/2, built on the clamped tracefree part so it is never negative."""
        return np.asarray(self.Ao2) + 0.5 * np.asarray(self.H) ** 2

    def integrate(self, u):
        return float(np.dot(np.asarray(u, dtype=float), np.asarray(self.vertex_areas)))

    def willmore(self):
        return 0.25 * self.integrate(np.asarray(self.H) ** 2)


def curvature_bundle(s):
    nu = vertex_normals(s)
    H = mean_curvature(s, normals=nu)
    K = gauss_curvature(s)
    return CurvatureBundle(nu=nu, H=H, K=K, Ao2=tracefree_norm_sq(H, K), vertex_areas=vertex_areas(s))


def ledger_defect(s, bundle=None):
    """|1/4 ∫H^2 - 1/2 ∫|A°|^2 - 2πχ| (Willmore / Gauss-Bonnet ledger)."""
    b = bundle or curvature_bundle(s)
    return abs(b.willmore() - 0.5 * b.integrate(b.Ao2) - 2.0 * np.pi * euler_characteristic(s))
