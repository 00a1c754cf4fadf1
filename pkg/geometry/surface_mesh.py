import logging
from dataclasses import dataclass
from functools import cached_property

import numpy as np
from scipy.sparse import coo_matrix
from scipy.sparse import csgraph

from utils.errors import DegenerateMeshError, GeometryError, MeshError

logger = logging.getLogger(__name__)

# Face area below this fraction of the mean face area is degenerate.
DEGENERATE_AREA_RATIO = 1e-12
# Edge length below this fraction of the mean edge length is collapsed.
DEGENERATE_EDGE_RATIO = 1e-9


# =========================================================
# 📐 PER-VERTEX FIELDS
# =========================================================
@dataclass(frozen=True)
class VertexField:
    """Per-vertex scalar (n,) or 3-vector (n, 3) samples, read-only and finite."""

    values: np.ndarray
    kind: str = "scalar"

    def __post_init__(self):
        values = np.array(self.values, dtype=float)
        if self.kind == "scalar" and values.ndim != 1:
            raise GeometryError(f"scalar field must be 1-d, got shape {values.shape}")
        if self.kind == "vector" and (values.ndim != 2 or values.shape[1] != 3):
            raise GeometryError(f"vector field must be (n, 3), got shape {values.shape}")
        if self.kind not in ("scalar", "vector"):
            raise GeometryError(f"unknown field kind {self.kind!r}")
        if not np.all(np.isfinite(values)):
            raise GeometryError("vertex field has non-finite entries")
        values.setflags(write=False)
        object.__setattr__(self, "values", values)

    def __len__(self):
        return len(self.values)

    def __array__(self, dtype=None, copy=None):
        if dtype is None:
            return self.values
        return self.values.astype(dtype)

    def check_length(self, n_vertices):
        if len(self.values) != n_vertices:
            raise GeometryError(f"field has {len(self.values)} entries for {n_vertices} vertices")
        return self


def as_scalar_values(u, n_vertices=None):
    """Accepts a VertexField or array-like and returns a float ndarray."""
    values = np.asarray(u.values if isinstance(u, VertexField) else u, dtype=float)
    if n_vertices is not None and values.shape[0] != n_vertices:
        raise GeometryError(f"field has {values.shape[0]} entries for {n_vertices} vertices")
    return values


# =========================================================
# 🔗 TOPOLOGY (shared by every surface with the same faces)
# =========================================================
@dataclass(frozen=True)
class Topology:
    n_vertices: int
    edges: np.ndarray          # (E, 2) undirected, lo < hi
    face_edges: np.ndarray     # (F, 3) edge id of (v0v1, v1v2, v2v0)
    edge_halfedges: np.ndarray  # (E, 2) half-edge ids 3*face + corner
    vertex_face_offsets: np.ndarray
    vertex_face_index: np.ndarray
    ring_offsets: np.ndarray
    ring_index: np.ndarray
    component_labels: np.ndarray
    n_components: int

    @property
    def edge_faces(self):
        return self.edge_halfedges // 3


def _build_topology(faces, n_vertices):
    """
    1. Hash undirected edges: every edge must be shared by exactly two faces.
    2. Hash directed edges: each must appear once (consistent orientation).
    3. Build CSR adjacency (vertex -> faces, vertex -> one-ring) and components.
    """
    m = len(faces)
    half = np.stack([faces, np.roll(faces, -1, axis=1)], axis=-1).reshape(-1, 2)
    lo = half.min(axis=1)
    hi = half.max(axis=1)
    keys = lo * n_vertices + hi
    uniq, inverse, counts = np.unique(keys, return_inverse=True, return_counts=True)
    inverse = inverse.reshape(-1)

    if np.any(counts == 1):
        bad = uniq[counts == 1][0]
        raise MeshError(f"open boundary: edge ({bad // n_vertices}, {bad % n_vertices}) has one face")
    if np.any(counts > 2):
        bad = uniq[counts > 2][0]
        raise MeshError(f"non-manifold edge ({bad // n_vertices}, {bad % n_vertices}) has {counts.max()} faces")

    directed = half[:, 0] * n_vertices + half[:, 1]
    if len(np.unique(directed)) != len(directed):
        raise MeshError("inconsistent orientation: a directed edge appears twice")

    edges = np.stack([uniq // n_vertices, uniq % n_vertices], axis=1)
    order = np.argsort(inverse, kind="stable")
    edge_halfedges = order.reshape(-1, 2)

    flat = faces.ravel()
    vf_order = np.argsort(flat, kind="stable")
    vf_counts = np.bincount(flat, minlength=n_vertices)
    vf_offsets = np.concatenate([[0], np.cumsum(vf_counts)])

    both = np.concatenate([edges, edges[:, ::-1]])
    ring_order = np.lexsort((both[:, 1], both[:, 0]))
    both = both[ring_order]
    ring_counts = np.bincount(both[:, 0], minlength=n_vertices)
    ring_offsets = np.concatenate([[0], np.cumsum(ring_counts)])

    adjacency = coo_matrix(
        (np.ones(len(edges)), (edges[:, 0], edges[:, 1])), shape=(n_vertices, n_vertices)
    )
    n_components, labels = csgraph.connected_components(adjacency, directed=False)

    return Topology(
        n_vertices=n_vertices,
        edges=edges,
        face_edges=inverse.reshape(m, 3),
        edge_halfedges=edge_halfedges,
        vertex_face_offsets=vf_offsets,
        vertex_face_index=vf_order // 3,
        ring_offsets=ring_offsets,
        ring_index=both[:, 1],
        component_labels=labels,
        n_components=int(n_components),
    )


# =========================================================
# 🔺 TRIANGLE SURFACE
# =========================================================
class TriangleSurface:
    """
    Closed, oriented, manifold triangle mesh.
    Immutable after construction: vertex and face arrays are read-only and the
    topology is shared between surfaces produced by `with_vertices`.
    """

    def __init__(self, vertices, faces):
        vertices = np.array(vertices, dtype=float)
        faces = np.array(faces, dtype=np.int64)
        if vertices.ndim != 2 or vertices.shape[1] != 3:
            raise MeshError(f"vertices must be (n, 3), got {vertices.shape}")
        if faces.ndim != 2 or faces.shape[1] != 3 or len(faces) == 0:
            raise MeshError(f"faces must be a non-empty (m, 3) array, got {faces.shape}")
        n = len(vertices)
        if faces.min() < 0 or faces.max() >= n:
            raise MeshError("face index out of range")
        if np.any((faces[:, 0] == faces[:, 1]) | (faces[:, 1] == faces[:, 2]) | (faces[:, 0] == faces[:, 2])):
            raise DegenerateMeshError("face repeats a vertex")
        if np.any(np.bincount(faces.ravel(), minlength=n) == 0):
            raise MeshError("isolated vertex not referenced by any face")
        if len(np.unique(vertices, axis=0)) != n:
            raise MeshError("duplicate vertices")

        vertices.setflags(write=False)
        faces.setflags(write=False)
        self._vertices = vertices
        self._faces = faces
        self._topology = _build_topology(faces, n)
        self._check_geometry()

    @classmethod
    def _from_parts(cls, vertices, faces, topology):
        surface = cls.__new__(cls)
        vertices = np.array(vertices, dtype=float)
        vertices.setflags(write=False)
        surface._vertices = vertices
        surface._faces = faces
        surface._topology = topology
        surface._check_geometry()
        return surface

    def with_vertices(self, vertices):
        """Same connectivity, new positions; only the geometry is revalidated."""
        vertices = np.asarray(vertices, dtype=float)
        if vertices.shape != self._vertices.shape:
            raise MeshError(f"expected vertices of shape {self._vertices.shape}, got {vertices.shape}")
        return TriangleSurface._from_parts(vertices, self._faces, self._topology)

    def _check_geometry(self):
        if not np.all(np.isfinite(self._vertices)):
            raise DegenerateMeshError("non-finite vertex coordinates")
        areas = self.face_areas
        mean_area = areas.mean()
        if not mean_area > 0 or np.any(areas < DEGENERATE_AREA_RATIO * mean_area):
            worst = int(np.argmin(areas))
            raise DegenerateMeshError(f"degenerate face {worst}: area {areas[worst]:.3e} vs mean {mean_area:.3e}")

    # ---------- raw data ----------
    @property
    def vertices(self):
        return self._vertices

    @property
    def faces(self):
        return self._faces

    @property
    def topology(self):
        return self._topology

    @property
    def n_vertices(self):
        return len(self._vertices)

    @property
    def n_faces(self):
        return len(self._faces)

    @property
    def edges(self):
        return self._topology.edges

    @property
    def n_edges(self):
        return len(self._topology.edges)

    def vertex_faces(self, i):
        t = self._topology
        return t.vertex_face_index[t.vertex_face_offsets[i]:t.vertex_face_offsets[i + 1]]

    def one_ring(self, i):
        t = self._topology
        return t.ring_index[t.ring_offsets[i]:t.ring_offsets[i + 1]]

    # ---------- cached geometry ----------
    @cached_property
    def corners(self):
        """(F, 3, 3) vertex positions of every face."""
        return self._vertices[self._faces]

    @cached_property
    def face_cross(self):
        p = self.corners
        return np.cross(p[:, 1] - p[:, 0], p[:, 2] - p[:, 0])

    @cached_property
    def face_areas(self):
        return 0.5 * np.linalg.norm(self.face_cross, axis=1)

    @cached_property
    def edge_lengths(self):
        e = self._topology.edges
        return np.linalg.norm(self._vertices[e[:, 1]] - self._vertices[e[:, 0]], axis=1)

    def __repr__(self):
        return f"TriangleSurface(n_vertices={self.n_vertices}, n_faces={self.n_faces}, chi={euler_characteristic(self)})"


# =========================================================
# 🧮 MESH QUERIES
# =========================================================
def euler_characteristic(s):
    return s.n_vertices - s.n_edges + s.n_faces


def min_edge_length(s):
    lengths = s.edge_lengths
    h_min = float(lengths.min())
    if h_min <= DEGENERATE_EDGE_RATIO * lengths.mean():
        raise DegenerateMeshError(f"collapsed edge: length {h_min:.3e}")
    return h_min


def corner_angles(s):
    """(F, 3) interior angle at each face corner."""
    p = s.corners
    angles = np.empty((s.n_faces, 3))
    for k in range(3):
        a = p[:, (k + 1) % 3] - p[:, k]
        b = p[:, (k + 2) % 3] - p[:, k]
        angles[:, k] = np.arctan2(np.linalg.norm(np.cross(a, b), axis=1), np.einsum("ij,ij->i", a, b))
    return angles


@dataclass(frozen=True)
class MeshQuality:
    min_angle_deg: float
    max_angle_deg: float
    edge_ratio: float
    max_aspect_ratio: float
    min_area_ratio: float


def mesh_quality(s):
    angles = np.degrees(corner_angles(s))
    lengths = s.edge_lengths
    # aspect ratio = longest edge / (2*sqrt(3) * inradius); 1 for equilateral
    p = s.corners
    sides = np.stack([np.linalg.norm(p[:, (k + 1) % 3] - p[:, k], axis=1) for k in range(3)], axis=1)
    inradius = 2.0 * s.face_areas / sides.sum(axis=1)
    aspect = sides.max(axis=1) / (2.0 * np.sqrt(3.0) * inradius)
    return MeshQuality(
        min_angle_deg=float(angles.min()),
        max_angle_deg=float(angles.max()),
        edge_ratio=float(lengths.max() / lengths.min()),
        max_aspect_ratio=float(aspect.max()),
        min_area_ratio=float(s.face_areas.min() / s.face_areas.mean()),
    )


def connected_components(s):
    """Returns (n_components, per-vertex component labels)."""
    return s.topology.n_components, s.topology.component_labels


def component_volumes(s):
    """Signed enclosed volume of each connected component."""
    p = s.corners
    dets = np.einsum("ij,ij->i", p[:, 0], np.cross(p[:, 1], p[:, 2])) / 6.0
    labels = s.topology.component_labels[s.faces[:, 0]]
    return np.bincount(labels, weights=dets, minlength=s.topology.n_components)


def flip_orientation(s, component=None):
    """Reverses every face (or only the faces of one component)."""
    faces = np.array(s.faces)
    if component is None:
        mask = np.ones(len(faces), dtype=bool)
    else:
        mask = s.topology.component_labels[faces[:, 0]] == component
    faces[mask] = faces[mask][:, ::-1]
    return TriangleSurface(s.vertices, faces)


# =========================================================
# 📂 OBJ SUBSET (v x y z / f i j k)
# =========================================================
def _parse_obj(text):
    vertices, faces = [], []
    for lineno, raw in enumerate(text.splitlines(), start=1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        tokens = line.split()
        try:
            if tokens[0] == "v":
                if len(tokens) < 4:
                    raise ValueError("vertex needs three coordinates")
                vertices.append([float(t) for t in tokens[1:4]])
            elif tokens[0] == "f":
                if len(tokens) != 4:
                    raise ValueError(f"only triangles are supported, got {len(tokens) - 1} vertices")
                idx = [int(t.split("/")[0]) for t in tokens[1:]]
                if min(idx) < 1:
                    raise ValueError("face indices must be positive (1-based)")
                faces.append([i - 1 for i in idx])
            else:
                logger.debug("skipping OBJ record %r on line %d", tokens[0], lineno)
        except ValueError as e:
            raise MeshError(f"OBJ parse failure on line {lineno}: {e}") from e
    if not vertices or not faces:
        raise MeshError("OBJ parse failure: no vertex or face records")
    return np.array(vertices), np.array(faces, dtype=np.int64)


def load_surface(data):
    """
    Parses OBJ text (str or bytes) into a validated TriangleSurface.
    Inward-oriented components are flipped once as a whole; orientation
    that is inconsistent inside a component is rejected.
    """
    if isinstance(data, (bytes, bytearray)):
        data = data.decode("utf-8")
    vertices, faces = _parse_obj(data)
    surface = TriangleSurface(vertices, faces)
    volumes = component_volumes(surface)
    for component in np.flatnonzero(volumes < 0):
        logger.info("flipping inward-oriented component %d", component)
        surface = flip_orientation(surface, component=int(component))
    return surface


def save_surface(s):
    lines = [f"v {x!r} {y!r} {z!r}" for x, y, z in s.vertices.tolist()]
    lines += [f"f {a + 1} {b + 1} {c + 1}" for a, b, c in s.faces.tolist()]
    return "\n".join(lines) + "\n"


# =========================================================
# 🌐 ICOSPHERES AND SUBDIVISION
# =========================================================
_GOLDEN = (1.0 + np.sqrt(5.0)) / 2.0
_ICOSAHEDRON_VERTICES = np.array([
    (-1, _GOLDEN, 0), (1, _GOLDEN, 0), (-1, -_GOLDEN, 0), (1, -_GOLDEN, 0),
    (0, -1, _GOLDEN), (0, 1, _GOLDEN), (0, -1, -_GOLDEN), (0, 1, -_GOLDEN),
    (_GOLDEN, 0, -1), (_GOLDEN, 0, 1), (-_GOLDEN, 0, -1), (-_GOLDEN, 0, 1),
])
_ICOSAHEDRON_FACES = np.array([
    (0, 11, 5), (0, 5, 1), (0, 1, 7), (0, 7, 10), (0, 10, 11),
    (1, 5, 9), (5, 11, 4), (11, 10, 2), (10, 7, 6), (7, 1, 8),
    (3, 9, 4), (3, 4, 2), (3, 2, 6), (3, 6, 8), (3, 8, 9),
    (4, 9, 5), (2, 4, 11), (6, 2, 10), (8, 6, 7), (9, 8, 1),
])


def subdivide(s, project=None):
    """
    4-to-1 midpoint subdivision. `project` (optional) maps the new (n, 3)
    vertex array, e.g. back onto a sphere.
    """
    t = s.topology
    n = s.n_vertices
    midpoints = 0.5 * (s.vertices[t.edges[:, 0]] + s.vertices[t.edges[:, 1]])
    vertices = np.concatenate([s.vertices, midpoints])
    f = s.faces
    m01, m12, m20 = (n + t.face_edges[:, k] for k in range(3))
    faces = np.concatenate([
        np.stack([f[:, 0], m01, m20], axis=1),
        np.stack([f[:, 1], m12, m01], axis=1),
        np.stack([f[:, 2], m20, m12], axis=1),
        np.stack([m01, m12, m20], axis=1),
    ])
    if project is not None:
        vertices = project(vertices)
    return TriangleSurface(vertices, faces)


def torus_grid(major_radius, minor_radius, n_u, n_v):
    """Structured (n_u x n_v) torus, u around the axis, v around the tube; outward-oriented."""
    if n_u < 3 or n_v < 3:
        raise MeshError("torus grid needs at least 3 segments in each direction")
    u = 2.0 * np.pi * np.arange(n_u) / n_u
    v = 2.0 * np.pi * np.arange(n_v) / n_v
    uu, vv = np.meshgrid(u, v, indexing="ij")
    ring = major_radius + minor_radius * np.cos(vv)
    vertices = np.stack([ring * np.cos(uu), ring * np.sin(uu), minor_radius * np.sin(vv)], axis=-1).reshape(-1, 3)

    i, j = np.meshgrid(np.arange(n_u), np.arange(n_v), indexing="ij")
    i, j = i.ravel(), j.ravel()
    ip, jp = (i + 1) % n_u, (j + 1) % n_v
    a, b, c, d = i * n_v + j, ip * n_v + j, ip * n_v + jp, i * n_v + jp
    faces = np.concatenate([np.stack([a, b, c], axis=1), np.stack([a, c, d], axis=1)])
    return TriangleSurface(vertices, faces)


def icosphere(subdivisions=0, radius=1.0):
    """Icosahedron refined `subdivisions` times with vertices on the sphere (10*4^k + 2 vertices)."""
    if subdivisions < 0:
        raise MeshError("subdivision level must be non-negative")

    def to_sphere(v):
        return radius * v / np.linalg.norm(v, axis=1, keepdims=True)

    faces = _ICOSAHEDRON_FACES.copy()
    vertices = to_sphere(_ICOSAHEDRON_VERTICES.astype(float))
    p = vertices[faces]
    outward = np.einsum("ij,ij->i", np.cross(p[:, 1] - p[:, 0], p[:, 2] - p[:, 0]), p.sum(axis=1)) > 0
    faces[~outward] = faces[~outward][:, ::-1]
    surface = TriangleSurface(vertices, faces)
    for _ in range(subdivisions):
        surface = subdivide(surface, project=to_sphere)
    return surface
