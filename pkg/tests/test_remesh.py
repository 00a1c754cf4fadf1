import numpy as np
import pytest

from flow.remesh import (
    RemeshPolicy,
    collapse_short_edges,
    delaunay_flips,
    remesh,
    split_long_edges,
    tangential_smoothing,
)
from geometry.discrete_geometry import curvature_bundle
from geometry.surface_mesh import (
    TriangleSurface,
    corner_angles,
    euler_characteristic,
    icosphere,
    mesh_quality,
)
from utils.errors import ConfigError, DegenerationError


@pytest.fixture(scope="module")
def stretched():
    s = icosphere(3)
    return s.with_vertices(s.vertices * np.array([1.0, 1.0, 4.0]))


def _largest_opposite_angle_sum(s):
    he = s.topology.edge_halfedges
    f, c = he // 3, he % 3
    return float(corner_angles(s)[f, (c + 2) % 3].sum(axis=1).max())


def test_policy_validation():
    with pytest.raises(ConfigError):
        RemeshPolicy(min_angle_deg=0.5)
    with pytest.raises(ConfigError):
        RemeshPolicy(max_edge_ratio=1.0)
    with pytest.raises(ConfigError):
        RemeshPolicy(iterations=0)
    with pytest.raises(ConfigError):
        RemeshPolicy(normal_tolerance=0.0)
    assert RemeshPolicy().acceptable(mesh_quality(icosphere(2)))


def test_good_mesh_is_left_alone():
    s = icosphere(3)
    result = remesh(s)
    assert not result.performed
    assert result.surface is s
    assert result.flips == 0


def test_sphere_mesh_has_no_flips():
    s = icosphere(2)
    flipped, flips = delaunay_flips(s)
    assert flips == 0
    np.testing.assert_array_equal(flipped.faces, s.faces)


def test_flips_preserve_topology_and_reduce_angle_sums(stretched):
    flipped, flips = delaunay_flips(stretched)
    assert flips > 0
    assert flipped.n_vertices == stretched.n_vertices
    assert flipped.n_faces == stretched.n_faces
    assert euler_characteristic(flipped) == 2
    assert _largest_opposite_angle_sum(flipped) < _largest_opposite_angle_sum(stretched)
    np.testing.assert_array_equal(flipped.vertices, stretched.vertices)


def test_smoothing_stays_within_normal_budget():
    rng = np.random.default_rng(7)
    s = icosphere(3)
    jittered = s.vertices + 0.02 * rng.standard_normal(s.vertices.shape)
    s = s.with_vertices(jittered / np.linalg.norm(jittered, axis=1, keepdims=True))
    b = curvature_bundle(s)
    smoothed, displacement, budget = tangential_smoothing(s, RemeshPolicy(), bundle=b)
    normal_part = np.einsum("ij,ij->i", displacement, np.asarray(b.nu))
    assert np.abs(normal_part).max() <= budget * (1 + 1e-9)
    assert smoothed.n_vertices == s.n_vertices
    assert mesh_quality(smoothed).min_angle_deg >= mesh_quality(s).min_angle_deg


def test_forced_remesh_of_stretched_mesh(stretched):
    before = mesh_quality(stretched)
    result = remesh(stretched, force=True)
    assert result.performed
    assert result.flips > 0
    assert result.quality_after.min_angle_deg > before.min_angle_deg
    assert euler_characteristic(result.surface) == 2
    assert result.max_normal_displacement <= result.normal_budget * (1 + 1e-9)
    assert result.area_drift <= 1e-2
    assert np.isfinite(result.willmore_drift)
    policy = RemeshPolicy()
    assert result.within_budget == (
        result.area_drift <= policy.area_drift_budget and result.willmore_drift <= policy.willmore_drift_budget
    )


def test_unreachable_quality_floor_raises():
    strict = RemeshPolicy(min_angle_deg=59.5, degenerate_min_angle_deg=59.0)
    with pytest.raises(DegenerationError):
        remesh(icosphere(2), strict, force=True)


def test_flip_keeps_faces_consistently_oriented(stretched):
    flipped, _ = delaunay_flips(stretched)
    rebuilt = TriangleSurface(flipped.vertices, flipped.faces)
    assert curvature_bundle(rebuilt).integrate(np.asarray(curvature_bundle(rebuilt).H)) > 0


def test_policy_rejects_bad_edge_ratios():
    with pytest.raises(ConfigError):
        RemeshPolicy(collapse_ratio=1.2)
    with pytest.raises(ConfigError):
        RemeshPolicy(split_ratio=0.9)
    with pytest.raises(ConfigError):
        RemeshPolicy(min_vertices=3)
    with pytest.raises(ConfigError):
        RemeshPolicy(max_collapse_fraction=0.0)


def test_split_long_edges_keeps_topology_and_surface():
    s = icosphere(1)
    split, splits = split_long_edges(s, 0.0)
    assert splits > 0
    assert split.n_vertices == s.n_vertices + splits
    assert split.n_faces == s.n_faces + 2 * splits
    assert euler_characteristic(split) == 2
    radii = np.linalg.norm(split.vertices[s.n_vertices:], axis=1)
    assert np.abs(radii - 1.0).max() < 0.01
    unchanged, none = split_long_edges(s, 10.0)
    assert unchanged is s and none == 0


def test_collapse_short_edges_coarsens_a_sphere():
    s = icosphere(2)
    coarse, collapses = collapse_short_edges(s, 10.0, min_vertices=42)
    assert collapses > 0
    assert coarse.n_vertices == s.n_vertices - collapses
    assert coarse.n_faces == s.n_faces - 2 * collapses
    assert euler_characteristic(coarse) == 2
    assert np.abs(np.linalg.norm(coarse.vertices, axis=1) - 1.0).max() < 0.02
    assert mesh_quality(coarse).min_angle_deg > RemeshPolicy().degenerate_min_angle_deg


def test_collapse_respects_vertex_floor_and_budget():
    s = icosphere(2)
    assert collapse_short_edges(s, 10.0, min_vertices=s.n_vertices)[1] == 0
    capped, collapses = collapse_short_edges(s, 10.0, min_vertices=42, max_collapses=3)
    assert collapses == 3
    assert capped.n_vertices == s.n_vertices - 3
    assert collapse_short_edges(s, 1e-6)[0] is s


def test_remesh_coarsens_against_a_reference_edge():
    fine = icosphere(2)
    shrunk = fine.with_vertices(0.6 * fine.vertices)
    policy = RemeshPolicy(min_vertices=42)
    result = remesh(shrunk, policy, reference_edge=float(fine.edge_lengths.min()))
    assert result.performed
    assert result.collapses > 0
    assert result.surface.n_vertices < shrunk.n_vertices
    assert euler_characteristic(result.surface) == 2
    assert result.quality_after.min_angle_deg > policy.degenerate_min_angle_deg
    untouched = remesh(shrunk, RemeshPolicy(min_vertices=shrunk.n_vertices), reference_edge=float(fine.edge_lengths.min()))
    assert not untouched.performed
