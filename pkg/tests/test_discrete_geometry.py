import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st
from numpy.testing import assert_allclose

from conftest import rigid_motion, rotvecs, translations
from geometry.discrete_geometry import (
    cotan_laplacian,
    curvature_bundle,
    gauss_curvature,
    integrate,
    laplace_beltrami,
    ledger_defect,
    mean_curvature,
    signed_volume,
    total_area,
    tracefree_norm_sq,
    vertex_areas,
    vertex_normals,
)
from geometry.surface_mesh import TriangleSurface, flip_orientation, icosphere


def test_sphere_normals_are_radial(unit_sphere4):
    nu = np.asarray(vertex_normals(unit_sphere4))
    assert_allclose(np.linalg.norm(nu, axis=1), 1.0, atol=1e-10)
    assert np.all(np.einsum("ij,ij->i", nu, unit_sphere4.vertices) > 0.99)


def test_planar_patch_normal():
    # octahedron with a flattened top: the apex sits in the plane z = 0.5 of its neighbours
    vertices = np.array([
        (1, 0, 0.5), (0, 1, 0.5), (-1, 0, 0.5), (0, -1, 0.5), (0, 0, 0.5), (0, 0, -1.0),
    ])
    faces = np.array([
        (0, 1, 4), (1, 2, 4), (2, 3, 4), (3, 0, 4),
        (1, 0, 5), (2, 1, 5), (3, 2, 5), (0, 3, 5),
    ])
    s = TriangleSurface(vertices, faces)
    assert_allclose(np.asarray(vertex_normals(s))[4], [0.0, 0.0, 1.0], atol=1e-12)


def test_flipped_mesh_negates_normals_and_volume(icosahedron):
    flipped = flip_orientation(icosahedron)
    assert_allclose(np.asarray(vertex_normals(flipped)), -np.asarray(vertex_normals(icosahedron)))
    assert_allclose(signed_volume(flipped), -signed_volume(icosahedron))


def test_sphere_mean_curvature(unit_sphere4):
    H = np.asarray(mean_curvature(unit_sphere4))
    assert np.max(np.abs(H - 2.0)) / 2.0 < 0.01
    H2 = np.asarray(mean_curvature(icosphere(3, radius=2.0)))
    assert_allclose(H2, 1.0, rtol=0.02)


def test_gauss_curvature_on_sphere(unit_sphere4):
    K = np.asarray(gauss_curvature(unit_sphere4))
    assert abs(integrate(unit_sphere4, K) / total_area(unit_sphere4) - 1.0) < 0.01
    assert np.max(np.abs(K - 1.0)) < 0.05


@pytest.mark.parametrize("k", [0, 1, 2, 3, 4])
def test_gauss_bonnet_exact_on_spheres(k):
    s = icosphere(k)
    assert abs(integrate(s, gauss_curvature(s)) - 4.0 * np.pi) < 1e-10


def test_gauss_bonnet_exact_on_torus(coarse_torus):
    assert abs(integrate(coarse_torus, gauss_curvature(coarse_torus))) < 1e-10


def test_tracefree_norm_clamps_noise():
    Ao2 = np.asarray(tracefree_norm_sq([2.0, 2.0], [1.0 + 5e-10, 0.5]))
    assert Ao2[0] == 0.0
    assert_allclose(Ao2[1], 1.0)


def test_tracefree_norm_small_on_sphere(unit_sphere4):
    b = curvature_bundle(unit_sphere4)
    assert np.all(np.asarray(b.Ao2) >= 0.0)
    assert b.integrate(b.Ao2) < 0.02 * 4.0 * np.pi


def test_laplacian_kills_constants(unit_sphere4):
    lap = np.asarray(laplace_beltrami(unit_sphere4, np.full(unit_sphere4.n_vertices, 3.7)))
    assert np.max(np.abs(lap)) < 1e-12


def test_coordinate_functions_are_eigenfunctions(unit_sphere4):
    for axis in range(3):
        x = unit_sphere4.vertices[:, axis]
        lap = np.asarray(laplace_beltrami(unit_sphere4, x))
        assert np.linalg.norm(lap + 2.0 * x) / np.linalg.norm(2.0 * x) < 0.02


def test_laplacian_of_sphere_mean_curvature_is_small_on_average(unit_sphere4):
    b = curvature_bundle(unit_sphere4)
    lap = np.asarray(laplace_beltrami(unit_sphere4, b.H))
    assert abs(b.integrate(lap)) < 1e-8


def test_cotan_matrix_is_symmetric_with_zero_rows(unit_sphere4):
    L = cotan_laplacian(unit_sphere4)
    assert abs(L - L.T).max() < 1e-14
    assert np.max(np.abs(L @ np.ones(unit_sphere4.n_vertices))) < 1e-12


def test_sphere_integrals(unit_sphere4):
    b = curvature_bundle(unit_sphere4)
    area = total_area(unit_sphere4)
    assert abs(area / (4.0 * np.pi) - 1.0) < 0.005
    assert_allclose(np.asarray(vertex_areas(unit_sphere4)).sum(), area, rtol=1e-10)
    assert abs(integrate(unit_sphere4, np.ones(unit_sphere4.n_vertices)) - area) < 1e-10
    assert abs(b.integrate(np.asarray(b.H) ** 2) / (16.0 * np.pi) - 1.0) < 0.01
    assert abs(b.integrate(b.A2) / (8.0 * np.pi) - 1.0) < 0.01
    assert abs(signed_volume(unit_sphere4) / (4.0 * np.pi / 3.0) - 1.0) < 0.01


def test_ledger_defect_shrinks_under_refinement():
    defects = [ledger_defect(icosphere(k)) for k in (2, 3, 4)]
    assert defects[-1] <= 0.05 * 4.0 * np.pi
    assert defects[2] < defects[0]


def test_mean_curvature_error_decreases_under_refinement():
    errors = [np.max(np.abs(np.asarray(mean_curvature(icosphere(k))) - 2.0)) for k in (2, 3, 4)]
    assert errors[0] > errors[1] > errors[2]


@settings(max_examples=15, deadline=None)
@given(rotvecs, translations)
def test_operators_are_rigid_motion_invariant(rotvec, shift):
    s = icosphere(2)
    moved = s.with_vertices(rigid_motion(s.vertices, rotvec, shift))
    before, after = curvature_bundle(s), curvature_bundle(moved)
    assert_allclose(np.asarray(after.H), np.asarray(before.H), rtol=1e-8, atol=1e-8)
    assert_allclose(np.asarray(after.K), np.asarray(before.K), rtol=1e-8, atol=1e-8)
    assert_allclose(np.asarray(after.Ao2), np.asarray(before.Ao2), atol=1e-8)
    assert_allclose(signed_volume(moved), signed_volume(s), rtol=1e-8)


@settings(max_examples=15, deadline=None)
@given(st.floats(0.1, 10.0))
def test_scaling_laws(c):
    s = icosphere(2)
    scaled = s.with_vertices(c * s.vertices)
    b, bc = curvature_bundle(s), curvature_bundle(scaled)
    assert_allclose(np.asarray(bc.H), np.asarray(b.H) / c, rtol=1e-8)
    assert_allclose(np.asarray(bc.K), np.asarray(b.K) / c ** 2, rtol=1e-8)
    assert_allclose(total_area(scaled), c ** 2 * total_area(s), rtol=1e-8)
    assert_allclose(signed_volume(scaled), c ** 3 * signed_volume(s), rtol=1e-8)
