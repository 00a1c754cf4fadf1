import numpy as np
import pytest
from hypothesis import strategies as st
from scipy.spatial.transform import Rotation

from geometry.surface_mesh import icosphere, save_surface, torus_grid


@pytest.fixture(scope="session")
def icosahedron():
    return icosphere(0)


@pytest.fixture(scope="session")
def icosahedron_obj(icosahedron):
    return save_surface(icosahedron)


@pytest.fixture(scope="session")
def unit_sphere4():
    return icosphere(4)


@pytest.fixture(scope="session")
def coarse_torus():
    return torus_grid(2.0, 1.0, 48, 24)


rotvecs = st.lists(st.floats(-np.pi, np.pi), min_size=3, max_size=3)
translations = st.lists(st.floats(-5.0, 5.0), min_size=3, max_size=3)


def rigid_motion(vertices, rotvec, shift):
    return Rotation.from_rotvec(rotvec).apply(vertices) + np.asarray(shift)
