import itertools
import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st
from numpy.testing import assert_allclose

from flow.sphere_oracle import (
    SOBOLEV_CONSTANT,
    SphereTrajectory,
    extinction_time,
    integrate_radius,
    smallness_constants,
    sphere_energy,
    sphere_radius,
    theorem_bound,
)
from utils.errors import OracleError

GRID = list(itertools.product((0.5, 1.0, 2.0), (0.0, 1.0), (0.5, 1.0, 2.0)))


def test_closed_form_examples():
    assert_allclose(sphere_radius(1.0, 1.0, 0.0, 0.0625), math.sqrt(0.5), rtol=1e-14)
    assert sphere_radius(1.3, 1.0, 1.0, 0.0) == 1.3
    assert_allclose(extinction_time(1.0, 0.5, 0.0), 0.25)
    assert_allclose(extinction_time(2.0, 1.0, 0.0), 0.5)
    assert_allclose(extinction_time(1.0, 1.0, 1.0), 0.5 - math.log(1.5), rtol=1e-12)
    assert_allclose(extinction_time(1.0, 1.0, 1.0), 0.0945349, atol=1e-7)


def test_lambda1_zero_is_linear():
    assert_allclose(extinction_time(1.0, 0.0, 2.0), 0.25)
    assert_allclose(sphere_radius(1.0, 0.0, 2.0, 0.1), 0.6)


@pytest.mark.parametrize("lambda1, lambda2, rho0", GRID)
def test_bisection_matches_rk45(lambda1, lambda2, rho0):
    T = extinction_time(rho0, lambda1, lambda2)
    times = np.linspace(0.0, 0.9 * T, 7)
    closed = np.array([sphere_radius(rho0, lambda1, lambda2, t) for t in times])
    integrated = integrate_radius(rho0, lambda1, lambda2, times)
    assert_allclose(closed, integrated, atol=1e-8, rtol=0)
    assert np.all(np.diff(closed) < 0)


@pytest.mark.parametrize("lambda1, rho0", [(l1, r) for l1, _, r in GRID])
def test_lambda2_zero_conserves_rho_squared_plus_8_lambda1_t(lambda1, rho0):
    T = extinction_time(rho0, lambda1, 0.0)
    for t in np.linspace(0.0, 0.95 * T, 5):
        assert_allclose(sphere_radius(rho0, lambda1, 0.0, t) ** 2 + 8 * lambda1 * t, rho0 ** 2, rtol=1e-13)


@pytest.mark.parametrize("lambda1, lambda2, rho0", GRID)
def test_extinction_time_below_theorem_bound(lambda1, lambda2, rho0):
    T = extinction_time(rho0, lambda1, lambda2)
    assert T < theorem_bound(sphere_energy(rho0, lambda1, lambda2), lambda1)


@settings(max_examples=30, deadline=None)
@given(
    st.floats(0.1, 3.0),
    st.floats(0.1, 3.0),
    st.floats(0.0, 3.0),
    st.floats(0.0, 0.99),
    st.floats(0.0, 0.99),
)
def test_radius_strictly_decreasing(rho0, lambda1, lambda2, a, b):
    T = extinction_time(rho0, lambda1, lambda2)
    t1, t2 = sorted((a * T, b * T))
    if t2 - t1 < 1e-6 * T:
        return
    assert sphere_radius(rho0, lambda1, lambda2, t2) < sphere_radius(rho0, lambda1, lambda2, t1)


def test_radius_rejects_times_outside_lifespan():
    with pytest.raises(OracleError):
        sphere_radius(1.0, 1.0, 0.0, 0.125)
    with pytest.raises(OracleError):
        sphere_radius(1.0, 1.0, 0.0, -0.1)


def test_no_extinction_without_constraints():
    with pytest.raises(OracleError):
        extinction_time(1.0, 0.0, 0.0)
    with pytest.raises(OracleError):
        SphereTrajectory(1.0, -1.0)
    with pytest.raises(OracleError):
        SphereTrajectory(0.0, 1.0)


def test_theorem_bound_examples():
    assert_allclose(sphere_energy(1.0, 1.0, 0.0), 8 * math.pi)
    assert_allclose(theorem_bound(8 * math.pi, 1.0), 3.0)
    assert_allclose(theorem_bound(sphere_energy(1.0, 2.0, 0.0), 2.0), 1.75)
    assert theorem_bound(0.0, 1.0) == 1.0
    with pytest.raises(OracleError):
        theorem_bound(1.0, 0.0)


def test_sphere_trajectory_object():
    traj = SphereTrajectory(1.0, 1.0)
    assert_allclose(traj.extinction_time, 0.125)
    assert_allclose(traj.radius(np.array([0.0, 0.0625])), [1.0, math.sqrt(0.5)])
    assert_allclose(traj.area(0.0625), 2 * math.pi)
    assert_allclose(traj.energy(0.0), 8 * math.pi)


def test_smallness_constants():
    c = smallness_constants(1.0, 2.0)
    assert_allclose(c["C_S"], 64 / math.sqrt(math.pi))
    assert_allclose(c["C_S"], 36.108, atol=1e-3)
    assert_allclose(c["lambda2_cap"], 1 / 16)
    assert c["epsilon2_cap"] is None
    assert smallness_constants(1.0, 0.0)["lambda2_cap"] is None
    assert SOBOLEV_CONSTANT == c["C_S"]


def test_smallness_caps_with_supplied_constants():
    c = smallness_constants(1.0, 0.0, c3=1.0, c4=2.0)
    assert_allclose(c["epsilon2_cap"], 0.5 / (32 * SOBOLEV_CONSTANT ** 2))
    assert_allclose(c["c6"], 0.5)
    assert_allclose(c["c7"], 4.0)
    assert_allclose(c["c4_cap"], 2 * (0.5 * math.pi / (2.0 * 4.0)) ** (1 / 3))
    with pytest.raises(OracleError):
        smallness_constants(0.0)


@pytest.mark.parametrize("lambda2", [1e-200, 1e-300, 5e-324])
def test_vanishing_lambda2_matches_pure_area_constraint(lambda2):
    assert_allclose(extinction_time(1.0, 1.0, lambda2), 0.125, rtol=1e-12)
    assert_allclose(sphere_radius(1.0, 1.0, lambda2, 0.0625), math.sqrt(0.5), rtol=1e-9)
