import math

import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from llgbubble.initialdata import (ResolutionError, boundary_of, constant_north, degree, degree1_family,
                                   family_samples, gamma_family, stereographic, stereographic_angles, theta_linear,
                                   theta_linear_3comp)
from llgbubble.mesh import RadialMesh

GRID = np.linspace(0.0, 1.0, 81)


def test_north_family_has_degree_one():
    samples = family_samples(lambda r, s: degree1_family(r, s, "north"), GRID, GRID)
    assert degree(samples, periodic_s=False) == 1


def test_generic_family_has_degree_of_modulus_one():
    samples = family_samples(lambda r, s: degree1_family(r, s, "generic"), GRID, GRID)
    assert abs(degree(samples, periodic_s=True)) == 1


def test_constant_family_has_degree_zero():
    mesh = RadialMesh(GRID)
    samples = np.stack([constant_north(mesh).m] * GRID.size, axis=1)
    assert degree(samples, periodic_s=False) == 0


def test_coarse_family_rejected():
    coarse = np.linspace(0.0, 1.0, 4)
    with pytest.raises(ResolutionError):
        degree(family_samples(lambda r, s: degree1_family(r, s, "north"), coarse, coarse), periodic_s=False)


@given(st.floats(-1e3, 1e3), st.floats(-1e3, 1e3))
def test_stereographic_on_sphere(x, y):
    m = stereographic(x, y)
    assert abs(np.linalg.norm(m) - 1.0) <= 1e-12


@given(st.floats(-1.5, 1.5), st.floats(-1.5, 1.5))
def test_stereographic_angles_match_tangent_form(a, b):
    assert np.allclose(stereographic_angles(a, b), stereographic(math.tan(a), math.tan(b)), atol=1e-9)


def test_stereographic_infinity_is_north():
    assert np.array_equal(stereographic(np.inf, 0.0), [0.0, 0.0, 1.0])


@given(st.floats(0.0, 1.0))
def test_gamma_family_endpoints_north(gamma):
    m = gamma_family(RadialMesh.uniform(51), gamma)
    assert np.array_equal(m.m[0], [0, 0, 1]) and np.array_equal(m.m[-1], [0, 0, 1])
    assert m.norm_defect() <= 1e-12


def test_gamma_half_is_planar():
    m = gamma_family(RadialMesh.uniform(51), 0.5)
    assert np.all(m.v == 0.0)
    assert np.isclose(m.w.min(), -1.0)


def test_gamma_out_of_range():
    with pytest.raises(ValueError):
        gamma_family(RadialMesh.uniform(11), 1.5)


def test_theta_linear_profiles():
    mesh = RadialMesh.uniform(31)
    e = theta_linear(mesh)
    assert math.isclose(e.theta[-1], 4 * math.pi / 3)
    m = theta_linear_3comp(mesh)
    assert m.norm_defect() <= 1e-12
    assert np.allclose(m.u, m.v)
    bc = boundary_of(m)
    assert math.isclose(bc.theta_b, 2 * math.pi - 4 * math.pi / 3, rel_tol=1e-12)


@given(st.floats(0.05, 3.0))
def test_generic_family_boundary_angle(theta_b):
    m = degree1_family(RadialMesh.uniform(21), 0.3, "generic", theta_b)
    assert math.isclose(boundary_of(m).theta_b, theta_b, abs_tol=1e-9)
    assert np.allclose(m.m[0], [0, 0, 1])
