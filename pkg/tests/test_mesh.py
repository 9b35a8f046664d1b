import math

import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from llgbubble.core import EulerField, InvalidMeshError, MagnetizationField, euler_to_cartesian
from llgbubble.mesh import (MeshConfig, MonitorField, RadialMesh, equidistribute, interpolate, monitor, move_mesh,
                            smooth, sundman_dt)
from conftest import random_mesh


def _bubble_field(mesh, R):
    th = 2 * np.arctan(mesh.nodes / R)
    return EulerField(th, np.zeros_like(th))


@pytest.mark.parametrize("nodes", [[0.0, 0.5], [0.0, 0.6, 0.5, 1.0], [0.1, 0.5, 1.0], [0.0, 0.5, 0.9]])
def test_invalid_meshes(nodes):
    with pytest.raises(InvalidMeshError):
        RadialMesh(np.array(nodes))


@given(st.integers(0, 2**32 - 1), st.floats(1e-3, 1e2), st.floats(1e-4, 10.0))
def test_move_mesh_stays_monotone(seed, amp, ds):
    rng = np.random.default_rng(seed)
    mesh = random_mesh(rng, 41)
    M = 1.0 + amp * rng.uniform(size=41)
    new = move_mesh(mesh, MonitorField(M), ds)
    assert np.all(np.diff(new.nodes) > 0) and new.nodes[0] == 0.0 and new.nodes[-1] == 1.0


def test_move_mesh_relaxes_to_equidistribution():
    mesh = RadialMesh.uniform(101)
    field = _bubble_field(mesh, 1e-2)
    cfg = MeshConfig()
    for _ in range(60):
        mesh = move_mesh(mesh, monitor(field, mesh, cfg), 1.0, cfg.tau_mm)
        field = _bubble_field(mesh, 1e-2)
    M = monitor(field, mesh, cfg).values
    share = 0.5 * (M[1:] + M[:-1]) * np.diff(mesh.nodes)
    assert share.max() / share.mean() < 1.3


def test_equidistribute_gives_equal_shares():
    mesh = RadialMesh.uniform(201)
    M = np.exp(-((mesh.nodes - 0.3) / 0.05) ** 2) + 0.1
    new = equidistribute(mesh, M)
    Mn = np.interp(new.nodes, mesh.nodes, M)
    share = 0.5 * (Mn[1:] + Mn[:-1]) * np.diff(new.nodes)
    assert share.max() / share.min() < 1.1


def test_monitor_floor_and_positivity():
    mesh = RadialMesh.uniform(21)
    m = np.zeros((21, 3))
    m[:, 2] = 1.0
    M = monitor(MagnetizationField(m), mesh)
    assert np.allclose(M.values, MeshConfig().monitor_floor_abs)
    with pytest.raises(ValueError):
        MonitorField(np.array([1.0, 0.0]))


@given(st.lists(st.floats(-1e3, 1e3), min_size=3, max_size=50), st.integers(0, 6))
def test_smooth_preserves_bounds(values, passes):
    v = np.array(values)
    s = smooth(v, passes)
    assert s.min() >= v.min() - 1e-9 and s.max() <= v.max() + 1e-9


def test_smooth_keeps_constants():
    assert np.allclose(smooth(np.full(10, 3.0), 5), 3.0)


@given(st.floats(1e-6, 1.0), st.floats(1e-3, 1e6))
def test_sundman_dt(ds, mmax):
    M = np.array([1.0, mmax, 0.5])
    assert math.isclose(sundman_dt(M, ds), ds / max(mmax, 1.0))


def test_sundman_rejects_nonpositive_step():
    with pytest.raises(ValueError):
        sundman_dt(np.ones(3), 0.0)


def test_interpolation_keeps_unit_norm_and_ends(rng):
    old = random_mesh(rng, 60)
    new = random_mesh(rng, 60)
    th = 2 * np.arctan(old.nodes / 0.1)
    m = MagnetizationField(euler_to_cartesian(th, 0.4 * old.nodes))
    out = interpolate(m, old, new)
    assert out.norm_defect() <= 1e-12
    assert np.array_equal(out.m[[0, -1]], m.m[[0, -1]])
    back = interpolate(th, old, new)
    assert np.all(np.diff(back) >= 0)
