"""Initial profiles and the one-parameter families used to probe blowup.

Tangents that blow up at ``r in {0, 1}`` (or ``gamma in {0, 1}``) are never
evaluated: the stereographic projection is written in terms of the angles
``a, b`` with ``x = tan(a)``, ``y = tan(b)`` after clearing denominators, so
the limits land exactly on the north pole.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .core import BoundaryCondition, EulerField, LLGError, MagnetizationField, project_to_sphere
from .mesh import RadialMesh

KINDS = ("theta_linear", "theta_linear_3comp", "gamma_family", "degree1_generic", "degree1_north", "constant")


class ResolutionError(LLGError):
    """Samples too coarse for the degree computation."""


def stereographic(x, y):
    """Inverse stereographic projection from the north pole; broadcasts.

    ``T(x, y) = (2x, 2y, x^2 + y^2 - 1) / (1 + x^2 + y^2)``, with infinite
    arguments mapped to ``(0, 0, 1)``.
    """
    x = np.asarray(x, dtype=float)
    y = np.asarray(y, dtype=float)
    inf = ~np.isfinite(x) | ~np.isfinite(y)
    xs = np.where(inf, 0.0, x)
    ys = np.where(inf, 0.0, y)
    d = 1.0 + xs * xs + ys * ys
    out = np.stack([2 * xs / d, 2 * ys / d, (d - 2.0) / d], axis=-1)
    if np.any(inf):
        out[inf] = (0.0, 0.0, 1.0)
    return out


def stereographic_angles(a, b):
    """``T(tan a, tan b)`` evaluated without forming the tangents."""
    a = np.asarray(a, dtype=float)
    b = np.asarray(b, dtype=float)
    ca, sa = np.cos(a), np.sin(a)
    cb, sb = np.cos(b), np.sin(b)
    ca2, cb2 = ca * ca, cb * cb
    # numerator and denominator multiplied by cos(a)^2 cos(b)^2
    d = cb2 + sb * sb * ca2
    pole = d < 1e-300
    d = np.where(pole, 1.0, d)
    out = np.stack([2 * sa * ca * cb2 / d, 2 * sb * cb * ca2 / d,
                    (sa * sa * cb2 + sb * sb * ca2 - ca2 * cb2) / d], axis=-1)
    if np.any(pole):
        out[pole] = (0.0, 0.0, 1.0)
    return project_to_sphere(out.reshape(-1, 3)).reshape(out.shape)


def _angle_at(t):
    """``pi (t - 1/2)`` with the endpoints snapped to exactly -pi/2 and pi/2."""
    t = np.asarray(t, dtype=float)
    out = math.pi * (t - 0.5)
    out = np.where(t <= 0.0, -0.5 * math.pi, out)
    return np.where(t >= 1.0, 0.5 * math.pi, out)


def theta_linear(mesh: RadialMesh, slope: float = 4.0 * math.pi / 3.0) -> EulerField:
    """Radial profile ``theta = slope * r``, ``phi = 0``."""
    r = mesh.nodes
    return EulerField(slope * r, np.zeros_like(r))


def theta_linear_3comp(mesh: RadialMesh, slope: float = 4.0 * math.pi / 3.0) -> MagnetizationField:
    """Same polar profile with azimuth pi/4: ``u = v = sin(slope r)/sqrt 2``, ``w = cos(slope r)``."""
    r = mesh.nodes
    s = np.sin(slope * r) / math.sqrt(2.0)
    m = MagnetizationField.from_components(s, s, np.cos(slope * r))
    return project_to_sphere(m)


def gamma_family(mesh: RadialMesh, gamma: float) -> MagnetizationField:
    """``T(tan(-pi/2 + r pi), tan(-pi/2 + gamma pi))``; north pole at both ends."""
    if not 0.0 <= gamma <= 1.0:
        raise ValueError(f"gamma must lie in [0, 1], got {gamma}")
    r = mesh.nodes
    m = stereographic_angles(_angle_at(r), np.full_like(r, float(_angle_at(gamma))))
    m[0] = m[-1] = (0.0, 0.0, 1.0)
    if gamma == 0.5:
        m[:, 1] = 0.0
    return MagnetizationField(m)


def degree1_family(mesh: RadialMesh | np.ndarray, s: float, variant: str = "north",
                   theta_b: float = 0.5 * math.pi) -> MagnetizationField:
    """Member ``s`` of a degree-one family with ``m(0) = N``.

    ``variant="generic"``: stereographic image of the line through the point
    ``(x_b, 0)`` at angle ``2 pi s``, with ``x_b = tan((pi - theta_b)/2)``, so
    that ``m(1)`` has polar angle ``theta_b``.  ``variant="north"``: parallel
    lines, ``m(1) = N``.
    """
    r = mesh.nodes if isinstance(mesh, RadialMesh) else np.asarray(mesh, dtype=float)
    if variant == "north":
        m = stereographic_angles(_angle_at(r), np.full_like(r, float(_angle_at(s))))
        m[r <= 0] = (0.0, 0.0, 1.0)
        m[r >= 1] = (0.0, 0.0, 1.0)
        return MagnetizationField(m)
    if variant != "generic":
        raise ValueError(f"unknown variant {variant!r}")
    if not 0.0 <= theta_b < math.pi:
        raise ValueError("generic family needs theta_b in [0, pi)")
    xb = math.tan(0.5 * (math.pi - theta_b))
    with np.errstate(divide="ignore", invalid="ignore"):
        k = np.where(r > 0, (1.0 - r) / np.where(r > 0, r, 1.0), np.inf)
        x = xb + xb * math.cos(2 * math.pi * s) * k
        y = xb * math.sin(2 * math.pi * s) * k
    x = np.where(r > 0, x, np.inf)
    y = np.where(r > 0, y, 0.0)
    m = stereographic(x, y)
    return MagnetizationField(project_to_sphere(m))


def constant_north(mesh: RadialMesh) -> MagnetizationField:
    m = np.zeros((len(mesh), 3))
    m[:, 2] = 1.0
    return MagnetizationField(m)


def boundary_of(field: MagnetizationField) -> BoundaryCondition:
    """Boundary condition read off the last node."""
    u, v, w = field.m[-1]
    return BoundaryCondition(math.atan2(math.hypot(u, v), w), math.atan2(v, u))


def _solid_angle(a, b, c):
    """Signed solid angle of spherical triangles (Van Oosterom-Strackee), vectorised."""
    num = np.einsum("...i,...i->...", a, np.cross(b, c))
    den = 1.0 + np.einsum("...i,...i->...", a, b) + np.einsum("...i,...i->...", b, c) \
        + np.einsum("...i,...i->...", c, a)
    return 2.0 * np.arctan2(num, den)


def degree(samples: np.ndarray, periodic_s: bool = True, max_step: float = 0.5 * math.pi) -> int:
    """Topological degree of a sampled family ``samples[i_r, i_s] -> S^2``.

    The ``r = 0`` and ``r = 1`` rows must each be constant (collapsed to a
    point).  With ``periodic_s`` the ``s`` direction wraps around (a repeated
    closing column is dropped); otherwise the ``s = 0`` and ``s = 1`` columns
    must be constant as well, so the sampled square is again a sphere.
    Orientation: the ``(s, r)`` parameter order is positive.
    """
    m = np.asarray(samples, dtype=float)
    if m.ndim != 3 or m.shape[2] != 3:
        raise ValueError("samples must have shape (n_r, n_s, 3)")
    if periodic_s:
        if np.allclose(m[:, 0], m[:, -1], atol=1e-12):
            m = m[:, :-1]
        m = np.concatenate([m, m[:, :1]], axis=1)
    # geodesic spacing between neighbours along both parameters
    for nb in (np.einsum("ijk,ijk->ij", m[1:], m[:-1]), np.einsum("ijk,ijk->ij", m[:, 1:], m[:, :-1])):
        if np.any(np.arccos(np.clip(nb, -1.0, 1.0)) > max_step):
            raise ResolutionError("neighbouring samples are more than pi/2 apart; refine the grid")
    p00, p10 = m[:-1, :-1], m[1:, :-1]
    p01, p11 = m[:-1, 1:], m[1:, 1:]
    total = _solid_angle(p00, p01, p11).sum() + _solid_angle(p00, p11, p10).sum()
    value = total / (4.0 * math.pi)
    return int(round(value))


def family_samples(member, r: np.ndarray, s_values: np.ndarray) -> np.ndarray:
    """Stack ``member(r, s).m`` over ``s`` into an ``(n_r, n_s, 3)`` array."""
    return np.stack([member(r, s).m for s in s_values], axis=1)
