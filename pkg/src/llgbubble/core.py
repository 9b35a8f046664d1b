"""State types and coordinate maps shared by the whole package.

A magnetization profile ``m(r) = (u, v, w)`` is the image of the ray
``psi = 0`` of an n-equivariant map from the unit disk to the sphere; the
full map is recovered by rotating about the z-axis by ``n * psi``.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

# Pole convention: below this |sin(theta)| the azimuth is reported as 0.
POLE_EPS = 1e-12


class LLGError(Exception):
    """Base class for errors raised by this package."""


class NormViolationError(LLGError, ValueError):
    """Input vector is not on the unit sphere."""


class DegenerateStateError(LLGError, ArithmeticError):
    """A node carries the zero vector, so it cannot be projected to the sphere."""


class InvalidMeshError(LLGError, ValueError):
    """Mesh nodes are not strictly increasing from 0 to 1."""


@dataclass(frozen=True)
class LLGParams:
    """Precession ``alpha``, damping ``beta`` and equivariance index ``n``.

    ``(alpha, beta)`` is rescaled onto the unit circle on construction, so
    ``LLGParams(2, 0)`` is the Schroedinger map flow ``(1, 0)``.
    """

    alpha: float = 0.0
    beta: float = 1.0
    n: int = 1

    def __post_init__(self):
        a, b = float(self.alpha), float(self.beta)
        if b < 0:
            raise ValueError(f"damping beta must be >= 0, got {b}")
        norm = math.hypot(a, b)
        if norm == 0:
            raise ValueError("alpha and beta cannot both vanish")
        if int(self.n) != self.n or self.n < 1:
            raise ValueError(f"equivariance index must be a positive integer, got {self.n}")
        object.__setattr__(self, "alpha", a / norm)
        object.__setattr__(self, "beta", b / norm)
        object.__setattr__(self, "n", int(self.n))

    @classmethod
    def from_alpha(cls, alpha: float, n: int = 1) -> "LLGParams":
        """Parameters with ``beta = sqrt(1 - alpha**2)``."""
        return cls(alpha, math.sqrt(max(0.0, 1.0 - alpha * alpha)), n)

    @property
    def harmonic_map(self) -> bool:
        return self.alpha == 0.0


@dataclass(frozen=True, eq=False)
class MagnetizationField:
    """Samples of ``(u, v, w)`` at mesh nodes, stored as an ``(N, 3)`` array."""

    m: np.ndarray

    def __post_init__(self):
        m = np.array(self.m, dtype=float)
        if m.ndim != 2 or m.shape[1] != 3:
            raise ValueError(f"expected an (N, 3) array, got shape {m.shape}")
        m.setflags(write=False)
        object.__setattr__(self, "m", m)

    @classmethod
    def from_components(cls, u, v, w) -> "MagnetizationField":
        return cls(np.column_stack([u, v, w]))

    @property
    def u(self) -> np.ndarray:
        return self.m[:, 0]

    @property
    def v(self) -> np.ndarray:
        return self.m[:, 1]

    @property
    def w(self) -> np.ndarray:
        return self.m[:, 2]

    def __len__(self):
        return self.m.shape[0]

    def norm_defect(self) -> float:
        """Largest deviation of ``|m|`` from 1 over the nodes."""
        return float(np.max(np.abs(np.linalg.norm(self.m, axis=1) - 1.0)))

    def to_euler(self) -> "EulerField":
        """Principal Euler angles per node (``phi = 0`` where ``u = v = 0``)."""
        rho = np.hypot(self.u, self.v)
        theta = np.arctan2(rho, self.w)
        phi = np.where(rho < POLE_EPS, 0.0, np.arctan2(self.v, self.u))
        return EulerField(theta, phi)


@dataclass(frozen=True, eq=False)
class EulerField:
    """Polar angle ``theta`` and azimuth ``phi`` per node.

    ``theta`` may be unwrapped outside ``[0, pi]`` (e.g. ``theta(0) = 2*pi``
    after a re-attached bubble).
    """

    theta: np.ndarray
    phi: np.ndarray = None

    def __post_init__(self):
        theta = np.array(self.theta, dtype=float)
        phi = np.zeros_like(theta) if self.phi is None else np.array(self.phi, dtype=float)
        if theta.shape != phi.shape or theta.ndim != 1:
            raise ValueError("theta and phi must be 1-d arrays of equal length")
        theta.setflags(write=False)
        phi.setflags(write=False)
        object.__setattr__(self, "theta", theta)
        object.__setattr__(self, "phi", phi)

    def __len__(self):
        return self.theta.size

    def to_cartesian(self) -> MagnetizationField:
        return MagnetizationField(euler_to_cartesian(self.theta, self.phi))


@dataclass(frozen=True)
class BoundaryCondition:
    """Dirichlet value ``m(1) = (theta_b, phi_b)`` in Euler angles."""

    theta_b: float = 0.0
    phi_b: float = 0.0
    q: float = field(init=False)

    def __post_init__(self):
        tb = float(self.theta_b) % (2 * math.pi)
        object.__setattr__(self, "theta_b", tb)
        # q = tan(theta_b / 2) is undefined at the south pole.
        q = math.inf if abs(tb - math.pi) < 1e-15 else math.tan(tb / 2)
        object.__setattr__(self, "q", q)

    @property
    def vector(self) -> np.ndarray:
        return euler_to_cartesian(self.theta_b, self.phi_b)


def euler_to_cartesian(theta, phi):
    """``(cos phi sin theta, sin phi sin theta, cos theta)``; broadcasts over arrays."""
    theta = np.asarray(theta, dtype=float)
    phi = np.asarray(phi, dtype=float)
    s = np.sin(theta)
    return np.stack([np.cos(phi) * s, np.sin(phi) * s, np.cos(theta)], axis=-1)


def cartesian_to_euler(m, tol: float = 1e-9):
    """Principal Euler angles ``theta in [0, pi]``, ``phi in (-pi, pi]`` of a unit vector."""
    m = np.asarray(m, dtype=float)
    if m.shape != (3,):
        raise ValueError(f"expected a 3-vector, got shape {m.shape}")
    norm = float(np.linalg.norm(m))
    if abs(norm - 1.0) > tol:
        raise NormViolationError(f"|m| = {norm!r} is not 1 within {tol}")
    x, y, z = m
    rho = math.hypot(x, y)
    theta = math.atan2(rho, z)
    if math.sin(theta) < POLE_EPS:
        return theta, 0.0
    phi = math.atan2(y, x)
    if phi == -math.pi:
        phi = math.pi
    return theta, phi


def project_to_sphere(field_: MagnetizationField | np.ndarray):
    """Normalise every node to unit length.

    Accepts a :class:`MagnetizationField` or a raw ``(N, 3)`` array and
    returns the same kind.
    """
    raw = isinstance(field_, np.ndarray)
    m = np.asarray(field_ if raw else field_.m, dtype=float)
    norms = np.linalg.norm(m, axis=1)
    bad = np.flatnonzero(~(norms > 0) | ~np.isfinite(norms))
    if bad.size:
        raise DegenerateStateError(f"cannot project zero/non-finite vectors at nodes {bad[:5].tolist()}")
    out = m / norms[:, None]
    return out if raw else MagnetizationField(out)
