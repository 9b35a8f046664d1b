"""r-adaptive radial mesh: monitor function, mesh relaxation, Sundman time step."""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
from scipy.interpolate import PchipInterpolator
from scipy.linalg import solve_banded

from . import kernels
from .core import EulerField, InvalidMeshError, LLGError, MagnetizationField, project_to_sphere

MIN_SPACING = 1e-14


class MeshTanglingError(LLGError):
    """A mesh move lost monotonicity; retry with a smaller step."""


@dataclass(frozen=True, eq=False)
class RadialMesh:
    """Strictly increasing nodes on ``[0, 1]``; the computational coordinate is ``i / (N - 1)``."""

    nodes: np.ndarray

    def __post_init__(self):
        r = np.array(self.nodes, dtype=float)
        if r.ndim != 1 or r.size < 3:
            raise InvalidMeshError("a mesh needs at least three nodes")
        if r[0] != 0.0 or r[-1] != 1.0:
            raise InvalidMeshError(f"mesh must span [0, 1], got [{r[0]}, {r[-1]}]")
        gaps = np.diff(r)
        if not np.all(gaps > MIN_SPACING):
            i = int(np.argmin(gaps))
            raise InvalidMeshError(f"mesh not strictly increasing at node {i} (gap {gaps[i]:.3e})")
        r.setflags(write=False)
        object.__setattr__(self, "nodes", r)

    @classmethod
    def uniform(cls, n_nodes: int = 201) -> "RadialMesh":
        r = np.linspace(0.0, 1.0, n_nodes)
        r[-1] = 1.0
        return cls(r)

    def __len__(self):
        return self.nodes.size

    @property
    def r(self) -> np.ndarray:
        return self.nodes

    @property
    def xi(self) -> np.ndarray:
        return np.linspace(0.0, 1.0, self.nodes.size)

    @property
    def spacing(self) -> np.ndarray:
        return np.diff(self.nodes)


@dataclass(frozen=True)
class MeshConfig:
    n_nodes: int = 201
    tau_mm: float = 1e-2
    smooth_passes: int = 4
    # floor = monitor_floor_abs + monitor_floor * max(M); a relative floor of
    # order 1e-3 starves the bubble of nodes once |m_r| ~ 1e5, hence the default 0
    monitor_floor: float = 0.0
    monitor_floor_abs: float = 1e-8
    integral_weight: str = "dr"

    def __post_init__(self):
        if self.integral_weight not in ("dr", "r_dr"):
            raise ValueError("integral_weight must be 'dr' or 'r_dr'")


@dataclass(frozen=True, eq=False)
class MonitorField:
    values: np.ndarray

    def __post_init__(self):
        v = np.array(self.values, dtype=float)
        if np.any(~(v > 0)):
            raise ValueError("monitor values must be positive")
        v.setflags(write=False)
        object.__setattr__(self, "values", v)

    @property
    def sup(self) -> float:
        return float(self.values.max())


def gradient_magnitude(field, mesh: RadialMesh) -> np.ndarray:
    """Nodal ``|m_r|``.

    ``field`` is a :class:`MagnetizationField`, an :class:`EulerField`, or a
    bare polar-angle array (radial formulation, where ``|m_r| = |theta_r|``).
    """
    r = mesh.nodes
    if isinstance(field, MagnetizationField):
        d = kernels.gradient(r, field.m, (-1.0, -1.0, 1.0))
        return np.sqrt(np.sum(d * d, axis=1))
    if isinstance(field, EulerField):
        d = kernels.gradient(r, np.column_stack([field.theta, field.phi]), (-1.0, 1.0))
        return np.sqrt(d[:, 0] ** 2 + (np.sin(field.theta) * d[:, 1]) ** 2)
    return np.abs(kernels.gradient(r, np.asarray(field, dtype=float), (-1.0,)))


def smooth(values: np.ndarray, passes: int) -> np.ndarray:
    """``passes`` sweeps of (1/4, 1/2, 1/4) averaging in the index, endpoints reflected."""
    m = np.asarray(values, dtype=float).copy()
    for _ in range(passes):
        padded = np.concatenate([m[1:2], m, m[-2:-1]])
        m = 0.25 * padded[:-2] + 0.5 * padded[1:-1] + 0.25 * padded[2:]
    return m


def monitor(field, mesh: RadialMesh, config: MeshConfig = MeshConfig()) -> MonitorField:
    """Arclength-type monitor ``|m_r| + int |m_r|``, smoothed and floored."""
    g = gradient_magnitude(field, mesh)
    r = mesh.nodes
    weight = g if config.integral_weight == "dr" else g * r
    total = np.trapezoid(weight, r)
    m = smooth(g + total, config.smooth_passes)
    floor = config.monitor_floor_abs + config.monitor_floor * float(m.max())
    return MonitorField(np.maximum(m, floor))


def move_mesh(mesh: RadialMesh, M: MonitorField | np.ndarray, ds: float,
              tau: float = MeshConfig.tau_mm) -> RadialMesh:
    """One backward-Euler step of ``tau r_s = (M r_xi)_xi`` with fixed ends.

    Backward Euler keeps the step unconditionally stable, so ``ds`` can be as
    large as the physics step; for ``ds / tau`` large the result is close to
    the equidistributing mesh of ``M``.
    """
    if ds < 0:
        raise ValueError("ds must be non-negative")
    if ds == 0:
        return mesh
    mv = M.values if isinstance(M, MonitorField) else np.asarray(M, dtype=float)
    r = mesh.nodes
    n = r.size
    dxi = 1.0 / (n - 1)
    mh = 0.5 * (mv[1:] + mv[:-1])  # cell-centred monitor
    c = ds / (tau * dxi * dxi)
    ab = np.zeros((3, n))
    ab[1, :] = 1.0
    # interior rows: r_i - c (mh_{i} (r_{i+1} - r_i) - mh_{i-1} (r_i - r_{i-1})) = r_i^old
    ab[1, 1:-1] += c * (mh[1:] + mh[:-1])
    ab[0, 2:] = -c * mh[1:]
    ab[2, :-2] = -c * mh[:-1]
    rhs = r.copy()
    new = solve_banded((1, 1), ab, rhs)
    new[0], new[-1] = 0.0, 1.0
    if not np.all(np.diff(new) > MIN_SPACING):
        raise MeshTanglingError("mesh lost monotonicity; reduce ds")
    return RadialMesh(new)


def equidistribute(mesh: RadialMesh, M: MonitorField | np.ndarray) -> RadialMesh:
    """Mesh on which every cell carries the same share of ``int M dr`` (piecewise-linear M)."""
    mv = M.values if isinstance(M, MonitorField) else np.asarray(M, dtype=float)
    r = mesh.nodes
    cum = np.concatenate([[0.0], np.cumsum(0.5 * (mv[1:] + mv[:-1]) * np.diff(r))])
    target = np.linspace(0.0, cum[-1], r.size)
    new = np.interp(target, cum, r)
    new[0], new[-1] = 0.0, 1.0
    return RadialMesh(new)


def sundman_dt(M: MonitorField | np.ndarray, ds: float) -> float:
    """Physical step for computational step ``ds`` under ``dt/ds = 1/||M||_inf``."""
    if ds <= 0:
        raise ValueError("ds must be positive")
    mv = M.values if isinstance(M, MonitorField) else np.asarray(M, dtype=float)
    return ds / float(np.max(mv))


def interpolate(field, old_mesh: RadialMesh, new_mesh: RadialMesh):
    """Monotone piecewise-cubic (PCHIP) transfer of ``field`` to ``new_mesh``.

    Works on :class:`MagnetizationField` (re-projected afterwards),
    :class:`EulerField`, or bare arrays whose first axis runs over nodes.
    End values are copied exactly.
    """
    if new_mesh is old_mesh or np.array_equal(new_mesh.nodes, old_mesh.nodes):
        return field
    x_old, x_new = old_mesh.nodes, new_mesh.nodes

    def transfer(a):
        a = np.asarray(a, dtype=float)
        out = PchipInterpolator(x_old, a, axis=0)(x_new)
        out[0], out[-1] = a[0], a[-1]
        return out

    if isinstance(field, MagnetizationField):
        return project_to_sphere(MagnetizationField(transfer(field.m)))
    if isinstance(field, EulerField):
        return EulerField(transfer(field.theta), transfer(field.phi))
    return transfer(field)
