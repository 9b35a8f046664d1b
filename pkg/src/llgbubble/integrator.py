"""Time stepping of the coupled (profile, mesh) system in computational time ``s``.

One step:

1. monitor of the current profile, ``dt = ds / ||M||_inf`` (Sundman);
2. one ROS2 Rosenbrock step of the semi-discrete PDE on the frozen mesh;
3. projection onto the sphere;
4. mesh relaxation with the monitor of the new profile and transfer of the
   profile to the new mesh.

Step 2 is linearly implicit, so ``dt`` is limited by accuracy only; an
explicit scheme would be bound to ``dt ~ (min spacing)^2`` which near blowup
is many orders of magnitude smaller than the Sundman step.
"""

from __future__ import annotations

import logging
import math
from dataclasses import dataclass, field, replace

import numpy as np
from scipy.linalg import solve_banded

from . import kernels
from .core import DegenerateStateError, EulerField, LLGError, LLGParams, MagnetizationField, project_to_sphere
from .dynamics import energy
from .mesh import (MeshConfig, MeshTanglingError, RadialMesh, gradient_magnitude, interpolate, monitor,
                   move_mesh, sundman_dt)

log = logging.getLogger(__name__)

# ROS2 (Verwer et al.): L-stable, order 2 for any Jacobian approximation
ROS2_GAMMA = 1.0 + 1.0 / math.sqrt(2.0)
# step-size controller
SAFETY = 0.9
ERR_EXP = 1.0 / 3.0
GROW_MAX = 2.0


class StiffnessFailure(LLGError):
    """Step size halved ``max_halvings`` times without an acceptable step.

    ``state`` is the last accepted state; ``trajectory`` is attached by
    :func:`run_until`.
    """

    def __init__(self, message, state, trajectory=None):
        super().__init__(message)
        self.state = state
        self.trajectory = trajectory


class EnergyIncreaseError(LLGError):
    def __init__(self, message, state):
        super().__init__(message)
        self.state = state


@dataclass(frozen=True)
class IntegratorConfig:
    ds: float = 1e-3
    ds_max: float = 50.0
    tol: float = 1e-4
    rk_order: int = 2
    cfl: float = 0.5  # kept for config compatibility; the implicit step needs no CFL cap
    max_halvings: int = 20
    energy_check: bool = True
    energy_tol: float = 1e-6

    def __post_init__(self):
        if self.rk_order != 2:
            raise ValueError("only the second-order Rosenbrock pair is implemented")


@dataclass(frozen=True)
class StopSpec:
    grad_inf: float | None = 1e8
    t_max: float | None = None
    max_steps: int | None = None
    eq_tol: float | None = None

    def __post_init__(self):
        if all(v is None for v in (self.grad_inf, self.t_max, self.max_steps, self.eq_tol)):
            raise ValueError("StopSpec needs at least one criterion")


@dataclass(frozen=True, eq=False)
class SimState:
    field: MagnetizationField | EulerField
    mesh: RadialMesh
    t: float = 0.0
    s: float = 0.0
    step_count: int = 0
    ds: float = 1e-3  # suggested size of the next computational step
    rejected: int = 0
    regularization_hits: int = 0

    @property
    def flags(self) -> dict:
        return {"rejected_steps": self.rejected, "regularization_hits": self.regularization_hits}

    def energy(self, n: int = 1) -> float:
        return energy(self.field, self.mesh, n)

    def grad_inf(self) -> float:
        return float(np.max(gradient_magnitude(self.field, self.mesh)))


class _LLGSystem:
    band = kernels.LLG_BAND

    def __init__(self, params: LLGParams):
        self.p = params

    @staticmethod
    def unpack(field_):
        return np.ascontiguousarray(field_.m)

    @staticmethod
    def pack(y):
        return MagnetizationField(y)

    def rates(self, y, r):
        # interior nodes only: r = 0 (pole) and r = 1 are held fixed
        return kernels.llg_rhs(r, y, self.p.alpha, self.p.beta, float(self.p.n))

    def jacobian(self, y, r):
        return kernels.llg_jac(r, y, self.p.alpha, self.p.beta, float(self.p.n))

    @staticmethod
    def project(y):
        return project_to_sphere(y)

    @staticmethod
    def tangential(err, y):
        # the projection removes the normal part of the local error
        return err - np.sum(err * y, axis=1)[:, None] * y


class _RadialSystem:
    band = kernels.RADIAL_BAND

    @staticmethod
    def unpack(field_):
        return np.ascontiguousarray(field_.theta)

    @staticmethod
    def pack(y):
        return EulerField(y)

    @staticmethod
    def rates(y, r):
        return kernels.radial_rhs(r, y)

    @staticmethod
    def jacobian(y, r):
        return kernels.radial_jac(r, y)

    @staticmethod
    def project(y):
        return y

    @staticmethod
    def tangential(err, y):
        return err


def system_for(field_, params: LLGParams, config: IntegratorConfig = IntegratorConfig()):
    if isinstance(field_, MagnetizationField):
        return _LLGSystem(params)
    if isinstance(field_, EulerField):
        if params.alpha != 0.0:
            raise ValueError("the scalar radial formulation only holds for alpha = 0")
        return _RadialSystem()
    raise TypeError(f"unsupported field type {type(field_).__name__}")


def _ros2(system, y, r, dt, tol):
    """One ROS2 step; returns the new values and the scaled error norm."""
    shape = y.shape
    f0 = system.rates(y, r).ravel()
    ab = -ROS2_GAMMA * dt * system.jacobian(y, r)
    bw = system.band
    ab[bw] += 1.0
    k1 = solve_banded((bw, bw), ab, f0, check_finite=False)
    f1 = system.rates(y + dt * k1.reshape(shape), r).ravel()
    k2 = solve_banded((bw, bw), ab, f1 - 2.0 * k1, check_finite=False)
    y_new = y + dt * (1.5 * k1 + 0.5 * k2).reshape(shape)
    # filtered estimate: stiff components of the raw difference do not shrink with dt
    err = solve_banded((bw, bw), ab, 0.5 * dt * (k1 + k2), check_finite=False)
    err = system.tangential(err.reshape(shape), y).ravel()
    scale = tol * (1.0 + np.maximum(np.abs(y.ravel()), np.abs(y_new.ravel())))
    return y_new, float(np.max(np.abs(err) / scale))


def step(state: SimState, params: LLGParams, ds: float | None = None,
         config: IntegratorConfig = IntegratorConfig(), mesh_config: MeshConfig = MeshConfig(),
         system=None) -> SimState:
    """Advance by one accepted computational step (halving ``ds`` on rejection)."""
    system = system or system_for(state.field, params, config)
    ds = state.ds if ds is None else ds
    r = state.mesh.nodes
    y = system.unpack(state.field)
    M = monitor(state.field, state.mesh, mesh_config)
    check_energy = config.energy_check and params.beta > 0
    e_old = state.energy(params.n) if check_energy else None
    rejected = 0
    for _ in range(config.max_halvings + 1):
        dt = sundman_dt(M, ds)
        reason = None
        try:
            y_new, err = _ros2(system, y, r, dt, config.tol)
            if not np.all(np.isfinite(y_new)):
                raise DegenerateStateError("non-finite values")
            y_new = system.project(y_new)
        except (DegenerateStateError, np.linalg.LinAlgError, ValueError) as exc:
            err, reason = math.inf, str(exc)
        if err <= 1.0:
            new_field = system.pack(y_new)
            if check_energy:
                e_new = energy(new_field, state.mesh, params.n)
                if e_new > e_old + config.energy_tol * (1.0 + abs(e_old)):
                    err, reason = math.inf, f"energy increased by {e_new - e_old:.3e}"
        if err <= 1.0:
            try:
                new_mesh = move_mesh(state.mesh, monitor(new_field, state.mesh, mesh_config), ds,
                                     mesh_config.tau_mm)
            except MeshTanglingError as exc:
                err, reason = math.inf, str(exc)
        if err <= 1.0:
            new_field = interpolate(new_field, state.mesh, new_mesh)
            factor = GROW_MAX if err == 0 else min(GROW_MAX, max(0.2, SAFETY * err ** -ERR_EXP))
            if rejected:
                factor = min(factor, 1.0)
            return replace(state, field=new_field, mesh=new_mesh, t=state.t + dt, s=state.s + ds,
                           step_count=state.step_count + 1, ds=min(ds * factor, config.ds_max),
                           rejected=state.rejected + rejected)
        if reason and check_energy and reason.startswith("energy") and rejected == config.max_halvings - 1:
            raise EnergyIncreaseError(f"discrete energy not dissipated at t={state.t:.6g}: {reason}", state)
        rejected += 1
        ds *= 0.5
        log.debug("step rejected (err=%.3g, %s); ds -> %.3g", err, reason, ds)
    raise StiffnessFailure(f"no acceptable step after {config.max_halvings} halvings at t={state.t:.9g} "
                           f"(last ds={ds:.3e})", state)


@dataclass
class Sample:
    step: int
    t: float
    dt: float
    s: float
    grad_inf: float
    energy: float
    R_fit: float = math.nan
    C_fit: float = math.nan
    C_rel: float = math.nan


@dataclass
class Trajectory:
    samples: list = field(default_factory=list)
    snapshots: list = field(default_factory=list)  # (t, nodes, values) at sample times
    reason: str | None = None
    final: SimState | None = None
    params: LLGParams | None = None

    def column(self, name: str) -> np.ndarray:
        return np.array([getattr(s, name) for s in self.samples], dtype=float)

    @property
    def peak_grad(self) -> float:
        g = self.column("grad_inf")
        return float(g.max()) if g.size else math.nan


def _sample(state, params, dt, fit_bubble):
    from .diagnostics import BubbleFitError, fit_bubble as _fit, relative_azimuth

    g = state.grad_inf()
    smp = Sample(state.step_count, state.t, dt, state.s, g, state.energy(params.n))
    smp.C_rel = relative_azimuth(state.field)
    if fit_bubble and g >= 10.0:
        try:
            bf = _fit(state)
            smp.R_fit, smp.C_fit = bf.R, bf.C
        except BubbleFitError:
            pass
    return smp


def run_until(state: SimState, params: LLGParams, stop: StopSpec,
              config: IntegratorConfig = IntegratorConfig(), mesh_config: MeshConfig = MeshConfig(),
              sample_every: int = 1, keep_snapshots: bool = True, fit_bubble: bool = True,
              snapshot_every: int | None = None) -> Trajectory:
    """Step until a stop criterion fires; returns the sampled trajectory.

    Termination reasons: ``gradient-threshold``, ``time-limit``,
    ``step-limit``, ``equilibrium``.  A solver failure is re-raised with the
    partial trajectory attached (its reason set to ``solver-failure``).
    """
    system = system_for(state.field, params, config)
    traj = Trajectory(params=params)
    snapshot_every = snapshot_every or sample_every
    last_dt = 0.0

    def record(st):
        if st.step_count % sample_every == 0:
            traj.samples.append(_sample(st, params, last_dt, fit_bubble))
        if keep_snapshots and st.step_count % snapshot_every == 0:
            traj.snapshots.append((st.t, st.mesh.nodes, system.unpack(st.field).copy()))

    record(state)
    while True:
        reason = None
        if stop.grad_inf is not None and state.grad_inf() >= stop.grad_inf:
            reason = "gradient-threshold"
        elif stop.t_max is not None and state.t >= stop.t_max * (1 - 1e-12):
            reason = "time-limit"
        elif stop.max_steps is not None and state.step_count >= stop.max_steps:
            reason = "step-limit"
        elif stop.eq_tol is not None and state.step_count > 0:
            rate = system.rates(system.unpack(state.field), state.mesh.nodes)
            if float(np.max(np.abs(rate))) < stop.eq_tol:
                reason = "equilibrium"
        if reason:
            if traj.samples and traj.samples[-1].step != state.step_count:
                traj.samples.append(_sample(state, params, last_dt, fit_bubble))
                if keep_snapshots:
                    traj.snapshots.append((state.t, state.mesh.nodes, system.unpack(state.field).copy()))
            traj.reason, traj.final = reason, state
            return traj
        ds = state.ds
        if stop.t_max is not None:
            M = monitor(state.field, state.mesh, mesh_config)
            ds = min(ds, (stop.t_max - state.t) * M.sup)
        try:
            new = step(state, params, ds, config, mesh_config, system)
        except (StiffnessFailure, EnergyIncreaseError) as exc:
            exc.trajectory = traj
            traj.reason, traj.final = "solver-failure", exc.state
            raise
        last_dt = new.t - state.t
        state = new
        record(state)
