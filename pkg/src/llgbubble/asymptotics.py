"""Reduced models of the blowup: slow-time amplitude ODE, separatrix rotation,
the n >= 2 modulation system and the special functions they need.

All routines are independent of the PDE solver and serve as predictions to
compare PDE runs against.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np
from scipy.integrate import quad, solve_ivp

from .core import LLGParams
from .dynamics import SpatialOperators
from .mesh import RadialMesh

RTOL = 1e-10


# --------------------------------------------------------------------------
# slow-time amplitude: (sigma'' - sigma') tau = sigma


@dataclass(frozen=True)
class SigmaTrajectory:
    tau: np.ndarray
    sigma: np.ndarray   # complex
    dsigma: np.ndarray  # complex, d sigma / d tau


def _sigma_rhs(tau, y):
    # y = (sr, si, dsr, dsi)
    sr, si, dr, di = y
    return [dr, di, dr + sr / tau, di + si / tau]


def sigma_ode(tau0: float, sigma0, dsigma0, tau_end: float, n_out: int = 401,
              rtol: float = RTOL, atol: float = 1e-14) -> SigmaTrajectory:
    """Integrate ``sigma'' = sigma' + sigma / tau`` (complex) from ``tau0`` to ``tau_end``.

    Backward integration (``tau_end < tau0``) is allowed and is the stable
    direction for the decaying branch.
    """
    if tau0 <= 0 or tau_end <= 0:
        raise ValueError("the slow time must stay positive")
    s0, d0 = complex(sigma0), complex(dsigma0)
    grid = np.linspace(tau0, tau_end, n_out)
    sol = solve_ivp(_sigma_rhs, (tau0, tau_end), [s0.real, s0.imag, d0.real, d0.imag],
                    method="DOP853", t_eval=grid, rtol=rtol, atol=atol)
    if not sol.success:
        raise RuntimeError(sol.message)
    y = sol.y
    return SigmaTrajectory(sol.t, y[0] + 1j * y[1], y[2] + 1j * y[3])


def sigma_residual(sigma, dsigma, d2sigma, tau):
    """Relative residual of ``(sigma'' - sigma') tau - sigma``."""
    sigma, dsigma, d2sigma, tau = map(np.asarray, (sigma, dsigma, d2sigma, tau))
    res = (d2sigma - dsigma) * tau - sigma
    scale = np.abs(sigma) + np.abs(d2sigma * tau) + np.abs(dsigma * tau)
    return np.abs(res) / np.where(scale > 0, scale, 1.0)


def growing_branch(tau):
    """Exact solution ``tau e^tau`` with its first two derivatives."""
    tau = np.asarray(tau, dtype=float)
    e = np.exp(tau)
    return tau * e, (1.0 + tau) * e, (2.0 + tau) * e


def _decaying_series(tau: float, terms: int = 30):
    # f = sum_k a_k tau^-k with a_1 = 1, a_k = -k a_{k-1}: an asymptotic
    # series, accurate to ~terms! / tau^terms for large tau
    f = df = 0.0
    a = 1.0
    for k in range(1, terms + 1):
        if k > 1:
            a *= -k
        f += a * tau ** (-k)
        df += -k * a * tau ** (-k - 1)
    return f, df


def decaying_branch(tau_lo: float, tau_hi: float = 60.0, n_out: int = 401) -> SigmaTrajectory:
    """The solution with ``sigma ~ 1 / tau`` as ``tau -> infinity``.

    Started from its asymptotic series at ``tau_hi`` and integrated backwards,
    the direction in which the growing branch is damped.
    """
    f, df = _decaying_series(tau_hi)
    traj = sigma_ode(tau_hi, f, df, tau_lo, n_out=n_out)
    order = np.argsort(traj.tau)
    return SigmaTrajectory(traj.tau[order], traj.sigma[order], traj.dsigma[order])


@dataclass(frozen=True)
class ReducedSeries:
    tau: np.ndarray
    p: np.ndarray
    C_tilde: np.ndarray
    rate_residual: np.ndarray      # (tau/4) p (p' - p) - Re(conj(sigma) sigma')
    rotation_residual: np.ndarray  # (tau/4) p^2 C~' - (si sr' - sr si')


def reduced_system(traj: SigmaTrajectory) -> ReducedSeries:
    """``p = 2 |sigma'|`` and ``C~ = arg sigma'`` along a trajectory.

    The two dynamic relations are checked with derivatives of ``p`` and of the
    (unwrapped) ``C~`` taken numerically from the series, so the residuals
    measure the consistency of the integrated data.
    """
    ds = traj.dsigma
    if np.any(ds == 0):
        raise ValueError("sigma' vanishes: the angle C~ is undefined")
    tau = traj.tau
    p = 2.0 * np.abs(ds)
    C = np.unwrap(np.angle(ds))
    dp = np.gradient(p, tau, edge_order=2)
    dC = np.gradient(C, tau, edge_order=2)
    s = traj.sigma
    rate = 0.25 * tau * p * (dp - p) - (s.real * ds.real + s.imag * ds.imag)
    rot = 0.25 * tau * p * p * dC - (s.imag * ds.real - s.real * ds.imag)
    return ReducedSeries(tau, p, C, rate, rot)


# --------------------------------------------------------------------------
# fast rotation near blowup: dC~/dt~ = sin C~


@dataclass(frozen=True)
class SeparatrixSolution:
    t: np.ndarray
    numerical: np.ndarray
    closed_form: np.ndarray
    sign: float
    c0: float

    @property
    def max_error(self) -> float:
        return float(np.max(np.abs(self.numerical - self.closed_form)))


def separatrix_closed_form(t, C0: float):
    """Exact solution of ``C' = sin C`` through ``C(0) = C0``.

    Written as ``2 k pi + sign [pi/2 + arctan(sinh(t + c0))]`` with
    ``c0 = ln tan(|C0'| / 2)`` for the reduced angle ``C0' in (-pi, pi]``;
    the equilibria ``0`` and ``pi`` are returned as constants.  Also returns
    ``(sign, c0)``.
    """
    t = np.asarray(t, dtype=float)
    k = round(C0 / (2.0 * math.pi))
    base = C0 - 2.0 * math.pi * k
    if base == 0.0 or abs(base) == math.pi:
        return np.full_like(t, C0), 0.0, math.nan
    sign = 1.0 if base > 0 else -1.0
    c0 = math.log(math.tan(0.5 * abs(base)))
    return 2.0 * math.pi * k + sign * (0.5 * math.pi + np.arctan(np.sinh(t + c0))), sign, c0


def separatrix_ode(C0: float, t_range=(-10.0, 10.0), n_out: int = 401,
                   rtol: float = 1e-12, atol: float = 1e-14) -> SeparatrixSolution:
    """Integrate ``C' = sin C`` from ``C(0) = C0`` over ``t_range`` (both directions)."""
    t0, t1 = t_range
    grid = np.linspace(t0, t1, n_out)
    out = np.empty_like(grid)
    for lo, hi, mask in ((0.0, t0, grid <= 0.0), (0.0, t1, grid >= 0.0)):
        pts = grid[mask]
        if pts.size == 0:
            continue
        if hi == 0.0:
            out[mask] = C0
            continue
        order = np.argsort(pts) if hi > 0 else np.argsort(-pts)
        sol = solve_ivp(lambda _t, y: np.sin(y), (lo, hi), [C0], method="DOP853",
                        t_eval=pts[order], rtol=rtol, atol=atol)
        if not sol.success:
            raise RuntimeError(sol.message)
        vals = np.empty(pts.size)
        vals[order] = sol.y[0]
        out[mask] = vals
    closed, sign, c0 = separatrix_closed_form(grid, C0)
    return SeparatrixSolution(grid, out, closed, sign, c0)


def separatrix_scale(R: float, q0: float) -> float:
    """Fast time scale ``eps`` with ``eps^2 = R ln(1/R) / q0``."""
    if not 0 < R < 1 or q0 <= 0:
        raise ValueError("need 0 < R < 1 and q0 > 0")
    return math.sqrt(R * math.log(1.0 / R) / q0)


# --------------------------------------------------------------------------
# n >= 2


def En(n: int) -> float:
    """``pi / (2 n^2 sin(pi / n))``."""
    if n < 2:
        raise ValueError("E_n is defined for n >= 2")
    return math.pi / (2.0 * n * n * math.sin(math.pi / n))


def En_quadrature(n: int) -> float:
    """``int_0^inf s^(2n+1) / (1 + s^(2n))^2 ds`` by adaptive quadrature.

    With ``u = s^(2n)`` and ``u -> 1/u`` on ``[1, inf)`` the integral becomes
    ``(1/2n) int_0^1 (u^(1/n) + u^(-1/n)) / (1 + u)^2 du``; the integrable
    endpoint singularity is handled by an algebraic weight.
    """
    if n < 2:
        raise ValueError("E_n is defined for n >= 2")
    a = 1.0 / n
    f = lambda u: 1.0 / (1.0 + u) ** 2  # noqa: E731
    i1, _ = quad(f, 0.0, 1.0, weight="alg", wvar=(a, 0.0), epsabs=1e-15, epsrel=1e-14)
    i2, _ = quad(f, 0.0, 1.0, weight="alg", wvar=(-a, 0.0), epsabs=1e-15, epsrel=1e-14)
    return (i1 + i2) / (2.0 * n)


def _inner_integral(xi: float, n: int) -> float:
    if xi <= 1.0:
        val, _ = quad(lambda s: s ** (2 * n + 1) / (1.0 + s ** (2 * n)) ** 2, 0.0, xi,
                      epsabs=0.0, epsrel=1e-13)
        return val
    # split at 1; beyond it use the tail of E_n, which avoids integrating
    # a large range of a slowly decaying function
    tail, _ = quad(lambda s: s ** (2 * n + 1) / (1.0 + s ** (2 * n)) ** 2, xi, math.inf,
                   epsabs=0.0, epsrel=1e-13)
    return En(n) - tail


def phi1_inner(xi, n: int):
    """``phi_1xi = (xi^-2n + 2 + xi^2n) / xi * int_0^xi s^(2n+1) / (1 + s^2n)^2 ds`` (0 at xi = 0)."""
    if n < 2:
        raise ValueError("n >= 2 required")
    xi_arr = np.atleast_1d(np.asarray(xi, dtype=float))
    if np.any(xi_arr < 0):
        raise ValueError("xi must be non-negative")
    out = np.zeros_like(xi_arr)
    for i, x in enumerate(xi_arr):
        if x == 0.0:
            continue
        pref = (x ** (-2 * n) + 2.0 + x ** (2 * n)) / x
        out[i] = pref * _inner_integral(float(x), n)
    return out if np.ndim(xi) else float(out[0])


@dataclass(frozen=True)
class HigherNSolution:
    t: np.ndarray
    R: np.ndarray
    C_tilde: np.ndarray
    events: dict  # name -> array of event times
    status: str


def higher_n_system(R0: float, C0: float, n: int = 2, q0: float = 1.0, t_range=(0.0, 100.0),
                    R_min: float = 1e-12, R_max: float = 10.0, exit_angle: float = 0.25 * math.pi,
                    stop_on_exit: bool = True, n_out: int = 2001) -> HigherNSolution:
    """``C~' = (n q0 / E_n) R^(n-2) sin C~``, ``R' = -(q0 / E_n) R^(n-1) cos C~``.

    Events: ``collapse`` when ``R`` falls to ``R_min`` (terminal), ``escape``
    when ``R`` grows to ``R_max`` (terminal; for ``n >= 3`` the expanding
    branch reaches infinite ``R`` in finite time), ``exit`` when
    ``|C~ - k pi|`` reaches ``exit_angle`` for the ``k`` nearest to ``C0``.
    """
    if R0 <= 0 or n < 2 or q0 <= 0:
        raise ValueError("need R0 > 0, n >= 2, q0 > 0")
    e = En(n)
    k = round(C0 / math.pi)

    def rhs(_t, y):
        R, C = y
        Rp = max(R, 0.0)
        return [-(q0 / e) * Rp ** (n - 1) * math.cos(C), (n * q0 / e) * Rp ** (n - 2) * math.sin(C)]

    def collapse(_t, y):
        return y[0] - R_min

    collapse.terminal = True
    collapse.direction = -1

    def escape(_t, y):
        return y[0] - R_max

    escape.terminal = True
    escape.direction = 1

    def leave(_t, y):
        return abs(y[1] - k * math.pi) - exit_angle

    leave.terminal = stop_on_exit
    leave.direction = 1

    grid = np.linspace(t_range[0], t_range[1], n_out)
    sol = solve_ivp(rhs, t_range, [R0, C0], method="DOP853", t_eval=grid, rtol=RTOL, atol=1e-14,
                    events=(collapse, escape, leave), dense_output=False)
    if sol.status < 0:
        raise RuntimeError(sol.message)
    events = {"collapse": sol.t_events[0], "escape": sol.t_events[1], "exit": sol.t_events[2]}
    status = next((name for name in ("collapse", "escape", "exit") if events[name].size), "end")
    return HigherNSolution(sol.t, sol.y[0], sol.y[1], events, status)


# --------------------------------------------------------------------------
# linearisation at the south pole


def tangent_plane_rhs(z, mesh: RadialMesh, params: LLGParams) -> np.ndarray:
    """``(beta - i alpha)(z_rr + z_r / r - z / r^2)`` at interior nodes; 0 at both ends."""
    z = np.asarray(z, dtype=complex)
    ops = SpatialOperators.on(mesh)
    out = np.zeros_like(z)
    out[1:-1] = ops.equivariant_laplacian(z.real, 1) + 1j * ops.equivariant_laplacian(z.imag, 1)
    return (params.beta - 1j * params.alpha) * out
