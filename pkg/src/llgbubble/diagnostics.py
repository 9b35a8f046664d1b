"""Blowup diagnostics: bubble fits, rate fits, outcome classification, continuation."""

from __future__ import annotations

import math
from dataclasses import dataclass, field, replace

import numpy as np
from scipy.optimize import least_squares, minimize_scalar

from .core import EulerField, LLGError, LLGParams, MagnetizationField, euler_to_cartesian, project_to_sphere
from .mesh import gradient_magnitude

FIT_WINDOW = 10.0        # bubble fit over r in [0, FIT_WINDOW * R]
FIT_MAX_RESIDUAL = 0.2   # sup |theta - 2 arctan(r/R)| / pi
MIN_CORE_GRADIENT = 10.0
UNDETERMINED_ROTATION = 0.25 * math.pi
RATE_WINDOW = 1e-2       # rate fit on samples with R <= RATE_WINDOW * R_first


class BubbleFitError(LLGError):
    """No bubble core, or the core does not look like 2 arctan(r/R)."""


class RateFitError(LLGError, ValueError):
    pass


@dataclass(frozen=True)
class BubbleFit:
    R: float
    C: float
    residual: float

    def __post_init__(self):
        if not self.R > 0 or not self.residual >= 0:
            raise ValueError("BubbleFit needs R > 0 and residual >= 0")


@dataclass(frozen=True)
class RateFit:
    kappa: float
    T: float
    window: tuple
    residual: float
    # residuals of the comparison models fitted on the same window
    alternatives: dict = field(default_factory=dict)

    def __post_init__(self):
        if not self.T > self.window[1]:
            raise ValueError("fitted blowup time precedes the data")


@dataclass(frozen=True)
class Outcome:
    tag: str  # Blowup, DecayPlus, DecayMinus, Undetermined
    evidence: dict

    TAGS = ("Blowup", "DecayPlus", "DecayMinus", "Undetermined")


def _angles(field_):
    """Polar angle (unwrapped for radial fields) and azimuth per node."""
    if isinstance(field_, EulerField):
        return np.asarray(field_.theta, dtype=float), np.asarray(field_.phi, dtype=float)
    m = field_.m if isinstance(field_, MagnetizationField) else np.asarray(field_, dtype=float)
    theta = np.arctan2(np.hypot(m[:, 0], m[:, 1]), m[:, 2])
    return theta, np.arctan2(m[:, 1], m[:, 0])


def circular_mean(angles, weights=None) -> float:
    a = np.asarray(angles, dtype=float)
    w = np.ones_like(a) if weights is None else np.asarray(weights, dtype=float)
    return float(math.atan2(np.sum(w * np.sin(a)), np.sum(w * np.cos(a))))


def fit_bubble(state, mesh=None, window: float = FIT_WINDOW) -> BubbleFit:
    """Least-squares fit of ``theta ~ 2 arctan(r / R)`` near the origin.

    ``state`` is a :class:`~llgbubble.integrator.SimState` or a field (then
    ``mesh`` is required).  ``C`` is the circular mean of the azimuth over the
    fit window, weighted by ``sin(theta)`` so that nodes at the poles, where
    the azimuth is meaningless, do not count.
    """
    field_ = getattr(state, "field", state)
    mesh = getattr(state, "mesh", mesh)
    if mesh is None:
        raise TypeError("a mesh is needed to fit a bare field")
    r = mesh.nodes
    g = float(np.max(gradient_magnitude(field_, mesh)))
    if g < MIN_CORE_GRADIENT:
        raise ValueError(f"no bubble core to fit: ||grad m||_inf = {g:.3g} < {MIN_CORE_GRADIENT}")
    theta, phi = _angles(field_)

    def select(R):
        idx = np.nonzero(r <= window * R)[0]
        return idx if idx.size >= 4 else np.arange(min(4, r.size))

    def residuals(x, idx):
        return theta[idx] - 2.0 * np.arctan(r[idx] / math.exp(x[0]))

    R = 2.0 / g
    for _ in range(3):
        idx = select(R)
        sol = least_squares(residuals, [math.log(R)], args=(idx,), x_scale=1.0, xtol=1e-14, ftol=1e-14, gtol=1e-14)
        R_new = math.exp(sol.x[0])
        converged = abs(R_new / R - 1.0) < 1e-10
        R = R_new
        if converged:
            break
    idx = select(R)
    res = float(np.max(np.abs(residuals([math.log(R)], idx)))) / math.pi
    if res > FIT_MAX_RESIDUAL:
        raise BubbleFitError(f"profile is not a bubble: sup residual {res:.3f} > {FIT_MAX_RESIDUAL}")
    w = np.abs(np.sin(theta[idx]))
    C = circular_mean(phi[idx], w) if np.any(w > 1e-12) else float(phi[idx][-1])
    return BubbleFit(R, C, res)


def profile_error(state, fit: BubbleFit, xi_max: float = 10.0) -> float:
    """``sup |theta(xi R) - 2 arctan(xi)|`` over ``xi in [0, xi_max]`` (relative to pi)."""
    theta, _ = _angles(state.field)
    r = state.mesh.nodes
    sel = r <= xi_max * fit.R
    xi = r[sel] / fit.R
    return float(np.max(np.abs(theta[sel] - 2.0 * np.arctan(xi)))) / math.pi


def _log_model(name, tau):
    """``log R - log kappa`` for the three rate laws; ``tau = T - t``."""
    if name == "log":
        return np.log(tau) - 2.0 * np.log(np.abs(np.log(tau)))
    if name == "sqrt":
        return 0.5 * np.log(tau)
    if name == "linear":
        return np.log(tau)
    raise ValueError(name)


def _fit_law(t, logR, name):
    """Best ``(kappa, T, rms)`` for one law; ``log kappa`` is solved in closed form."""
    t_hi = float(t[-1])
    span = float(t[-1] - t[0])

    def rms(u):
        tau = (t_hi - t) + math.exp(u)
        if name == "log" and np.any(tau >= 1.0):
            return math.inf
        d = logR - _log_model(name, tau)
        return float(np.sqrt(np.mean((d - d.mean()) ** 2)))

    lo, hi = math.log(max(span, 1e-300) * 1e-12), math.log(max(span, 1e-300) * 1e3)
    grid = np.linspace(lo, hi, 241)
    vals = np.array([rms(u) for u in grid])
    k = int(np.argmin(vals))
    a, b = grid[max(k - 1, 0)], grid[min(k + 1, grid.size - 1)]
    best = minimize_scalar(rms, bounds=(a, b), method="bounded", options={"xatol": 1e-10})
    u = best.x if best.fun <= vals[k] else grid[k]
    tau = (t_hi - t) + math.exp(u)
    kappa = math.exp(float(np.mean(logR - _log_model(name, tau))))
    return kappa, t_hi + math.exp(u), rms(u)


def fit_rate(t, R, window: float | None = RATE_WINDOW, min_samples: int = 20) -> RateFit:
    """Fit ``R = kappa (T - t) / |ln(T - t)|^2`` to the trailing part of a series.

    The trailing window holds samples with ``R <= window * R[0]`` (all samples
    if ``window`` is None or too few qualify).  Residuals are RMS deviations in
    ``log R``.  The same fit with ``kappa sqrt(T - t)`` and ``kappa (T - t)``
    is reported in ``alternatives``.
    """
    t = np.asarray(t, dtype=float)
    R = np.asarray(R, dtype=float)
    ok = np.isfinite(t) & np.isfinite(R) & (R > 0)
    t, R = t[ok], R[ok]
    if t.size < min_samples:
        raise RateFitError(f"need >= {min_samples} samples, got {t.size}")
    if np.log10(R.max() / R.min()) < 2.0:
        raise RateFitError("R spans less than two decades")
    if np.any(np.diff(t) <= 0):
        raise RateFitError("times must increase")
    if np.any(np.diff(R) > 1e-3 * R[:-1]):
        raise RateFitError("R is not monotonically decreasing")
    if window is not None:
        sel = R <= window * R[0]
        if sel.sum() >= min_samples:
            t, R = t[sel], R[sel]
    logR = np.log(R)
    kappa, T, res = _fit_law(t, logR, "log")
    alts = {}
    for name in ("sqrt", "linear"):
        k2, T2, r2 = _fit_law(t, logR, name)
        alts[name] = {"kappa": k2, "T": T2, "residual": r2}
    return RateFit(kappa, T, (float(t[0]), float(t[-1])), res, alts)


def relative_azimuth(field_, mesh=None) -> float:
    """Azimuth of the core minus azimuth of the outer profile, in ``(-pi, pi]``.

    The core is ``r`` up to where ``theta`` first reaches half its maximum,
    the outer part is everything beyond the maximum; both azimuths are
    circular means weighted by ``sin(theta)``.  The difference is invariant
    under rotations about the pole axis.  ``nan`` when the field is
    numerically constant.
    """
    field_ = getattr(field_, "field", field_)
    theta, phi = _angles(field_)
    k = int(np.argmax(theta))
    if theta[k] < 1e-10:
        return math.nan
    h = int(np.nonzero(theta >= 0.5 * theta[k])[0][0])
    w = np.abs(np.sin(theta))
    if not (np.any(w[: h + 1] > 0) and np.any(w[k:] > 0)):
        return math.nan
    return wrap(circular_mean(phi[: h + 1], w[: h + 1]) - circular_mean(phi[k:], w[k:]))


def rotation_episode(trajectory):
    """Unwrapped relative azimuth (core minus outer) along the trajectory.

    Returns ``(t, C, gaps)``; undefined samples are filled by linear
    interpolation of the unwrapped angle and counted in ``gaps``.
    """
    t = trajectory.column("t")
    C = trajectory.column("C_rel")
    good = np.isfinite(C)
    if good.sum() < 2:
        return t[good], C[good], int((~good).sum())
    Cu = np.unwrap(C[good])
    first, last = np.nonzero(good)[0][[0, -1]]
    t = t[first:last + 1]
    return t, np.interp(t, trajectory.column("t")[good], Cu), int((~good[first:last + 1]).sum())


def rotation_angle(trajectory, min_samples: int = 10) -> float:
    """Net rotation of the core relative to the outer profile over the run."""
    t, C, _ = rotation_episode(trajectory)
    if C.size < min_samples:
        raise ValueError(f"need >= {min_samples} samples with a defined azimuth, got {C.size}")
    return float(C[-1] - C[0])


def classify(trajectory, undetermined: float = UNDETERMINED_ROTATION) -> Outcome:
    reason = trajectory.reason
    if reason not in ("gradient-threshold", "equilibrium"):
        raise ValueError(f"cannot classify a run that ended with {reason!r}")
    evidence = {"peak_grad": trajectory.peak_grad, "reason": reason}
    if reason == "gradient-threshold":
        return Outcome("Blowup", evidence)
    try:
        dphi = rotation_angle(trajectory)
    except ValueError:
        dphi = 0.0
    evidence["rotation"] = dphi
    if abs(dphi) < undetermined:
        return Outcome("Undetermined", evidence)
    return Outcome("DecayPlus" if dphi > 0 else "DecayMinus", evidence)


def predicted_angle(params: LLGParams) -> float:
    """Angle between the bubble and the remaining solution: ``pi - arctan(alpha / beta)``."""
    if params.beta == 0:
        return 0.5 * math.pi
    return math.pi - math.atan(params.alpha / params.beta)


def wrap(angle):
    """Map to ``(-pi, pi]``."""
    a = np.mod(np.asarray(angle, dtype=float) + math.pi, 2.0 * math.pi) - math.pi
    a = np.where(a == -math.pi, math.pi, a)
    return float(a) if a.ndim == 0 else a


def outer_azimuth(state, fit: BubbleFit, r_lo: float | None = None, r_hi: float = 1.0) -> float:
    """Azimuth of the profile outside the bubble.

    Circular mean weighted by ``sin(theta)`` over ``r in [r_lo, r_hi]``; by
    default ``r_lo`` is the larger of ``FIT_WINDOW * R`` and the radius where
    ``theta`` peaks, so the bubble itself does not contribute.
    """
    theta, phi = _angles(state.field)
    r = state.mesh.nodes
    if r_lo is None:
        r_lo = max(FIT_WINDOW * fit.R, float(r[int(np.argmax(theta))]))
    sel = (r >= r_lo) & (r <= r_hi)
    w = np.abs(np.sin(theta[sel]))
    if sel.sum() < 2 or not np.any(w > 0):
        raise BubbleFitError("no outer region between the core and the far field")
    return circular_mean(phi[sel], w)


def inner_outer_angle(state, fit: BubbleFit | None = None, **kw) -> float:
    """``|wrap(phi_outer - C)|``, to be compared with :func:`predicted_angle`."""
    fit = fit or fit_bubble(state)
    return abs(wrap(outer_azimuth(state, fit, **kw) - fit.C))


def _smoothstep(x):
    x = np.clip(x, 0.0, 1.0)
    return x * x * (3.0 - 2.0 * x)


def unwrap_polar(theta, phi):
    """Continuous ``(theta, phi)`` along ``r`` from principal values.

    The same point is ``(theta, phi)``, ``(-theta, phi + pi)`` and ``2 pi``
    shifts of theta; at each node the representative closest to the previous
    node is kept, so a profile passing through a pole keeps a continuous
    polar angle instead of folding back with a jump of pi in the azimuth.
    """
    th = np.asarray(theta, dtype=float).copy()
    ph = np.asarray(phi, dtype=float).copy()
    for i in range(1, th.size):
        best = None
        for sign in (1.0, -1.0):
            base = sign * th[i]
            p = ph[i] + (0.0 if sign > 0 else math.pi)
            k = round((th[i - 1] - base) / (2.0 * math.pi))
            cand = base + 2.0 * math.pi * k
            dp = float(wrap(p - ph[i - 1]))
            cost = (cand - th[i - 1]) ** 2 + (math.sin(0.5 * (cand + th[i - 1])) * dp) ** 2
            if best is None or cost < best[0]:
                best = (cost, cand, ph[i - 1] + dp)
        _, th[i], ph[i] = best
    return th, ph


def _polar_azimuth(field_):
    if isinstance(field_, EulerField):
        return np.asarray(field_.theta, dtype=float), np.asarray(field_.phi, dtype=float)
    return unwrap_polar(*_angles(field_))


def _rebuild(state, theta, phi):
    if isinstance(state.field, EulerField):
        new_field = EulerField(theta, phi)
    else:
        new_field = project_to_sphere(MagnetizationField(euler_to_cartesian(theta, phi)))
    return replace(state, field=new_field)


def remove_bubble(state, fit: BubbleFit):
    """The profile left behind when the fitted bubble collapses: ``theta - 2 arctan(r/R) + pi``.

    This is the state at the singular instant whose energy is ``e(T)``; it sits
    at the south pole at ``r = 0``.
    """
    theta, phi = _polar_azimuth(state.field)
    r = state.mesh.nodes
    return _rebuild(state, theta - 2.0 * np.arctan(r / fit.R) + math.pi, phi)


def continue_past_blowup(state, fit: BubbleFit | None, R_new: float | None = None):
    """Re-attach a bubble of scale ``R_new`` (default ``fit.R``) with reversed orientation.

    On top of the remaining profile of :func:`remove_bubble` the polar angle
    becomes ``2 pi - 2 arctan(r / R)`` inside ``5 R``, blended back to the
    remaining profile over ``[5 R, 10 R]`` with a C^1 smoothstep weight.  The
    azimuth field is left alone: ``theta -> 2 pi - theta`` at fixed ``phi`` is
    the same point of the sphere as ``theta`` at ``phi + pi``, so the new
    bubble has Cartesian azimuth ``C + pi``.  Radial states keep the polar
    angle unwrapped (``theta(0) = 2 pi``).
    """
    if fit is None:
        raise ValueError("continuation needs a bubble fit")
    R = fit.R if R_new is None else R_new
    r = state.mesh.nodes
    theta, phi = _polar_azimuth(remove_bubble(state, fit).field)
    s = _smoothstep((r - 5.0 * R) / (5.0 * R))  # 0 inside, 1 outside
    theta = theta + (1.0 - s) * (math.pi - 2.0 * np.arctan(r / R))
    return _rebuild(state, theta, phi)


@dataclass(frozen=True)
class RenormalizedEnergy:
    t: np.ndarray
    e_bar: np.ndarray
    jump: float
    monotone: bool
    passed: bool
    message: str


def renormalized_energy(t, e, T: float, tol: float = 1e-6) -> RenormalizedEnergy:
    """``e_bar = e`` except at the singular instant, where ``e_bar(T) = e(T) + 4 pi``.

    The series must contain a sample at ``T`` (the state with the bubble
    lost) and samples on both sides.  The report passes when ``e_bar`` is
    non-increasing up to ``tol (1 + |e_bar|)``; this requires the drop into
    ``T`` to be at least ``4 pi``.
    """
    t = np.asarray(t, dtype=float)
    e = np.asarray(e, dtype=float)
    at = np.isclose(t, T, rtol=1e-12, atol=1e-15)
    if not at.any():
        raise ValueError("the series has no sample at the singular instant T")
    if not (t < T).any() or not (t > T).any():
        raise ValueError("energy must be sampled on both sides of T")
    k = int(np.nonzero(at)[0][0])
    jump = float(e[k - 1] - e[k]) if k > 0 else math.nan
    e_bar = np.where(at, e + 4.0 * math.pi, e)
    d = np.diff(e_bar)
    monotone = bool(np.all(d <= tol * (1.0 + np.abs(e_bar[:-1]))))
    if monotone:
        msg = "renormalised energy is non-increasing"
    elif jump < 4.0 * math.pi - tol * (1.0 + abs(e[k - 1])):
        msg = f"energy drop {jump:.6g} into T is below 4 pi"
    else:
        msg = f"renormalised energy increases by up to {d.max():.3g}"
    return RenormalizedEnergy(t, e_bar, jump, monotone, monotone, msg)
