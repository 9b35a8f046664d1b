"""Hot loops: nodal right-hand sides, their banded Jacobians, gradient norms.

The pointwise formulas (``_llg_node``, ``_radial_node``) use arithmetic only,
so the very same source is called scalar-by-scalar from the numba loops and
on whole slices from the numpy fallbacks.  The public names at the bottom of
the module are bound to one backend according to :mod:`llgbubble._accel`.

Storage conventions
-------------------
* ``r``: mesh nodes, ``r[0] = 0``, ``r[-1] = 1``.
* ``m``: ``(N, 3)`` array of ``(u, v, w)``; ``theta``: ``(N,)``.
* Banded Jacobians use the LAPACK ``(l + u + 1, n)`` layout expected by
  ``scipy.linalg.solve_banded`` with the unknowns interleaved as
  ``u0, v0, w0, u1, ...``; the band half-width is 5 for the three-component
  system and 1 for the scalar one.
"""

import math

import numpy as np

from ._accel import USE_NUMBA, njit, select

LLG_BAND = 5
RADIAL_BAND = 1


def _stencil(hm, hp):
    """Three-point weights for d/dr and d2/dr2 with spacings ``hm`` (left), ``hp`` (right)."""
    s = hm + hp
    a1 = -hp / (hm * s)
    b1 = (hp - hm) / (hm * hp)
    c1 = hm / (hp * s)
    a2 = 2.0 / (hm * s)
    b2 = -2.0 / (hm * hp)
    c2 = 2.0 / (hp * s)
    return a1, b1, c1, a2, b2, c2


def _llg_node(rm, r, rp, um, vm, wm, u0, v0, w0, up, vp, wp, alpha, beta, nn):
    hm = r - rm
    hp = rp - r
    s = hm + hp
    # lap_n u = r^(n-1) d/dr[ r^(1-2n) d/dr (r^n u) ] in flux form
    hc = 0.5 * s
    rl = 0.5 * (rm + r)
    rh = 0.5 * (r + rp)
    pm = rm ** nn
    p0 = r ** nn
    pp = rp ** nn
    gl = rl ** (1.0 - 2.0 * nn) / hm
    gh = rh ** (1.0 - 2.0 * nn) / hp
    pre = r ** (nn - 1.0) / hc
    lu = pre * (gh * (pp * up - p0 * u0) - gl * (p0 * u0 - pm * um))
    lv = pre * (gh * (pp * vp - p0 * v0) - gl * (p0 * v0 - pm * vm))
    lap_w = (rh * (wp - w0) / hp - rl * (w0 - wm) / hm) / (r * hc)
    # damping term |m|^2 lap m - (m . lap m) m: equal to lap m + |grad m|^2 m on
    # the sphere, but homogeneous of degree 3, so the normal direction is
    # neutral instead of growing at rate 2 |grad m|^2
    mm = u0 * u0 + v0 * v0 + w0 * w0
    mdl = u0 * lu + v0 * lv + w0 * lap_w
    # m x lap m: the n^2/r^2 parts cancel in the w component
    ut = alpha * (v0 * lap_w - lv * w0) + beta * (mm * lu - mdl * u0)
    vt = alpha * (-u0 * lap_w + lu * w0) + beta * (mm * lv - mdl * v0)
    wt = alpha * (u0 * lv - v0 * lu) + beta * (mm * lap_w - mdl * w0)
    return ut, vt, wt


def _radial_node(rm, r, rp, tm, t0, tp):
    # theta_t = e_theta . (lap_1 sin(theta), lap cos(theta)), i.e. the polar
    # component of the three-component operator for m = (sin theta, 0, cos theta);
    # avoids the cancellation of two O(theta / r^2) terms once theta is far from 0
    # (lap_1 f)_i = ql f_{i-1} - q0 f_i + qh f_{i+1} with f = sin(theta), and
    # (lap g)_i = sl g_{i-1} - (sl + sh) g_i + sh g_{i+1} with g = cos(theta)
    hm = r - rm
    hp = rp - r
    hc = 0.5 * (hm + hp)
    rl = 0.5 * (rm + r)
    rh = 0.5 * (r + rp)
    ql = rm / (rl * hm * hc)
    qh = rp / (rh * hp * hc)
    q0 = r / (rl * hm * hc) + r / (rh * hp * hc)
    sl = rl / (hm * hc * r)
    sh = rh / (hp * hc * r)
    lu = ql * np.sin(tm) - q0 * np.sin(t0) + qh * np.sin(tp)
    lw = sl * np.cos(tm) - (sl + sh) * np.cos(t0) + sh * np.cos(tp)
    return np.cos(t0) * lu - np.sin(t0) * lw


def _radial_jac_node(rm, r, rp, tm, t0, tp):
    hm = r - rm
    hp = rp - r
    hc = 0.5 * (hm + hp)
    rl = 0.5 * (rm + r)
    rh = 0.5 * (r + rp)
    ql = rm / (rl * hm * hc)
    qh = rp / (rh * hp * hc)
    q0 = r / (rl * hm * hc) + r / (rh * hp * hc)
    sl = rl / (hm * hc * r)
    sh = rh / (hp * hc * r)
    c0 = np.cos(t0)
    s0 = np.sin(t0)
    lu = ql * np.sin(tm) - q0 * s0 + qh * np.sin(tp)
    lw = sl * np.cos(tm) - (sl + sh) * np.cos(t0) + sh * np.cos(tp)
    lo = c0 * ql * np.cos(tm) + s0 * sl * np.sin(tm)
    hi = c0 * qh * np.cos(tp) + s0 * sh * np.sin(tp)
    mid = -s0 * lu - q0 * c0 * c0 - c0 * lw - (sl + sh) * s0 * s0
    return lo, mid, hi


_llg_node_jit = njit(_llg_node)
_radial_node_jit = njit(_radial_node)
_radial_jac_node_jit = njit(_radial_jac_node)
_stencil_jit = njit(_stencil)


def _llg_pole_rate(r1, m0, m1, beta):
    # Even extension of w and odd extension of u, v across r = 0:
    # lap w(0) = 2 w_rr(0) = 4 (w1 - w0) / r1^2, |m_r(0)|^2 = (u1^2 + v1^2) / r1^2.
    # Only valid for n = 1; for n >= 2 callers freeze the pole.
    grad2 = (m1[0] * m1[0] + m1[1] * m1[1]) / (r1 * r1)
    lap_w = 4.0 * (m1[2] - m0[2]) / (r1 * r1)
    return beta * (lap_w + 2.0 * grad2 * m0[2])


# ----------------------------------------------------------------------------
# numba loops


@njit
def _llg_rhs_nb(r, m, alpha, beta, nn):
    n = r.shape[0]
    out = np.zeros((n, 3))
    for i in range(1, n - 1):
        ut, vt, wt = _llg_node_jit(r[i - 1], r[i], r[i + 1],
                                   m[i - 1, 0], m[i - 1, 1], m[i - 1, 2],
                                   m[i, 0], m[i, 1], m[i, 2],
                                   m[i + 1, 0], m[i + 1, 1], m[i + 1, 2],
                                   alpha, beta, nn)
        out[i, 0] = ut
        out[i, 1] = vt
        out[i, 2] = wt
    return out


# complex-step width: the nodal rate is a polynomial in the nine neighbouring
# values, so Im f(x + i h) / h is its derivative to rounding error
CSTEP = 1e-30


@njit
def _llg_jac_nb(r, m, alpha, beta, nn):
    """Banded d(rate)/d(m) by complex-step differentiation of the nodal formula."""
    n = r.shape[0]
    bw = 5
    ab = np.zeros((2 * bw + 1, 3 * n))
    loc = np.empty(9, dtype=np.complex128)
    for i in range(1, n - 1):
        for k in range(3):
            loc[k] = m[i - 1, k]
            loc[3 + k] = m[i, k]
            loc[6 + k] = m[i + 1, k]
        for j in range(9):
            col = 3 * (i - 1) + j
            save = loc[j]
            loc[j] = save + 1j * CSTEP
            f1 = _llg_node_jit(r[i - 1], r[i], r[i + 1], loc[0], loc[1], loc[2], loc[3], loc[4], loc[5],
                               loc[6], loc[7], loc[8], alpha, beta, nn)
            loc[j] = save
            for c in range(3):
                row = 3 * i + c
                ab[bw + row - col, col] = f1[c].imag / CSTEP
    return ab


@njit
def _radial_rhs_nb(r, theta):
    n = r.shape[0]
    out = np.zeros(n)
    for i in range(1, n - 1):
        out[i] = _radial_node_jit(r[i - 1], r[i], r[i + 1],
                                  theta[i - 1], theta[i], theta[i + 1])
    return out


@njit
def _radial_jac_nb(r, theta):
    n = r.shape[0]
    ab = np.zeros((3, n))
    for i in range(1, n - 1):
        lo, mid, hi = _radial_jac_node_jit(r[i - 1], r[i], r[i + 1],
                                           theta[i - 1], theta[i], theta[i + 1])
        ab[2, i - 1] = lo
        ab[1, i] = mid
        ab[0, i + 1] = hi
    return ab


@njit
def _gradient_nb(r, f):
    """d/dr of each column of ``f`` (shape (N, k)); pole by odd/even reflection."""
    n, k = f.shape
    out = np.empty((n, k))
    for i in range(1, n - 1):
        hm = r[i] - r[i - 1]
        hp = r[i + 1] - r[i]
        s = hm + hp
        a1 = -hp / (hm * s)
        b1 = (hp - hm) / (hm * hp)
        c1 = hm / (hp * s)
        for c in range(k):
            out[i, c] = a1 * f[i - 1, c] + b1 * f[i, c] + c1 * f[i + 1, c]
    # r = 1: second-order one-sided
    h1 = r[n - 1] - r[n - 2]
    h2 = r[n - 2] - r[n - 3]
    for c in range(k):
        out[n - 1, c] = ((2.0 * h1 + h2) / (h1 * (h1 + h2)) * f[n - 1, c]
                         - (h1 + h2) / (h1 * h2) * f[n - 2, c]
                         + h1 / (h2 * (h1 + h2)) * f[n - 3, c])
    return out


# ----------------------------------------------------------------------------
# numpy twins


def _llg_rhs_np(r, m, alpha, beta, nn):
    out = np.zeros_like(m)
    ut, vt, wt = _llg_node(r[:-2], r[1:-1], r[2:],
                           m[:-2, 0], m[:-2, 1], m[:-2, 2],
                           m[1:-1, 0], m[1:-1, 1], m[1:-1, 2],
                           m[2:, 0], m[2:, 1], m[2:, 2], alpha, beta, nn)
    out[1:-1, 0] = ut
    out[1:-1, 1] = vt
    out[1:-1, 2] = wt
    return out


def _llg_jac_np(r, m, alpha, beta, nn):
    n = r.shape[0]
    bw = LLG_BAND
    ab = np.zeros((2 * bw + 1, 3 * n))
    mc = m.astype(complex)
    loc = [mc[:-2, 0], mc[:-2, 1], mc[:-2, 2], mc[1:-1, 0], mc[1:-1, 1], mc[1:-1, 2],
           mc[2:, 0], mc[2:, 1], mc[2:, 2]]
    rows0 = 3 * np.arange(1, n - 1)
    for j in range(9):
        pert = list(loc)
        pert[j] = loc[j] + 1j * CSTEP
        f1 = _llg_node(r[:-2], r[1:-1], r[2:], *pert, alpha, beta, nn)
        cols = 3 * np.arange(0, n - 2) + j
        for c in range(3):
            ab[bw + rows0 + c - cols, cols] = f1[c].imag / CSTEP
    return ab


def _radial_rhs_np(r, theta):
    out = np.zeros_like(theta)
    out[1:-1] = _radial_node(r[:-2], r[1:-1], r[2:],
                             theta[:-2], theta[1:-1], theta[2:])
    return out


def _radial_jac_np(r, theta):
    n = r.shape[0]
    ab = np.zeros((3, n))
    lo, mid, hi = _radial_jac_node(r[:-2], r[1:-1], r[2:], theta[:-2], theta[1:-1], theta[2:])
    ab[2, :-2] = lo
    ab[1, 1:-1] = mid
    ab[0, 2:] = hi
    return ab


def _gradient_np(r, f):
    out = np.empty_like(f)
    a1, b1, c1, _, _, _ = _stencil(r[1:-1] - r[:-2], r[2:] - r[1:-1])
    out[1:-1] = a1[:, None] * f[:-2] + b1[:, None] * f[1:-1] + c1[:, None] * f[2:]
    h1 = r[-1] - r[-2]
    h2 = r[-2] - r[-3]
    out[-1] = ((2 * h1 + h2) / (h1 * (h1 + h2)) * f[-1] - (h1 + h2) / (h1 * h2) * f[-2]
               + h1 / (h2 * (h1 + h2)) * f[-3])
    return out


# ----------------------------------------------------------------------------
# backend-independent wrappers


def _with_pole(grad_fn):
    def gradient(r, f, parity):
        """Column-wise d/dr; ``parity[c]`` is +1 for even and -1 for odd columns at r = 0."""
        f = np.ascontiguousarray(f, dtype=float)
        squeeze = f.ndim == 1
        f2 = f[:, None] if squeeze else f
        out = grad_fn(np.ascontiguousarray(r, dtype=float), f2)
        par = np.broadcast_to(np.asarray(parity, dtype=float), (f2.shape[1],))
        # central difference with the reflected ghost: f(-r1) = -f(r1) (odd), = f(r1) (even)
        out[0] = np.where(par < 0, f2[1] / r[1], 0.0)
        return out[:, 0] if squeeze else out
    return gradient


def backend(use_numba=None):
    """Namespace of kernels for the requested backend (default: env selection)."""
    nb = USE_NUMBA if use_numba is None else use_numba

    class _K:
        llg_rhs = staticmethod(select(_llg_rhs_nb, _llg_rhs_np, nb))
        llg_jac = staticmethod(select(_llg_jac_nb, _llg_jac_np, nb))
        radial_rhs = staticmethod(select(_radial_rhs_nb, _radial_rhs_np, nb))
        radial_jac = staticmethod(select(_radial_jac_nb, _radial_jac_np, nb))
        gradient = staticmethod(_with_pole(select(_gradient_nb, _gradient_np, nb)))
        name = "numba" if nb else "numpy"

    return _K


K = backend()
llg_rhs = K.llg_rhs
llg_jac = K.llg_jac
radial_rhs = K.radial_rhs
radial_jac = K.radial_jac
gradient = K.gradient
pole_rate = _llg_pole_rate
