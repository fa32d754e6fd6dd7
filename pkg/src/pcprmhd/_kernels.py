"""Compiled scalar kernels for the pressure-recovery equation.

Every state is described by five invariants of the conservative vector:
``D``, ``mm = |m|^2``, ``b = |B|^2``, ``s = (m.B)^2`` and ``E``.
"""

from __future__ import annotations

import math
import os

import numba
import numpy as np
from numba import njit, prange

# the bundled TBB is too old for numba; skip probing it unless asked to
if "NUMBA_THREADING_LAYER" not in os.environ:
    numba.config.THREADING_LAYER = "omp"

_TINY_B2 = 1e-300
_REL_STOP = 4.0e-16
_MAX_ITER = 500

STATUS_OK = 0
STATUS_BAD_INPUT = 1
STATUS_NO_CONVERGENCE = 2


@njit(cache=True, nogil=True)
def f_omega(xi, mm, b, s):
    t = xi + b
    return xi * xi * t * t - (xi * xi * mm + (2.0 * xi + b) * s)


@njit(cache=True, nogil=True)
def _d_f_omega(xi, mm, b, s):
    t = xi + b
    return 2.0 * xi * t * t + 2.0 * xi * xi * t - 2.0 * xi * mm - 2.0 * s


@njit(cache=True, nogil=True)
def f_quartic(xi, D, mm, b, s):
    t = xi + b
    return f_omega(xi, mm, b, s) - D * D * t * t


@njit(cache=True, nogil=True)
def _d_f_quartic(xi, D, mm, b, s):
    return _d_f_omega(xi, mm, b, s) - 2.0 * D * D * (xi + b)


@njit(cache=True, nogil=True)
def f_cubic(xi, D, b, s, E):
    return xi * xi * (xi + b - E) - 0.5 * (b * D * D + s)


@njit(cache=True, nogil=True)
def _d_f_cubic(xi, D, b, s, E):
    return 3.0 * xi * xi + 2.0 * (b - E) * xi


@njit(cache=True, nogil=True)
def inv_lorentz_sq(xi, mm, b, s):
    """Return 1/W(xi)^2, which may be nonpositive outside the valid region."""
    t = xi + b
    return 1.0 - (xi * xi * mm + (2.0 * xi + b) * s) / (xi * xi * t * t)


@njit(cache=True, nogil=True)
def f_recovery(xi, D, mm, b, s, E, g):
    """Recovery function and its derivative; ``g`` is (gamma-1)/gamma."""
    iw2 = inv_lorentz_sq(xi, mm, b, s)
    if iw2 <= 0.0:
        return np.nan, np.nan
    iw = math.sqrt(iw2)
    f = xi - g * (xi * iw2 - D * iw) + b - 0.5 * (b * iw2 + s / (xi * xi)) - E
    t = xi + b
    xi3 = xi * xi * xi
    # W'/W^3, independent of W itself
    dwr = -(s * (3.0 * xi * xi + 3.0 * xi * b + b * b) + mm * xi3) / (xi3 * t * t * t)
    df = 1.0 + b * dwr + s / xi3 - g * (iw2 - 2.0 * xi * dwr + D * dwr / iw)
    return f, df


@njit(cache=True, nogil=True)
def _newton_bisect_poly(kind, lo, hi, D, mm, b, s, E):
    """Safeguarded Newton for an increasing polynomial on [lo, hi].

    ``kind`` selects 0: f_omega, 1: f_quartic, 2: f_cubic.
    """
    if hi < lo:
        hi = lo
    x = 0.5 * (lo + hi)
    for _ in range(_MAX_ITER):
        if kind == 0:
            f = f_omega(x, mm, b, s)
            df = _d_f_omega(x, mm, b, s)
        elif kind == 1:
            f = f_quartic(x, D, mm, b, s)
            df = _d_f_quartic(x, D, mm, b, s)
        else:
            f = f_cubic(x, D, b, s, E)
            df = _d_f_cubic(x, D, b, s, E)
        if f == 0.0:
            return x
        if f < 0.0:
            lo = x
        else:
            hi = x
        if hi - lo <= _REL_STOP * hi:
            return 0.5 * (lo + hi)
        xn = x - f / df if df > 0.0 else 0.5 * (lo + hi)
        if not (lo < xn < hi):
            xn = 0.5 * (lo + hi)
        if abs(xn - x) <= _REL_STOP * abs(x):
            return xn
        x = xn
    return x


@njit(cache=True, nogil=True)
def root_omega(mm, b, s):
    """Largest nonnegative root of f_omega."""
    if b < _TINY_B2:
        return math.sqrt(mm)
    if s == 0.0:
        return max(0.0, math.sqrt(mm) - b)
    zeta0 = math.sqrt(s / b)
    return _newton_bisect_poly(0, zeta0, math.sqrt(mm), 0.0, mm, b, s, 0.0)


@njit(cache=True, nogil=True)
def root_quartic(D, mm, b, s):
    """Unique positive root of f_quartic, bracketed by [sqrt(D^2+s/b), sqrt(D^2+mm)]."""
    upper = math.sqrt(D * D + mm)
    if b < _TINY_B2:
        return upper
    lower = math.sqrt(D * D + s / b)
    return _newton_bisect_poly(1, min(lower, upper), upper, D, mm, b, s, 0.0)


@njit(cache=True, nogil=True)
def root_cubic(D, b, s, E):
    """Unique positive root of f_cubic, bracketed by [a, a + (K/2)^(1/3)], a = max(0, E-b)."""
    if b < _TINY_B2:
        return E
    a = max(0.0, E - b)
    k = 0.5 * (b * D * D + s)
    return _newton_bisect_poly(2, a, a + k ** (1.0 / 3.0), D, 0.0, b, s, E)


@njit(cache=True, nogil=True)
def solve_recovery(D, mm, b, s, E, gamma, lo, hi):
    """Root of the increasing recovery function on (lo, hi].

    Returns the root and the residual there.  When f(lo) >= 0 the state is on
    the zero-pressure boundary to within rounding and ``lo`` is returned.
    """
    g = (gamma - 1.0) / gamma
    flo, _ = f_recovery(lo, D, mm, b, s, E, g)
    if not flo < 0.0:
        return lo, flo
    fhi, _ = f_recovery(hi, D, mm, b, s, E, g)
    grow = 0
    while fhi <= 0.0 and grow < 200:
        lo = hi
        hi = 2.0 * hi
        fhi, _ = f_recovery(hi, D, mm, b, s, E, g)
        grow += 1
    x = hi
    fx = fhi
    for _ in range(_MAX_ITER):
        fx, dfx = f_recovery(x, D, mm, b, s, E, g)
        if fx == 0.0:
            return x, 0.0
        if fx < 0.0:
            lo = x
        else:
            hi = x
        if hi - lo <= _REL_STOP * hi:
            break
        xn = x - fx / dfx if dfx > 0.0 else 0.5 * (lo + hi)
        if not (lo < xn < hi):
            xn = 0.5 * (lo + hi)
        if abs(xn - x) <= _REL_STOP * x:
            x = xn
            fx, _ = f_recovery(x, D, mm, b, s, E, g)
            break
        x = xn
    return x, fx


@njit(cache=True, nogil=True)
def recover_one(u, gamma, omega_bracket, out):
    """Recover primitives of one state into ``out``; returns (xi, status).

    With ``omega_bracket`` the lower end of the bracket is the edge of the
    valid region instead of the quartic root, which lets states with negative
    pressure be inverted (used by the separating-direction search).
    """
    D = u[0]
    m1, m2, m3 = u[1], u[2], u[3]
    B1, B2, B3 = u[4], u[5], u[6]
    E = u[7]
    for k in range(8):
        if not math.isfinite(u[k]):
            return np.nan, STATUS_BAD_INPUT
    mm = m1 * m1 + m2 * m2 + m3 * m3
    b = B1 * B1 + B2 * B2 + B3 * B3
    mb = m1 * B1 + m2 * B2 + m3 * B3
    s = mb * mb
    if D <= 0.0 or E - math.sqrt(D * D + mm) <= 0.0:
        return np.nan, STATUS_BAD_INPUT
    x_om = root_omega(mm, b, s)
    x_om_safe = x_om * (1.0 + 1e-15)
    if x_om_safe <= 0.0:
        x_om_safe = 1e-300
    if omega_bracket:
        lo = x_om_safe
        g = (gamma - 1.0) / gamma
        f0, _ = f_recovery(lo, D, mm, b, s, E, g)
        k = 0
        while not (f0 == f0) and k < 60:
            # rounding left the point outside the valid region; nudge it up
            lo = lo * (1.0 + 1e-14) + 1e-300
            f0, _ = f_recovery(lo, D, mm, b, s, E, g)
            k += 1
    else:
        lo = max(root_quartic(D, mm, b, s), x_om_safe)
    hi = max(gamma * E, lo)
    xi, res = solve_recovery(D, mm, b, s, E, gamma, lo, hi)
    iw2 = inv_lorentz_sq(xi, mm, b, s)
    iw = math.sqrt(max(iw2, 0.0))
    t = xi + b
    coef = mb / xi
    out[0] = D * iw
    out[1] = (m1 + coef * B1) / t
    out[2] = (m2 + coef * B2) / t
    out[3] = (m3 + coef * B3) / t
    out[4] = B1
    out[5] = B2
    out[6] = B3
    out[7] = (gamma - 1.0) / gamma * (xi * iw2 - D * iw)
    if not (abs(res) <= 1e-12 * max(1.0, E)):
        return xi, STATUS_NO_CONVERGENCE
    return xi, STATUS_OK


@njit(cache=True, nogil=True)
def recover_batch(U, gamma, omega_bracket):
    """Recover every row of the ``(n, 8)`` array ``U``."""
    n = U.shape[0]
    prim = np.empty((n, 8))
    xi = np.empty(n)
    status = np.empty(n, dtype=np.int64)
    for i in range(n):
        x, st = recover_one(U[i], gamma, omega_bracket, prim[i])
        xi[i] = x
        status[i] = st
    return prim, xi, status


@njit(cache=True, nogil=True, parallel=True)
def recover_batch_parallel(U, gamma, omega_bracket):
    """Threaded variant of :func:`recover_batch`; rows are independent."""
    n = U.shape[0]
    prim = np.empty((n, 8))
    xi = np.empty(n)
    status = np.empty(n, dtype=np.int64)
    for i in prange(n):
        x, st = recover_one(U[i], gamma, omega_bracket, prim[i])
        xi[i] = x
        status[i] = st
    return prim, xi, status


@njit(cache=True, nogil=True)
def aux_roots_batch(U):
    """Roots xi_Omega, xi_4 and xi_3 for every row of ``U``."""
    n = U.shape[0]
    out = np.empty((n, 3))
    for i in range(n):
        u = U[i]
        D = u[0]
        mm = u[1] * u[1] + u[2] * u[2] + u[3] * u[3]
        b = u[4] * u[4] + u[5] * u[5] + u[6] * u[6]
        mb = u[1] * u[4] + u[2] * u[5] + u[3] * u[6]
        s = mb * mb
        out[i, 0] = root_omega(mm, b, s)
        out[i, 1] = root_quartic(D, mm, b, s)
        out[i, 2] = root_cubic(D, b, s, u[7])
    return out


@njit(cache=True, nogil=True)
def f_recovery_grid(U, xis, gamma):
    """Recovery function and derivative at ``xis[i, k]`` for state ``U[i]``."""
    n, k = xis.shape
    f = np.empty((n, k))
    df = np.empty((n, k))
    g = (gamma - 1.0) / gamma
    for i in range(n):
        u = U[i]
        D = u[0]
        mm = u[1] * u[1] + u[2] * u[2] + u[3] * u[3]
        b = u[4] * u[4] + u[5] * u[5] + u[6] * u[6]
        mb = u[1] * u[4] + u[2] * u[5] + u[3] * u[6]
        for j in range(k):
            f[i, j], df[i, j] = f_recovery(xis[i, j], D, mm, b, mb * mb, u[7], g)
    return f, df
