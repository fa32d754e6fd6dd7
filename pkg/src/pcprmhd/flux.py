"""Physical fluxes, the Lax-Friedrichs numerical flux and edge-normal fluxes."""

from __future__ import annotations

import math
from typing import Literal

import numpy as np

from .errors import NotAdmissible, NotUnitNormal
from .state import SL_B, SL_M, Eos, _as_states, admissible_mask, recover_array

Axis = Literal[1, 2, 3]

#: Signal-speed bound used as LxF dissipation coefficient (speed of light).
SPECTRAL_BOUND = 1.0


def _check_axis(axis: int) -> int:
    if axis not in (1, 2, 3):
        raise ValueError(f"axis must be 1, 2 or 3, got {axis}")
    return axis - 1


def flux_from_primitive(U, P, gamma: float, axis: int) -> np.ndarray:
    """Flux in direction ``axis`` given a state and its primitive variables.

    ``U`` supplies ``D`` and ``m`` so that the mass and energy fluxes are the
    exact state components; ``P`` supplies velocity, field and pressure.
    """
    i = _check_axis(axis)
    U = np.asarray(U, dtype=float)
    P = np.asarray(P, dtype=float)
    v = P[..., SL_M]
    B = P[..., SL_B]
    p = P[..., 7]
    iw2 = 1.0 - np.einsum("...k,...k->...", v, v)
    vb = np.einsum("...k,...k->...", v, B)
    b = np.einsum("...k,...k->...", B, B)
    ptot = p + 0.5 * (b * iw2 + vb * vb)
    vi = v[..., i]
    Bi = B[..., i]
    F = np.empty(np.broadcast_shapes(U.shape, P.shape))
    F[..., 0] = U[..., 0] * vi
    F[..., SL_M] = vi[..., None] * U[..., SL_M] - Bi[..., None] * (iw2[..., None] * B + vb[..., None] * v)
    F[..., 1 + i] += ptot
    F[..., SL_B] = vi[..., None] * B - Bi[..., None] * v
    F[..., 7] = U[..., 1 + i]
    return F


def recover_checked(U, eos: Eos) -> np.ndarray:
    """Primitive variables of admissible states, raising on any failure.

    Raises:
        NotAdmissible: If a state is inadmissible or cannot be inverted.
    """
    U = _as_states(U)
    ok = admissible_mask(U)
    prim, _, status = recover_array(U, eos.gamma)
    bad = ~ok | (status != 0) | ~(prim[..., 7] > 0.0)
    if np.any(bad):
        idx = np.argwhere(np.atleast_1d(bad))
        raise NotAdmissible(f"{len(idx)} state(s) not admissible or not invertible", indices=idx)
    return prim


def physical_flux(U, eos: Eos, axis: int) -> np.ndarray:
    """Physical flux ``F_axis(U)`` of admissible state(s).

    Raises:
        NotAdmissible: Propagated from the primitive recovery.
    """
    U = _as_states(U)
    return flux_from_primitive(U, recover_checked(U, eos), eos.gamma, axis)


def lf_average(U_minus, U_plus, F_minus, F_plus, rho_spectral: float = SPECTRAL_BOUND):
    """``(F- + F+ - rho (U+ - U-)) / 2`` from precomputed fluxes."""
    return 0.5 * (F_minus + F_plus - rho_spectral * (U_plus - U_minus))


def lax_friedrichs_flux(U_minus, U_plus, rho_spectral: float, eos: Eos, axis: int) -> np.ndarray:
    """Lax-Friedrichs numerical flux between the traces ``U_minus`` and ``U_plus``.

    Args:
        rho_spectral: Dissipation coefficient, at least the speed of light.
    """
    if not rho_spectral >= SPECTRAL_BOUND:
        raise ValueError("the dissipation coefficient must be at least 1")
    Fm = physical_flux(U_minus, eos, axis)
    Fp = physical_flux(U_plus, eos, axis)
    return lf_average(_as_states(U_minus), _as_states(U_plus), Fm, Fp, rho_spectral)


def normal_rotation(normal) -> np.ndarray:
    """Orthogonal matrix mapping the unit normal ``(N1, N2)`` onto the x-axis."""
    n1, n2 = (float(c) for c in normal)
    if abs(n1 * n1 + n2 * n2 - 1.0) > 1e-12:
        raise NotUnitNormal(f"normal {normal} is not a unit vector")
    return np.array([[n1, n2, 0.0], [-n2, n1, 0.0], [0.0, 0.0, 1.0]])


def rotated_flux(U, eos: Eos, normal, *, via_rotation: bool = False) -> np.ndarray:
    """Flux through an edge with unit normal ``(N1, N2)``.

    By default returns ``N1 F1 + N2 F2``.  With ``via_rotation`` the flux is
    evaluated in the frame aligned with the normal and rotated back, which is
    the same quantity by rotational invariance.
    """
    T = normal_rotation(normal)
    U = _as_states(U)
    prim = recover_checked(U, eos)
    if not via_rotation:
        n1, n2 = T[0, 0], T[0, 1]
        return n1 * flux_from_primitive(U, prim, eos.gamma, 1) + n2 * flux_from_primitive(
            U, prim, eos.gamma, 2
        )
    Ur = U.copy()
    Pr = prim.copy()
    for arr in (Ur, Pr):
        arr[..., SL_M] = arr[..., SL_M] @ T.T
        arr[..., SL_B] = arr[..., SL_B] @ T.T
    Fr = flux_from_primitive(Ur, Pr, eos.gamma, 1)
    Fr[..., SL_M] = Fr[..., SL_M] @ T
    Fr[..., SL_B] = Fr[..., SL_B] @ T
    return Fr


def unit_normal(angle: float) -> tuple[float, float]:
    """Unit vector at ``angle`` radians from the x-axis."""
    return math.cos(angle), math.sin(angle)
