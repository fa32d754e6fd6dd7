"""State vectors, equation of state, admissibility predicates and recovery.

Conservative states are plain ``numpy`` arrays whose last axis has length 8 and
holds ``(D, m1, m2, m3, B1, B2, B3, E)``.  Primitive arrays use the same layout
for ``(rho, v1, v2, v3, B1, B2, B3, p)``.  Every array-valued function below
broadcasts over leading axes, so a whole grid can be checked in one call.
"""

from __future__ import annotations

import enum
import logging
import math
from dataclasses import dataclass
from typing import NamedTuple

import numpy as np

from . import _kernels, parallel
from .errors import (
    InvalidDirection,
    InvalidPrimitive,
    NoConvergence,
    NonpositiveScale,
    NotAdmissible,
    NotOrthogonal,
    OutsideDomain,
    PreconditionViolated,
)

logger = logging.getLogger(__name__)

NVAR = 8
IDX_D = 0
SL_M = slice(1, 4)
SL_B = slice(4, 7)
IDX_E = 7
_TINY_B2 = 1e-300
_PARALLEL_MIN_ROWS = 4096


@dataclass(frozen=True)
class Eos:
    """Gamma-law equation of state ``p = (gamma - 1) rho e``.

    Attributes:
        gamma: Adiabatic index in (1, 2].
    """

    gamma: float = 5.0 / 3.0

    def __post_init__(self) -> None:
        g = float(self.gamma)
        if not (1.0 < g <= 2.0):
            raise ValueError(f"adiabatic index must lie in (1, 2], got {self.gamma}")
        object.__setattr__(self, "gamma", g)

    def enthalpy(self, rho, p):
        """Specific enthalpy ``h = 1 + e + p/rho``."""
        return 1.0 + self.gamma / (self.gamma - 1.0) * np.asarray(p) / np.asarray(rho)


@dataclass(frozen=True)
class PrimitiveState:
    """A single validated primitive state.

    Attributes:
        rho: Rest-mass density, positive.
        v: Fluid velocity in units of the speed of light, ``|v| < 1``.
        B: Magnetic field.
        p: Gas pressure, positive.
    """

    rho: float
    v: tuple[float, float, float]
    B: tuple[float, float, float]
    p: float

    def __post_init__(self) -> None:
        v = tuple(float(c) for c in self.v)
        B = tuple(float(c) for c in self.B)
        if len(v) != 3 or len(B) != 3:
            raise InvalidPrimitive("velocity and magnetic field must be 3-vectors")
        object.__setattr__(self, "v", v)
        object.__setattr__(self, "B", B)
        object.__setattr__(self, "rho", float(self.rho))
        object.__setattr__(self, "p", float(self.p))
        _validate_primitive_array(self.as_array())

    @classmethod
    def from_array(cls, arr) -> PrimitiveState:
        a = np.asarray(arr, dtype=float)
        return cls(a[0], tuple(a[1:4]), tuple(a[4:7]), a[7])

    def as_array(self) -> np.ndarray:
        return np.array([self.rho, *self.v, *self.B, self.p])

    @property
    def lorentz(self) -> float:
        return 1.0 / math.sqrt(1.0 - sum(c * c for c in self.v))

    @property
    def magnetic_pressure(self) -> float:
        v2 = sum(c * c for c in self.v)
        b2 = sum(c * c for c in self.B)
        vb = sum(a * b for a, b in zip(self.v, self.B))
        return 0.5 * (b2 * (1.0 - v2) + vb * vb)

    @property
    def total_pressure(self) -> float:
        return self.p + self.magnetic_pressure


class AdmissibilityReport(NamedTuple):
    """Values of the three constraints defining the admissible set.

    ``psi_value`` is NaN when ``q_value <= 0``; the signs of ``q_hat`` and
    ``q_tilde`` are reported in that case instead.
    """

    d_positive: bool
    q_value: float
    psi_value: float
    admissible: bool
    q_hat: float
    q_tilde: float


class AuxRoots(NamedTuple):
    xi_omega: float
    xi_4: float
    xi_3: float
    xi_2r: float


class AuxPoly(str, enum.Enum):
    """Names of the auxiliary polynomials used in the admissibility theory."""

    OMEGA = "Omega"
    QUARTIC4 = "Quartic4"
    CUBIC3 = "Cubic3"
    QUAD2 = "Quad2"


def conserved_state(D, m, B, E) -> np.ndarray:
    """Pack ``(D, m, B, E)`` into an 8-vector."""
    return np.array([D, *m, *B, E], dtype=float)


def _as_states(U) -> np.ndarray:
    arr = np.asarray(U, dtype=float)
    if arr.shape[-1:] != (NVAR,):
        raise ValueError(f"state arrays need a trailing axis of length 8, got {arr.shape}")
    return arr


def _invariants(U: np.ndarray):
    D = U[..., IDX_D]
    m = U[..., SL_M]
    B = U[..., SL_B]
    E = U[..., IDX_E]
    mm = np.einsum("...i,...i->...", m, m)
    b = np.einsum("...i,...i->...", B, B)
    mb = np.einsum("...i,...i->...", m, B)
    return D, mm, b, mb, E


def _validate_primitive_array(P: np.ndarray) -> None:
    v2 = np.einsum("...i,...i->...", P[..., SL_M], P[..., SL_M])
    bad = ~(P[..., 0] > 0.0) | ~(P[..., 7] > 0.0) | ~(v2 < 1.0) | ~np.all(np.isfinite(P), axis=-1)
    if np.any(bad):
        where = np.argwhere(np.atleast_1d(bad))
        raise InvalidPrimitive(
            f"primitive state needs rho > 0, p > 0 and |v| < 1; {len(where)} offending entries"
        )


def prim_to_cons_array(P, gamma: float) -> np.ndarray:
    """Unchecked primitive-to-conservative map on ``(..., 8)`` arrays."""
    P = _as_states(P)
    rho = P[..., 0]
    v = P[..., SL_M]
    B = P[..., SL_B]
    p = P[..., 7]
    v2 = np.einsum("...i,...i->...", v, v)
    iw2 = 1.0 - v2
    b = np.einsum("...i,...i->...", B, B)
    vb = np.einsum("...i,...i->...", v, B)
    rhohw2 = (rho + gamma / (gamma - 1.0) * p) / iw2
    pm = 0.5 * (b * iw2 + vb * vb)
    U = np.empty(P.shape)
    U[..., 0] = rho / np.sqrt(iw2)
    U[..., SL_M] = (rhohw2 + b)[..., None] * v - vb[..., None] * B
    U[..., SL_B] = B
    U[..., 7] = rhohw2 - p - pm + b
    return U


def primitive_to_conserved(V, eos: Eos) -> np.ndarray:
    """Map primitive variables to the conservative vector.

    Args:
        V: A :class:`PrimitiveState` or an array of shape ``(..., 8)``.
        eos: Equation of state.

    Returns:
        Conservative array with the same leading shape.

    Raises:
        InvalidPrimitive: If any entry has rho <= 0, p <= 0 or |v| >= 1.
    """
    P = V.as_array() if isinstance(V, PrimitiveState) else _as_states(V)
    _validate_primitive_array(P)
    return prim_to_cons_array(P, eos.gamma)


def q_fn(U):
    """``E - sqrt(D^2 + |m|^2)``; positive for every physical state."""
    U = _as_states(U)
    D, mm, _, _, E = _invariants(U)
    return E - np.sqrt(D * D + mm)


def _phi_psi_parts(U: np.ndarray):
    """Return ``(phi, qhat, r, k)`` with ``psi = qhat*sqrt(r) - sqrt(13.5 k)``.

    The differences that cancel near the boundary are rewritten in product
    form; entries with ``q <= 0`` come back as NaN.
    """
    D, mm, b, mb, E = _invariants(U)
    s = np.sqrt(D * D + mm)
    q = E - s
    a = E - b
    with np.errstate(invalid="ignore", divide="ignore"):
        c = np.where(q > 0.0, q * (E + s), np.nan)
        phi = np.sqrt(a * a + 3.0 * c)
        qhat = phi + 2.0 * a
        # phi + |B|^2 - E, written without cancellation when a > 0
        r = np.where(a > 0.0, 3.0 * c / (phi + a), phi - a)
        r = np.where(r < 0.0, 0.0, r)
    k = D * D * b + mb * mb
    return phi, qhat, r, k


def psi_fn(U):
    """Return ``(phi, psi)`` for states with ``q > 0``.

    Raises:
        PreconditionViolated: If ``q(U) <= 0`` for any entry.
    """
    U = _as_states(U)
    if np.any(~(q_fn(U) > 0.0)):
        raise PreconditionViolated("psi is defined only for q(U) > 0")
    phi, qhat, r, k = _phi_psi_parts(U)
    return phi, qhat * np.sqrt(r) - np.sqrt(13.5 * k)


def psi_unchecked(U):
    """Psi with NaN where ``q <= 0``; used on hot paths."""
    phi, qhat, r, k = _phi_psi_parts(_as_states(U))
    return qhat * np.sqrt(r) - np.sqrt(13.5 * k)


def psi_scale(U):
    """Magnitude of the terms whose difference forms psi.

    Used to turn rounding-level tolerances on psi into relative ones.
    """
    U = _as_states(U)
    D, mm, b, mb, E = _invariants(U)
    a = np.abs(E - b)
    c = np.abs(E * E - D * D - mm)
    phi = np.sqrt(a * a + 3.0 * c)
    return (phi + 2.0 * a) * np.sqrt(phi + a) + np.sqrt(13.5 * (D * D * b + mb * mb))


def hat_tilde_q(U):
    """Return the pair ``(q_hat, q_tilde)`` whose joint positivity is psi > 0."""
    U = _as_states(U)
    D, mm, b, mb, E = _invariants(U)
    a = E - b
    c = E * E - D * D - mm
    with np.errstate(invalid="ignore"):
        phi = np.sqrt(a * a + 3.0 * c)
    q_hat = phi + 2.0 * a
    inner = a**3 + 13.5 * (b * D * D + mb * mb) - 9.0 * c * a
    q_tilde = phi**6 - inner * inner
    return q_hat, q_tilde


def admissible_mask(U) -> np.ndarray:
    """Vectorized strict test ``D > 0, q > 0, psi > 0``."""
    U = _as_states(U)
    with np.errstate(invalid="ignore"):
        return (U[..., 0] > 0.0) & (q_fn(U) > 0.0) & (psi_unchecked(U) > 0.0)


def is_admissible_first_form(U) -> AdmissibilityReport:
    """Evaluate the explicit admissibility constraints for one state."""
    U = _as_states(U)
    if U.ndim != 1:
        raise ValueError("is_admissible_first_form takes a single state; use admissible_mask")
    d_ok = bool(U[0] > 0.0)
    q = float(q_fn(U))
    psi = float(psi_unchecked(U)) if q > 0.0 else math.nan
    qh, qt = hat_tilde_q(U)
    ok = d_ok and q > 0.0 and psi > 0.0
    return AdmissibilityReport(d_ok, q, psi, ok, float(qh), float(qt))


def shift_energy(U, eps):
    """Return ``(D, m, B, E - eps)``; ``eps`` broadcasts over leading axes."""
    out = np.array(_as_states(U), dtype=float, copy=True)
    out[..., IDX_E] = out[..., IDX_E] - eps
    return out


def default_eps_psi(U, eps: float = 1e-13):
    """Scale-aware slack for the psi constraint: ``eps * max(1, E)``."""
    return eps * np.maximum(1.0, _as_states(U)[..., IDX_E])


def eps_admissible_mask(U, eps: float, eps_psi=None) -> np.ndarray:
    """Vectorized membership in the eps-strengthened admissible set."""
    U = _as_states(U)
    eps_psi = eps if eps_psi is None else eps_psi
    with np.errstate(invalid="ignore"):
        psi_e = psi_unchecked(shift_energy(U, eps_psi))
        return (U[..., 0] >= eps) & (q_fn(U) >= eps) & (psi_e >= 0.0)


def is_admissible_eps(U, eps: float, eps_psi: float | None = None) -> bool:
    """Membership in the eps-strengthened admissible set.

    Args:
        U: Single conservative state.
        eps: Slack for the density and ``q`` constraints.
        eps_psi: Energy shift used for the psi constraint; defaults to ``eps``.
    """
    if not eps > 0.0:
        raise PreconditionViolated("eps must be positive")
    return bool(eps_admissible_mask(U, eps, eps_psi))


def second_form_margin(U, v_star, B_star):
    """``U . n* + p_m*`` for the direction pair ``(v*, B*)``.

    Broadcasts over leading axes of all three arguments.

    Raises:
        InvalidDirection: If any ``|v*| >= 1``.
    """
    U = _as_states(U)
    vs = np.asarray(v_star, dtype=float)
    bs = np.asarray(B_star, dtype=float)
    vv = np.einsum("...i,...i->...", vs, vs)
    if np.any(~(vv < 1.0)):
        raise InvalidDirection("v* must satisfy |v*| < 1")
    iw2 = 1.0 - vv
    vb = np.einsum("...i,...i->...", vs, bs)
    bb = np.einsum("...i,...i->...", bs, bs)
    nB = -(iw2[..., None] * bs + vb[..., None] * vs)
    val = (
        -np.sqrt(iw2) * U[..., 0]
        - np.einsum("...i,...i->...", U[..., SL_M], vs)
        + np.einsum("...i,...i->...", U[..., SL_B], nB)
        + U[..., IDX_E]
    )
    return val + 0.5 * (iw2 * bb + vb * vb)


def scale_state(U, lam: float) -> np.ndarray:
    """Return ``(lam D, lam m, sqrt(lam) B, lam E)``."""
    if not lam > 0.0:
        raise NonpositiveScale(f"scale must be positive, got {lam}")
    out = np.array(_as_states(U), dtype=float, copy=True)
    out[..., [0, 1, 2, 3, 7]] *= lam
    out[..., SL_B] *= math.sqrt(lam)
    return out


def rotate_state(U, T3) -> np.ndarray:
    """Apply the orthogonal matrix ``T3`` to the momentum and field blocks."""
    T = np.asarray(T3, dtype=float)
    if T.shape != (3, 3) or np.max(np.abs(T.T @ T - np.eye(3))) > 1e-12:
        raise NotOrthogonal("T3 must be a 3x3 orthogonal matrix")
    out = np.array(_as_states(U), dtype=float, copy=True)
    out[..., SL_M] = out[..., SL_M] @ T.T
    out[..., SL_B] = out[..., SL_B] @ T.T
    return out


def eval_fU(xi: float, U, eos: Eos) -> float:
    """Evaluate the pressure-recovery function at ``xi``.

    Raises:
        OutsideDomain: If ``xi <= 0`` or ``f_Omega(xi) <= 0``.
    """
    U = _as_states(U)
    D, mm, b, mb, E = (float(x) for x in _invariants(U))
    xi = float(xi)
    if not xi > 0.0 or not _kernels.f_omega(xi, mm, b, mb * mb) > 0.0:
        raise OutsideDomain(f"xi={xi} lies outside the region where W(xi) is real")
    f, _ = _kernels.f_recovery(xi, D, mm, b, mb * mb, E, (eos.gamma - 1.0) / eos.gamma)
    return float(f)


def eval_fU_derivative(xi: float, U, eos: Eos) -> float:
    """Analytic derivative of :func:`eval_fU` with respect to ``xi``."""
    U = _as_states(U)
    D, mm, b, mb, E = (float(x) for x in _invariants(U))
    if not xi > 0.0 or not _kernels.f_omega(xi, mm, b, mb * mb) > 0.0:
        raise OutsideDomain(f"xi={xi} lies outside the region where W(xi) is real")
    _, df = _kernels.f_recovery(float(xi), D, mm, b, mb * mb, E, (eos.gamma - 1.0) / eos.gamma)
    return float(df)


def eval_aux_polynomial(kind, xi, U) -> float:
    """Evaluate one of the auxiliary polynomials at ``xi``.

    Args:
        kind: An :class:`AuxPoly` member or its string value.
        xi: Evaluation point.
        U: Conservative state supplying the coefficients.
    """
    kind = AuxPoly(kind)
    U = _as_states(U)
    D, mm, b, mb, E = _invariants(U)
    s = mb * mb
    if kind is AuxPoly.OMEGA:
        return _kernels.f_omega(xi, mm, b, s)
    if kind is AuxPoly.QUARTIC4:
        return _kernels.f_quartic(xi, D, mm, b, s)
    if kind is AuxPoly.CUBIC3:
        return _kernels.f_cubic(xi, D, b, s, E)
    return 3.0 * xi * xi + 4.0 * (b - E) * xi + b * b + D * D + mm - 2.0 * b * E


def aux_roots(U) -> AuxRoots:
    """Roots of the auxiliary polynomials for one state.

    Raises:
        PreconditionViolated: If ``D <= 0`` or ``q(U) <= 0``.
    """
    U = _as_states(U)
    if not (U[0] > 0.0 and q_fn(U) > 0.0):
        raise PreconditionViolated("aux_roots needs D > 0 and q(U) > 0")
    xo, x4, x3 = _kernels.aux_roots_batch(U.reshape(1, NVAR))[0]
    phi, _, _, _ = _phi_psi_parts(U)
    x2r = (float(phi) - 2.0 * (float(U[4:7] @ U[4:7]) - float(U[7]))) / 3.0
    return AuxRoots(float(xo), float(x4), float(x3), x2r)


def recover_array(U, gamma: float, omega_bracket: bool = False):
    """Unchecked batch recovery.

    Args:
        U: Conservative array ``(..., 8)``.
        gamma: Adiabatic index.
        omega_bracket: Use the whole valid region as bracket, allowing states
            with negative pressure to be inverted.

    Returns:
        ``(prim, xi, status)`` where status is 0 on success, 1 if ``D <= 0`` or
        ``q <= 0`` and 2 if the residual tolerance was missed.
    """
    U = _as_states(U)
    flat = np.ascontiguousarray(U.reshape(-1, NVAR))
    kernel = _kernels.recover_batch
    if flat.shape[0] >= _PARALLEL_MIN_ROWS and parallel.threads() > 1:
        kernel = _kernels.recover_batch_parallel
    prim, xi, status = kernel(flat, float(gamma), bool(omega_bracket))
    lead = U.shape[:-1]
    return prim.reshape(*lead, NVAR), xi.reshape(lead), status.reshape(lead)


def recover_primitives(U, eos: Eos) -> tuple[PrimitiveState, float]:
    """Invert the conservative-to-primitive map for one admissible state.

    Returns:
        The primitive state and the root ``xi* = rho h W^2``.

    Raises:
        NotAdmissible: If ``U`` is not admissible or its pressure is below the
            resolution of its energy.
        NoConvergence: If the root residual misses ``1e-12 * max(1, E)``.
    """
    U = _as_states(U)
    report = is_admissible_first_form(U)
    if not report.admissible:
        raise NotAdmissible(f"state is not admissible: {report}")
    prim, xi, status = recover_array(U, eos.gamma)
    if int(status) == _kernels.STATUS_NO_CONVERGENCE:
        raise NoConvergence(f"recovery residual above tolerance for U={U.tolist()}")
    if not prim[7] > 0.0:
        raise NotAdmissible("recovered pressure is below the round-off resolution of E")
    return PrimitiveState.from_array(prim), float(xi)
