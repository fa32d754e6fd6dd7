"""Initial data for the benchmark problems.

Every primitive field function takes coordinate arrays and returns primitive
states of shape ``coords.shape + (8,)``.
"""

from __future__ import annotations

import math

import numpy as np

from .state import prim_to_cons_array

# Riemann problems: (left, right) primitive states on [-0.5, 0.5], jump at 0.
RIEMANN = {
    "rp1": (
        (1.0, 0.0, 0.0, 0.0, 5.0, 26.0, 26.0, 30.0),
        (1.0, 0.0, 0.0, 0.0, 5.0, 0.7, 0.7, 1.0),
    ),
    "rp2": (
        (1.0, 0.0, 0.0, 0.0, 10.0, 7.0, 7.0, 1e4),
        (1.0, 0.0, 0.0, 0.0, 10.0, 0.7, 0.7, 1e-8),
    ),
    "rp3": (
        (1.0, 0.99999, 0.0, 0.0, 100.0, 70.0, 70.0, 0.1),
        (1.0, -0.99999, 0.0, 0.0, 100.0, -70.0, -70.0, 0.1),
    ),
}

ALFVEN_AMPLITUDE = 0.99
ALFVEN_PRESSURE = 0.01
ROTOR_ALPHA = 9.95
BLAST_FIELD = 0.1


def alfven_kappa(gamma: float = 5.0 / 3.0) -> float:
    """``sqrt(1 + rho h W^2)`` for the Alfven wave background (rho = 1)."""
    w2 = 1.0 / (1.0 - ALFVEN_AMPLITUDE**2)
    h = 1.0 + gamma / (gamma - 1.0) * ALFVEN_PRESSURE
    return math.sqrt(1.0 + h * w2)


def alfven_primitives(x, t: float = 0.0, gamma: float = 5.0 / 3.0) -> np.ndarray:
    """Exact circularly polarized Alfven wave on the periodic unit interval."""
    x = np.asarray(x, dtype=float)
    kappa = alfven_kappa(gamma)
    phase = 2.0 * np.pi * (x + t / kappa)
    v2 = ALFVEN_AMPLITUDE * np.sin(phase)
    v3 = ALFVEN_AMPLITUDE * np.cos(phase)
    P = np.zeros(x.shape + (8,))
    P[..., 0] = 1.0
    P[..., 2] = v2
    P[..., 3] = v3
    P[..., 4] = 1.0
    P[..., 5] = kappa * v2
    P[..., 6] = kappa * v3
    P[..., 7] = ALFVEN_PRESSURE
    return P


def riemann_primitives(name_or_states, x) -> np.ndarray:
    """Piecewise-constant Riemann data with the jump at ``x = 0``."""
    left, right = RIEMANN[name_or_states] if isinstance(name_or_states, str) else name_or_states
    x = np.asarray(x, dtype=float)
    return np.where((x < 0.0)[..., None], np.asarray(left, float), np.asarray(right, float))


def rotor_primitives(x, y, alpha: float = ROTOR_ALPHA) -> np.ndarray:
    """Dense spinning disk of radius 0.1 with a linear taper out to 0.115."""
    x = np.asarray(x, dtype=float)
    y = np.asarray(y, dtype=float)
    r = np.hypot(x, y)
    P = np.zeros(np.broadcast_shapes(x.shape, y.shape) + (8,))
    P[..., 0] = 1.0
    P[..., 4] = 1.0
    P[..., 7] = 1.0
    inner = r < 0.1
    taper = (r >= 0.1) & (r <= 0.115)
    with np.errstate(invalid="ignore", divide="ignore"):
        delta = (0.115 - r) / 0.015
        P[..., 0] = np.where(inner, 10.0, np.where(taper, 1.0 + 9.0 * delta, 1.0))
        # the taper speed decays linearly from the disk edge value 0.1 alpha
        P[..., 1] = np.where(inner, -alpha * y, np.where(taper, -0.1 * alpha * y * delta / r, 0.0))
        P[..., 2] = np.where(inner, alpha * x, np.where(taper, 0.1 * alpha * x * delta / r, 0.0))
    return P


def blast_primitives(x, y, b_a: float = BLAST_FIELD) -> np.ndarray:
    """Cylindrical blast: hot dense core (r < 0.8), ambient gas beyond r = 1."""
    x = np.asarray(x, dtype=float)
    y = np.asarray(y, dtype=float)
    r = np.hypot(x, y)
    w = np.clip((r - 0.8) / 0.2, 0.0, 1.0)
    P = np.zeros(np.broadcast_shapes(x.shape, y.shape) + (8,))
    P[..., 0] = (1.0 - w) * 1e-2 + w * 1e-4
    P[..., 7] = (1.0 - w) * 1.0 + w * 5e-4
    P[..., 4] = b_a
    return P


def sine2d_primitives(x, y) -> np.ndarray:
    """Smooth density wave advected diagonally on the periodic unit square."""
    x = np.asarray(x, dtype=float)
    y = np.asarray(y, dtype=float)
    P = np.zeros(np.broadcast_shapes(x.shape, y.shape) + (8,))
    P[..., 0] = 1.0 + 0.99999999 * np.sin(2.0 * np.pi * (x + y))
    P[..., 1] = 0.9
    P[..., 2] = 0.2
    P[..., 4:7] = 1.0
    P[..., 7] = 0.01
    return P


def cell_averages_1d(prim_fn, x0: float, x1: float, n: int, gamma: float, order: int = 5) -> np.ndarray:
    """Gauss-Legendre cell averages of the conservative variables.

    Averaging conservative variables keeps every cell admissible because the
    admissible set is convex.
    """
    nodes, weights = np.polynomial.legendre.leggauss(order)
    dx = (x1 - x0) / n
    centers = x0 + (np.arange(n) + 0.5) * dx
    xs = centers[:, None] + 0.5 * dx * nodes[None, :]
    U = prim_to_cons_array(prim_fn(xs), gamma)
    return 0.5 * np.einsum("q,nqk->nk", weights, U)
