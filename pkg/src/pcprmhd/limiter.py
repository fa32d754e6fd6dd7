"""Positivity limiting of node values toward the cell average.

Three successive affine scalings pull every node value of a cell into the
eps-strengthened admissible set: first the density, then ``q`` (with the
magnetic field held fixed), then psi along the segment to the average.
"""

from __future__ import annotations

import logging
from dataclasses import dataclass, field

import numpy as np

from .errors import AverageNotAdmissible, PreconditionViolated
from .state import (
    NVAR,
    default_eps_psi,
    eps_admissible_mask,
    psi_unchecked,
    q_fn,
    shift_energy,
)

logger = logging.getLogger(__name__)

DEFAULT_EPS = 1e-13
THETA_TOL = 1e-12
_MAX_BISECT = 60
_QSCALE_IDX = [0, 1, 2, 3, 7]


@dataclass(frozen=True)
class CellNodeData:
    """Cell average together with its check-node values.

    Attributes:
        average: Cell mean, shape ``(8,)``.
        node_values: Node states, shape ``(k, 8)``.
        weights: Quadrature weights of the nodes; equal weights by default.
    """

    average: np.ndarray
    node_values: np.ndarray
    weights: np.ndarray | None = field(default=None)

    def __post_init__(self) -> None:
        avg = np.asarray(self.average, dtype=float).reshape(NVAR)
        nodes = np.asarray(self.node_values, dtype=float).reshape(-1, NVAR)
        w = self.weights
        w = np.full(len(nodes), 1.0 / len(nodes)) if w is None else np.asarray(w, dtype=float)
        object.__setattr__(self, "average", avg)
        object.__setattr__(self, "node_values", nodes)
        object.__setattr__(self, "weights", w)

    def weighted_mean(self) -> np.ndarray:
        return self.weights @ self.node_values


def _psi_eps(U, eps_psi) -> np.ndarray:
    with np.errstate(invalid="ignore"):
        val = psi_unchecked(shift_energy(U, eps_psi))
    return np.where(np.isnan(val), -np.inf, val)


def _largest_theta(theta: np.ndarray, nodes, avg, ok_fn) -> np.ndarray:
    """Step each rounding-violating theta down by ulps until ``ok_fn`` holds."""
    for _ in range(64):
        scaled = theta[:, None, None] * (nodes - avg[:, None, :]) + avg[:, None, :]
        bad = ~np.all(ok_fn(scaled), axis=1) & (theta > 0.0)
        if not np.any(bad):
            break
        theta = np.where(bad, np.nextafter(theta * (1.0 - 1e-15), 0.0), theta)
    return theta


def bisect_theta(average, candidate, eps_psi, tol: float = THETA_TOL) -> np.ndarray:
    """Vectorized bisection for the crossing of the psi boundary.

    Works on arrays ``average`` and ``candidate`` of shape ``(n, 8)`` and
    returns the lower bracket end, so the returned point is always on the
    admissible side.
    """
    average = np.asarray(average, dtype=float)
    candidate = np.asarray(candidate, dtype=float)
    eps_psi = np.broadcast_to(np.asarray(eps_psi, dtype=float), average.shape[:-1])
    lo = np.zeros(average.shape[:-1])
    hi = np.ones(average.shape[:-1])
    diff = candidate - average
    for _ in range(_MAX_BISECT):
        if np.all(hi - lo <= tol):
            break
        mid = 0.5 * (lo + hi)
        ok = _psi_eps(average + mid[..., None] * diff, eps_psi) >= 0.0
        lo = np.where(ok, mid, lo)
        hi = np.where(ok, hi, mid)
    return lo


def solve_theta(average, candidate, eps: float, eps_psi: float | None = None,
                tol: float = THETA_TOL) -> float:
    """Fraction of the way from ``average`` to ``candidate`` at the psi boundary.

    Raises:
        PreconditionViolated: If the average is not eps-admissible or the
            candidate is not outside the psi constraint.
    """
    avg = np.asarray(average, dtype=float)
    cand = np.asarray(candidate, dtype=float)
    eps_psi = float(default_eps_psi(avg, eps)) if eps_psi is None else eps_psi
    if not eps_admissible_mask(avg, eps, eps_psi):
        raise PreconditionViolated("average must lie in the eps-strengthened set")
    if not _psi_eps(cand, eps_psi) < 0.0:
        raise PreconditionViolated("candidate must violate the psi constraint")
    return float(bisect_theta(avg[None], cand[None], eps_psi, tol)[0])


def limit_nodes(avg, nodes, eps: float = DEFAULT_EPS, eps_psi=None):
    """Batch limiter on ``n`` cells with ``k`` nodes each.

    Args:
        avg: Cell averages, shape ``(n, 8)``; assumed eps-admissible.
        nodes: Node values, shape ``(n, k, 8)``.
        eps: Slack for density and ``q``.
        eps_psi: Energy shift for psi, per cell; defaults to ``eps * max(1, E)``.

    Returns:
        ``(limited_nodes, thetas)`` with ``thetas`` of shape ``(n, 3)``.
    """
    avg = np.asarray(avg, dtype=float)
    nodes = np.array(nodes, dtype=float, copy=True)
    n = avg.shape[0]
    eps_psi = default_eps_psi(avg, eps) if eps_psi is None else np.broadcast_to(eps_psi, (n,))
    thetas = np.ones((n, 3))

    # density
    dmin = nodes[..., 0].min(axis=1)
    need = dmin < eps
    if np.any(need):
        dbar = avg[need, 0]
        den = dbar - dmin[need]
        th = np.where(den > 0.0, (dbar - eps) / np.where(den > 0.0, den, 1.0), 0.0)
        th = np.clip(th, 0.0, 1.0)
        sub = nodes[need]
        th = _largest_theta(th, sub[..., :1], avg[need, :1], lambda x: x[..., 0] >= eps)
        sub[..., 0] = th[:, None] * (sub[..., 0] - dbar[:, None]) + dbar[:, None]
        nodes[need] = sub
        thetas[need, 0] = th

    # q, with the magnetic field untouched
    qn = q_fn(nodes)
    qmin = qn.min(axis=1)
    need = qmin < eps
    if np.any(need):
        qbar = q_fn(avg[need])
        den = qbar - qmin[need]
        th = np.where(den > 0.0, (qbar - eps) / np.where(den > 0.0, den, 1.0), 0.0)
        th = np.clip(th, 0.0, 1.0)
        sub = nodes[need]
        a = avg[need]

        def q_ok(x, sub=sub, a=a):
            y = sub.copy()
            y[..., _QSCALE_IDX] = x[..., _QSCALE_IDX]
            return q_fn(y) >= eps

        th = _largest_theta(th, sub, a, q_ok)
        sub[..., _QSCALE_IDX] = (
            th[:, None, None] * (sub[..., _QSCALE_IDX] - a[:, None, _QSCALE_IDX]) + a[:, None, _QSCALE_IDX]
        )
        nodes[need] = sub
        thetas[need, 1] = th

    # psi, scaling every component
    ep = np.broadcast_to(np.asarray(eps_psi, dtype=float)[:, None], nodes.shape[:2])
    viol = _psi_eps(nodes, ep) < 0.0
    if np.any(viol):
        ci, ki = np.nonzero(viol)
        tt = bisect_theta(avg[ci], nodes[ci, ki], ep[ci, ki])
        th = np.ones(n)
        np.minimum.at(th, ci, tt)
        cells = np.unique(ci)
        th = th[cells]
        sub = nodes[cells]
        a = avg[cells]
        sub = th[:, None, None] * (sub - a[:, None, :]) + a[:, None, :]
        nodes[cells] = sub
        thetas[cells, 2] = th
    return nodes, thetas


def pcp_limit(data: CellNodeData, eps: float = DEFAULT_EPS, eps_psi: float | None = None):
    """Limit one cell's node values into the eps-strengthened admissible set.

    Args:
        data: Cell average and node values.
        eps: Slack for density and ``q``.
        eps_psi: Energy shift for psi; defaults to ``eps * max(1, average E)``.

    Returns:
        ``(limited, (theta1, theta2, theta3))``.

    Raises:
        AverageNotAdmissible: If the average itself is not eps-admissible.
    """
    eps_psi = float(default_eps_psi(data.average, eps)) if eps_psi is None else float(eps_psi)
    if not eps_admissible_mask(data.average, eps, eps_psi):
        raise AverageNotAdmissible(f"cell average {data.average.tolist()} is not eps-admissible")
    nodes, thetas = limit_nodes(data.average[None], data.node_values[None], eps, np.array([eps_psi]))
    limited = CellNodeData(data.average, nodes[0], data.weights)
    th = tuple(float(t) for t in thetas[0])
    if th != (1.0, 1.0, 1.0):
        logger.debug("limiter active: thetas=%s", th)
    return limited, th


__all__ = [
    "CellNodeData",
    "DEFAULT_EPS",
    "bisect_theta",
    "limit_nodes",
    "pcp_limit",
    "solve_theta",
]
