"""One-dimensional finite-volume schemes on uniform meshes.

Two schemes are provided: the first-order Lax-Friedrichs scheme and a
second-order MUSCL scheme (minmod slopes on conservative variables) whose
interface traces are passed through the positivity limiter, advanced with the
three-stage SSP Runge-Kutta method.
"""

from __future__ import annotations

import logging
from dataclasses import dataclass, field, replace
from typing import Literal

import numpy as np

from .errors import CflTooLarge, NotAdmissible
from .flux import flux_from_primitive, lf_average, recover_checked
from .limiter import DEFAULT_EPS, limit_nodes
from .state import NVAR, Eos, admissible_mask, default_eps_psi, eps_admissible_mask

logger = logging.getLogger(__name__)

NGHOST = 2
Scheme1D = Literal["lxf1", "muscl2-pcp"]
BcKind = Literal["periodic", "outflow", "dirichlet"]

#: CFL caps that guarantee admissibility: dt <= dx for LxF, dt <= dx/2 for MUSCL.
CFL_CAP = {"lxf1": 1.0, "muscl2-pcp": 0.5}

#: SSP-RK3 stage weights (weight of the new Euler step in each convex combination).
SSP_RK3_WEIGHTS = ((1.0, 0.0), (0.75, 0.25), (1.0 / 3.0, 2.0 / 3.0))


@dataclass(frozen=True)
class Grid1D:
    """Cell averages on a uniform 1D mesh.

    Attributes:
        cells: Interior averages, shape ``(n_cells, 8)``.
        dx: Cell width.
        x0: Left edge of the domain.
        bc: Boundary kind applied at both ends.
        left_state: Ghost value on the left for dirichlet boundaries.
        right_state: Ghost value on the right for dirichlet boundaries.
    """

    cells: np.ndarray
    dx: float
    x0: float = 0.0
    bc: BcKind = "outflow"
    left_state: np.ndarray | None = field(default=None, repr=False)
    right_state: np.ndarray | None = field(default=None, repr=False)

    def __post_init__(self) -> None:
        cells = np.asarray(self.cells, dtype=float)
        if cells.ndim != 2 or cells.shape[1] != NVAR:
            raise ValueError("cells must have shape (n_cells, 8)")
        if cells.shape[0] < 4:
            raise ValueError("a 1D grid needs at least 4 cells")
        if not self.dx > 0.0:
            raise ValueError("dx must be positive")
        if self.bc not in ("periodic", "outflow", "dirichlet"):
            raise ValueError(f"unknown boundary kind {self.bc!r}")
        object.__setattr__(self, "cells", cells)
        if self.bc == "dirichlet":
            left = cells[0] if self.left_state is None else np.asarray(self.left_state, dtype=float)
            right = cells[-1] if self.right_state is None else np.asarray(self.right_state, dtype=float)
            object.__setattr__(self, "left_state", left.copy())
            object.__setattr__(self, "right_state", right.copy())

    @property
    def n_cells(self) -> int:
        return self.cells.shape[0]

    @property
    def centers(self) -> np.ndarray:
        return self.x0 + (np.arange(self.n_cells) + 0.5) * self.dx

    def with_cells(self, cells: np.ndarray) -> Grid1D:
        return replace(self, cells=cells)


def pad(grid: Grid1D, cells: np.ndarray | None = None) -> np.ndarray:
    """Interior averages with two ghost cells on each side."""
    u = grid.cells if cells is None else cells
    if grid.bc == "periodic":
        left, right = u[-NGHOST:], u[:NGHOST]
    elif grid.bc == "outflow":
        left = np.repeat(u[:1], NGHOST, axis=0)
        right = np.repeat(u[-1:], NGHOST, axis=0)
    else:
        left = np.repeat(grid.left_state[None], NGHOST, axis=0)
        right = np.repeat(grid.right_state[None], NGHOST, axis=0)
    return np.concatenate([left, u, right], axis=0)


def compute_dt(grid: Grid1D, cfl: float, scheme: Scheme1D, t: float = 0.0,
               t_final: float | None = None) -> float:
    """Time step ``cfl * dx``, shortened to land exactly on ``t_final``.

    Raises:
        CflTooLarge: If ``cfl`` exceeds the admissibility bound of ``scheme``.
    """
    if scheme not in CFL_CAP:
        raise ValueError(f"unknown 1D scheme {scheme!r}")
    if not 0.0 < cfl <= CFL_CAP[scheme]:
        raise CflTooLarge(f"cfl={cfl} outside (0, {CFL_CAP[scheme]}] for {scheme}")
    dt = cfl * grid.dx
    if t_final is not None and t + dt > t_final:
        dt = t_final - t
    return dt


def _check_output(cells: np.ndarray, what: str) -> None:
    ok = admissible_mask(cells)
    if not np.all(ok):
        bad = np.flatnonzero(~ok)
        raise NotAdmissible(f"{what}: {bad.size} inadmissible cell(s), first at index {bad[0]}",
                            indices=bad)


def _lxf_rhs(grid: Grid1D, cells: np.ndarray, eos: Eos) -> np.ndarray:
    u = pad(grid, cells)[1:-1]
    prim = recover_checked(u, eos)
    F = flux_from_primitive(u, prim, eos.gamma, 1)
    fhat = lf_average(u[:-1], u[1:], F[:-1], F[1:])
    return -(fhat[1:] - fhat[:-1]) / grid.dx


def step_lxf_1d(grid: Grid1D, dt: float, eos: Eos, check: bool = True) -> Grid1D:
    """Advance one first-order Lax-Friedrichs step.

    Raises:
        CflTooLarge: If ``dt > dx``.
        NotAdmissible: If an input or output average is inadmissible.
    """
    if dt > grid.dx * (1.0 + 1e-14):
        raise CflTooLarge("the LxF scheme needs dt <= dx")
    new = grid.cells + dt * _lxf_rhs(grid, grid.cells, eos)
    if check:
        _check_output(new, "LxF step")
    return grid.with_cells(new)


def minmod(a: np.ndarray, b: np.ndarray) -> np.ndarray:
    """Componentwise minmod: the smaller magnitude if signs agree, else zero."""
    return np.where(a * b > 0.0, np.sign(a) * np.minimum(np.abs(a), np.abs(b)), 0.0)


def _slopes(padded: np.ndarray) -> np.ndarray:
    return minmod(padded[2:] - padded[1:-1], padded[1:-1] - padded[:-2])


def reconstruct_muscl(grid: Grid1D) -> tuple[np.ndarray, np.ndarray]:
    """Minmod-limited linear traces of the interior cells.

    Returns:
        ``(right, left)``: the trace at the right edge of each cell
        (``U^-_{j+1/2}``) and at its left edge (``U^+_{j-1/2}``).
    """
    u = pad(grid)
    sigma = _slopes(u)[1:-1]
    return grid.cells + 0.5 * sigma, grid.cells - 0.5 * sigma


def _muscl_rhs(grid: Grid1D, cells: np.ndarray, eos: Eos, eps: float | None):
    """Spatial operator of the MUSCL scheme; returns (L(U), limiter activations)."""
    u = pad(grid, cells)
    avg = u[1:-1]
    half = 0.5 * _slopes(u)
    nodes = np.stack([avg - half, avg + half], axis=1)
    active = 0
    if eps is not None:
        eps_psi = default_eps_psi(avg, eps)
        in_set = eps_admissible_mask(avg, eps, eps_psi)
        if not np.all(in_set):
            # admissible averages just outside the strengthened set keep
            # first-order traces, which are admissible themselves
            nodes[~in_set] = avg[~in_set, None, :]
            logger.debug("%d cell(s) fell back to first order", int(np.sum(~in_set)))
        limited, thetas = limit_nodes(avg[in_set], nodes[in_set], eps, eps_psi[in_set])
        nodes[in_set] = limited
        active = int(np.sum(np.any(thetas < 1.0, axis=1)))
    left, right = nodes[:, 0], nodes[:, 1]
    # interface k+1/2 couples the right trace of padded cell k with the left of k+1
    um, up = right[:-1], left[1:]
    both = np.concatenate([um, up])
    F = flux_from_primitive(both, recover_checked(both, eos), eos.gamma, 1)
    n = um.shape[0]
    fhat = lf_average(um, up, F[:n], F[n:])
    return -(fhat[1:] - fhat[:-1]) / grid.dx, active


def _convex(a: np.ndarray, b: np.ndarray, w: float) -> np.ndarray:
    """``(1 - w) a + w b`` written as ``a + w (b - a)`` so equal inputs are exact."""
    return a + w * (b - a)


def ssp_rk3(cells: np.ndarray, dt: float, rhs, check=None):
    """Three-stage SSP Runge-Kutta step built from forward-Euler stages.

    Args:
        cells: Averages at the start of the step.
        dt: Time step.
        rhs: Callable returning ``(L(U), count)``.
        check: Optional callable invoked on every stage result.

    Returns:
        ``(new_cells, total_count)``.
    """
    total = 0
    stage = cells
    for k, (_, w) in enumerate(SSP_RK3_WEIGHTS):
        L, c = rhs(stage)
        total += c
        euler = stage + dt * L
        stage = euler if k == 0 else _convex(cells, euler, w)
        if check is not None:
            check(stage, k)
    return stage, total


def muscl_step(grid: Grid1D, dt: float, eos: Eos, eps: float | None = DEFAULT_EPS):
    """One SSP-RK3 MUSCL step; returns ``(grid, limiter_activations)``.

    Passing ``eps=None`` disables the positivity limiter.
    """
    if dt > CFL_CAP["muscl2-pcp"] * grid.dx * (1.0 + 1e-14):
        raise CflTooLarge("the limited MUSCL scheme needs dt <= dx/2")

    def check(stage, k):
        _check_output(stage, f"MUSCL stage {k + 1}")

    new, active = ssp_rk3(grid.cells, dt, lambda c: _muscl_rhs(grid, c, eos, eps), check)
    return grid.with_cells(new), active


def step_muscl_pcp_1d(grid: Grid1D, dt: float, eos: Eos, eps: float | None = DEFAULT_EPS) -> Grid1D:
    """Advance one limited second-order step (see :func:`muscl_step`)."""
    return muscl_step(grid, dt, eos, eps)[0]


def total_conserved(grid: Grid1D) -> np.ndarray:
    """Domain integral of each conservative variable."""
    return grid.cells.sum(axis=0) * grid.dx
