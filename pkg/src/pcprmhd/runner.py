"""Drive configured experiments: time loops, step logs and convergence studies."""

from __future__ import annotations

import logging
import math
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from . import presets
from .config import RunConfig
from .errors import NoExactSolution, NotAdmissible
from .output import (CONVERGENCE_COLUMNS, DIAG_2D_COLUMNS, STEP_LOG_COLUMNS, write_records,
                     write_snapshot_1d, write_snapshot_2d, write_table)
from .solver1d import Grid1D, compute_dt, muscl_step, step_lxf_1d
from .solver2d import Grid2D, compute_dt_2d, divergence_error_sup, init_cell_averages_2d, step_lxf_2d
from .state import Eos, prim_to_cons_array, recover_array

logger = logging.getLogger(__name__)

_T_EPS = 1e-14
_DIV_SLACK = 1e-12


@dataclass
class Snapshot:
    step: int
    t: float
    cells: np.ndarray


@dataclass
class RunResult:
    """Outcome of a run.

    Attributes:
        config: The resolved configuration.
        grid: Grid holding the last accepted averages.
        snapshots: Stored states, always including the initial and last one.
        log: One record per accepted step (1D step log or 2D diagnostics).
        failure: The admissibility error that stopped the run, if any.
    """

    config: RunConfig
    grid: Grid1D | Grid2D
    snapshots: list[Snapshot] = field(default_factory=list)
    log: list[dict] = field(default_factory=list)
    failure: NotAdmissible | None = None

    @property
    def steps(self) -> int:
        return self.snapshots[-1].step if self.snapshots else 0

    @property
    def t(self) -> float:
        return self.snapshots[-1].t if self.snapshots else 0.0

    @property
    def total_activations(self) -> int:
        return int(sum(r.get("limiter_activations", 0) for r in self.log))


def initial_grid_1d(cfg: RunConfig, n_cells: int | None = None) -> Grid1D:
    """Cell averages of the configured 1D preset."""
    n = n_cells or cfg.n_cells
    x0, x1 = cfg.domain
    gamma = cfg.gamma
    if cfg.preset == "alfven1d":
        fn = lambda x: presets.alfven_primitives(x, 0.0, gamma)  # noqa: E731
    elif cfg.preset == "custom":
        fn = lambda x: presets.riemann_primitives((cfg.left, cfg.right), x)  # noqa: E731
    else:
        fn = lambda x: presets.riemann_primitives(cfg.preset, x)  # noqa: E731
    cells = presets.cell_averages_1d(fn, x0, x1, n, gamma, order=cfg.quad_order)
    left = right = None
    if cfg.bc == "dirichlet":
        left = prim_to_cons_array(fn(np.array(x0 - 1.0)), gamma)
        right = prim_to_cons_array(fn(np.array(x1 + 1.0)), gamma)
    return Grid1D(cells, (x1 - x0) / n, x0, cfg.bc, left, right)


def initial_grid_2d(cfg: RunConfig) -> Grid2D:
    """Divergence-aware cell averages of the configured 2D preset."""
    if cfg.preset == "rotor":
        fn = lambda x, y: presets.rotor_primitives(x, y, cfg.alpha)  # noqa: E731
    elif cfg.preset == "blast":
        fn = lambda x, y: presets.blast_primitives(x, y, cfg.b_a)  # noqa: E731
    else:
        fn = presets.sine2d_primitives
    return init_cell_averages_2d(fn, cfg.nx, cfg.ny, tuple(cfg.domain), Eos(cfg.gamma),
                                 cfg.quad_order, cfg.bc)


def _stats_1d(cells: np.ndarray, gamma: float) -> dict:
    prim, _, _ = recover_array(cells, gamma)
    speed = np.sqrt(np.sum(prim[:, 1:4] ** 2, axis=1))
    return {"min_rho": float(prim[:, 0].min()), "min_p": float(prim[:, 7].min()),
            "max_abs_v": float(speed.max())}


def _stats_2d(cells: np.ndarray, gamma: float) -> dict:
    prim, _, _ = recover_array(cells, gamma)
    v2 = np.sum(prim[..., 1:4] ** 2, axis=-1)
    return {"min_rho": float(prim[..., 0].min()), "min_p": float(prim[..., 7].min()),
            "max_W": float(np.max(1.0 / np.sqrt(1.0 - v2)))}


def _finished(step: int, t: float, cfg: RunConfig) -> bool:
    if cfg.max_steps is not None and step >= cfg.max_steps:
        return True
    return t >= cfg.t_final * (1.0 - _T_EPS) or cfg.t_final - t <= _T_EPS


def _want_snapshot(step: int, cfg: RunConfig) -> bool:
    return cfg.snapshot_every > 0 and step % cfg.snapshot_every == 0


def _evolve(cfg: RunConfig, grid, advance, stats, initial_record) -> RunResult:
    """Shared time loop; ``advance(grid, t)`` returns ``(grid, dt, extra_record)``."""
    result = RunResult(cfg, grid, [Snapshot(0, 0.0, grid.cells.copy())])
    rec = {"step": 0, "t": 0.0, **initial_record(grid), **stats(grid.cells)}
    result.log.append(rec)
    step, t = 0, 0.0
    while not _finished(step, t, cfg):
        try:
            grid, dt, extra = advance(grid, t)
        except NotAdmissible as exc:
            exc.step = step + 1
            exc.partial = result
            result.failure = exc
            logger.error("step %d (t=%.6g): %s", step + 1, t, exc)
            raise
        step += 1
        t = cfg.t_final if cfg.t_final - (t + dt) <= _T_EPS * max(1.0, cfg.t_final) else t + dt
        result.grid = grid
        result.log.append({"step": step, "t": t, "dt": dt, **extra, **stats(grid.cells)})
        if _want_snapshot(step, cfg):
            result.snapshots.append(Snapshot(step, t, grid.cells.copy()))
    if result.snapshots[-1].step != step:
        result.snapshots.append(Snapshot(step, t, grid.cells.copy()))
    logger.info("%s finished: %d steps, t=%.6g", cfg.preset, step, t)
    return result


def run_1d(cfg: RunConfig, grid: Grid1D | None = None) -> RunResult:
    """Advance a 1D configuration to its final time.

    Raises:
        NotAdmissible: With ``step`` set and the partial :class:`RunResult`
            attached as ``partial``.
    """
    eos = Eos(cfg.gamma)
    grid = initial_grid_1d(cfg) if grid is None else grid
    eps = cfg.limiter_eps

    def advance(g, t):
        dt = compute_dt(g, cfg.cfl, cfg.scheme, t, cfg.t_final)
        if cfg.scheme == "lxf1":
            return step_lxf_1d(g, dt, eos), dt, {"limiter_activations": 0}
        g, active = muscl_step(g, dt, eos, eps)
        return g, dt, {"limiter_activations": active}

    return _evolve(cfg, grid, advance, lambda c: _stats_1d(c, cfg.gamma),
                   lambda g: {"dt": 0.0, "limiter_activations": 0})


def run_2d(cfg: RunConfig, grid: Grid2D | None = None) -> RunResult:
    """Advance a 2D configuration; the log holds the divergence diagnostics.

    A growing divergence error is logged as a warning and flagged in the
    record as ``E_inf_increase``.

    Raises:
        NotAdmissible: As for :func:`run_1d`.
    """
    eos = Eos(cfg.gamma)
    grid = initial_grid_2d(cfg) if grid is None else grid
    prev = [divergence_error_sup(grid)]

    def advance(g, t):
        dt = compute_dt_2d(g, cfg.cfl, t, cfg.t_final)
        g = step_lxf_2d(g, dt, eos)
        e_inf = divergence_error_sup(g)
        grew = e_inf > prev[0] + _DIV_SLACK
        if grew:
            logger.warning("divergence error grew from %.3e to %.3e", prev[0], e_inf)
        prev[0] = e_inf
        return g, dt, {"E_inf": e_inf, "E_inf_increase": int(grew)}

    return _evolve(cfg, grid, advance, lambda c: _stats_2d(c, cfg.gamma),
                   lambda g: {"dt": 0.0, "E_inf": prev[0], "E_inf_increase": 0})


def run(cfg: RunConfig) -> RunResult:
    return run_2d(cfg) if cfg.is_2d else run_1d(cfg)


def write_outputs(result: RunResult, output_dir: str | Path | None = None) -> list[Path]:
    """Write every stored snapshot and the step log; returns the written paths."""
    cfg = result.config
    out = Path(output_dir or cfg.output_dir)
    written = []
    for snap in result.snapshots:
        path = out / f"{cfg.preset}_step{snap.step:06d}.csv"
        if cfg.is_2d:
            x, y = result.grid.centers()
            written.append(write_snapshot_2d(path, x, y, snap.cells, cfg.gamma))
        else:
            written.append(write_snapshot_1d(path, result.grid.centers, snap.cells, cfg.gamma))
    final = result.snapshots[-1]
    final_path = out / f"{cfg.preset}_final.csv"
    if cfg.is_2d:
        x, y = result.grid.centers()
        written.append(write_snapshot_2d(final_path, x, y, final.cells, cfg.gamma))
        written.append(write_records(out / f"{cfg.preset}_diagnostics.csv", DIAG_2D_COLUMNS, result.log))
    else:
        written.append(write_snapshot_1d(final_path, result.grid.centers, final.cells, cfg.gamma))
        written.append(write_records(out / f"{cfg.preset}_steplog.csv", STEP_LOG_COLUMNS, result.log))
    return written


@dataclass
class ConvergenceTable:
    """Errors of ``v2`` at the final time for a sequence of meshes."""

    n_cells: list[int]
    l1: list[float]
    l2: list[float]
    activations: list[int]

    def orders(self, which: str = "l1") -> list[float]:
        """Observed orders between successive meshes (empty for one mesh)."""
        err = getattr(self, which)
        return [math.log(err[k] / err[k + 1]) / math.log(self.n_cells[k + 1] / self.n_cells[k])
                for k in range(len(err) - 1)]

    def rows(self) -> list[list]:
        o1, o2 = self.orders("l1"), self.orders("l2")
        rows = []
        for k, n in enumerate(self.n_cells):
            r1 = o1[k - 1] if k > 0 else None
            r2 = o2[k - 1] if k > 0 else None
            rows.append([n, self.l1[k], self.l2[k], r1, r2, self.activations[k]])
        return rows

    def write(self, path: str | Path) -> Path:
        columns = CONVERGENCE_COLUMNS
        rows = self.rows()
        if len(self.n_cells) == 1:
            columns = ("N", "l1", "l2", "limiter_activations")
            rows = [[r[0], r[1], r[2], r[5]] for r in rows]
        return write_table(path, columns, rows)


def exact_cell_averages_v2(cfg: RunConfig, n: int, t: float, order: int = 5) -> np.ndarray:
    """Gauss cell averages of the exact ``v2`` of the Alfven wave."""
    x0, x1 = cfg.domain
    nodes, weights = np.polynomial.legendre.leggauss(order)
    dx = (x1 - x0) / n
    centers = x0 + (np.arange(n) + 0.5) * dx
    xs = centers[:, None] + 0.5 * dx * nodes[None, :]
    return 0.5 * (presets.alfven_primitives(xs, t, cfg.gamma)[..., 2] @ weights)


def convergence_study(cfg: RunConfig, cells: list[int] | None = None) -> ConvergenceTable:
    """Run the smooth preset on each mesh and measure ``v2`` errors at ``t_final``.

    Raises:
        NoExactSolution: For presets without a closed-form solution.
        NotAdmissible: If a run fails.
    """
    if cfg.preset != "alfven1d":
        raise NoExactSolution(f"preset {cfg.preset!r} has no exact solution")
    cells = list(cells or cfg.cells or [50, 100, 200, 400])
    table = ConvergenceTable([], [], [], [])
    for n in cells:
        sub = RunConfig.from_dict({"preset": cfg.preset, "scheme": cfg.scheme, "n_cells": int(n),
                                   "cfl": cfg.cfl, "t_final": cfg.t_final, "eps": cfg.eps,
                                   "gamma": cfg.gamma, "domain": cfg.domain, "bc": cfg.bc,
                                   "quad_order": cfg.quad_order})
        result = run_1d(sub)
        prim, _, _ = recover_array(result.grid.cells, cfg.gamma)
        err = np.abs(prim[:, 2] - exact_cell_averages_v2(sub, n, result.t))
        table.n_cells.append(int(n))
        table.l1.append(float(err.mean()))
        table.l2.append(float(np.sqrt(np.mean(err**2))))
        table.activations.append(result.total_activations)
        logger.info("N=%d l1=%.4e activations=%d", n, table.l1[-1], table.activations[-1])
    return table
