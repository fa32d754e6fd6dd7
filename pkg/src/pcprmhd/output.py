"""CSV writers for snapshots, step logs and convergence tables."""

from __future__ import annotations

from pathlib import Path
from typing import Iterable, Mapping, Sequence

import numpy as np

from .state import recover_array

PRIM_COLUMNS = ("rho", "v1", "v2", "v3", "B1", "B2", "B3", "p")
CONS_COLUMNS = ("D", "m1", "m2", "m3", "E")
STEP_LOG_COLUMNS = ("step", "t", "dt", "min_rho", "min_p", "max_abs_v", "limiter_activations")
DIAG_2D_COLUMNS = ("step", "t", "E_inf", "min_rho", "min_p", "max_W")
CONVERGENCE_COLUMNS = ("N", "l1", "l2", "order_l1", "order_l2", "limiter_activations")


def _fmt(value) -> str:
    if isinstance(value, (int, np.integer)):
        return str(int(value))
    if value is None or (isinstance(value, float) and np.isnan(value)):
        return ""
    return f"{float(value):.17g}"


def write_table(path: str | Path, columns: Sequence[str], rows: Iterable[Sequence]) -> Path:
    """Write a header line and one comma-separated line per row."""
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    with path.open("w", encoding="utf-8", newline="\n") as fh:
        fh.write(",".join(columns) + "\n")
        for row in rows:
            fh.write(",".join(_fmt(v) for v in row) + "\n")
    return path


def write_records(path: str | Path, columns: Sequence[str], records: Iterable[Mapping]) -> Path:
    """Write dictionaries as rows, in the given column order."""
    return write_table(path, columns, ([r.get(c) for c in columns] for r in records))


def _cons_subset(cells: np.ndarray) -> np.ndarray:
    return cells[..., [0, 1, 2, 3, 7]]


def snapshot_rows_1d(x: np.ndarray, cells: np.ndarray, gamma: float) -> np.ndarray:
    """Rows ``x, primitives, D, m1..m3, E`` for a 1D grid."""
    prim, _, _ = recover_array(cells, gamma)
    return np.column_stack([x, prim, _cons_subset(cells)])


def write_snapshot_1d(path: str | Path, x: np.ndarray, cells: np.ndarray, gamma: float) -> Path:
    rows = snapshot_rows_1d(x, cells, gamma)
    return write_table(path, ("x",) + PRIM_COLUMNS + CONS_COLUMNS, rows)


def write_snapshot_2d(path: str | Path, x: np.ndarray, y: np.ndarray, cells: np.ndarray,
                      gamma: float) -> Path:
    """Rows ``i, j, x, y, primitives, D, m1..m3, E`` for a 2D grid, ``j`` fastest."""
    nx, ny = cells.shape[:2]
    prim, _, _ = recover_array(cells, gamma)
    ii, jj = np.meshgrid(np.arange(nx), np.arange(ny), indexing="ij")
    xx, yy = np.meshgrid(x, y, indexing="ij")
    flat = np.column_stack([xx.ravel(), yy.ravel(), prim.reshape(-1, 8),
                            _cons_subset(cells).reshape(-1, 5)])
    rows = ([int(i), int(j), *vals] for i, j, vals in zip(ii.ravel(), jj.ravel(), flat))
    return write_table(path, ("i", "j", "x", "y") + PRIM_COLUMNS + CONS_COLUMNS, rows)


def read_table(path: str | Path) -> tuple[list[str], np.ndarray]:
    """Read a table written by :func:`write_table` as floats (empty cells are NaN)."""
    with Path(path).open(encoding="utf-8") as fh:
        header = fh.readline().strip().split(",")
        data = [[float(v) if v else np.nan for v in line.strip().split(",")] for line in fh if line.strip()]
    return header, np.asarray(data, dtype=float).reshape(-1, len(header))
