from __future__ import annotations

import numpy as np
import pytest

from pcprmhd import presets
from pcprmhd.errors import CflTooLarge, IndexOutOfRange, InvalidPrimitive, NotAdmissible, WeightMismatch
from pcprmhd.solver2d import (
    EdgeTraces,
    Grid2D,
    compute_dt_2d,
    discrete_divergence,
    div_in_out_diagnostics,
    divergence_error_sup,
    init_cell_averages_2d,
    pad,
    step_lxf_2d,
    uniform_grid_2d,
)
from pcprmhd.state import admissible_mask, prim_to_cons_array
from pcprmhd.verify import example_3_1_limit, example_3_1_update

BASE = np.array([1.0, 0.2, -0.1, 0.05, 0.0, 0.0, 0.3, 0.5])


def field(b1, b2):
    def fn(x, y):
        P = np.broadcast_to(BASE, np.broadcast_shapes(np.shape(x), np.shape(y)) + (8,)).copy()
        P[..., 4] = b1(x, y)
        P[..., 5] = b2(x, y)
        return P
    return fn


def test_uniform_field_zero_divergence(eos):
    grid = uniform_grid_2d(BASE + np.array([0, 0, 0, 0, 0.7, -0.4, 0, 0]), 8, 8, (0, 1, 0, 1), eos)
    assert divergence_error_sup(grid) == 0.0
    assert discrete_divergence(grid, 3, 4) == 0.0


def test_linear_solenoidal_field_zero_divergence(eos):
    grid = init_cell_averages_2d(field(lambda x, y: y, lambda x, y: x), 10, 12, (0, 1, 0, 1), eos)
    interior = np.abs([[discrete_divergence(grid, i, j) for j in range(1, 11)] for i in range(1, 9)])
    assert interior.max() <= 1e-12


def test_point_sampled_b1_equals_x(eos):
    n = 10
    x = (np.arange(n) + 0.5) / n
    cells = np.empty((n, n, 8))
    for i in range(n):
        P = BASE.copy()
        P[4] = x[i]
        cells[i, :] = prim_to_cons_array(P, eos.gamma)
    grid = Grid2D(cells, 1.0 / n, 1.0 / n, bc="outflow")
    assert discrete_divergence(grid, 4, 4) == pytest.approx(1.0, rel=1e-12)


def test_discrete_divergence_index_check(eos):
    grid = uniform_grid_2d(BASE, 4, 4, (0, 1, 0, 1), eos)
    with pytest.raises(IndexOutOfRange):
        discrete_divergence(grid, 4, 0)


def test_init_constant_state(eos):
    P = BASE + np.array([0, 0, 0, 0, 0.7, -0.4, 0, 0])
    fn = lambda x, y: np.broadcast_to(P, np.broadcast_shapes(np.shape(x), np.shape(y)) + (8,))  # noqa: E731
    grid = init_cell_averages_2d(fn, 6, 5, (0, 1, 0, 2), eos)
    np.testing.assert_allclose(grid.cells, np.broadcast_to(prim_to_cons_array(P, eos.gamma), (6, 5, 8)),
                               rtol=1e-15, atol=1e-15)
    assert divergence_error_sup(grid) <= 1e-14


def test_init_sinusoidal_solenoidal_field(eos):
    fn = field(lambda x, y: -np.sin(2 * np.pi * y), lambda x, y: np.sin(2 * np.pi * x))
    grid = init_cell_averages_2d(fn, 32, 32, (0, 1, 0, 1), eos, quad_order=5, bc="periodic")
    assert divergence_error_sup(grid) <= 1e-10


def test_init_rejects_invalid_primitive(eos):
    def bad(x, y):
        P = field(lambda x, y: 0 * x, lambda x, y: 0 * y)(x, y)
        P[..., 7] = -1.0
        return P
    with pytest.raises(InvalidPrimitive):
        init_cell_averages_2d(bad, 4, 4, (0, 1, 0, 1), eos)


def test_rotor_init(eos):
    grid = init_cell_averages_2d(presets.rotor_primitives, 100, 100, (-0.5, 0.5, -0.5, 0.5), eos)
    assert admissible_mask(grid.cells).all()
    assert divergence_error_sup(grid) <= 1e-12


@pytest.mark.parametrize("bc", ["periodic", "outflow"])
def test_constant_state_unchanged(eos, bc):
    grid = uniform_grid_2d(BASE + np.array([0, 0, 0, 0, 0.5, 0.5, 0, 0]), 6, 6, (0, 1, 0, 1), eos, bc)
    out = step_lxf_2d(grid, compute_dt_2d(grid, 0.9), eos)
    np.testing.assert_allclose(out.cells, grid.cells, rtol=1e-14, atol=1e-14)


def test_cfl_guard(eos):
    grid = uniform_grid_2d(BASE, 4, 4, (0, 1, 0, 1), eos)
    with pytest.raises(CflTooLarge):
        compute_dt_2d(grid, 1.5)
    with pytest.raises(CflTooLarge):
        step_lxf_2d(grid, 0.2, eos)


def test_rotor_steps_keep_divergence_and_admissibility(eos):
    grid = init_cell_averages_2d(presets.rotor_primitives, 100, 100, (-0.5, 0.5, -0.5, 0.5), eos)
    for _ in range(50):
        grid = step_lxf_2d(grid, compute_dt_2d(grid, 0.15), eos)
        assert divergence_error_sup(grid) <= 1e-12
    assert admissible_mask(grid.cells).all()


def test_divergence_error_does_not_grow(eos, rng):
    P = np.broadcast_to(BASE + np.array([0, 0, 0, 0, 0.5, 0.5, 0, 0]), (24, 24, 8)).copy()
    P[..., 4] += 0.2 * rng.standard_normal((24, 24))
    grid = Grid2D(prim_to_cons_array(P, eos.gamma), 1 / 24, 1 / 24, bc="periodic")
    e_prev = divergence_error_sup(grid)
    assert e_prev > 0
    for _ in range(40):
        grid = step_lxf_2d(grid, compute_dt_2d(grid, 0.15), eos)
        e = divergence_error_sup(grid)
        assert e <= e_prev + 1e-14
        e_prev = e


def test_periodic_conservation(eos):
    grid = init_cell_averages_2d(presets.sine2d_primitives, 20, 20, (0, 1, 0, 1), eos, bc="periodic")
    start = grid.cells.sum(axis=(0, 1))
    for _ in range(100):
        grid = step_lxf_2d(grid, compute_dt_2d(grid, 0.15), eos)
    end = grid.cells.sum(axis=(0, 1))
    idx = [0, 1, 2, 3, 7]
    assert np.all(np.abs(end[idx] - start[idx]) <= 1e-12 * np.abs(start[idx]).clip(1.0))


def test_outflow_ghosts_are_admissible_and_solenoidal(eos):
    grid = init_cell_averages_2d(presets.rotor_primitives, 20, 20, (-0.5, 0.5, -0.5, 0.5), eos)
    padded = pad(grid, gamma=eos.gamma)
    assert admissible_mask(padded).all()
    b1, b2 = padded[..., 4], padded[..., 5]
    div = (b1[3:-1, 2:-2] - b1[1:-3, 2:-2]) / (2 * grid.dx) + (b2[2:-2, 3:-1] - b2[2:-2, 1:-3]) / (2 * grid.dy)
    assert np.abs(div).max() <= 1e-12


@pytest.mark.parametrize("eps", [1e-4, 1e-6, 1e-8])
def test_example_3_1_inadmissible(eps):
    center = example_3_1_update(eps, 0.5)
    assert not admissible_mask(center)


def test_example_3_1_closed_form():
    assert example_3_1_limit(0.5) == pytest.approx(27 * (0.5 / 4) ** 7 * 2.0**2 * (0.5 - 4), rel=1e-15)
    assert example_3_1_limit(0.5) == pytest.approx(-1.80244e-4, rel=1e-5)


def test_example_3_1_stencil_fails_in_step(eos):
    eps = 1e-6
    hat = prim_to_cons_array(np.array([eps, 0.5, 0, 0, 0, 0, 0, eps]), eos.gamma)
    tilde = prim_to_cons_array(np.array([eps, 0.5, 0, 0, 1, 0, 0, eps]), eos.gamma)
    cells = np.broadcast_to(hat, (3, 3, 8)).copy()
    cells[2, 1] = tilde
    grid = Grid2D(cells, 1.0, 1.0, bc="periodic")
    assert divergence_error_sup(grid) > 0
    with pytest.raises(NotAdmissible):
        step_lxf_2d(grid, 0.5, eos)


def _traces(**kw):
    base = {f: np.zeros(2) for f in EdgeTraces.__dataclass_fields__}
    base.update({k: np.asarray(v, float) for k, v in kw.items()})
    return EdgeTraces(**base)


def test_div_in_out_uniform():
    t = _traces(**{f: [0.3, 0.3] for f in EdgeTraces.__dataclass_fields__})
    assert div_in_out_diagnostics(t, [0.5, 0.5], 0.1, 0.2) == (0.0, 0.0)


def test_div_in_out_linear_inner_field():
    # inner field B = (y, x) on [-h, h]^2, outer traces offset by a jump
    h = 0.1
    g = h / np.sqrt(3)
    pts = np.array([-g, g])
    t = _traces(east_in=pts, west_in=pts, north_in=pts, south_in=pts,
                east_out=pts + 1.0, west_out=pts, north_out=pts, south_out=pts - 0.5)
    div_in, div_out = div_in_out_diagnostics(t, [0.5, 0.5], 2 * h, 2 * h)
    assert div_in == pytest.approx(0.0, abs=1e-15)
    assert div_out == pytest.approx(1.0 / (2 * h) + 0.5 / (2 * h))


def test_div_in_out_example_stencil():
    # midpoint traces of the piecewise-constant field with B1 = 1 east of the cell
    dx = 0.25
    t = _traces(east_out=[1.0], **{f: [0.0] for f in EdgeTraces.__dataclass_fields__ if f != "east_out"})
    div_in, div_out = div_in_out_diagnostics(t, [1.0], dx, dx)
    assert div_in == 0.0
    assert div_out == pytest.approx(1.0 / dx)


def test_div_in_out_weight_checks():
    with pytest.raises(WeightMismatch):
        div_in_out_diagnostics(_traces(), [0.5, 0.6], 1.0, 1.0)
    with pytest.raises(WeightMismatch):
        div_in_out_diagnostics(_traces(), [1.0], 1.0, 1.0)


def test_grid_validation():
    with pytest.raises(ValueError):
        Grid2D(np.zeros((4, 4, 8)), 0.1, 0.1, bc=("periodic", "outflow", "outflow", "outflow"))
    with pytest.raises(ValueError):
        Grid2D(np.zeros((4, 8)), 0.1, 0.1)
