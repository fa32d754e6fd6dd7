from __future__ import annotations

import numpy as np
import pytest

from conftest import REST_GAS
from pcprmhd.errors import AverageNotAdmissible, PreconditionViolated
from pcprmhd.limiter import CellNodeData, limit_nodes, pcp_limit, solve_theta
from pcprmhd.state import default_eps_psi, eps_admissible_mask, psi_unchecked, shift_energy
from pcprmhd.verify import sample_admissible_batch

EPS = 1e-13
FIELD_AVG = np.array([1.0, 0.0, 0.0, 0.0, 1.0, 0.0, 0.0, 3.0])
# just below the zero-pressure surface of the field state: q > 0 but psi < 0
PSI_BAD = np.array([1.0, 0.0, 0.0, 0.0, 1.0, 0.0, 0.0, 1.45])


def _psi_eps(U, eps_psi):
    return float(psi_unchecked(shift_energy(U, eps_psi)))


def test_identity_when_nodes_admissible():
    nodes = np.array([REST_GAS * 0.9, REST_GAS * 1.1])
    limited, thetas = pcp_limit(CellNodeData(REST_GAS, nodes), EPS)
    assert thetas == (1.0, 1.0, 1.0)
    np.testing.assert_array_equal(limited.node_values, nodes)


def test_density_step_example():
    bad = REST_GAS.copy()
    bad[0] = -1.0
    good = 2 * REST_GAS - bad
    limited, thetas = pcp_limit(CellNodeData(REST_GAS, [bad, good]), EPS)
    assert thetas[0] == pytest.approx((1 - 1e-13) / 2, abs=1e-15)
    assert limited.node_values[0, 0] == pytest.approx(EPS, abs=1e-15)


def test_psi_step_example():
    avg, bad = FIELD_AVG, PSI_BAD
    good = 2 * avg - bad
    eps_psi = float(default_eps_psi(avg, EPS))
    assert _psi_eps(bad, eps_psi) < 0
    limited, thetas = pcp_limit(CellNodeData(avg, [bad, good]), EPS)
    assert thetas[:2] == (1.0, 1.0) and 0 <= thetas[2] < 1
    psi = _psi_eps(limited.node_values[0], eps_psi)
    assert psi >= 0
    assert abs(psi) <= 1e-10 * max(1.0, avg[7])


def test_average_preserved_and_membership(rng):
    avg = sample_admissible_batch(rng, 300, "mild")
    delta = rng.normal(size=avg.shape) * avg[:, [7]] * 2.0
    nodes = np.stack([avg - delta, avg + delta], axis=1)
    eps_psi = default_eps_psi(avg, EPS)
    ok = eps_admissible_mask(avg, EPS, eps_psi)
    limited, thetas = limit_nodes(avg[ok], nodes[ok], EPS, eps_psi[ok])
    assert np.any(thetas < 1)
    np.testing.assert_allclose(limited.mean(axis=1), avg[ok], rtol=1e-12, atol=1e-12)
    for k in range(2):
        assert eps_admissible_mask(limited[:, k], EPS, eps_psi[ok]).all()


def test_idempotent(rng):
    avg = sample_admissible_batch(rng, 100, "mild")
    delta = rng.normal(size=avg.shape) * avg[:, [7]]
    for a, d in zip(avg, delta):
        data = CellNodeData(a, [a - d, a + d])
        once, _ = pcp_limit(data, EPS)
        twice, thetas = pcp_limit(once, EPS)
        np.testing.assert_array_equal(twice.node_values, once.node_values)
        assert thetas == (1.0, 1.0, 1.0)


def test_q_step_keeps_field():
    avg = REST_GAS.copy()
    avg[4] = 0.3
    bad = avg.copy()
    bad[1] = 5.0
    bad[5] = 0.7
    limited, thetas = pcp_limit(CellNodeData(avg, [bad, 2 * avg - bad]), EPS)
    assert thetas[1] < 1.0 and thetas[2] == 1.0
    np.testing.assert_array_equal(limited.node_values[:, 4:7], [bad[4:7], (2 * avg - bad)[4:7]])


def test_average_must_be_eps_admissible():
    avg = np.array([1e-14, 0, 0, 0, 0, 0, 0, 1.0])
    with pytest.raises(AverageNotAdmissible):
        pcp_limit(CellNodeData(avg, [avg, avg]), EPS)


def test_weighted_mean_of_gauss_lobatto_pair():
    a, b = REST_GAS * 0.5, REST_GAS * 1.5
    np.testing.assert_allclose(CellNodeData(REST_GAS, [a, b]).weighted_mean(), REST_GAS)


def test_solve_theta_example():
    avg, cand = FIELD_AVG, PSI_BAD
    eps_psi = float(default_eps_psi(avg, EPS))
    theta = solve_theta(avg, cand, EPS)
    assert 0.0 <= theta < 1.0
    on = avg + theta * (cand - avg)
    past = avg + (theta + 2e-12) * (cand - avg)
    assert _psi_eps(on, eps_psi) >= 0 > _psi_eps(past, eps_psi)


def test_solve_theta_single_crossing():
    avg, cand = FIELD_AVG, PSI_BAD
    eps_psi = float(default_eps_psi(avg, EPS))
    ts = np.linspace(0, 1, 1000)
    vals = psi_unchecked(shift_energy(avg + ts[:, None] * (cand - avg), eps_psi))
    sign = np.where(np.isnan(vals), -1, np.sign(vals))
    assert np.count_nonzero(np.diff(sign)) == 1


def test_solve_theta_precondition():
    with pytest.raises(PreconditionViolated):
        solve_theta(REST_GAS, REST_GAS, EPS)
