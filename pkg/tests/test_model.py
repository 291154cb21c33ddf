import math
from itertools import product

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from gensm.errors import ConfigError, DimensionError
from gensm.model import (
    PhaseVector,
    SystemConfig,
    TransmissionModel,
    build_precoder_matrix,
    compute_num_agcs,
    covariance_set,
    effective_covariance,
    enumerate_agcs,
    wrap_angle,
)


@pytest.mark.parametrize("n_m,n_rf,expected", [(4, 2, 4), (8, 2, 16), (5, 5, 1), (8, 1, 8)])
def test_num_agcs_examples(n_m, n_rf, expected):
    assert compute_num_agcs(n_m, n_rf) == expected


@given(st.integers(1, 40), st.integers(1, 40))
def test_num_agcs_is_largest_power_of_two_below_binomial(n_m, n_rf):
    if n_rf > n_m:
        with pytest.raises(DimensionError):
            compute_num_agcs(n_m, n_rf)
        return
    m = compute_num_agcs(n_m, n_rf)
    c = math.comb(n_m, n_rf)
    assert m & (m - 1) == 0
    assert m <= c < 2 * m


def _lexicographic_oracle(n_m, n_rf, count):
    # brute force: scan the whole index cube and keep strictly increasing tuples
    out = [t for t in product(range(1, n_m + 1), repeat=n_rf) if all(a < b for a, b in zip(t, t[1:]))]
    return sorted(out)[:count]


@pytest.mark.parametrize("n_m,n_rf", [(4, 2), (5, 2), (6, 3), (8, 2), (7, 1), (3, 3)])
def test_enumerate_matches_lexicographic_oracle(n_m, n_rf):
    table = enumerate_agcs(n_m, n_rf)
    assert list(table.combos) == _lexicographic_oracle(n_m, n_rf, compute_num_agcs(n_m, n_rf))


def test_enumerate_table1():
    table = enumerate_agcs(4, 2, n_k=2)
    assert table.combos == ((1, 2), (1, 3), (1, 4), (2, 3))
    assert table.selection_matrices.shape == (4, 8, 2)


def test_selection_matrix_single_antenna_groups():
    table = enumerate_agcs(4, 1, n_k=1)
    np.testing.assert_array_equal(table.selection_matrices[1][:, 0], [0, 1, 0, 0])


def test_selection_matrix_blocks():
    table = enumerate_agcs(4, 2, n_k=2)
    c = table.selection_matrices[table.combos.index((1, 3))]
    expected = np.zeros((8, 2))
    expected[0:2, 0] = 1
    expected[4:6, 1] = 1
    np.testing.assert_array_equal(c, expected)


@pytest.mark.parametrize("n_k,n_m,n_rf", [(2, 4, 2), (1, 8, 2), (4, 2, 1), (3, 5, 2)])
def test_selection_matrix_invariants(n_k, n_m, n_rf):
    table = enumerate_agcs(n_m, n_rf, n_k)
    assert len(set(table.combos)) == table.m
    for combo, c, d in zip(table.combos, table.selection_matrices, table.products()):
        assert np.all(c.sum(axis=0) == n_k)
        assert set(np.unique(c)) <= {0.0, 1.0}
        assert np.trace(d) == n_k * n_rf
        # D_m is block diagonal with an all-ones block per active group
        blocks = np.zeros((n_m * n_k, n_m * n_k))
        for u in combo:
            blocks[(u - 1) * n_k : u * n_k, (u - 1) * n_k : u * n_k] = 1
        np.testing.assert_array_equal(d, blocks)


def test_enumeration_is_deterministic():
    assert enumerate_agcs(8, 3, 2) == enumerate_agcs(8, 3, 2)


def test_precoder_matrix_examples():
    np.testing.assert_allclose(build_precoder_matrix(np.zeros(8), 2), np.eye(8) / np.sqrt(2))
    np.testing.assert_allclose(build_precoder_matrix(np.full(4, np.pi), 1), -np.eye(4), atol=1e-15)


@given(st.lists(st.floats(-50, 50), min_size=1, max_size=16), st.integers(1, 8))
def test_precoder_unit_modulus(angles, n_k):
    a = build_precoder_matrix(PhaseVector(angles), n_k)
    np.testing.assert_allclose(np.abs(np.diag(a)), 1 / np.sqrt(n_k), rtol=1e-14)
    assert np.count_nonzero(a - np.diag(np.diag(a))) == 0


@given(st.floats(-1e3, 1e3))
def test_wrap_angle_range(x):
    w = float(wrap_angle(x))
    assert -np.pi <= w < np.pi
    assert math.isclose(math.cos(w), math.cos(x), abs_tol=1e-9)
    assert math.isclose(math.sin(w), math.sin(x), abs_tol=1e-9)


def test_phase_vector_canonical():
    pv = PhaseVector([np.pi, -np.pi, 3 * np.pi / 2])
    np.testing.assert_allclose(pv.psi, [-np.pi, -np.pi, -np.pi / 2])


def test_config_validation():
    with pytest.raises(ConfigError):
        SystemConfig(n_t=8, n_k=3, n_m=4)
    with pytest.raises(DimensionError):
        SystemConfig(n_t=8, n_k=4, n_m=2, n_rf=3)
    with pytest.raises(ConfigError):
        SystemConfig(rho=-1.0)
    with pytest.raises(ConfigError):
        SystemConfig(sigma_n2=0.0)
    assert SystemConfig().m == 4
    assert SystemConfig.from_snr_db(10.0).rho == pytest.approx(10.0)


def test_covariance_trivial_cases(make_instance):
    h, psi, cfg, agc = make_instance(0)
    a = build_precoder_matrix(psi, cfg.n_k)
    zero = SystemConfig(rho=0.0, sigma_n2=0.3)
    for c in agc.selection_matrices:
        np.testing.assert_allclose(effective_covariance(h, a, c, zero), 0.3 * np.eye(8))
        np.testing.assert_allclose(effective_covariance(np.zeros_like(h), a, c, cfg), np.eye(8))


@pytest.mark.parametrize("seed", range(5))
def test_covariance_set_matches_direct_composition(make_instance, seed):
    h, psi, cfg, agc = make_instance(seed, snr_db=7.0)
    a = np.diag(np.exp(1j * psi)) / np.sqrt(cfg.n_k)
    fast = covariance_set(h, psi, cfg, agc)
    for m, c in enumerate(agc.selection_matrices):
        direct = cfg.sigma_n2 * np.eye(cfg.n_r) + cfg.rho / cfg.n_rf * (h @ a @ c @ c.T @ a.conj().T @ h.conj().T)
        np.testing.assert_allclose(fast[m], direct, rtol=1e-12, atol=1e-12)
        np.testing.assert_allclose(effective_covariance(h, a, c, cfg), direct, rtol=1e-12, atol=1e-12)


@settings(max_examples=30, deadline=None)
@given(st.integers(0, 10_000), st.floats(-20, 40))
def test_covariance_properties(seed, snr_db):
    from conftest import instance

    h, psi, cfg, agc = instance(seed, snr_db=snr_db)
    cov = covariance_set(h, psi, cfg, agc)
    for s in cov:
        assert np.linalg.norm(s - s.conj().T) <= 1e-12 * np.linalg.norm(s)
        signal = s - cfg.sigma_n2 * np.eye(cfg.n_r)
        ev = np.linalg.eigvalsh(signal)
        assert ev.min() >= -1e-9 * max(1.0, ev.max())
        assert np.sum(ev > 1e-9 * max(1.0, ev.max())) <= cfg.n_rf
        assert np.linalg.eigvalsh(s).min() >= cfg.sigma_n2 * (1 - 1e-9)


def test_transmission_model_empirical_covariance(make_instance):
    h, psi, cfg, agc = make_instance(3, snr_db=5.0)
    model = TransmissionModel(h, PhaseVector(psi), cfg, agc)
    m_idx, x, y = model.transmit(np.random.default_rng(1), 200_000)
    cov = model.covariances()
    for m in range(agc.m):
        ym = y[m_idx == m]
        emp = ym.T @ ym.conj() / len(ym)
        assert np.linalg.norm(emp - cov[m]) / np.linalg.norm(cov[m]) < 0.03


def test_transmission_model_dimension_check(make_instance):
    h, psi, cfg, agc = make_instance(0)
    with pytest.raises(DimensionError):
        TransmissionModel(h[:, :4], PhaseVector(psi), cfg, agc)
