import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st
from scipy import integrate

from conftest import instance
from gensm.errors import DegenerateCovarianceError, NumericalDomainError
from gensm.model import SystemConfig, agc_table_for, covariance_set
from gensm.rate import (
    RATE_CSV_COLUMNS,
    apm_mi,
    bias_shift,
    logdet_hpd,
    rate_closed_form,
    rate_closed_form_from_covariances,
    rate_true_mc,
    spatial_mi_lower_bound,
    spatial_mi_monte_carlo,
)

SHIFT8 = 8 * math.log2(2 / math.e)


def test_apm_zero_power():
    cov = np.stack([0.5 * np.eye(4)] * 3)
    assert apm_mi(cov, 0.5) == pytest.approx(0.0, abs=1e-12)


def test_apm_single_agc_doubling():
    assert apm_mi((2 * 0.7 * np.eye(4))[None], 0.7) == pytest.approx(4.0, abs=1e-12)


@pytest.mark.parametrize("seed", range(4))
def test_apm_matches_eigenvalue_oracle(seed):
    h, psi, cfg, agc = instance(seed, snr_db=12.0)
    cov = covariance_set(h, psi, cfg, agc)
    oracle = np.mean([np.sum(np.log2(np.linalg.eigvalsh(s) / cfg.sigma_n2)) for s in cov])
    assert apm_mi(cov, cfg.sigma_n2) == pytest.approx(oracle, abs=1e-9)


def test_apm_rejects_indefinite():
    with pytest.raises(NumericalDomainError):
        apm_mi(np.array([[[1.0, 0], [0, -1.0]]]), 1.0)


def test_logdet_stable_for_large_matrices():
    s = 1e8 * np.eye(64)
    assert logdet_hpd(s) == pytest.approx(64 * math.log(1e8))


def test_lower_bound_at_zero_power_equals_shift():
    cov = np.stack([np.eye(8)] * 4)
    assert spatial_mi_lower_bound(cov) == pytest.approx(SHIFT8, abs=1e-9)


def test_lower_bound_single_agc():
    h, psi, cfg, _ = instance(1, snr_db=5.0, n_m=4, n_rf=4)
    agc = agc_table_for(cfg)
    assert agc.m == 1
    cov = covariance_set(h, psi, cfg, agc)
    # |2 Sigma| = 2^{n_r} |Sigma| leaves only the constant
    assert spatial_mi_lower_bound(cov) == pytest.approx(bias_shift(cfg.n_r), abs=1e-9)
    assert rate_closed_form(h, psi, cfg, agc) == pytest.approx(apm_mi(cov, cfg.sigma_n2), abs=1e-9)


def test_lower_bound_high_snr_limit():
    h, psi, cfg, agc = instance(2, snr_db=60.0)
    cov = covariance_set(h, psi, cfg, agc)
    assert abs(spatial_mi_lower_bound(cov) - (math.log2(agc.m) + SHIFT8)) < 0.05


def test_rate_zero_power():
    h, psi, cfg, agc = instance(0, snr_db=0.0)
    zero = SystemConfig(rho=0.0)
    assert abs(rate_closed_form(h, psi, zero, agc)) < 1e-9


@settings(max_examples=40, deadline=None)
@given(st.integers(0, 10**6), st.floats(-30, 50), st.sampled_from([(2, 4, 2), (1, 8, 2), (4, 2, 1), (2, 4, 3)]))
def test_shift_identity(seed, snr_db, dims):
    n_k, n_m, n_rf = dims
    h, psi, cfg, agc = instance(seed, snr_db=snr_db, n_k=n_k, n_m=n_m, n_rf=n_rf)
    cov = covariance_set(h, psi, cfg, agc)
    r = rate_closed_form(h, psi, cfg, agc, check=True)
    # the bound is corrected by removing its n_r log2(2/e) offset
    alt = apm_mi(cov, cfg.sigma_n2) + spatial_mi_lower_bound(cov) - bias_shift(cfg.n_r)
    assert abs(r - alt) <= 1e-9


@pytest.mark.parametrize("seed", range(3))
def test_rate_nondecreasing_in_power(seed):
    h, psi, cfg, agc = instance(seed)
    grid = np.linspace(-20, 40, 20)
    rates = [rate_closed_form(h, psi, cfg.with_snr_db(s), agc) for s in grid]
    assert np.all(np.diff(rates) >= -1e-12)


@pytest.mark.parametrize("seed", range(3))
def test_rate_invariant_to_agc_order(seed):
    h, psi, cfg, agc = instance(seed, snr_db=8.0, n_k=1, n_m=8)
    perm = np.random.default_rng(seed).permutation(agc.m)
    assert rate_closed_form(h, psi, cfg, agc.permuted(perm)) == pytest.approx(
        rate_closed_form(h, psi, cfg, agc), abs=1e-9
    )


def test_no_overflow_large_array_high_snr():
    h, psi, cfg, agc = instance(0, snr_db=80.0, n_r=64)
    r = rate_closed_form(h, psi, cfg, agc, check=True)
    assert math.isfinite(r) and r > 0


# -- Monte Carlo ------------------------------------------------------------


def test_mc_identical_covariances_carry_no_information():
    cov = np.stack([np.diag([1.0, 2.0, 3.0])] * 4).astype(complex)
    est, se = spatial_mi_monte_carlo(cov, 20_000, np.random.default_rng(0))
    assert abs(est) <= 3 * se + 1e-12


def test_mc_well_separated_reaches_alphabet_size():
    # four orthogonal rank-one signal directions at 60 dB
    cov = np.stack([np.eye(4) + 1e6 * np.outer(e, e) for e in np.eye(4)]).astype(complex)
    est, se = spatial_mi_monte_carlo(cov, 50_000, np.random.default_rng(1))
    assert abs(est - 2.0) <= 3 * se + 1e-9
    assert est <= 2.0 + 1e-12


def _scalar_mixture_mi(s1, s2):
    """I(y; m) for y|m ~ CN(0, s_m), m uniform on {1, 2}, by 1-D quadrature over |y|^2."""

    def logdens(r, s):
        return -r / s - math.log(s)

    def integrand(r, s):
        lmix = np.logaddexp(logdens(r, s1), logdens(r, s2)) - math.log(2)
        return math.exp(logdens(r, s)) * (logdens(r, s) - lmix) / math.log(2)

    total = 0.0
    for s in (s1, s2):
        val, _ = integrate.quad(integrand, 0, np.inf, args=(s,), epsabs=1e-13, limit=200)
        total += 0.5 * val
    return total


def test_mc_matches_scalar_quadrature():
    sigma2 = 0.8
    oracle = _scalar_mixture_mi(sigma2, 4 * sigma2)
    cov = np.array([[[sigma2]], [[4 * sigma2]]], dtype=complex)
    est, se = spatial_mi_monte_carlo(cov, 200_000, np.random.default_rng(5))
    assert abs(est - oracle) <= 3 * se
    assert 0.0 < oracle < 1.0


def test_mc_estimate_within_alphabet_bounds():
    h, psi, cfg, agc = instance(4, snr_db=10.0)
    est, se = spatial_mi_monte_carlo(covariance_set(h, psi, cfg, agc), 20_000, np.random.default_rng(2))
    assert -3 * se <= est <= math.log2(agc.m) + 3 * se


def test_mc_degenerate_covariance():
    cov = np.zeros((2, 3, 3), dtype=complex)
    with pytest.raises(DegenerateCovarianceError):
        spatial_mi_monte_carlo(cov, 10, np.random.default_rng(0))


def test_mc_is_reproducible():
    h, psi, cfg, agc = instance(4)
    cov = covariance_set(h, psi, cfg, agc)
    a = spatial_mi_monte_carlo(cov, 30_001, np.random.default_rng(3))
    b = spatial_mi_monte_carlo(cov, 30_001, np.random.default_rng(3))
    assert a == b


@pytest.mark.parametrize("seed,snr_db", [(0, -10.0), (1, 0.0), (2, 10.0), (3, 20.0)])
def test_jensen_bound_below_monte_carlo(seed, snr_db):
    h, psi, cfg, agc = instance(seed, snr_db=snr_db)
    rep = rate_true_mc(h, psi, cfg, agc, 50_000, np.random.default_rng(seed))
    assert rep.apm_mi + rep.spatial_lb <= rep.r_mc + 3 * rep.r_mc_stderr


def test_true_rate_zero_power_and_single_agc():
    h, psi, cfg, agc = instance(0)
    rep = rate_true_mc(h, psi, SystemConfig(rho=0.0), agc, 10_000, np.random.default_rng(0))
    assert abs(rep.r_mc) <= 3 * rep.r_mc_stderr + 1e-12
    assert rep.r_cf == pytest.approx(0.0, abs=1e-9)

    h, psi, cfg, _ = instance(1, snr_db=3.0, n_m=4, n_rf=4)
    agc = agc_table_for(cfg)
    rep = rate_true_mc(h, psi, cfg, agc, 5_000, np.random.default_rng(0))
    assert rep.spatial_mc == pytest.approx(0.0, abs=1e-12)
    assert rep.r_mc == pytest.approx(rep.apm_mi, abs=1e-12)


def test_report_csv_row_schema():
    h, psi, cfg, agc = instance(0)
    rep = rate_true_mc(h, psi, cfg, agc, 1_000, np.random.default_rng(0))
    row = rep.to_csv_row(cfg.config_hash(), 0, 0.0)
    assert tuple(row) == RATE_CSV_COLUMNS
    assert rep.r_mc_stderr >= 0 and all(math.isfinite(v) for v in (rep.r_cf, rep.r_mc, rep.apm_mi))


def test_closed_form_from_covariances_agrees():
    h, psi, cfg, agc = instance(6, snr_db=4.0)
    cov = covariance_set(h, psi, cfg, agc)
    assert rate_closed_form_from_covariances(cov, cfg.sigma_n2) == rate_closed_form(h, psi, cfg, agc)
