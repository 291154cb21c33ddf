"""Spectral efficiency of GenSM: closed-form approximation and Monte-Carlo truth.

The achievable rate splits into an APM part (Gaussian-input capacity given
the active AGC) and a spatial part, the mutual information between the
received vector and the AGC index. The receive vector given AGC m is
CN(0, Sigma_m), so the spatial part is the MI of a zero-mean Gaussian
mixture. Everything is evaluated with Cholesky log-determinants and
log-sum-exp so that high SNR and large n_r do not overflow.
"""

from __future__ import annotations

import math
from dataclasses import asdict, dataclass

import numpy as np
from scipy.special import logsumexp

from .errors import DegenerateCovarianceError, NumericalDomainError
from .model import AgcTable, SystemConfig, covariance_set

__all__ = [
    "RateReport",
    "RATE_CSV_COLUMNS",
    "logdet_hpd",
    "apm_mi",
    "spatial_mi_lower_bound",
    "rate_closed_form",
    "rate_closed_form_from_covariances",
    "spatial_mi_monte_carlo",
    "rate_true_mc",
    "bias_shift",
]

LOG2E = math.log2(math.e)
LN2 = math.log(2.0)
DEFAULT_MC_SAMPLES = 100_000
_MC_CHUNK = 25_000

RATE_CSV_COLUMNS = (
    "config_hash",
    "seed",
    "snr_db",
    "r_cf",
    "apm_mi",
    "spatial_lb",
    "r_mc",
    "r_mc_stderr",
    "n_samples",
)


@dataclass(frozen=True)
class RateReport:
    """Rates in bits/s/Hz for one channel/precoder instance."""

    r_cf: float
    apm_mi: float
    spatial_lb: float
    r_mc: float
    r_mc_stderr: float
    n_samples: int
    spatial_mc: float = float("nan")

    def to_csv_row(self, config_hash: str, seed, snr_db: float) -> dict:
        row = {"config_hash": config_hash, "seed": seed, "snr_db": snr_db}
        d = asdict(self)
        row.update({k: d[k] for k in RATE_CSV_COLUMNS if k in d})
        return row


def bias_shift(n_r: int) -> float:
    """Asymptotic offset ``n_r * log2(2/e)`` of the spatial lower bound.

    The bound sits this far from I(y; m) at both SNR extremes, so
    ``R_CF = apm_mi + spatial_mi_lower_bound - bias_shift``.
    """
    return n_r * math.log2(2.0 / math.e)


def _hermitize(s: np.ndarray) -> np.ndarray:
    return 0.5 * (s + np.conj(np.swapaxes(s, -1, -2)))


def _cholesky(s: np.ndarray, exc=NumericalDomainError) -> np.ndarray:
    s = _hermitize(np.asarray(s, dtype=complex))
    try:
        chol = np.linalg.cholesky(s)
    except np.linalg.LinAlgError as err:
        raise exc("covariance is not Hermitian positive definite") from err
    if not np.all(np.isfinite(chol)):
        raise exc("covariance factorization produced non-finite values")
    return chol


def logdet_hpd(s: np.ndarray) -> np.ndarray:
    """Natural log-determinant of (a stack of) Hermitian PD matrices."""
    chol = _cholesky(s)
    return 2.0 * np.sum(np.log(np.real(np.diagonal(chol, axis1=-2, axis2=-1))), axis=-1)


def apm_mi(covariances: np.ndarray, sigma_n2: float) -> float:
    """APM-domain MI ``(1/M) sum_m log2 |Sigma_m / sigma^2|``."""
    cov = np.asarray(covariances)
    n_r = cov.shape[-1]
    ld = logdet_hpd(cov) - n_r * math.log(sigma_n2)
    return float(np.mean(ld) / LN2)


def _pair_logdets(cov: np.ndarray):
    """log|Sigma_n| (M,) and log|Sigma_n + Sigma_t| (M, M)."""
    ld = logdet_hpd(cov)
    pair = logdet_hpd(cov[:, None, :, :] + cov[None, :, :, :])
    return ld, pair


def spatial_mi_lower_bound(covariances: np.ndarray) -> float:
    """Jensen lower bound on I(y; m), before the bias shift.

    ``log2(M / e^{n_r}) - (1/M) sum_n log2 sum_t |Sigma_n| / |Sigma_n + Sigma_t|``.
    """
    cov = np.asarray(covariances)
    m, n_r = cov.shape[0], cov.shape[-1]
    ld, pair = _pair_logdets(cov)
    inner = logsumexp(ld[:, None] - pair, axis=1)
    return float((math.log(m) - n_r - np.mean(inner)) / LN2)


def rate_closed_form_from_covariances(covariances: np.ndarray, sigma_n2: float) -> float:
    """Closed-form SE from a covariance set; see :func:`rate_closed_form`."""
    cov = np.asarray(covariances)
    m, n_r = cov.shape[0], cov.shape[-1]
    _, pair = _pair_logdets(cov)
    log_num = n_r * math.log(2.0 * sigma_n2) - math.log(m)
    inner = logsumexp(log_num - pair, axis=1)
    return float(-np.mean(inner) / LN2)


def rate_closed_form(H, psi, cfg: SystemConfig, agc: AgcTable, check: bool = False) -> float:
    """Closed-form SE approximation R_CF in bits/s/Hz.

    ``-(1/M) sum_n log2 sum_t ((2 sigma^2)^{n_r} / M) / |Sigma_n + Sigma_t|``.
    With ``check=True`` the value is cross-checked against
    ``apm_mi + spatial_mi_lower_bound - n_r log2(2/e)``.
    """
    cov = covariance_set(H, psi, cfg, agc)
    r = rate_closed_form_from_covariances(cov, cfg.sigma_n2)
    if check:
        alt = apm_mi(cov, cfg.sigma_n2) + spatial_mi_lower_bound(cov) - bias_shift(cfg.n_r)
        if not math.isclose(r, alt, rel_tol=1e-9, abs_tol=1e-9):
            raise NumericalDomainError(f"R_CF shift identity violated: {r!r} vs {alt!r}")
    return r


def spatial_mi_monte_carlo(covariances: np.ndarray, n_samples: int, rng: np.random.Generator):
    """Monte-Carlo estimate of I(y; m) in bits with its standard error.

    Draws m uniformly and y ~ CN(0, Sigma_m), then averages
    ``log2 P(y|m) - log2((1/M) sum_t P(y|t))``.
    """
    if n_samples < 1:
        raise ValueError(f"n_samples must be >= 1, got {n_samples}")
    cov = np.asarray(covariances, dtype=complex)
    m, n_r = cov.shape[0], cov.shape[-1]
    chol = _cholesky(cov, DegenerateCovarianceError)
    half_ld = np.sum(np.log(np.real(np.diagonal(chol, axis1=-2, axis2=-1))), axis=-1)
    inv_chol = np.linalg.inv(chol)

    values = np.empty(n_samples)
    done = 0
    while done < n_samples:
        n = min(_MC_CHUNK, n_samples - done)
        idx = rng.integers(0, m, size=n)
        w = np.sqrt(0.5) * (rng.standard_normal((n, n_r)) + 1j * rng.standard_normal((n, n_r)))
        y = np.empty_like(w)
        for t in range(m):
            sel = idx == t
            y[sel] = w[sel] @ chol[t].T
        # log CN(y; 0, Sigma_t) up to the common -n_r log(pi)
        loglik = np.empty((n, m))
        for t in range(m):
            z = y @ inv_chol[t].T
            loglik[:, t] = -2.0 * half_ld[t] - np.einsum("ij,ij->i", z.real, z.real) - np.einsum(
                "ij,ij->i", z.imag, z.imag
            )
        own = loglik[np.arange(n), idx]
        values[done : done + n] = (own - logsumexp(loglik, axis=1) + math.log(m)) / LN2
        done += n

    est = float(np.mean(values))
    stderr = float(np.std(values, ddof=1) / math.sqrt(n_samples)) if n_samples > 1 else 0.0
    return est, stderr


def rate_true_mc(
    H,
    psi,
    cfg: SystemConfig,
    agc: AgcTable,
    n_samples: int = DEFAULT_MC_SAMPLES,
    rng: np.random.Generator | None = None,
) -> RateReport:
    """Exact APM MI plus a Monte-Carlo spatial MI, with the closed form alongside."""
    if rng is None:
        rng = np.random.default_rng()
    cov = covariance_set(H, psi, cfg, agc)
    apm = apm_mi(cov, cfg.sigma_n2)
    lb = spatial_mi_lower_bound(cov)
    r_cf = rate_closed_form_from_covariances(cov, cfg.sigma_n2)
    spatial, stderr = spatial_mi_monte_carlo(cov, n_samples, rng)
    return RateReport(
        r_cf=r_cf,
        apm_mi=apm,
        spatial_lb=lb,
        r_mc=apm + spatial,
        r_mc_stderr=stderr,
        n_samples=int(n_samples),
        spatial_mc=spatial,
    )
