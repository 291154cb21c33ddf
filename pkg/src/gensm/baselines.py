"""Reference schemes the optimized precoder is compared against."""

from __future__ import annotations

from dataclasses import replace
from typing import Literal

import numpy as np

from .model import SystemConfig, _h_array, agc_table_for
from .rate import RateReport, rate_true_mc

__all__ = [
    "waterfill",
    "waterfilling_capacity",
    "no_precoding_config",
    "baseline_rate",
    "SCHEMES",
]

SCHEMES = ("identity", "no-precoding")
_EIG_RTOL = 1e-12


def waterfill(gains, total_power: float, noise_var: float = 1.0):
    """Waterfilling over parallel channels with power gains ``gains``.

    Parameters
    ----------
    gains : array_like
        Nonnegative channel power gains (e.g. eigenvalues of H^H H).
    total_power : float
        Power budget shared across channels.
    noise_var : float
        Noise variance.

    Returns
    -------
    (powers, level) : (np.ndarray, float)
        Per-channel powers in the input order and the water level. Level is
        0 when nothing is allocated.
    """
    gains = np.asarray(gains, dtype=float)
    powers = np.zeros_like(gains)
    usable = np.flatnonzero(gains > 0)
    if total_power <= 0 or usable.size == 0:
        return powers, 0.0
    order = usable[np.argsort(gains[usable])[::-1]]
    floors = noise_var / gains[order]  # ascending
    # Active set: shrink from the weakest channel until the level clears its floor.
    for k in range(order.size, 0, -1):
        level = (total_power + floors[:k].sum()) / k
        if level > floors[k - 1]:
            break
    powers[order[:k]] = level - floors[:k]
    return powers, float(level)


def waterfilling_capacity(H, rho: float, sigma_n2: float, n_rf: int) -> float:
    """Capacity with waterfilling restricted to the n_rf strongest eigenmodes."""
    H = _h_array(H)
    ev = np.linalg.eigvalsh(H.conj().T @ H)[::-1]
    ev = ev[ev > _EIG_RTOL * max(float(ev[0]), np.finfo(float).tiny)] if ev.size else ev
    ev = ev[: min(n_rf, ev.size)]
    if ev.size == 0 or rho <= 0:
        return 0.0
    p, _ = waterfill(ev, rho, sigma_n2)
    return float(np.sum(np.log2(1.0 + p * ev / sigma_n2)))


def no_precoding_config(cfg: SystemConfig) -> SystemConfig:
    """Full antenna switching without phase shifters: n_k = 1, n_m = n_t."""
    return replace(cfg, n_k=1, n_m=cfg.n_t)


def baseline_rate(
    scheme: Literal["identity", "no-precoding"],
    H,
    cfg: SystemConfig,
    n_samples: int,
    rng: np.random.Generator,
) -> RateReport:
    """SE of a fixed (non-optimized) scheme, with psi = 0 throughout."""
    if scheme == "identity":
        c = cfg
    elif scheme == "no-precoding":
        c = no_precoding_config(cfg)
    else:
        raise ValueError(f"unknown baseline scheme {scheme!r}")
    return rate_true_mc(H, np.zeros(c.n_t), c, agc_table_for(c), n_samples, rng)
