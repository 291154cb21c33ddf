"""System model for GenSM-aided mmWave MIMO.

Holds the dimensioning/power configuration, the antenna-group-combination
(AGC) alphabet with its selection matrices, the phase-shifter precoder and
the per-AGC receive covariances.

Index conventions: AGC combos are stored 1-based (as group numbers), every
array axis is 0-based. Powers and variances are linear.
"""

from __future__ import annotations

import hashlib
import json
import math
from dataclasses import asdict, dataclass, field, replace
from itertools import combinations, islice

import numpy as np

from .errors import ConfigError, DimensionError

__all__ = [
    "SystemConfig",
    "AgcTable",
    "PhaseVector",
    "TransmissionModel",
    "compute_num_agcs",
    "enumerate_agcs",
    "build_precoder_matrix",
    "effective_covariance",
    "covariance_set",
    "group_beams",
    "agc_table_for",
    "wrap_angle",
    "db_to_linear",
]


def wrap_angle(x):
    """Wrap angles into the half-open interval [-pi, pi)."""
    return np.mod(np.asarray(x, dtype=float) + np.pi, 2.0 * np.pi) - np.pi


def db_to_linear(db: float) -> float:
    return 10.0 ** (db / 10.0)


def compute_num_agcs(n_m: int, n_rf: int) -> int:
    """Number of usable AGCs, ``2 ** floor(log2(binom(n_m, n_rf)))``."""
    if n_rf < 1 or n_m < 1:
        raise DimensionError(f"n_m and n_rf must be >= 1, got n_m={n_m}, n_rf={n_rf}")
    if n_rf > n_m:
        raise DimensionError(f"n_rf={n_rf} exceeds the number of antenna groups n_m={n_m}")
    # bit_length is exact for big binomials, unlike float log2
    return 1 << (math.comb(n_m, n_rf).bit_length() - 1)


@dataclass(frozen=True)
class SystemConfig:
    """Dimensioning and power parameters of one link.

    The number of streams N_S is identified with ``n_rf``.
    """

    n_t: int = 8
    n_r: int = 8
    n_k: int = 2
    n_m: int = 4
    n_rf: int = 2
    rho: float = 1.0
    sigma_n2: float = 1.0

    def __post_init__(self):
        for name in ("n_t", "n_r", "n_k", "n_m", "n_rf"):
            v = getattr(self, name)
            if int(v) != v or v < 1:
                raise ConfigError(f"{name} must be a positive integer, got {v!r}")
        if self.n_t != self.n_k * self.n_m:
            raise ConfigError(
                f"n_t={self.n_t} must equal n_k*n_m={self.n_k * self.n_m}"
            )
        if self.n_rf > self.n_m:
            raise DimensionError(f"n_rf={self.n_rf} exceeds n_m={self.n_m}")
        if not (self.rho >= 0.0) or not math.isfinite(self.rho):
            raise ConfigError(f"rho must be finite and >= 0, got {self.rho!r}")
        if not (self.sigma_n2 > 0.0) or not math.isfinite(self.sigma_n2):
            raise ConfigError(f"sigma_n2 must be finite and > 0, got {self.sigma_n2!r}")

    @property
    def m(self) -> int:
        return compute_num_agcs(self.n_m, self.n_rf)

    @property
    def n_s(self) -> int:
        return self.n_rf

    @property
    def snr(self) -> float:
        """Linear ratio rho / sigma_n2."""
        return self.rho / self.sigma_n2

    @classmethod
    def from_snr_db(cls, snr_db: float, sigma_n2: float = 1.0, **dims) -> "SystemConfig":
        return cls(rho=sigma_n2 * db_to_linear(snr_db), sigma_n2=sigma_n2, **dims)

    def with_snr_db(self, snr_db: float) -> "SystemConfig":
        return replace(self, rho=self.sigma_n2 * db_to_linear(snr_db))

    def with_grouping(self, n_k: int, n_m: int) -> "SystemConfig":
        return replace(self, n_k=n_k, n_m=n_m)

    def to_dict(self) -> dict:
        return asdict(self)

    def config_hash(self) -> str:
        blob = json.dumps(self.to_dict(), sort_keys=True).encode()
        return hashlib.sha256(blob).hexdigest()[:12]


@dataclass(frozen=True, eq=False)
class AgcTable:
    """The M antenna-group combinations and their selection matrices.

    Attributes
    ----------
    combos : tuple of tuple of int
        1-based, strictly increasing antenna-group indices per AGC.
    selection_matrices : np.ndarray
        Shape (M, n_t, n_rf), binary ``C_m``.
    """

    n_k: int
    n_m: int
    combos: tuple
    selection_matrices: np.ndarray = field(repr=False)

    @property
    def m(self) -> int:
        return len(self.combos)

    @property
    def n_t(self) -> int:
        return self.n_k * self.n_m

    @property
    def n_rf(self) -> int:
        return len(self.combos[0])

    @property
    def active_groups(self) -> np.ndarray:
        """(M, n_m) 0/1 array marking the antenna groups active in each AGC."""
        out = np.zeros((self.m, self.n_m))
        for i, combo in enumerate(self.combos):
            out[i, [u - 1 for u in combo]] = 1.0
        return out

    def products(self) -> np.ndarray:
        """``D_m = C_m C_m^H``, block diagonal with all-ones n_k x n_k blocks."""
        c = self.selection_matrices
        return c @ np.swapaxes(c, -1, -2)

    def permuted(self, order) -> "AgcTable":
        order = list(order)
        return AgcTable(
            self.n_k,
            self.n_m,
            tuple(self.combos[i] for i in order),
            self.selection_matrices[order],
        )

    def __eq__(self, other):
        if not isinstance(other, AgcTable):
            return NotImplemented
        return (
            self.n_k == other.n_k
            and self.n_m == other.n_m
            and self.combos == other.combos
            and np.array_equal(self.selection_matrices, other.selection_matrices)
        )

    __hash__ = None


def _selection_matrix(combo, n_k: int, n_m: int) -> np.ndarray:
    c = np.zeros((n_k * n_m, len(combo)))
    for j, u in enumerate(combo):
        c[(u - 1) * n_k : u * n_k, j] = 1.0
    return c


def enumerate_agcs(n_m: int, n_rf: int, n_k: int = 1) -> AgcTable:
    """First M combinations of ``n_rf`` out of ``n_m`` groups, lexicographic."""
    m = compute_num_agcs(n_m, n_rf)
    if n_k < 1:
        raise DimensionError(f"n_k must be >= 1, got {n_k}")
    combos = tuple(islice(combinations(range(1, n_m + 1), n_rf), m))
    mats = np.stack([_selection_matrix(c, n_k, n_m) for c in combos])
    mats.setflags(write=False)
    return AgcTable(n_k, n_m, combos, mats)


def agc_table_for(cfg: SystemConfig) -> AgcTable:
    return enumerate_agcs(cfg.n_m, cfg.n_rf, cfg.n_k)


@dataclass(frozen=True, eq=False)
class PhaseVector:
    """Phase-shifter angles, canonicalized into [-pi, pi)."""

    psi: np.ndarray

    def __post_init__(self):
        psi = wrap_angle(np.array(self.psi, dtype=float).reshape(-1))
        psi.setflags(write=False)
        object.__setattr__(self, "psi", psi)

    @classmethod
    def zeros(cls, n_t: int) -> "PhaseVector":
        return cls(np.zeros(n_t))

    @property
    def n_t(self) -> int:
        return self.psi.size

    def diagonal(self, n_k: int) -> np.ndarray:
        return np.exp(1j * self.psi) / np.sqrt(n_k)

    def matrix(self, n_k: int) -> np.ndarray:
        return build_precoder_matrix(self, n_k)

    def __eq__(self, other):
        if not isinstance(other, PhaseVector):
            return NotImplemented
        return np.array_equal(self.psi, other.psi)

    __hash__ = None


def _psi_array(psi) -> np.ndarray:
    if isinstance(psi, PhaseVector):
        return psi.psi
    return np.asarray(psi, dtype=float).reshape(-1)


def _h_array(h) -> np.ndarray:
    return np.asarray(getattr(h, "h", h), dtype=complex)


def build_precoder_matrix(psi, n_k: int) -> np.ndarray:
    """Diagonal analog precoder ``diag(exp(j psi)) / sqrt(n_k)``."""
    return np.diag(np.exp(1j * _psi_array(psi)) / np.sqrt(n_k))


def effective_covariance(H, A, C_m, cfg: SystemConfig) -> np.ndarray:
    """Receive covariance ``sigma^2 I + rho/N_S H A C_m C_m^H A^H H^H`` for one AGC."""
    H = _h_array(H)
    if H.shape != (cfg.n_r, cfg.n_t):
        raise DimensionError(f"H has shape {H.shape}, expected {(cfg.n_r, cfg.n_t)}")
    g = H @ np.asarray(A) @ np.asarray(C_m)
    sigma = cfg.sigma_n2 * np.eye(cfg.n_r) + (cfg.rho / cfg.n_s) * (g @ g.conj().T)
    return 0.5 * (sigma + sigma.conj().T)


def covariance_set(H, psi, cfg: SystemConfig, agc: AgcTable) -> np.ndarray:
    """All M receive covariances stacked as an (M, n_r, n_r) array.

    Works on the per-group beams ``H A 1_g`` rather than the full matrix
    products; agrees with :func:`effective_covariance`.
    """
    H = _h_array(H)
    psi = _psi_array(psi)
    _check_dims(H, psi, cfg, agc)
    beams = group_beams(H, psi, cfg.n_k)
    sig = np.einsum("rg,mg,sg->mrs", beams, agc.active_groups, beams.conj())
    sig *= cfg.rho / cfg.n_s
    sig += cfg.sigma_n2 * np.eye(cfg.n_r)
    return 0.5 * (sig + np.conj(np.swapaxes(sig, -1, -2)))


def group_beams(H: np.ndarray, psi: np.ndarray, n_k: int) -> np.ndarray:
    """Columns ``H A 1_g`` for every antenna group g, shape (n_r, n_m)."""
    ha = H * (np.exp(1j * psi) / np.sqrt(n_k))
    return ha.reshape(H.shape[0], -1, n_k).sum(axis=2)


def _check_dims(H: np.ndarray, psi: np.ndarray, cfg: SystemConfig, agc: AgcTable):
    if H.shape != (cfg.n_r, cfg.n_t):
        raise DimensionError(f"H has shape {H.shape}, expected {(cfg.n_r, cfg.n_t)}")
    if psi.size != cfg.n_t:
        raise DimensionError(f"psi has {psi.size} entries, expected {cfg.n_t}")
    if agc.n_t != cfg.n_t or agc.n_rf != cfg.n_rf or agc.n_k != cfg.n_k:
        raise DimensionError("AGC table does not match the system configuration")


@dataclass(frozen=True)
class TransmissionModel:
    """One link instance: channel, precoder, configuration and AGC table."""

    channel: object
    precoder: PhaseVector
    config: SystemConfig
    agc: AgcTable

    def __post_init__(self):
        _check_dims(_h_array(self.channel), _psi_array(self.precoder), self.config, self.agc)

    @property
    def h(self) -> np.ndarray:
        return _h_array(self.channel)

    def covariances(self) -> np.ndarray:
        return covariance_set(self.h, self.precoder, self.config, self.agc)

    def transmit(self, rng: np.random.Generator, n: int):
        """Draw ``n`` received vectors ``y = sqrt(rho) H A C_m x + noise``.

        Returns (agc_indices, x, y) with shapes (n,), (n, n_rf), (n, n_r).
        """
        cfg = self.config
        m_idx = rng.integers(0, self.agc.m, size=n)
        x = _cn(rng, (n, cfg.n_rf), 1.0 / cfg.n_rf)
        noise = _cn(rng, (n, cfg.n_r), cfg.sigma_n2)
        hac = self.h @ self.precoder.matrix(cfg.n_k) @ self.agc.selection_matrices
        y = np.sqrt(cfg.rho) * np.einsum("nrk,nk->nr", hac[m_idx], x) + noise
        return m_idx, x, y


def _cn(rng: np.random.Generator, shape, var: float) -> np.ndarray:
    return np.sqrt(var / 2.0) * (rng.standard_normal(shape) + 1j * rng.standard_normal(shape))
