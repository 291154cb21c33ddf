"""Analog (phase-shifter) precoder design maximizing the closed-form SE.

The precoder is ``A = diag(exp(j psi)) / sqrt(n_k)``. Both gradients return
only the diagonal of the conjugate (Wirtinger) gradient dR_CF/dA*, since the
diagonal constraint on A makes the off-diagonal entries irrelevant.

With ``B_mt = I + (rho_s / 2) H A (D_m + D_t) A^H H^H`` and
``rho_s = rho / (sigma^2 N_S)``, the full gradient is::

    rho_s log2(e) / (2M) * sum_m sum_t w_mt H^H B_mt^{-1} H A (D_m + D_t)

    w_mt = |B_mt|^{-1} / sum_t' |B_mt'|^{-1}

i.e. the normalizing sum runs over the second index with the first fixed at
the outer index m. This pairing is the one whose diagonal agrees with finite
differences of R_CF (see tests/test_precoder.py).
"""

from __future__ import annotations

import json
import math
from dataclasses import asdict, dataclass, field
from typing import Literal

import numpy as np
from scipy.special import softmax

from .errors import ConfigError, NumericalDomainError, RankDeficientError
from .model import (
    AgcTable,
    PhaseVector,
    SystemConfig,
    _check_dims,
    _h_array,
    _psi_array,
    group_beams,
    wrap_angle,
)
from .rate import LOG2E, _cholesky, rate_closed_form

__all__ = [
    "OptimizerOptions",
    "IterationRecord",
    "OptimizerTrace",
    "gradient_full",
    "gradient_reduced",
    "phase_gradient",
    "phase_update",
    "phase_residual",
    "optimize",
    "TRACE_CSV_COLUMNS",
]

ZERO_GRADIENT = 1e-14
RANK_RTOL = 1e-10


def gradient_full(H, psi, cfg: SystemConfig, agc: AgcTable) -> np.ndarray:
    """Diagonal of the exact conjugate gradient of R_CF; O(M^2 n_r^3)."""
    H = _h_array(H)
    psi = _psi_array(psi)
    _check_dims(H, psi, cfg, agc)
    n_r, m = cfg.n_r, agc.m
    rho_s = cfg.rho / (cfg.sigma_n2 * cfg.n_s)
    if rho_s == 0.0:
        return np.zeros(cfg.n_t, dtype=complex)

    beams = group_beams(H, psi, cfg.n_k)  # H A 1_g, (n_r, n_m)
    act = agc.active_groups
    pair = act[:, None, :] + act[None, :, :]  # block weights of D_m + D_t, (M, M, n_m)
    b = np.einsum("rg,mtg,sg->mtrs", beams, pair, beams.conj()) * (rho_s / 2.0)
    b += np.eye(n_r)
    chol = _cholesky(b)
    logdet = 2.0 * np.sum(np.log(np.real(np.diagonal(chol, axis1=-2, axis2=-1))), axis=-1)
    weights = softmax(-logdet, axis=1)

    # diag(H^H B^{-1} H A (D_m + D_t))_n = pair[g(n)] * h_n^H B^{-1} (H A 1_{g(n)})
    rhs = np.concatenate([H, beams], axis=1)
    sol = np.linalg.solve(chol, np.broadcast_to(rhs, (m, m) + rhs.shape))
    v, u = sol[..., : cfg.n_t], sol[..., cfg.n_t :]
    inner = np.sum(v.conj() * np.repeat(u, cfg.n_k, axis=-1), axis=-2)
    g = np.einsum("mt,mtn,mtn->n", weights, np.repeat(pair, cfg.n_k, axis=-1), inner)
    return (rho_s * LOG2E / (2.0 * m)) * g


def gradient_reduced(H, psi, cfg: SystemConfig, agc: AgcTable) -> np.ndarray:
    """High-SNR approximation of the conjugate-gradient diagonal; O(M n_rf^3).

    ``log2(e)/M * sum_m diag(H^H H A C_m (C_m^H A^H H^H H A C_m)^{-1} C_m^H)``.

    Raises
    ------
    RankDeficientError
        If some ``C_m^H A^H H^H H A C_m`` is singular (e.g. rank(H) < n_rf).
    """
    H = _h_array(H)
    psi = _psi_array(psi)
    _check_dims(H, psi, cfg, agc)
    a = np.exp(1j * psi) / np.sqrt(cfg.n_k)
    c = agc.selection_matrices
    gram = H.conj().T @ H
    p = np.einsum("ij,j,mjk->mik", gram, a, c)  # H^H H A C_m
    k = np.einsum("mjk,j,mjl->mkl", c, a.conj(), p)  # C_m^H A^H H^H H A C_m
    k = 0.5 * (k + np.conj(np.swapaxes(k, -1, -2)))

    ev = np.linalg.eigvalsh(k)
    scale = max(float(np.max(np.abs(ev))), np.finfo(float).tiny)
    bad = np.flatnonzero(ev[:, 0] <= RANK_RTOL * scale)
    if bad.size:
        raise RankDeficientError(int(bad[0]))

    # K Hermitian: P K^{-1} = (K^{-1} P^H)^H
    q = np.linalg.solve(k, np.conj(np.swapaxes(p, -1, -2)))
    g = np.einsum("mkn,mnk->n", q.conj(), c)
    return (LOG2E / agc.m) * g


def phase_gradient(grad_diag: np.ndarray, psi, n_k: int) -> np.ndarray:
    """dR/dpsi_n = 2 Im(g_n conj(A_nn)) from the conjugate-gradient diagonal."""
    a = np.exp(1j * _psi_array(psi)) / np.sqrt(n_k)
    return 2.0 * np.imag(np.asarray(grad_diag) * np.conj(a))


def phase_update(grad_diag: np.ndarray, psi) -> np.ndarray:
    """New phases ``angle(grad)``; entries with a vanishing gradient keep their phase."""
    psi = _psi_array(psi)
    g = np.asarray(grad_diag)
    return np.where(np.abs(g) < ZERO_GRADIENT, psi, wrap_angle(np.angle(g)))


def phase_residual(grad_diag: np.ndarray, psi) -> float:
    """Inf-norm of the wrapped gap between the precoder and gradient phases."""
    psi = _psi_array(psi)
    return float(np.max(np.abs(wrap_angle(phase_update(grad_diag, psi) - psi))))


@dataclass(frozen=True)
class OptimizerOptions:
    t_max: int = 50
    tol_rate: float = 1e-6
    tol_phase: float = 1e-4
    gradient_kind: Literal["full", "reduced"] = "full"
    init_kind: Literal["identity", "random"] = "identity"
    restarts: int = 1
    fallback_full: bool = True

    def __post_init__(self):
        if self.t_max < 1:
            raise ConfigError(f"t_max must be >= 1, got {self.t_max}")
        if not (self.tol_rate > 0 and self.tol_phase > 0):
            raise ConfigError("tolerances must be positive")
        if self.restarts < 1:
            raise ConfigError(f"restarts must be >= 1, got {self.restarts}")
        if self.gradient_kind not in ("full", "reduced"):
            raise ConfigError(f"unknown gradient kind {self.gradient_kind!r}")
        if self.init_kind not in ("identity", "random"):
            raise ConfigError(f"unknown init kind {self.init_kind!r}")


@dataclass(frozen=True)
class IterationRecord:
    restart: int
    iteration: int
    r_cf: float
    phase_residual: float


TRACE_CSV_COLUMNS = (
    "gradient_kind",
    "best_r_cf",
    "initial_r_cf",
    "converged",
    "iterations",
    "restarts",
    "fallbacks",
)


@dataclass
class OptimizerTrace:
    gradient_kind: str
    records: list = field(default_factory=list)
    best_psi: PhaseVector | None = None
    best_r_cf: float = -math.inf
    converged: bool = False
    fallbacks: int = 0
    best_restart: int = 0

    @property
    def initial_r_cf(self) -> float:
        return self.records[0].r_cf

    @property
    def iterations(self) -> int:
        return len(self.records)

    def to_dict(self) -> dict:
        return {
            "gradient_kind": self.gradient_kind,
            "best_r_cf": self.best_r_cf,
            "converged": self.converged,
            "fallbacks": self.fallbacks,
            "best_restart": self.best_restart,
            "best_psi": [float(v) for v in self.best_psi.psi],
            "records": [asdict(r) for r in self.records],
        }

    def to_json(self) -> str:
        return json.dumps(self.to_dict(), indent=1)

    def summary_row(self) -> dict:
        return {
            "gradient_kind": self.gradient_kind,
            "best_r_cf": self.best_r_cf,
            "initial_r_cf": self.initial_r_cf,
            "converged": int(self.converged),
            "iterations": self.iterations,
            "restarts": 1 + max(r.restart for r in self.records),
            "fallbacks": self.fallbacks,
        }


def _gradient(kind: str, H, psi, cfg, agc, fallback: bool, trace: OptimizerTrace):
    if kind == "full":
        return gradient_full(H, psi, cfg, agc)
    try:
        return gradient_reduced(H, psi, cfg, agc)
    except RankDeficientError:
        if not fallback:
            raise
        trace.fallbacks += 1
        return gradient_full(H, psi, cfg, agc)


def optimize(
    H,
    cfg: SystemConfig,
    agc: AgcTable,
    opts: OptimizerOptions | None = None,
    rng: np.random.Generator | None = None,
) -> OptimizerTrace:
    """Fixed-point phase iteration ``psi <- angle(diag(grad))``.

    Each step evaluates R_CF and the phase residual at the current iterate.
    Stops after ``t_max`` updates, or once a step moves every phase by less
    than ``tol_phase`` and R_CF by less than ``tol_rate``. The iteration is
    not monotone, so the best iterate over all restarts is returned.
    Restart 0 uses ``init_kind``; later restarts draw uniform phases from
    ``rng``.
    """
    opts = opts or OptimizerOptions()
    H = _h_array(H)
    trace = OptimizerTrace(gradient_kind=opts.gradient_kind)
    for restart in range(opts.restarts):
        if restart == 0 and opts.init_kind == "identity":
            psi = np.zeros(cfg.n_t)
        else:
            if rng is None:
                raise ConfigError("random initialization needs an rng")
            psi = rng.uniform(-np.pi, np.pi, cfg.n_t)
        psi = PhaseVector(psi).psi
        r_prev = math.nan
        converged = False
        for t in range(opts.t_max + 1):
            r = rate_closed_form(H, psi, cfg, agc)
            if not math.isfinite(r):
                raise NumericalDomainError(f"non-finite R_CF at iteration {t}")
            g = _gradient(opts.gradient_kind, H, psi, cfg, agc, opts.fallback_full, trace)
            new_psi = phase_update(g, psi)
            res = float(np.max(np.abs(wrap_angle(new_psi - psi))))
            trace.records.append(IterationRecord(restart, t, r, res))
            if r > trace.best_r_cf:
                trace.best_r_cf = r
                trace.best_psi = PhaseVector(psi)
                trace.best_restart = restart
            if t > 0 and res < opts.tol_phase and abs(r - r_prev) < opts.tol_rate:
                converged = True
                break
            psi, r_prev = new_psi, r
        if trace.best_restart == restart:
            trace.converged = converged
    return trace
