"""Narrowband Saleh-Valenzuela channel realizations.

Uniform linear arrays at both link ends with azimuth-only response,
isotropic elements and i.i.d. CN(0, 1) path gains, so that
E{||H||_F^2} = n_t * n_r. Elevation angles are drawn and stored but do not
enter the array response.
"""

from __future__ import annotations

import json
from dataclasses import dataclass, field

import numpy as np

from .errors import DimensionError
from .model import SystemConfig, wrap_angle

__all__ = [
    "PathSet",
    "ChannelMatrix",
    "steering_vector",
    "channel_from_paths",
    "sample_channel",
    "substream",
    "channel_to_json",
    "channel_from_json",
    "CHANNEL_FORMAT",
]

CHANNEL_FORMAT = "gensm-channel/1"
DEFAULT_SPACING = 1.0  # d / lambda
CARRIER_HZ = 60e9  # metadata only


def substream(seed: int, *key: int) -> np.random.Generator:
    """Independent generator for ``(seed, key...)``.

    Realization ``k`` of a sweep uses ``substream(seed, k)``; other consumers
    append further integers so their streams never collide.
    """
    return np.random.Generator(np.random.PCG64(np.random.SeedSequence(seed, spawn_key=key)))


@dataclass(frozen=True, eq=False)
class PathSet:
    gains: np.ndarray
    aod: np.ndarray
    aoa: np.ndarray
    elev_t: np.ndarray
    elev_r: np.ndarray
    n_t: int
    n_r: int
    element_gain_t: float = 1.0
    element_gain_r: float = 1.0

    @property
    def l(self) -> int:  # noqa: E743
        return int(np.size(self.gains))

    @property
    def gamma(self) -> float:
        return float(np.sqrt(self.n_t * self.n_r / self.l))


@dataclass(frozen=True, eq=False)
class ChannelMatrix:
    h: np.ndarray = field(repr=False)

    @property
    def shape(self):
        return self.h.shape


def steering_vector(n: int, angle: float, spacing_over_lambda: float = DEFAULT_SPACING) -> np.ndarray:
    """Unit-norm ULA response ``exp(j 2 pi (d/lambda) k sin(angle)) / sqrt(n)``."""
    if n < 1:
        raise DimensionError(f"array size must be >= 1, got {n}")
    k = np.arange(n)
    return np.exp(2j * np.pi * spacing_over_lambda * k * np.sin(angle)) / np.sqrt(n)


def channel_from_paths(paths: PathSet, spacing_over_lambda: float = DEFAULT_SPACING) -> ChannelMatrix:
    """Assemble ``H = gamma * sum_l alpha_l b_r(aoa_l) b_t(aod_l)^H`` (n_r x n_t)."""
    k_t = np.arange(paths.n_t)[:, None]
    k_r = np.arange(paths.n_r)[:, None]
    b_t = np.exp(2j * np.pi * spacing_over_lambda * k_t * np.sin(paths.aod)) / np.sqrt(paths.n_t)
    b_r = np.exp(2j * np.pi * spacing_over_lambda * k_r * np.sin(paths.aoa)) / np.sqrt(paths.n_r)
    weights = paths.gamma * paths.element_gain_t * paths.element_gain_r * np.asarray(paths.gains)
    h = (b_r * weights) @ b_t.conj().T
    return ChannelMatrix(h)


def sample_channel(cfg: SystemConfig, l: int, rng: np.random.Generator):  # noqa: E741
    """Draw one (PathSet, ChannelMatrix) realization with ``l`` paths."""
    if l < 1:
        raise DimensionError(f"path count must be >= 1, got {l}")
    gains = np.sqrt(0.5) * (rng.standard_normal(l) + 1j * rng.standard_normal(l))
    aod = rng.uniform(-np.pi, np.pi, l)
    aoa = rng.uniform(-np.pi, np.pi, l)
    elev_t = rng.uniform(-np.pi / 2, np.pi / 2, l)
    elev_r = rng.uniform(-np.pi / 2, np.pi / 2, l)
    paths = PathSet(gains, wrap_angle(aod), wrap_angle(aoa), elev_t, elev_r, cfg.n_t, cfg.n_r)
    return paths, channel_from_paths(paths)


def channel_to_json(paths: PathSet, channel: ChannelMatrix, seed=None, substream_key=()) -> str:
    """Serialize a realization; floats round-trip bit-exactly."""
    h = np.asarray(channel.h)
    record = {
        "format": CHANNEL_FORMAT,
        "n_r": int(h.shape[0]),
        "n_t": int(h.shape[1]),
        "seed": seed,
        "substream": list(substream_key),
        "spacing_over_lambda": DEFAULT_SPACING,
        "carrier_hz": CARRIER_HZ,
        "gamma": paths.gamma,
        "element_gain_t": paths.element_gain_t,
        "element_gain_r": paths.element_gain_r,
        "paths": [
            {
                "gain": [float(g.real), float(g.imag)],
                "aod": float(paths.aod[i]),
                "aoa": float(paths.aoa[i]),
                "elev_t": float(paths.elev_t[i]),
                "elev_r": float(paths.elev_r[i]),
            }
            for i, g in enumerate(np.asarray(paths.gains))
        ],
        "h": [[[float(z.real), float(z.imag)] for z in row] for row in h],
    }
    return json.dumps(record, indent=1)


def channel_from_json(text: str):
    rec = json.loads(text)
    if rec.get("format") != CHANNEL_FORMAT:
        raise ValueError(f"unsupported channel record format {rec.get('format')!r}")
    p = rec["paths"]
    paths = PathSet(
        gains=np.array([complex(*q["gain"]) for q in p]),
        aod=np.array([q["aod"] for q in p]),
        aoa=np.array([q["aoa"] for q in p]),
        elev_t=np.array([q["elev_t"] for q in p]),
        elev_r=np.array([q["elev_r"] for q in p]),
        n_t=rec["n_t"],
        n_r=rec["n_r"],
        element_gain_t=rec.get("element_gain_t", 1.0),
        element_gain_r=rec.get("element_gain_r", 1.0),
    )
    h = np.array([[complex(re, im) for re, im in row] for row in rec["h"]])
    if h.shape != (rec["n_r"], rec["n_t"]):
        raise DimensionError(f"stored H has shape {h.shape}")
    return paths, ChannelMatrix(h)
