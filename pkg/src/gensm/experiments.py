"""Sweep drivers for the approximation-accuracy, SE-comparison and
parameter-selection experiments.

Every experiment is a pure function of its :class:`ExperimentSpec`. Channel
realization ``k`` always comes from ``substream(seed, k)`` so all schemes,
SNR points and groupings see the same channels; Monte-Carlo and restart
draws use longer keys that never collide with it. Work is split per
channel and gathered in channel order, so ``workers`` never changes the
output.
"""

from __future__ import annotations

import csv
import io
import json
import math
import os
import platform
import time
from concurrent.futures import ProcessPoolExecutor
from dataclasses import asdict, dataclass, field, fields, replace
from functools import partial
from pathlib import Path

import numpy as np
import scipy

from .baselines import baseline_rate, waterfilling_capacity
from .channel import sample_channel, substream
from .errors import ConfigError
from .model import SystemConfig, agc_table_for
from .precoder import OptimizerOptions, optimize
from .rate import DEFAULT_MC_SAMPLES, rate_true_mc

__all__ = [
    "EXPERIMENTS",
    "ExperimentSpec",
    "default_spec",
    "spec_from_dict",
    "load_spec",
    "run_approx_accuracy",
    "run_se_compare",
    "run_param_select",
    "run_experiment",
    "write_outputs",
    "to_csv",
    "APPROX_COLUMNS",
    "SE_COLUMNS",
    "PARAM_COLUMNS",
]

EXPERIMENTS = ("approx-accuracy", "se-compare", "param-select")

STREAM_MC = 1
STREAM_RESTART = 2

APPROX_COLUMNS = ("n_r", "snr_db", "r_cf_mean", "r_mc_mean", "r_mc_stderr_mean", "n_channels")
SE_SCHEMES = ("proposed_full", "proposed_reduced", "identity", "no_precoding")
SE_COLUMNS = (
    ("n_r", "snr_db", "n_channels")
    + SE_SCHEMES
    + ("waterfilling",)
    + tuple(f"{s}_cf" for s in SE_SCHEMES)
    + ("reduced_fallbacks",)
)
PARAM_COLUMNS = ("n_r", "snr_db", "n_k", "n_m", "r_cf_mean", "n_channels", "is_best")

_SNR_SWEEP = (-10.0, -5.0, 0.0, 5.0, 10.0)


@dataclass(frozen=True)
class ExperimentSpec:
    experiment: str
    system: SystemConfig = field(default_factory=SystemConfig)
    snr_db: tuple = _SNR_SWEEP
    n_r: tuple = (8,)
    channels: int = 500
    mc_samples: int = DEFAULT_MC_SAMPLES
    seed: int = 0
    n_paths: int = 5
    optimizer: OptimizerOptions = field(default_factory=OptimizerOptions)
    out: str = "results"
    workers: int = 1

    def __post_init__(self):
        if self.experiment not in EXPERIMENTS:
            raise ConfigError(f"unknown experiment {self.experiment!r}")
        if not self.snr_db:
            raise ConfigError("snr grid must be nonempty")
        if any(math.isnan(s) or s == math.inf for s in self.snr_db):
            raise ConfigError(f"invalid SNR value in {self.snr_db}")
        if not self.n_r or any(int(n) != n or n < 1 for n in self.n_r):
            raise ConfigError(f"invalid receive-antenna list {self.n_r}")
        if self.channels < 1:
            raise ConfigError("channel count must be >= 1")
        if self.mc_samples < 1:
            raise ConfigError("mc sample budget must be >= 1")
        if self.n_paths < 1:
            raise ConfigError("path count must be >= 1")
        if self.workers < 1:
            raise ConfigError("workers must be >= 1")
        if not 0 <= self.seed < 2**64:
            raise ConfigError("seed must fit in an unsigned 64-bit integer")
        for n_r in self.n_r:
            replace(self.system, n_r=int(n_r))  # validates
        if self.experiment == "param-select" and not _groupings(self.system):
            raise ConfigError("no (n_k, n_m) grouping admits n_rf")

    def to_dict(self) -> dict:
        d = asdict(self)
        d["system"] = {k: v for k, v in d["system"].items() if k not in ("rho", "sigma_n2")}
        d["snr_db"] = list(self.snr_db)
        d["n_r"] = list(self.n_r)
        return d


def default_spec(experiment: str, **overrides) -> ExperimentSpec:
    """Reference defaults for each experiment at desk scale."""
    base = {"experiment": experiment}
    if experiment == "approx-accuracy":
        base.update(n_r=(2, 4, 8))
    elif experiment == "param-select":
        base.update(system=SystemConfig(n_rf=1), n_r=(4, 6, 8), snr_db=(3.0, 6.0, 10.0))
    base.update(overrides)
    return ExperimentSpec(**base)


def spec_from_dict(d: dict, **overrides) -> ExperimentSpec:
    """Build a spec from the JSON schema; keyword overrides win over ``d``."""
    d = dict(d)
    known = {f.name for f in fields(ExperimentSpec)}
    unknown = set(d) - known
    if unknown:
        raise ConfigError(f"unknown config keys: {sorted(unknown)}")
    if "experiment" not in d and "experiment" not in overrides:
        raise ConfigError("config lacks 'experiment'")
    d.update({k: v for k, v in overrides.items() if v is not None})
    experiment = d.pop("experiment")
    try:
        if isinstance(d.get("system"), dict):
            d["system"] = SystemConfig(**d["system"])
        if isinstance(d.get("optimizer"), dict):
            d["optimizer"] = OptimizerOptions(**d["optimizer"])
    except TypeError as err:
        raise ConfigError(str(err)) from err
    for key in ("snr_db", "n_r"):
        if key in d:
            d[key] = tuple(float(v) if key == "snr_db" else int(v) for v in d[key])
    return default_spec(experiment, **d)


def load_spec(path, **overrides) -> ExperimentSpec:
    try:
        data = json.loads(Path(path).read_text())
    except (OSError, json.JSONDecodeError) as err:
        raise ConfigError(f"cannot read config {path}: {err}") from err
    if not isinstance(data, dict):
        raise ConfigError("config root must be a JSON object")
    return spec_from_dict(data, **overrides)


def _map(fn, items, workers: int):
    items = list(items)
    if workers <= 1 or len(items) <= 1:
        return [fn(x) for x in items]
    with ProcessPoolExecutor(max_workers=workers) as pool:
        return list(pool.map(fn, items, chunksize=max(1, len(items) // (4 * workers))))


def _channel(spec: ExperimentSpec, cfg: SystemConfig, k: int) -> np.ndarray:
    _, ch = sample_channel(cfg, spec.n_paths, substream(spec.seed, k))
    return ch.h


# -- approx-accuracy ------------------------------------------------------


def _approx_one(spec: ExperimentSpec, task):
    n_r, k = task
    base = replace(spec.system, n_r=n_r)
    agc = agc_table_for(base)
    h = _channel(spec, base, k)
    out = []
    for i, snr in enumerate(spec.snr_db):
        cfg = base.with_snr_db(snr)
        rep = rate_true_mc(
            h, np.zeros(cfg.n_t), cfg, agc, spec.mc_samples,
            substream(spec.seed, k, STREAM_MC, n_r, i),
        )
        out.append((rep.r_cf, rep.r_mc, rep.r_mc_stderr))
    return out


def run_approx_accuracy(spec: ExperimentSpec) -> list[dict]:
    """Closed form vs Monte-Carlo SE with the trivial precoder, per (n_r, SNR)."""
    rows = []
    for n_r in spec.n_r:
        tasks = [(int(n_r), k) for k in range(spec.channels)]
        res = np.array(_map(partial(_approx_one, spec), tasks, spec.workers))
        for i, snr in enumerate(spec.snr_db):
            rows.append({
                "n_r": int(n_r),
                "snr_db": float(snr),
                "r_cf_mean": float(np.mean(res[:, i, 0])),
                "r_mc_mean": float(np.mean(res[:, i, 1])),
                "r_mc_stderr_mean": float(np.mean(res[:, i, 2])),
                "n_channels": spec.channels,
            })
    return rows


# -- se-compare -----------------------------------------------------------


def _se_one(spec: ExperimentSpec, task):
    n_r, k = task
    base = replace(spec.system, n_r=n_r)
    agc = agc_table_for(base)
    h = _channel(spec, base, k)
    out = []
    for i, snr in enumerate(spec.snr_db):
        cfg = base.with_snr_db(snr)
        row = {}
        for j, kind in enumerate(("full", "reduced")):
            opts = replace(spec.optimizer, gradient_kind=kind)
            tr = optimize(h, cfg, agc, opts, substream(spec.seed, k, STREAM_RESTART, i, j))
            rep = rate_true_mc(
                h, tr.best_psi, cfg, agc, spec.mc_samples, substream(spec.seed, k, STREAM_MC, i, j)
            )
            row[f"proposed_{kind}"] = rep.r_mc
            row[f"proposed_{kind}_cf"] = rep.r_cf
            if kind == "reduced":
                row["reduced_fallbacks"] = int(tr.fallbacks > 0)
        for j, (name, scheme) in enumerate((("identity", "identity"), ("no_precoding", "no-precoding")), 2):
            rep = baseline_rate(scheme, h, cfg, spec.mc_samples, substream(spec.seed, k, STREAM_MC, i, j))
            row[name] = rep.r_mc
            row[f"{name}_cf"] = rep.r_cf
        row["waterfilling"] = waterfilling_capacity(h, cfg.rho, cfg.sigma_n2, cfg.n_rf)
        out.append(row)
    return out


def run_se_compare(spec: ExperimentSpec) -> list[dict]:
    """Channel-averaged true SE of every scheme and the waterfilling capacity."""
    rows = []
    for n_r in spec.n_r:
        tasks = [(int(n_r), k) for k in range(spec.channels)]
        per_channel = _map(partial(_se_one, spec), tasks, spec.workers)
        for i, snr in enumerate(spec.snr_db):
            cells = [c[i] for c in per_channel]
            row = {"n_r": int(n_r), "snr_db": float(snr), "n_channels": spec.channels}
            for col in SE_COLUMNS[3:]:
                vals = [c[col] for c in cells]
                row[col] = int(sum(vals)) if col == "reduced_fallbacks" else float(np.mean(vals))
            rows.append(row)
    return rows


# -- param-select ---------------------------------------------------------


def _groupings(cfg: SystemConfig):
    """(n_k, n_m) factorizations of n_t with n_m >= n_rf, largest n_k first."""
    return [
        (cfg.n_t // n_m, n_m)
        for n_m in range(1, cfg.n_t + 1)
        if cfg.n_t % n_m == 0 and n_m >= cfg.n_rf
    ]


def _param_one(spec: ExperimentSpec, task):
    n_r, k = task
    base = replace(spec.system, n_r=n_r)
    h = _channel(spec, base, k)
    out = []
    for i, snr in enumerate(spec.snr_db):
        vals = []
        for j, (n_k, n_m) in enumerate(_groupings(base)):
            cfg = base.with_grouping(n_k, n_m).with_snr_db(snr)
            tr = optimize(
                h, cfg, agc_table_for(cfg), spec.optimizer,
                substream(spec.seed, k, STREAM_RESTART, n_r, i, j),
            )
            vals.append(tr.best_r_cf)
        out.append(vals)
    return out


def run_param_select(spec: ExperimentSpec) -> list[dict]:
    """Mean optimized R_CF per grouping; ``is_best`` marks each cell's argmax."""
    pairs = _groupings(spec.system)
    rows = []
    for n_r in spec.n_r:
        tasks = [(int(n_r), k) for k in range(spec.channels)]
        res = np.array(_map(partial(_param_one, spec), tasks, spec.workers))
        for i, snr in enumerate(spec.snr_db):
            means = res[:, i, :].mean(axis=0)
            best = int(np.argmax(means))
            for j, (n_k, n_m) in enumerate(pairs):
                rows.append({
                    "n_r": int(n_r),
                    "snr_db": float(snr),
                    "n_k": n_k,
                    "n_m": n_m,
                    "r_cf_mean": float(means[j]),
                    "n_channels": spec.channels,
                    "is_best": int(j == best),
                })
    return rows


RUNNERS = {
    "approx-accuracy": (run_approx_accuracy, APPROX_COLUMNS),
    "se-compare": (run_se_compare, SE_COLUMNS),
    "param-select": (run_param_select, PARAM_COLUMNS),
}


def to_csv(rows: list[dict], columns) -> str:
    """Render rows with a fixed column order; floats use repr for exactness."""
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(columns)
    for row in rows:
        if set(row) != set(columns):
            raise ValueError(f"row keys {sorted(row)} do not match schema {list(columns)}")
        w.writerow([repr(float(row[c])) if isinstance(row[c], float) else row[c] for c in columns])
    return buf.getvalue()


def run_experiment(spec: ExperimentSpec):
    runner, columns = RUNNERS[spec.experiment]
    return runner(spec), columns


def write_outputs(spec: ExperimentSpec, rows, columns, wall_time: float, extra=None) -> Path:
    """Write ``<experiment>.csv`` and ``<experiment>.manifest.json`` under ``spec.out``."""
    out = Path(spec.out)
    out.mkdir(parents=True, exist_ok=True)
    csv_path = out / f"{spec.experiment}.csv"
    csv_path.write_text(to_csv(rows, columns))
    manifest = {
        "experiment": spec.experiment,
        "spec": spec.to_dict(),
        "seed": spec.seed,
        "columns": list(columns),
        "csv": csv_path.name,
        "wall_time_s": wall_time,
        "versions": _versions(),
    }
    if extra:
        manifest.update(extra)
    (out / f"{spec.experiment}.manifest.json").write_text(json.dumps(manifest, indent=1))
    return csv_path


def _versions() -> dict:
    from . import __version__

    return {
        "gensm": __version__,
        "python": platform.python_version(),
        "numpy": np.__version__,
        "scipy": scipy.__version__,
        "cpu_count": os.cpu_count(),
    }


def timed_run(spec: ExperimentSpec):
    t0 = time.perf_counter()
    rows, columns = run_experiment(spec)
    return rows, columns, time.perf_counter() - t0
