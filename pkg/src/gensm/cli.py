"""Command-line entry point: ``gensm <subcommand> [flags]``.

Exit codes: 0 success, 2 invalid configuration, 3 numerical failure.
"""

from __future__ import annotations

import argparse
import json
import logging
import sys
from dataclasses import replace
from pathlib import Path

import numpy as np

from .channel import channel_from_json, channel_to_json, sample_channel, substream
from .errors import ConfigError, NumericalError
from .experiments import EXPERIMENTS, default_spec, load_spec, timed_run, to_csv, write_outputs
from .model import agc_table_for
from .precoder import TRACE_CSV_COLUMNS, optimize
from .rate import rate_true_mc

log = logging.getLogger("gensm")

EXIT_OK = 0
EXIT_CONFIG = 2
EXIT_NUMERICAL = 3


def _float_list(text: str):
    try:
        return tuple(float(v) for v in text.split(",") if v.strip())
    except ValueError as err:
        raise argparse.ArgumentTypeError(f"not a comma-separated number list: {text!r}") from err


def _int_list(text: str):
    try:
        return tuple(int(v) for v in text.split(",") if v.strip())
    except ValueError as err:
        raise argparse.ArgumentTypeError(f"not a comma-separated integer list: {text!r}") from err


def _add_common(p: argparse.ArgumentParser):
    p.add_argument("--config", type=Path, help="JSON ExperimentSpec; flags override its values")
    p.add_argument("--seed", type=int)
    p.add_argument("--channels", type=int)
    p.add_argument("--mc-samples", type=int)
    p.add_argument("--snr-db", type=_float_list, help="comma-separated SNR grid in dB")
    p.add_argument("--nr", type=_int_list, help="comma-separated receive-antenna counts")
    p.add_argument("--out", type=str)
    p.add_argument("--gradient", choices=("full", "reduced"))
    p.add_argument("--restarts", type=int)
    p.add_argument("--t-max", type=int)
    p.add_argument("--workers", type=int)
    p.add_argument("-v", "--verbose", action="store_true")


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="gensm", description=__doc__.splitlines()[0])
    sub = parser.add_subparsers(dest="command", required=True)
    for name in EXPERIMENTS:
        _add_common(sub.add_parser(name, help=f"run the {name} experiment"))
    one = sub.add_parser("optimize-one", help="optimize a single channel and dump the full trace")
    _add_common(one)
    one.add_argument("--channel-index", type=int, default=0, help="substream index of the channel")
    one.add_argument("--channel-json", type=Path, help="replay a stored channel record instead")
    return parser


def _spec(args, experiment: str):
    overrides = {
        "seed": args.seed,
        "channels": args.channels,
        "mc_samples": args.mc_samples,
        "snr_db": args.snr_db,
        "n_r": args.nr,
        "out": args.out,
        "workers": args.workers,
    }
    overrides = {k: v for k, v in overrides.items() if v is not None}
    if args.config is not None:
        spec = load_spec(args.config, experiment=experiment, **overrides)
    else:
        spec = default_spec(experiment, **overrides)
    opt_over = {
        "gradient_kind": args.gradient,
        "restarts": args.restarts,
        "t_max": args.t_max,
    }
    opt_over = {k: v for k, v in opt_over.items() if v is not None}
    if opt_over:
        spec = replace(spec, optimizer=replace(spec.optimizer, **opt_over))
    return spec


def _run_experiment(args) -> int:
    spec = _spec(args, args.command)
    log.info("running %s: %d channels, snr=%s, n_r=%s", spec.experiment, spec.channels, spec.snr_db, spec.n_r)
    rows, columns, wall = timed_run(spec)
    path = write_outputs(spec, rows, columns, wall)
    sys.stdout.write(to_csv(rows, columns))
    log.info("wrote %s (%.1f s)", path, wall)
    return EXIT_OK


def _run_optimize_one(args) -> int:
    # optimize-one reuses the se-compare defaults (8x8 link, 4 groups of 2, 2 RF chains)
    spec = _spec(args, "se-compare")
    # 0 dB unless an SNR was given explicitly
    if args.snr_db is None and args.config is None:
        spec = replace(spec, snr_db=(0.0,))
    cfg = replace(spec.system, n_r=spec.n_r[0]).with_snr_db(spec.snr_db[0])
    if args.channel_json is not None:
        record = args.channel_json.read_text()
        paths, ch = channel_from_json(record)
        if ch.shape != (cfg.n_r, cfg.n_t):
            cfg = replace(cfg, n_r=ch.shape[0])
            if ch.shape[1] != cfg.n_t:
                raise ConfigError(f"stored channel has {ch.shape[1]} transmit antennas, config has {cfg.n_t}")
    else:
        paths, ch = sample_channel(cfg, spec.n_paths, substream(spec.seed, args.channel_index))
        record = channel_to_json(paths, ch, seed=spec.seed, substream_key=(args.channel_index,))
    agc = agc_table_for(cfg)
    trace = optimize(ch.h, cfg, agc, spec.optimizer, substream(spec.seed, args.channel_index, 2))
    report = rate_true_mc(ch.h, trace.best_psi, cfg, agc, spec.mc_samples, substream(spec.seed, args.channel_index, 1))

    out = Path(spec.out)
    out.mkdir(parents=True, exist_ok=True)
    (out / "channel.json").write_text(record)
    dump = trace.to_dict()
    dump["rate"] = report.to_csv_row(cfg.config_hash(), spec.seed, spec.snr_db[0])
    dump["config"] = cfg.to_dict()
    (out / "trace.json").write_text(json.dumps(dump, indent=1))
    summary = to_csv([trace.summary_row()], TRACE_CSV_COLUMNS)
    (out / "trace.csv").write_text(summary)
    sys.stdout.write(summary)
    return EXIT_OK


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    logging.basicConfig(
        level=logging.INFO if args.verbose else logging.WARNING,
        format="%(levelname)s %(name)s: %(message)s",
    )
    try:
        if args.command == "optimize-one":
            return _run_optimize_one(args)
        return _run_experiment(args)
    except ConfigError as err:
        print(f"gensm: invalid configuration: {err}", file=sys.stderr)
        return EXIT_CONFIG
    except (NumericalError, np.linalg.LinAlgError, FloatingPointError) as err:
        print(f"gensm: numerical failure: {err}", file=sys.stderr)
        return EXIT_NUMERICAL


if __name__ == "__main__":
    sys.exit(main())
