"""Shared argument handling for the experiment scripts."""

import argparse
import logging

from gensm.experiments import timed_run, write_outputs


def parse(description, channels):
    p = argparse.ArgumentParser(description=description)
    p.add_argument("--channels", type=int, default=channels)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--mc-samples", type=int, default=20_000)
    p.add_argument("--workers", type=int, default=1)
    p.add_argument("--out", default="results")
    args = p.parse_args()
    logging.basicConfig(level=logging.INFO, format="%(message)s")
    return args


def run(spec):
    rows, columns, wall = timed_run(spec)
    path = write_outputs(spec, rows, columns, wall)
    logging.info("wrote %s in %.1f s", path, wall)
    return rows
