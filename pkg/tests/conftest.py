import numpy as np
import pytest

from gensm.channel import sample_channel, substream
from gensm.model import SystemConfig, agc_table_for


@pytest.fixture
def table1():
    """Default dimensions at 0 dB."""
    return SystemConfig()


def instance(seed, snr_db=0.0, n_paths=5, random_phase=True, **dims):
    """(H, psi, cfg, agc) drawn reproducibly from ``seed``."""
    cfg = SystemConfig.from_snr_db(snr_db, **dims)
    rng = substream(seed, 7)
    _, ch = sample_channel(cfg, n_paths, rng)
    psi = rng.uniform(-np.pi, np.pi, cfg.n_t) if random_phase else np.zeros(cfg.n_t)
    return ch.h, psi, cfg, agc_table_for(cfg)


@pytest.fixture
def make_instance():
    return instance


ACCEPTANCE_LINES = []


def report(criterion, ok: bool, detail: str) -> bool:
    """Record one acceptance verdict; shown in the terminal summary."""
    line = f"criterion {criterion}: {'PASS' if ok else 'FAIL'}  {detail}"
    ACCEPTANCE_LINES.append(line)
    print(line)
    return ok


def pytest_terminal_summary(terminalreporter):
    if ACCEPTANCE_LINES:
        terminalreporter.section("acceptance criteria")
        for line in ACCEPTANCE_LINES:
            terminalreporter.write_line(line)
