"""Per-call wall time of the full and reduced gradients as M grows."""

import timeit

import numpy as np

from gensm.channel import sample_channel, substream
from gensm.model import SystemConfig, agc_table_for
from gensm.precoder import gradient_full, gradient_reduced

print(f"{'n_m':>4} {'M':>4} {'n_r':>4} {'full ms':>9} {'reduced ms':>11} {'ratio':>7}")
for n_m, n_r in ((2, 8), (4, 8), (8, 8), (8, 16), (8, 32)):
    cfg = SystemConfig(n_t=8, n_r=n_r, n_k=8 // n_m, n_m=n_m, n_rf=2)
    agc = agc_table_for(cfg)
    _, ch = sample_channel(cfg, 5, substream(0, n_m, n_r))
    psi = np.zeros(cfg.n_t)
    n = 50
    full = min(timeit.repeat(lambda: gradient_full(ch.h, psi, cfg, agc), number=n, repeat=3)) / n
    red = min(timeit.repeat(lambda: gradient_reduced(ch.h, psi, cfg, agc), number=n, repeat=3)) / n
    print(f"{n_m:>4} {agc.m:>4} {n_r:>4} {full * 1e3:>9.3f} {red * 1e3:>11.3f} {full / red:>7.1f}")
