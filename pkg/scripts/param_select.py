"""Best (N_K, N_M) grouping per (N_R, SNR) for N_T = 8, N_RF = 1."""

from _common import parse, run

from gensm.experiments import default_spec

args = parse(__doc__, channels=500)
spec = default_spec("param-select", channels=args.channels, seed=args.seed, workers=args.workers, out=args.out)
rows = run(spec)
for n_r in spec.n_r:
    best = [r for r in rows if r["n_r"] == n_r and r["is_best"]]
    cells = ", ".join(f"{r['snr_db']:g} dB -> ({r['n_k']},{r['n_m']})" for r in best)
    print(f"N_R = {n_r}: {cells}")
