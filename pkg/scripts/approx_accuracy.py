"""Closed-form SE against the Monte-Carlo SE, identity precoder, N_R in {2, 4, 8}."""

from _common import parse, run

from gensm.experiments import default_spec

args = parse(__doc__, channels=500)
spec = default_spec(
    "approx-accuracy",
    channels=args.channels,
    seed=args.seed,
    mc_samples=args.mc_samples,
    workers=args.workers,
    out=args.out,
)
print(f"{'n_r':>4} {'snr':>5} {'r_cf':>8} {'r_mc':>8} {'gap':>7}")
for r in run(spec):
    gap = r["r_cf_mean"] - r["r_mc_mean"]
    print(f"{r['n_r']:>4} {r['snr_db']:>5g} {r['r_cf_mean']:>8.3f} {r['r_mc_mean']:>8.3f} {gap:>+7.3f}")
