"""Mean true SE of the optimized precoder against the reference schemes."""

from _common import parse, run

from gensm.experiments import default_spec

args = parse(__doc__, channels=200)
spec = default_spec(
    "se-compare",
    channels=args.channels,
    seed=args.seed,
    mc_samples=args.mc_samples,
    workers=args.workers,
    out=args.out,
)
cols = ("proposed_full", "proposed_reduced", "identity", "no_precoding", "waterfilling")
print(f"{'snr':>5} " + " ".join(f"{c:>16}" for c in cols))
for r in run(spec):
    print(f"{r['snr_db']:>5g} " + " ".join(f"{r[c]:>16.3f}" for c in cols))
