"""Error evolution of the F-root 0.95 quantile for linear regression.

The defaults are the full-scale setting (n=100000, d=100, 20 replications
per method, 600 s budget each), which takes many hours. Try

    python scripts/linreg_f_quantile.py --n 10000 --d 2 --budget 30 --reps 3

for a desk-scale run. One evolution CSV per (method, replication) and a
merged comparison table are written to --out.
"""
import argparse
import logging
from pathlib import Path

from scipy import stats

from sdboot.datagen import ModelKind, ModelSpec, generate
from sdboot.dataio import compare, write_evolution, write_table
from sdboot.measures import MeasureSpec, evaluate_trace
from sdboot.sampling import derive_rng
from sdboot.schemes import Scheme, SchemeConfig, run_budgeted, subset_size_from_gamma

log = logging.getLogger("linreg")


def main():
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--n", type=int, default=100000)
    ap.add_argument("--d", type=int, default=100)
    ap.add_argument("--gamma", type=float, default=0.7)
    ap.add_argument("--R", type=int, default=100)
    ap.add_argument("--budget", type=float, default=600.0)
    ap.add_argument("--reps", type=int, default=20)
    ap.add_argument("--seed", type=int, default=0)
    ap.add_argument("--out", default="results/linreg")
    args = ap.parse_args()
    logging.basicConfig(level=logging.INFO, format="%(asctime)s %(message)s")

    out = Path(args.out)
    out.mkdir(parents=True, exist_ok=True)
    spec = ModelSpec(ModelKind.LINREG, n=args.n, d=args.d)
    measure = MeasureSpec.quantile(0.95)
    truth = float(stats.f(args.d, args.n - args.d - 1).ppf(0.95))
    b = subset_size_from_gamma(args.n, args.gamma)
    methods = {
        "sdb": dict(scheme=Scheme.SDB, b=b),
        "blb": dict(scheme=Scheme.BLB, b=b, R=args.R),
        "boot": dict(scheme=Scheme.BOOT),
    }
    files = {m: [] for m in methods}
    for rep in range(args.reps):
        data = generate(spec, derive_rng(args.seed, rep))
        for name, kw in methods.items():
            cfg = SchemeConfig(budget_seconds=args.budget, seed=args.seed + rep, **kw)
            trace = run_budgeted(data, "ols", "f_statistic", measure, cfg)
            evo = evaluate_trace(trace, measure, truth)
            path = out / f"{name}_rep{rep}.csv"
            write_evolution(path, evo)
            files[name].append(path)
            log.info("rep %d %s: %d iterations, final error %s", rep, name, len(trace.records), evo.errors[-1])
    header, table = compare(files)
    write_table(out / "comparison.csv", header, table)
    log.info("truth q0.95 = %.6f, table in %s", truth, out / "comparison.csv")


if __name__ == "__main__":
    main()
