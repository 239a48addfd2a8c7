"""Time-series comparison: SDB-TS, BLB-TS and MBB on an AR(1) median.

The truth comes from a Monte Carlo oracle. Virtual time with calibrated
per-iteration costs keeps the comparison free of scheduler noise; pass
--wall to use the real clock instead.
"""
import argparse
import json
import logging
from pathlib import Path

from sdboot.datagen import ModelKind, ModelSpec, generate, mc_oracle
from sdboot.dataio import compare, write_evolution, write_table
from sdboot.measures import MeasureSpec, evaluate_trace
from sdboot.sampling import derive_rng
from sdboot.schemes import Scheme, SchemeConfig, calibrate_cost_model, run_budgeted

log = logging.getLogger("ar1")


def main():
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--n", type=int, default=20000)
    ap.add_argument("--rho", type=float, default=0.5)
    ap.add_argument("--b", type=int, default=2000)
    ap.add_argument("--L", type=int, default=20)
    ap.add_argument("--R", type=int, default=100)
    ap.add_argument("--budget", type=float, default=30.0)
    ap.add_argument("--grid-step", type=float, default=0.5)
    ap.add_argument("--oracle-reps", type=int, default=10000)
    ap.add_argument("--seed", type=int, default=0)
    ap.add_argument("--wall", action="store_true")
    ap.add_argument("--out", default="results/ar1")
    args = ap.parse_args()
    logging.basicConfig(level=logging.INFO, format="%(asctime)s %(message)s")

    out = Path(args.out)
    out.mkdir(parents=True, exist_ok=True)
    spec = ModelSpec(ModelKind.AR1, n=args.n, rho=args.rho)
    measure = MeasureSpec.quantile(0.95)
    oracle = mc_oracle(spec, "sqrt_n_diff", measure, args.oracle_reps, args.seed)
    log.info("oracle q0.95 = %.4f (se %.4f)", oracle.measure_truth, oracle.standard_error)

    data = generate(spec, derive_rng(args.seed))
    configs = {
        "sdb_ts": SchemeConfig(Scheme.SDB_TS, b=args.b, L=args.L, budget_seconds=args.budget, seed=args.seed),
        "blb_ts": SchemeConfig(Scheme.BLB_TS, b=args.b, L=args.L, R=args.R, budget_seconds=args.budget, seed=args.seed),
        "mbb": SchemeConfig(Scheme.MBB, L=args.L, budget_seconds=args.budget, seed=args.seed),
    }
    files, summary = {}, {"truth": oracle.measure_truth, "truth_se": oracle.standard_error}
    for name, cfg in configs.items():
        cost = None if args.wall else calibrate_cost_model(data, "median", "sqrt_n_diff", measure, cfg)
        trace = run_budgeted(data, "median", "sqrt_n_diff", measure, cfg, cost_model=cost)
        evo = evaluate_trace(trace, measure, oracle.measure_truth, args.grid_step)
        files[name] = [out / f"{name}.csv"]
        write_evolution(files[name][0], evo)
        summary[name] = {"iterations": len(trace.records), "final_estimate": evo.estimates[-1]}
        log.info("%s: %d iterations, final estimate %s", name, len(trace.records), evo.estimates[-1])
    header, table = compare(files)
    write_table(out / "comparison.csv", header, table)
    (out / "summary.json").write_text(json.dumps(summary, indent=2) + "\n")


if __name__ == "__main__":
    main()
