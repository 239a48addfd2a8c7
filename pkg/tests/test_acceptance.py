"""Acceptance gate: one test per criterion, each printing a PASS/FAIL line.

Seeds are fixed at 0 throughout. Run on its own with

    pytest tests/test_acceptance.py -v
"""
import math
import time

import numpy as np
import pytest
from scipy import stats
from scipy.signal import lfilter

import oracles
from sdboot.cli import main
from sdboot.datagen import ModelKind, ModelSpec, generate, mc_oracle
from sdboot.dataio import SeasonalSeries, deseasonalize, read_trace_roots
from sdboot.dataset import Dataset, WeightedSample
from sdboot.estimators import weighted_logistic, weighted_mean, weighted_median, weighted_ols
from sdboot.exceptions import EstimationError
from sdboot.measures import MeasureSpec, ecdf_build, evaluate_trace, plug_in
from sdboot.sampling import derive_rng, draw_mbb_weights, draw_multinomial_weights
from sdboot.schemes import (
    CostModel,
    Scheme,
    SchemeConfig,
    VirtualClock,
    calibrate_cost_model,
    run_budgeted,
    subset_size_from_gamma,
)

pytestmark = pytest.mark.acceptance
SEED = 0
Q95 = MeasureSpec.quantile(0.95)


def _outcome(fn, ws):
    try:
        return fn(ws), None
    except EstimationError as exc:
        return None, type(exc)


def _instance(i):
    rng = derive_rng(SEED, i)
    b = int(rng.integers(1, 13))
    n = int(rng.integers(b, 41))
    d = int(rng.integers(1, 4))
    w = rng.multinomial(n, np.full(b, 1 / b))
    X = rng.standard_normal((b, d))
    y = rng.standard_normal(b)
    ylog = (rng.random(b) < 1 / (1 + np.exp(-X.sum(axis=1)))).astype(float)
    return w, n, y, X, ylog


def test_c1_weighted_estimators_equal_expanded(verdicts):
    t0 = time.perf_counter()
    failures = []
    for i in range(500):
        w, n, y, X, ylog = _instance(i)
        ey, eX = oracles.expand(y, X, w)
        if oracles.mean(ey) != weighted_mean(WeightedSample(Dataset(y), w, n))[0]:
            failures.append((i, "mean"))
        if oracles.lower_median(ey) != weighted_median(WeightedSample(Dataset(y), w, n))[0]:
            failures.append((i, "median"))
        for name, fn, yy, tol in (("ols", weighted_ols, y, 1e-8), ("logistic", weighted_logistic, ylog, 1e-6)):
            ey2, eX2 = oracles.expand(yy, X, w)
            got, err = _outcome(fn, WeightedSample(Dataset(yy, X), w, n))
            ref, ref_err = _outcome(fn, WeightedSample.unweighted(Dataset(ey2, eX2)))
            if err is not ref_err:
                failures.append((i, name, err, ref_err))
                continue
            if got is None:
                continue
            independent = oracles.ols(ey2, eX2) if name == "ols" else oracles.logistic(ey2, eX2)
            if np.max(np.abs(got - ref)) > tol or (
                independent is not None and np.max(np.abs(got - independent)) > tol
            ):
                failures.append((i, name))
    elapsed = time.perf_counter() - t0
    ok = not failures and elapsed < 30
    verdicts.record("C1 weighted estimators == expanded", ok, f"failures={len(failures)} runtime={elapsed:.1f}s")
    assert ok, failures[:5]


def test_c2_linreg_f_quantile(verdicts):
    t0 = time.perf_counter()
    n, d = 10000, 2
    q = stats.f(d, n - d - 1).ppf(0.95)
    b = subset_size_from_gamma(n, 0.7)
    errors = []
    for run in range(10):
        data = generate(ModelSpec(ModelKind.LINREG, n=n, d=d), derive_rng(SEED, run))
        cfg = SchemeConfig(Scheme.SDB, b=b, S=2000, budget_seconds=math.inf, seed=run)
        trace = run_budgeted(data, "ols", "f_statistic", Q95, cfg)
        errors.append(abs(plug_in(ecdf_build(trace.roots()), Q95) / q - 1))
    mean_err = float(np.mean(errors))
    elapsed = time.perf_counter() - t0
    ok = mean_err < 0.05 and elapsed < 120
    verdicts.record("C2 linreg F quantile", ok, f"mean |q/q-1|={mean_err:.4f} (<0.05) runtime={elapsed:.1f}s")
    assert ok


def test_c3_scheme_reductions(verdicts):
    mismatches = 0
    for case in range(20):
        rng = derive_rng(SEED, case)
        n = int(rng.integers(1, 40))
        data = Dataset(rng.standard_normal(n))
        seed = int(rng.integers(0, 2**31))
        boot = run_budgeted(data, "mean", "sqrt_n_diff", None,
                            SchemeConfig(Scheme.BOOT, S=25, budget_seconds=math.inf, seed=seed))
        sdb = run_budgeted(data, "mean", "sqrt_n_diff", None,
                           SchemeConfig(Scheme.SDB, b=n, S=25, budget_seconds=math.inf, seed=seed))
        # resample k of the single BLB subset reads bootstrap iteration k's stream
        blb = run_budgeted(
            data, "mean", "sqrt_n_diff", Q95,
            SchemeConfig(Scheme.BLB, b=n, R=25, S=1, budget_seconds=math.inf, seed=seed),
            streams=lambda j, k, s=seed: derive_rng(s, k, 1) if k else derive_rng(s, j, 0),
        )
        ref = boot.roots().tolist()
        mismatches += sdb.roots().tolist() != ref
        mismatches += blb.roots().tolist() != ref
    verdicts.record("C3 scheme reductions", mismatches == 0, f"mismatching streams={mismatches}/40")
    assert mismatches == 0


@pytest.fixture(scope="module")
def ar1_setup():
    spec = ModelSpec(ModelKind.AR1, n=20000, rho=0.5)
    data = generate(spec, derive_rng(SEED))
    oracle = mc_oracle(spec, "sqrt_n_diff", Q95, reps=2000, seed=SEED)
    return data, oracle


def test_c4a_ar1_sdb_ts_vs_oracle(verdicts, ar1_setup):
    t0 = time.perf_counter()
    data, oracle = ar1_setup
    cfg = SchemeConfig(Scheme.SDB_TS, b=2000, L=20, S=2000, budget_seconds=math.inf, seed=SEED)
    est = plug_in(ecdf_build(run_budgeted(data, "median", "sqrt_n_diff", Q95, cfg).roots()), Q95)
    gap = abs(est - oracle.measure_truth) / oracle.standard_error
    elapsed = time.perf_counter() - t0
    ok = gap <= 3 and elapsed < 300
    verdicts.record(
        "C4a AR1 SDB-TS q0.95 vs oracle", ok,
        f"estimate={est:.4f} truth={oracle.measure_truth:.4f} se={oracle.standard_error:.4f} "
        f"gap={gap:.2f} se (<=3) runtime={elapsed:.1f}s",
    )
    assert ok


def test_c4b_sdb_accurate_before_first_blb_subset(verdicts, ar1_setup):
    data, oracle = ar1_setup
    sdb = SchemeConfig(Scheme.SDB_TS, b=2000, L=20, budget_seconds=10, seed=SEED)
    blb = SchemeConfig(Scheme.BLB_TS, b=2000, L=20, R=100, budget_seconds=10, seed=SEED)
    sdb_cost = calibrate_cost_model(data, "median", "sqrt_n_diff", Q95, sdb, iterations=50)
    blb_cost = calibrate_cost_model(data, "median", "sqrt_n_diff", Q95, blb, iterations=5)
    # BLB's first subset defines the horizon; SDB is read on a grid of its own iteration cost
    blb_trace = run_budgeted(
        data, "median", "sqrt_n_diff", Q95,
        SchemeConfig(Scheme.BLB_TS, b=2000, L=20, R=100, S=1, budget_seconds=10, seed=SEED),
        cost_model=blb_cost,
    )
    blb_first = blb_trace.records[0].completed_at
    sdb_trace = run_budgeted(data, "median", "sqrt_n_diff", Q95, sdb, cost_model=sdb_cost, clock=VirtualClock())
    evo = evaluate_trace(sdb_trace, Q95, oracle.measure_truth, grid_step=sdb_cost.per_iteration, horizon=10)
    reached = next((t for t, e in zip(evo.times, evo.errors) if e < 0.2), math.inf)
    at_blb = next(e for t, e in zip(evo.times, evo.errors) if t >= blb_first)
    ok = reached < blb_first
    verdicts.record(
        "C4b SDB error<0.2 before first BLB subset", ok,
        f"sdb reaches at {reached:.4f}s, blb first subset at {blb_first:.4f}s, sdb error then {at_blb:.3f}",
    )
    assert ok


def _replay(records, measure, truth, times, averaged):
    out = []
    for t in times:
        done = [r for r in records if r.completed_at <= t and r.roots.size]
        if not done:
            out.append(1.0)
        elif averaged:
            out.append(abs((math.fsum(r.per_subset_measure for r in done) / len(done)) / truth - 1))
        else:
            pool = [v for r in done for v in r.roots.tolist()]
            out.append(abs(oracles.quantile(pool, measure.levels[0]) / truth - 1))
    return out


def test_c5_trace_protocol(verdicts):
    bad = 0
    for case in range(100):
        rng = derive_rng(SEED, case)
        scheme = [Scheme.SDB, Scheme.BLB, Scheme.BOOT, Scheme.SDB_TS, Scheme.BLB_TS, Scheme.MBB][case % 6]
        data = Dataset(rng.standard_normal(int(rng.integers(20, 60))))
        cfg = SchemeConfig(scheme, b=10, R=int(rng.integers(1, 6)), L=3,
                           budget_seconds=float(rng.uniform(1, 8)), seed=case)
        cost = CostModel(per_iteration=float(rng.uniform(0.05, 1.5)), per_estimate=float(rng.uniform(0, 0.1)))
        measure = MeasureSpec.quantile(float(rng.uniform(0.5, 0.99)))
        trace = run_budgeted(data, "median", "sqrt_n_diff", measure, cfg,
                             clock=VirtualClock(float(rng.uniform(0, 1))), cost_model=cost,
                             workers=int(rng.integers(1, 4)))
        evo = evaluate_trace(trace, measure, truth=0.8, grid_step=float(rng.uniform(0.1, 0.7)))
        first = min((r.completed_at for r in trace.records), default=math.inf)
        before_ok = all(e == 1.0 for t, e in zip(evo.times, evo.errors) if t < first)
        replay_ok = evo.errors == _replay(trace.records, measure, 0.8, evo.times, scheme.averages_subsets)
        bad += not (before_ok and replay_ok)
    verdicts.record("C5 trace protocol", bad == 0, f"mismatching traces={bad}/100")
    assert bad == 0


def test_c6_weight_invariants(verdicts):
    rng = derive_rng(SEED, 6)
    failures = 0
    for i in range(100000):
        b = int(rng.integers(1, 30))
        n = int(rng.integers(b, 200))
        if i % 2:
            w = draw_multinomial_weights(n, b, rng)
        else:
            w = draw_mbb_weights(n, b, int(rng.integers(1, b + 1)), rng)
        arr = w.weights
        failures += not (int(arr.sum()) == n == w.nominal_n and arr.shape == (b,) and arr.min() >= 0)
    verdicts.record("C6 weight invariants", failures == 0, f"failures={failures}/100000")
    assert failures == 0


def test_c7_cli_determinism(verdicts, tmp_path):
    mismatches = []
    model = ["--model", "ar1", "--rho", "0.5", "--n", "5000", "--measure", "quantile:0.95"]
    for scheme, extra in (("sdb", ["--b", "500"]), ("blb", ["--b", "500", "--R", "10"]),
                          ("sdb_ts", ["--b", "500", "--L", "20"]), ("mbb", ["--L", "20"])):
        first = tmp_path / f"{scheme}-wall"
        assert main(["run", "--scheme", scheme, *model, *extra, "--budget", "1", "--seed", "5", "--out", str(first)]) == 0
        original = read_trace_roots(first / "trace.csv")
        for workers in ("1", "4"):
            again = tmp_path / f"{scheme}-{workers}"
            assert main(["run", "--replay", str(first / "manifest.json"), "--workers", workers, "--out", str(again)]) == 0
            if read_trace_roots(again / "trace.csv") != original:
                mismatches.append((scheme, workers))
        # virtual-time runs: byte-identical reruns, and a 1-worker replay of a 4-worker run
        virtual = ["run", "--scheme", scheme, *model, *extra, "--budget", "3", "--seed", "5", "--virtual-cost", "0.01"]
        for workers in ("1", "4"):
            outs = [tmp_path / f"{scheme}-v{workers}-{k}" for k in range(2)]
            for out in outs:
                assert main([*virtual, "--workers", workers, "--out", str(out)]) == 0
            if (outs[0] / "trace.csv").read_bytes() != (outs[1] / "trace.csv").read_bytes():
                mismatches.append((scheme, f"virtual rerun x{workers}"))
        replayed = tmp_path / f"{scheme}-v4-replay"
        assert main(["run", "--replay", str(outs[0] / "manifest.json"), "--workers", "1", "--out", str(replayed)]) == 0
        if read_trace_roots(replayed / "trace.csv") != read_trace_roots(outs[0] / "trace.csv"):
            mismatches.append((scheme, "virtual x4 replayed x1"))
    verdicts.record("C7 determinism", not mismatches, f"mismatches={mismatches}")
    assert not mismatches


def _synthetic_cet(years=228):
    rng = derive_rng(SEED, 8)
    doy = np.tile(np.arange(1, 366), years)
    year = np.repeat(np.arange(1772, 1772 + years), 365)
    seasonal = 9.5 + 6.5 * np.sin(2 * np.pi * (doy - 110) / 365)
    trend = 0.004 * (year - year[0])
    anomaly = lfilter([1.0], [1.0, -0.75], 2.0 * rng.standard_normal(doy.size))
    return SeasonalSeries(seasonal + trend + anomaly, doy, year)


def test_c8_cet_pipeline(verdicts):
    series = _synthetic_cet()
    data = deseasonalize(series)
    day_means = np.array([math.fsum(data.y[series.day_of_year == d].tolist()) / 228 for d in range(1, 366)])
    zeroed = float(np.max(np.abs(day_means)))
    width = MeasureSpec.width(0.05, 0.95)
    estimates = {}
    for scheme, cfg in (
        ("sdb_ts", SchemeConfig(Scheme.SDB_TS, b=5000, L=50, budget_seconds=60, seed=SEED)),
        ("mbb", SchemeConfig(Scheme.MBB, L=50, budget_seconds=60, seed=SEED)),
    ):
        cost = calibrate_cost_model(data, "mean", "sqrt_n_diff", width, cfg, iterations=50)
        trace = run_budgeted(data, "mean", "sqrt_n_diff", width, cfg, cost_model=cost)
        estimates[scheme] = (plug_in(ecdf_build(trace.roots()), width), len(trace.records))
    rel = abs(estimates["sdb_ts"][0] / estimates["mbb"][0] - 1)
    ok = len(data) == 83220 and zeroed < 1e-12 and rel < 0.10
    verdicts.record(
        "C8 CET-style pipeline", ok,
        f"n={len(data)} max|day mean|={zeroed:.2e} sdb_ts={estimates['sdb_ts'][0]:.4f} "
        f"({estimates['sdb_ts'][1]} it) mbb={estimates['mbb'][0]:.4f} ({estimates['mbb'][1]} it) rel={rel:.4f} (<0.10)",
    )
    assert ok


if __name__ == "__main__":
    raise SystemExit(pytest.main([__file__, "-v"]))
