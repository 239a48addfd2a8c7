"""Command-line entry point: ``sdboot {run,oracle,gen,deseasonalize,compare}``.

Exit codes: 0 success, 2 configuration error, 3 I/O error, 4 every
iteration of a run failed in the estimator.

``run`` also reads an INI file (``--config``) whose ``[run]`` section uses
the long option names with underscores, e.g.::

    [run]
    scheme = sdb_ts
    model = ar1
    rho = 0.5
    n = 20000
    b = 2000
    L = 20
    measure = quantile:0.95
    budget = 30

Command-line flags override values from the file.
"""
from __future__ import annotations

import argparse
import configparser
import json
import logging
import math
import sys
from dataclasses import asdict, dataclass
from pathlib import Path

from . import __version__
from .datagen import ModelKind, ModelSpec, analytic_truth, default_pipeline, generate, mc_oracle
from .dataio import (
    compare,
    deseasonalize,
    ingest_csv,
    ingest_seasonal,
    write_dataset,
    write_evolution,
    write_seasonal,
    write_table,
    write_trace,
)
from .estimators import ESTIMATORS, ROOTS
from .exceptions import EstimationError, IngestionError, InvalidConfigurationError
from .measures import MeasureSpec, evaluate_trace
from .sampling import derive_rng
from .schemes import CostModel, Scheme, SchemeConfig, run_budgeted, subset_size_from_gamma

log = logging.getLogger("sdboot")

EXIT_OK, EXIT_CONFIG, EXIT_IO, EXIT_ESTIMATION = 0, 2, 3, 4


class EstimationExhausted(Exception):
    pass


@dataclass
class RunConfig:
    """Fully resolved settings of one ``run``.

    Exactly one of ``model`` and ``input`` is set.
    """

    scheme: str
    measure: str
    out: str
    model: str | None = None
    input: str | None = None
    schema: str = "series"
    n: int | None = None
    d: int = 1
    rho: float = 0.0
    noise_sd: float = 10.0
    estimator: str | None = None
    root: str | None = None
    b: int | None = None
    gamma: float | None = None
    S: int | None = None
    R: int = 100
    L: int | None = None
    budget: float = 60.0
    seed: int = 0
    workers: int = 1
    truth: float | None = None
    oracle_reps: int = 0
    oracle_seed: int | None = None
    grid_step: float = 1.0
    horizon: float | None = None
    virtual_cost: float | None = None

    def __post_init__(self):
        if (self.model is None) == (self.input is None):
            raise InvalidConfigurationError("give exactly one of --model and --input")
        if self.model is not None:
            try:
                ModelKind(self.model)
            except ValueError:
                raise InvalidConfigurationError(f"unknown model {self.model!r}") from None
            if self.n is None:
                raise InvalidConfigurationError("--n is required with --model")
            est, root = default_pipeline(self.model)
            self.estimator = self.estimator or est
            self.root = self.root or root
        else:
            self.estimator = self.estimator or "mean"
            self.root = self.root or "sqrt_n_diff"
        if self.estimator not in ESTIMATORS:
            raise InvalidConfigurationError(f"unknown estimator {self.estimator!r}")
        if self.root not in ROOTS:
            raise InvalidConfigurationError(f"unknown root {self.root!r}")
        try:
            Scheme(self.scheme)
        except ValueError:
            raise InvalidConfigurationError(f"unknown scheme {self.scheme!r}") from None
        MeasureSpec.parse(self.measure)


def _model_spec(cfg) -> ModelSpec:
    return ModelSpec(ModelKind(cfg.model), cfg.n, d=cfg.d, rho=cfg.rho, noise_sd=cfg.noise_sd)


def _resolve_truth(cfg: RunConfig, measure: MeasureSpec):
    if cfg.truth is not None:
        return cfg.truth, {"source": "user"}
    if cfg.model is None:
        return None, {"source": "none"}
    spec = _model_spec(cfg)
    if cfg.oracle_reps <= 0:
        value = analytic_truth(spec, cfg.root, measure)
        if value is not None:
            return value, {"source": "analytic", "law": f"F({spec.d}, {spec.n - spec.d - 1})"}
        return None, {"source": "none"}
    seed = cfg.seed if cfg.oracle_seed is None else cfg.oracle_seed
    res = mc_oracle(spec, cfg.root, measure, cfg.oracle_reps, seed, estimator=cfg.estimator)
    return res.measure_truth, {
        "source": "mc_oracle",
        "reps": res.reps,
        "seed": seed,
        "standard_error": res.standard_error,
    }


def run_experiment(cfg: RunConfig) -> dict:
    """Execute one budgeted run and write ``trace.csv``, ``evolution.csv``
    and ``manifest.json`` into ``cfg.out``. Returns the manifest."""
    measure = MeasureSpec.parse(cfg.measure)
    if cfg.model is not None:
        data = generate(_model_spec(cfg), derive_rng(cfg.seed))
    else:
        data = ingest_csv(cfg.input, cfg.schema)
    n = len(data)
    b = cfg.b
    if b is None and cfg.gamma is not None:
        b = subset_size_from_gamma(n, cfg.gamma)
    scheme = SchemeConfig(
        Scheme(cfg.scheme), b=b, S=cfg.S, R=cfg.R, L=cfg.L, budget_seconds=cfg.budget, seed=cfg.seed
    )
    scheme.validate(n)
    truth, provenance = _resolve_truth(cfg, measure)

    out = Path(cfg.out)
    try:
        out.mkdir(parents=True, exist_ok=True)
    except OSError as exc:
        raise IngestionError(f"cannot create output directory {out}: {exc}") from None

    cost = None if cfg.virtual_cost is None else CostModel(per_iteration=cfg.virtual_cost)
    trace = run_budgeted(
        data, cfg.estimator, cfg.root, measure, scheme, cost_model=cost, workers=cfg.workers
    )
    horizon = cfg.horizon if cfg.horizon is not None else cfg.budget
    evo = evaluate_trace(trace, measure, truth, cfg.grid_step, horizon)

    write_trace(out / "trace.csv", trace)
    write_evolution(out / "evolution.csv", evo)
    manifest = {
        "sdboot_version": __version__,
        "config": {k: v for k, v in asdict(cfg).items() if k != "out"},
        "resolved": {"n": n, "b": scheme.subset_size(n), "scheme": scheme.scheme.value},
        "seed": cfg.seed,
        "truth": {"value": truth, **provenance},
        "completed_iterations": len(trace.records),
        "failed_iterations": trace.n_failed,
        "final_estimate": evo.estimates[-1] if evo.estimates else None,
    }
    (out / "manifest.json").write_text(json.dumps(manifest, indent=2, allow_nan=True) + "\n")
    if trace.records and trace.n_failed == len(trace.records):
        raise EstimationExhausted(f"all {len(trace.records)} iterations failed")
    return manifest


def _replay_config(path, overrides) -> RunConfig:
    try:
        manifest = json.loads(Path(path).read_text())
    except (OSError, ValueError) as exc:
        raise IngestionError(f"cannot read manifest {path}: {exc}") from None
    cfg = dict(manifest["config"])
    # replay exactly the completed iterations, whatever the wall clock does
    cfg["S"] = manifest["completed_iterations"]
    if cfg.get("horizon") is None:
        cfg["horizon"] = cfg["budget"]
    cfg["budget"] = math.inf
    cfg["virtual_cost"] = None
    cfg.update({k: v for k, v in overrides.items() if v is not None})
    return RunConfig(**cfg)


RUN_OPTIONS = {
    # name: (type, default)
    "scheme": (str, None),
    "model": (str, None),
    "input": (str, None),
    "schema": (str, "series"),
    "n": (int, None),
    "d": (int, 1),
    "rho": (float, 0.0),
    "noise_sd": (float, 10.0),
    "estimator": (str, None),
    "root": (str, None),
    "measure": (str, "quantile:0.95"),
    "b": (int, None),
    "gamma": (float, None),
    "S": (int, None),
    "R": (int, 100),
    "L": (int, None),
    "budget": (float, 60.0),
    "workers": (int, 1),
    "truth": (float, None),
    "oracle_reps": (int, 0),
    "oracle_seed": (int, None),
    "grid_step": (float, 1.0),
    "horizon": (float, None),
    "virtual_cost": (float, None),
}


def _add_model_args(p):
    p.add_argument("--model", choices=[k.value for k in ModelKind])
    p.add_argument("--n", type=int)
    p.add_argument("--d", type=int)
    p.add_argument("--rho", type=float)
    p.add_argument("--noise-sd", dest="noise_sd", type=float)


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="sdboot", description=__doc__.splitlines()[0])
    parser.add_argument("--version", action="version", version=__version__)
    parser.add_argument("-v", "--verbose", action="store_true")
    sub = parser.add_subparsers(dest="command", required=True)

    run = sub.add_parser("run", help="budgeted resampling run")
    run.add_argument("--config", help="INI file with a [run] section")
    run.add_argument("--replay", help="manifest.json of a previous run to reproduce")
    for name, (typ, _) in RUN_OPTIONS.items():
        flag = "--" + name.replace("_", "-")
        run.add_argument(flag, dest=name, type=typ, default=None)
    run.add_argument("--seed", type=int, default=None)
    run.add_argument("--out", required=True, help="output directory")

    ora = sub.add_parser("oracle", help="Monte Carlo truth for a model")
    _add_model_args(ora)
    ora.add_argument("--root")
    ora.add_argument("--estimator")
    ora.add_argument("--measure", default="quantile:0.95")
    ora.add_argument("--reps", type=int, default=10000)
    ora.add_argument("--seed", type=int, default=0)
    ora.add_argument("--out", required=True, help="JSON result file")

    gen = sub.add_parser("gen", help="write a simulated dataset to CSV")
    _add_model_args(gen)
    gen.add_argument("--seed", type=int, default=0)
    gen.add_argument("--out", required=True)

    des = sub.add_parser("deseasonalize", help="remove calendar-day means from a cet CSV")
    des.add_argument("--input", required=True)
    des.add_argument("--keep-leap", action="store_true", help="reject day-366 rows instead of dropping")
    des.add_argument("--seed", type=int, default=0, help="accepted for uniformity; unused")
    des.add_argument("--out", required=True)

    cmp_ = sub.add_parser("compare", help="merge evolution CSVs into one wide table")
    cmp_.add_argument(
        "traces", nargs="+", help="LABEL=PATH[,PATH...] (several paths are averaged) or PATH"
    )
    cmp_.add_argument("--seed", type=int, default=0, help="accepted for uniformity; unused")
    cmp_.add_argument("--out", required=True)
    return parser


def _run_config_from_args(args) -> RunConfig:
    flags = {k: getattr(args, k) for k in (*RUN_OPTIONS, "seed")}
    if args.replay:
        return _replay_config(args.replay, {**flags, "out": args.out})
    values = {name: default for name, (_, default) in RUN_OPTIONS.items()}
    values["seed"] = 0
    if args.config:
        ini = configparser.ConfigParser()
        ini.optionxform = str
        try:
            with open(args.config, encoding="utf-8") as fh:
                ini.read_file(fh)
        except OSError as exc:
            raise IngestionError(f"cannot read config {args.config}: {exc}") from None
        if "run" not in ini:
            raise InvalidConfigurationError(f"{args.config} has no [run] section")
        types = {**{k: t for k, (t, _) in RUN_OPTIONS.items()}, "seed": int}
        for key, raw in ini["run"].items():
            key = key.replace("-", "_")
            if key not in types:
                raise InvalidConfigurationError(f"unknown config key {key!r}")
            try:
                values[key] = types[key](raw)
            except ValueError:
                raise InvalidConfigurationError(f"bad value for {key}: {raw!r}") from None
    values.update({k: v for k, v in flags.items() if v is not None})
    if values["scheme"] is None:
        raise InvalidConfigurationError("--scheme is required")
    return RunConfig(out=args.out, **values)


def _cmd_run(args):
    manifest = run_experiment(_run_config_from_args(args))
    truth = manifest["truth"]["value"]
    print(
        f"{manifest['resolved']['scheme']}: {manifest['completed_iterations']} iterations, "
        f"estimate {manifest['final_estimate']}, truth {truth}"
    )


def _cmd_oracle(args):
    if args.model is None or args.n is None:
        raise InvalidConfigurationError("--model and --n are required")
    spec = ModelSpec(
        ModelKind(args.model), args.n, d=args.d or 1, rho=args.rho or 0.0,
        noise_sd=10.0 if args.noise_sd is None else args.noise_sd,
    )
    measure = MeasureSpec.parse(args.measure)
    res = mc_oracle(spec, args.root, measure, args.reps, args.seed, estimator=args.estimator)
    payload = {
        "model": asdict(spec),
        "measure": str(measure),
        "measure_truth": res.measure_truth,
        "reps": res.reps,
        "standard_error": res.standard_error,
        "seed": args.seed,
    }
    _write_text(args.out, json.dumps(payload, indent=2) + "\n")
    print(f"{measure}: {res.measure_truth} (se {res.standard_error})")


def _cmd_gen(args):
    if args.model is None or args.n is None:
        raise InvalidConfigurationError("--model and --n are required")
    spec = ModelSpec(
        ModelKind(args.model), args.n, d=args.d or 1, rho=args.rho or 0.0,
        noise_sd=10.0 if args.noise_sd is None else args.noise_sd,
    )
    _guard_io(write_dataset, args.out, generate(spec, derive_rng(args.seed)))


def _cmd_deseasonalize(args):
    series = ingest_seasonal(args.input, drop_leap=not args.keep_leap)
    _guard_io(write_seasonal, args.out, series, deseasonalize(series).y)


def _cmd_compare(args):
    traces = {}
    for item in args.traces:
        label, sep, paths = item.partition("=")
        if not sep:
            label, paths = Path(item).parent.name or Path(item).stem, item
        traces.setdefault(label, []).extend(p for p in paths.split(",") if p)
    header, table = compare(traces)
    _guard_io(write_table, args.out, header, table)


def _write_text(path, text):
    try:
        Path(path).write_text(text)
    except OSError as exc:
        raise IngestionError(f"cannot write {path}: {exc}") from None


def _guard_io(fn, path, *a):
    try:
        fn(path, *a)
    except OSError as exc:
        raise IngestionError(f"cannot write {path}: {exc}") from None


COMMANDS = {
    "run": _cmd_run,
    "oracle": _cmd_oracle,
    "gen": _cmd_gen,
    "deseasonalize": _cmd_deseasonalize,
    "compare": _cmd_compare,
}


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    logging.basicConfig(level=logging.DEBUG if args.verbose else logging.WARNING)
    try:
        COMMANDS[args.command](args)
    except IngestionError as exc:
        print(f"sdboot: error: {exc}", file=sys.stderr)
        return EXIT_IO
    except InvalidConfigurationError as exc:
        print(f"sdboot: configuration error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    except (EstimationExhausted, EstimationError) as exc:
        print(f"sdboot: estimation failed: {exc}", file=sys.stderr)
        return EXIT_ESTIMATION
    return EXIT_OK


if __name__ == "__main__":
    sys.exit(main())
