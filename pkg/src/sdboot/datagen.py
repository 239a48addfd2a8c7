"""Simulation models and the Monte Carlo oracle for "true" precision values."""
from __future__ import annotations

from dataclasses import dataclass, field
from enum import Enum

import numpy as np
from scipy import stats
from scipy.signal import lfilter
from scipy.special import expit

from .dataset import Dataset, WeightedSample
from .estimators import ESTIMATORS, ROOTS
from .exceptions import InvalidConfigurationError
from .measures import MeasureSpec, ecdf_build, plug_in
from .sampling import derive_rng

__all__ = [
    "ModelKind",
    "ModelSpec",
    "OracleResult",
    "sample_t3",
    "gen_linreg",
    "gen_logreg",
    "gen_ar1",
    "gen_ar1_homo",
    "generate",
    "default_pipeline",
    "mc_oracle",
    "analytic_truth",
]

ORACLE_SE_RESAMPLES = 500


class ModelKind(str, Enum):
    LINREG = "linreg"
    LOGREG = "logreg"
    AR1 = "ar1"
    AR1_HOMO = "ar1_homo"


@dataclass(frozen=True)
class ModelSpec:
    """A simulation model.

    ``beta_true`` defaults to all ones for the i.i.d. regressions and to
    zero for the AR(1) regression. ``noise_sd`` only affects LINREG.
    """

    kind: ModelKind
    n: int
    d: int = 1
    rho: float = 0.0
    noise_sd: float = 10.0
    beta_true: tuple[float, ...] | None = field(default=None)

    def __post_init__(self):
        kind = ModelKind(self.kind)
        object.__setattr__(self, "kind", kind)
        if self.n < 1 or self.d < 1:
            raise InvalidConfigurationError("n and d must be >= 1")
        if kind in (ModelKind.AR1, ModelKind.AR1_HOMO) and not abs(self.rho) < 1:
            raise InvalidConfigurationError(f"|rho| must be < 1 for stationarity, got {self.rho}")
        if self.beta_true is None:
            fill = 0.0 if kind is ModelKind.AR1_HOMO else 1.0
            beta = (fill,) * (1 if kind is ModelKind.AR1 else self.d)
        else:
            beta = tuple(float(v) for v in self.beta_true)
        object.__setattr__(self, "beta_true", beta)

    @property
    def true_parameter(self) -> np.ndarray:
        """Population value of the estimated parameter.

        For AR1 that is the median (and mean), zero by symmetry.
        """
        if self.kind is ModelKind.AR1:
            return np.zeros(1)
        return np.array(self.beta_true)


@dataclass(frozen=True)
class OracleResult:
    measure_truth: float
    reps: int
    standard_error: float
    roots: np.ndarray | None = None


def sample_t3(count: int, rng: np.random.Generator) -> np.ndarray:
    """Student-t(3) draws as ``Z / sqrt(chi2_3 / 3)``."""
    z = rng.standard_normal(count)
    chi = rng.chisquare(3, count)
    return z / np.sqrt(chi / 3.0)


def gen_linreg(spec: ModelSpec, rng: np.random.Generator) -> Dataset:
    X = sample_t3(spec.n * spec.d, rng).reshape(spec.n, spec.d)
    e = spec.noise_sd * rng.standard_normal(spec.n)
    return Dataset(X @ np.array(spec.beta_true) + e, X)


def gen_logreg(spec: ModelSpec, rng: np.random.Generator) -> Dataset:
    X = sample_t3(spec.n * spec.d, rng).reshape(spec.n, spec.d)
    p = expit(X @ np.array(spec.beta_true))
    y = (rng.random(spec.n) < p).astype(float)
    return Dataset(y, X)


def _ar1_path(n: int, rho: float, rng: np.random.Generator) -> np.ndarray:
    # X_0 drawn from the stationary law, then X_t = rho X_{t-1} + e_t
    u = rng.standard_normal(n)
    u[0] /= np.sqrt(1.0 - rho * rho)
    return lfilter([1.0], [1.0, -rho], u)


def gen_ar1(spec: ModelSpec, rng: np.random.Generator) -> Dataset:
    if not abs(spec.rho) < 1:
        raise InvalidConfigurationError(f"|rho| must be < 1, got {spec.rho}")
    return Dataset(_ar1_path(spec.n, spec.rho, rng))


def gen_ar1_homo(spec: ModelSpec, rng: np.random.Generator) -> Dataset:
    """``d`` independent AR(1) regressors plus an independent AR(1) error."""
    if not abs(spec.rho) < 1:
        raise InvalidConfigurationError(f"|rho| must be < 1, got {spec.rho}")
    X = np.column_stack([_ar1_path(spec.n, spec.rho, rng) for _ in range(spec.d)])
    u = _ar1_path(spec.n, spec.rho, rng)
    return Dataset(X @ np.array(spec.beta_true) + u, X)


_GENERATORS = {
    ModelKind.LINREG: gen_linreg,
    ModelKind.LOGREG: gen_logreg,
    ModelKind.AR1: gen_ar1,
    ModelKind.AR1_HOMO: gen_ar1_homo,
}


def generate(spec: ModelSpec, rng: np.random.Generator) -> Dataset:
    return _GENERATORS[spec.kind](spec, rng)


def default_pipeline(kind: ModelKind) -> tuple[str, str]:
    """(estimator name, root name) used for each model in the experiments."""
    return {
        ModelKind.LINREG: ("ols", "f_statistic"),
        ModelKind.LOGREG: ("logistic", "wald_logistic"),
        ModelKind.AR1: ("median", "sqrt_n_diff"),
        ModelKind.AR1_HOMO: ("ols", "f_statistic"),
    }[ModelKind(kind)]


def analytic_truth(spec: ModelSpec, root: str, measure: MeasureSpec) -> float | None:
    """Exact measure value where the root law is known, else ``None``.

    Only LINREG with the F root qualifies: normal errors give F(d, n-d-1).
    """
    if spec.kind is not ModelKind.LINREG or root != "f_statistic":
        return None
    law = stats.f(spec.d, spec.n - spec.d - 1)
    if measure.kind == "quantile":
        return float(law.ppf(measure.levels[0]))
    if measure.kind == "width":
        lo, hi = measure.levels
        return float(law.ppf(hi) - law.ppf(lo))
    return float(law.moment(2))


def mc_oracle(
    spec: ModelSpec,
    root,
    measure: MeasureSpec,
    reps: int,
    seed: int,
    estimator=None,
    keep_roots: bool = False,
) -> OracleResult:
    """Monte Carlo value of the measure for the root's sampling distribution.

    Replication ``r`` simulates a dataset from stream ``(seed, r)``, fits the
    estimator on it and evaluates the root against the true parameter. The
    standard error is the spread of the measure over bootstrap resamples of
    the replication ensemble.
    """
    if reps < 2:
        raise InvalidConfigurationError("the oracle needs at least 2 replications")
    default_est, default_root = default_pipeline(spec.kind)
    estimator = ESTIMATORS[estimator or default_est] if not callable(estimator) else estimator
    root = ROOTS[root or default_root] if not callable(root) else root
    truth = spec.true_parameter

    roots = np.empty(reps)
    for r in range(reps):
        ws = WeightedSample.unweighted(generate(spec, derive_rng(seed, r)))
        roots[r] = root(ws, estimator(ws), truth)

    value = plug_in(ecdf_build(roots), measure)
    se_rng = derive_rng(seed, reps, 1)
    boot = np.empty(ORACLE_SE_RESAMPLES)
    for i in range(ORACLE_SE_RESAMPLES):
        boot[i] = plug_in(ecdf_build(roots[se_rng.integers(0, reps, reps)]), measure)
    se = float(np.std(boot, ddof=1))
    return OracleResult(value, reps, se, roots if keep_roots else None)
