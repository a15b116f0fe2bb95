"""Data-generating processes and the Monte Carlo RMSE harness.

Outcomes follow the latent model

    d_it = I(tau_i + gamma d_{i,t-1} + x_it'b + eps_it > 0),  d_i0 = 0,

with iid standard normal errors.  Replication ``r`` of a scenario draws from
its own Philox stream keyed by ``(seed, r)``, so any subset of replications
can be recomputed, in any order or in parallel, with identical results.
"""

from __future__ import annotations

import math
import warnings
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field

import numpy as np

from .conditional_glm import build_switcher_design, fit_conditional
from .errors import AllReplicationsFailed, ConfigError, NumericalError
from .heckman import MleSpec, fit_mle
from .panel import PanelData
from .priors import TauDistribution, prior_from_dict, prior_to_dict
from .ratio import count_transitions, estimate_gamma_ratio
from .runs import RunsCounts, estimate_gamma_t3

ESTIMATORS = ("ratio", "glm_static", "glm_dynamic", "heckman", "runs_t3")
COVARIATE_LAWS = ("none", "differenced_normal")

_REQUIRED = ("n", "horizon", "gamma_true", "tau", "replications", "seed", "estimators")
_OPTIONAL = {"beta_true": [], "covariate_law": "none", "sigma_scaling": None, "quadrature_nodes": 64}


@dataclass(frozen=True)
class SimulationScenario:
    n: int
    horizon: int
    gamma_true: float
    tau: TauDistribution
    replications: int
    seed: int
    estimators: tuple[str, ...]
    beta_true: tuple[float, ...] = ()
    covariate_law: str = "none"
    sigma_scaling: float | None = None
    quadrature_nodes: int = 64

    def __post_init__(self):
        object.__setattr__(self, "estimators", tuple(self.estimators))
        object.__setattr__(self, "beta_true", tuple(float(b) for b in self.beta_true))
        if self.n < 2:
            raise ConfigError(f"n must be at least 2, got {self.n}")
        if self.replications < 1:
            raise ConfigError(f"replications must be at least 1, got {self.replications}")
        if self.horizon not in (2, 3):
            raise ConfigError(f"horizon must be 2 or 3, got {self.horizon}")
        if not 0 <= self.seed < 2 ** 64:
            raise ConfigError("seed must be an unsigned 64-bit integer")
        if self.covariate_law not in COVARIATE_LAWS:
            raise ConfigError(f"covariate_law must be one of {COVARIATE_LAWS}, got {self.covariate_law!r}")
        if (self.covariate_law == "none") != (len(self.beta_true) == 0):
            raise ConfigError("beta_true must be non-empty exactly when covariate_law is 'differenced_normal'")
        if self.sigma_scaling is not None and not self.sigma_scaling > 0:
            raise ConfigError("sigma_scaling must be positive")
        if not self.estimators:
            raise ConfigError("at least one estimator is required")
        for name in self.estimators:
            if name not in ESTIMATORS:
                raise ConfigError(f"unknown estimator {name!r}; expected a subset of {ESTIMATORS}")
            if name in ("ratio", "glm_static", "glm_dynamic") and self.horizon != 2:
                raise ConfigError(f"estimator {name} needs horizon 2")
            if name == "runs_t3" and self.horizon != 3:
                raise ConfigError("estimator runs_t3 needs horizon 3")
            if name == "glm_static" and not self.beta_true:
                raise ConfigError("estimator glm_static needs covariates")
            if name == "runs_t3" and self.beta_true:
                raise ConfigError("estimator runs_t3 does not use covariates")

    @property
    def k(self) -> int:
        return len(self.beta_true)

    @property
    def effective_tau(self) -> TauDistribution:
        """The prior after applying ``sigma_scaling`` (sd = a * sqrt(n))."""
        if self.sigma_scaling is None:
            return self.tau
        return self.tau.rescaled(self.sigma_scaling * math.sqrt(self.n))

    @classmethod
    def from_dict(cls, config: dict) -> "SimulationScenario":
        if not isinstance(config, dict):
            raise ConfigError("scenario config must be a JSON object")
        unknown = set(config) - set(_REQUIRED) - set(_OPTIONAL)
        if unknown:
            raise ConfigError(f"unknown scenario keys: {sorted(unknown)}")
        missing = [k for k in _REQUIRED if k not in config]
        if missing:
            raise ConfigError(f"missing scenario keys: {missing}")
        values = {**_OPTIONAL, **config}
        try:
            return cls(
                n=_integer(values["n"], "n"),
                horizon=_integer(values["horizon"], "horizon"),
                gamma_true=float(values["gamma_true"]),
                tau=prior_from_dict(values["tau"]),
                replications=_integer(values["replications"], "replications"),
                seed=_integer(values["seed"], "seed"),
                estimators=tuple(values["estimators"]),
                beta_true=tuple(values["beta_true"]),
                covariate_law=values["covariate_law"],
                sigma_scaling=None if values["sigma_scaling"] is None else float(values["sigma_scaling"]),
                quadrature_nodes=_integer(values["quadrature_nodes"], "quadrature_nodes"),
            )
        except (TypeError, ValueError) as exc:
            raise ConfigError(f"invalid scenario value: {exc}") from None

    def to_dict(self) -> dict:
        return {
            "n": self.n,
            "horizon": self.horizon,
            "gamma_true": self.gamma_true,
            "tau": prior_to_dict(self.tau),
            "replications": self.replications,
            "seed": self.seed,
            "estimators": list(self.estimators),
            "beta_true": list(self.beta_true),
            "covariate_law": self.covariate_law,
            "sigma_scaling": self.sigma_scaling,
            "quadrature_nodes": self.quadrature_nodes,
        }

    def with_seed(self, seed: int) -> "SimulationScenario":
        return SimulationScenario.from_dict({**self.to_dict(), "seed": seed})


def _integer(value, name: str) -> int:
    if isinstance(value, bool) or int(value) != value:
        raise ConfigError(f"{name} must be an integer, got {value!r}")
    return int(value)


def replication_rng(seed: int, rep: int) -> np.random.Generator:
    """Independent counter-based stream for replication ``rep``."""
    return np.random.Generator(np.random.Philox(np.random.SeedSequence(seed, spawn_key=(rep,))))


def simulate_panel(scenario: SimulationScenario, rep: int) -> PanelData:
    rng = replication_rng(scenario.seed, rep)
    n, T, k = scenario.n, scenario.horizon, scenario.k
    tau = scenario.effective_tau.sample(rng, n)
    index = np.zeros((n, T))
    x = None
    if k:
        x = np.empty((n, T, k))
        x[:, 0] = rng.standard_normal((n, k))
        for t in range(1, T):
            x[:, t] = x[:, t - 1] + rng.standard_normal((n, k))
        index = x @ np.asarray(scenario.beta_true)
    eps = rng.standard_normal((n, T))
    d = np.zeros((n, T), dtype=np.int8)
    prev = np.zeros(n)
    for t in range(T):
        d[:, t] = tau + scenario.gamma_true * prev + index[:, t] + eps[:, t] > 0
        prev = d[:, t]
    return PanelData(d, x)


def truths(scenario: SimulationScenario, estimator: str) -> dict[str, float]:
    beta = {f"beta{j + 1}": b for j, b in enumerate(scenario.beta_true)}
    if estimator in ("ratio", "runs_t3"):
        return {"gamma": scenario.gamma_true}
    if estimator == "glm_static":
        return beta
    if estimator == "glm_dynamic":
        return {"gamma": scenario.gamma_true, **beta}
    return {"gamma": scenario.gamma_true, "sigma": scenario.effective_tau.sd, **beta}


def estimate(estimator: str, panel: PanelData, scenario: SimulationScenario) -> dict[str, tuple[float, float | None]]:
    """Run one estimator; return ``{parameter: (estimate, se)}``."""
    if estimator == "ratio":
        r = estimate_gamma_ratio(count_transitions(panel))
        return {"gamma": (r.gamma_hat, r.se)}
    if estimator in ("glm_static", "glm_dynamic"):
        fit = fit_conditional(build_switcher_design(panel, dynamic=estimator == "glm_dynamic"))
        return {n: (float(c), float(s)) for n, c, s in zip(fit.names, fit.coefficients, fit.se)}
    if estimator == "runs_t3":
        res = estimate_gamma_t3(RunsCounts.from_patterns(panel.pattern_counts()))
        return {"gamma": (res.estimates["gamma"], res.se["gamma"])}
    fit = fit_mle(panel, MleSpec(horizon=scenario.horizon, quadrature_nodes=scenario.quadrature_nodes))
    return {n: (v, fit.se.get(n)) for n, v in fit.estimates().items()}


@dataclass
class ReplicationOutcome:
    rep: int
    records: list[dict]
    failures: list[dict]


def run_replication(scenario: SimulationScenario, rep: int) -> ReplicationOutcome:
    panel = simulate_panel(scenario, rep)
    records, failures = [], []
    for name in scenario.estimators:
        truth = truths(scenario, name)
        try:
            with warnings.catch_warnings():
                warnings.simplefilter("ignore")
                est = estimate(name, panel, scenario)
        except NumericalError as exc:
            failures.append({"rep": rep, "estimator": name, "error": type(exc).__name__, "message": str(exc)})
            continue
        for param, value in truth.items():
            value_hat, se = est[param]
            records.append({"rep": rep, "estimator": name, "parameter": param, "truth": value,
                            "estimate": float(value_hat), "se": se})
    return ReplicationOutcome(rep, records, failures)


def _replication_task(args):
    config, rep = args
    return run_replication(SimulationScenario.from_dict(config), rep)


@dataclass(frozen=True)
class RmseRow:
    estimator: str
    parameter: str
    truth: float
    replications_used: int
    failures: int
    rmse: float | None
    bias: float | None
    mc_se: float | None
    bias_se: float | None

    def to_dict(self) -> dict:
        return dict(self.__dict__)


@dataclass
class RmseReport:
    scenario: SimulationScenario
    rows: list[RmseRow]
    records: list[dict] = field(default_factory=list)
    failures: list[dict] = field(default_factory=list)

    def row(self, estimator: str, parameter: str) -> RmseRow:
        for r in self.rows:
            if r.estimator == estimator and r.parameter == parameter:
                return r
        raise KeyError((estimator, parameter))

    def to_dict(self) -> dict:
        return {
            "schema_version": 1,
            "method": "simulate",
            "scenario": self.scenario.to_dict(),
            "sigma_reference": self.scenario.effective_tau.sd,
            "rows": [r.to_dict() for r in self.rows],
            "failures": self.failures,
        }

    def csv_rows(self) -> list[list]:
        header = ["estimator", "parameter", "truth", "replications_used", "failures",
                  "rmse", "bias", "mc_se", "bias_se"]
        body = [[getattr(r, h) for h in header] for r in self.rows]
        return [header] + body


def summarize(errors: np.ndarray) -> tuple[float, float, float, float]:
    """RMSE, bias, and the Monte Carlo standard errors of both.

    The RMSE's se is the delta-method transform of the se of the mean
    squared error.
    """
    sq = errors ** 2
    rmse = float(math.sqrt(sq.mean()))
    bias = float(errors.mean())
    if errors.size < 2:
        return rmse, bias, 0.0, 0.0
    root_r = math.sqrt(errors.size)
    bias_se = float(errors.std(ddof=1) / root_r)
    mc_se = float(sq.std(ddof=1) / root_r / (2.0 * rmse)) if rmse > 0 else 0.0
    return rmse, bias, mc_se, bias_se


def run_rmse_experiment(scenario: SimulationScenario, workers: int = 1) -> RmseReport:
    """Simulate, estimate and aggregate RMSEs over all replications.

    Failed fits are excluded from the RMSE and counted per estimator.

    Raises
    ------
    AllReplicationsFailed
        If no estimator succeeded in any replication.
    """
    reps = range(scenario.replications)
    if workers > 1:
        config = scenario.to_dict()
        with ProcessPoolExecutor(max_workers=workers) as pool:
            outcomes = list(pool.map(_replication_task, [(config, r) for r in reps], chunksize=4))
    else:
        outcomes = [run_replication(scenario, r) for r in reps]
    outcomes.sort(key=lambda o: o.rep)
    records = [rec for o in outcomes for rec in o.records]
    failures = [f for o in outcomes for f in o.failures]
    if not records:
        raise AllReplicationsFailed(f"all {scenario.replications} replications failed for every estimator")

    rows = []
    for name in scenario.estimators:
        n_failed = sum(f["estimator"] == name for f in failures)
        for param, truth in truths(scenario, name).items():
            errs = np.array([r["estimate"] - truth for r in records
                             if r["estimator"] == name and r["parameter"] == param])
            if errs.size:
                stats = summarize(errs)
            else:
                stats = (None, None, None, None)
            rows.append(RmseRow(name, param, float(truth), int(errs.size), n_failed, *stats))
    return RmseReport(scenario, rows, records, failures)
