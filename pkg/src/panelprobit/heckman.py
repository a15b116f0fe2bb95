"""Random-effects maximum likelihood with a normal prior for tau.

Each individual contributes

    log int prod_t Phi(s_t (tau + gamma d_{t-1} + x_t'b)) phi(tau; mu, sigma) dtau

with ``s_t = 2 d_t - 1`` and no lagged term in the first wave.  The
likelihood is maximized over ``(gamma, log sigma[, mu][, b])`` with a
restarted Nelder-Mead simplex; standard errors come from a central-difference
Hessian in the natural parameters.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np
from scipy.optimize import minimize
from scipy.special import log_ndtr, logsumexp

from .core_math import TRUNCATION_RADIUS, prior_rule
from .errors import BoundarySigma, NonFiniteLikelihood, NotConverged, WrongHorizon
from .panel import PanelData
from .priors import Normal
from .results import EstimateResult

SIGMA_MIN = 1e-6
SIGMA_MAX = 1e4
_PENALTY = 1e300


@dataclass(frozen=True)
class MleSpec:
    horizon: int | None = None
    estimate_mean: bool = False
    quadrature_nodes: int = 64
    tol: float = 1e-8
    restarts: int = 3
    seed: int = 0


@dataclass
class MleFit:
    gamma_hat: float
    sigma_hat: float
    mu_hat: float | None
    beta_hat: np.ndarray | None
    se: dict[str, float | None]
    loglik: float
    converged: bool
    evaluations: int = 0
    starts: list[dict] = field(default_factory=list)

    def estimates(self) -> dict[str, float]:
        out = {"gamma": self.gamma_hat, "sigma": self.sigma_hat}
        if self.mu_hat is not None:
            out["mu"] = self.mu_hat
        if self.beta_hat is not None:
            out.update({f"beta{j + 1}": float(b) for j, b in enumerate(self.beta_hat)})
        return out

    def to_result(self, spec: MleSpec) -> EstimateResult:
        return EstimateResult(
            method="heckman",
            estimates=self.estimates(),
            se=dict(self.se),
            diagnostics={"loglik": self.loglik, "converged": self.converged,
                         "evaluations": self.evaluations, "quadrature_nodes": spec.quadrature_nodes,
                         "estimate_mean": spec.estimate_mean, "starts": self.starts},
        )


class _Likelihood:
    """Pre-grouped data for repeated likelihood evaluation."""

    def __init__(self, panel: PanelData, nodes: int):
        self.nodes = nodes
        self.k = panel.k
        if panel.k == 0:
            counts = panel.pattern_counts()
            self.rows = np.array(list(counts), dtype=float).reshape(-1, panel.T)
            self.weights = np.array(list(counts.values()), dtype=float)
            self.x = None
            # index of one individual per distinct pattern, for error reports
            first = {}
            for i, row in enumerate(map(tuple, panel.outcomes.tolist())):
                first.setdefault(row, i)
            self.index = [first[tuple(int(v) for v in r)] for r in self.rows]
        else:
            self.rows = panel.outcomes.astype(float)
            self.weights = np.ones(panel.n)
            self.x = panel.covariates
            self.index = list(range(panel.n))
        self.signs = 2.0 * self.rows - 1.0
        self.lagged = np.zeros_like(self.rows)
        self.lagged[:, 1:] = self.rows[:, :-1]

    def individual(self, gamma: float, sigma: float, mu: float, beta: np.ndarray | None) -> np.ndarray:
        shift = gamma * self.lagged
        if self.x is not None and beta is not None:
            shift = shift + self.x @ beta
        reach = TRUNCATION_RADIUS + (float(np.max(np.abs(shift))) if shift.size else 0.0)
        tau, w = prior_rule(Normal(mu, sigma * sigma), (-reach, reach), self.nodes)
        with np.errstate(divide="ignore"):
            logw = np.log(w)
        # (rows, T, nodes)
        arg = self.signs[:, :, None] * (tau[None, None, :] + shift[:, :, None])
        logp = log_ndtr(arg).sum(axis=1)
        return logsumexp(logp + logw[None, :], axis=1)

    def __call__(self, gamma, sigma, mu=0.0, beta=None) -> float:
        if not sigma > 0:
            raise ValueError("sigma must be positive")
        per = self.individual(gamma, sigma, mu, beta)
        bad = ~np.isfinite(per)
        if bad.any():
            j = int(np.argmax(bad))
            raise NonFiniteLikelihood(f"probability of individual {self.index[j]}'s sequence underflows to 0",
                                      index=self.index[j])
        return float(np.dot(self.weights, per))


def cell_loglik(gamma: float, sigma: float, panel: PanelData, mu: float = 0.0,
                beta=None, nodes: int = 64) -> float:
    """Random-effects log-likelihood of ``panel``.

    Raises
    ------
    NonFiniteLikelihood
        If some individual's sequence probability underflows to zero.
    """
    beta = None if beta is None else np.atleast_1d(np.asarray(beta, dtype=float))
    return _Likelihood(panel, nodes)(gamma, sigma, mu, beta)


def sequence_probabilities(gamma: float, sigma: float, horizon: int, mu: float = 0.0,
                           nodes: int = 64) -> dict[tuple[int, ...], float]:
    """Probabilities of all ``2**horizon`` outcome sequences (no covariates)."""
    patterns = [tuple(int(b) for b in np.binary_repr(i, horizon)) for i in range(2 ** horizon)]
    lik = _Likelihood(PanelData(np.array(patterns)), nodes)
    per = np.exp(lik.individual(gamma, sigma, mu, None))
    return {tuple(int(v) for v in r): float(p) for r, p in zip(lik.rows, per)}


def _unpack(theta: np.ndarray, spec: MleSpec, k: int):
    gamma, log_sigma = theta[0], theta[1]
    pos = 2
    mu = 0.0
    if spec.estimate_mean:
        mu = theta[pos]
        pos += 1
    beta = theta[pos:pos + k] if k else None
    return gamma, log_sigma, mu, beta


def _natural_names(spec: MleSpec, k: int) -> list[str]:
    names = ["gamma", "sigma"] + (["mu"] if spec.estimate_mean else [])
    return names + [f"beta{j + 1}" for j in range(k)]


def _numerical_hessian(f, x: np.ndarray) -> np.ndarray:
    q = x.size
    h = 1e-4 * (1.0 + np.abs(x))
    hess = np.empty((q, q))
    f0 = f(x)
    for i in range(q):
        ei = np.zeros(q)
        ei[i] = h[i]
        hess[i, i] = (f(x + ei) - 2.0 * f0 + f(x - ei)) / h[i] ** 2
        for j in range(i + 1, q):
            ej = np.zeros(q)
            ej[j] = h[j]
            val = (f(x + ei + ej) - f(x + ei - ej) - f(x - ei + ej) + f(x - ei - ej)) / (4.0 * h[i] * h[j])
            hess[i, j] = hess[j, i] = val
    return hess


def fit_mle(panel: PanelData, spec: MleSpec = MleSpec()) -> MleFit:
    """Maximize the random-effects likelihood.

    Raises
    ------
    WrongHorizon
        If ``spec.horizon`` is set and differs from the panel's.
    BoundarySigma
        If the fitted sigma collapses below 1e-6 or runs off to the upper bound.
    NotConverged
        If no simplex run converges.
    """
    if spec.horizon is not None and spec.horizon != panel.T:
        raise WrongHorizon(f"spec expects T={spec.horizon}, panel has T={panel.T}")
    lik = _Likelihood(panel, spec.quadrature_nodes)
    k = panel.k
    q = 2 + int(spec.estimate_mean) + k
    evaluations = 0

    def objective(theta):
        nonlocal evaluations
        evaluations += 1
        gamma, log_sigma, mu, beta = _unpack(theta, spec, k)
        if not (math.log(SIGMA_MIN) / 2 <= log_sigma <= math.log(SIGMA_MAX)):
            return _PENALTY
        try:
            return -lik(gamma, math.exp(log_sigma), mu, beta)
        except NonFiniteLikelihood:
            return _PENALTY

    rng = np.random.default_rng(spec.seed)
    starts = [np.zeros(q)] + [rng.normal(0.0, 0.5, q) for _ in range(max(0, spec.restarts - 1))]
    options = {"xatol": spec.tol, "fatol": 1e-10, "maxiter": 2000 * q, "maxfev": 4000 * q}
    runs = []
    for x0 in starts:
        res = minimize(objective, x0, method="Nelder-Mead", options=options)
        # restart from the reported optimum until the objective stops moving
        for _ in range(5):
            again = minimize(objective, res.x, method="Nelder-Mead", options=options)
            improved = res.fun - again.fun
            res = again if again.fun <= res.fun else res
            if improved < 1e-9:
                break
        runs.append(res)
    best = min(runs, key=lambda r: r.fun)
    if best.fun >= _PENALTY or not any(r.success for r in runs):
        raise NotConverged(f"no simplex run converged from {len(starts)} starts")

    gamma, log_sigma, mu, beta = _unpack(best.x, spec, k)
    sigma = math.exp(log_sigma)
    if sigma < 2 * SIGMA_MIN:
        raise BoundarySigma(f"sigma collapsed to {sigma:.3g}; the random-effect variance is not identified")
    if sigma > 0.5 * SIGMA_MAX:
        raise BoundarySigma(f"sigma diverged to {sigma:.3g}; the likelihood is maximized at a boundary")

    natural = np.concatenate([[gamma, sigma], [mu] if spec.estimate_mean else [],
                              beta if beta is not None else []])

    def nat_loglik(v):
        g, s, m, b = _unpack(np.concatenate([[v[0], 0.0], v[2:]]), spec, k)
        if v[1] <= 0:
            return -np.inf
        return lik(g, v[1], m, b)

    names = _natural_names(spec, k)
    try:
        cov = np.linalg.inv(-_numerical_hessian(nat_loglik, natural))
        var = np.diag(cov)
        se = {n: (float(math.sqrt(v)) if v > 0 else None) for n, v in zip(names, var)}
    except (np.linalg.LinAlgError, NonFiniteLikelihood):
        se = {n: None for n in names}

    return MleFit(
        gamma_hat=float(gamma), sigma_hat=sigma,
        mu_hat=float(mu) if spec.estimate_mean else None,
        beta_hat=None if beta is None else np.asarray(beta, dtype=float),
        se=se, loglik=-float(best.fun), converged=bool(best.success), evaluations=evaluations,
        starts=[{"x0": list(map(float, s)), "loglik": -float(r.fun), "success": bool(r.success)}
                for s, r in zip(starts, runs)],
    )
