"""Conditional-likelihood GLM for two-wave panels with covariates.

Only switchers (d1 + d2 = 1) enter.  For switcher i with covariate change
``dx_i = x_i2 - x_i1`` the large-effect limit of
P(d1=1, d2=0 | switch) is

    p_i = G(gamma + dx_i'b) / (G(gamma + dx_i'b) + G(-dx_i'b)),

which for the static model (gamma = 0) is the GLM ``p_i = K(dx_i'b)``.  In
the dynamic model gamma enters only the first G argument, so it is not an
ordinary intercept; the fit uses Fisher scoring with the analytic Jacobian
of this two-argument link.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np
from scipy.special import expit

from .core_math import g_log_derivative, log_g
from .errors import Diverged, NoSwitchers, RankDeficient, SchemaError, WrongHorizon
from .panel import PanelData
from .results import EstimateResult

PROB_CLAMP = 1e-10


@dataclass(frozen=True, eq=False)
class SwitcherDesign:
    delta_x: np.ndarray
    z: np.ndarray
    dynamic: bool

    @property
    def m(self) -> int:
        return self.delta_x.shape[0]

    @property
    def k(self) -> int:
        return self.delta_x.shape[1]

    @property
    def names(self) -> list[str]:
        beta = [f"beta{j + 1}" for j in range(self.k)]
        return ["gamma"] + beta if self.dynamic else beta


@dataclass
class GlmFit:
    names: list[str]
    coefficients: np.ndarray
    covariance: np.ndarray
    deviance: float
    iterations: int
    converged: bool
    score_max: float
    deviance_path: list[float] = field(default_factory=list)

    @property
    def se(self) -> np.ndarray:
        return np.sqrt(np.clip(np.diag(self.covariance), 0.0, None))

    def to_result(self, design: SwitcherDesign, identifiability: "IdentifiabilityReport | None" = None) -> EstimateResult:
        diagnostics = {
            "switchers": design.m,
            "deviance": self.deviance,
            "iterations": self.iterations,
            "converged": self.converged,
            "score_max_abs": self.score_max,
        }
        if identifiability is not None:
            diagnostics["identifiability"] = identifiability.to_dict()
        return EstimateResult(
            method="glm_dynamic" if design.dynamic else "glm_static",
            estimates=dict(zip(self.names, self.coefficients.tolist())),
            se=dict(zip(self.names, self.se.tolist())),
            diagnostics=diagnostics,
        )


def build_switcher_design(panel: PanelData, dynamic: bool = False) -> SwitcherDesign:
    """Keep switchers and form ``dx = x2 - x1`` and ``z = I(d1=1, d2=0)``."""
    if panel.T != 2:
        raise WrongHorizon(f"the conditional GLM needs T=2 panels, got T={panel.T}")
    if panel.k == 0 and not dynamic:
        raise SchemaError("the static conditional GLM needs at least one covariate")
    d = panel.outcomes
    keep = d.sum(axis=1) == 1
    m = int(keep.sum())
    if m == 0:
        raise NoSwitchers("no individual changes state between the two waves")
    if panel.k:
        x = panel.covariates[keep]
        dx = x[:, 1, :] - x[:, 0, :]
    else:
        dx = np.zeros((m, 0))
    z = (d[keep, 0] == 1).astype(float)
    return SwitcherDesign(dx, z, dynamic)


def conditional_prob(eta, gamma: float = 0.0):
    """``G(gamma + eta) / (G(gamma + eta) + G(-eta))``."""
    eta = np.asarray(eta, dtype=float)
    p = expit(log_g(gamma + eta) - log_g(-eta))
    return float(p) if p.ndim == 0 else p


def conditional_prob_partials(eta: np.ndarray, gamma: float = 0.0):
    """Return ``p``, ``dp/dgamma`` and ``dp/deta``."""
    a, b = gamma + eta, -eta
    p = expit(log_g(a) - log_g(b))
    v = p * (1.0 - p)
    psi_a, psi_b = g_log_derivative(a), g_log_derivative(b)
    return p, v * psi_a, v * (psi_a + psi_b)


def _split(theta: np.ndarray, design: SwitcherDesign) -> tuple[float, np.ndarray]:
    return (theta[0], theta[1:]) if design.dynamic else (0.0, theta)


def _prob_and_jacobian(theta: np.ndarray, design: SwitcherDesign):
    gamma, beta = _split(theta, design)
    eta = design.delta_x @ beta
    p, dg, de = conditional_prob_partials(eta, gamma)
    jac = de[:, None] * design.delta_x
    if design.dynamic:
        jac = np.column_stack([dg, jac])
    return p, jac


def _deviance(p: np.ndarray, z: np.ndarray) -> float:
    p = np.clip(p, PROB_CLAMP, 1.0 - PROB_CLAMP)
    return float(-2.0 * np.sum(z * np.log(p) + (1.0 - z) * np.log1p(-p)))


def conditional_loglik(theta, design: SwitcherDesign) -> float:
    p, _ = _prob_and_jacobian(np.asarray(theta, dtype=float), design)
    return -0.5 * _deviance(p, design.z)


def conditional_score(theta, design: SwitcherDesign) -> np.ndarray:
    """Gradient of the conditional log-likelihood."""
    p, jac = _prob_and_jacobian(np.asarray(theta, dtype=float), design)
    pc = np.clip(p, PROB_CLAMP, 1.0 - PROB_CLAMP)
    return jac.T @ ((design.z - p) / (pc * (1.0 - pc)))


def _observed_information(theta: np.ndarray, design: SwitcherDesign) -> np.ndarray:
    q = theta.size
    info = np.empty((q, q))
    for j in range(q):
        h = 1e-5 * (1.0 + abs(theta[j]))
        e = np.zeros(q)
        e[j] = h
        info[:, j] = -(conditional_score(theta + e, design) - conditional_score(theta - e, design)) / (2 * h)
    return 0.5 * (info + info.T)


def fit_conditional(design: SwitcherDesign, max_iter: int = 100, tol: float = 1e-10,
                    max_abs_param: float = 30.0) -> GlmFit:
    """Maximize the conditional likelihood by IRLS.

    Each iteration solves the weighted least-squares problem with working
    weights ``1 / (p (1 - p))`` on the Jacobian of ``p`` and working residual
    ``z - p``; a step that raises the deviance is halved.  Iteration stops
    when the relative deviance change drops below ``tol`` and the last step
    is negligible.

    Raises
    ------
    RankDeficient
        If the weighted design loses column rank.
    Diverged
        If parameters run off towards infinity (separation) or the
        iteration limit is reached without convergence.
    """
    q = len(design.names)
    if design.m < q:
        raise RankDeficient(f"{design.m} switchers cannot identify {q} parameters")
    theta = np.zeros(q)
    p, jac = _prob_and_jacobian(theta, design)
    dev = _deviance(p, design.z)
    path = [dev]
    converged = False
    it = 0
    for it in range(1, max_iter + 1):
        pc = np.clip(p, PROB_CLAMP, 1.0 - PROB_CLAMP)
        sw = 1.0 / np.sqrt(pc * (1.0 - pc))
        a = jac * sw[:, None]
        if np.linalg.matrix_rank(a) < q:
            raise RankDeficient(f"weighted design has rank {np.linalg.matrix_rank(a)} < {q} at iteration {it}")
        step = np.linalg.lstsq(a, (design.z - p) * sw, rcond=None)[0]

        t = 1.0
        while True:
            cand = theta + t * step
            p_new, jac_new = _prob_and_jacobian(cand, design)
            dev_new = _deviance(p_new, design.z)
            if dev_new <= dev + 1e-12 * abs(dev) or t < 1e-10:
                break
            t *= 0.5
        if dev_new > dev + 1e-12 * abs(dev):
            # no descent direction left; the previous iterate is the optimum
            converged = abs(dev_new - dev) <= 1e-8 * (abs(dev) + 0.1)
            break
        theta, p, jac = cand, p_new, jac_new
        change = abs(dev - dev_new) / (abs(dev_new) + 0.1)
        dev = dev_new
        path.append(dev)
        if np.max(np.abs(theta)) > max_abs_param:
            raise Diverged(f"parameters exceeded {max_abs_param} in magnitude at iteration {it}; "
                           "the likelihood is maximized at infinity (separation)")
        if change < tol and np.max(np.abs(t * step)) < 1e-9 * (1.0 + np.max(np.abs(theta))):
            converged = True
            break
    if not converged:
        raise Diverged(f"IRLS did not converge in {max_iter} iterations (deviance {dev:.6g})")

    info = _observed_information(theta, design)
    try:
        cov = np.linalg.inv(info)
    except np.linalg.LinAlgError:
        raise RankDeficient("observed information is singular at the optimum") from None
    score = conditional_score(theta, design)
    return GlmFit(names=design.names, coefficients=theta, covariance=cov, deviance=dev,
                  iterations=it, converged=converged, score_max=float(np.max(np.abs(score))),
                  deviance_path=path)


# -- identifiability --------------------------------------------------------

@dataclass(frozen=True)
class IdentifiabilityReport:
    verdict: str  # "pass", "warn" or "fail"
    reason: str
    rank: int
    k: int
    augmented_rank: int

    def to_dict(self) -> dict:
        return {"verdict": self.verdict, "reason": self.reason, "rank": self.rank,
                "k": self.k, "augmented_rank": self.augmented_rank}


def identifiability_check(design: SwitcherDesign, tol: float = 1e-10) -> IdentifiabilityReport:
    """Rank and sign diagnostics for the covariate differences.

    ``fail`` when the differences do not span R^k.  For the dynamic model the
    sufficient condition (some row is a non-positive combination of k
    independent rows) is checked against a single pivoted basis, so ``warn``
    means "not verified", not "unidentified".  ``augmented_rank`` is the rank
    of the differences with a column of ones appended.
    """
    dx, k = design.delta_x, design.k
    scale = max(1.0, float(np.max(np.abs(dx)))) if dx.size else 1.0
    rank = int(np.linalg.matrix_rank(dx, tol=tol * scale * max(dx.shape))) if k else 0
    ones = np.column_stack([np.ones(design.m), dx])
    aug = int(np.linalg.matrix_rank(ones, tol=tol * scale * max(ones.shape)))
    if rank < k:
        return IdentifiabilityReport("fail", f"covariate differences have rank {rank} < k={k}", rank, k, aug)
    if not design.dynamic:
        return IdentifiabilityReport("pass", "covariate differences have full rank", rank, k, aug)
    if k == 0:
        verdict = "pass" if design.m >= 1 else "fail"
        return IdentifiabilityReport(verdict, "no covariates; gamma is identified from the switch ratio", rank, k, aug)

    from scipy.linalg import qr

    _, _, piv = qr(dx.T, pivoting=True, mode="economic")
    basis_rows = piv[:k]
    basis = dx[basis_rows]  # k x k, rows linearly independent
    for j in range(design.m):
        if j in basis_rows:
            continue
        coef = np.linalg.solve(basis.T, dx[j])
        if np.all(coef <= tol):
            return IdentifiabilityReport(
                "pass", f"row {j} is a non-positive combination of rows {sorted(basis_rows.tolist())}",
                rank, k, aug)
    return IdentifiabilityReport(
        "warn", "no row found as a non-positive combination of the pivoted basis rows", rank, k, aug)
