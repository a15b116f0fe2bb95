"""Closed-form estimator of the dynamic parameter for two-wave panels.

With large individual effects the ratio P(1,0) / P(0,1) of the two switching
cells tends to G(gamma).  Inverting G at the empirical ratio of switch counts
gives the estimate, and the delta method gives its standard error with rate
``kappa_n = sqrt(n01)``.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .core_math import g_derivative, g_function, g_inverse, pattern_product, tau_weighted_integral
from .errors import DegenerateCounts, WrongHorizon
from .panel import PanelData
from .priors import TauDistribution


@dataclass(frozen=True)
class TransitionCounts:
    n00: int = 0
    n01: int = 0
    n10: int = 0
    n11: int = 0

    def __post_init__(self):
        for name in ("n00", "n01", "n10", "n11"):
            if getattr(self, name) < 0:
                raise ValueError(f"{name} must be non-negative")

    @property
    def n(self) -> int:
        return self.n00 + self.n01 + self.n10 + self.n11

    def scaled(self, factor: int) -> "TransitionCounts":
        return TransitionCounts(self.n00 * factor, self.n01 * factor,
                                self.n10 * factor, self.n11 * factor)


@dataclass(frozen=True)
class RatioEstimate:
    gamma_hat: float
    w_hat: float
    kappa_n: float
    sigma2: float
    se: float


def count_transitions(panel: PanelData) -> TransitionCounts:
    if panel.T != 2:
        raise WrongHorizon(f"the ratio estimator needs T=2 panels, got T={panel.T}")
    d = panel.outcomes.astype(np.int64)
    cell = 2 * d[:, 0] + d[:, 1]
    c = np.bincount(cell, minlength=4)
    return TransitionCounts(n00=int(c[0]), n01=int(c[1]), n10=int(c[2]), n11=int(c[3]))


def asymptotic_variance(gamma: float) -> float:
    """``(G + G^2) / G'^2`` at ``gamma``."""
    g = g_function(gamma)
    return (g + g * g) / g_derivative(gamma) ** 2


def estimate_gamma_ratio(counts: TransitionCounts) -> RatioEstimate:
    """Estimate gamma as ``G^-1(n10 / n01)``.

    Raises
    ------
    DegenerateCounts
        If ``n01 == 0`` (ratio infinite) or ``n10 == 0`` (estimate at +inf).
    """
    if counts.n01 == 0:
        raise DegenerateCounts("no 0->1 switchers: ratio n10/n01 is undefined",
                               n10=counts.n10, n01=counts.n01)
    if counts.n10 == 0:
        raise DegenerateCounts("no 1->0 switchers: ratio is 0 and the estimate is +inf",
                               n10=counts.n10, n01=counts.n01)
    w = counts.n10 / counts.n01
    gamma = g_inverse(w)
    sigma2 = asymptotic_variance(gamma)
    kappa = math.sqrt(counts.n01)
    return RatioEstimate(gamma_hat=gamma, w_hat=w, kappa_n=kappa, sigma2=sigma2,
                         se=math.sqrt(sigma2) / kappa)


def cell_probabilities(gamma: float, prior: TauDistribution, nodes: int = 64) -> dict[tuple[int, int], float]:
    """Probabilities of the four (d1, d2) cells when tau has density ``prior``."""
    return {p: tau_weighted_integral(pattern_product(p, gamma), prior, nodes)
            for p in ((0, 0), (0, 1), (1, 0), (1, 1))}
