"""Conditional multinomial estimator of gamma for three-wave runs patterns.

Within the group of sequences with exactly one 1 (001, 010, 100) and the
group with exactly two 1s (110, 011, 101), the large-effect limit of the
conditional pattern probabilities depends on gamma only.  The estimator
maximizes the product of those six limiting probabilities.
"""

from __future__ import annotations

import math
import warnings
from dataclasses import astuple, dataclass, fields

import numpy as np
from scipy.optimize import minimize_scalar

from .core_math import pattern_product, phi_product_integral
from .errors import DegenerateCounts, NonConcaveWarning
from .results import EstimateResult

GROUP_ONE = ((0, 0, 1), (0, 1, 0), (1, 0, 0))
GROUP_TWO = ((1, 1, 0), (0, 1, 1), (1, 0, 1))
INITIAL_BRACKET = (-6.0, 6.0)


@dataclass(frozen=True)
class RunsCounts:
    """Counts ``n_ijl`` of the eight T=3 patterns, ordered by number of 1s."""

    n000: int = 0
    n001: int = 0
    n010: int = 0
    n100: int = 0
    n110: int = 0
    n011: int = 0
    n101: int = 0
    n111: int = 0

    def __post_init__(self):
        for f in fields(self):
            v = getattr(self, f.name)
            if int(v) != v or v < 0:
                raise ValueError(f"{f.name} must be a non-negative integer, got {v}")
            object.__setattr__(self, f.name, int(v))

    @classmethod
    def from_sequence(cls, values) -> "RunsCounts":
        values = list(values)
        if len(values) != 8:
            raise ValueError(f"expected 8 counts (n000,n001,n010,n100,n110,n011,n101,n111), got {len(values)}")
        return cls(*values)

    @classmethod
    def from_patterns(cls, counts: dict[tuple[int, ...], int]) -> "RunsCounts":
        kw = {}
        for pattern, c in counts.items():
            if len(pattern) != 3:
                raise ValueError(f"pattern {pattern} is not a three-wave sequence")
            kw["n" + "".join(str(int(v)) for v in pattern)] = int(c)
        return cls(**kw)

    def as_patterns(self) -> dict[tuple[int, int, int], int]:
        return {tuple(int(ch) for ch in f.name[1:]): getattr(self, f.name) for f in fields(self)}

    def informative(self) -> np.ndarray:
        """Counts in the order n001, n010, n100, n110, n011, n101."""
        return np.array([self.n001, self.n010, self.n100, self.n110, self.n011, self.n101], dtype=float)

    def scaled(self, factor: int) -> "RunsCounts":
        return RunsCounts(*(v * factor for v in astuple(self)))


@dataclass(frozen=True)
class T3Probabilities:
    p001: float
    p010: float
    p100: float
    p110: float
    p011: float
    p101: float

    def as_array(self) -> np.ndarray:
        return np.array(astuple(self))


def t3_probabilities(gamma: float) -> T3Probabilities:
    """Limiting conditional probabilities of the six switching patterns.

    Each group is normalized by the sum of its own three numerators.
    """
    one = np.array([phi_product_integral(pattern_product(p, gamma)) for p in GROUP_ONE])
    two = np.array([phi_product_integral(pattern_product(p, gamma)) for p in GROUP_TWO])
    return T3Probabilities(*map(float, one / one.sum()), *map(float, two / two.sum()))


def runs_loglik(gamma: float, counts: RunsCounts) -> float:
    p = t3_probabilities(gamma).as_array()
    return float(np.dot(counts.informative(), np.log(p)))


def estimate_gamma_t3(counts: RunsCounts, xtol: float = 1e-8) -> EstimateResult:
    """Maximize the conditional runs likelihood over gamma.

    Patterns 000 and 111 carry no information and are ignored.  The standard
    error is the inverse square root of the observed information, obtained by
    a central second difference with step ``1e-4 * (1 + |gamma|)``.

    Raises
    ------
    DegenerateCounts
        If either switching group is empty.
    """
    c = counts.informative()
    if c[:3].sum() == 0 or c[3:].sum() == 0:
        raise DegenerateCounts("each switching group needs at least one observation",
                               group_one=int(c[:3].sum()), group_two=int(c[3:].sum()))

    def objective(g):
        return -runs_loglik(g, counts)

    lo, hi = INITIAL_BRACKET
    expansions = 0
    while True:
        res = minimize_scalar(objective, bounds=(lo, hi), method="bounded",
                              options={"xatol": xtol, "maxiter": 500})
        gamma = float(res.x)
        width = hi - lo
        at_lo, at_hi = gamma - lo < 1e-3 * width, hi - gamma < 1e-3 * width
        if not (at_lo or at_hi) or expansions >= 6:
            break
        lo, hi = (lo - width, hi) if at_lo else (lo, hi + width)
        expansions += 1

    h = 1e-4 * (1.0 + abs(gamma))
    l0 = runs_loglik(gamma, counts)
    d2 = (runs_loglik(gamma + h, counts) - 2.0 * l0 + runs_loglik(gamma - h, counts)) / (h * h)
    if d2 < 0:
        se = 1.0 / math.sqrt(-d2)
    else:
        warnings.warn(f"log-likelihood is not concave at gamma={gamma:.6g} (d2={d2:.3g})",
                      NonConcaveWarning, stacklevel=2)
        se = None
    probs = t3_probabilities(gamma)
    return EstimateResult(
        method="runs_t3",
        estimates={"gamma": gamma},
        se={"gamma": se},
        diagnostics={
            "loglik": l0,
            "second_derivative": d2,
            "bracket": [lo, hi],
            "bracket_expansions": expansions,
            "converged": bool(res.success) and expansions < 6,
            "probabilities": dict(zip(("p001", "p010", "p100", "p110", "p011", "p101"),
                                      probs.as_array().tolist())),
        },
    )
