"""Distributions for the individual effects tau_i.

Each family is a location-scale law: ``f(x) = h((x - mean) / sd) / sd`` with
``h`` a standardized density.  Three families are supported: uniform, normal
and a two-component normal mixture.
"""

from __future__ import annotations

import math
from dataclasses import asdict, dataclass

import numpy as np

from .errors import UnsupportedPrior


@dataclass(frozen=True)
class Uniform:
    low: float
    high: float

    def __post_init__(self):
        if not (math.isfinite(self.low) and math.isfinite(self.high)) or self.high <= self.low:
            raise UnsupportedPrior(f"uniform prior needs finite low < high, got ({self.low}, {self.high})")

    @property
    def mean(self) -> float:
        return 0.5 * (self.low + self.high)

    @property
    def sd(self) -> float:
        return (self.high - self.low) / math.sqrt(12.0)

    def sample(self, rng: np.random.Generator, size: int) -> np.ndarray:
        return rng.uniform(self.low, self.high, size)

    def rescaled(self, sd: float) -> "Uniform":
        half = 0.5 * (self.high - self.low) * sd / self.sd
        return Uniform(self.mean - half, self.mean + half)


@dataclass(frozen=True)
class Normal:
    mu: float
    var: float

    def __post_init__(self):
        if not (math.isfinite(self.mu) and math.isfinite(self.var)) or self.var <= 0:
            raise UnsupportedPrior(f"normal prior needs finite mean and var > 0, got ({self.mu}, {self.var})")

    @property
    def mean(self) -> float:
        return self.mu

    @property
    def sd(self) -> float:
        return math.sqrt(self.var)

    def sample(self, rng: np.random.Generator, size: int) -> np.ndarray:
        return rng.normal(self.mu, self.sd, size)

    def rescaled(self, sd: float) -> "Normal":
        return Normal(self.mu, sd * sd)


@dataclass(frozen=True)
class MixtureNormal:
    """``weight * N(mean1, var1) + (1 - weight) * N(mean2, var2)``."""

    weight: float
    mean1: float
    var1: float
    mean2: float
    var2: float

    def __post_init__(self):
        if not 0.0 < self.weight < 1.0:
            raise UnsupportedPrior(f"mixture weight must lie in (0, 1), got {self.weight}")
        # component validation
        Normal(self.mean1, self.var1)
        Normal(self.mean2, self.var2)

    @property
    def mean(self) -> float:
        return self.weight * self.mean1 + (1.0 - self.weight) * self.mean2

    @property
    def sd(self) -> float:
        w = self.weight
        second = w * (self.var1 + self.mean1**2) + (1 - w) * (self.var2 + self.mean2**2)
        return math.sqrt(second - self.mean**2)

    def components(self) -> list[tuple[float, Normal]]:
        return [(self.weight, Normal(self.mean1, self.var1)),
                (1.0 - self.weight, Normal(self.mean2, self.var2))]

    def sample(self, rng: np.random.Generator, size: int) -> np.ndarray:
        first = rng.random(size) < self.weight
        a = rng.normal(self.mean1, math.sqrt(self.var1), size)
        b = rng.normal(self.mean2, math.sqrt(self.var2), size)
        return np.where(first, a, b)

    def rescaled(self, sd: float) -> "MixtureNormal":
        c, m = sd / self.sd, self.mean
        return MixtureNormal(self.weight,
                             m + c * (self.mean1 - m), c * c * self.var1,
                             m + c * (self.mean2 - m), c * c * self.var2)


TauDistribution = Uniform | Normal | MixtureNormal

_FAMILIES = {
    "uniform": (Uniform, ("low", "high")),
    "normal": (Normal, ("mean", "var")),
    "mixture": (MixtureNormal, ("weight", "mean1", "var1", "mean2", "var2")),
}


def prior_from_dict(spec: dict) -> TauDistribution:
    """Build a prior from ``{"family": ..., <parameters>}``; unknown keys are rejected."""
    if not isinstance(spec, dict) or "family" not in spec:
        raise UnsupportedPrior("tau prior must be an object with a 'family' key")
    family = spec["family"]
    if family not in _FAMILIES:
        raise UnsupportedPrior(f"unknown tau family {family!r}; expected one of {sorted(_FAMILIES)}")
    cls, fields = _FAMILIES[family]
    keys = set(spec) - {"family"}
    if keys != set(fields):
        raise UnsupportedPrior(f"{family} prior takes exactly {list(fields)}, got {sorted(keys)}")
    try:
        values = [float(spec[f]) for f in fields]
    except (TypeError, ValueError) as exc:
        raise UnsupportedPrior(f"non-numeric {family} prior parameter: {exc}") from None
    return cls(*values)


def prior_to_dict(prior: TauDistribution) -> dict:
    for family, (cls, fields) in _FAMILIES.items():
        if type(prior) is cls:
            values = list(asdict(prior).values())
            return {"family": family, **dict(zip(fields, values))}
    raise UnsupportedPrior(f"unsupported prior type {type(prior).__name__}")
