from __future__ import annotations

import math

import numpy as np
import pytest

from panelprobit.errors import UnsupportedPrior
from panelprobit.priors import MixtureNormal, Normal, Uniform, prior_from_dict, prior_to_dict


def test_moments():
    assert Uniform(-3, 3).sd == pytest.approx(math.sqrt(3))
    assert Normal(1, 4).sd == 2.0
    mix = MixtureNormal(0.5, -6, 9, 6, 9)
    assert mix.mean == 0.0
    assert mix.sd == pytest.approx(math.sqrt(45))


@pytest.mark.parametrize("prior", [Uniform(-2, 5), Normal(1, 4), MixtureNormal(0.3, -6, 9, 6, 4)])
def test_sampling_moments(prior):
    x = prior.sample(np.random.default_rng(0), 200_000)
    assert x.mean() == pytest.approx(prior.mean, abs=5 * prior.sd / math.sqrt(x.size))
    assert x.std() == pytest.approx(prior.sd, rel=0.02)


@pytest.mark.parametrize("prior", [Uniform(-2, 5), Normal(1, 4), MixtureNormal(0.3, -6, 9, 6, 4)])
def test_rescaled_keeps_mean(prior):
    r = prior.rescaled(10.0)
    assert r.sd == pytest.approx(10.0)
    assert r.mean == pytest.approx(prior.mean)


@pytest.mark.parametrize("prior", [Uniform(-2, 5), Normal(1, 4), MixtureNormal(0.3, -6, 9, 6, 4)])
def test_dict_round_trip(prior):
    assert prior_from_dict(prior_to_dict(prior)) == prior


@pytest.mark.parametrize("spec", [
    {"family": "cauchy"},
    {"family": "normal", "mean": 0},
    {"family": "normal", "mean": 0, "var": 1, "sd": 1},
    {"family": "normal", "mean": 0, "var": -1},
    {"family": "uniform", "low": 1, "high": 1},
    {"family": "mixture", "weight": 1.0, "mean1": 0, "var1": 1, "mean2": 0, "var2": 1},
    "normal",
])
def test_rejects_bad_specs(spec):
    with pytest.raises(UnsupportedPrior):
        prior_from_dict(spec)
