from __future__ import annotations

import math

import numpy as np
import pytest

from panelprobit.core_math import pattern_product, tau_weighted_integral
from panelprobit.errors import AllReplicationsFailed, ConfigError, UnsupportedPrior
from panelprobit.priors import MixtureNormal, Normal, Uniform
from panelprobit.simulation import (
    SimulationScenario,
    run_rmse_experiment,
    simulate_panel,
    summarize,
)


def scenario(**kw):
    base = dict(n=500, horizon=2, gamma_true=0.0, tau=Normal(0, 4), replications=10, seed=1,
                estimators=("ratio",))
    base.update(kw)
    return SimulationScenario(**base)


def test_fair_coins_without_effects():
    panel = simulate_panel(scenario(n=10_000, tau=Normal(0, 1e-12)), 0)
    mean = panel.outcomes.mean(axis=0)
    assert np.all(np.abs(mean - 0.5) <= 3 * math.sqrt(0.25 / 10_000))


def test_large_effects_give_ones():
    panel = simulate_panel(scenario(n=1000, gamma_true=0.5, tau=Uniform(9.999, 10.001)), 0)
    assert panel.outcomes.all()


def test_switch_ratio_matches_quadrature():
    prior = Normal(0, 4)
    panel = simulate_panel(scenario(n=1_000_000, gamma_true=1.0, tau=prior), 0)
    d = panel.outcomes
    n10 = int(np.sum((d[:, 0] == 1) & (d[:, 1] == 0)))
    n01 = int(np.sum((d[:, 0] == 0) & (d[:, 1] == 1)))
    ratio = n10 / n01
    oracle = (tau_weighted_integral(pattern_product((1, 0), 1.0), prior)
              / tau_weighted_integral(pattern_product((0, 1), 1.0), prior))
    mc_se = ratio * math.sqrt(1 / n10 + 1 / n01)
    assert abs(ratio - oracle) <= 3 * mc_se


def test_covariate_law():
    s = scenario(n=50_000, beta_true=(0.5, -1.0), covariate_law="differenced_normal", horizon=3,
                 estimators=("heckman",))
    x = simulate_panel(s, 0).covariates
    assert x.shape == (50_000, 3, 2)
    np.testing.assert_allclose(x[:, 0].std(axis=0), 1.0, atol=0.02)
    np.testing.assert_allclose((x[:, 1] - x[:, 0]).std(axis=0), 1.0, atol=0.02)
    assert abs(np.corrcoef(x[:, 0, 0], x[:, 1, 0] - x[:, 0, 0])[0, 1]) < 0.02


def test_streams_are_distinct_and_stable():
    s = scenario()
    a, b = simulate_panel(s, 0), simulate_panel(s, 1)
    assert not np.array_equal(a.outcomes, b.outcomes)
    np.testing.assert_array_equal(simulate_panel(s, 1).outcomes, b.outcomes)


def test_reproducible_and_order_free():
    s = scenario(estimators=("ratio", "heckman"), replications=4, n=400)
    serial = run_rmse_experiment(s)
    again = run_rmse_experiment(s)
    parallel = run_rmse_experiment(s, workers=2)
    assert serial.to_dict() == again.to_dict() == parallel.to_dict()
    assert serial.records == parallel.records


def test_sigma_scaling():
    s = scenario(sigma_scaling=0.5, n=400, tau=Normal(0, 1))
    assert s.effective_tau.sd == pytest.approx(0.5 * 20)


def test_null_calibration():
    s = scenario(replications=60, n=1000, beta_true=(0.5,), covariate_law="differenced_normal",
                 estimators=("ratio", "glm_dynamic", "glm_static"), tau=Normal(0, 2))
    report = run_rmse_experiment(s)
    for row in report.rows:
        if row.parameter == "gamma":
            assert abs(row.bias) <= 3 * row.bias_se
        assert row.rmse >= abs(row.bias)


def test_failures_are_counted():
    # tiny panels with wide effects frequently have no switchers of one kind
    s = scenario(n=30, tau=Normal(0, 25), replications=40)
    report = run_rmse_experiment(s)
    row = report.row("ratio", "gamma")
    assert row.failures > 0
    assert row.replications_used + row.failures == 40
    assert {f["error"] for f in report.failures} == {"DegenerateCounts"}


def test_all_replications_failed():
    with pytest.raises(AllReplicationsFailed):
        run_rmse_experiment(scenario(tau=Uniform(50, 51), replications=3))


def test_mixture_sigma_reference():
    s = scenario(tau=MixtureNormal(0.5, -6, 9, 6, 9), estimators=("ratio", "heckman"))
    from panelprobit.simulation import truths
    assert truths(s, "heckman")["sigma"] == pytest.approx(math.sqrt(45))


def test_summarize():
    rmse, bias, mc_se, bias_se = summarize(np.array([1.0, -1.0, 1.0, -1.0]))
    assert (rmse, bias) == (1.0, 0.0)
    assert mc_se == 0.0
    assert bias_se == pytest.approx(np.std([1, -1, 1, -1], ddof=1) / 2)


class TestConfig:
    def base(self):
        return {"n": 100, "horizon": 2, "gamma_true": 0.5, "replications": 3, "seed": 9,
                "tau": {"family": "normal", "mean": 0, "var": 4}, "estimators": ["ratio"]}

    def test_round_trip(self):
        s = SimulationScenario.from_dict(self.base())
        assert SimulationScenario.from_dict(s.to_dict()) == s

    def test_unknown_key(self):
        with pytest.raises(ConfigError, match="replicatons"):
            SimulationScenario.from_dict({**self.base(), "replicatons": 5})

    def test_missing_key(self):
        cfg = self.base()
        del cfg["seed"]
        with pytest.raises(ConfigError):
            SimulationScenario.from_dict(cfg)

    @pytest.mark.parametrize("patch", [
        {"n": 1}, {"replications": 0}, {"horizon": 4}, {"estimators": ["ols"]},
        {"estimators": ["runs_t3"]}, {"estimators": ["glm_static"]}, {"horizon": 3},
        {"beta_true": [1.0]}, {"covariate_law": "differenced_normal"}, {"n": 10.5},
        {"seed": -1}, {"sigma_scaling": 0}, {"estimators": []},
    ])
    def test_invalid(self, patch):
        with pytest.raises(ConfigError):
            SimulationScenario.from_dict({**self.base(), **patch})

    def test_bad_prior(self):
        with pytest.raises(UnsupportedPrior):
            SimulationScenario.from_dict({**self.base(), "tau": {"family": "t", "df": 3}})
