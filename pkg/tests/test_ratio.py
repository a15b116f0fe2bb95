from __future__ import annotations

import math

import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from panelprobit.core_math import g_function
from panelprobit.errors import DegenerateCounts, WrongHorizon
from panelprobit.panel import PanelData
from panelprobit.priors import Normal
from panelprobit.ratio import (
    TransitionCounts,
    asymptotic_variance,
    cell_probabilities,
    count_transitions,
    estimate_gamma_ratio,
)


def test_one_of_each():
    p = PanelData(np.array([[0, 0], [0, 1], [1, 0], [1, 1]]))
    assert count_transitions(p) == TransitionCounts(1, 1, 1, 1)


def test_empty_panel():
    p = PanelData(np.zeros((0, 2), dtype=int))
    assert count_transitions(p) == TransitionCounts(0, 0, 0, 0)


def test_ten_one_zero():
    assert count_transitions(PanelData(np.tile([1, 0], (10, 1)))) == TransitionCounts(0, 0, 10, 0)


def test_wrong_horizon():
    with pytest.raises(WrongHorizon):
        count_transitions(PanelData(np.zeros((2, 3), dtype=int)))


def test_symmetric_counts():
    est = estimate_gamma_ratio(TransitionCounts(n01=100, n10=100))
    assert est.gamma_hat == 0.0
    assert est.sigma2 == pytest.approx(8 / math.pi, rel=1e-12)
    assert est.se == pytest.approx(math.sqrt(8 / math.pi) / 10, rel=1e-12)
    assert est.se == pytest.approx(0.1596, abs=1e-4)


@pytest.mark.parametrize("c", [1, 3, 17])
def test_counts_built_from_g(c):
    counts = TransitionCounts(n10=round(1000 * g_function(1.0) * c), n01=round(1000 * c))
    assert estimate_gamma_ratio(counts).gamma_hat == pytest.approx(1.0, abs=5e-3)


@pytest.mark.parametrize("counts", [TransitionCounts(5, 0, 3, 5), TransitionCounts(5, 3, 0, 5)])
def test_degenerate(counts):
    with pytest.raises(DegenerateCounts) as info:
        estimate_gamma_ratio(counts)
    assert info.value.to_dict()["counts"] == {"n10": counts.n10, "n01": counts.n01}


@given(st.integers(1, 500), st.integers(1, 500), st.integers(0, 500), st.integers(0, 500), st.integers(2, 50))
def test_scale_invariance(n01, n10, n00, n11, factor):
    a = estimate_gamma_ratio(TransitionCounts(n00, n01, n10, n11))
    b = estimate_gamma_ratio(TransitionCounts(n00, n01, n10, n11).scaled(factor))
    assert b.gamma_hat == a.gamma_hat
    assert b.se == pytest.approx(a.se / math.sqrt(factor), rel=1e-12)


@given(st.integers(1, 500), st.integers(1, 500), st.integers(0, 500), st.integers(0, 500))
def test_stayers_are_ignored(n01, n10, n00, n11):
    assert estimate_gamma_ratio(TransitionCounts(n00, n01, n10, n11)).gamma_hat == \
        estimate_gamma_ratio(TransitionCounts(0, n01, n10, 0)).gamma_hat


def test_variance_formula():
    for g in (-1.0, 0.5, 2.0):
        G = g_function(g)
        h = 1e-6
        dG = (g_function(g + h) - g_function(g - h)) / (2 * h)
        assert asymptotic_variance(g) == pytest.approx((G + G * G) / dG ** 2, rel=1e-8)


def test_cell_probabilities_sum():
    cells = cell_probabilities(0.7, Normal(0, 4))
    assert sum(cells.values()) == pytest.approx(1.0, abs=1e-8)
