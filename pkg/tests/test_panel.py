from __future__ import annotations

import io

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from panelprobit.errors import DuplicateRow, NonBinaryOutcome, RaggedPanel, SchemaError, WrongHorizon
from panelprobit.panel import PanelData, panel_to_csv_text, parse_panel_csv


def parse(text: str) -> PanelData:
    return parse_panel_csv(io.StringIO(text))


def test_minimal_panel():
    p = parse("id,t,d\na,1,0\na,2,1\nb,1,1\nb,2,1\n")
    assert (p.n, p.T, p.k) == (2, 2, 0)
    np.testing.assert_array_equal(p.outcomes, [[0, 1], [1, 1]])


def test_covariates_and_order():
    p = parse("id,t,d,x1,x2\nz,2,1,3,4\nz,1,0,1,2\na,1,1,5,6\na,2,0,7,8\n")
    assert p.row_ids() == ("z", "a")
    assert p.k == 2
    np.testing.assert_array_equal(p.covariates[0], [[1, 2], [3, 4]])


def test_non_binary_names_line():
    with pytest.raises(NonBinaryOutcome, match="line 3"):
        parse("id,t,d\na,1,0\na,2,2\n")


def test_missing_wave():
    with pytest.raises(RaggedPanel):
        parse("id,t,d\na,1,0\na,3,1\n")


def test_unequal_horizons():
    with pytest.raises(RaggedPanel):
        parse("id,t,d\na,1,0\na,2,1\nb,1,1\nb,2,1\nb,3,0\n")


def test_duplicate_row():
    with pytest.raises(DuplicateRow, match="line 4"):
        parse("id,t,d\na,1,0\na,2,1\na,2,1\n")


@pytest.mark.parametrize("text", [
    "", "id,t\n", "id,t,d,z\na,1,0,1\n", "id,t,d\na,one,0\n", "id,t,d\na,1\n",
    "id,t,d,x1\na,1,0,abc\n", "id,t,d\n",
])
def test_schema_errors(text):
    with pytest.raises(SchemaError):
        parse(text)


def test_wrong_horizon():
    with pytest.raises(WrongHorizon):
        parse("id,t,d\na,1,0\na,2,1\na,3,1\na,4,0\n")


def test_pattern_counts():
    p = PanelData(np.array([[0, 1], [0, 1], [1, 1]]))
    assert p.pattern_counts() == {(0, 1): 2, (1, 1): 1}
    q = PanelData.from_pattern_counts({(0, 1): 2, (1, 1): 1})
    assert q.pattern_counts() == p.pattern_counts()


@settings(max_examples=50, deadline=None)
@given(
    st.integers(1, 8), st.sampled_from([2, 3]), st.integers(0, 2), st.data(),
)
def test_round_trip(n, T, k, data):
    d = np.array(data.draw(st.lists(st.lists(st.integers(0, 1), min_size=T, max_size=T), min_size=n, max_size=n)))
    x = None
    if k:
        flat = data.draw(st.lists(st.floats(-1e6, 1e6, allow_nan=False), min_size=n * T * k, max_size=n * T * k))
        x = np.array(flat).reshape(n, T, k)
    p = PanelData(d, x)
    q = parse(panel_to_csv_text(p))
    np.testing.assert_array_equal(q.outcomes, p.outcomes)
    if k:
        np.testing.assert_array_equal(q.covariates, p.covariates)
    else:
        assert q.covariates is None
    assert panel_to_csv_text(q) == panel_to_csv_text(p)
