from __future__ import annotations

import pytest

# Employment runs patterns, order n000,n001,n010,n100,n110,n011,n101,n111.
RUNS_PANELS = {
    "45-59/1968-70": (87, 5, 5, 4, 8, 10, 1, 78),
    "45-59/1971-73": (96, 5, 4, 8, 5, 2, 2, 76),
    "30-44/1968-70": (126, 16, 4, 12, 24, 20, 5, 125),
    "30-44/1971-73": (133, 13, 5, 16, 8, 19, 8, 130),
}


@pytest.fixture
def runs_panels():
    return dict(RUNS_PANELS)


def pytest_terminal_summary(terminalreporter):
    from test_acceptance import RESULTS

    if not RESULTS:
        return
    terminalreporter.section("acceptance criteria")
    for line in RESULTS:
        terminalreporter.write_line(line)
