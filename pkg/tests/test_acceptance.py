"""The thirteen numbered acceptance criteria, run once at full resolution.

Each test prints its criterion's pass/fail line to the terminal and then
asserts the outcome.  Criterion 7 is expected to fail (see the README).
"""
import os

import pytest

from hyperbubble.acceptance import run_all

CRITERIA = list(range(1, 14))


@pytest.fixture(scope="module")
def results():
    workers = int(os.environ.get("HYPERBUBBLE_WORKERS", os.cpu_count() or 1))
    res, elapsed = run_all(quick=False, seed=0, workers=workers)
    return {r.number: r for r in res}, elapsed


@pytest.mark.parametrize("number", CRITERIA)
def test_criterion(results, number, capsys):
    by_number, _ = results
    r = by_number[number]
    with capsys.disabled():
        print("\n" + r.line())
    assert r.passed, f"{r.line()}: {r.measured} {r.note}"
