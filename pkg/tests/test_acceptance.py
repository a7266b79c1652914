"""Acceptance criteria 1-15, one test per criterion.

Each test runs (once, cached) the experiment suite that owns the criterion
with the default configuration and prints one PASS/FAIL line with the
measured values.  Grid sizes are the suite defaults: N=16, except the Hodge
checks (N=8, dense) and the group operations (N=32).
"""

import pytest

from contactlab.suites import SUITE_CRITERIA, ExperimentConfig, run_suite

OWNER = {c: suite for suite, entries in SUITE_CRITERIA.items() for c, _ in entries}


@pytest.fixture(scope="module")
def suite_report(tmp_path_factory):
    cache = {}
    out = tmp_path_factory.mktemp("acceptance")

    def get(suite):
        if suite not in cache:
            cache[suite] = run_suite(suite, ExperimentConfig(out=str(out)))
        return cache[suite]

    return get


@pytest.mark.parametrize("criterion", range(1, 16), ids=lambda c: f"criterion_{c:02d}")
def test_criterion(criterion, suite_report, capsys):
    check = suite_report(OWNER[criterion]).check(criterion)
    with capsys.disabled():
        print("\n" + check.line())
    assert check.passed, check.line()
