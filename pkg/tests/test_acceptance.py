"""Acceptance suite, one test per criterion.

Each test prints a single PASS/FAIL line (also repeated in the terminal
summary). Thresholds live in ``xyotto.verify`` so that ``xyotto verify``
and this file measure exactly the same thing.
"""

import pytest

from xyotto import verify

RESULTS = {}


@pytest.mark.parametrize("criterion", verify.CRITERIA, ids=lambda f: f.__name__)
def test_criterion(criterion):
    res = criterion()
    bad = [c for c in res.checks if not c.passed]
    detail = "; ".join(
        f"{c.label}: measured {verify._fmt(c.measured)}, expected {verify._fmt(c.expected)} +- {verify._fmt(c.tolerance)}"
        for c in (bad or res.checks)
    )
    line = f"{'PASS' if res.passed else 'FAIL'} criterion {res.id} ({res.name}): {detail}"
    RESULTS[res.id] = line
    print(line)
    assert res.passed, line
