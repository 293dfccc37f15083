"""Acceptance gate: the twelve end-to-end checks at their stated scales.

Each test runs one check, prints a single PASS/FAIL line to the live
terminal, and asserts the verdict.  Set STOCENTER_ACCEPTANCE_SCALE=quick
for a fast reduced-count run during development.
"""

import os

import pytest

from stocenter import verification

SCALE = os.environ.get("STOCENTER_ACCEPTANCE_SCALE", "full")


@pytest.mark.parametrize("criterion", verification.CRITERIA,
                         ids=[fn.__name__ for fn in verification.CRITERIA])
def test_acceptance(criterion, capsys):
    result = criterion(SCALE)
    with capsys.disabled():
        print(f"{'PASS' if result.passed else 'FAIL'} "
              f"{result.name}: {result.detail}")
    assert result.passed, f"{result.name}: {result.detail}"
