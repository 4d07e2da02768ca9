"""The nine acceptance criteria, each at its stated tolerance.

Each test prints one PASS/FAIL line; the lines are repeated in the pytest
terminal summary.
"""
import pytest

from repint import acceptance

from conftest import ACCEPTANCE_LINES


@pytest.mark.parametrize(
    "criterion", acceptance.CRITERIA, ids=[f"{k + 1}-{c.__name__[10:]}" for k, c in enumerate(acceptance.CRITERIA)]
)
def test_criterion(fixtures, criterion):
    result = criterion(fixtures, dict(acceptance.TOLERANCES))
    line = result.line()
    print(line)
    ACCEPTANCE_LINES.append(line)
    assert result.passed, result.to_json()


def test_criteria_are_numbered_one_to_nine(fixtures):
    assert len(acceptance.CRITERIA) == 9


def test_tightened_threshold_fails(fixtures):
    # thresholds are applied at the edge; tightening one must flip its verdict
    tol = dict(acceptance.TOLERANCES, coincidence=1e-30)
    assert not acceptance.criterion_coincidence(fixtures, tol).passed
