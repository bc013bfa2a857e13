"""One test per acceptance criterion; each prints a PASS/FAIL line with its measurements."""

import json

import pytest

from conftest import ACCEPTANCE_LINES
from staircase.verify import CRITERIA, run_criteria


@pytest.mark.parametrize("number", sorted(CRITERIA))
def test_criterion(number):
    result = run_criteria([number])[0]
    line = f"{result.line()}  ({result.runtime:.2f} s)  {json.dumps(result.measured, sort_keys=True, default=str)}"
    print(line)
    ACCEPTANCE_LINES.append(line)
    assert result.passed, line
