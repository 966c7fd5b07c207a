"""The eleven acceptance criteria at their stated tolerances.

Each test records a one-line verdict; ``conftest.py`` prints them after the
run so the table appears in captured output as well.
"""

import pytest

from slext.acceptance import CRITERIA, format_table, run_criterion


@pytest.mark.parametrize("number", sorted(CRITERIA), ids=lambda n: f"criterion_{n:02d}")
def test_criterion(number, acceptance_results):
    res = run_criterion(number, None, False)
    acceptance_results[number] = res
    print(format_table([res], verbose=True))
    assert res.passed, format_table([res], verbose=True)
