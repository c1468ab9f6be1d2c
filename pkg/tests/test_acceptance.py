"""Exit criteria, one test per criterion; each prints its pass/fail line."""

import pytest

from sparsewalk import acceptance


@pytest.mark.parametrize("index", sorted(acceptance.CRITERIA))
def test_criterion(index):
    result = acceptance.run_criterion(index)
    print(result.summary_line())
    failed = {name: ok for name, ok in result.checks.items() if not ok}
    assert result.passed, (
        f"criterion {index} failed checks {sorted(failed)}; values: {result.values}"
    )
