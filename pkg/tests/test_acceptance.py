"""Acceptance criteria A1-A11, one line each.

Hard criteria are asserted; the soft criterion only prints.
"""

import pytest

from latticegrow import harness

RESULTS: dict = {}


@pytest.mark.parametrize("cid", [f"A{i}" for i in range(1, 12)])
def test_criterion(cid, tmp_path):
    (c,) = harness.run_acceptance((cid,), tmp_path)
    RESULTS[cid] = c.line()
    print(c.line())
    if not c.soft:
        assert c.passed, c.line()
