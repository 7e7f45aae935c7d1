import numpy as np
import pytest

from shaken.graph import validate_doubling
from shaken.verify import (
    DEFAULT_BUDGETS,
    CheckResult,
    format_report,
    k22_doubling,
    random_doubling,
    random_graph,
    run_verification,
)


def test_random_doublings_are_valid():
    rng = np.random.default_rng(0)
    for _ in range(50):
        d = random_doubling(rng)
        assert validate_doubling(d) == []
        assert 1 <= len(d.parent.free_sites) <= 4


def test_integer_graphs():
    g = random_graph(np.random.default_rng(1), integer=True)
    assert np.all(g.couplings == np.round(g.couplings))
    assert np.all(g.fields == np.round(g.fields))


def test_k22_structure():
    d = k22_doubling()
    assert validate_doubling(d) == []
    # both cross directions exist: the doubled graph is K_{2,2}
    assert sorted(zip(d.tails, d.heads)) == [(0, 1), (1, 0)]


def test_report_lists_each_check_once():
    results = run_verification(n_instances=3, n_minimum=4)
    assert [r.name for r in results] == list(DEFAULT_BUDGETS)
    text = format_report(results)
    assert text.count("PASS") + text.count("FAIL") == len(DEFAULT_BUDGETS)
    assert text.rstrip().endswith("all_passed true")


def test_budget_override_and_kinds():
    assert not CheckResult("x", 1e-15, 0.0).passed
    assert CheckResult("w", 1e-4, 1e-6, "min").passed
    assert not CheckResult("w", 1e-7, 1e-6, "min").passed
    with pytest.raises(KeyError):
        run_verification(n_instances=1, n_minimum=1, budgets={"nope": 1.0})
