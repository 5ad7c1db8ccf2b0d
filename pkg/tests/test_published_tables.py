"""
Reruns of the published error tables. Each table takes a few seconds; run
with  pytest -m slow  (or deselect with  -m "not slow").
"""

import pytest

from modules.analysis import rate_fit
from modules.cli import PUBLISHED_N_LIST, PUBLISHED_TABLES, run_experiment, table_rows

pytestmark = pytest.mark.slow

RATE_N_LIST = (10, 20, 40, 80, 160)

_runs = {}


def _run(table_id, n_list=PUBLISHED_N_LIST):
    key = (table_id, tuple(n_list))
    if key not in _runs:
        _runs[key] = run_experiment(PUBLISHED_TABLES[table_id].config(n_list).with_overrides(threads=4))
    return _runs[key]


@pytest.mark.parametrize("table_id", [1, 2])
def test_smooth_function_tables(table_id):
    _, rows, counts = table_rows(table_id, _run(table_id, PUBLISHED_N_LIST[:5]))
    failing = [row for row in rows if row[-1] == "FAIL"]
    assert not failing, failing
    assert counts["ok"] == 10


@pytest.mark.parametrize("table_id", [3, 4, 5, 6])
def test_discontinuous_function_tables(table_id):
    _, rows, counts = table_rows(table_id, _run(table_id))
    failing = [row for row in rows if row[-1] == "FAIL"]
    assert not failing, failing
    expected_suspects = 5 if table_id == 3 else 0
    assert counts["ERRATUM-SUSPECT"] == expected_suspects
    assert counts["ok"] == 10 - expected_suspects


def test_weighted_runs_record_the_unweighted_errors():
    run = _run(5, PUBLISHED_N_LIST[:3])
    for report in run.reports:
        assert [p for p, _ in report.unweighted_lp_errors] == [1.0]
        assert report.unweighted_lp_errors[0][1] > 0.0


@pytest.mark.parametrize("table_id", [1, 2])
def test_l1_rate(table_id):
    assert rate_fit(_run(table_id, RATE_N_LIST).reports, which="lp", p=1.0).slope <= -0.9


def test_tanh_sup_rate():
    assert rate_fit(_run(2, RATE_N_LIST).reports, which="sup").slope <= -0.9


def test_logistic_sup_rate():
    # the logistic kernel is wide, so n = 10 sits before the asymptotic regime
    reports = _run(1, RATE_N_LIST).reports
    assert rate_fit(reports[1:], which="sup").slope <= -0.9
    assert rate_fit(reports, which="sup").slope <= -0.8
