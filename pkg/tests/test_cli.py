import csv
import dataclasses
import io
import json
import logging
import math

import numpy as np
import pytest

from modules.cli import (
    EXIT_INVALID,
    EXIT_IO,
    EXIT_NUMERIC,
    EXIT_OK,
    PUBLISHED_N_LIST,
    PUBLISHED_TABLES,
    ExperimentRun,
    build_parser,
    main,
    run_experiment,
    suspected_errata,
    table_rows,
)
from modules.analysis import ErrorReport
from modules.config import ExperimentConfig
from modules.errors import ConfigError
from modules.metadata import ExperimentMetadata

SMALL = {
    "function": "expr:sin(3*x) + x**2",
    "d": 1,
    "n_list": [4, 8, 16],
    "p_list": [1, 2],
    "resolution": 41,
    "quadrature": {"panels": 8, "nodes": 6},
}


def _write_config(tmp_path, data, name="config.json"):
    path = tmp_path / name
    path.write_text(json.dumps(data), encoding="utf-8")
    return str(path)


def _read_csv(path):
    with open(path, newline="", encoding="utf-8") as f:
        return list(csv.reader(f))


def test_run_writes_csv(tmp_path):
    out = tmp_path / "results" / "small.csv"
    assert main(["run", "--config", _write_config(tmp_path, SMALL), "--out", str(out)]) == EXIT_OK
    rows = _read_csv(out)
    assert rows[0] == ["n", "sup_error", "l1_error", "lp_error_p=2", "runtime_ms", "config_hash"]
    assert [row[0] for row in rows[1:]] == ["4", "8", "16"]
    sup = [float(row[1]) for row in rows[1:]]
    assert sup[2] < sup[0]
    assert len({row[5] for row in rows[1:]}) == 1


def test_thread_count_does_not_change_results(tmp_path):
    config = _write_config(tmp_path, SMALL)
    one, two = tmp_path / "one.csv", tmp_path / "two.csv"
    assert main(["run", "--config", config, "--out", str(one), "--threads", "1"]) == EXIT_OK
    assert main(["run", "--config", config, "--out", str(two), "--threads", "2"]) == EXIT_OK
    strip = lambda rows: [row[:4] + row[5:] for row in rows]  # noqa: E731
    assert strip(_read_csv(one)) == strip(_read_csv(two))


def test_run_to_stdout_and_overrides(tmp_path, capsys):
    config = _write_config(tmp_path, SMALL)
    assert main(["run", "--config", config, "--resolution", "5", "--quad-panels", "4", "--quad-nodes", "4"]) == 0
    rows = list(csv.reader(io.StringIO(capsys.readouterr().out)))
    assert len(rows) == 4


def test_run_exit_codes(tmp_path):
    assert main(["run", "--config", str(tmp_path / "missing.json")]) == EXIT_IO
    assert main(["run", "--config", _write_config(tmp_path, {"n_list": []})]) == EXIT_INVALID
    assert main(["run", "--config", _write_config(tmp_path, {**SMALL, "activation": "relu"})]) == EXIT_INVALID

    broken = tmp_path / "broken.json"
    broken.write_text('{"n_list": [10,', encoding="utf-8")
    assert main(["run", "--config", str(broken)]) == EXIT_INVALID

    blocker = tmp_path / "blocker"
    blocker.write_text("", encoding="utf-8")
    config = _write_config(tmp_path, SMALL)
    assert main(["run", "--config", config, "--out", str(blocker / "out.csv")]) == EXIT_IO

    dead_zone = {
        "function": "expr:x",
        "d": 1,
        "n_list": [80],
        "measure": "density:(t1 - 0.5 + Abs(t1 - 0.5))**2",
        "resolution": 11,
    }
    assert main(["run", "--config", _write_config(tmp_path, dead_zone, "dead.json")]) == EXIT_NUMERIC


def test_grid_dumps_are_written_next_to_the_output(tmp_path):
    out = tmp_path / "dump.csv"
    config = _write_config(tmp_path, {**SMALL, "n_list": [4], "dump_grids": True})
    assert main(["run", "--config", config, "--out", str(out)]) == EXIT_OK
    assert (tmp_path / "dump_grid_n4.txt").exists()

    with pytest.raises(ConfigError):
        run_experiment(ExperimentConfig(n_list=(4,), dump_grids=True))


def test_grid_command(tmp_path):
    data = {"function": "f1", "n_list": [5], "resolution": 6, "quadrature": {"panels": 8, "nodes": 6}}
    config = _write_config(tmp_path, data)
    dump = tmp_path / "grid.txt"
    assert main(["grid", "--config", config, "--n", "5", "--out", str(dump)]) == EXIT_OK
    lines = dump.read_text(encoding="utf-8").splitlines()
    comments = [line for line in lines if line.startswith("#")]
    assert comments[0].startswith("# experiment_config: ")
    body = [line for line in lines if not line.startswith("#")]
    assert body[0] == "x y f Sf"
    values = np.array([[float(v) for v in line.split()] for line in body[1:]])
    assert values.shape == (36, 4)

    table = tmp_path / "table.csv"
    assert main(["run", "--config", config, "--out", str(table)]) == EXIT_OK
    sup = float(_read_csv(table)[1][1])
    assert np.max(np.abs(values[:, 2] - values[:, 3])) == pytest.approx(sup, abs=1e-11)

    assert main(["grid", "--config", config, "--n", "5"]) == EXIT_INVALID


def test_grid_of_constant_function(tmp_path):
    config = _write_config(tmp_path, {"function": "expr:3", "n_list": [5], "resolution": 4})
    dump = tmp_path / "constant.txt"
    assert main(["grid", "--config", config, "--n", "5", "--out", str(dump)]) == EXIT_OK
    body = [line for line in dump.read_text(encoding="utf-8").splitlines() if not line.startswith("#")][1:]
    np.testing.assert_allclose([float(line.split()[3]) for line in body], 3.0, rtol=1e-12)


def test_ratio_command(tmp_path, capsys):
    assert main(["ratio", "--delta", "0.5", "--activation", "tanh"]) == EXIT_OK
    rows = list(csv.reader(io.StringIO(capsys.readouterr().out)))
    assert rows[0] == ["n", "ratio", "log_ratio", "log_residual"]
    assert [int(row[0]) for row in rows[1:]] == list(range(10, 201, 10))
    ratios = [float(row[1]) for row in rows[1:]]
    assert all(b < a for a, b in zip(ratios, ratios[1:]))

    assert main(["ratio", "--delta", "1.0"]) == EXIT_INVALID
    assert main(["ratio", "--delta", "0.5", "--activation", "custom:1/(1+exp(-x))", "--n-list", "10,20"]) == 0
    rows = list(csv.reader(io.StringIO(capsys.readouterr().out)))
    assert [row[3] for row in rows[1:]] == ["", ""]


def test_moments_command(capsys):
    assert main(["moments", "--r-list", "0,1"]) == EXIT_OK
    rows = list(csv.reader(io.StringIO(capsys.readouterr().out)))
    assert rows[0] == ["r", "moment", "tail_residual", "diverged"]
    assert float(rows[1][1]) == pytest.approx(1.0, abs=1e-10)
    assert [row[3] for row in rows[1:]] == ["no", "no"]
    assert main(["moments", "--r-list", "-1"]) == EXIT_INVALID


def test_check_command(capsys):
    assert main(["check"]) == EXIT_OK
    output = capsys.readouterr().out
    assert "activation logistic" in output and "positive" in output
    dead_zone = "density:(t1 - 0.5 + Abs(t1 - 0.5))**2"
    assert main(["check", "--measure", dead_zone, "--d", "1"]) == EXIT_INVALID
    assert main(["check", "--activation", "custom:1/(1+exp(-x))**2"]) == EXIT_INVALID


def test_table_command_rejects_empty_selection():
    assert main(["table", "1", "--n-max", "5"]) == EXIT_INVALID


def test_usage_errors_exit_with_one():
    for argv in (["frobnicate"], ["ratio"], ["table", "9"], []):
        with pytest.raises(SystemExit) as caught:
            main(argv)
        assert caught.value.code == 1
    assert build_parser().parse_args(["run", "--config", "x.json"]).threads is None


def test_suspected_errata():
    assert suspected_errata(3) == {100, 120, 140, 160, 180}
    for table_id in (1, 2, 4, 5, 6):
        assert suspected_errata(table_id) == set()


def _published_run(table_id):
    preset = PUBLISHED_TABLES[table_id]
    config = preset.config()
    reports = []
    for i, n in enumerate(PUBLISHED_N_LIST):
        sup = preset.columns["sup"][i] if "sup" in preset.columns else 1.0
        reports.append(ErrorReport(n=n, sup_error=sup, lp_errors=((1.0, preset.columns["l1"][i]),), runtime_ms=0.0))
    return ExperimentRun(config=config, metadata=ExperimentMetadata(config), reports=tuple(reports))


def test_table_rows_statuses():
    header, rows, counts = table_rows(3, _published_run(3))
    assert header[-1] == "status"
    assert counts == {"ok": 5, "FAIL": 0, "ERRATUM-SUSPECT": 5, "unscored": 0}
    assert {row[0] for row in rows if row[-1] == "ERRATUM-SUSPECT"} == {"100", "120", "140", "160", "180"}

    _, rows, counts = table_rows(1, _published_run(1))
    assert counts == {"ok": 10, "FAIL": 0, "ERRATUM-SUSPECT": 0, "unscored": 10}
    assert all(float(row[4]) == 0.0 for row in rows)


def test_table_rows_flag_deviations():
    run = _published_run(4)
    shifted = tuple(
        ErrorReport(n=r.n, sup_error=r.sup_error, lp_errors=((1.0, 1.5 * r.lp(1.0)),), runtime_ms=0.0)
        for r in run.reports
    )
    _, _, counts = table_rows(4, ExperimentRun(config=run.config, metadata=run.metadata, reports=shifted))
    assert counts["FAIL"] == 10


def test_weighted_runs_write_the_unweighted_errors(tmp_path, caplog):
    out = tmp_path / "weighted.csv"
    config = _write_config(tmp_path, {**SMALL, "measure": "jacobi:0.5,0.5"})
    with caplog.at_level(logging.WARNING, logger="cli"):
        assert main(["run", "--config", config, "--out", str(out)]) == EXIT_OK
    assert "unweighted x mass" in caplog.text

    rows = _read_csv(out)
    assert rows[0] == [
        "n", "sup_error", "l1_error", "lp_error_p=2",
        "unweighted_l1_error", "unweighted_lp_error_p=2", "cross_check",
        "runtime_ms", "config_hash",
    ]
    for row in rows[1:]:
        assert float(row[6]) == pytest.approx(float(row[4]) * math.pi / 8.0, rel=1e-9)


def test_table_rows_list_the_unweighted_reading():
    run = _published_run(5)
    weighted = tuple(
        dataclasses.replace(r, unweighted_lp_errors=((1.0, 2.0 * r.lp(1.0)),), norm_mass=0.5) for r in run.reports
    )
    _, rows, counts = table_rows(5, ExperimentRun(config=run.config, metadata=run.metadata, reports=weighted))
    assert counts == {"ok": 10, "FAIL": 0, "ERRATUM-SUSPECT": 0, "unscored": 20}
    cross = [row for row in rows if row[1] == "l1_unweighted_x_mass"]
    assert len(cross) == 10
    assert all(float(row[4]) == pytest.approx(0.0, abs=1e-4) for row in cross)


def test_three_dimensional_run_with_default_quadrature():
    run = run_experiment(ExperimentConfig(n_list=(3,), function="expr:x*y*z", d=3, resolution=11))
    assert len(run.reports) == 1
    assert 0.0 < run.reports[0].sup_error < 1.0
