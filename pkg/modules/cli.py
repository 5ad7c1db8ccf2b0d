"""
Command line entry point.

    run      error table for an experiment config
    table    rerun a published error table and compare row by row
    ratio    max/min kernel ratio of the uniform convergence hypothesis
    moments  discrete absolute moments M_r of a kernel
    grid     plot-ready dump of f and S_n f on the evaluation grid
    check    activation assumptions and measure positivity

Exit codes: 0 success, 1 invalid configuration or arguments (or a failed
check), 2 numeric guard, 3 I/O.
"""

import argparse
import concurrent.futures
import csv
import dataclasses
import io
import logging
import os
import sys
import time
import typing

import numpy as np

from .activation import check_assumptions, resolve_activation
from .analysis import ErrorReport, lp_error, sup_error
from .config import ExperimentConfig, ResolvedExperiment, load_config
from .errors import (
    ArtifactIOError,
    ConfigError,
    FitError,
    NumericGuardError,
    PreconditionError,
)
from .kernel import build_kernel, moment, ratio_condition, ratio_log_asymptote
from .measure import lebesgue, positivity_probe, resolve_measure
from .metadata import ExperimentMetadata
from .operator import Approximant, Field, OperatorConfig, classical_table, coefficients, evaluate_grid
from .utils.json_patterns import parse_float_list

logger = logging.getLogger("cli")

EXIT_OK = 0
EXIT_INVALID = 1
EXIT_NUMERIC = 2
EXIT_IO = 3

FLOAT_FORMAT = "%.12e"
PUBLISHED_N_LIST = (10, 20, 40, 60, 80, 100, 120, 140, 160, 180)
JACOBI_HALF = "jacobi:0.5,0.5,0.5,0.5"


@dataclasses.dataclass(frozen=True)
class TablePreset:
    """
    a published error table: the experiment producing it and its columns

    columns maps "sup" or "l1" to the published values, one per n in
    PUBLISHED_N_LIST. Rows with n above scored_n_max are printed but not scored.
    """

    caption: str
    activation: str
    measure: str
    function: str
    columns: dict[str, tuple[float, ...]]
    tolerance: float
    scored_n_max: int | None = None

    def config(self, n_list: typing.Sequence[int] = PUBLISHED_N_LIST) -> ExperimentConfig:
        return ExperimentConfig(
            n_list=tuple(n_list),
            activation=self.activation,
            measure=self.measure,
            norm_measure=self.measure,
            function=self.function,
            d=2,
            p_list=(1.0,),
            label=self.caption,
        )


PUBLISHED_TABLES: dict[int, TablePreset] = {
    1: TablePreset(
        caption="logistic, Lebesgue, f1",
        activation="logistic",
        measure="lebesgue",
        function="f1",
        columns={
            "sup": (0.6140847, 0.4217103, 0.2318002, 0.1577081, 0.1192026,
                    0.09571101, 0.07990336, 0.06854284, 0.05998377, 0.05330224),
            "l1": (0.18006860, 0.07929577, 0.02551001, 0.01215602, 0.00706165,
                   0.00460772, 0.00324348, 0.00240865, 0.00186214, 0.00148396),
        },
        tolerance=0.10,
        scored_n_max=80,
    ),
    2: TablePreset(
        caption="tanh, Lebesgue, f1",
        activation="tanh",
        measure="lebesgue",
        function="f1",
        columns={
            "sup": (0.4537, 0.2536, 0.1310, 0.0879, 0.0660,
                    0.05277893, 0.04389374, 0.03751111, 0.03269716, 0.02893381),
            "l1": (0.0936, 0.0312, 0.0088, 0.0040, 0.0023,
                   0.00150571, 0.00106091, 0.00078993, 0.00061305, 0.00049172),
        },
        tolerance=0.10,
        scored_n_max=80,
    ),
    3: TablePreset(
        caption="logistic, Lebesgue, f2",
        activation="logistic",
        measure="lebesgue",
        function="f2",
        columns={
            "l1": (0.34143, 0.26699, 0.15767, 0.10089, 0.07069,
                   0.00460772, 0.00324348, 0.00240865, 0.00186214, 0.00148396),
        },
        tolerance=0.15,
    ),
    4: TablePreset(
        caption="tanh, Lebesgue, f2",
        activation="tanh",
        measure="lebesgue",
        function="f2",
        columns={
            "l1": (0.28442, 0.17863, 0.08282, 0.04929, 0.03390,
                   0.02538742, 0.02004754, 0.01640804, 0.01377641, 0.01179791),
        },
        tolerance=0.15,
    ),
    5: TablePreset(
        caption="logistic, Jacobi 0.5 weights, f2, weighted norm",
        activation="logistic",
        measure=JACOBI_HALF,
        function="f2",
        columns={
            "l1": (0.050147, 0.040254, 0.024157, 0.015721, 0.011188,
                   0.008522, 0.006810, 0.005629, 0.004773, 0.004126),
        },
        tolerance=0.15,
    ),
    6: TablePreset(
        caption="tanh, Jacobi 0.5 weights, f2, weighted norm",
        activation="tanh",
        measure=JACOBI_HALF,
        function="f2",
        columns={
            "l1": (0.042775, 0.027303, 0.013046, 0.007969, 0.005590,
                   0.004245, 0.003391, 0.002803, 0.002371, 0.002040),
        },
        tolerance=0.15,
    ),
}


def suspected_errata(table_id: int) -> set[int]:
    """
    n values whose published L1 entry repeats the entry of table 1 at the
    same n exactly; for a different function that is a copy, not a result
    """
    if table_id == 1:
        return set()
    reference = PUBLISHED_TABLES[1].columns["l1"]
    published = PUBLISHED_TABLES[table_id].columns.get("l1", ())
    return {n for n, a, b in zip(PUBLISHED_N_LIST, published, reference) if a == b}


# ---------------------------------------------------------------- experiments


@dataclasses.dataclass(frozen=True, eq=False)
class ExperimentRun:
    config: ExperimentConfig
    metadata: ExperimentMetadata
    reports: tuple[ErrorReport, ...]


def _p_values(config: ExperimentConfig) -> list[float]:
    """1 always comes first: the l1_error column is part of every table"""
    return [1.0] + [p for p in config.p_list if p != 1.0]


def grid_dump_path(output: str, n: int) -> str:
    stem, _ = os.path.splitext(output)
    return "%s_grid_n%i.txt" % (stem, n)


def _run_one(
    resolved: ResolvedExperiment, n: int, metadata: ExperimentMetadata, reference
) -> ErrorReport:
    config = resolved.config
    start = time.perf_counter()
    operator_config = OperatorConfig(
        n=n, dim=config.d, kernel=resolved.kernel, measure=resolved.measure, plan=resolved.plan
    )
    if config.operator == "classical":
        table = classical_table(resolved.function, n, config.d)
    else:
        table = coefficients(resolved.function, operator_config)
    approximant = Approximant(table, resolved.kernel)
    field = evaluate_grid(table, operator_config, config.resolution)

    sup = sup_error(resolved.function, field)
    lp_errors = tuple(
        (p, lp_error(resolved.function, approximant, p, resolved.norm_measure, resolved.plan))
        for p in _p_values(config)
    )
    unweighted: tuple[tuple[float, float], ...] = ()
    norm_mass = 1.0
    if reference is not None:
        norm_mass = resolved.norm_measure.total_mass
        unweighted = tuple(
            (p, lp_error(resolved.function, approximant, p, reference, resolved.plan))
            for p in _p_values(config)
        )
        for (p, weighted), (_, plain) in zip(lp_errors, unweighted):
            logger.warning(
                "n=%i L^%g error: %.6e against %s; unweighted %.6e, unweighted x mass %.6e"
                % (n, p, weighted, resolved.norm_measure.name, plain, plain * norm_mass)
            )
    runtime_ms = 1000.0 * (time.perf_counter() - start)
    logger.info("n=%i sup %.6e L1 %.6e in %.0f ms" % (n, sup, lp_errors[0][1], runtime_ms))

    if config.dump_grids and config.output:
        write_grid_dump(grid_dump_path(config.output, n), field, resolved.function, metadata)

    return ErrorReport(
        n=n,
        sup_error=sup,
        lp_errors=lp_errors,
        runtime_ms=runtime_ms,
        fingerprint=metadata.fingerprint,
        unweighted_lp_errors=unweighted,
        norm_mass=norm_mass,
    )


def run_experiment(config: ExperimentConfig) -> ExperimentRun:
    """one ErrorReport per n, in n_list order whatever the thread count"""
    if config.dump_grids and not config.output:
        raise ConfigError("grid dumps are named after the output file; set output", field="dump_grids")
    resolved = config.resolve()
    metadata = ExperimentMetadata(config)
    logger.info("running %s" % metadata.describe())
    reference = None if resolved.norm_measure.is_lebesgue else lebesgue(config.d)

    def one(n: int) -> ErrorReport:
        return _run_one(resolved, n, metadata, reference)

    if config.threads > 1:
        with concurrent.futures.ThreadPoolExecutor(max_workers=config.threads) as pool:
            reports = tuple(pool.map(one, config.n_list))
    else:
        reports = tuple(one(n) for n in config.n_list)
    return ExperimentRun(config=config, metadata=metadata, reports=reports)


def report_rows(run: ExperimentRun) -> tuple[list[str], list[list[str]]]:
    """
    CSV header and rows: n,sup_error,l1_error[,lp_error_p=..],runtime_ms,config_hash

    when the norm measure is not Lebesgue the unweighted errors and the
    cross-check (unweighted L^1 error x norm measure mass) come before
    runtime_ms
    """
    extra = _p_values(run.config)[1:]
    weighted = any(report.unweighted_lp_errors for report in run.reports)
    header = ["n", "sup_error", "l1_error"] + ["lp_error_p=%g" % p for p in extra]
    if weighted:
        header += ["unweighted_l1_error"] + ["unweighted_lp_error_p=%g" % p for p in extra] + ["cross_check"]
    header += ["runtime_ms", "config_hash"]
    rows = []
    for report in run.reports:
        values = [report.sup_error] + [value for _, value in report.lp_errors]
        if weighted:
            values += [value for _, value in report.unweighted_lp_errors] + [report.cross_check(1.0)]
        rows.append(
            [str(report.n)]
            + [FLOAT_FORMAT % v for v in values]
            + ["%.3f" % report.runtime_ms, report.fingerprint]
        )
    return header, rows


def format_csv(header: list[str], rows: list[list[str]]) -> str:
    buffer = io.StringIO()
    writer = csv.writer(buffer, lineterminator="\n")
    writer.writerow(header)
    writer.writerows(rows)
    return buffer.getvalue()


def write_text(path: str | None, text: str) -> None:
    """write to path, or to stdout when path is None"""
    if path is None:
        sys.stdout.write(text)
        return
    try:
        directory = os.path.dirname(path)
        if directory:
            os.makedirs(directory, exist_ok=True)
        with open(path, "w", encoding="utf-8", newline="") as f:
            f.write(text)
    except OSError as exc:
        raise ArtifactIOError("cannot write %s: %s" % (path, exc.strerror or exc))
    logger.info("wrote %s" % path)


def grid_dump_text(field: Field, f, metadata: ExperimentMetadata | None = None) -> str:
    """header comments, a column line, then one row per grid node: coordinates, f, S_n f"""
    names = ["x", "y", "z"][: field.dim]
    points = field.points().reshape(-1, field.dim)
    exact = np.asarray(f(points), dtype=float).reshape(-1)
    approx = field.values.reshape(-1)
    lines = [] if metadata is None else metadata.header_lines()
    lines.append("# n: %i, resolution: %i" % (field.n, field.resolution))
    lines.append(" ".join(names + ["f", "Sf"]))
    table = np.column_stack([points, exact, approx])
    lines.extend(" ".join(FLOAT_FORMAT % v for v in row) for row in table)
    return "\n".join(lines) + "\n"


def write_grid_dump(path: str, field: Field, f, metadata: ExperimentMetadata | None = None) -> None:
    write_text(path, grid_dump_text(field, f, metadata))


# ---------------------------------------------------------------- subcommands


def _load(args) -> ExperimentConfig:
    config = load_config(args.config)
    return config.with_overrides(
        resolution=args.resolution,
        panels=args.quad_panels,
        nodes=args.quad_nodes,
        output=args.out,
        threads=args.threads,
    )


def command_run(args) -> int:
    config = _load(args)
    run = run_experiment(config)
    write_text(config.output, format_csv(*report_rows(run)))
    return EXIT_OK


def table_rows(table_id: int, run: ExperimentRun) -> tuple[list[str], list[list[str]], dict[str, int]]:
    """
    one row per (n, quantity): published value, computed value, relative
    deviation and status ok / FAIL / ERRATUM-SUSPECT / unscored
    """
    preset = PUBLISHED_TABLES[table_id]
    errata = suspected_errata(table_id)
    by_n = {report.n: report for report in run.reports}
    counts = {"ok": 0, "FAIL": 0, "ERRATUM-SUSPECT": 0, "unscored": 0}
    rows = []
    for quantity, published in preset.columns.items():
        for n, value in zip(PUBLISHED_N_LIST, published):
            if n not in by_n:
                continue
            report = by_n[n]
            computed = report.sup_error if quantity == "sup" else report.lp(1.0)
            deviation = abs(computed - value) / value
            if n in errata:
                status = "ERRATUM-SUSPECT"
            elif preset.scored_n_max is not None and n > preset.scored_n_max:
                status = "unscored"
            else:
                status = "ok" if deviation <= preset.tolerance else "FAIL"
            counts[status] += 1
            rows.append([str(n), quantity, "%.8g" % value, FLOAT_FORMAT % computed, "%.4f" % deviation, status])

    # weighted tables also list the unweighted reading of the published column
    for n, value in zip(PUBLISHED_N_LIST, preset.columns.get("l1", ())):
        report = by_n.get(n)
        if report is None or not report.unweighted_lp_errors:
            continue
        for quantity, computed in (
            ("l1_unweighted", report.unweighted_lp(1.0)),
            ("l1_unweighted_x_mass", report.cross_check(1.0)),
        ):
            deviation = abs(computed - value) / value
            counts["unscored"] += 1
            rows.append([str(n), quantity, "%.8g" % value, FLOAT_FORMAT % computed, "%.4f" % deviation, "unscored"])
    return ["n", "quantity", "published", "computed", "relative_deviation", "status"], rows, counts


def command_table(args) -> int:
    preset = PUBLISHED_TABLES[args.table]
    n_list = [n for n in PUBLISHED_N_LIST if args.n_max is None or n <= args.n_max]
    if not n_list:
        raise ConfigError("no published rows with n <= %r" % (args.n_max,), field="n_max")
    config = preset.config(n_list).with_overrides(
        resolution=args.resolution, panels=args.quad_panels, nodes=args.quad_nodes, threads=args.threads
    )
    run = run_experiment(config)
    header, rows, counts = table_rows(args.table, run)
    write_text(args.out, format_csv(header, rows))
    if counts["ERRATUM-SUSPECT"]:
        logger.warning(
            "table %i: %i published values repeat table 1 and were not scored"
            % (args.table, counts["ERRATUM-SUSPECT"])
        )
    scored = counts["ok"] + counts["FAIL"]
    print(
        "table %i (%s): %i of %i scored rows within %g%%"
        % (args.table, preset.caption, counts["ok"], scored, 100 * preset.tolerance),
        file=sys.stderr,
    )
    return EXIT_OK


def command_ratio(args) -> int:
    kernel = build_kernel(resolve_activation(args.activation))
    n_list = [int(n) for n in parse_float_list(args.n_list, "n_list")]
    rows = []
    for n in n_list:
        ratio = ratio_condition(kernel, n, args.delta)
        log_ratio = float(np.log(ratio)) if ratio > 0.0 else float("-inf")
        if kernel.activation.id in ("logistic", "tanh"):
            residual = FLOAT_FORMAT % (log_ratio - ratio_log_asymptote(kernel.activation.id, n, args.delta))
        else:
            residual = ""
        rows.append([str(n), FLOAT_FORMAT % ratio, FLOAT_FORMAT % log_ratio, residual])
    write_text(args.out, format_csv(["n", "ratio", "log_ratio", "log_residual"], rows))
    return EXIT_OK


def command_moments(args) -> int:
    kernel = build_kernel(resolve_activation(args.activation), args.tail_cutoff)
    rows = []
    for r in parse_float_list(args.r_list, "r_list"):
        estimate = moment(kernel, r)
        rows.append(["%g" % r, FLOAT_FORMAT % estimate.value, "%.3e" % estimate.tail_residual,
                     "yes" if estimate.diverged else "no"])
    write_text(args.out, format_csv(["r", "moment", "tail_residual", "diverged"], rows))
    return EXIT_OK


def command_grid(args) -> int:
    config = _load(args)
    if args.out is None:
        raise ConfigError("grid needs --out", field="out")
    resolved = config.resolve()
    operator_config = OperatorConfig(
        n=args.n, dim=config.d, kernel=resolved.kernel, measure=resolved.measure, plan=resolved.plan
    )
    if config.operator == "classical":
        table = classical_table(resolved.function, args.n, config.d)
    else:
        table = coefficients(resolved.function, operator_config)
    field = evaluate_grid(table, operator_config, config.resolution)
    write_grid_dump(args.out, field, resolved.function, ExperimentMetadata(config))
    return EXIT_OK


def command_check(args) -> int:
    activation = resolve_activation(args.activation)
    report = check_assumptions(activation, np.linspace(-args.extent, args.extent, 2 * args.points + 1))
    print(
        "activation %s: symmetric %s (residual %.2e), concave %s (max curvature %.2e), tail decay %s (tail slope %s), monotone %s"
        % (report.activation, report.symmetric, report.symmetry_residual, report.concave, report.max_curvature,
           report.tail_decay, "n/a" if report.tail_slope is None else "%.3f" % report.tail_slope, report.monotone)
    )
    measure = resolve_measure(args.measure, args.d)
    positivity = positivity_probe(measure, args.n, args.delta)
    print(
        "measure %s: %i boxes, min mass %.3e, threshold %.3e, %s"
        % (measure.name, positivity.box_count, positivity.min_mass, positivity.threshold,
           "positive" if positivity.passed else "FAILS at %r" % (positivity.failing[:5],))
    )
    return EXIT_OK if report.passed and positivity.passed else EXIT_INVALID


# ---------------------------------------------------------------- parser


class ArgumentParser(argparse.ArgumentParser):
    """usage errors exit 1 like every other invalid input; 2 is reserved for numeric guards"""

    def error(self, message):
        self.print_usage(sys.stderr)
        self.exit(EXIT_INVALID, "%s: error: %s\n" % (self.prog, message))


def _add_run_flags(parser: argparse.ArgumentParser, config: bool = True) -> None:
    if config:
        parser.add_argument("--config", required=True, help="experiment config (JSON)")
    parser.add_argument("--out", default=None, help="output path; stdout when omitted")
    parser.add_argument("--threads", type=int, default=None, help="worker threads over n_list")
    parser.add_argument("--resolution", type=int, default=None, help="evaluation grid points per axis")
    parser.add_argument("--quad-panels", type=int, default=None, help="quadrature panels per axis")
    parser.add_argument("--quad-nodes", type=int, default=None, help="Gauss nodes per panel")


def build_parser() -> argparse.ArgumentParser:
    parser = ArgumentParser(prog="run_experiments", description=__doc__.split("\n\n")[0].strip())
    parser.add_argument("--verbose", action="store_true", help="log progress")
    parser.add_argument("--debug", action="store_true", help="log everything")
    commands = parser.add_subparsers(dest="command", required=True, parser_class=ArgumentParser)

    run = commands.add_parser("run", help="error table for an experiment config")
    _add_run_flags(run)
    run.set_defaults(handler=command_run)

    table = commands.add_parser("table", help="reproduce a published table")
    table.add_argument("table", type=int, choices=sorted(PUBLISHED_TABLES))
    table.add_argument("--n-max", type=int, default=None, help="only rows with n <= N_MAX")
    _add_run_flags(table, config=False)
    table.set_defaults(handler=command_table)

    ratio = commands.add_parser("ratio", help="kernel ratio condition across n")
    ratio.add_argument("--activation", default="logistic")
    ratio.add_argument("--delta", type=float, required=True)
    ratio.add_argument("--n-list", default=",".join(str(n) for n in range(10, 201, 10)),
                       help="comma separated n values")
    ratio.add_argument("--out", default=None)
    ratio.set_defaults(handler=command_ratio)

    moments = commands.add_parser("moments", help="discrete absolute moments")
    moments.add_argument("--activation", default="logistic")
    moments.add_argument("--r-list", default="0,1,2", help="comma separated moment orders")
    moments.add_argument("--tail-cutoff", type=int, default=200)
    moments.add_argument("--out", default=None)
    moments.set_defaults(handler=command_moments)

    grid = commands.add_parser("grid", help="dump f and S_n f on the evaluation grid")
    _add_run_flags(grid)
    grid.add_argument("--n", type=int, required=True)
    grid.set_defaults(handler=command_grid)

    check = commands.add_parser("check", help="activation assumptions and measure positivity")
    check.add_argument("--activation", default="logistic")
    check.add_argument("--measure", default="lebesgue")
    check.add_argument("--d", type=int, default=2)
    check.add_argument("--n", type=int, default=10)
    check.add_argument("--delta", type=float, default=0.3)
    check.add_argument("--extent", type=float, default=40.0, help="assumptions are sampled on [-extent, extent]")
    check.add_argument("--points", type=int, default=4000, help="samples per half line")
    check.set_defaults(handler=command_check)
    return parser


def main(argv: typing.Sequence[str] | None = None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    logging.basicConfig()
    if args.debug:
        logging.getLogger().setLevel(logging.DEBUG)
    elif args.verbose:
        logging.getLogger().setLevel(logging.INFO)

    try:
        return args.handler(args)
    except (ConfigError, PreconditionError, FitError) as exc:
        logger.error(str(exc))
        return EXIT_INVALID
    except NumericGuardError as exc:
        logger.error(str(exc))
        return EXIT_NUMERIC
    except OSError as exc:
        logger.error(str(exc))
        return EXIT_IO
