import math

import numpy as np
import pytest

from modules.analysis import (
    ErrorReport,
    contraction_check,
    lp_error,
    lp_norm,
    rate_fit,
    sup_error,
)
from modules.cli import PUBLISHED_N_LIST, PUBLISHED_TABLES
from modules.errors import FitError, PreconditionError
from modules.functions import constant_function, f1, f2
from modules.operator import CoefficientTable, OperatorConfig, coefficients, evaluate_grid

SEEDS = range(20)


def _report(n, error, p=1.0):
    return ErrorReport(n=n, sup_error=error, lp_errors=((p, error),), runtime_ms=0.0)


def _alternating_hat(seed):
    """piecewise linear on 9 equispaced knots, knot values alternating in sign"""
    rng = np.random.default_rng(seed)
    knots = np.linspace(0.0, 1.0, 9)
    values = rng.uniform(0.5, 1.5, knots.size) * (-1.0) ** np.arange(knots.size)
    return lambda t: np.interp(t[..., 0], knots, values)


def test_sup_error_of_exact_reproduction(logistic_kernel, lebesgue_2d):
    config = OperatorConfig(n=6, dim=2, kernel=logistic_kernel, measure=lebesgue_2d)
    field = evaluate_grid(CoefficientTable.constant(2.0, 6, 2), config, resolution=9)
    assert sup_error(constant_function(2.0, 2), field) <= 1e-14
    assert sup_error(constant_function(2.5, 2), field) == pytest.approx(0.5, abs=1e-14)


def test_finer_grids_never_lower_the_sup_error(kernel, lebesgue_2d):
    config = OperatorConfig(n=20, dim=2, kernel=kernel, measure=lebesgue_2d)
    table = coefficients(f1, config)
    coarse = sup_error(f1, evaluate_grid(table, config, resolution=201))
    fine = sup_error(f1, evaluate_grid(table, config, resolution=401))
    assert fine >= coarse - 1e-15


def test_lp_norm_and_error(jacobi_1d, lebesgue_2d):
    two = constant_function(2.0, 1)
    assert lp_norm(two, 1.0, jacobi_1d) == pytest.approx(2.0 * math.pi / 8.0, abs=1e-11)
    assert lp_norm(lambda t: t[..., 0], 2.0, lebesgue_2d) == pytest.approx(math.sqrt(1.0 / 3.0), abs=1e-13)

    assert lp_error(f1, f1, 1.0, lebesgue_2d) == 0.0
    assert lp_error(f1, f2, 2.0, lebesgue_2d) == pytest.approx(lp_error(f2, f1, 2.0, lebesgue_2d), rel=1e-15)
    with pytest.raises(PreconditionError):
        lp_norm(two, 0.5, jacobi_1d)
    with pytest.raises(PreconditionError):
        lp_error(f1, f2, 0.0, lebesgue_2d)


@pytest.mark.parametrize("p", [1.0, 2.0])
def test_contraction_on_constants(logistic_kernel, lebesgue_2d, p):
    config = OperatorConfig(n=10, dim=2, kernel=logistic_kernel, measure=lebesgue_2d)
    result = contraction_check(constant_function(5.0, 2), p, config)
    assert result.passed
    assert result.lhs == pytest.approx(result.rhs, rel=1e-12)
    assert result.rhs == pytest.approx(5.0, rel=1e-12)


@pytest.mark.parametrize("n", [5, 20])
@pytest.mark.parametrize("p", [1.0, 2.0])
@pytest.mark.parametrize("measure", ["lebesgue", "jacobi"])
def test_contraction_on_oscillating_functions(logistic_kernel, lebesgue_1d, jacobi_1d, measure, p, n):
    config = OperatorConfig(
        n=n, dim=1, kernel=logistic_kernel, measure=lebesgue_1d if measure == "lebesgue" else jacobi_1d
    )
    for seed in SEEDS:
        result = contraction_check(_alternating_hat(seed), p, config)
        assert result.passed, "seed %i: %r" % (seed, result)


def test_contraction_for_f2_against_jacobi(logistic_kernel, jacobi_2d):
    result = contraction_check(f2, 1.0, OperatorConfig(n=40, dim=2, kernel=logistic_kernel, measure=jacobi_2d))
    assert result.passed
    assert result.lhs < result.rhs


def test_rate_fit_recovers_power_laws():
    fit = rate_fit([_report(n, 3.0 / n) for n in (10, 20, 40, 80)])
    assert fit.slope == pytest.approx(-1.0, abs=1e-12)
    assert fit.intercept == pytest.approx(math.log(3.0), abs=1e-12)
    assert fit.r_squared == pytest.approx(1.0, abs=1e-12)
    assert fit.n_values == (10, 20, 40, 80)

    flat = rate_fit([_report(n, 0.5) for n in (10, 20, 40)])
    assert flat.slope == pytest.approx(0.0, abs=1e-12)

    squared = rate_fit([_report(n, n**-2.0, p=2.0) for n in (10, 20, 40)], which="lp", p=2.0)
    assert squared.slope == pytest.approx(-2.0, abs=1e-12)


def test_rate_fit_on_published_sup_errors():
    published = PUBLISHED_TABLES[2].columns["sup"]
    fit = rate_fit([_report(n, e) for n, e in zip(PUBLISHED_N_LIST, published)])
    assert fit.slope <= -0.9
    assert fit.r_squared > 0.99


def test_rate_fit_drops_nonpositive_errors():
    reports = [_report(10, 0.1), _report(20, 0.0), _report(40, 0.025), _report(80, 0.0125)]
    assert rate_fit(reports).n_values == (10, 40, 80)
    with pytest.raises(FitError):
        rate_fit([_report(10, 0.1), _report(20, 0.0), _report(40, 0.0), _report(80, 0.0125)])


def test_rate_fit_preconditions():
    with pytest.raises(PreconditionError):
        rate_fit([_report(10, 0.1), _report(20, 0.05)])
    with pytest.raises(PreconditionError):
        rate_fit([_report(10, 0.1), _report(10, 0.05), _report(20, 0.02)])
    with pytest.raises(PreconditionError):
        rate_fit([_report(n, 1.0 / n) for n in (10, 20, 40)], which="l7")
    with pytest.raises(KeyError):
        rate_fit([_report(n, 1.0 / n) for n in (10, 20, 40)], which="lp", p=3.0)
