"""
Error measurement for the operators: sup norm on a uniform grid, L^p norms
against a measure, the L^p contraction property and log-log rate fits.
"""

import dataclasses
import logging
import math
import typing

import numpy as np
from scipy.stats import linregress

from .errors import FitError, PreconditionError
from .measure import DEFAULT_PLAN, MeasureSpec, QuadraturePlan, tensor_rule
from .operator import Approximant, Field, OperatorConfig, coefficients
from .utils.grid import GridCoordinates
from .utils.summation import weighted_sum

logger = logging.getLogger("analysis")

CONTRACTION_SLACK = 1e-8
MIN_FIT_POINTS = 3


@dataclasses.dataclass(frozen=True)
class ErrorReport:
    """
    lp_errors and unweighted_lp_errors are ((p, value), ...); the unweighted
    errors are taken against Lebesgue measure and only filled in when the
    norm measure is not Lebesgue. norm_mass is the total mass of the norm
    measure; unweighted error x norm_mass is the cross-check a weighted
    error should be compared with when the norm is in doubt
    """

    n: int
    sup_error: float
    lp_errors: tuple[tuple[float, float], ...]
    runtime_ms: float
    fingerprint: str = ""
    unweighted_lp_errors: tuple[tuple[float, float], ...] = ()
    norm_mass: float = 1.0

    def lp(self, p: float) -> float:
        for q, value in self.lp_errors:
            if q == p:
                return value
        raise KeyError("no L^%g error in report for n=%i" % (p, self.n))

    def unweighted_lp(self, p: float) -> float:
        for q, value in self.unweighted_lp_errors:
            if q == p:
                return value
        raise KeyError("no unweighted L^%g error in report for n=%i" % (p, self.n))

    def cross_check(self, p: float = 1.0) -> float:
        return self.unweighted_lp(p) * self.norm_mass


@dataclasses.dataclass(frozen=True)
class RateFit:
    slope: float
    intercept: float
    r_squared: float
    n_values: tuple[int, ...]


@dataclasses.dataclass(frozen=True)
class ContractionResult:
    lhs: float
    rhs: float
    passed: bool


def sup_error(f, field: Field) -> float:
    """max over the field grid of |f - S_n f|"""
    exact = GridCoordinates.sample(f, field.axes)
    return float(np.max(np.abs(exact - field.values)))


def lp_norm(f, p: float, measure: MeasureSpec, plan: QuadraturePlan = DEFAULT_PLAN) -> float:
    if not p >= 1.0:
        raise PreconditionError("p must be at least 1, got %r" % (p,))
    rule = tensor_rule(measure, plan)
    values = np.abs(GridCoordinates.sample(f, rule.axes))
    return weighted_sum(values**p, rule.weights) ** (1.0 / p)


def lp_error(f, approx, p: float, measure: MeasureSpec, plan: QuadraturePlan = DEFAULT_PLAN) -> float:
    """(int |f - approx|^p drho)^(1/p) by tensor quadrature"""
    if not p >= 1.0:
        raise PreconditionError("p must be at least 1, got %r" % (p,))
    rule = tensor_rule(measure, plan)
    difference = GridCoordinates.sample(f, rule.axes) - GridCoordinates.sample(approx, rule.axes)
    return weighted_sum(np.abs(difference) ** p, rule.weights) ** (1.0 / p)


def contraction_check(f, p: float, config: OperatorConfig) -> ContractionResult:
    """
    compare ||S_n f||_p with ||f||_p, both against config.measure

    the operator is a contraction for functions whose kernel averages lose
    more than the boundary rows gain; narrow bumps next to the boundary can
    fail, so the outcome is reported rather than asserted
    """
    table = coefficients(f, config)
    approximant = Approximant(table, config.kernel)
    lhs = lp_norm(approximant, p, config.measure, config.plan)
    rhs = lp_norm(f, p, config.measure, config.plan)
    passed = lhs <= rhs * (1.0 + CONTRACTION_SLACK)
    if not passed:
        logger.warning("L^%g contraction fails at n=%i: %.12g > %.12g" % (p, config.n, lhs, rhs))
    return ContractionResult(lhs=lhs, rhs=rhs, passed=passed)


def rate_fit(reports: typing.Sequence[ErrorReport], which: str = "sup", p: float = 1.0) -> RateFit:
    """
    least squares slope of log(error) against log(n); which is "sup" or
    "lp" (with p). Nonpositive errors are dropped before fitting.
    """
    if len(reports) < MIN_FIT_POINTS:
        raise PreconditionError("rate fit needs at least %i reports, got %i" % (MIN_FIT_POINTS, len(reports)))
    n_values = [r.n for r in reports]
    if len(set(n_values)) != len(n_values):
        raise PreconditionError("rate fit needs distinct n, got %r" % (n_values,))
    if which == "sup":
        errors = [r.sup_error for r in reports]
    elif which == "lp":
        errors = [r.lp(p) for r in reports]
    else:
        raise PreconditionError("which must be 'sup' or 'lp', got %r" % (which,))

    usable = [(n, e) for n, e in zip(n_values, errors) if e > 0.0 and math.isfinite(e)]
    if len(usable) < len(n_values):
        logger.info("rate fit drops %i nonpositive errors" % (len(n_values) - len(usable)))
    if len(usable) < MIN_FIT_POINTS:
        raise FitError("only %i positive errors left for the rate fit" % len(usable))

    n_used = np.array([n for n, _ in usable], dtype=float)
    e_used = np.array([e for _, e in usable], dtype=float)
    fit = linregress(np.log(n_used), np.log(e_used))
    return RateFit(
        slope=float(fit.slope),
        intercept=float(fit.intercept),
        r_squared=float(min(max(fit.rvalue**2, 0.0), 1.0)),
        n_values=tuple(int(n) for n in n_used),
    )
