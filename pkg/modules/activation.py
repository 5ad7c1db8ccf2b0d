"""
Sigmoidal activation functions and numerical checks of the assumptions the
approximation theory places on them:

    symmetry    sigma(x) - (lower+upper)/2 is odd
    concavity   sigma is concave for x >= 0
    tail decay  the tail upper - sigma(x) decays at least like |x|^(-beta)

Concavity is stated in the literature "for all x", which no genuine sigmoid
satisfies (the logistic function is convex for x < 0 and is nevertheless the
standard example), so the check is restricted to x >= 0.
"""

import dataclasses
import logging
import typing

import numpy as np
from scipy.special import expit
from scipy.stats import linregress

from .errors import ConfigError, DomainError, PreconditionError
from .utils.expressions import compile_expression
from .utils.json_patterns import parse_tag

logger = logging.getLogger("activation")

ArrayMap = typing.Callable[[np.ndarray], np.ndarray]

# custom activations: odd symmetry is scanned on [-SYMMETRY_RANGE, SYMMETRY_RANGE],
# limits are extrapolated from the values at +-LIMIT_POINTS
SYMMETRY_RANGE = 50.0
LIMIT_POINTS = (50.0, 5.0e4, 5.0e7)
TAIL_FIT_RANGE = (10.0, 40.0)


@dataclasses.dataclass(frozen=True, eq=False)
class ActivationSpec:
    """
    A sigmoidal function with the metadata the kernel needs.

    eval          vectorized sigma
    shifted_eval  vectorized sigma(x) - lower_limit, accurate where sigma is
                  close to its lower limit (used for kernel tails)
    odd_symmetric True when the symmetry holds, so phi(x) may be evaluated at -|x|
    """

    id: str
    eval: ArrayMap
    lower_limit: float
    upper_limit: float
    decay_exponent: float | None = None
    shifted_eval: ArrayMap | None = None
    odd_symmetric: bool = True
    expression: str | None = None

    def __call__(self, x):
        return self.eval(x)

    def shifted(self, x) -> np.ndarray:
        if self.shifted_eval is not None:
            return self.shifted_eval(x)
        return np.asarray(self.eval(x), dtype=float) - self.lower_limit

    @property
    def tag(self) -> str:
        if self.id == "custom" and self.expression is not None:
            return "custom:%s" % self.expression
        return self.id


def _require_finite(x) -> np.ndarray:
    x = np.asarray(x, dtype=float)
    if not np.all(np.isfinite(x)):
        raise DomainError("activation input must be finite, got %r" % (x,))
    return x


def eval_logistic(x):
    """1/(1+e^{-x}); expit takes the stable branch for negative x"""
    x = _require_finite(x)
    result = expit(x)
    return float(result) if result.ndim == 0 else result


def eval_tanh(x):
    x = _require_finite(x)
    result = np.tanh(x)
    return float(result) if result.ndim == 0 else result


def _tanh_shifted(x):
    # 1 + tanh(x) = 2 sigma_logistic(2x), no cancellation for x << 0
    return 2.0 * expit(2.0 * _require_finite(x))


LOGISTIC = ActivationSpec(
    id="logistic",
    eval=eval_logistic,
    lower_limit=0.0,
    upper_limit=1.0,
    decay_exponent=None,
    shifted_eval=lambda x: expit(_require_finite(x)),
)

TANH = ActivationSpec(
    id="tanh",
    eval=eval_tanh,
    lower_limit=-1.0,
    upper_limit=1.0,
    decay_exponent=None,
    shifted_eval=_tanh_shifted,
)

BUILTIN_ACTIVATIONS = {"logistic": LOGISTIC, "tanh": TANH}


def _is_odd_symmetric(
    func: ArrayMap, lower: float, upper: float, tol: float = 1e-12
) -> bool:
    x = np.linspace(-SYMMETRY_RANGE, SYMMETRY_RANGE, 2001)
    residual = np.abs(func(x) + func(-x) - (lower + upper))
    return bool(np.max(residual) <= tol)


def _measured_limit(evaluate: ArrayMap, sign: float) -> float:
    """
    limit of a custom activation at sign*infinity, from its values at
    sign*LIMIT_POINTS accelerated with Aitken's delta-squared step; exact for
    power-law tails, and tails already below double precision are left as
    measured at the farthest point
    """
    with np.errstate(all="ignore"):
        near, middle, far = (float(evaluate(sign * point)) for point in LIMIT_POINTS)
    if not all(np.isfinite([near, middle, far])):
        if not np.isfinite(near):
            raise ConfigError("activation has no finite value at x = %r" % (sign * LIMIT_POINTS[0],))
        return near
    step, last = middle - near, far - middle
    if abs(last) >= abs(step) or last == step:
        return far
    return far - last * last / (last - step)


def custom_activation(
    expression: str, decay_exponent: float | None = None
) -> ActivationSpec:
    """
    activation from an expression in the variable x; limits are extrapolated
    from x = +-50, +-5e4 and +-5e7, so slowly decaying tails such as
    x/(1+|x|) still get their true limits
    """
    compiled, _ = compile_expression(expression, ["x"])

    def evaluate(x):
        x = _require_finite(x)
        result = compiled(x)
        return float(result) if result.ndim == 0 else np.array(result)

    lower = _measured_limit(evaluate, -1.0)
    upper = _measured_limit(evaluate, 1.0)
    symmetric = _is_odd_symmetric(evaluate, lower, upper)
    if not symmetric:
        logger.warning(
            "custom activation %r is not odd about its midpoint; kernel tails "
            "are evaluated directly" % (expression,)
        )
    return ActivationSpec(
        id="custom",
        eval=evaluate,
        lower_limit=lower,
        upper_limit=upper,
        decay_exponent=decay_exponent,
        odd_symmetric=symmetric,
        expression=expression,
    )


def resolve_activation(tag: str) -> ActivationSpec:
    """tag is one of: logistic, tanh, custom:<expression in x>"""
    kind, argument = parse_tag(tag)
    if kind in BUILTIN_ACTIVATIONS and argument is None:
        return BUILTIN_ACTIVATIONS[kind]
    if kind == "custom" and argument:
        return custom_activation(argument)
    raise ConfigError("unknown activation %r" % (tag,), field="activation")


@dataclasses.dataclass(frozen=True)
class AssumptionReport:
    activation: str
    symmetric: bool
    concave: bool
    tail_decay: bool
    monotone: bool
    non_unit_limits: bool
    symmetry_residual: float
    max_curvature: float
    tail_slope: float | None

    @property
    def passed(self) -> bool:
        return self.symmetric and self.concave and self.tail_decay and self.monotone


def _tail_slope(spec: ActivationSpec) -> float | None:
    """
    log-log slope of the lower tail sigma(-x) - lower over TAIL_FIT_RANGE.

    Fitted through the derivative, whose slope is one less than that of the
    tail for power laws, so a limit measured at a finite point does not
    bend the fit. None when fewer than two derivative values are resolvable
    in double precision.
    """
    x = np.linspace(TAIL_FIT_RANGE[0], TAIL_FIT_RANGE[1], 301)
    tail = np.asarray(spec.shifted(-x), dtype=float)
    decay = -np.gradient(tail, x)
    usable = decay > 0.0
    if np.count_nonzero(usable) < 2:
        return None
    fit = linregress(np.log(x[usable]), np.log(decay[usable]))
    return float(fit.slope) + 1.0


def check_assumptions(spec: ActivationSpec, grid, tol: float = 1e-9) -> AssumptionReport:
    """
    grid : sampled reals, symmetric about 0, at least 100 points

    symmetric  : max |sigma(x) + sigma(-x) - (lower+upper)| <= tol
    concave    : slopes of sigma between consecutive grid points x >= 0
                 never increase by more than tol
    tail_decay : limits are distinct and the fitted tail slope is at most
                 -decay_exponent (any negative slope when none is declared); a
                 tail that vanishes below double precision inside the fit range
                 decays faster than any power and passes
    """
    grid = np.sort(np.asarray(grid, dtype=float))
    if grid.size < 100:
        raise PreconditionError("grid needs at least 100 points, got %i" % grid.size)
    if not np.allclose(grid, -grid[::-1], rtol=0.0, atol=1e-12):
        raise PreconditionError("grid is not symmetric about 0")

    values = np.asarray(spec.eval(grid), dtype=float)
    mirrored = np.asarray(spec.eval(-grid), dtype=float)
    symmetry_residual = float(np.max(np.abs(values + mirrored - (spec.lower_limit + spec.upper_limit))))

    monotone = bool(np.all(np.diff(values) >= -1e-15))

    right = grid >= 0.0
    x_right, v_right = grid[right], values[right]
    slopes = np.diff(v_right) / np.diff(x_right)
    curvature = np.diff(slopes)
    max_curvature = float(np.max(curvature)) if curvature.size else 0.0

    slope = _tail_slope(spec)
    distinct = spec.upper_limit - spec.lower_limit > tol
    if slope is None:
        tail_decay = distinct
    elif spec.decay_exponent is None:
        tail_decay = distinct and slope < 0.0
    else:
        tail_decay = distinct and slope <= -spec.decay_exponent

    report = AssumptionReport(
        activation=spec.tag,
        symmetric=symmetry_residual <= tol,
        concave=max_curvature <= tol,
        tail_decay=bool(tail_decay),
        monotone=monotone,
        non_unit_limits=not (
            abs(spec.lower_limit) <= tol and abs(spec.upper_limit - 1.0) <= tol
        ),
        symmetry_residual=symmetry_residual,
        max_curvature=max_curvature,
        tail_slope=slope,
    )
    if report.non_unit_limits:
        logger.info(
            "activation %s has limits (%g, %g); not sigmoidal in the strict sense"
            % (spec.tag, spec.lower_limit, spec.upper_limit)
        )
    return report
