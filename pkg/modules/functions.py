"""
Target functions the operators approximate in experiments.

f1 is smooth; f2 is piecewise with jumps along x, y = 0.4 and x, y = 0.7,
which are registered as quadrature breakpoints when f2 is selected.
"""

import dataclasses
import logging
import typing

import numpy as np

from .errors import ConfigError
from .utils.expressions import compile_expression
from .utils.json_patterns import parse_tag

logger = logging.getLogger("functions")

F2_BREAKPOINTS = (0.4, 0.7)


@dataclasses.dataclass(frozen=True, eq=False)
class TargetFunction:
    name: str
    dim: int
    evaluate: typing.Callable[[np.ndarray], np.ndarray]
    breakpoints: tuple[float, ...] = ()
    sup_norm: float | None = None

    def __call__(self, points):
        points = np.asarray(points, dtype=float)
        if points.shape[-1:] != (self.dim,):
            raise ConfigError(
                "function %s takes points in dimension %i, got shape %r" % (self.name, self.dim, points.shape)
            )
        return self.evaluate(points)


def f1(points) -> np.ndarray:
    """sin(pi x) cos(pi y) + 0.5 x^2 y"""
    points = np.asarray(points, dtype=float)
    x, y = points[..., 0], points[..., 1]
    return np.sin(np.pi * x) * np.cos(np.pi * y) + 0.5 * x**2 * y


def f2(points) -> np.ndarray:
    """
    1 - 2xy               x < 0.4 and y < 0.4
    0.3                   0.4 <= x < 0.7 and 0.4 <= y < 0.7
    sin(4pi x)cos(4pi y)  x >= 0.7 or y >= 0.7
    0                     elsewhere (the strips x < 0.4 <= y < 0.7 and
                          y < 0.4 <= x < 0.7)
    """
    points = np.asarray(points, dtype=float)
    x, y = points[..., 0], points[..., 1]
    low, high = F2_BREAKPOINTS
    return np.select(
        [
            (x < low) & (y < low),
            (x >= low) & (x < high) & (y >= low) & (y < high),
            (x >= high) | (y >= high),
        ],
        [
            1.0 - 2.0 * x * y,
            np.full_like(x, 0.3),
            np.sin(4.0 * np.pi * x) * np.cos(4.0 * np.pi * y),
        ],
        default=0.0,
    )


BUILTIN_FUNCTIONS = {
    "f1": TargetFunction(name="f1", dim=2, evaluate=f1, sup_norm=1.5),
    "f2": TargetFunction(name="f2", dim=2, evaluate=f2, breakpoints=F2_BREAKPOINTS, sup_norm=1.0),
}


def _variables(d: int) -> list[str]:
    if d <= 3:
        return ["x", "y", "z"][:d]
    raise ConfigError("dimension must be 1..3, got %r" % (d,), field="d")


def expression_function(expression: str, d: int) -> TargetFunction:
    """expression in x (d=1), x,y (d=2) or x,y,z (d=3); x1..x3 are accepted too"""
    names = _variables(d)
    indexed = ["x%i" % (i + 1) for i in range(d)]
    compiled, _ = compile_expression(expression, names + indexed)

    def evaluate(points):
        coordinates = [points[..., i] for i in range(d)]
        return compiled(*coordinates, *coordinates)

    return TargetFunction(name="expr:%s" % expression, dim=d, evaluate=evaluate)


def constant_function(value: float, d: int) -> TargetFunction:
    return TargetFunction(
        name="const:%r" % value,
        dim=d,
        evaluate=lambda points: np.full(np.shape(points)[:-1], float(value)),
        sup_norm=abs(float(value)),
    )


def resolve_function(tag: str, d: int) -> TargetFunction:
    """tag is one of: f1, f2, expr:<expression>"""
    kind, argument = parse_tag(tag)
    if kind in BUILTIN_FUNCTIONS and argument is None:
        function = BUILTIN_FUNCTIONS[kind]
    elif kind == "expr" and argument:
        function = expression_function(argument, d)
    else:
        raise ConfigError("unknown function %r" % (tag,), field="function")
    if function.dim != d:
        raise ConfigError(
            "function %s is defined on I^%i but d is %i" % (function.name, function.dim, d), field="d"
        )
    return function
