"""
Density-defined measures on the unit cube and the tensor quadrature that
integrates against them.

A measure is either a product of per-axis Jacobi weights t^a (1-t)^b
(Lebesgue being a = b = 0) or an arbitrary nonnegative density given as an
expression in t1..td. Integrals are composite Gauss-Legendre on every axis;
for product measures the axis weights absorb the axis densities, and end
panels carrying a nonzero Jacobi exponent switch to a Gauss-Jacobi rule so
the endpoint singularity of the density is integrated exactly.
"""

import dataclasses
import functools
import itertools
import logging
import math
import typing

import numpy as np
from scipy.special import beta as beta_function
from scipy.special import roots_jacobi, roots_legendre

from .errors import (
    ConfigError,
    MeasureIntegrityError,
    PreconditionError,
    ResourceGuardError,
)
from .kernel import Box, BoxSide, KernelHandle, phi
from .utils.expressions import compile_expression
from .utils.grid import GridCoordinates
from .utils.json_patterns import parse_float_list, parse_tag
from .utils.summation import weighted_sum

logger = logging.getLogger("measure")

MAX_DIM = 3
# total mass of 3-d density measures is taken on a coarser grid that fits the node budget
MASS_PLAN_3D_PANELS = 16
TENSOR_NODE_BUDGET = 2**26
POSITIVITY_RELATIVE_FLOOR = 1e-12
EDGE_MERGE_TOL = 1e-12

DensityMap = typing.Callable[[np.ndarray], np.ndarray]


@dataclasses.dataclass(frozen=True)
class AxisDensity:
    """t^left_exponent (1-t)^right_exponent on [0,1]"""

    left_exponent: float = 0.0
    right_exponent: float = 0.0

    def __post_init__(self):
        for exponent in (self.left_exponent, self.right_exponent):
            if not (math.isfinite(exponent) and exponent > -1.0):
                raise PreconditionError(
                    "Jacobi exponent must be finite and > -1, got %r" % (exponent,)
                )

    def __call__(self, t):
        t = np.asarray(t, dtype=float)
        return np.power(t, self.left_exponent) * np.power(1.0 - t, self.right_exponent)

    @property
    def is_uniform(self) -> bool:
        return self.left_exponent == 0.0 and self.right_exponent == 0.0

    @property
    def mass(self) -> float:
        return float(beta_function(self.left_exponent + 1.0, self.right_exponent + 1.0))


@dataclasses.dataclass(frozen=True)
class QuadraturePlan:
    panels_per_axis: int = 64
    nodes_per_panel: int = 8
    breakpoints: tuple[float, ...] = ()

    def __post_init__(self):
        if self.panels_per_axis < 1:
            raise PreconditionError("panels_per_axis must be positive, got %r" % (self.panels_per_axis,))
        if self.nodes_per_panel < 1:
            raise PreconditionError("nodes_per_panel must be positive, got %r" % (self.nodes_per_panel,))
        points = tuple(sorted(float(b) for b in self.breakpoints))
        for b in points:
            if not 0.0 < b < 1.0:
                raise PreconditionError("breakpoint %r is not inside (0,1)" % (b,))
        object.__setattr__(self, "breakpoints", points)

    def edges(self) -> np.ndarray:
        """panel boundaries: the uniform partition merged with the breakpoints"""
        edges = np.union1d(np.linspace(0.0, 1.0, self.panels_per_axis + 1), self.breakpoints)
        keep = np.concatenate([[True], np.diff(edges) > EDGE_MERGE_TOL])
        edges = edges[keep]
        edges[-1] = 1.0
        return edges

    def refined(self) -> "QuadraturePlan":
        return dataclasses.replace(self, panels_per_axis=2 * self.panels_per_axis)

    def with_breakpoints(self, breakpoints: typing.Iterable[float]) -> "QuadraturePlan":
        merged = tuple(sorted(set(self.breakpoints) | {float(b) for b in breakpoints}))
        return dataclasses.replace(self, breakpoints=merged)


DEFAULT_PLAN = QuadraturePlan()
MASS_PLAN_3D = QuadraturePlan(panels_per_axis=MASS_PLAN_3D_PANELS)


def _composite_legendre(edges: np.ndarray, order: int) -> tuple[np.ndarray, np.ndarray]:
    x, w = roots_legendre(order)
    mid = 0.5 * (edges[1:] + edges[:-1])
    half = 0.5 * (edges[1:] - edges[:-1])
    nodes = mid[:, np.newaxis] + half[:, np.newaxis] * x
    weights = half[:, np.newaxis] * w
    return nodes.ravel(), weights.ravel()


def _jacobi_panel(lo: float, hi: float, order: int, density: AxisDensity, first: bool, last: bool):
    """
    Gauss-Jacobi rule on one end panel, weights include the full density.
    scipy's rule integrates against (1-x)^alpha (1+x)^beta on [-1,1].
    """
    a, b = density.left_exponent, density.right_exponent
    h = hi - lo
    if first and last:
        x, w = roots_jacobi(order, b, a)
        t = 0.5 * (x + 1.0)
        return t, w * 2.0 ** -(a + b + 1.0)
    if first:
        x, w = roots_jacobi(order, 0.0, a)
        t = lo + 0.5 * h * (x + 1.0)
        return t, w * (0.5 * h) ** (a + 1.0) * np.power(1.0 - t, b)
    x, w = roots_jacobi(order, b, 0.0)
    t = lo + 0.5 * h * (x + 1.0)
    return t, w * (0.5 * h) ** (b + 1.0) * np.power(t, a)


@functools.lru_cache(maxsize=64)
def axis_rule(plan: QuadraturePlan, density: AxisDensity | None = None) -> tuple[np.ndarray, np.ndarray]:
    """
    (nodes, weights) of the composite rule on [0,1]; nodes ascend and lie
    strictly inside (0,1). With a density the weights integrate against it.
    """
    edges = plan.edges()
    nodes, weights = _composite_legendre(edges, plan.nodes_per_panel)
    if density is not None and not density.is_uniform:
        weights = weights * density(nodes)
        order = plan.nodes_per_panel
        panels = len(edges) - 1
        if density.left_exponent != 0.0 or panels == 1:
            t, w = _jacobi_panel(edges[0], edges[1], order, density, True, panels == 1)
            nodes[:order], weights[:order] = t, w
        if density.right_exponent != 0.0 and panels > 1:
            t, w = _jacobi_panel(edges[-2], edges[-1], order, density, False, True)
            nodes[-order:], weights[-order:] = t, w
    nodes.setflags(write=False)
    weights.setflags(write=False)
    return nodes, weights


@dataclasses.dataclass(frozen=True, eq=False)
class MeasureSpec:
    """
    rho(dt) = density(t) dt on [0,1]^dim

    per_axis_density is set exactly when is_product; density(t) is then the
    product of the axis densities at the coordinates of t.
    """

    name: str
    dim: int
    density: DensityMap
    is_product: bool
    per_axis_density: tuple[AxisDensity, ...] | None
    total_mass: float = math.nan

    @property
    def is_lebesgue(self) -> bool:
        return self.is_product and all(a.is_uniform for a in self.per_axis_density or ())

    def mass_oracle(self) -> float | None:
        """closed form Beta-function mass, for product measures"""
        if not self.is_product:
            return None
        return math.prod(a.mass for a in self.per_axis_density or ())


def _finish(measure: MeasureSpec) -> MeasureSpec:
    if not 1 <= measure.dim <= MAX_DIM:
        raise PreconditionError("dimension must be 1..%i, got %r" % (MAX_DIM, measure.dim))
    if measure.is_product:
        mass = math.prod(
            math.fsum(axis_rule(DEFAULT_PLAN, a)[1]) for a in measure.per_axis_density or ()
        )
    else:
        plan = DEFAULT_PLAN if measure.dim <= 2 else MASS_PLAN_3D
        mass = weighted_sum(1.0, _build_tensor_rule(measure, plan).weights)
    if not (math.isfinite(mass) and mass > 0.0):
        raise MeasureIntegrityError("measure %s has total mass %r" % (measure.name, mass))
    logger.info("measure %s on I^%i: total mass %.15g" % (measure.name, measure.dim, mass))
    return dataclasses.replace(measure, total_mass=mass)


def product_measure(name: str, axes: typing.Sequence[AxisDensity]) -> MeasureSpec:
    axes = tuple(axes)

    def density(t):
        t = np.asarray(t, dtype=float)
        return math.prod((axis(t[..., i]) for i, axis in enumerate(axes)), start=np.ones(t.shape[:-1]))

    return _finish(MeasureSpec(name=name, dim=len(axes), density=density, is_product=True, per_axis_density=axes))


def lebesgue(d: int) -> MeasureSpec:
    return product_measure("lebesgue", [AxisDensity()] * d)


def jacobi(d: int, exponents: typing.Sequence[float]) -> MeasureSpec:
    """
    exponents (a_1, b_1, ..., a_d, b_d) for prod_i t_i^a_i (1-t_i)^b_i; a
    single pair is used on every axis
    """
    exponents = [float(e) for e in exponents]
    if len(exponents) == 2:
        exponents = exponents * d
    if len(exponents) != 2 * d:
        raise ConfigError(
            "jacobi weight on I^%i needs 2 or %i exponents, got %i" % (d, 2 * d, len(exponents)),
            field="measure",
        )
    axes = [AxisDensity(exponents[2 * i], exponents[2 * i + 1]) for i in range(d)]
    return product_measure("jacobi:" + ",".join("%g" % e for e in exponents), axes)


def from_density(density: str | DensityMap, d: int, name: str | None = None) -> MeasureSpec:
    """
    a non-product measure; density is an expression in t1..td or a callable
    on point arrays of shape (..., d)
    """
    if isinstance(density, str):
        variables = ["t%i" % (i + 1) for i in range(d)]
        compiled, _ = compile_expression(density, variables)
        expression = density

        def evaluate(t):
            t = np.asarray(t, dtype=float)
            return compiled(*(t[..., i] for i in range(d)))

        return _finish(
            MeasureSpec(name=name or "density:%s" % expression, dim=d, density=evaluate,
                        is_product=False, per_axis_density=None)
        )
    return _finish(
        MeasureSpec(name=name or "density", dim=d, density=density, is_product=False, per_axis_density=None)
    )


def resolve_measure(tag: str, d: int) -> MeasureSpec:
    """tag is one of: lebesgue, jacobi:<a1,b1,...>, density:<expression in t1..td>"""
    kind, argument = parse_tag(tag)
    if kind == "lebesgue" and argument is None:
        return lebesgue(d)
    if kind == "jacobi" and argument:
        return jacobi(d, parse_float_list(argument, "measure"))
    if kind == "density" and argument:
        return from_density(argument, d)
    raise ConfigError("unknown measure %r" % (tag,), field="measure")


@dataclasses.dataclass(frozen=True, eq=False)
class TensorRule:
    """
    axes          nodes per axis
    axis_weights  quadrature weights per axis; for product measures these
                  already integrate against the axis densities
    density       density on the tensor grid for non-product measures,
                  None for product measures
    weights       full tensor of weights against the measure
    """

    axes: tuple[np.ndarray, ...]
    axis_weights: tuple[np.ndarray, ...]
    density: np.ndarray | None
    weights: np.ndarray

    @property
    def shape(self) -> tuple[int, ...]:
        return tuple(len(a) for a in self.axes)


def _build_tensor_rule(measure: MeasureSpec, plan: QuadraturePlan) -> TensorRule:
    if not 1 <= measure.dim <= MAX_DIM:
        raise PreconditionError("quadrature supports d <= %i, got %r" % (MAX_DIM, measure.dim))

    if measure.is_product:
        rules = [axis_rule(plan, a) for a in measure.per_axis_density or ()]
    else:
        rules = [axis_rule(plan)] * measure.dim
    axes = tuple(r[0] for r in rules)
    axis_weights = tuple(r[1] for r in rules)

    size = math.prod(len(a) for a in axes)
    if size > TENSOR_NODE_BUDGET:
        raise ResourceGuardError(
            "quadrature grid of %i nodes exceeds the budget of %i; reduce panels or nodes"
            % (size, TENSOR_NODE_BUDGET)
        )

    weights = functools.reduce(np.multiply.outer, axis_weights)
    density = None
    if measure.is_product:
        for i, nodes in enumerate(axes):
            if np.any(measure.per_axis_density[i](nodes) < 0.0):  # type: ignore[index]
                raise MeasureIntegrityError("negative density on axis %i of %s" % (i + 1, measure.name))
    else:
        density = np.asarray(GridCoordinates.sample(measure.density, axes), dtype=float)
        bad = ~np.isfinite(density) | (density < 0.0)
        if np.any(bad):
            index = tuple(int(i) for i in np.argwhere(bad)[0])
            node = tuple(float(axes[i][j]) for i, j in enumerate(index))
            raise MeasureIntegrityError(
                "density of %s is %r at quadrature node %r" % (measure.name, float(density[index]), node)
            )
        weights = weights * density
        density.setflags(write=False)
    weights.setflags(write=False)

    logger.debug(
        "quadrature for %s: %i panels x %i nodes, %i tensor nodes"
        % (measure.name, len(plan.edges()) - 1, plan.nodes_per_panel, size)
    )
    return TensorRule(axes=axes, axis_weights=axis_weights, density=density, weights=weights)


@functools.lru_cache(maxsize=8)
def tensor_rule(measure: MeasureSpec, plan: QuadraturePlan) -> TensorRule:
    return _build_tensor_rule(measure, plan)


def integrate(f, measure: MeasureSpec, plan: QuadraturePlan = DEFAULT_PLAN) -> float:
    """
    integral of f against the measure; f is a callable on point arrays of
    shape (..., d) or an object with an on_axes method (see GridCoordinates)
    """
    rule = tensor_rule(measure, plan)
    return weighted_sum(GridCoordinates.sample(f, rule.axes), rule.weights)


def kernel_matrix(kernel: KernelHandle, n: int, nodes: np.ndarray, weights: np.ndarray | None = None) -> np.ndarray:
    """entry (q, k) = phi(n t_q - k) * w_q"""
    k = np.arange(n + 1, dtype=float)
    matrix = phi(kernel, n * np.asarray(nodes, dtype=float)[:, np.newaxis] - k)
    if weights is not None:
        matrix = matrix * np.asarray(weights, dtype=float)[:, np.newaxis]
    return matrix


def axis_kernel_matrix(
    kernel: KernelHandle, n: int, plan: QuadraturePlan = DEFAULT_PLAN, density: AxisDensity | None = None
) -> np.ndarray:
    """
    nodes x (n+1) matrix phi(n t_q - k) * (axis weight at t_q), the axis
    weight including density when given
    """
    if n < 1:
        raise PreconditionError("n must be a positive integer, got %r" % (n,))
    nodes, weights = axis_rule(plan, density)
    return kernel_matrix(kernel, n, nodes, weights)


def _interval_rule(lo: float, hi: float, plan: QuadraturePlan) -> tuple[np.ndarray, np.ndarray]:
    panels = max(1, math.ceil((hi - lo) * plan.panels_per_axis))
    return _composite_legendre(np.linspace(lo, hi, panels + 1), plan.nodes_per_panel)


def box_mass(measure: MeasureSpec, box: Box, plan: QuadraturePlan = DEFAULT_PLAN) -> float:
    """rho(box intersected with I^d)"""
    intervals = box.intervals()
    if len(intervals) != measure.dim:
        raise PreconditionError("box in dimension %i for a measure on I^%i" % (len(intervals), measure.dim))
    if any(hi <= lo for lo, hi in intervals):
        return 0.0
    rules = [_interval_rule(lo, hi, plan) for lo, hi in intervals]
    if measure.is_product:
        return math.prod(
            weighted_sum(axis(nodes), weights)
            for axis, (nodes, weights) in zip(measure.per_axis_density or (), rules)
        )
    axes = [r[0] for r in rules]
    weights = functools.reduce(np.multiply.outer, [r[1] for r in rules])
    return weighted_sum(GridCoordinates.sample(measure.density, axes), weights)


@dataclasses.dataclass(frozen=True)
class PositivityReport:
    n: int
    delta: float
    min_mass: float
    threshold: float
    passed: bool
    box_count: int
    failing: tuple[tuple[int, ...], ...]


def positivity_probe(
    measure: MeasureSpec, n: int, delta: float, plan: QuadraturePlan = DEFAULT_PLAN
) -> PositivityReport:
    """
    mass of the right-sided box of side delta^2 at every lattice point beta/n;
    boxes at the right end of an axis are mirrored inside I^d. Passes when
    every mass exceeds 1e-12 * total_mass.
    """
    if n < 1:
        raise PreconditionError("n must be a positive integer, got %r" % (n,))
    if not 0.0 < delta < 1.0:
        raise PreconditionError("delta must lie in (0,1), got %r" % (delta,))
    d = measure.dim
    radius = delta**2
    lattice = GridCoordinates.lattice_axis(n)

    if measure.is_product:
        per_axis = []
        for axis in measure.per_axis_density or ():
            masses = []
            for c in lattice:
                (lo, hi), = Box((float(c),), radius, BoxSide.RIGHT).intervals()
                nodes, weights = _interval_rule(lo, hi, plan)
                masses.append(weighted_sum(axis(nodes), weights))
            per_axis.append(np.array(masses))
        masses = functools.reduce(np.multiply.outer, per_axis)
    else:
        masses = np.empty((n + 1,) * d)
        for index in itertools.product(range(n + 1), repeat=d):
            box = Box(tuple(float(lattice[i]) for i in index), radius, BoxSide.RIGHT)
            masses[index] = box_mass(measure, box, plan)

    threshold = POSITIVITY_RELATIVE_FLOOR * measure.total_mass
    failing = tuple(tuple(int(i) for i in index) for index in np.argwhere(masses <= threshold))
    report = PositivityReport(
        n=n,
        delta=delta,
        min_mass=float(np.min(masses)),
        threshold=threshold,
        passed=not failing,
        box_count=int(masses.size),
        failing=failing,
    )
    if failing:
        logger.warning(
            "measure %s: %i of %i boxes of side %g have mass <= %.3e, first at beta=%r"
            % (measure.name, len(failing), report.box_count, radius, threshold, failing[0])
        )
    return report
