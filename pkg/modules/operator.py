"""
The neural network operators built on the kernel Phi:

    S_n f(x) = sum_b c_b Phi(nx - b) / sum_b Phi(nx - b)

with measure-based coefficients

    c_b = int f(t) Phi(nt - b) drho(t) / int Phi(nt - b) drho(t)

and the classical operator F_n, which uses the samples c_b = f(b/n). The
multi-index b runs over {0..n}^d.

Because Phi is a product over coordinates, both the coefficient integrals and
the evaluation factor through per-axis matrices phi(n t_q - k). Every
contraction below is a sequence of np.tensordot calls, each contracting the
leading axis, so axis order is preserved.
"""

import dataclasses
import functools
import itertools
import logging
import math
import typing

import numpy as np

from .errors import DegenerateMeasureError, PreconditionError, ResourceGuardError
from .kernel import KernelHandle, phi
from .measure import DEFAULT_PLAN, MAX_DIM, MeasureSpec, QuadraturePlan, kernel_matrix, tensor_rule
from .utils.grid import GridCoordinates
from .utils.summation import weighted_sum

logger = logging.getLogger("operator")

MAX_COEFFICIENTS = 10**8
GRID_WORK_BUDGET = 1e12
DENOMINATOR_RELATIVE_FLOOR = 1e-14
# scattered evaluation keeps the einsum intermediates below this many floats
CHUNK_FLOATS = 2**22


@dataclasses.dataclass(frozen=True, eq=False)
class OperatorConfig:
    n: int
    dim: int
    kernel: KernelHandle
    measure: MeasureSpec
    plan: QuadraturePlan = DEFAULT_PLAN

    def __post_init__(self):
        if not (isinstance(self.n, int) and self.n >= 1):
            raise PreconditionError("n must be a positive integer, got %r" % (self.n,))
        if not 1 <= self.dim <= MAX_DIM:
            raise PreconditionError("dimension must be 1..%i, got %r" % (MAX_DIM, self.dim))
        if self.measure.dim != self.dim:
            raise PreconditionError(
                "measure %s lives on I^%i, operator on I^%i" % (self.measure.name, self.measure.dim, self.dim)
            )
        if (self.n + 1) ** self.dim > MAX_COEFFICIENTS:
            raise ResourceGuardError(
                "(n+1)^d = %i coefficients exceeds the limit of %i" % ((self.n + 1) ** self.dim, MAX_COEFFICIENTS)
            )


@dataclasses.dataclass(frozen=True, eq=False)
class CoefficientTable:
    """
    values[b] = numerators[b] / denominators[b], b in {0..n}^d in C order;
    for the classical operator numerators hold the samples and denominators
    are ones
    """

    n: int
    dim: int
    values: np.ndarray
    numerators: np.ndarray
    denominators: np.ndarray
    method: str = "factorized"

    @classmethod
    def constant(cls, value: float, n: int, dim: int) -> "CoefficientTable":
        shape = (n + 1,) * dim
        return cls(n=n, dim=dim, values=np.full(shape, float(value)),
                   numerators=np.full(shape, float(value)), denominators=np.ones(shape),
                   method="constant")


def _contract_leading(tensor: np.ndarray, matrices: typing.Sequence[np.ndarray]) -> np.ndarray:
    """
    contract axis i of tensor with axis 0 of matrices[i] for every i; result
    axes are the trailing axes of the matrices in order
    """
    for matrix in matrices:
        tensor = np.tensordot(tensor, matrix, axes=([0], [0]))
    return tensor


def _guard_denominators(denominators: np.ndarray, config: OperatorConfig) -> None:
    floor = DENOMINATOR_RELATIVE_FLOOR * config.measure.total_mass
    bad = ~(denominators >= floor)
    if np.any(bad):
        index = tuple(int(i) for i in np.argwhere(bad)[0])
        raise DegenerateMeasureError(
            "denominator %r at beta=%r is below %.3e; is the measure %s strictly positive?"
            % (float(denominators[index]), index, floor, config.measure.name),
            index=index,
        )


def _factorized(f, config: OperatorConfig) -> tuple[np.ndarray, np.ndarray]:
    rule = tensor_rule(config.measure, config.plan)
    values = GridCoordinates.sample(f, rule.axes)
    matrices = [
        kernel_matrix(config.kernel, config.n, nodes, weights)
        for nodes, weights in zip(rule.axes, rule.axis_weights)
    ]
    if rule.density is None:
        numerators = _contract_leading(values, matrices)
        denominators = functools.reduce(np.multiply.outer, [m.sum(axis=0) for m in matrices])
    else:
        numerators = _contract_leading(values * rule.density, matrices)
        denominators = _contract_leading(rule.density, matrices)
    return numerators, np.asarray(denominators)


def _direct(f, config: OperatorConfig) -> tuple[np.ndarray, np.ndarray]:
    """one d-dimensional quadrature per multi-index; reference for the factorized path"""
    rule = tensor_rule(config.measure, config.plan)
    values = GridCoordinates.sample(f, rule.axes)
    columns = [kernel_matrix(config.kernel, config.n, nodes) for nodes in rule.axes]
    shape = (config.n + 1,) * config.dim
    numerators = np.empty(shape)
    denominators = np.empty(shape)
    for index in itertools.product(range(config.n + 1), repeat=config.dim):
        kernel_values = functools.reduce(np.multiply.outer, [c[:, k] for c, k in zip(columns, index)])
        weights = kernel_values * rule.weights
        numerators[index] = weighted_sum(values, weights)
        denominators[index] = weighted_sum(1.0, weights)
    return numerators, denominators


def coefficients(f, config: OperatorConfig, method: str = "factorized") -> CoefficientTable:
    """
    c_b for every b in {0..n}^d

    method "factorized" contracts f on the quadrature grid with one matrix
    per axis; "direct" integrates index by index and is only practical for
    small n
    """
    if method == "factorized":
        numerators, denominators = _factorized(f, config)
    elif method == "direct":
        numerators, denominators = _direct(f, config)
    else:
        raise PreconditionError("unknown coefficient method %r" % (method,))
    _guard_denominators(denominators, config)
    values = numerators / denominators
    for array in (values, numerators, denominators):
        array.setflags(write=False)
    logger.debug(
        "coefficients n=%i d=%i (%s): range [%.6g, %.6g]"
        % (config.n, config.dim, method, float(np.min(values)), float(np.max(values)))
    )
    return CoefficientTable(
        n=config.n, dim=config.dim, values=values, numerators=numerators,
        denominators=denominators, method=method,
    )


def classical_table(f, n: int, d: int) -> CoefficientTable:
    """samples f(b/n) laid out as a coefficient table"""
    lattice = GridCoordinates.lattice_axis(n)
    samples = np.array(GridCoordinates.sample(f, [lattice] * d), dtype=float)
    samples.setflags(write=False)
    return CoefficientTable(
        n=n, dim=d, values=samples, numerators=samples, denominators=np.ones_like(samples),
        method="classical",
    )


class Approximant:
    """
    x -> S_n f(x) for a fixed coefficient table

    callable on point arrays of shape (..., d); on_axes evaluates on a tensor
    grid through the per-axis factorization
    """

    def __init__(self, table: CoefficientTable, kernel: KernelHandle):
        self.table = table
        self.kernel = kernel
        self.n = table.n
        self.dim = table.dim

    def _axis_matrix(self, coordinates: np.ndarray) -> np.ndarray:
        k = np.arange(self.n + 1, dtype=float)
        return phi(self.kernel, self.n * np.asarray(coordinates, dtype=float)[:, np.newaxis] - k)

    def _check_inside(self, points: np.ndarray) -> None:
        if points.size and not (np.all(points >= 0.0) and np.all(points <= 1.0)):
            raise PreconditionError("evaluation points must lie in I^%i" % self.dim)

    def on_axes(self, axes: typing.Sequence[np.ndarray]) -> np.ndarray:
        if len(axes) != self.dim:
            raise PreconditionError("expected %i axes, got %i" % (self.dim, len(axes)))
        for axis in axes:
            self._check_inside(np.asarray(axis, dtype=float))
        matrices = [self._axis_matrix(axis) for axis in axes]
        numerator = _contract_leading(self.table.values, [m.T for m in matrices])
        denominator = functools.reduce(np.multiply.outer, [m.sum(axis=1) for m in matrices])
        return numerator / denominator

    def _evaluate(self, points: np.ndarray) -> np.ndarray:
        matrices = [self._axis_matrix(points[:, i]) for i in range(self.dim)]
        letters = "ijk"[: self.dim]
        subscripts = ",".join("m" + c for c in letters) + "," + letters + "->m"
        numerator = np.einsum(subscripts, *matrices, self.table.values, optimize=True)
        denominator = math.prod(m.sum(axis=1) for m in matrices)
        return numerator / denominator

    def __call__(self, x):
        x = np.asarray(x, dtype=float)
        if x.ndim == 0 or x.shape[-1] != self.dim:
            if self.dim == 1:
                x = x[..., np.newaxis]
            else:
                raise PreconditionError("points must have %i coordinates, got shape %r" % (self.dim, x.shape))
        points = x.reshape(-1, self.dim)
        self._check_inside(points)
        chunk = max(1, CHUNK_FLOATS // (self.n + 1) ** max(self.dim - 1, 1))
        pieces = [self._evaluate(points[i : i + chunk]) for i in range(0, len(points), chunk)]
        values = np.concatenate(pieces) if pieces else np.empty(0)
        values = values.reshape(x.shape[:-1])
        return float(values) if values.ndim == 0 else values


def apply(table: CoefficientTable, config: OperatorConfig, x):
    """S_n f(x); x is one point or an array of points of shape (..., d)"""
    return Approximant(table, config.kernel)(x)


def apply_classical(f, kernel: KernelHandle, n: int, x, d: int | None = None):
    """
    F_n f(x) = sum_b f(b/n) Phi(nx - b) / sum_b Phi(nx - b)

    d defaults to f.dim, else to the length of the last axis of x (1 for a
    scalar x); pass d=1 for an array of scattered points on [0,1]
    """
    if n < 1:
        raise PreconditionError("n must be a positive integer, got %r" % (n,))
    if d is None:
        d = getattr(f, "dim", None) or (np.shape(x)[-1] if np.ndim(x) else 1)
    return Approximant(classical_table(f, n, d), kernel)(x)


@dataclasses.dataclass(frozen=True, eq=False)
class Field:
    """values of an approximant on the tensor grid axes[0] x ... x axes[d-1]"""

    axes: tuple[np.ndarray, ...]
    values: np.ndarray
    n: int

    @property
    def resolution(self) -> int:
        return len(self.axes[0])

    @property
    def dim(self) -> int:
        return len(self.axes)

    def points(self) -> np.ndarray:
        return GridCoordinates.mesh(self.axes)


def evaluate_grid(
    table: CoefficientTable,
    config: OperatorConfig,
    resolution: int,
    work_budget: float = GRID_WORK_BUDGET,
) -> Field:
    """S_n f on the uniform grid with resolution points per axis, endpoints included"""
    if resolution < 2:
        raise PreconditionError("resolution must be at least 2, got %r" % (resolution,))
    work = float(resolution) ** table.dim * float(table.n + 1) ** table.dim
    if work > work_budget:
        raise ResourceGuardError(
            "grid evaluation needs %.3g kernel products, above the budget of %.3g" % (work, work_budget)
        )
    axes = tuple(GridCoordinates.uniform_axis(resolution) for _ in range(table.dim))
    values = Approximant(table, config.kernel).on_axes(axes)
    values.setflags(write=False)
    return Field(axes=axes, values=values, n=table.n)
