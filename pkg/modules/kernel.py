"""
The density kernel phi(x) = (sigma(x+1) - sigma(x-1)) / 2 induced by an
activation, its tensor product Phi, lattice sums, discrete absolute moments
and the max/min ratio in the hypothesis of the uniform convergence theorems.
"""

import dataclasses
import enum
import logging

import numpy as np

from .activation import ActivationSpec
from .errors import NumericGuardError, PreconditionError

logger = logging.getLogger("kernel")

DEFAULT_TAIL_CUTOFF = 200
PARTITION_SAMPLES = 1000
MOMENT_SAMPLES = 1001
RATIO_SCAN_SAMPLES = 10_000
TAIL_DOUBLING_TOL = 1e-10
MOMENT_DOUBLING_TOL = 1e-8


@dataclasses.dataclass(frozen=True, eq=False)
class KernelHandle:
    """
    Immutable once built; every cached constant is computed eagerly by
    build_kernel.

    partition_constant  measured value of sum_k phi(x - k); 1 for unit-limit
                        activations, 2 for tanh
    partition_spread    max - min of the truncated lattice sum over [0,1]
    tail_converged      False when doubling tail_cutoff moved the lattice sum
    symmetric_unimodal  phi is even and nonincreasing on x >= 0; enables the
                        closed form of ratio_condition
    """

    activation: ActivationSpec
    tail_cutoff: int
    partition_constant: float
    partition_spread: float
    tail_converged: bool
    symmetric_unimodal: bool

    @property
    def name(self) -> str:
        return self.activation.tag


def _phi_array(activation: ActivationSpec, x: np.ndarray) -> np.ndarray:
    if activation.odd_symmetric:
        # both terms sit near the lower limit, where shifted() keeps full
        # relative precision
        u = -np.abs(x)
        return 0.5 * (activation.shifted(u + 1.0) - activation.shifted(u - 1.0))
    return 0.5 * (
        np.asarray(activation.eval(x + 1.0), dtype=float)
        - np.asarray(activation.eval(x - 1.0), dtype=float)
    )


def _lattice_sums(activation: ActivationSpec, x: np.ndarray, cutoff: int) -> np.ndarray:
    centre = np.round(x)
    offsets = np.arange(-cutoff, cutoff + 1, dtype=float)
    shifted = (x - centre)[..., np.newaxis] - offsets
    return np.sum(_phi_array(activation, shifted), axis=-1)


def build_kernel(activation: ActivationSpec, tail_cutoff: int = DEFAULT_TAIL_CUTOFF) -> KernelHandle:
    if tail_cutoff < 1:
        raise PreconditionError("tail_cutoff must be positive, got %r" % (tail_cutoff,))

    x = np.linspace(0.0, 1.0, PARTITION_SAMPLES)
    sums = _lattice_sums(activation, x, tail_cutoff)
    doubled = _lattice_sums(activation, x, 2 * tail_cutoff)
    tail_change = float(np.max(np.abs(doubled - sums)))
    tail_converged = tail_change <= TAIL_DOUBLING_TOL
    if not tail_converged:
        logger.warning(
            "lattice sum of %s moves by %.3e when tail_cutoff doubles from %i"
            % (activation.tag, tail_change, tail_cutoff)
        )

    right = np.linspace(0.0, 40.0, 10_000)
    phi_right = _phi_array(activation, right)
    nonincreasing = bool(np.all(np.diff(phi_right) <= 1e-15))
    even = activation.odd_symmetric or bool(
        np.max(np.abs(phi_right - _phi_array(activation, -right))) <= 1e-12
    )

    kernel = KernelHandle(
        activation=activation,
        tail_cutoff=tail_cutoff,
        partition_constant=float(np.mean(sums)),
        partition_spread=float(np.max(sums) - np.min(sums)),
        tail_converged=tail_converged,
        symmetric_unimodal=even and nonincreasing,
    )
    logger.info(
        "kernel %s: partition constant %.15f (spread %.2e), symmetric unimodal %s"
        % (kernel.name, kernel.partition_constant, kernel.partition_spread,
           kernel.symmetric_unimodal)
    )
    return kernel


def phi(kernel: KernelHandle, x):
    """(sigma(x+1) - sigma(x-1)) / 2, elementwise; nonnegative"""
    values = _phi_array(kernel.activation, np.asarray(x, dtype=float))
    return float(values) if np.ndim(values) == 0 else values


def phi_product(kernel: KernelHandle, x):
    """
    Phi(x_1, ..., x_d) = prod_i phi(x_i); x has shape (..., d)
    """
    x = np.asarray(x, dtype=float)
    if x.ndim == 0 or x.shape[-1] == 0:
        raise PreconditionError("phi_product needs a point with at least one coordinate")
    values = np.prod(_phi_array(kernel.activation, x), axis=-1)
    return float(values) if np.ndim(values) == 0 else values


def partition_sum(kernel: KernelHandle, x, tail_cutoff: int | None = None):
    """
    sum of phi(x - k) over |k - round(x)| <= tail_cutoff
    """
    cutoff = kernel.tail_cutoff if tail_cutoff is None else tail_cutoff
    values = _lattice_sums(kernel.activation, np.asarray(x, dtype=float), cutoff)
    return float(values) if np.ndim(values) == 0 else values


def truncated_sum_lower_bound(kernel: KernelHandle, n: int, x):
    """
    sum_{k=0}^{n} phi(n x - k) for x in [0,1]; the theory guarantees the
    value is at least phi(1)
    """
    if n < 1:
        raise PreconditionError("n must be a positive integer, got %r" % (n,))
    x = np.asarray(x, dtype=float)
    if np.any((x < 0.0) | (x > 1.0)) or not np.all(np.isfinite(x)):
        raise PreconditionError("x must lie in [0,1], got %r" % (x,))
    k = np.arange(n + 1, dtype=float)
    values = np.sum(_phi_array(kernel.activation, n * x[..., np.newaxis] - k), axis=-1)
    return float(values) if np.ndim(values) == 0 else values


@dataclasses.dataclass(frozen=True)
class MomentEstimate:
    r: float
    value: float
    tail_residual: float
    diverged: bool


def _moment_sup(activation: ActivationSpec, r: float, cutoff: int) -> float:
    x = np.linspace(0.0, 1.0, MOMENT_SAMPLES)
    k = np.arange(-cutoff, cutoff + 2, dtype=float)
    distance = x[:, np.newaxis] - k
    terms = np.abs(distance) ** r * _phi_array(activation, distance)
    return float(np.max(np.sum(terms, axis=1)))


def moment(kernel: KernelHandle, r: float) -> MomentEstimate:
    """
    discrete absolute moment M_r = sup_x sum_k |x-k|^r phi(x-k)

    the lattice sum is 1-periodic in x, so the sup is taken over x in [0,1].
    The estimate is flagged divergent when doubling the tail cutoff changes
    it by more than 1e-8, or when the declared decay exponent beta gives
    r >= beta - 1
    """
    if not r >= 0.0:
        raise PreconditionError("moment order must be nonnegative, got %r" % (r,))

    value = _moment_sup(kernel.activation, r, kernel.tail_cutoff)
    doubled = _moment_sup(kernel.activation, r, 2 * kernel.tail_cutoff)
    residual = abs(doubled - value)

    beta = kernel.activation.decay_exponent
    declared_divergent = beta is not None and r >= beta - 1.0
    diverged = bool(residual > MOMENT_DOUBLING_TOL or declared_divergent or not np.isfinite(value))
    if diverged:
        logger.warning(
            "moment M_%g of %s does not settle (tail residual %.3e, declared beta %r)"
            % (r, kernel.name, residual, beta)
        )
    return MomentEstimate(r=float(r), value=value, tail_residual=residual, diverged=diverged)


def ratio_condition(
    kernel: KernelHandle, n: int, delta: float, method: str = "auto"
) -> float:
    """
    max{phi(nt-k) : |t - k/n| >= delta} / min{phi(nt-k) : 0 < t - k/n < delta^2}

    method "closed" (phi(n delta) / phi(n delta^2)) needs a symmetric
    unimodal kernel; "scan" samples 10^4 points per interval; "auto" picks
    closed when the kernel qualifies
    """
    if not 0.0 < delta < 1.0:
        raise PreconditionError("delta must lie in (0,1), got %r" % (delta,))
    if n < 1:
        raise PreconditionError("n must be a positive integer, got %r" % (n,))
    if method not in ("auto", "closed", "scan"):
        raise PreconditionError("unknown ratio method %r" % (method,))
    if method == "closed" and not kernel.symmetric_unimodal:
        raise PreconditionError("closed form needs a symmetric unimodal kernel")

    activation = kernel.activation
    if method != "scan" and kernel.symmetric_unimodal:
        numerator = float(_phi_array(activation, np.asarray(n * delta)))
        denominator = float(_phi_array(activation, np.asarray(n * delta**2)))
    else:
        outside = np.concatenate(
            [np.linspace(-1.0, -delta, RATIO_SCAN_SAMPLES), np.linspace(delta, 1.0, RATIO_SCAN_SAMPLES)]
        )
        inside = np.linspace(0.0, delta**2, RATIO_SCAN_SAMPLES + 1)[1:]
        numerator = float(np.max(_phi_array(activation, n * outside)))
        denominator = float(np.min(_phi_array(activation, n * inside)))

    if not denominator > 0.0:
        raise NumericGuardError(
            "ratio minimum underflows for n=%i, delta=%r (phi(n delta^2) = %r)"
            % (n, delta, denominator)
        )
    return numerator / denominator


def ratio_log_asymptote(activation_id: str, n: int, delta: float) -> float:
    """
    leading term of log ratio_condition: n(delta^2 - delta) for the logistic
    kernel, 2n(delta^2 - delta) for tanh
    """
    rates = {"logistic": 1.0, "tanh": 2.0}
    if activation_id not in rates:
        raise PreconditionError("no known ratio asymptote for activation %r" % (activation_id,))
    return rates[activation_id] * n * (delta**2 - delta)


class BoxSide(enum.Enum):
    SYMMETRIC = "symmetric"  # A_delta(x), open cube about x
    RIGHT = "right"  # B_delta(x), open cube to the right of x


@dataclasses.dataclass(frozen=True)
class Box:
    center: tuple[float, ...]
    radius: float
    sided: BoxSide = BoxSide.RIGHT

    def __post_init__(self):
        if not self.radius > 0.0:
            raise PreconditionError("box radius must be positive, got %r" % (self.radius,))
        if not all(0.0 <= c <= 1.0 for c in self.center):
            raise PreconditionError("box center %r lies outside the unit cube" % (self.center,))

    def intervals(self) -> list[tuple[float, float]]:
        """
        per axis (lo, hi) of the box clipped to [0,1]. A right-sided box at
        a center coordinate of 1 would be empty on that axis; it is mirrored
        to (1 - radius, 1) there
        """
        result = []
        for c in self.center:
            if self.sided is BoxSide.SYMMETRIC:
                lo, hi = c - self.radius, c + self.radius
            else:
                lo, hi = c, c + self.radius
                if c >= 1.0:
                    lo, hi = c - self.radius, c
            result.append((max(lo, 0.0), min(hi, 1.0)))
        return result
