"""
Deterministic reductions.

Quadrature sums are reduced with math.fsum over the C-order flattening of
the operand, i.e. in ascending multi-index order. fsum rounds the exact sum
once, so the result does not depend on how the operand was produced or on
the number of threads that produced it.
"""

import math

import numpy as np


def compensated_sum(values) -> float:
    return math.fsum(np.ravel(np.asarray(values, dtype=float), order="C"))


def weighted_sum(values, weights) -> float:
    """sum of values * weights; both broadcast to a common shape first"""
    values, weights = np.broadcast_arrays(
        np.asarray(values, dtype=float), np.asarray(weights, dtype=float)
    )
    return compensated_sum(values * weights)
