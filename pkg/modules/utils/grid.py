import typing

import numpy as np


class GridCoordinates:
    """Helper class for converting between lattice indices, tensor axes and
    point arrays on the hypercube I^d = [0,1]^d

    Three representations of "a set of points" occur in this package:

    -- tensor axes : a tuple of d one dimensional arrays (a_1, ..., a_d); the
       point set is their cartesian product. Quadrature nodes, sup-norm
       evaluation grids and the lattice {0, 1/n, ..., 1}^d are all of this
       form.

    -- point arrays : an array of shape (..., d) whose last axis holds the
       coordinates. Functions of d variables in this package receive
       points in this form and return an array of shape (...).

    -- lattice indices : a multi-index beta = (k_1, ..., k_d), 0 <= k_i <= n,
       naming the lattice point beta/n. A dense array indexed by beta has
       shape (n+1,)*d and index beta is the C-order position.

    The conversion from tensor axes to a point array is implemented by mesh;
    the point array has shape (len(a_1), ..., len(a_d), d) so that the value
    array of a function evaluated on it lines up with the tensor axes
    (indexing="ij").

    Evaluating a function on tensor axes goes through sample, which prefers a
    function's own on_axes method when it has one: operator approximants
    factor over the axes and are much cheaper to evaluate that way than
    point by point.
    """

    @staticmethod
    def uniform_axis(resolution: int) -> np.ndarray:
        """resolution equispaced points on [0,1] including both endpoints"""
        return np.linspace(0.0, 1.0, resolution)

    @staticmethod
    def lattice_axis(n: int) -> np.ndarray:
        """the points k/n, k = 0..n"""
        return np.arange(n + 1, dtype=float) / n

    @staticmethod
    def mesh(axes: typing.Sequence[np.ndarray]) -> np.ndarray:
        grids = np.meshgrid(*axes, indexing="ij")
        return np.stack(grids, axis=-1)

    @staticmethod
    def sample(f: typing.Callable, axes: typing.Sequence[np.ndarray]) -> np.ndarray:
        """
        values of f on the tensor product of axes, shape (len(a_1), ..., len(a_d))

        f is either a plain callable on point arrays or an object exposing
        on_axes(axes)
        """
        on_axes = getattr(f, "on_axes", None)
        if on_axes is not None:
            return np.asarray(on_axes(axes), dtype=float)
        values = f(GridCoordinates.mesh(axes))
        shape = tuple(len(axis) for axis in axes)
        return np.broadcast_to(np.asarray(values, dtype=float), shape)

    @staticmethod
    def reflect(values: np.ndarray) -> np.ndarray:
        """
        relabel an array indexed by beta as beta -> n - beta on every axis;
        on tensor values of a reflection symmetric axis set this is the
        value array of t -> f(1 - t)
        """
        return np.flip(values, axis=tuple(range(values.ndim)))
