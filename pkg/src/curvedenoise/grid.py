"""Discretized curves on an equidistant grid.

All curves live on a :class:`Grid` over ``[a, b)`` sampled at the left
endpoints ``u_i = a + i (b - a) / N``.  Integrals are left Riemann sums with
the constant weight ``w = (b - a) / N``; with this rule the trigonometric
functions ``cos(2 pi j u)`` and ``sin(2 pi j u)`` on ``[0, 1]`` are exactly
orthogonal, which keeps the simulation bases free of quadrature bias.

Bases (ordered orthonormal families of curves) are represented as a
:class:`CurveSeries` whose rows are the basis curves.
"""

from dataclasses import dataclass, field

import numpy as np

from .exceptions import (
    GridMismatchError,
    InvalidIntervalError,
    InvalidSizeError,
    NonOrthonormalBasisError,
)

ORTHONORMAL_TOL = 1e-8


@dataclass(frozen=True)
class Grid:
    """Equidistant left-endpoint grid on ``[a, b)`` with ``N`` points."""

    a: float
    b: float
    N: int

    def __post_init__(self):
        if not np.isfinite(self.a) or not np.isfinite(self.b) or self.b <= self.a:
            raise InvalidIntervalError(f"need b > a, got a={self.a}, b={self.b}")
        if int(self.N) != self.N or self.N < 2:
            raise InvalidSizeError(f"need N >= 2, got N={self.N}")

    @property
    def width(self):
        return self.b - self.a

    @property
    def weight(self):
        return (self.b - self.a) / self.N

    @property
    def points(self):
        return self.a + np.arange(self.N) * (self.width / self.N)


def make_grid(a, b, N):
    """Build a :class:`Grid` after validating the interval and size."""
    return Grid(float(a), float(b), int(N))


def _check_finite(values, what):
    if not np.all(np.isfinite(values)):
        raise ValueError(f"{what} contains non-finite values")


@dataclass(frozen=True)
class Curve:
    """A single curve sampled on ``grid``."""

    values: np.ndarray
    grid: Grid

    def __post_init__(self):
        values = np.asarray(self.values, dtype=float)
        if values.shape != (self.grid.N,):
            raise InvalidSizeError(
                f"curve has shape {values.shape}, grid needs ({self.grid.N},)"
            )
        _check_finite(values, "curve")
        object.__setattr__(self, "values", values)


@dataclass(frozen=True)
class CurveSeries:
    """An ``n x N`` array of curves sharing one grid.

    Also used for bases, in which case ``n`` may be zero.
    """

    data: np.ndarray
    grid: Grid
    allow_empty: bool = field(default=False, repr=False, compare=False)

    def __post_init__(self):
        data = np.asarray(self.data, dtype=float)
        if data.ndim == 1 and data.size == 0:
            data = data.reshape(0, self.grid.N)
        if data.ndim != 2 or data.shape[1] != self.grid.N:
            raise InvalidSizeError(
                f"series has shape {data.shape}, grid needs (n, {self.grid.N})"
            )
        if data.shape[0] == 0 and not self.allow_empty:
            raise InvalidSizeError("series must contain at least one curve")
        _check_finite(data, "series")
        object.__setattr__(self, "data", data)

    @property
    def n(self):
        return self.data.shape[0]

    def __len__(self):
        return self.n

    def __getitem__(self, t):
        return Curve(self.data[t], self.grid)

    def __iter__(self):
        for row in self.data:
            yield Curve(row, self.grid)


def as_basis(curves, grid=None):
    """Coerce a list of :class:`Curve`, a ``CurveSeries`` or an array into a basis."""
    if isinstance(curves, CurveSeries):
        return curves
    if isinstance(curves, np.ndarray):
        if grid is None:
            raise ValueError("a grid is required to wrap a raw array")
        return CurveSeries(np.atleast_2d(curves), grid, allow_empty=True)
    curves = list(curves)
    if not curves:
        if grid is None:
            raise ValueError("a grid is required for an empty basis")
        return CurveSeries(np.empty((0, grid.N)), grid, allow_empty=True)
    g = curves[0].grid
    for c in curves[1:]:
        check_same_grid(g, c.grid)
    return CurveSeries(np.vstack([c.values for c in curves]), g, allow_empty=True)


def empty_basis(grid):
    return CurveSeries(np.empty((0, grid.N)), grid, allow_empty=True)


def check_same_grid(*grids):
    first = grids[0]
    for g in grids[1:]:
        if g != first:
            raise GridMismatchError(f"grid mismatch: {first} vs {g}")
    return first


def inner_product(f, g):
    """Riemann-sum approximation of the L2 inner product of two curves."""
    grid = check_same_grid(f.grid, g.grid)
    return float(grid.weight * np.dot(f.values, g.values))


def gram(basis):
    """Gram matrix ``<b_i, b_j>`` of the rows of ``basis``."""
    B = basis.data
    return basis.grid.weight * (B @ B.T)


def check_orthonormal(basis, tol=ORTHONORMAL_TOL):
    k = basis.n
    if k == 0:
        return
    dev = np.max(np.abs(gram(basis) - np.eye(k)))
    if dev > tol:
        raise NonOrthonormalBasisError(
            f"basis Gram matrix deviates from identity by {dev:.3g} > {tol:g}"
        )


def coefficients(data, basis_data, weight):
    """Coordinates of the rows of ``data`` on an orthonormal basis (raw arrays)."""
    return weight * (data @ basis_data.T)


def project(y, basis):
    """Orthogonal projection of ``y`` onto the span of an orthonormal basis.

    Parameters
    ----------
    y : Curve or CurveSeries
        Curve(s) to project.
    basis : CurveSeries or list of Curve
        Orthonormal family (rows).

    Returns
    -------
    coeffs : ndarray
        ``<y, basis_j>``; shape ``(k,)`` for a curve, ``(n, k)`` for a series.
    parallel : Curve or CurveSeries
        ``sum_j coeffs_j basis_j``.
    """
    basis = as_basis(basis, y.grid)
    check_same_grid(y.grid, basis.grid)
    check_orthonormal(basis)
    w = y.grid.weight
    if isinstance(y, Curve):
        coeffs = coefficients(y.values, basis.data, w)
        return coeffs, Curve(coeffs @ basis.data, y.grid)
    coeffs = coefficients(y.data, basis.data, w)
    return coeffs, CurveSeries(coeffs @ basis.data, y.grid)


def orthonormalize(data, weight):
    """Re-normalize rows of ``data`` to unit discrete norm."""
    norms = np.sqrt(weight * np.sum(data * data, axis=1))
    norms[norms == 0] = 1.0
    return data / norms[:, None]
