"""Real functions sampled on a uniform grid, with a trapezoid inner product.

Every inner product in the package goes through :func:`inner_product`,
:func:`inner_products` or :func:`gram_matrix`, so the quadrature rule is
defined in exactly one place.
"""

from __future__ import annotations

import csv
from dataclasses import dataclass, field
from functools import cached_property
from pathlib import Path

import numpy as np

from .exceptions import DimensionMismatchError, GridMismatchError, InvalidArgumentError

__all__ = [
    "Grid",
    "SampledFunction",
    "SpanningSet",
    "make_uniform_grid",
    "inner_product",
    "inner_products",
    "norm",
    "gram_matrix",
    "write_function_csv",
    "read_function_csv",
]


@dataclass(frozen=True)
class Grid:
    """Uniform grid ``a = x_1 < ... < x_N = b``.

    ``dtype`` selects the working precision of everything sampled on the
    grid; ``np.longdouble`` gives 80-bit extended precision on x86.
    """

    a: float
    b: float
    n_points: int
    dtype: np.dtype = field(default=np.dtype(np.float64))

    def __post_init__(self):
        object.__setattr__(self, "dtype", np.dtype(self.dtype))
        if not np.isfinite(self.a) or not np.isfinite(self.b) or not self.a < self.b:
            raise InvalidArgumentError(f"need a < b, got a={self.a}, b={self.b}")
        if int(self.n_points) != self.n_points or self.n_points < 2:
            raise InvalidArgumentError(f"need n_points >= 2, got {self.n_points}")
        object.__setattr__(self, "n_points", int(self.n_points))

    @cached_property
    def spacing(self):
        dt = self.dtype.type
        return (dt(self.b) - dt(self.a)) / dt(self.n_points - 1)

    @cached_property
    def points(self):
        dt = self.dtype.type
        x = dt(self.a) + np.arange(self.n_points, dtype=self.dtype) * self.spacing
        x[-1] = dt(self.b)
        x.flags.writeable = False
        return x

    @cached_property
    def weights(self):
        """Composite trapezoid weights."""
        w = np.full(self.n_points, self.spacing, dtype=self.dtype)
        w[0] = w[-1] = self.spacing / 2
        w.flags.writeable = False
        return w

    def sample(self, func):
        """Evaluate a vectorized callable on the grid points."""
        return SampledFunction(self, func(self.points))


def make_uniform_grid(a, b, n_points, dtype=np.float64):
    return Grid(a, b, n_points, dtype)


def _frozen(values, grid, ndim):
    arr = np.array(values, dtype=grid.dtype)
    if arr.ndim != ndim or arr.shape[-1] != grid.n_points:
        raise DimensionMismatchError(
            f"expected {ndim}-d samples with last axis {grid.n_points}, got shape {arr.shape}"
        )
    if not np.all(np.isfinite(arr)):
        raise InvalidArgumentError("samples must be finite")
    arr.flags.writeable = False
    return arr


@dataclass(frozen=True, eq=False)
class SampledFunction:
    """A real function known through its values on ``grid``."""

    grid: Grid
    values: np.ndarray

    def __post_init__(self):
        object.__setattr__(self, "values", _frozen(self.values, self.grid, 1))

    def _check(self, other):
        if isinstance(other, SampledFunction):
            if other.grid != self.grid:
                raise GridMismatchError("functions are sampled on different grids")
            return other.values
        return other

    def __add__(self, other):
        return SampledFunction(self.grid, self.values + self._check(other))

    def __sub__(self, other):
        return SampledFunction(self.grid, self.values - self._check(other))

    def __mul__(self, scalar):
        return SampledFunction(self.grid, self.values * scalar)

    __rmul__ = __mul__

    def __truediv__(self, scalar):
        return SampledFunction(self.grid, self.values / scalar)

    def __neg__(self):
        return SampledFunction(self.grid, -self.values)

    @classmethod
    def zeros(cls, grid):
        return cls(grid, np.zeros(grid.n_points, dtype=grid.dtype))


@dataclass(frozen=True, eq=False)
class SpanningSet:
    """Ordered, non-empty family of functions on a common grid.

    Stored as a ``(len, n_points)`` array; row ``i`` is the i-th function.
    """

    grid: Grid
    values: np.ndarray
    label: str = ""

    def __post_init__(self):
        vals = _frozen(np.atleast_2d(self.values), self.grid, 2)
        if vals.shape[0] == 0:
            raise InvalidArgumentError("a spanning set needs at least one function")
        object.__setattr__(self, "values", vals)

    @classmethod
    def from_functions(cls, functions, label=""):
        functions = list(functions)
        if not functions:
            raise InvalidArgumentError("a spanning set needs at least one function")
        grid = functions[0].grid
        for f in functions[1:]:
            if f.grid != grid:
                raise GridMismatchError("functions are sampled on different grids")
        return cls(grid, np.stack([f.values for f in functions]), label)

    def __len__(self):
        return self.values.shape[0]

    def __getitem__(self, i):
        return SampledFunction(self.grid, self.values[i])

    def __iter__(self):
        for i in range(len(self)):
            yield self[i]

    def combine(self, coeffs):
        """Return ``sum_i coeffs[i] * self[i]``."""
        coeffs = np.asarray(coeffs)
        if coeffs.shape != (len(self),):
            raise DimensionMismatchError(f"need {len(self)} coefficients, got {coeffs.shape}")
        return SampledFunction(self.grid, coeffs.astype(self.grid.dtype) @ self.values)


def _same_grid(*objs):
    grid = objs[0].grid
    for o in objs[1:]:
        if o.grid != grid:
            raise GridMismatchError("operands are sampled on different grids")
    return grid


def inner_product(f, h):
    """Trapezoid approximation of the integral of ``f * h`` over the grid.

    Exactly symmetric: the pointwise product is formed before weighting.
    """
    grid = _same_grid(f, h)
    return np.sum(grid.weights * (f.values * h.values))


def norm(f):
    return np.sqrt(inner_product(f, f))


def inner_products(A, f):
    """Vector ``<A_i | f>`` for every function of the spanning set ``A``."""
    grid = _same_grid(A, f)
    return A.values @ (grid.weights * f.values)


def gram_matrix(A, B=None):
    """Matrix of inner products ``<A_i | B_j>``; ``B`` defaults to ``A``.

    When ``B`` is ``A`` the result is symmetrized so it is exactly symmetric.
    """
    if B is None:
        B = A
    grid = _same_grid(A, B)
    G = (A.values * grid.weights) @ B.values.T
    if B is A:
        G = (G + G.T) / 2
    return G


def write_function_csv(f, path):
    """Write ``x,value`` rows at 17 significant digits."""
    path = Path(path)
    with path.open("w", newline="") as fh:
        writer = csv.writer(fh, lineterminator="\n")
        writer.writerow(["x", "value"])
        for x, v in zip(f.grid.points, f.values):
            writer.writerow([f"{float(x):.17g}", f"{float(v):.17g}"])


def read_function_csv(path, grid=None, dtype=np.float64):
    """Read a function written by :func:`write_function_csv`.

    If ``grid`` is omitted it is rebuilt from the ``x`` column, which must be
    uniformly spaced.
    """
    with Path(path).open(newline="") as fh:
        reader = csv.reader(fh)
        header = next(reader)
        if [h.strip() for h in header] != ["x", "value"]:
            raise InvalidArgumentError(f"{path}: expected header 'x,value', got {header}")
        rows = [(float(r[0]), float(r[1])) for r in reader if r]
    xs = np.array([r[0] for r in rows])
    vals = np.array([r[1] for r in rows])
    if grid is None:
        grid = Grid(xs[0], xs[-1], len(xs), dtype)
    if len(xs) != grid.n_points:
        raise GridMismatchError(f"{path}: {len(xs)} samples, grid has {grid.n_points}")
    if not np.allclose(xs, grid.points.astype(np.float64), rtol=0, atol=1e-9 * float(grid.spacing)):
        raise GridMismatchError(f"{path}: sample locations do not match the grid")
    return SampledFunction(grid, vals)
