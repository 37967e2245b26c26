"""Grids, fields, finite-difference operators and the pricing Hamiltonians.

Every Hamiltonian here is a second-order differential operator written with
its coefficients on the left::

    H f = sum_{(i, j)} c_ij(x, y) * d^i/dx^i d^j/dy^j f

and is represented by the map ``{(i, j): c_ij}``.  Applying it to a
:class:`Field` uses analytic partial derivatives when the field carries them
and central differences otherwise; assembling it as a sparse matrix (for time
stepping) always uses differences.

2D values are stored with shape ``(nx, ny)``: axis 0 is log-price ``x``,
axis 1 is log-volatility ``y``.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from pathlib import Path
from typing import Callable, Mapping, Optional, Union

import numpy as np
import scipy.sparse as sp

from .core import (BSParams, DimensionError, GammaCovariant, MGParams,
                   ValidationError)

Key = tuple  # (order in x, order in y)
DERIVATIVE_KEYS = ((1, 0), (0, 1), (2, 0), (0, 2), (1, 1))
BOUNDARY_MARGIN = 5
_BOUNDARIES = ("none", "one-sided", "periodic")


@dataclass(frozen=True)
class Grid1D:
    x_min: float
    x_max: float
    n: int

    def __post_init__(self):
        if int(self.n) != self.n or self.n < 8:
            raise ValidationError(f"grid needs at least 8 points, got n={self.n}")
        if not (math.isfinite(self.x_min) and math.isfinite(self.x_max)):
            raise ValidationError("grid bounds must be finite")
        if not self.x_max > self.x_min:
            raise ValidationError(f"need x_max > x_min, got [{self.x_min}, {self.x_max}]")

    ndim = 1

    @property
    def h(self) -> float:
        return (self.x_max - self.x_min) / (self.n - 1)

    @property
    def points(self) -> np.ndarray:
        return np.linspace(self.x_min, self.x_max, self.n)

    @property
    def shape(self) -> tuple:
        return (self.n,)

    @classmethod
    def centered(cls, center: float, half_width: float, n: int) -> "Grid1D":
        """Grid with ``center`` as a node (requires odd ``n``)."""
        if n % 2 == 0:
            raise ValidationError("a centred grid needs an odd point count")
        return cls(center - half_width, center + half_width, n)

    def mesh(self):
        return self.points


@dataclass(frozen=True)
class Grid2D:
    x_axis: Grid1D
    y_axis: Grid1D

    ndim = 2

    @property
    def shape(self) -> tuple:
        return (self.x_axis.n, self.y_axis.n)

    def mesh(self):
        return np.meshgrid(self.x_axis.points, self.y_axis.points, indexing="ij")


Grid = Union[Grid1D, Grid2D]


def _axis_index(axis) -> int:
    if axis in ("x", 0):
        return 0
    if axis in ("y", 1):
        return 1
    raise DimensionError(f"unknown axis {axis!r}")


def axis_grid(grid: Grid, axis) -> Grid1D:
    a = _axis_index(axis)
    if grid.ndim == 1:
        if a != 0:
            raise DimensionError("a 1D grid has no y axis")
        return grid
    return grid.x_axis if a == 0 else grid.y_axis


def along_y(value, grid: Grid):
    """Reshape a per-``y`` coefficient array so it broadcasts over ``(nx, ny)``."""
    value = np.asarray(value, dtype=float)
    if value.ndim == 0:
        return float(value)
    if grid.ndim == 1:
        raise DimensionError("array-valued parameters need a 2D grid")
    if value.ndim == 1:
        if value.shape[0] != grid.y_axis.n:
            raise DimensionError(f"parameter of length {value.shape[0]} does not match "
                                 f"{grid.y_axis.n} y nodes")
        return value.reshape(1, -1)
    return np.broadcast_to(value, grid.shape)


class Field:
    """Real samples on a grid, optionally with analytic partial derivatives.

    ``derivatives`` maps ``(i, j)`` to the sampled partial d^i_x d^j_y f.
    ``mask`` marks points whose values are trustworthy; finite-difference
    results mark boundary points as invalid and norms skip them.
    """

    __slots__ = ("grid", "values", "derivatives", "mask")

    def __init__(self, grid: Grid, values, derivatives: Optional[Mapping] = None,
                 mask=None):
        values = np.array(values, dtype=float)
        if values.shape != grid.shape:
            raise DimensionError(f"values of shape {values.shape} do not match grid {grid.shape}")
        if not np.all(np.isfinite(values)):
            raise ValidationError("field values must be finite")
        derivs = {}
        for key, d in (derivatives or {}).items():
            key = tuple(key)
            if grid.ndim == 1 and key[1] != 0:
                continue
            d = np.broadcast_to(np.asarray(d, dtype=float), grid.shape).copy()
            derivs[key] = d
        self.grid = grid
        self.values = values
        self.derivatives = derivs
        self.mask = np.ones(grid.shape, bool) if mask is None else np.asarray(mask, bool)

    def __repr__(self):
        keys = sorted(self.derivatives)
        return f"Field(grid={self.grid}, analytic={keys})"

    # construction helpers
    @classmethod
    def from_function(cls, grid: Grid, func: Callable, derivatives: Optional[Mapping] = None):
        """Sample ``func`` (and optional derivative callables) on ``grid``."""
        coords = grid.mesh()
        args = (coords,) if grid.ndim == 1 else coords
        values = func(*args)
        derivs = {k: g(*args) for k, g in (derivatives or {}).items()}
        return cls(grid, np.broadcast_to(values, grid.shape), derivs)

    @classmethod
    def from_expression(cls, grid: Grid, expr: str):
        """Sample a sympy expression in ``x`` (and ``y``) with exact partials."""
        import sympy

        x, y = sympy.symbols("x y", real=True)
        e = sympy.sympify(expr, locals={"x": x, "y": y, "e": sympy.E})
        if grid.ndim == 1 and y in e.free_symbols:
            raise DimensionError(f"expression {expr!r} uses y on a 1D grid")
        extra = e.free_symbols - {x, y}
        if extra:
            raise ValidationError(f"expression {expr!r} has unknown symbols {sorted(map(str, extra))}")

        def compile_(ex):
            return sympy.lambdify((x, y), ex, modules="numpy")

        coords = grid.mesh()
        X, Y = (coords, np.zeros_like(coords)) if grid.ndim == 1 else coords
        values = np.broadcast_to(compile_(e)(X, Y), grid.shape)
        derivs = {}
        for i, j in DERIVATIVE_KEYS:
            d = e
            if i:
                d = sympy.diff(d, x, i)
            if j:
                d = sympy.diff(d, y, j)
            derivs[(i, j)] = np.broadcast_to(compile_(d)(X, Y), grid.shape)
        return cls(grid, values, derivs)

    @classmethod
    def constant(cls, grid: Grid, c: float = 1.0):
        return cls(grid, np.full(grid.shape, float(c)), {k: 0.0 for k in DERIVATIVE_KEYS})

    @classmethod
    def exponential(cls, grid: Grid, a: float = 1.0, b: float = 0.0, amplitude: float = 1.0):
        """``amplitude * exp(a x + b y)`` with exact partials."""
        coords = grid.mesh()
        X, Y = (coords, 0.0) if grid.ndim == 1 else coords
        v = amplitude * np.exp(a * X + b * Y)
        return cls(grid, v, {(i, j): a**i * b**j * v for i, j in DERIVATIVE_KEYS})

    @classmethod
    def plane_wave(cls, grid: Grid, kx: float, ky: float = 0.0, phase: float = 0.0,
                   amplitude: float = 1.0):
        """``amplitude * sin(kx x + ky y + phase)`` with exact partials."""
        coords = grid.mesh()
        X, Y = (coords, 0.0) if grid.ndim == 1 else coords
        arg = kx * X + ky * Y + phase
        s, c = amplitude * np.sin(arg), amplitude * np.cos(arg)
        derivs = {(1, 0): kx * c, (0, 1): ky * c, (2, 0): -kx * kx * s,
                  (0, 2): -ky * ky * s, (1, 1): -kx * ky * s}
        return cls(grid, np.broadcast_to(s, grid.shape), derivs)

    # algebra
    def _combine(self, other, op):
        if isinstance(other, Field):
            if other.grid != self.grid:
                raise DimensionError("fields live on different grids")
            keys = self.derivatives.keys() & other.derivatives.keys()
            derivs = {k: op(self.derivatives[k], other.derivatives[k]) for k in keys}
            return Field(self.grid, op(self.values, other.values), derivs,
                         self.mask & other.mask)
        return NotImplemented

    def __add__(self, other):
        return self._combine(other, np.add)

    def __sub__(self, other):
        return self._combine(other, np.subtract)

    def __mul__(self, c):
        if isinstance(c, Field):
            return NotImplemented
        c = float(c)
        return Field(self.grid, c * self.values,
                     {k: c * v for k, v in self.derivatives.items()}, self.mask)

    __rmul__ = __mul__

    def __neg__(self):
        return -1.0 * self

    def with_values(self, values, mask=None) -> "Field":
        """Same grid, new samples, no analytic derivatives."""
        return Field(self.grid, values, None, self.mask if mask is None else mask)

    # differentiation
    def partial(self, nx: int, ny: int = 0, mode: str = "auto",
                boundary: str = "none") -> "Field":
        """The partial derivative d^nx_x d^ny_y of this field.

        ``mode`` is ``"auto"`` (analytic when available), ``"analytic"`` or
        ``"fd"``.  Finite differences use the stencils of
        :func:`difference_matrix`; with ``boundary="none"`` the points reached
        only by one-sided stencils are masked out.
        """
        key = (nx, ny)
        if self.grid.ndim == 1 and ny:
            raise DimensionError("a 1D field has no y derivative")
        if key == (0, 0):
            return self
        if mode not in ("auto", "analytic", "fd"):
            raise ValidationError(f"unknown derivative mode {mode!r}")
        if mode != "fd" and key in self.derivatives:
            return Field(self.grid, self.derivatives[key], mask=self.mask)
        if mode == "analytic":
            raise ValidationError(f"no analytic derivative {key} available")
        values = self.values
        mask = self.mask.copy()
        for axis, order in ((0, nx), (1, ny)):
            if not order:
                continue
            g1 = axis_grid(self.grid, axis)
            D = difference_matrix(g1.n, g1.h, order, boundary)
            moved = np.moveaxis(values, axis, 0)
            diffed = (D @ moved.reshape(g1.n, -1)).reshape(moved.shape)
            values = np.moveaxis(diffed, 0, axis)
            if boundary == "none":
                edge = [slice(None)] * self.grid.ndim
                for idx in (0, -1):
                    edge[axis] = idx
                    mask[tuple(edge)] = False
        return Field(self.grid, values, mask=mask)


def apply_derivative(field: Field, axis, order: int, mode: str = "auto",
                     boundary: str = "none") -> Field:
    """Derivative of ``order`` 1 or 2 along ``axis`` (``"x"`` or ``"y"``)."""
    if order not in (1, 2):
        raise ValidationError(f"derivative order must be 1 or 2, got {order}")
    a = _axis_index(axis)
    g1 = axis_grid(field.grid, a)
    if g1.n < 2 * order + 1:
        raise ValidationError("not enough points for a central difference")
    return field.partial(order if a == 0 else 0, order if a == 1 else 0, mode, boundary)


def difference_matrix(n: int, h: float, order: int, boundary: str = "one-sided") -> sp.csr_matrix:
    """Second-order accurate difference matrix for d/dx or d^2/dx^2.

    Interior rows are central.  ``"periodic"`` wraps the stencil around;
    ``"one-sided"`` and ``"none"`` use second-order one-sided rows at the two
    ends (three points for the first derivative, four for the second).
    """
    if boundary not in _BOUNDARIES:
        raise ValidationError(f"unknown boundary scheme {boundary!r}")
    if order == 1:
        stencil, scale = (-1.0, 0.0, 1.0), 1.0 / (2.0 * h)
        left, right = (-3.0, 4.0, -1.0), (1.0, -4.0, 3.0)
    elif order == 2:
        stencil, scale = (1.0, -2.0, 1.0), 1.0 / (h * h)
        left, right = (2.0, -5.0, 4.0, -1.0), (-1.0, 4.0, -5.0, 2.0)
    else:
        raise ValidationError(f"derivative order must be 1 or 2, got {order}")
    rows, cols, vals = [], [], []
    for i in range(n):
        if boundary == "periodic" or 0 < i < n - 1:
            for off, w in zip((-1, 0, 1), stencil):
                if w:
                    rows.append(i)
                    cols.append((i + off) % n)
                    vals.append(w * scale)
        elif i == 0:
            for j, w in enumerate(left):
                rows.append(i)
                cols.append(j)
                vals.append(w * scale)
        else:
            for j, w in enumerate(right):
                rows.append(i)
                cols.append(n - len(right) + j)
                vals.append(w * scale)
    return sp.csr_matrix((vals, (rows, cols)), shape=(n, n))


def partial_matrix(grid: Grid, nx: int, ny: int = 0, boundary: str = "one-sided"):
    """Sparse matrix of d^nx_x d^ny_y acting on C-ordered flattened values."""
    if grid.ndim == 1:
        if ny:
            raise DimensionError("a 1D grid has no y derivative")
        if nx == 0:
            return sp.identity(grid.n, format="csr")
        return difference_matrix(grid.n, grid.h, nx, boundary)
    gx, gy = grid.x_axis, grid.y_axis
    Dx = difference_matrix(gx.n, gx.h, nx, boundary) if nx else sp.identity(gx.n)
    Dy = difference_matrix(gy.n, gy.h, ny, boundary) if ny else sp.identity(gy.n)
    return sp.kron(Dx, Dy, format="csr")


def momentum_matrix(grid: Grid1D, boundary: str = "periodic") -> np.ndarray:
    return difference_matrix(grid.n, grid.h, 1, boundary).toarray()


def momentum_antihermiticity_check(grid: Grid1D, boundary: str = "periodic") -> float:
    """Largest entry of ``|D + D^T|`` for the first-derivative matrix ``D``."""
    D = momentum_matrix(grid, boundary)
    return float(np.max(np.abs(D + D.T)))


class Hamiltonian:
    """Base class: subclasses provide :meth:`coefficients`."""

    ndim: Optional[int] = None
    name = "H"

    def coefficients(self, grid: Grid) -> dict:
        raise NotImplementedError

    def _check_grid(self, grid: Grid):
        if self.ndim is not None and grid.ndim != self.ndim:
            raise DimensionError(f"{self.name} acts on {self.ndim}D fields, got a {grid.ndim}D field")

    def apply(self, field: Field, mode: str = "auto", boundary: str = "none") -> Field:
        self._check_grid(field.grid)
        out = np.zeros(field.grid.shape)
        mask = field.mask.copy()
        for key, c in self.coefficients(field.grid).items():
            d = field.partial(*key, mode=mode, boundary=boundary)
            out = out + c * d.values
            mask &= d.mask
        return Field(field.grid, out, mask=mask)

    __call__ = apply

    def matrix(self, grid: Grid, boundary: str = "one-sided", keys=None, weights=None):
        """Sparse finite-difference matrix, optionally restricted to ``keys``.

        ``weights`` scales individual terms (used to split the reaction term
        between directions in operator splitting).
        """
        self._check_grid(grid)
        size = int(np.prod(grid.shape))
        M = sp.csr_matrix((size, size))
        for key, c in self.coefficients(grid).items():
            if keys is not None and key not in keys:
                continue
            w = 1.0 if weights is None else weights.get(key, 1.0)
            c = w * np.broadcast_to(c, grid.shape).ravel()
            if not np.any(c):
                continue
            M = M + sp.diags(c) @ partial_matrix(grid, *key, boundary=boundary)
        return M.tocsr()


class BSHamiltonian(Hamiltonian):
    """-(s/2) d_xx + (s/2 - r) d_x + r with s = sigma**2.

    Acts along x only, so 2D fields are treated row by row.
    """

    name = "H_BS"

    def __init__(self, params: BSParams):
        self.params = params

    def coefficients(self, grid):
        s, r = self.params.sigma_sq, self.params.r
        return {(2, 0): -0.5 * s, (1, 0): 0.5 * s - r, (0, 0): r}


class GaugeHamiltonian(Hamiltonian):
    """BS Hamiltonian with d/dx replaced by d/dx + gamma d/dy.

    ``sigma_sq`` is either a number or the string ``"exp_y"`` for the local
    value exp(y).  ``r`` may be a per-y array.
    """

    ndim = 2
    name = "H_gauge"

    def __init__(self, sigma_sq: Union[float, str], r, gc: GammaCovariant = GammaCovariant()):
        if isinstance(sigma_sq, str) and sigma_sq not in ("exp_y", "e^y"):
            raise ValidationError(f"sigma_sq must be a number or 'exp_y', got {sigma_sq!r}")
        self.sigma_sq = sigma_sq
        self.r = r
        self.gamma = gc.gamma

    def coefficients(self, grid):
        self._check_grid(grid)
        if isinstance(self.sigma_sq, str):
            s = np.exp(grid.y_axis.points).reshape(1, -1)
        else:
            s = float(self.sigma_sq)
        r = along_y(self.r, grid)
        g = self.gamma
        drift = 0.5 * s - r
        return {(2, 0): -0.5 * s, (1, 0): drift, (0, 2): -0.5 * s * g * g,
                (1, 1): -s * g, (0, 1): drift * g, (0, 0): r}


class MGHamiltonian(Hamiltonian):
    """Merton-Garman Hamiltonian with variance exp(y), coefficients on the left.

    Parameters may be per-y arrays (pointwise coefficient map).
    """

    ndim = 2
    name = "H_MG"

    def __init__(self, params: MGParams):
        self.params = params

    def coefficients(self, grid):
        self._check_grid(grid)
        p = self.params
        y = grid.y_axis.points.reshape(1, -1)
        ey = np.exp(y)
        zeta_sq = along_y(p.zeta_sq, grid)
        rho_zeta = along_y(p.rho_zeta, grid)
        r = along_y(p.r, grid)
        vol_diff = 0.5 * zeta_sq * np.exp(2.0 * y * (p.alpha - 1.0))
        return {
            (2, 0): -0.5 * ey,
            (1, 0): -(r - 0.5 * ey),
            (0, 2): -vol_diff,
            (1, 1): -rho_zeta * np.exp(y * (p.alpha - 0.5)),
            (0, 1): -(p.lambda_ * np.exp(-y) + p.mu - vol_diff),
            (0, 0): r,
        }


class CoefficientHamiltonian(Hamiltonian):
    """Operator given directly by its coefficient map."""

    def __init__(self, coefficients: Mapping, ndim: Optional[int] = None, name: str = "H"):
        self._coefficients = dict(coefficients)
        self.ndim = ndim
        self.name = name

    def coefficients(self, grid):
        return {k: (v(grid) if callable(v) else v) for k, v in self._coefficients.items()}


def apply_bs_hamiltonian(params: BSParams, field: Field, mode: str = "auto",
                         boundary: str = "none") -> Field:
    return BSHamiltonian(params).apply(field, mode, boundary)


def apply_gauge_hamiltonian(sigma_sq, r, gc: GammaCovariant, field: Field,
                            mode: str = "auto", boundary: str = "none") -> Field:
    if field.grid.ndim != 2:
        raise DimensionError("the gauge Hamiltonian needs a 2D field")
    return GaugeHamiltonian(sigma_sq, r, gc).apply(field, mode, boundary)


def apply_mg_hamiltonian(params: MGParams, field: Field, mode: str = "auto",
                         boundary: str = "none") -> Field:
    if field.grid.ndim != 2:
        raise DimensionError("the MG Hamiltonian needs a 2D field")
    return MGHamiltonian(params).apply(field, mode, boundary)


def interior_mask(field: Field, margin: int = BOUNDARY_MARGIN) -> np.ndarray:
    mask = field.mask.copy()
    if margin:
        for axis in range(field.grid.ndim):
            sl = [slice(None)] * field.grid.ndim
            sl[axis] = slice(0, margin)
            mask[tuple(sl)] = False
            sl[axis] = slice(-margin, None)
            mask[tuple(sl)] = False
    return mask


def interior_sup(field: Field, margin: int = BOUNDARY_MARGIN) -> float:
    """Sup-norm over valid points, ``margin`` points away from every edge."""
    m = interior_mask(field, margin)
    if not m.any():
        raise ValidationError("no interior points left after the boundary margin")
    return float(np.max(np.abs(field.values[m])))


def save_field(field: Field, path, header: Optional[Mapping] = None) -> Path:
    """Write ``x [y] value`` columns; ``header`` entries become ``# key=value`` lines."""
    path = Path(path)
    lines = [f"# {k}={v}" for k, v in (header or {}).items()]
    if field.grid.ndim == 1:
        lines.append("# x value")
        cols = np.column_stack([field.grid.points, field.values])
    else:
        lines.append("# x y value")
        X, Y = field.grid.mesh()
        cols = np.column_stack([X.ravel(), Y.ravel(), field.values.ravel()])
    body = "\n".join(" ".join(repr(float(v)) for v in row) for row in cols)
    path.write_text("\n".join(lines) + "\n" + body + "\n")
    return path


def load_field(path) -> Field:
    """Read a file written by :func:`save_field` (grid inferred from the nodes)."""
    data = np.loadtxt(path, comments="#", ndmin=2)
    if data.shape[1] == 2:
        x = data[:, 0]
        return Field(Grid1D(float(x[0]), float(x[-1]), len(x)), data[:, 1])
    if data.shape[1] != 3:
        raise ValidationError(f"{path}: expected 2 or 3 columns, got {data.shape[1]}")
    xs, ys = np.unique(data[:, 0]), np.unique(data[:, 1])
    grid = Grid2D(Grid1D(float(xs[0]), float(xs[-1]), len(xs)),
                  Grid1D(float(ys[0]), float(ys[-1]), len(ys)))
    if data.shape[0] != xs.size * ys.size:
        raise ValidationError(f"{path}: nodes do not form a rectangular grid")
    order = np.lexsort((data[:, 1], data[:, 0]))
    return Field(grid, data[order, 2].reshape(grid.shape))
