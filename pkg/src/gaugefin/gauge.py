"""Local transformations U = exp(omega * theta) and their action on Hamiltonians."""

from __future__ import annotations

from dataclasses import dataclass
from math import comb
from typing import NamedTuple, Sequence

import numpy as np

from .core import DimensionError, SingularParameterError, ValidationError
from .operators import (BOUNDARY_MARGIN, DERIVATIVE_KEYS, Field, Grid, Hamiltonian,
                        interior_mask, interior_sup)


@dataclass(frozen=True)
class GaugeSpec:
    """Transformation strength ``omega`` and the sampled phase ``theta``.

    Analytic derivatives of theta, when known, travel inside ``theta`` as a
    :class:`Field` derivative map; otherwise central differences are used.
    """

    omega: float
    theta: Field

    def __post_init__(self):
        if not np.isfinite(self.omega):
            raise ValidationError("omega must be finite")

    @property
    def grid(self) -> Grid:
        return self.theta.grid

    @property
    def theta_dx(self) -> Field:
        return self.theta.partial(1, 0)

    @property
    def theta_dy(self) -> Field:
        return self.theta.partial(0, 1)

    @property
    def theta_dxdy(self) -> Field:
        return self.theta.partial(1, 1)

    @classmethod
    def linear(cls, grid: Grid, omega: float, a: float = 1.0, b: float = 0.0,
               c: float = 0.0) -> "GaugeSpec":
        """theta = a x + b y + c."""
        coords = grid.mesh()
        X, Y = (coords, 0.0) if grid.ndim == 1 else coords
        derivs = {k: 0.0 for k in DERIVATIVE_KEYS}
        derivs[(1, 0)] = a
        derivs[(0, 1)] = b
        return cls(omega, Field(grid, np.broadcast_to(a * X + b * Y + c, grid.shape), derivs))

    @classmethod
    def constant(cls, grid: Grid, omega: float, value: float = 0.0) -> "GaugeSpec":
        return cls(omega, Field.constant(grid, value))

    @classmethod
    def from_expression(cls, grid: Grid, omega: float, expr: str) -> "GaugeSpec":
        return cls(omega, Field.from_expression(grid, expr))

    def derivative_consistency(self, margin: int = BOUNDARY_MARGIN) -> dict:
        """Interior sup difference between analytic and central-difference partials."""
        out = {}
        for key in self.theta.derivatives:
            exact = self.theta.partial(*key)
            approx = self.theta.partial(*key, mode="fd")
            out[key] = interior_sup(approx - exact, margin)
        return out


def _factor(gs: GaugeSpec, sign: float) -> Field:
    """exp(sign * omega * theta), with analytic partials when theta has them."""
    w = sign * gs.omega
    th = gs.theta
    g = np.exp(w * th.values)
    d = th.derivatives
    derivs = {}
    for key in ((1, 0), (0, 1)):
        if key in d:
            derivs[key] = w * d[key] * g
    if (2, 0) in d and (1, 0) in d:
        derivs[(2, 0)] = (w * d[(2, 0)] + (w * d[(1, 0)]) ** 2) * g
    if (0, 2) in d and (0, 1) in d:
        derivs[(0, 2)] = (w * d[(0, 2)] + (w * d[(0, 1)]) ** 2) * g
    if (1, 1) in d and (1, 0) in d and (0, 1) in d:
        derivs[(1, 1)] = (w * d[(1, 1)] + w * w * d[(1, 0)] * d[(0, 1)]) * g
    return Field(th.grid, g, derivs, th.mask)


def _product(g: Field, f: Field) -> Field:
    """Pointwise product with Leibniz-rule partials up to second order."""
    gd = {(0, 0): g.values, **g.derivatives}
    fd = {(0, 0): f.values, **f.derivatives}
    derivs = {}
    for i, j in DERIVATIVE_KEYS:
        terms = [(a, b) for a in range(i + 1) for b in range(j + 1)]
        if all((a, b) in gd and (i - a, j - b) in fd for a, b in terms):
            derivs[(i, j)] = sum(comb(i, a) * comb(j, b) * gd[(a, b)] * fd[(i - a, j - b)]
                                 for a, b in terms)
    return Field(f.grid, g.values * f.values, derivs, g.mask & f.mask)


def apply_local_transformation(gs: GaugeSpec, field: Field, inverse: bool = False) -> Field:
    """exp(+-omega theta) * f pointwise, carrying analytic partials along."""
    if gs.grid != field.grid:
        raise DimensionError("theta and the field live on different grids")
    return _product(_factor(gs, -1.0 if inverse else 1.0), field)


def conjugated_hamiltonian_action(H: Hamiltonian, gs: GaugeSpec, field: Field,
                                  mode: str = "auto", boundary: str = "none") -> Field:
    """U^-1 H (U f) evaluated numerically."""
    Uf = apply_local_transformation(gs, field)
    HUf = H.apply(Uf, mode=mode, boundary=boundary)
    return apply_local_transformation(gs, HUf, inverse=True)


def conjugation_terms(H: Hamiltonian, gs: GaugeSpec, field: Field,
                      mode: str = "auto", boundary: str = "none") -> Field:
    """Closed form of U^-1 H U f - H f from U^-1 d U = d + omega d(theta).

    For each coefficient c_ij of ``H``::

        d_x   -> w th_x f
        d_xx  -> 2 w th_x f_x + (w th_xx + w^2 th_x^2) f
        d_xy  -> w th_y f_x + w th_x f_y + (w th_xy + w^2 th_x th_y) f

    and symmetrically in y.
    """
    w = gs.omega
    grid = field.grid

    def th(*k):
        return gs.theta.partial(*k, mode=mode, boundary=boundary)

    def fp(*k):
        return field.partial(*k, mode=mode, boundary=boundary)

    out = np.zeros(grid.shape)
    mask = field.mask.copy()
    for key, c in H.coefficients(grid).items():
        if key == (0, 0):
            continue
        if key in ((1, 0), (0, 1)):
            t = th(*key)
            term, m = w * t.values * field.values, t.mask
        elif key in ((2, 0), (0, 2)):
            first = (1, 0) if key == (2, 0) else (0, 1)
            t1, t2, f1 = th(*first), th(*key), fp(*first)
            term = 2 * w * t1.values * f1.values + (w * t2.values + w * w * t1.values ** 2) * field.values
            m = t1.mask & t2.mask & f1.mask
        elif key == (1, 1):
            tx, ty, txy, fx, fy = th(1, 0), th(0, 1), th(1, 1), fp(1, 0), fp(0, 1)
            term = (w * ty.values * fx.values + w * tx.values * fy.values
                    + (w * txy.values + w * w * tx.values * ty.values) * field.values)
            m = tx.mask & ty.mask & txy.mask & fx.mask & fy.mask
        else:
            raise ValidationError(f"no conjugation rule for derivative {key}")
        out = out + c * term
        mask &= m
    return Field(grid, out, mask=mask)


def anomaly_terms(gs: GaugeSpec, sigma: float, r: float, field: Field,
                  mode: str = "auto", boundary: str = "none") -> Field:
    """The extra BS terms in their commonly quoted closed form::

        s w (1 + w) / 2 * th'^2 f  +  s w th' f'  +  w (s/2 - r) th' f,   s = sigma^2

    This is kept verbatim for comparison; it does not coincide with
    :func:`conjugation_terms` (no th'' term, different th'^2 and f' factors).
    """
    if gs.grid.ndim != 1 or field.grid.ndim != 1:
        raise DimensionError("the quoted anomaly terms are defined for theta(x) on a 1D grid")
    w, s = gs.omega, sigma * sigma
    t1 = gs.theta.partial(1, 0, mode=mode, boundary=boundary)
    f1 = field.partial(1, 0, mode=mode, boundary=boundary)
    tv = t1.values
    values = (0.5 * s * w * (1.0 + w) * tv ** 2 * field.values
              + s * w * tv * f1.values
              + w * (0.5 * s - r) * tv * field.values)
    return Field(field.grid, values, mask=t1.mask & f1.mask & field.mask)


def commutator_norm(H: Hamiltonian, gs: GaugeSpec, probe_fields: Sequence[Field],
                    margin: int = BOUNDARY_MARGIN, mode: str = "auto") -> float:
    """max over probes of sup|H(U f) - U(H f)| / sup|f| on the interior."""
    if not probe_fields:
        raise ValidationError("commutator_norm needs at least one probe field")
    worst = 0.0
    for f in probe_fields:
        left = H.apply(apply_local_transformation(gs, f), mode=mode)
        right = apply_local_transformation(gs, H.apply(f, mode=mode))
        scale = interior_sup(f, margin)
        if scale == 0.0:
            continue
        worst = max(worst, interior_sup(left - right, margin) / scale)
    return worst


class GaugeConditionResiduals(NamedTuple):
    res1: Field
    res2: Field
    res3: Field


def gauge_condition_residuals(gs: GaugeSpec, sigma_sq: float, r: float, probe: Field,
                              omega: float = None, mode: str = "auto") -> GaugeConditionResiduals:
    """Pointwise residuals of the three invariance conditions on theta(x, y).

    res1 = th_x^2 - w/(1+w) th_y^2
    res2 = th_x d_x(probe) - th_y d_y(probe)
    res3 = (th_x + th_y - 4 th_xy) - (2 r / s)(th_x + th_y)
    """
    w = gs.omega if omega is None else omega
    if gs.grid.ndim != 2:
        raise DimensionError("gauge conditions need theta(x, y) on a 2D grid")
    if w == -1.0:
        raise SingularParameterError("omega = -1 makes w/(1+w) singular")
    if sigma_sq == 0.0:
        raise SingularParameterError("sigma^2 = 0 makes 2r/sigma^2 singular")
    tx = gs.theta.partial(1, 0, mode=mode)
    ty = gs.theta.partial(0, 1, mode=mode)
    txy = gs.theta.partial(1, 1, mode=mode)
    px = probe.partial(1, 0, mode=mode)
    py = probe.partial(0, 1, mode=mode)
    grid = gs.grid
    res1 = Field(grid, tx.values ** 2 - (w / (1.0 + w)) * ty.values ** 2, mask=tx.mask & ty.mask)
    res2 = Field(grid, tx.values * px.values - ty.values * py.values,
                 mask=tx.mask & ty.mask & px.mask & py.mask)
    lin = tx.values + ty.values
    res3 = Field(grid, (lin - 4.0 * txy.values) - (2.0 * r / sigma_sq) * lin,
                 mask=tx.mask & ty.mask & txy.mask)
    return GaugeConditionResiduals(res1, res2, res3)


def interior_values(field: Field, margin: int = BOUNDARY_MARGIN) -> np.ndarray:
    return field.values[interior_mask(field, margin)]
