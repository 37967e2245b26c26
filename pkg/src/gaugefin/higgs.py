"""Second-order potential, its vacuum and the volatility mass term.

The fields phi_x, phi_y are the second-order expansion variables of the
martingale state; ``e_y`` is the local variance exp(y), treated here as a
spectator scalar.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Iterable

import numpy as np
from numpy.polynomial import Polynomial

from .core import MGParams, SingularParameterError
from .operators import Field

SINGULAR_TOL = 1e-12


@dataclass(frozen=True)
class PotentialCoefficients:
    c_xyy: float   # phi_x phi_y^2
    c_xxy: float   # phi_x^2 phi_y
    c_xxyy: float  # phi_x^2 phi_y^2


@dataclass(frozen=True)
class VacuumSolution:
    phi_vac: float
    source_r: float
    source_sigma_sq: float


@dataclass(frozen=True)
class MassTerm:
    coefficient: float
    vanishes_at_hermiticity: bool
    phi_vac: float


def _vol_drift(params: MGParams, y: float) -> float:
    return (params.lambda_ * math.exp(-y) + params.mu
            - 0.5 * params.zeta_sq * math.exp(2.0 * y * (params.alpha - 1.0)))


def potential_coefficients(params: MGParams, y: float) -> PotentialCoefficients:
    ey = math.exp(y)
    r = float(params.r)
    return PotentialCoefficients(c_xyy=-2.0 * (r - 0.5 * ey),
                                 c_xxy=-2.0 * float(_vol_drift(params, y)),
                                 c_xxyy=r)


def vacuum_ratio(params: MGParams, y: float) -> float:
    """phi_y,vac / phi_x,vac from the potential's drift coefficients."""
    den = float(params.r) - 0.5 * math.exp(y)
    if abs(den) < SINGULAR_TOL:
        raise SingularParameterError(f"r - e^y/2 = {den!r} is zero: vacuum ratio undefined")
    return float(_vol_drift(params, y)) / den


def vacuum_price_only(sigma_sq: float, r: float) -> VacuumSolution:
    """Stationary point of -2(r - s/2) phi_x phi_y^2 + r phi_x^2 phi_y^2 in phi_x."""
    if r == 0.0:
        raise SingularParameterError("r = 0: the price-only vacuum is undefined")
    return VacuumSolution(1.0 - sigma_sq / (2.0 * r), r, sigma_sq)


def _is_hermitian_point(e_y: float, r: float) -> bool:
    return abs(e_y - 2.0 * r) <= SINGULAR_TOL * max(abs(e_y), abs(2.0 * r))


def mass_coefficient(e_y: float, r: float) -> MassTerm:
    """Coefficient of phi_y^2 once phi_x is expanded around its vacuum."""
    vac = vacuum_price_only(e_y, r).phi_vac
    coeff = (-2.0 * (r - 0.5 * e_y) + r * vac) * vac
    return MassTerm(coeff, _is_hermitian_point(e_y, r), vac)


def expand_potential_around_vacuum(e_y: float, r: float) -> dict:
    """Expand -2(r - e_y/2)(v + b) phi_y^2 + r (v + b)^2 phi_y^2 in the fluctuation b."""
    vac = vacuum_price_only(e_y, r).phi_vac
    shifted = Polynomial([vac, 1.0])
    poly = -2.0 * (r - 0.5 * e_y) * shifted + r * shifted ** 2
    c = np.zeros(3)
    c[:len(poly.coef)] = poly.coef
    return {"phi_y^2": float(c[0]), "phibar*phi_y^2": float(c[1]),
            "phibar^2*phi_y^2": float(c[2])}


def shift_field(phi: Field, vac: VacuumSolution, inverse: bool = False) -> Field:
    """phi - phi_vac (or phi + phi_vac with ``inverse``), keeping derivatives."""
    sign = 1.0 if inverse else -1.0
    return Field(phi.grid, phi.values + sign * vac.phi_vac, phi.derivatives, phi.mask)


@dataclass(frozen=True)
class SweepRow:
    r: float
    e_y: float
    phi_vac: float
    mass_coefficient: float
    massless: bool
    singular: bool


def higgs_sweep(r_values: Iterable[float], e_y_values: Iterable[float]) -> list:
    """Vacuum and mass over a grid of (r, e_y); r = 0 rows are marked singular."""
    rows = []
    e_y_values = list(e_y_values)
    for r in r_values:
        for e_y in e_y_values:
            r, e_y = float(r), float(e_y)
            try:
                m = mass_coefficient(e_y, r)
            except SingularParameterError:
                rows.append(SweepRow(r, e_y, math.nan, math.nan, False, True))
                continue
            rows.append(SweepRow(r, e_y, m.phi_vac, m.coefficient,
                                 m.vanishes_at_hermiticity, False))
    return rows
