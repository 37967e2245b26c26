"""Martingale-state checks, equilibrium volatility and risk-neutral Monte Carlo."""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import NamedTuple, Optional

import numpy as np

from .core import BSParams, MGParams, ValidationError, mapped_mg_params
from .operators import (BOUNDARY_MARGIN, BSHamiltonian, Field, Grid1D, Grid2D,
                        MGHamiltonian, interior_mask, interior_sup)


@dataclass
class MartingaleReport:
    max_interior_residual: float
    residual_field: Field
    constraint_residuals: list = field(default_factory=list)
    notes: list = field(default_factory=list)

    def as_dict(self) -> dict:
        out = {"max_interior_residual": self.max_interior_residual}
        out.update({name: value for name, value in self.constraint_residuals})
        return out


@dataclass(frozen=True)
class EquilibriumRoots:
    """Log-volatilities solving exp(2y) + mu exp(y) + lambda = 0."""

    roots_y: tuple
    discriminant: float
    discarded_u: tuple = ()

    @property
    def notes(self) -> list:
        if not self.roots_y and self.discriminant < 0:
            return ["no positive real roots (negative discriminant)"]
        notes = [f"discarded non-positive root u={u!r}" for u in self.discarded_u]
        if not self.roots_y:
            notes.append("no positive real roots")
        return notes


def check_bs_martingale(params: BSParams, grid: Grid1D, mode: str = "analytic",
                        state: Optional[Field] = None,
                        margin: int = BOUNDARY_MARGIN) -> MartingaleReport:
    """Residual of H_BS applied to exp(x) (or to ``state``).

    ``mode="analytic"`` uses exact derivatives, ``"fd"`` central differences.
    The reported residual is the interior sup-norm of H f.
    """
    f = Field.exponential(grid) if state is None else state
    res = BSHamiltonian(params).apply(f, mode="fd" if mode == "fd" else "auto")
    rel = interior_sup(res, margin) / interior_sup(f, margin)
    return MartingaleReport(interior_sup(res, margin), res,
                            [("relative_residual", rel)],
                            [f"derivatives={mode}", f"margin={margin}"])


def check_mg_martingale(lambda_: float, mu: float, alpha: float, x_grid: Grid1D,
                        mode: str = "analytic", half_width: float = 0.2, ny: int = 41,
                        rho_sign: int = 1, margin: int = BOUNDARY_MARGIN) -> MartingaleReport:
    """H_MG exp(x + y) at each equilibrium root, with pointwise-mapped parameters.

    For every root y* a y-axis centred on y* is built so that the root is a
    grid node; the residual is taken on that row only, where the state must
    be annihilated.
    """
    roots = solve_equilibrium_volatility(lambda_, mu)
    worst, last, residuals = 0.0, None, []
    for k, y_star in enumerate(roots.roots_y):
        grid = Grid2D(x_grid, Grid1D.centered(y_star, half_width, ny))
        params = mapped_mg_params(alpha, grid.y_axis.points, lambda_, mu, rho_sign)
        f = Field.exponential(grid, 1.0, 1.0)
        res = MGHamiltonian(params).apply(f, mode="fd" if mode == "fd" else "auto")
        row = ny // 2
        m = interior_mask(res, margin)[:, row]
        value = float(np.max(np.abs(res.values[m, row])))
        scale = float(np.max(np.abs(f.values[m, row])))
        residuals.append((f"root_{k}_y", y_star))
        residuals.append((f"root_{k}_relative_residual", value / scale))
        worst = max(worst, value / scale)
        last = res
    notes = list(roots.notes)
    if last is None:
        grid = Grid2D(x_grid, Grid1D.centered(0.0, half_width, ny))
        last = Field(grid, np.zeros(grid.shape))
        notes.append("no equilibrium root: MG martingale condition not testable")
    return MartingaleReport(worst, last, residuals, notes + [f"derivatives={mode}"])


def price_shift_generator_check(grid: Grid1D, state: Optional[Field] = None,
                                margin: int = 1) -> float:
    """min |d/dx state| on the interior; positive means the shift symmetry is broken."""
    f = Field.exponential(grid) if state is None else state
    d = f.partial(1, 0, mode="fd")
    m = interior_mask(d, margin)
    return float(np.min(np.abs(d.values[m])))


def solve_equilibrium_volatility(lambda_: float, mu: float) -> EquilibriumRoots:
    """Solve u^2 + mu u + lambda = 0 for u = exp(y) > 0 and return y = ln u."""
    if not (math.isfinite(lambda_) and math.isfinite(mu)):
        raise ValidationError(f"lambda and mu must be finite, got {lambda_}, {mu}")
    disc = mu * mu - 4.0 * lambda_
    if disc < 0:
        return EquilibriumRoots((), disc)
    # cancellation-free form of the quadratic formula
    q = -0.5 * (mu + math.copysign(math.sqrt(disc), mu))
    us = {q, lambda_ / q} if q != 0.0 else {0.0}
    keep = sorted(u for u in us if u > 0.0)
    dropped = tuple(sorted(u for u in us if u <= 0.0))
    return EquilibriumRoots(tuple(math.log(u) for u in keep), disc, dropped)


def quadratic_residual(lambda_: float, mu: float, y: float) -> float:
    u = math.exp(y)
    return abs(u * u + mu * u + lambda_)


def check_negative_rate_identity(lambda_: float, mu: float, roots: EquilibriumRoots) -> list:
    """|exp(y) + r| at each root, with r = lambda exp(-y) + mu."""
    return [abs(math.exp(y) + (lambda_ * math.exp(-y) + mu)) for y in roots.roots_y]


def vacuum_constraint_residual(params: MGParams, y: float) -> float:
    """lambda + e^y (mu + zeta^2/2 e^{2y(alpha-1)} + rho zeta e^{y(alpha-1/2)}), as stated."""
    p = params
    ey = math.exp(y)
    return float(p.lambda_ + ey * (p.mu + 0.5 * p.zeta_sq * math.exp(2.0 * y * (p.alpha - 1.0))
                                   + p.rho_zeta * math.exp(y * (p.alpha - 0.5))))


class MonteCarloEstimate(NamedTuple):
    estimate: float
    std_error: float
    seed: Optional[int] = None
    n_paths: int = 0
    samples: Optional[np.ndarray] = None


def discounted_expectation_check(params: BSParams, s0: float, t: float, n_paths: int = 100_000,
                                 seed: int = 0, keep_samples: bool = False) -> MonteCarloEstimate:
    """Mean and standard error of exp(-r t) S(t) under risk-neutral GBM.

    Terminal values are drawn exactly from the log-normal law, so the only
    error is statistical.  Deterministic cases (``t = 0`` or ``sigma = 0``)
    return ``s0`` with zero error.
    """
    if not s0 > 0:
        raise ValidationError(f"s0 must be positive, got {s0}")
    if t < 0:
        raise ValidationError(f"horizon must be non-negative, got {t}")
    if n_paths < 10_000:
        raise ValidationError(f"need at least 10^4 paths, got {n_paths}")
    if t == 0 or params.sigma == 0:
        samples = np.full(n_paths, float(s0)) if keep_samples else None
        return MonteCarloEstimate(float(s0), 0.0, seed, n_paths, samples)
    rng = np.random.default_rng(seed)
    z = rng.standard_normal(n_paths)
    sig = params.sigma
    terminal = s0 * np.exp((params.r - 0.5 * sig * sig) * t + sig * math.sqrt(t) * z)
    disc = math.exp(-params.r * t) * terminal
    est = float(np.mean(disc))
    se = float(np.std(disc, ddof=1) / math.sqrt(n_paths))
    return MonteCarloEstimate(est, se, seed, n_paths, disc if keep_samples else None)


class NoisePair(NamedTuple):
    r1: np.ndarray
    r2: np.ndarray
    sample_corr: float


def _corr(a: np.ndarray, b: np.ndarray) -> float:
    da, db = a - a.mean(), b - b.mean()
    # sqrt of the product keeps corr(a, +-a) exactly +-1
    return float(np.dot(da, db) / math.sqrt(float(np.dot(da, da)) * float(np.dot(db, db))))


def correlated_noise_pair(rho: float, n: int, seed: int = 0) -> NoisePair:
    """n standard normal pairs with correlation rho; R2 = +-R1 exactly at rho = +-1."""
    if not -1.0 <= rho <= 1.0:
        raise ValidationError(f"rho must lie in [-1, 1], got {rho}")
    if n < 2:
        raise ValidationError("need at least two samples")
    rng = np.random.default_rng(seed)
    r1 = rng.standard_normal(n)
    # at |rho| = 1 the second term is an exact (signed) zero
    r2 = rho * r1 + math.sqrt(1.0 - rho * rho) * rng.standard_normal(n)
    return NoisePair(r1, r2, _corr(r1, r2))
