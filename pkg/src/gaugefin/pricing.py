"""Semigroup evolution psi(tau) = exp(-tau H) psi(0) and European option prices.

1D problems use a theta-scheme (Crank-Nicolson with a Rannacher start, or
implicit Euler).  2D problems use operator splitting: the mixed x-y term is
explicit and each direction is solved implicitly (Modified Craig-Sneyd with
theta = 1/3 for second order, Douglas with theta = 1 for the implicit-Euler
variant and for the Rannacher start-up half-steps).
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Callable, Optional

import numpy as np
import scipy.sparse as sp
from scipy.interpolate import CubicSpline
from scipy.sparse.linalg import splu
from scipy.special import ndtr

from .core import BSParams, MGParams, StabilityError, ValidationError
from .operators import (BSHamiltonian, Field, Grid1D, Grid2D, Hamiltonian,
                        MGHamiltonian, along_y)

SCHEMES = ("crank-nicolson", "implicit-euler")
BOUNDARIES = ("one-sided", "dirichlet")
MCS_THETA = 1.0 / 3.0


@dataclass(frozen=True)
class EvolutionConfig:
    tau: float
    n_steps: int = 256
    scheme: str = "crank-nicolson"
    boundary: str = "one-sided"
    rannacher: bool = True
    growth_limit: float = 10.0

    def __post_init__(self):
        if not (math.isfinite(self.tau) and self.tau >= 0):
            raise ValidationError(f"tau must be >= 0, got {self.tau}")
        if int(self.n_steps) != self.n_steps or self.n_steps < 1:
            raise ValidationError(f"n_steps must be a positive integer, got {self.n_steps}")
        if self.scheme not in SCHEMES:
            raise ValidationError(f"scheme must be one of {SCHEMES}, got {self.scheme!r}")
        if self.boundary not in BOUNDARIES:
            raise ValidationError(f"boundary must be one of {BOUNDARIES}, got {self.boundary!r}")


@dataclass(frozen=True)
class Payoff:
    kind: str
    strike: float = 1.0
    func: Optional[Callable] = None

    def __post_init__(self):
        if self.kind not in ("call", "put", "custom"):
            raise ValidationError(f"payoff kind must be call, put or custom, got {self.kind!r}")
        if self.kind != "custom" and not self.strike > 0:
            raise ValidationError(f"strike must be positive, got {self.strike}")
        if self.kind == "custom" and self.func is None:
            raise ValidationError("a custom payoff needs a function of S")

    def __call__(self, s):
        s = np.asarray(s, dtype=float)
        if self.kind == "call":
            return np.maximum(s - self.strike, 0.0)
        if self.kind == "put":
            return np.maximum(self.strike - s, 0.0)
        return np.asarray(self.func(s), dtype=float)

    def asymptotic(self, s, r, tau: float):
        """Far-field value: the payoff against the discounted strike."""
        s = np.asarray(s, dtype=float)
        if self.kind == "custom":
            return self(s) * np.exp(-r * tau)
        k = self.strike * np.exp(-r * tau)
        if self.kind == "call":
            return np.maximum(s - k, 0.0)
        return np.maximum(k - s, 0.0)


def _x_edge_mask(grid) -> np.ndarray:
    m = np.zeros(grid.shape, bool)
    m[0, ...] = True
    m[-1, ...] = True
    return m.ravel()


def _dirichlet(A, bmask):
    """Replace the rows of ``A`` flagged in ``bmask`` with identity rows."""
    if bmask is None:
        return A.tocsc()
    keep = sp.diags((~bmask).astype(float))
    return (keep @ A + sp.diags(bmask.astype(float))).tocsc()


class _Stepper:
    def __init__(self, cfg: EvolutionConfig, boundary_fn, bmask, shape):
        self.cfg = cfg
        self.boundary_fn = boundary_fn
        self.bmask = bmask
        self.shape = shape

    def pin(self, u, tau):
        if self.bmask is not None:
            u[self.bmask] = np.asarray(self.boundary_fn(tau), dtype=float).reshape(-1)[self.bmask]
        return u

    def guard(self, before, after, step):
        if not np.all(np.isfinite(after)):
            raise StabilityError(f"non-finite values after step {step}")
        b, a = np.max(np.abs(before)), np.max(np.abs(after))
        if b > 0 and a > self.cfg.growth_limit * b:
            raise StabilityError(f"sup-norm grew by {a / b:.3g}x during step {step}")


def _theta_solver(H_mat, dt, theta, bmask):
    n = H_mat.shape[0]
    I = sp.identity(n, format="csr")
    lhs = splu(_dirichlet((I + theta * dt * H_mat).tocsr(), bmask))
    rhs = (I - (1.0 - theta) * dt * H_mat).tocsr()
    return lhs, rhs


def _evolve_1d(H_mat, u, cfg, st: _Stepper):
    dt = cfg.tau / cfg.n_steps
    # (theta, step size) per sub-step
    if cfg.scheme == "crank-nicolson":
        start = [(1.0, 0.5 * dt)] * 2 if cfg.rannacher else [(0.5, dt)]
        plan = start + [(0.5, dt)] * (cfg.n_steps - 1)
    else:
        plan = [(1.0, dt)] * cfg.n_steps
    cache = {}
    tau = 0.0
    for step, (theta, h) in enumerate(plan, 1):
        if (theta, h) not in cache:
            cache[(theta, h)] = _theta_solver(H_mat, h, theta, st.bmask)
        lhs, rhs = cache[(theta, h)]
        tau = min(cfg.tau, tau + h)
        b = st.pin(rhs @ u, tau)
        new = lhs.solve(b)
        st.guard(u, new, step)
        u = new
    return u


def check_mixed_term(H: Hamiltonian, grid: Grid2D, tol: float = 1e-10) -> float:
    """Largest |correlation| implied by the second-order coefficients.

    The explicit treatment of the mixed term is unconditionally stable in
    the splitting schemes used here provided the diffusion matrix is
    positive semi-definite, i.e. |c_xy| <= 2 sqrt(c_xx c_yy) with
    non-positive c_xx, c_yy (H carries the diffusion with a minus sign).
    Raises :class:`StabilityError` otherwise.
    """
    c = H.coefficients(grid)
    cxx = np.broadcast_to(c.get((2, 0), 0.0), grid.shape)
    cyy = np.broadcast_to(c.get((0, 2), 0.0), grid.shape)
    cxy = np.broadcast_to(c.get((1, 1), 0.0), grid.shape)
    if np.any(cxx > tol) or np.any(cyy > tol):
        raise StabilityError("negative diffusion: the evolution is ill-posed")
    bound = 2.0 * np.sqrt(cxx * cyy)
    with np.errstate(divide="ignore", invalid="ignore"):
        corr = np.where(bound > 0, np.abs(cxy) / np.where(bound > 0, bound, 1.0),
                        np.where(np.abs(cxy) > 0, np.inf, 0.0))
    worst = float(np.max(corr))
    if worst > 1.0 + tol:
        raise StabilityError(f"mixed-term coefficient exceeds the diffusion bound "
                             f"(|correlation| = {worst:.6g} > 1)")
    return worst


def _evolve_2d(H: Hamiltonian, grid: Grid2D, u, cfg, st: _Stepper):
    check_mixed_term(H, grid)
    half = {(0, 0): 0.5}
    # F = -H split as F0 (mixed) + F1 (x) + F2 (y); the reaction term is shared
    A0 = -H.matrix(grid, keys={(1, 1)})
    A1 = -H.matrix(grid, keys={(2, 0), (1, 0), (0, 0)}, weights=half)
    A2 = -H.matrix(grid, keys={(0, 2), (0, 1), (0, 0)}, weights=half)
    A = (A0 + A1 + A2).tocsr()
    n = A.shape[0]
    I = sp.identity(n, format="csr")
    solvers = {}

    def solver(Aj, theta, h, j):
        key = (j, theta, h)
        if key not in solvers:
            solvers[key] = splu(_dirichlet((I - theta * h * Aj).tocsr(), st.bmask))
        return solvers[key]

    def directional(Y, u0, theta, h, tau):
        for j, Aj in ((1, A1), (2, A2)):
            rhs = st.pin(Y - theta * h * (Aj @ u0), tau)
            Y = solver(Aj, theta, h, j).solve(rhs)
        return Y

    def douglas(u0, theta, h, tau):
        return directional(u0 + h * (A @ u0), u0, theta, h, tau)

    def mcs(u0, h, tau):
        th = MCS_THETA
        Y0 = u0 + h * (A @ u0)
        Y2 = directional(Y0, u0, th, h, tau)
        d = Y2 - u0
        Yt = Y0 + th * h * (A0 @ d) + (0.5 - th) * h * (A @ d)
        return directional(Yt, u0, th, h, tau)

    dt = cfg.tau / cfg.n_steps
    if cfg.scheme == "crank-nicolson":
        start = [("douglas", 1.0, 0.5 * dt)] * 2 if cfg.rannacher else [("mcs", MCS_THETA, dt)]
        plan = start + [("mcs", MCS_THETA, dt)] * (cfg.n_steps - 1)
    else:
        plan = [("douglas", 1.0, dt)] * cfg.n_steps
    tau = 0.0
    for step, (kind, theta, h) in enumerate(plan, 1):
        tau = min(cfg.tau, tau + h)
        new = douglas(u, theta, h, tau) if kind == "douglas" else mcs(u, h, tau)
        new = st.pin(new, tau)
        st.guard(u, new, step)
        u = new
    return u


def evolve(H: Hamiltonian, terminal: Field, cfg: EvolutionConfig,
           boundary_fn: Optional[Callable] = None) -> Field:
    """Approximate exp(-tau H) applied to ``terminal``.

    With ``cfg.boundary == "dirichlet"``, ``boundary_fn(tau)`` must return
    values on the whole grid; only the two x-edges are used.
    """
    grid = terminal.grid
    if cfg.tau == 0:
        return Field(grid, terminal.values.copy())
    bmask = None
    if cfg.boundary == "dirichlet":
        if boundary_fn is None:
            raise ValidationError("Dirichlet boundaries need a boundary_fn(tau)")
        bmask = _x_edge_mask(grid)
    st = _Stepper(cfg, boundary_fn, bmask, grid.shape)
    u = terminal.values.ravel().copy()
    if grid.ndim == 1:
        u = _evolve_1d(H.matrix(grid, boundary="one-sided"), u, cfg, st)
    else:
        u = _evolve_2d(H, grid, u, cfg, st)
    return Field(grid, u.reshape(grid.shape))


def closed_form_bs(s, k, r: float, sigma: float, tau: float, kind: str = "call"):
    """Log-normal European call or put value."""
    s = np.asarray(s, dtype=float)
    k = np.asarray(k, dtype=float)
    if np.any(s <= 0) or np.any(k <= 0):
        raise ValidationError("spot and strike must be positive")
    if not sigma > 0 or not tau > 0:
        raise ValidationError("closed form needs sigma > 0 and tau > 0")
    if kind not in ("call", "put"):
        raise ValidationError(f"kind must be call or put, got {kind!r}")
    vol = sigma * math.sqrt(tau)
    d1 = (np.log(s / k) + (r + 0.5 * sigma * sigma) * tau) / vol
    d2 = d1 - vol
    disc_k = k * math.exp(-r * tau)
    if kind == "call":
        out = s * ndtr(d1) - disc_k * ndtr(d2)
    else:
        out = disc_k * ndtr(-d2) - s * ndtr(-d1)
    return float(out) if out.ndim == 0 else out


def price_european_bs(params: BSParams, payoff: Payoff, cfg: EvolutionConfig,
                      grid: Grid1D) -> Field:
    """Option value as a function of x = ln S, evolved from the payoff by H_BS."""
    s = np.exp(grid.points)
    terminal = Field(grid, payoff(s))
    return evolve(BSHamiltonian(params), terminal, cfg,
                  boundary_fn=lambda tau: payoff.asymptotic(s, params.r, tau))


def evolve_mg(params: MGParams, terminal: Field, cfg: EvolutionConfig,
              boundary_fn: Optional[Callable] = None) -> Field:
    return evolve(MGHamiltonian(params), terminal, cfg, boundary_fn)


def price_european_mg(params: MGParams, payoff: Payoff, cfg: EvolutionConfig,
                      grid: Grid2D) -> Field:
    """MG option value over (x, y) with payoff asymptotics on the x-edges."""
    X, _ = grid.mesh()
    s = np.exp(X)
    r = along_y(params.r, grid)
    terminal = Field(grid, payoff(s))
    return evolve_mg(params, terminal, cfg,
                     boundary_fn=lambda tau: payoff.asymptotic(s, r, tau))


def value_at(field: Field, x: float, y_index: Optional[int] = None) -> float:
    """Cubic-spline value of a 1D field (or of row ``y_index`` of a 2D one) at ``x``."""
    grid = field.grid
    if grid.ndim == 1:
        xs, vals = grid.points, field.values
    else:
        if y_index is None:
            raise ValidationError("pick a y row for a 2D field")
        xs, vals = grid.x_axis.points, field.values[:, y_index]
    if not xs[0] <= x <= xs[-1]:
        raise ValidationError(f"x={x} lies outside the grid")
    return float(CubicSpline(xs, vals)(x))
