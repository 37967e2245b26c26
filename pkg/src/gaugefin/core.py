"""Parameter containers, the volatility-coefficient map and shared errors.

Parameter fields may be plain floats or numpy arrays.  Arrays appear when the
volatility-coefficient map is applied pointwise along the log-volatility axis
of a 2D grid; they must then broadcast against the grid values.
"""

from __future__ import annotations

import configparser
import math
from dataclasses import dataclass, field, replace
from pathlib import Path
from typing import Union

import numpy as np

Scalar = Union[float, np.ndarray]


class GaugeFinError(Exception):
    """Base class for all library errors."""


class ValidationError(GaugeFinError, ValueError):
    pass


class DimensionError(GaugeFinError, ValueError):
    pass


class SingularParameterError(GaugeFinError, ZeroDivisionError):
    pass


class StabilityError(GaugeFinError, ArithmeticError):
    pass


def _all_finite(value) -> bool:
    return bool(np.all(np.isfinite(value)))


@dataclass(frozen=True)
class BSParams:
    """Black-Scholes volatility ``sigma`` and continuously compounded rate ``r``.

    ``r`` may be negative.  ``sigma = 0`` is admitted as the deterministic
    limit; negative or non-finite values are rejected.
    """

    sigma: float
    r: float

    def __post_init__(self):
        if not (_all_finite(self.sigma) and _all_finite(self.r)):
            raise ValidationError(f"BS parameters must be finite (sigma={self.sigma}, r={self.r})")
        if self.sigma < 0:
            raise ValidationError(f"sigma must be >= 0, got {self.sigma}")

    @property
    def sigma_sq(self) -> float:
        return self.sigma * self.sigma


@dataclass(frozen=True)
class MGParams:
    """Merton-Garman parameters.

    Construction only checks finiteness so that degenerate configurations
    (for instance ``zeta = 0``) can be evaluated; use :func:`validate_mg`
    before relying on the model bounds.
    """

    zeta: Scalar
    rho: Scalar
    alpha: float
    lambda_: float
    mu: float
    r: Scalar

    def __post_init__(self):
        for name in ("zeta", "rho", "alpha", "lambda_", "mu", "r"):
            if not _all_finite(getattr(self, name)):
                raise ValidationError(f"MG parameter {name} must be finite")

    @property
    def rho_zeta(self) -> Scalar:
        return self.rho * self.zeta

    @property
    def zeta_sq(self) -> Scalar:
        return self.zeta * self.zeta


@dataclass(frozen=True)
class GammaCovariant:
    """Coupling of the y-momentum inside the covariant derivative.

    ``gamma = 1`` is the symmetric choice d/dx -> d/dx + d/dy.
    """

    gamma: float = 1.0

    def __post_init__(self):
        if not math.isfinite(self.gamma):
            raise ValidationError(f"gamma must be finite, got {self.gamma}")


def validate_mg(params: MGParams) -> MGParams:
    """Return ``params`` unchanged if ``-1 <= rho <= 1`` and ``zeta > 0``."""
    rho = np.asarray(params.rho)
    if np.any(rho < -1.0) or np.any(rho > 1.0):
        raise ValidationError(f"rho must satisfy -1 <= rho <= 1, got {params.rho}")
    if np.any(np.asarray(params.zeta) <= 0.0):
        raise ValidationError(f"zeta must be > 0, got {params.zeta}")
    return params


def validate_bs(params: BSParams) -> BSParams:
    if params.sigma <= 0:
        raise ValidationError(f"sigma must be > 0, got {params.sigma}")
    return params


def volatility_coefficient_map(alpha, y, lambda_, mu):
    """Map ``(alpha, y, lambda, mu)`` to ``(zeta**2, rho*zeta, r)``.

    These are the values that make the covariant-derivative Hamiltonian
    coincide with the Merton-Garman Hamiltonian::

        zeta**2  = exp(-2 y (alpha - 3/2))
        rho*zeta = exp(-y (alpha - 3/2))
        r        = lambda exp(-y) + mu

    ``y`` may be an array.
    """
    k = alpha - 1.5
    zeta_sq = np.exp(-2.0 * y * k)
    rho_zeta = np.exp(-y * k)
    r = lambda_ * np.exp(-y) + mu
    if np.ndim(y) == 0:
        return float(zeta_sq), float(rho_zeta), float(r)
    return zeta_sq, rho_zeta, r


def rho_from_map(zeta_sq, rho_zeta):
    """Correlation implied by a ``(zeta**2, rho*zeta)`` pair."""
    return rho_zeta / np.sqrt(zeta_sq)


def mapped_mg_params(alpha, y, lambda_, mu, rho_sign: int = 1) -> MGParams:
    """Pointwise mode: MG parameters obtained by applying the map at each ``y``.

    ``rho_sign = -1`` selects the anti-correlated branch (the sign of
    ``rho*zeta`` is flipped).  For array ``y`` the result has array
    ``zeta``, ``rho`` and ``r`` shaped like ``y``.
    """
    if rho_sign not in (1, -1):
        raise ValidationError(f"rho_sign must be +1 or -1, got {rho_sign}")
    zeta_sq, rho_zeta, r = volatility_coefficient_map(alpha, y, lambda_, mu)
    zeta = np.sqrt(zeta_sq)
    rho = rho_sign * rho_from_map(zeta_sq, rho_zeta)
    if np.ndim(y) == 0:
        zeta, rho = float(zeta), float(rho)
    return MGParams(zeta=zeta, rho=rho, alpha=alpha, lambda_=lambda_, mu=mu, r=r)


def constant_mode_params(lambda_, mu, y_ref: float = 0.0, rho_sign: int = 1) -> MGParams:
    """Constant-parameter mode: ``alpha = 3/2`` so ``zeta = 1`` and ``rho = +-1``.

    The rate is evaluated once at the reference log-volatility ``y_ref``.
    """
    return mapped_mg_params(1.5, float(y_ref), lambda_, mu, rho_sign=rho_sign)


@dataclass(frozen=True)
class ParameterSet:
    """Everything a flat ``key=value`` configuration file can carry."""

    sigma: float = 0.2
    r: float = 0.05
    zeta: float = 1.0
    rho: float = 1.0
    alpha: float = 1.5
    lambda_: float = 2.0
    mu: float = -3.0
    gamma: float = 1.0
    extra: dict = field(default_factory=dict)

    def bs(self) -> BSParams:
        return BSParams(sigma=self.sigma, r=self.r)

    def mg(self) -> MGParams:
        return MGParams(zeta=self.zeta, rho=self.rho, alpha=self.alpha,
                        lambda_=self.lambda_, mu=self.mu, r=self.r)

    def gamma_covariant(self) -> GammaCovariant:
        return GammaCovariant(self.gamma)


PARAM_KEYS = {"sigma": "sigma", "r": "r", "zeta": "zeta", "rho": "rho",
               "alpha": "alpha", "lambda": "lambda_", "lambda_": "lambda_",
               "mu": "mu", "gamma": "gamma"}


def parse_parameters(text: str) -> ParameterSet:
    """Parse flat ``key=value`` lines; ``#`` and ``;`` start comments.

    Recognised model keys become typed fields, anything else lands in
    ``extra`` as a string for the caller to interpret.
    """
    cp = configparser.ConfigParser(inline_comment_prefixes=("#", ";"),
                                   interpolation=None)
    cp.optionxform = str
    try:
        cp.read_string("[params]\n" + text)
    except configparser.Error as exc:
        raise ValidationError(f"malformed parameter file: {exc}") from exc
    values: dict = {}
    extra: dict = {}
    for key, raw in cp["params"].items():
        if key in PARAM_KEYS:
            try:
                values[PARAM_KEYS[key]] = float(raw)
            except ValueError as exc:
                raise ValidationError(f"{key}: not a number: {raw!r}") from exc
        else:
            extra[key] = raw.strip()
    ps = replace(ParameterSet(), **values, extra=extra)
    if not all(math.isfinite(getattr(ps, k)) for k in set(PARAM_KEYS.values())):
        raise ValidationError("parameters must be finite")
    return ps


def load_parameters(path) -> ParameterSet:
    path = Path(path)
    if not path.is_file():
        raise FileNotFoundError(f"parameter file not found: {path}")
    return parse_parameters(path.read_text())
