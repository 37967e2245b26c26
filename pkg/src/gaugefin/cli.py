"""Command-line front end.

Subcommands: martingale, gauge, higgs, price, constraints.  Each writes a
summary file (``<command>_summary.txt``) plus columnar data files into
``--out`` and exits 0 when every check passes, 1 when a check fails and 2 on
configuration or usage errors.
"""

from __future__ import annotations

import argparse
import logging
import math
import sys
from dataclasses import dataclass, field, replace
from pathlib import Path
from typing import Optional

import numpy as np

from . import gauge as gg
from . import higgs as hg
from . import martingale as mt
from . import pricing as pr
from .core import (PARAM_KEYS, GaugeFinError, GammaCovariant, MGParams, ParameterSet,
                   SingularParameterError, StabilityError, ValidationError,
                   constant_mode_params, load_parameters, mapped_mg_params,
                   volatility_coefficient_map)
from .operators import (BSHamiltonian, Field, GaugeHamiltonian, Grid1D, Grid2D,
                        interior_mask, interior_sup, load_field, save_field)

log = logging.getLogger("gaugefin")

TOLERANCE_PROFILES = {
    "default": {"algebraic": 1e-10, "discretization": 1e-3, "statistical": 3.0, "conjugation": 1e-8},
    "strict": {"algebraic": 1e-12, "discretization": 1e-4, "statistical": 3.0, "conjugation": 1e-10},
    "loose": {"algebraic": 1e-8, "discretization": 1e-2, "statistical": 4.0, "conjugation": 1e-6},
}
MAX_POINTS_X = 20001
MAX_POINTS_Y = 2001


class UsageError(GaugeFinError):
    pass


@dataclass
class RunConfig:
    params: ParameterSet
    seed: int
    out: Path
    fmt: str
    tolerances: dict
    settings: dict = field(default_factory=dict)

    def get(self, key, default=None):
        return self.settings.get(key, default)

    def number(self, key, default):
        raw = self.settings.get(key)
        if raw is None:
            return default
        try:
            return float(raw)
        except ValueError as exc:
            raise UsageError(f"{key}: not a number: {raw!r}") from exc

    def integer(self, key, default, limit=None):
        value = self.number(key, default)
        if value != int(value):
            raise UsageError(f"{key}: not an integer: {value}")
        if limit is not None and not 1 <= value <= limit:
            raise UsageError(f"{key}={int(value)} outside the allowed range 1..{limit}")
        return int(value)

    def flag(self, key, default=False):
        raw = self.settings.get(key)
        if raw is None:
            return default
        if isinstance(raw, bool):
            return raw
        return str(raw).strip().lower() in ("1", "true", "yes", "on")

    def x_grid(self, center=0.0, half=1.0, n=401) -> Grid1D:
        return Grid1D(self.number("x_min", center - half), self.number("x_max", center + half),
                      self.integer("nx", n, MAX_POINTS_X))

    def y_grid(self, center=0.0, half=1.0, n=41) -> Grid1D:
        return Grid1D(self.number("y_min", center - half), self.number("y_max", center + half),
                      self.integer("ny", n, MAX_POINTS_Y))


class Report:
    """Ordered checks; each carries the claim it verifies and a status."""

    def __init__(self, command: str, cfg: RunConfig):
        self.command = command
        self.cfg = cfg
        self.rows = []

    def add(self, name, value, claim, tol=None, passed=None, compare="le"):
        if passed is None and tol is not None:
            passed = (value <= tol) if compare == "le" else (value > tol)
        status = "info" if passed is None else ("pass" if passed else "fail")
        self.rows.append((name, value, tol, status, claim))
        return passed

    def note(self, name, text, claim="note"):
        self.rows.append((name, text, None, "info", claim))

    @property
    def ok(self) -> bool:
        return all(r[3] != "fail" for r in self.rows)

    @staticmethod
    def _fmt(v):
        if isinstance(v, float):
            return repr(v)
        if isinstance(v, (list, tuple)):
            return "[" + ",".join(Report._fmt(x) for x in v) + "]"
        return str(v)

    def render(self) -> str:
        head = [("command", self.command), ("seed", self.cfg.seed),
                ("tolerance_profile", self.cfg.settings.get("_profile", "default"))]
        if self.cfg.fmt == "structured":
            lines = [f"{k}={self._fmt(v)}" for k, v in head]
            for name, value, tol, status, claim in self.rows:
                lines.append(f"{name}={self._fmt(value)}")
                if tol is not None:
                    lines.append(f"{name}.tolerance={self._fmt(tol)}")
                lines.append(f"{name}.status={status}")
                lines.append(f"{name}.claim={claim}")
            lines.append(f"overall={'pass' if self.ok else 'fail'}")
            return "\n".join(lines) + "\n"
        table = [("check", "value", "tolerance", "status", "claim")]
        table += [(n, self._fmt(v), "-" if t is None else self._fmt(t), s, c)
                  for n, v, t, s, c in self.rows]
        widths = [max(len(row[i]) for row in table) for i in range(5)]
        lines = [f"# {k}={self._fmt(v)}" for k, v in head]
        lines += ["  ".join(cell.ljust(w) for cell, w in zip(row, widths)).rstrip() for row in table]
        lines.append(f"# overall={'pass' if self.ok else 'fail'}")
        return "\n".join(lines) + "\n"

    def write(self) -> Path:
        path = self.cfg.out / f"{self.command}_summary.txt"
        path.write_text(self.render())
        return path


# ---------------------------------------------------------------- commands

def cmd_martingale(cfg: RunConfig) -> Report:
    rep = Report("martingale", cfg)
    tol = cfg.tolerances
    p = cfg.params
    bs = p.bs()
    grid = cfg.x_grid()
    state_expr = cfg.get("state")
    state = Field.from_expression(grid, state_expr) if state_expr else None
    label = state_expr or "exp(x)"
    rep.note("bs.state", label)
    a = mt.check_bs_martingale(bs, grid, "analytic", state)
    rep.add("bs.analytic.relative_residual", a.constraint_residuals[0][1],
            "bs_martingale_annihilation", tol["algebraic"])
    f = mt.check_bs_martingale(bs, grid, "fd", state)
    rep.add("bs.fd.relative_residual", f.constraint_residuals[0][1],
            "bs_martingale_annihilation", tol["discretization"])
    save_field(f.residual_field, cfg.out / "bs_residual.txt",
               {"state": label, "sigma": bs.sigma, "r": bs.r, "derivatives": "fd"})

    rep.add("shift_generator.min_abs", mt.price_shift_generator_check(grid),
            "broken_price_shift_symmetry", 0.0, compare="gt")

    mg = mt.check_mg_martingale(p.lambda_, p.mu, p.alpha, grid, "analytic")
    for note in mg.notes:
        rep.note("mg.note", note)
    for name, value in mg.constraint_residuals:
        if name.endswith("_y"):
            rep.add(f"mg.{name}", value, "mg_equilibrium_root")
        else:
            rep.add(f"mg.analytic.{name}", value, "mg_martingale_condition", tol["algebraic"])
    mgf = mt.check_mg_martingale(p.lambda_, p.mu, p.alpha, grid, "fd")
    for name, value in mgf.constraint_residuals:
        if not name.endswith("_y"):
            rep.add(f"mg.fd.{name}", value, "mg_martingale_condition", tol["discretization"])
    save_field(mgf.residual_field, cfg.out / "mg_residual.txt",
               {"state": "exp(x+y)", "lambda": p.lambda_, "mu": p.mu, "alpha": p.alpha})

    s0, t = cfg.number("spot", 100.0), cfg.number("tau", 1.0)
    n = cfg.integer("n_paths", 100_000, 10**8)
    mc = mt.discounted_expectation_check(bs, s0, t, n, cfg.seed,
                                         keep_samples=cfg.flag("paths_file"))
    rep.add("mc.estimate", mc.estimate, "discounted_price_martingale")
    rep.add("mc.std_error", mc.std_error, "discounted_price_martingale")
    z = abs(mc.estimate - s0) / mc.std_error if mc.std_error > 0 else 0.0
    rep.add("mc.z_score", z, "discounted_price_martingale", tol["statistical"])
    if mc.samples is not None:
        np.savetxt(cfg.out / "mc_paths.txt", mc.samples, fmt="%.17g",
                   header=f"discounted terminal values seed={cfg.seed} n={n}")
    rho = cfg.number("noise_rho", p.rho)
    pair = mt.correlated_noise_pair(rho, n, cfg.seed)
    rep.add("noise.sample_corr", pair.sample_corr, "white_noise_correlation")
    if abs(rho) == 1.0:
        rep.add("noise.max_abs_r2_minus_rho_r1", float(np.max(np.abs(pair.r2 - rho * pair.r1))),
                "white_noise_correlation", 0.0)
    else:
        rep.add("noise.corr_error", abs(pair.sample_corr - rho), "white_noise_correlation",
                tol["statistical"] / math.sqrt(n))
    return rep


def _theta_family(cfg: RunConfig, omega: float):
    """(1D transformation or None, 2D transformation or None) for the theta family."""
    family = cfg.get("theta", "x")
    x1 = cfg.x_grid(n=201)
    g2 = Grid2D(cfg.x_grid(n=81), cfg.y_grid(n=81))
    if family == "constant":
        c = cfg.number("theta_value", 0.3)
        return gg.GaugeSpec.constant(x1, omega, c), gg.GaugeSpec.constant(g2, omega, c)
    if family == "x":
        return gg.GaugeSpec.linear(x1, omega), gg.GaugeSpec.linear(g2, omega, 1.0, 0.0)
    if family == "x+y":
        return None, gg.GaugeSpec.linear(g2, omega, 1.0, 1.0)
    if family.startswith("file:"):
        theta = load_field(family[5:])
        gs = gg.GaugeSpec(omega, theta)
        return (gs, None) if theta.grid.ndim == 1 else (None, gs)
    raise UsageError(f"unknown theta family {family!r} (constant, x, x+y, file:PATH)")


def cmd_gauge(cfg: RunConfig) -> Report:
    rep = Report("gauge", cfg)
    tol = cfg.tolerances
    p = cfg.params
    omega = cfg.number("omega", 0.1)
    if omega == -1.0:
        raise SingularParameterError("omega = -1 is a singular transformation strength")
    s1, s2 = _theta_family(cfg, omega)
    sigma, r = p.sigma, p.r
    rep.note("theta", cfg.get("theta", "x"))
    rep.add("omega", omega, "local_transformation")

    if s1 is not None:
        grid = s1.grid
        H = BSHamiltonian(p.bs())
        probes = [Field.exponential(grid), Field.plane_wave(grid, 2.0, phase=0.3),
                  Field.exponential(grid, -0.5)]
        rep.add("bs.commutator_norm", gg.commutator_norm(H, s1, probes),
                "bs_not_gauge_invariant")
        worst_conj, worst_disc = 0.0, 0.0
        for k, f in enumerate(probes):
            numeric = gg.conjugated_hamiltonian_action(H, s1, f) - H.apply(f)
            derived = gg.conjugation_terms(H, s1, f)
            quoted = gg.anomaly_terms(s1, sigma, r, f)
            worst_conj = max(worst_conj, interior_sup(numeric - derived))
            disc = quoted - numeric
            worst_disc = max(worst_disc, interior_sup(disc))
            save_field(disc, cfg.out / f"anomaly_discrepancy_probe{k}.txt",
                       {"quantity": "quoted_anomaly_terms - numeric_conjugation_terms",
                        "omega": omega, "sigma": sigma, "r": r})
        exact = bool(s1.theta.derivatives) and all(pf.derivatives for pf in probes)
        rep.add("anomaly.numeric_vs_derived", worst_conj, "conjugation_oracle",
                tol["conjugation"] if exact else tol["discretization"])
        rep.add("anomaly.quoted_vs_numeric", worst_disc, "anomaly_terms_discrepancy")

    if s2 is not None:
        grid = s2.grid
        hermitian = cfg.flag("hermitian")
        sigma_sq = 2.0 * r if hermitian else sigma * sigma
        if sigma_sq == 0.0:
            raise SingularParameterError("sigma^2 = 0 makes the third gauge condition singular")
        rep.add("sigma_sq", sigma_sq, "hermiticity_point" if hermitian else "gauge_conditions")
        probe = Field.exponential(grid, 1.0, 1.0)
        res = gg.gauge_condition_residuals(s2, sigma_sq, r, probe)
        for name, fld in zip(("res1", "res2", "res3"), res):
            rep.add(f"conditions.{name}.sup", interior_sup(fld), "gauge_conditions")
            save_field(fld, cfg.out / f"gauge_{name}.txt",
                       {"omega": omega, "sigma_sq": sigma_sq, "r": r})
        if hermitian:
            red = res.res3 + 4.0 * s2.theta_dxdy
            rep.add("conditions.res3_plus_4theta_xy", interior_sup(red), "hermiticity_point",
                    tol["algebraic"] if s2.theta.derivatives else tol["discretization"])
        H2 = GaugeHamiltonian(sigma_sq, r, GammaCovariant(p.gamma))
        probes2 = [Field.exponential(grid, 1.0, 1.0), Field.plane_wave(grid, 1.5, -0.7, 0.2)]
        rep.add("gauge_hamiltonian.commutator_norm", gg.commutator_norm(H2, s2, probes2),
                "covariant_hamiltonian_under_local_transformation")
    return rep


def _range(cfg: RunConfig, name: str, default):
    listed = cfg.get(f"{name}_values")
    if listed is not None:
        vals = [float(v) for v in str(listed).replace(",", " ").split()]
    elif cfg.get(f"{name}_min") is not None:
        n = int(cfg.number(f"{name}_n", 11))
        if n < 1:
            raise UsageError(f"{name}_n must be >= 1")
        vals = list(np.linspace(cfg.number(f"{name}_min", 0.0), cfg.number(f"{name}_max", 0.0), n))
    else:
        vals = list(default)
    if not vals:
        raise UsageError(f"empty sweep range for {name}")
    return vals


def cmd_higgs(cfg: RunConfig) -> Report:
    rep = Report("higgs", cfg)
    tol = cfg.tolerances["algebraic"]
    rows = hg.higgs_sweep(_range(cfg, "r", [cfg.params.r]),
                          _range(cfg, "ey", [cfg.params.sigma ** 2]))
    closed, linear, massless_bad, n_singular = 0.0, 0.0, 0, 0
    lines = ["# r e_y phi_vac mass_coefficient massless singular"]
    for row in rows:
        lines.append(" ".join([repr(row.r), repr(row.e_y), repr(row.phi_vac),
                               repr(row.mass_coefficient), str(int(row.massless)),
                               str(int(row.singular))]))
        if row.singular:
            n_singular += 1
            continue
        ref = -(2.0 * row.r - row.e_y) ** 2 / (4.0 * row.r)
        closed = max(closed, abs(row.mass_coefficient - ref) / max(1.0, abs(ref)))
        lin = hg.expand_potential_around_vacuum(row.e_y, row.r)["phibar*phi_y^2"]
        linear = max(linear, abs(lin) / max(1.0, abs(row.r), abs(row.e_y)))
        if row.massless and row.mass_coefficient != 0.0:
            massless_bad += 1
    (cfg.out / "higgs_sweep.txt").write_text("\n".join(lines) + "\n")
    rep.add("rows", len(rows), "vacuum_sweep")
    rep.add("rows_singular_r0", n_singular, "vacuum_sweep")
    rep.add("rows_massless", sum(r.massless for r in rows), "massless_at_hermiticity_point")
    if len(rows) == 1 and not rows[0].singular:
        rep.add("phi_vac", rows[0].phi_vac, "price_only_vacuum")
        rep.add("mass_coefficient", rows[0].mass_coefficient, "volatility_mass_term")
    rep.add("mass_vs_closed_form", closed, "volatility_mass_term", tol)
    rep.add("linear_fluctuation_coefficient", linear, "vacuum_optimality", tol)
    rep.add("massless_rows_with_nonzero_mass", massless_bad, "massless_at_hermiticity_point", 0)
    return rep


def cmd_price(cfg: RunConfig) -> Report:
    rep = Report("price", cfg)
    tol = cfg.tolerances["discretization"]
    p = cfg.params
    model = cfg.get("model", "bs")
    kind = cfg.get("payoff", "call")
    strike = cfg.number("strike", 100.0)
    spot = cfg.number("spot", strike)
    tau = cfg.number("tau", 1.0)
    payoff = pr.Payoff(kind, strike)
    ec = pr.EvolutionConfig(tau, cfg.integer("n_steps", 256, 10**6),
                            cfg.get("scheme", "crank-nicolson"), "dirichlet")
    x0 = math.log(strike)
    grid = cfg.x_grid(x0, 1.5, 512)
    x_spot = math.log(spot)
    meta = {"model": model, "payoff": kind, "strike": strike, "tau": tau, "scheme": ec.scheme,
            "n_steps": ec.n_steps, "x_min": grid.x_min, "x_max": grid.x_max, "nx": grid.n}
    rep.note("model", model)

    if model == "bs":
        price = pr.price_european_bs(p.bs(), payoff, ec, grid)
        s = np.exp(grid.points)
        if tau == 0:
            ref = payoff(s)
        else:
            ref = pr.closed_form_bs(s, strike, p.r, p.sigma, tau, kind)
        m = interior_mask(price) & (ref >= 0.01 * strike)
        rel = np.abs(price.values - ref)[m] / ref[m]
        table = np.column_stack([grid.points, s, price.values, ref])
        np.savetxt(cfg.out / "price_surface.txt", table, fmt="%.17g",
                   header="\n".join(f"{k}={v}" for k, v in meta.items()) + "\nx S price reference")
        # the payoff kink defeats spline interpolation, so tau = 0 reads the payoff itself
        at = float(payoff(spot)) if tau == 0 else pr.value_at(price, x_spot)
        rep.add("price_at_spot", at, "fair_option_price")
        if tau > 0:
            cf = pr.closed_form_bs(spot, strike, p.r, p.sigma, tau, kind)
            rep.add("closed_form_at_spot", cf, "fair_option_price")
            rep.add("relative_error_at_spot", abs(at - cf) / cf, "fair_option_price", tol)
        rep.add("max_relative_error", float(rel.max()) if rel.size else 0.0,
                "fair_option_price", tol)
    elif model == "mg":
        y0 = math.log(p.sigma ** 2)
        g2 = Grid2D(grid, cfg.y_grid(y0, 0.5, 21))
        price = pr.price_european_mg(p.mg(), payoff, ec, g2)
        save_field(price, cfg.out / "price_surface.txt", meta)
        row = int(np.argmin(np.abs(g2.y_axis.points - y0)))
        rep.add("price_at_spot_y0", pr.value_at(price, x_spot, row), "fair_option_price")
        if cfg.flag("degenerate_check"):
            # vanishing vol-of-vol and drift freeze y, leaving BS with sigma^2 = e^y0
            yg = Grid1D.centered(y0, 0.5, 21)
            deg = MGParams(zeta=1e-8, rho=0.0, alpha=1.0, lambda_=0.0, mu=0.0, r=p.r)
            mg_price = pr.price_european_mg(deg, payoff, ec, Grid2D(grid, yg))
            bs_price = pr.price_european_bs(type(p.bs())(math.exp(0.5 * y0), p.r), payoff, ec, grid)
            a, b = pr.value_at(mg_price, x_spot, 10), pr.value_at(bs_price, x_spot)
            rep.add("degenerate.mg_price", a, "degenerate_mg_limit")
            rep.add("degenerate.bs_price", b, "degenerate_mg_limit")
            rep.add("degenerate.relative_difference", abs(a - b) / max(abs(b), 1e-300),
                    "degenerate_mg_limit", tol)
    else:
        raise UsageError(f"unknown model {model!r} (bs or mg)")
    return rep


def cmd_constraints(cfg: RunConfig) -> Report:
    rep = Report("constraints", cfg)
    tol = cfg.tolerances["algebraic"]
    p = cfg.params
    lam, mu, alpha = p.lambda_, p.mu, p.alpha
    ys = _range(cfg, "y", [0.0])
    worst_rho = 0.0
    lines = ["# y zeta_sq rho_zeta r abs_rho"]
    for y in ys:
        zsq, rz, r = volatility_coefficient_map(alpha, y, lam, mu)
        rho = rz / math.sqrt(zsq)
        worst_rho = max(worst_rho, abs(abs(rho) - 1.0))
        lines.append(" ".join(repr(float(v)) for v in (y, zsq, rz, r, abs(rho))))
    (cfg.out / "coefficient_map.txt").write_text("\n".join(lines) + "\n")
    zsq, rz, r = volatility_coefficient_map(alpha, ys[0], lam, mu)
    rep.add("map.zeta_sq", zsq, "volatility_coefficient_map")
    rep.add("map.rho_zeta", rz, "volatility_coefficient_map")
    rep.add("map.r", r, "volatility_coefficient_map")
    rep.add("map.max_abs_rho_minus_1", worst_rho, "rho_extreme_values", tol)
    if alpha == 1.5:
        cm = constant_mode_params(lam, mu, ys[0])
        rep.note("map.mode", f"constant mode: zeta={cm.zeta!r}, |rho|={abs(cm.rho)!r}")

    roots = mt.solve_equilibrium_volatility(lam, mu)
    rep.add("roots.discriminant", roots.discriminant, "equilibrium_volatility")
    rep.add("roots.y", list(roots.roots_y), "equilibrium_volatility")
    for note in roots.notes:
        rep.note("roots.note", note)
    ident = mt.check_negative_rate_identity(lam, mu, roots)
    for k, (y, res) in enumerate(zip(roots.roots_y, ident)):
        rep.add(f"root_{k}.quadratic_residual", mt.quadratic_residual(lam, mu, y),
                "equilibrium_volatility", tol)
        rep.add(f"root_{k}.exp_y_plus_r", res, "negative_rate_equilibrium", tol)
        mapped = mapped_mg_params(alpha, y, lam, mu)
        rep.add(f"root_{k}.vacuum_constraint_stated", mt.vacuum_constraint_residual(mapped, y),
                "vacuum_constraint_stated_form")
        ey = math.exp(y)
        rep.add(f"root_{k}.vacuum_constraint_substituted", lam + mu * ey + 1.5 * ey * ey,
                "vacuum_constraint_stated_form")
    return rep


COMMANDS = {"martingale": cmd_martingale, "gauge": cmd_gauge, "higgs": cmd_higgs,
            "price": cmd_price, "constraints": cmd_constraints}


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="gaugefin",
                                     description="Gauge and martingale checks for BS/MG Hamiltonians.")
    parser.add_argument("-v", "--verbose", action="store_true")
    sub = parser.add_subparsers(dest="command", required=True)
    for name in COMMANDS:
        sp = sub.add_parser(name)
        sp.add_argument("--config", type=Path, help="flat key=value parameter/settings file")
        sp.add_argument("--seed", type=int, default=None)
        sp.add_argument("--out", type=Path, default=Path("out"))
        sp.add_argument("--format", choices=("table", "structured"), default="structured")
        sp.add_argument("--tolerance-profile", choices=sorted(TOLERANCE_PROFILES), default="default")
        sp.add_argument("--set", action="append", default=[], metavar="KEY=VALUE",
                        help="override a config entry (repeatable)")
        if name == "martingale":
            sp.add_argument("--state", help="state expression in x, e.g. 'exp(2*x)'")
        if name == "gauge":
            sp.add_argument("--theta", help="constant | x | x+y | file:PATH")
            sp.add_argument("--omega", type=float)
            sp.add_argument("--hermitian", action="store_true", help="set sigma^2 = 2r")
        if name == "price":
            sp.add_argument("--model", choices=("bs", "mg"))
            sp.add_argument("--tau", type=float)
            sp.add_argument("--degenerate-check", action="store_true")
    return parser


def make_config(args) -> RunConfig:
    params = load_parameters(args.config) if args.config is not None else ParameterSet()
    settings = dict(params.extra)
    for item in args.set:
        if "=" not in item:
            raise UsageError(f"--set expects KEY=VALUE, got {item!r}")
        k, v = item.split("=", 1)
        settings[k.strip()] = v.strip()
    for key in ("state", "theta", "omega", "model", "tau"):
        if getattr(args, key, None) is not None:
            settings[key] = str(getattr(args, key))
    if getattr(args, "hermitian", False):
        settings["hermitian"] = True
    if getattr(args, "degenerate_check", False):
        settings["degenerate_check"] = True
    overrides = {}
    for key in list(settings):
        if key in PARAM_KEYS:
            raw = settings.pop(key)
            try:
                overrides[PARAM_KEYS[key]] = float(raw)
            except ValueError as exc:
                raise UsageError(f"{key}: not a number: {raw!r}") from exc
    params = replace(params, **overrides)
    tolerances = dict(TOLERANCE_PROFILES[args.tolerance_profile])
    for key in list(tolerances):
        if f"tol_{key}" in settings:
            tolerances[key] = float(settings.pop(f"tol_{key}"))
    settings["_profile"] = args.tolerance_profile
    seed = args.seed if args.seed is not None else int(float(settings.get("seed", 0)))
    return RunConfig(params, seed, args.out, args.format, tolerances, settings)


def main(argv: Optional[list] = None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING,
                        format="%(levelname)s %(message)s")
    try:
        cfg = make_config(args)
        cfg.out.mkdir(parents=True, exist_ok=True)
        report = COMMANDS[args.command](cfg)
    except StabilityError as exc:
        print(f"gaugefin {args.command}: stability failure: {exc}", file=sys.stderr)
        return 1
    except (FileNotFoundError, UsageError, ValidationError, SingularParameterError) as exc:
        print(f"gaugefin {args.command}: {exc}", file=sys.stderr)
        return 2
    path = report.write()
    log.info("wrote %s", path)
    if not report.ok:
        failed = [r[0] for r in report.rows if r[3] == "fail"]
        print(f"gaugefin {args.command}: failed checks: {', '.join(failed)}", file=sys.stderr)
        return 1
    return 0


if __name__ == "__main__":
    sys.exit(main())
