import subprocess
import sys

import numpy as np
import pytest

from gaugefin.cli import main


def _summary(out, command):
    pairs = (line.split("=", 1) for line in (out / f"{command}_summary.txt").read_text().splitlines())
    return dict(pairs)


def run(tmp_path, *args):
    return main([args[0], "--out", str(tmp_path), *args[1:]])


def test_martingale_default_passes(tmp_path):
    assert run(tmp_path, "martingale") == 0
    s = _summary(tmp_path, "martingale")
    assert float(s["bs.analytic.relative_residual"]) <= 1e-10
    assert s["seed"] == "0" and s["overall"] == "pass"
    assert (tmp_path / "bs_residual.txt").exists()


def test_martingale_wrong_state_fails(tmp_path):
    assert run(tmp_path, "martingale", "--state", "exp(2*x)") == 1
    assert _summary(tmp_path, "martingale")["bs.analytic.relative_residual.status"] == "fail"


def test_missing_config_is_usage_error(tmp_path):
    assert run(tmp_path, "martingale", "--config", str(tmp_path / "none.cfg")) == 2


def test_config_file_and_overrides(tmp_path):
    cfg = tmp_path / "run.cfg"
    cfg.write_text("sigma = 0.3\nr = 0.01\nn_paths = 20000\ntol_statistical = 4\n")
    assert run(tmp_path, "martingale", "--config", str(cfg), "--set", "noise_rho=-1") == 0
    s = _summary(tmp_path, "martingale")
    assert s["mc.z_score.tolerance"] == "4.0"
    assert s["noise.sample_corr"] == "-1.0"


@pytest.mark.parametrize("args", [["--set", "nx=3"], ["--set", "sigma=abc"], ["--set", "oops"]])
def test_bad_settings_are_usage_errors(tmp_path, args):
    assert run(tmp_path, "martingale", *args) == 2


def test_gauge_reports_discrepancy(tmp_path):
    assert run(tmp_path, "gauge", "--theta", "x", "--omega", "0.1") == 0
    s = _summary(tmp_path, "gauge")
    assert float(s["bs.commutator_norm"]) > 1e-4
    assert float(s["anomaly.numeric_vs_derived"]) <= 1e-8
    assert float(s["anomaly.quoted_vs_numeric"]) > 1e-4
    assert s["anomaly.quoted_vs_numeric.claim"] == "anomaly_terms_discrepancy"
    assert (tmp_path / "anomaly_discrepancy_probe0.txt").exists()
    for name in ("res1", "res2", "res3"):
        assert (tmp_path / f"gauge_{name}.txt").exists()


def test_gauge_constant_theta_commutes(tmp_path):
    assert run(tmp_path, "gauge", "--theta", "constant") == 0
    s = _summary(tmp_path, "gauge")
    assert float(s["bs.commutator_norm"]) <= 1e-12
    assert float(s["conditions.res3.sup"]) == 0.0


def test_gauge_hermitian_flag(tmp_path):
    assert run(tmp_path, "gauge", "--theta", "x+y", "--omega", "0.5", "--hermitian") == 0
    s = _summary(tmp_path, "gauge")
    assert float(s["conditions.res3_plus_4theta_xy"]) == 0.0
    assert float(s["conditions.res1.sup"]) == pytest.approx(1 / 1.5)


def test_gauge_theta_from_file(tmp_path):
    from gaugefin.operators import Field, Grid1D, save_field
    g = Grid1D(-1, 1, 101)
    save_field(Field(g, np.sin(g.points)), tmp_path / "theta.txt")
    assert run(tmp_path, "gauge", "--theta", f"file:{tmp_path / 'theta.txt'}",
               "--set", "x_min=-1", "--set", "x_max=1", "--set", "nx=101") == 0
    assert float(_summary(tmp_path, "gauge")["anomaly.numeric_vs_derived"]) <= 1e-3


@pytest.mark.parametrize("args", [["--omega", "-1"], ["--theta", "spiral"]])
def test_gauge_usage_errors(tmp_path, args):
    assert run(tmp_path, "gauge", *args) == 2


def test_higgs_single_point(tmp_path):
    assert run(tmp_path, "higgs", "--set", "r_values=0.05", "--set", "ey_values=0.04") == 0
    s = _summary(tmp_path, "higgs")
    assert float(s["phi_vac"]) == pytest.approx(0.6, rel=1e-12)
    assert float(s["mass_coefficient"]) == pytest.approx(-0.018, rel=1e-12)


def test_higgs_sweep_with_massless_locus_and_zero_rate(tmp_path):
    assert run(tmp_path, "higgs", "--set", "r_values=0 0.05 0.1",
               "--set", "ey_values=0.1 0.2") == 0
    rows = [line.split() for line in (tmp_path / "higgs_sweep.txt").read_text().splitlines()[1:]]
    by_point = {(float(r[0]), float(r[1])): r for r in rows}
    assert by_point[(0.05, 0.1)][3] == "0.0" and by_point[(0.05, 0.1)][4] == "1"
    assert by_point[(0.1, 0.2)][3] == "0.0"
    assert by_point[(0.0, 0.1)][5] == "1"


def test_higgs_empty_range(tmp_path):
    assert run(tmp_path, "higgs", "--set", "r_values=") == 2


def test_price_baseline(tmp_path):
    assert run(tmp_path, "price") == 0
    s = _summary(tmp_path, "price")
    assert float(s["max_relative_error"]) <= 1e-3
    table = np.loadtxt(tmp_path / "price_surface.txt")
    assert table.shape == (512, 4)


def test_price_zero_horizon_echoes_payoff(tmp_path):
    assert run(tmp_path, "price", "--tau", "0", "--set", "payoff=put") == 0
    table = np.loadtxt(tmp_path / "price_surface.txt")
    np.testing.assert_array_equal(table[:, 2], np.maximum(100.0 - table[:, 1], 0.0))
    assert float(_summary(tmp_path, "price")["price_at_spot"]) == 0.0


def test_price_degenerate_mg(tmp_path):
    assert run(tmp_path, "price", "--model", "mg", "--degenerate-check") == 0
    assert float(_summary(tmp_path, "price")["degenerate.relative_difference"]) <= 1e-3


def test_price_instability_exits_one(tmp_path):
    assert run(tmp_path, "price", "--set", "r=-4.8", "--set", "n_steps=5",
               "--set", "scheme=implicit-euler") == 1


def test_constraints_reference_case(tmp_path):
    assert run(tmp_path, "constraints") == 0
    s = _summary(tmp_path, "constraints")
    assert s["roots.y"] == "[0.0,0.6931471805599453]"
    assert float(s["root_0.exp_y_plus_r"]) == 0.0
    assert float(s["root_0.vacuum_constraint_stated"]) == pytest.approx(0.5)
    assert "zeta=1.0" in s["map.mode"] and "|rho|=1.0" in s["map.mode"]


def test_constraints_without_roots(tmp_path):
    assert run(tmp_path, "constraints", "--set", "lambda=1", "--set", "mu=1") == 0
    assert "no positive real roots" in _summary(tmp_path, "constraints")["roots.note"]


@pytest.mark.parametrize("command", ["martingale", "gauge", "higgs", "price", "constraints"])
def test_reruns_are_byte_identical(tmp_path, command):
    a, b = tmp_path / "a", tmp_path / "b"
    for out in (a, b):
        assert main([command, "--out", str(out), "--seed", "5", "--format", "table"]) == 0
    files = sorted(p.name for p in a.iterdir())
    assert files == sorted(p.name for p in b.iterdir())
    for name in files:
        assert (a / name).read_bytes() == (b / name).read_bytes()


def test_module_entry_point(tmp_path):
    proc = subprocess.run([sys.executable, "-m", "gaugefin", "higgs", "--out", str(tmp_path)],
                          capture_output=True, text=True)
    assert proc.returncode == 0
    assert (tmp_path / "higgs_summary.txt").exists()
