"""Acceptance suite: one test per criterion, each printing a PASS/FAIL line.

The n = 32 integrations are shared through module-scoped fixtures; the whole
module takes roughly ten minutes on one core.  Run it alone with

    pytest tests/test_acceptance.py -v -s
"""
import json
import sys
import time
import warnings

import numpy as np
import pytest
from support import random_field, record

from rotns.cli import build_initial, run_command
from rotns.diagnostics import apriori_ledger, decay_report, energy_balance, heat_l1_identity, stability_gap
from rotns.initial_data import random_solenoidal, scale_to_chi, split_lowhigh, taylor_green, truncate_R
from rotns.io import Experiment, parse_config
from rotns.mild import HorizonWarning, picard_solve
from rotns.spectral import Grid, chi_norm
from rotns.timestepper import SolverConfig, integrate
from rotns.verify import lemma_suite, neutrality_suite

MONOTONE_TOL = 1e-10
OMEGAS = (0.0, 1.0, 100.0)


def crit4_config(omega, dt=1e-3, T=2.0):
    return SolverConfig(nu=1.0, omega=omega, dt=dt, T=T, scheme="EXACT-LINEAR-RK4", observer_stride=1)


def crit4_data():
    return build_initial(Experiment(n=32, initial="taylor_green", chi_target=0.5))


def monotone_violations(chi):
    return int(np.sum(chi[1:] > chi[:-1] * (1 + MONOTONE_TOL)))


@pytest.fixture(scope="module")
def crit4_runs():
    u0 = crit4_data()
    runs = {}
    for om in OMEGAS:
        t0 = time.perf_counter()
        traj = integrate(u0, crit4_config(om), keep_snapshots=False)
        runs[om] = (traj, time.perf_counter() - t0)
    return runs


# -- 1 ---------------------------------------------------------------------------


def test_criterion_1_coriolis_neutrality():
    t0 = time.perf_counter()
    res = neutrality_suite(trials=100, seed=0, n=16, omega=100.0)
    elapsed = time.perf_counter() - t0
    ok = res["violations"] == 0 and res["rhs_violations"] == 0 and elapsed < 5.0
    detail = f"{res['violations']} violations in 100 fields, worst {res['worst_relative']:.1e} (bound 1e-12), {elapsed:.1f} s"
    assert record("1", "Coriolis neutrality", ok, detail)


# -- 2 ---------------------------------------------------------------------------


def test_criterion_2_lemma_suite():
    t0 = time.perf_counter()
    res = lemma_suite(trials=1000, seed=0, n=16, s=1.0)
    elapsed = time.perf_counter() - t0
    v = res["violations"]
    ok = v == {"1": 0, "2": 0, "3": 0} and elapsed < 30.0
    w = res["worst_ratio"]
    detail = (
        f"violations (1) {v['1']}, (2) {v['2']}, (3) {v['3']} in 1000 fields; "
        f"worst ratios {w['1']:.3f}, {w['2']:.15f}, {w['3']:.3f}; {elapsed:.1f} s"
    )
    assert record("2", "interpolation inequalities", ok, detail)


# -- 3 ---------------------------------------------------------------------------

CRIT3_TEXT = """\
n = 16
nu = 1.0
dt = 0.001
T = 1.0
linear_only = true
observer_stride = 100
initial = random
kmax = 9.0
spectral_exponent = 1.0
seed = 3
chi_target = none
"""


@pytest.mark.parametrize("omega", [0.0, 50.0])
def test_criterion_3_linear_decay(omega):
    cfg, exp = parse_config(CRIT3_TEXT + f"omega = {omega}\n")
    u0 = build_initial(exp)
    traj = integrate(u0, cfg)
    g = u0.grid
    active = u0.amplitude > 0
    expect = u0.amplitude * np.exp(-cfg.nu * g.k2 * cfg.T)
    got = traj.snapshots[-1].amplitude
    mode_err = float(np.max(np.abs(got[active] - expect[active]) / expect[active]))
    chi_ref = float(np.sum(g.kpow(-1) * expect))
    chi_err = abs(traj.reports[-1].chi_m1 - chi_ref) / chi_ref
    ok = mode_err <= 1e-8 and chi_err <= 1e-8
    key = "3" if omega == 0 else "3b"
    detail = f"Omega = {omega:g}: per-mode modulus error {mode_err:.1e}, chi^-1(T) error {chi_err:.1e} (bound 1e-8)"
    assert record(key, "linear decay exactness", ok, detail)


# -- 4 ---------------------------------------------------------------------------


@pytest.mark.parametrize("omega", OMEGAS)
def test_criterion_4_apriori(crit4_runs, omega):
    traj, elapsed = crit4_runs[omega]
    led = apriori_ledger(traj, 1.0, tol_ledger=1e-6)
    mono = monotone_violations(led.chi_m1)
    ok = led.status == "PASS" and mono == 0 and elapsed < 120.0
    key = {0.0: "4", 1.0: "4b", 100.0: "4c"}[omega]
    detail = (
        f"Omega = {omega:g}: ledger {led.status}, min margin {led.min_margin:.3e}, "
        f"{mono} increases over {len(traj) - 1} steps, chi^-1(2) = {led.chi_m1[-1]:.6f}, {elapsed:.0f} s"
    )
    assert record(key, "a priori estimate", ok, detail)


# -- 5 ---------------------------------------------------------------------------


def test_criterion_5_picard_cross_oracle():
    g = Grid(8)
    u0 = scale_to_chi(taylor_green(g), 0.1)
    cfg = SolverConfig(nu=1.0, omega=10.0, dt=5e-4, T=0.1, observer_stride=1)
    with warnings.catch_warnings():
        warnings.simplefilter("ignore", HorizonWarning)
        fixed = picard_solve(u0, cfg, T=0.1, n_nodes=201, tol=1e-10, max_iter=50)
    gaps = fixed.meta["gaps"]
    ratios = [b / a for a, b in zip(gaps, gaps[1:])]
    traj = integrate(u0, cfg)
    assert np.allclose(traj.times, fixed.times, rtol=0, atol=1e-15)
    dist = max(chi_norm(a - b, -1) for a, b in zip(fixed.snapshots, traj.snapshots))
    ok = fixed.meta["iterations"] <= 10 and max(ratios) <= 0.5 and dist <= 5e-6
    detail = (
        f"{fixed.meta['iterations']} iterations, largest gap ratio {max(ratios):.3f} (bound 0.5), "
        f"sup chi^-1 distance {dist:.1e} (bound 5e-6)"
    )
    assert record("5", "Picard vs time stepper", ok, detail)


# -- 6 ---------------------------------------------------------------------------


def test_criterion_6_stability():
    g = Grid(32)
    base = scale_to_chi(taylor_green(g), 0.499)
    high = split_lowhigh(random_solenoidal(g, 6.0, 1.0, seed=11), 3.0)[1]
    u0 = base + scale_to_chi(high, 1e-3)
    ub = truncate_R(u0, 3.0)
    cfg = crit4_config(10.0).replace(observer_stride=20)
    ta = integrate(u0, cfg)
    tb = integrate(ub, cfg)
    rep = stability_gap(ta, tb, 1.0, tol=1e-6)
    gap0 = rep.gap[0]
    ok = abs(gap0 - 1e-3) <= 1e-15 and rep.max_ratio <= 1 + 1e-6
    detail = f"initial gap {gap0:.6e}, final gap {rep.gap[-1]:.3e}, max ratio {rep.max_ratio:.6f} (bound 1 + 1e-6)"
    assert record("6", "stability gap", ok, detail)


# -- 7 ---------------------------------------------------------------------------


def test_criterion_7_heat_identity():
    g = Grid(16)
    worst = 0.0
    for seed in range(5):
        rep = heat_l1_identity(random_field(g, seed, exponent=seed - 1.0), 1.0, 10.0)
        worst = max(worst, rep.rel_error)
    ok = worst <= 1e-8
    assert record("7", "heat L1-in-time identity", ok, f"worst relative error {worst:.1e} over 5 fields (bound 1e-8)")


# -- 8 ---------------------------------------------------------------------------


def test_criterion_8_energy_refinement(crit4_runs):
    omega = 100.0
    coarse = energy_balance(crit4_runs[omega][0], 1.0).max_relative
    fine_traj = integrate(crit4_data(), crit4_config(omega, dt=5e-4), keep_snapshots=False)
    fine = energy_balance(fine_traj, 1.0).max_relative
    ok = coarse / fine >= 3.5
    detail = f"Omega = {omega:g}: max residual {coarse:.3e} (dt) vs {fine:.3e} (dt/2), factor {coarse / fine:.2f} (bound 3.5)"
    assert record("8", "energy balance refinement", ok, detail)


def test_criterion_8_rotation_pairing(crit4_runs):
    E0 = crit4_runs[0.0][0].series("energy")
    worst = 0.0
    for om in OMEGAS[1:]:
        E = crit4_runs[om][0].series("energy")
        worst = max(worst, float(np.max(np.abs(E - E0) / E0)))
    ok = worst <= 1e-10
    detail = f"max relative E(t) difference between Omega = 0 and Omega in {{1, 100}}: {worst:.2e} (bound 1e-10)"
    assert record("8b", "energy rotation pairing", ok, detail)


# -- 9 ---------------------------------------------------------------------------


def test_criterion_9_decay():
    u0 = crit4_data()
    lines, ok, finals = [], True, []
    for dt in (1e-2, 5e-3):
        traj = integrate(u0, crit4_config(0.0, dt=dt, T=10.0), keep_snapshots=False)
        rep = decay_report(traj, 1.0)
        mono = monotone_violations(traj.series("chi_m1"))
        finals.append(rep.final_fraction)
        ok &= rep.final_fraction <= 0.01 and mono == 0 and rep.violations == 0
        lines.append(f"dt = {dt:g}: chi^-1(10)/chi^-1(0) = {rep.final_fraction:.3e}, {mono} increases")
    drift = abs(finals[0] - finals[1]) / finals[1]
    ok &= drift <= 0.01
    assert record("9", "decay", ok, "; ".join(lines) + f"; refinement drift {drift:.1e}")


# -- 10 --------------------------------------------------------------------------


def test_criterion_10_determinism(tmp_path):
    cfg_file = tmp_path / "crit3.txt"
    cfg_file.write_text(CRIT3_TEXT + "omega = 50.0\n")
    first, second = tmp_path / "first", tmp_path / "second"
    codes = [run_command(["simulate", str(cfg_file), "--out", str(first)])]
    codes.append(run_command(["simulate", str(first / "manifest.json"), "--out", str(second)]))
    same_csv = (first / "timeseries.csv").read_bytes() == (second / "timeseries.csv").read_bytes()
    same_manifest = (first / "manifest.json").read_bytes() == (second / "manifest.json").read_bytes()

    pic = tmp_path / "picard.txt"
    pic.write_text("n = 8\nomega = 10\ndt = 0.0005\nT = 0.1\nchi_target = 0.1\nobserver_stride = 1\n")
    p1, p2 = tmp_path / "p1", tmp_path / "p2"
    codes.append(run_command(["picard", str(pic), "--out", str(p1)]))
    codes.append(run_command(["picard", str(p1 / "picard.json"), "--out", str(p2)]))
    same_picard = json.loads((p1 / "picard.json").read_text()) == json.loads((p2 / "picard.json").read_text())
    ok = codes == [0, 0, 0, 0] and same_csv and same_manifest and same_picard
    detail = f"exit codes {codes}; CSV identical {same_csv}, manifest identical {same_manifest}, Picard report identical {same_picard}"
    assert record("10", "determinism", ok, detail)


if __name__ == "__main__":
    sys.exit(pytest.main([__file__, "-v", "-s"]))
