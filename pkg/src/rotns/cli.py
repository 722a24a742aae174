"""Command line driver.

Exit codes: 0 success, 1 invariant or acceptance violation, 2 configuration
error, 3 numerical blow-up.  ``ROTNS_OUT_DIR`` overrides the output root and
``ROTNS_WORKERS`` the number of parallel sweep members.
"""
from __future__ import annotations

import argparse
import json
import logging
import os
import sys
import warnings
from concurrent.futures import ProcessPoolExecutor
from pathlib import Path

import numpy as np

from .diagnostics import apriori_ledger, decay_report, energy_balance, hs_gronwall, stability_gap
from .dynamics import BlowUpError
from .initial_data import random_solenoidal, scale_to_chi, taylor_green, truncate_R
from .io import ConfigError, Experiment, _jsonable, build_manifest, default_outdir, emit_outputs, load_config, write_json
from .mild import PicardConvergenceError, empirical_horizon, picard_solve
from .spectral import Grid, chi_norm
from .timestepper import SolverConfig, integrate
from .verify import heat_identity_suite, lemma_suite, neutrality_suite

log = logging.getLogger("rotns")

EXIT_OK, EXIT_VIOLATION, EXIT_CONFIG, EXIT_BLOWUP = 0, 1, 2, 3


def build_initial(exp: Experiment):
    grid = Grid(exp.n, exp.period, exp.dealias_fraction)
    if exp.initial == "taylor_green":
        f = taylor_green(grid, exp.amplitude)
    else:
        f = random_solenoidal(grid, exp.kmax, exp.spectral_exponent, exp.seed) * exp.amplitude
    if exp.chi_target is not None:
        f = scale_to_chi(f, exp.chi_target)
    if exp.truncate_R is not None:
        f = truncate_R(f, exp.truncate_R)
    return f


def simulate(cfg: SolverConfig, exp: Experiment, outdir) -> int:
    u0 = build_initial(exp)
    try:
        traj = integrate(u0, cfg, keep_snapshots=exp.keep_snapshots)
        code = EXIT_OK
    except BlowUpError as exc:
        log.error("%s", exc)
        traj = exc.partial
        code = EXIT_BLOWUP
    ledger = apriori_ledger(traj, cfg.nu, exp.tol_ledger)
    energy = energy_balance(traj, cfg.nu)
    decay = decay_report(traj, cfg.nu)
    if code == EXIT_OK and ledger.status == "FAIL":
        code = EXIT_VIOLATION
    outcomes = {
        "exit_code": code,
        "ledger": ledger.status,
        "ledger_pass": ledger.passed,
        "ledger_min_margin": ledger.min_margin,
        "threshold_margin": ledger.threshold_margin,
        "monotone_violations": decay.violations,
        "energy_max_relative": energy.max_relative,
        "hs_gronwall_C": hs_gronwall(traj),
        "chi_m1_time_integral": float(ledger.chi_m1_integral[-1]),
        "steps": traj.steps_taken,
        "snapshots": len(traj),
    }
    emit_outputs(outdir, traj, ledger, energy, cfg, exp, outcomes=outcomes)
    log.info("simulate: %s (exit %d) -> %s", ledger.status, code, outdir)
    return code


def _sweep_member(args):
    cfg, exp, outdir = args
    return simulate(cfg, exp, outdir)


def cmd_simulate(ns) -> int:
    cfg, exp = load_config(ns.config)
    return simulate(cfg, exp, ns.out or default_outdir("simulate"))


def cmd_picard(ns) -> int:
    cfg, exp = load_config(ns.config)
    out = Path(ns.out or default_outdir("picard"))
    out.mkdir(parents=True, exist_ok=True)
    u0 = build_initial(exp)
    T = cfg.T
    spacing = T / (ns.nodes - 1)
    stride = round(spacing / cfg.dt)
    if stride < 1 or abs(stride * cfg.dt - spacing) > 1e-9 * spacing:
        raise ConfigError(f"dt = {cfg.dt} must divide the node spacing {spacing}")
    with warnings.catch_warnings(record=True) as caught:
        warnings.simplefilter("always")
        try:
            fixed = picard_solve(u0, cfg, T, ns.nodes, ns.tol, ns.max_iter)
        except PicardConvergenceError as exc:
            write_json(out / "picard.json", {"converged": False, "gaps": exc.gaps, "error": str(exc)})
            return EXIT_VIOLATION
    traj = integrate(u0, cfg.replace(observer_stride=stride), keep_snapshots=True)
    dist = max(chi_norm(a - b, -1) for a, b in zip(fixed.snapshots, traj.snapshots))
    report = {
        "converged": True,
        **fixed.meta,
        "sup_chi_m1_distance": dist,
        "warnings": [str(w.message) for w in caught],
    }
    if ns.scan_horizon:
        report["empirical_horizon"] = empirical_horizon(u0, cfg, ns.scan_horizon)
    manifest = build_manifest(cfg, exp, outcomes=report)
    write_json(out / "picard.json", manifest)
    keys = ("iterations", "final_gap", "residual", "sup_chi_m1_distance", "horizon", "empirical_horizon")
    print(json.dumps(_jsonable({k: report[k] for k in keys if k in report})))
    return EXIT_OK


def cmd_verify(ns) -> int:
    tally = {}
    if ns.suite in ("all", "lemma"):
        tally["lemma"] = lemma_suite(ns.trials, ns.seed, ns.n, ns.s)
    if ns.suite in ("all", "neutrality"):
        tally["neutrality"] = neutrality_suite(min(ns.trials, ns.neutrality_trials), ns.seed, ns.n, ns.omega)
    if ns.suite in ("all", "heat"):
        tally["heat"] = heat_identity_suite(min(ns.trials, ns.heat_trials), ns.seed, ns.n)
    total = 0
    for name, res in tally.items():
        v = res["violations"]
        total += sum(v.values()) if isinstance(v, dict) else v
        total += res.get("rhs_violations", 0)
    tally["total_violations"] = total
    text = json.dumps(_jsonable(tally), indent=2, sort_keys=True)
    print(text)
    if ns.out:
        Path(ns.out).mkdir(parents=True, exist_ok=True)
        (Path(ns.out) / "verify.json").write_text(text + "\n")
    return EXIT_OK if total == 0 else EXIT_VIOLATION


def cmd_sweep(ns) -> int:
    cfg, exp = load_config(ns.config)
    out = Path(ns.out or default_outdir("sweep"))
    omegas = [float(x) for x in ns.omegas.split(",")]
    scales = [float(x) for x in ns.scales.split(",")]
    jobs = []
    for om in omegas:
        for sc in scales:
            sub = out / f"omega={om:g}_chi={sc:g}"
            jobs.append((cfg.replace(omega=om), Experiment(**{**exp.__dict__, "chi_target": sc}), sub))
    workers = ns.workers or int(os.environ.get("ROTNS_WORKERS", "1"))
    if workers > 1:
        with ProcessPoolExecutor(max_workers=workers) as pool:
            codes = list(pool.map(_sweep_member, jobs))
    else:
        codes = [_sweep_member(j) for j in jobs]
    summary = [{"omega": j[0].omega, "chi_target": j[1].chi_target, "dir": str(j[2]), "exit_code": c}
               for j, c in zip(jobs, codes)]
    write_json(out / "sweep.json", {"members": summary})
    return max(codes) if codes else EXIT_OK


def cmd_decay(ns) -> int:
    cfg, exp = load_config(ns.config)
    out = Path(ns.out or default_outdir("decay"))
    out.mkdir(parents=True, exist_ok=True)
    u0 = build_initial(exp)
    try:
        traj = integrate(u0, cfg, keep_snapshots=False)
    except BlowUpError as exc:
        log.error("%s", exc)
        return EXIT_BLOWUP
    rep = decay_report(traj, cfg.nu)
    ledger = apriori_ledger(traj, cfg.nu, exp.tol_ledger)
    data = {
        "half_lives": rep.half_lives,
        "monotone_violations": rep.violations,
        "final_fraction": rep.final_fraction,
        "k_min": rep.k_min,
        "ratio_final": float(rep.ratio[-1]) if not rep.empty else None,
        "ledger": ledger.status,
    }
    write_json(out / "decay.json", build_manifest(cfg, exp, outcomes=data))
    if ledger.in_hypothesis and rep.violations:
        return EXIT_VIOLATION
    return EXIT_OK


def cmd_compare(ns) -> int:
    cfg, exp = load_config(ns.config)
    out = Path(ns.out or default_outdir("compare"))
    out.mkdir(parents=True, exist_ok=True)
    ua = build_initial(exp)
    if ns.config_b:
        cfg_b, exp_b = load_config(ns.config_b)
        if cfg_b != cfg:
            raise ConfigError("compared runs must share the solver configuration")
        ub = build_initial(exp_b)
    elif ns.R is not None:
        ub = truncate_R(ua, ns.R)
    else:
        raise ConfigError("compare needs --config-b or --R")
    try:
        ta = integrate(ua, cfg, keep_snapshots=True)
        tb = integrate(ub, cfg, keep_snapshots=True)
    except BlowUpError as exc:
        log.error("%s", exc)
        return EXIT_BLOWUP
    rep = stability_gap(ta, tb, cfg.nu, ns.tol)
    data = {"max_ratio": rep.max_ratio, "passed": rep.passed, "initial_gap": float(rep.gap[0]),
            "final_gap": float(rep.gap[-1]), "min_diff_margin": float(np.min(rep.diff_margin))}
    write_json(out / "compare.json", build_manifest(cfg, exp, outcomes=data))
    print(json.dumps(_jsonable(data)))
    return EXIT_OK if rep.passed else EXIT_VIOLATION


def make_parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(prog="rotns", description=__doc__.splitlines()[0])
    p.add_argument("-v", "--verbose", action="store_true")
    sub = p.add_subparsers(dest="command", required=True)

    def with_config(sp):
        sp.add_argument("config", help="key = value config file or a run manifest (.json)")
        sp.add_argument("--out", help="output directory")
        return sp

    with_config(sub.add_parser("simulate", help="integrate and write ledgers")).set_defaults(func=cmd_simulate)

    sp = with_config(sub.add_parser("picard", help="mild-solution solve with time-stepper cross-check"))
    sp.add_argument("--nodes", type=int, default=201)
    sp.add_argument("--tol", type=float, default=1e-10)
    sp.add_argument("--max-iter", type=int, default=50)
    sp.add_argument("--scan-horizon", type=float, metavar="T_MAX",
                    help="also report the largest T_MAX / 2**j on which Picard visibly contracts")
    sp.set_defaults(func=cmd_picard)

    sp = sub.add_parser("verify", help="seeded property suites")
    sp.add_argument("--trials", type=int, default=1000)
    sp.add_argument("--seed", type=int, default=0)
    sp.add_argument("--n", type=int, default=16)
    sp.add_argument("--s", type=float, default=1.0)
    sp.add_argument("--omega", type=float, default=100.0)
    sp.add_argument("--suite", choices=("all", "lemma", "neutrality", "heat"), default="all")
    sp.add_argument("--neutrality-trials", type=int, default=100)
    sp.add_argument("--heat-trials", type=int, default=10)
    sp.add_argument("--out")
    sp.set_defaults(func=cmd_verify)

    sp = with_config(sub.add_parser("sweep", help="grid over rotation and data size"))
    sp.add_argument("--omegas", default="0,1,100")
    sp.add_argument("--scales", default="0.25,0.5")
    sp.add_argument("--workers", type=int)
    sp.set_defaults(func=cmd_sweep)

    with_config(sub.add_parser("decay", help="long-horizon decay report")).set_defaults(func=cmd_decay)

    sp = with_config(sub.add_parser("compare", help="stability gap between two runs"))
    sp.add_argument("--config-b")
    sp.add_argument("--R", type=float, help="compare against truncate_R(u0, R)")
    sp.add_argument("--tol", type=float, default=1e-6)
    sp.set_defaults(func=cmd_compare)
    return p


def run_command(argv=None) -> int:
    try:
        ns = make_parser().parse_args(argv)
    except SystemExit as exc:
        return int(exc.code or 0)
    logging.basicConfig(level=logging.INFO if ns.verbose else logging.WARNING, format="%(levelname)s %(message)s")
    try:
        return ns.func(ns)
    except ConfigError as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    except (OSError, ValueError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    except BlowUpError as exc:
        print(f"blow-up: {exc}", file=sys.stderr)
        return EXIT_BLOWUP


def main() -> None:
    sys.exit(run_command())


if __name__ == "__main__":
    main()
