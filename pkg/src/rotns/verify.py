"""Seeded property suites over random fields (used by ``rotns verify``)."""
from __future__ import annotations

import numpy as np

from .diagnostics import heat_l1_identity
from .dynamics import coriolis_neutrality_residual, coriolis_rhs
from .initial_data import random_solenoidal
from .spectral import Grid, lemma1_check


def trial_fields(grid: Grid, trials: int, seed: int):
    """Random solenoidal fields with varied support and spectral slope.

    The per-trial parameters come from ``default_rng(seed)``; the field
    coefficients from the per-mode keyed generator with seed ``seed * 100003 + i``.
    """
    rng = np.random.default_rng(seed)
    kcap = grid.scale * np.floor(grid.dealias_cutoff) * np.sqrt(3)
    for i in range(trials):
        kmax = rng.uniform(grid.scale, kcap)
        expo = rng.uniform(-1.0, 4.0)
        f = random_solenoidal(grid, kmax, expo, seed * 100003 + i)
        yield f * float(np.exp(rng.uniform(-6, 6)))


def lemma_suite(trials: int = 1000, seed: int = 0, n: int = 16, s: float = 1.0) -> dict:
    grid = Grid(n)
    counts = {"1": 0, "2": 0, "3": 0}
    tail_flags = 0
    worst = {"1": 0.0, "2": 0.0, "3": 0.0}
    for f in trial_fields(grid, trials, seed):
        rep = lemma1_check(f, s)
        tail_flags += rep.tail_truncated
        for v in rep.violations:
            counts[str(v)] += 1
        worst["1"] = max(worst["1"], rep.chi_m1 / rep.bound_1)
        worst["2"] = max(worst["2"], rep.chi_0 / rep.bound_2)
        worst["3"] = max(worst["3"], rep.grad_inf / rep.chi_1)
    return {"trials": trials, "seed": seed, "n": n, "s": s, "violations": counts,
            "worst_ratio": worst, "tail_truncated": int(tail_flags)}


def neutrality_suite(trials: int = 100, seed: int = 0, n: int = 16, omega: float = 100.0) -> dict:
    grid = Grid(n)
    bad = 0
    bad_rhs = 0
    worst = 0.0
    for f in trial_fields(grid, trials, seed):
        scale = abs(omega) * float(np.sum(f.amplitude**2))
        res = coriolis_neutrality_residual(f, omega)
        work = abs(float(np.sum((coriolis_rhs(f, omega).coeffs * np.conj(f.coeffs)).real)))
        bad += res > 1e-12 * scale
        bad_rhs += work > 1e-12 * scale
        worst = max(worst, max(res, work) / scale)
    return {"trials": trials, "seed": seed, "n": n, "omega": omega, "violations": int(bad),
            "rhs_violations": int(bad_rhs), "worst_relative": worst}


def heat_identity_suite(trials: int = 10, seed: int = 0, n: int = 16, nu: float = 1.0, T_max: float = 10.0) -> dict:
    grid = Grid(n)
    bad = 0
    worst = 0.0
    for f in trial_fields(grid, trials, seed):
        rep = heat_l1_identity(f, nu, T_max)
        bad += rep.rel_error > 1e-8
        worst = max(worst, rep.rel_error)
    return {"trials": trials, "seed": seed, "n": n, "nu": nu, "T_max": T_max,
            "violations": int(bad), "worst_relative": worst}
