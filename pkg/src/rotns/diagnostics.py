"""Ledgers that check the chi-space estimates along computed trajectories.

Time integrals are trapezoid sums over the stored observation times.
"""
from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np
from scipy.integrate import cumulative_trapezoid, quad

from .initial_data import smallness_threshold
from .spectral import SpectralField, chi_norm, sobolev_norms
from .timestepper import Trajectory

MONOTONE_RTOL = 1e-10


def _cumtrapz(y, t) -> np.ndarray:
    y = np.asarray(y, dtype=float)
    if len(y) < 2:
        return np.zeros(len(y))
    return cumulative_trapezoid(y, t, initial=0.0)


@dataclass
class AprioriLedger:
    """Running check of

        chi^-1(t) + (nu - chi^-1(0)) int_0^t chi^1 <= chi^-1(0)

    plus the intermediate form
    ``chi^-1(t) + nu I(t) <= chi^-1(0) + sup_{tau<=t} chi^-1(tau) I(t)``.
    """

    times: np.ndarray
    chi_m1: np.ndarray
    chi1_integral: np.ndarray
    lhs: np.ndarray
    margin: np.ndarray
    ap1_lhs: np.ndarray
    ap1_rhs: np.ndarray
    ap1_margin: np.ndarray
    chi_m1_integral: np.ndarray
    threshold_margin: float
    in_hypothesis: bool
    tol: float
    passed: bool

    @property
    def status(self) -> str:
        if not self.in_hypothesis:
            return "OUT-OF-HYPOTHESIS"
        return "PASS" if self.passed else "FAIL"

    @property
    def min_margin(self) -> float:
        return float(np.min(self.margin))


def apriori_ledger(traj: Trajectory, nu: float | None = None, tol_ledger: float = 1e-6) -> AprioriLedger:
    nu = traj.config.nu if nu is None else nu
    t = traj.times
    chi_m1 = traj.series("chi_m1")
    chi_1 = traj.series("chi_1")
    c0 = chi_m1[0]
    I = _cumtrapz(chi_1, t)
    lhs = chi_m1 + (nu - c0) * I
    margin = c0 - lhs
    ap1_lhs = chi_m1 + nu * I
    ap1_rhs = c0 + np.maximum.accumulate(chi_m1) * I
    threshold = smallness_threshold(nu)
    passed = bool(np.all(margin >= -tol_ledger * c0) and np.all(ap1_rhs - ap1_lhs >= -tol_ledger * c0))
    return AprioriLedger(
        times=t,
        chi_m1=chi_m1,
        chi1_integral=I,
        lhs=lhs,
        margin=margin,
        ap1_lhs=ap1_lhs,
        ap1_rhs=ap1_rhs,
        ap1_margin=ap1_rhs - ap1_lhs,
        chi_m1_integral=_cumtrapz(chi_m1, t),
        threshold_margin=float(c0 / threshold),
        in_hypothesis=bool(c0 < threshold),
        tol=tol_ledger,
        passed=passed,
    )


@dataclass
class EnergyBalance:
    """Per-interval residual of ``dE/dt = -nu ||grad u||^2`` with ``E = ||u||^2 / 2``."""

    times: np.ndarray
    energy: np.ndarray
    residuals: np.ndarray
    max_relative: float


def energy_balance(traj: Trajectory, nu: float | None = None) -> EnergyBalance:
    nu = traj.config.nu if nu is None else nu
    t = traj.times
    E = traj.series("energy")
    D = traj.series("grad_l2") ** 2
    r = np.diff(E) + nu * 0.5 * np.diff(t) * (D[1:] + D[:-1])
    rel = float(np.max(np.abs(r)) / E[0]) if len(r) and E[0] > 0 else 0.0
    return EnergyBalance(t, E, r, rel)


def hs_gronwall(traj: Trajectory, s: float | None = None) -> float:
    """Smallest ``C`` for which ``||u(t)||_{H^s} <= ||u0||_{H^s} exp(C int_0^t ||grad u||_inf)``
    holds at every observed time (0 when the norm never grows)."""
    if s is None or s == traj.config.s:
        hs = traj.series("hs_full")
    else:
        hs = np.array([sobolev_norms(traj.field_at(j), s).hs_full for j in range(len(traj))])
    G = _cumtrapz(traj.series("grad_inf"), traj.times)
    if hs[0] == 0:
        return 0.0
    best = 0.0
    for j in range(1, len(hs)):
        num = np.log(hs[j] / hs[0])
        if num > 0 and G[j] > 0:
            best = max(best, num / G[j])
    return float(best)


@dataclass
class StabilityReport:
    """Difference ``w = A - B`` of two runs against the Gronwall bound
    ``||w(t)||_chi^-1 <= ||w(0)||_chi^-1 exp(int_0^t a)``, ``a = (chi^1_A + chi^1_B) / 2``."""

    times: np.ndarray
    gap: np.ndarray
    bound: np.ndarray
    ratio: np.ndarray
    diff_margin: np.ndarray
    max_ratio: float
    tol: float

    @property
    def passed(self) -> bool:
        return bool(self.max_ratio <= 1 + self.tol)


def stability_gap(traj_a: Trajectory, traj_b: Trajectory, nu: float | None = None, tol: float = 1e-6) -> StabilityReport:
    """Also reports the pre-Gronwall form (``diff_margin`` >= 0 expected):
    ``||w(t)|| + (nu - c) int ||w||_chi^1 <= ||w(0)|| + int a ||w||_chi^-1``, c the larger data size."""
    if len(traj_a) != len(traj_b) or not np.array_equal(traj_a.times, traj_b.times):
        raise ValueError("trajectories must share their observation times")
    if traj_a.grid != traj_b.grid:
        raise ValueError("trajectories must share a grid")
    nu = traj_a.config.nu if nu is None else nu
    t = traj_a.times
    w = [traj_a.field_at(j) - traj_b.field_at(j) for j in range(len(t))]
    gap = np.array([chi_norm(x, -1) for x in w])
    gap1 = np.array([chi_norm(x, 1) for x in w])
    a = 0.5 * (traj_a.series("chi_1") + traj_b.series("chi_1"))
    A = _cumtrapz(a, t)
    bound = gap[0] * np.exp(A)
    with np.errstate(divide="ignore", invalid="ignore"):
        ratio = np.where(bound > 0, gap / bound, np.where(gap > 0, np.inf, 0.0))
    c = max(traj_a.reports[0].chi_m1, traj_b.reports[0].chi_m1)
    diff_margin = gap[0] + _cumtrapz(a * gap, t) - gap - (nu - c) * _cumtrapz(gap1, t)
    return StabilityReport(t, gap, bound, ratio, diff_margin, float(np.max(ratio)), tol)


@dataclass
class DecayReport:
    half_lives: list = field(default_factory=list)  # (level, first time chi^-1 <= level)
    violations: int = 0
    ratio: np.ndarray = field(default_factory=lambda: np.zeros(0))
    k_min: float = 0.0
    final_fraction: float = 0.0

    @property
    def empty(self) -> bool:
        return len(self.ratio) == 0


def decay_report(traj: Trajectory, nu: float | None = None) -> DecayReport:
    """Halving times of chi^-1, count of increases beyond ``1e-10`` relative, and the
    ratio of chi^-1 to the slowest linear decay ``chi^-1(0) exp(-nu k_min^2 t)``."""
    nu = traj.config.nu if nu is None else nu
    chi = traj.series("chi_m1")
    t = traj.times
    if chi[0] == 0:
        return DecayReport()
    u0 = traj.field_at(0)
    active = u0.amplitude > 0
    k_min = float(np.min(u0.grid.kmag[active]))
    ratio = chi / (chi[0] * np.exp(-nu * k_min**2 * t))
    violations = int(np.sum(chi[1:] > chi[:-1] * (1 + MONOTONE_RTOL)))
    half = []
    level = chi[0] / 2
    for j in range(len(chi)):
        while chi[j] <= level:
            half.append((float(level), float(t[j])))
            level /= 2
    return DecayReport(half, violations, ratio, k_min, float(chi[-1] / chi[0]))


@dataclass
class HeatL1Report:
    integral: float
    tail: float
    total: float
    chi_m1: float
    rel_error: float


def heat_l1_identity(u0: SpectralField, nu: float, T_max: float, rtol: float = 1e-13) -> HeatL1Report:
    """``int_0^Tmax sum_k nu |k| |u0_k| e^{-nu |k|^2 t} dt`` by adaptive quadrature, plus the
    exact remainder ``sum_k |k|^-1 |u0_k| e^{-nu |k|^2 Tmax}``; the sum must equal chi^-1(u0)."""
    g = u0.grid
    amp = u0.amplitude
    nz = (amp > 0) & (g.k2_int > 0)
    k2i, inv = np.unique(g.k2_int[nz], return_inverse=True)
    weight = np.zeros(len(k2i))
    np.add.at(weight, inv, amp[nz])
    r = g.scale * np.sqrt(k2i.astype(float))
    chi = chi_norm(u0, -1)
    if len(r) == 0:
        return HeatL1Report(0.0, 0.0, 0.0, chi, 0.0)

    def integrand(t):
        return float(np.sum(nu * r * weight * np.exp(-nu * r * r * t)))

    # breakpoints at the decay scales of the slowest and fastest shells
    scales = np.geomspace(1.0 / (nu * r[-1] ** 2), 1.0 / (nu * r[0] ** 2), 12)
    points = [p for p in scales if p < T_max]
    integral, _ = quad(integrand, 0.0, T_max, points=points or None, epsabs=0.0, epsrel=rtol, limit=500)
    tail = float(np.sum(weight / r * np.exp(-nu * r * r * T_max)))
    total = integral + tail
    rel = abs(total - chi) / chi if chi > 0 else abs(total)
    return HeatL1Report(float(integral), tail, float(total), chi, float(rel))
