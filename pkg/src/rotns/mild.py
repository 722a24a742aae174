"""Mild (Duhamel) formulation: heat semigroup, local-existence horizon and
Picard iteration of the integral equation

    u(t) = e^{nu t Lap} u0 - int_0^t e^{nu (t - tau) Lap} [Omega P(e3 x u) + P div(u (x) u)](tau) dtau
"""
from __future__ import annotations

import math
import warnings

import numpy as np
from scipy.optimize import brentq

from .dynamics import BlowUpError, coriolis_rhs, nonlinear_rhs
from .spectral import SpectralField, chi_norm, norm_report, sobolev_norms
from .timestepper import SolverConfig, Trajectory


class DegenerateHorizonWarning(UserWarning):
    """Zero data and no rotation: the horizon condition holds for every T."""


class HorizonWarning(UserWarning):
    """Picard requested past the contraction horizon."""


class PicardConvergenceError(RuntimeError):
    def __init__(self, message: str, gaps):
        super().__init__(message)
        self.gaps = list(gaps)


def heat_propagate(f: SpectralField, nu: float, t: float) -> SpectralField:
    """Apply ``e^{nu t Lap}``: multiply mode k by ``exp(-nu |k|^2 t)``."""
    if t < 0:
        raise ValueError("t must be nonnegative")
    if t == 0:
        return f
    return f.with_coeffs(np.exp(-nu * t * f.grid.k2) * f.coeffs)


def contraction_horizon(u0: SpectralField, cfg: SolverConfig, cap: float | None = None) -> float:
    """Largest T with ``C0 |Omega| T + C1 ||u0||_{H^s} (T + sqrt(T / nu)) <= 1/2``,
    capped at ``cap`` (default ``cfg.T``)."""
    H = sobolev_norms(u0, cfg.s).hs_full
    a = cfg.C0 * abs(cfg.omega) + cfg.C1 * H
    b = cfg.C1 * H / math.sqrt(cfg.nu)
    cap = cfg.T if cap is None else cap
    if a == 0 and b == 0:
        warnings.warn("zero data and zero rotation: horizon is unbounded", DegenerateHorizonWarning, stacklevel=2)
        return cap

    def g(x):
        return a * x * x + b * x - 0.5

    if g(math.sqrt(cap)) <= 0:
        return cap
    x = brentq(g, 0.0, math.sqrt(cap), xtol=1e-14, rtol=1e-15)
    return x * x


def _duhamel_source(f: SpectralField, cfg: SolverConfig) -> np.ndarray:
    """``Omega P(e3 x u) + P div(u (x) u)`` (dealiased), i.e. minus the explicit rhs."""
    out = -coriolis_rhs(f, cfg.omega).coeffs
    if not cfg.linear_only:
        out = out - nonlinear_rhs(f).coeffs
    return out


def _picard_map(u0: SpectralField, states: list, times: np.ndarray, cfg: SolverConfig) -> list:
    """One application of the integral operator on the node set (trapezoid rule)."""
    g = u0.grid
    lam = cfg.nu * g.k2
    out = [u0]
    F_prev = _duhamel_source(states[0], cfg)
    acc = np.zeros_like(u0.coeffs)
    for j in range(1, len(times)):
        h = times[j] - times[j - 1]
        decay = np.exp(-lam * h)
        F = _duhamel_source(states[j], cfg)
        acc = decay * (acc + 0.5 * h * F_prev) + 0.5 * h * F
        out.append(SpectralField(g, heat_propagate(u0, cfg.nu, times[j]).coeffs - acc))
        F_prev = F
    return out


def _sup_gap(a: list, b: list) -> float:
    return max(chi_norm(x - y, -1) for x, y in zip(a, b))


def picard_solve(
    u0: SpectralField,
    cfg: SolverConfig,
    T: float | None = None,
    n_nodes: int = 201,
    tol: float = 1e-10,
    max_iter: int = 50,
) -> Trajectory:
    """Fixed point of the integral equation on ``n_nodes`` uniform nodes of ``[0, T]``.

    Iteration starts from the heat flow and stops when the sup-in-time chi^-1
    distance between successive iterates drops below ``tol``.  ``meta`` of the
    returned trajectory carries ``iterations``, ``gaps`` and ``residual`` (one
    more application of the map to the fixed point).
    """
    T = cfg.T if T is None else T
    if n_nodes < 2 or not T > 0:
        raise ValueError("need T > 0 and at least two nodes")
    horizon = contraction_horizon(u0, cfg, cap=max(T, cfg.T))
    if T > horizon:
        warnings.warn(f"T = {T:g} exceeds the contraction horizon {horizon:.3g}", HorizonWarning, stacklevel=2)
    times = np.linspace(0.0, T, n_nodes)
    current = [heat_propagate(u0, cfg.nu, t) for t in times]
    gaps = []
    for it in range(1, max_iter + 1):
        try:
            with np.errstate(over="ignore", invalid="ignore"):
                new = _picard_map(u0, current, times, cfg)
        except BlowUpError:
            raise PicardConvergenceError(f"Picard iterate {it} is not finite", gaps) from None
        gaps.append(_sup_gap(new, current))
        current = new
        if gaps[-1] < tol:
            break
    else:
        raise PicardConvergenceError(
            f"Picard iteration did not reach tol={tol:g} in {max_iter} iterations (last gap {gaps[-1]:.3g})", gaps
        )
    residual = _sup_gap(_picard_map(u0, current, times, cfg), current)
    reports = [norm_report(f, cfg.s) for f in current]
    meta = {
        "iterations": it,
        "gaps": gaps,
        "final_gap": gaps[-1],
        "residual": residual,
        "n_nodes": n_nodes,
        "horizon": horizon,
    }
    return Trajectory(cfg.replace(T=T, dt=min(cfg.dt, T)), times, current, reports, 0, meta)


def empirical_horizon(
    u0: SpectralField,
    cfg: SolverConfig,
    T_max: float,
    *,
    factor: float = 2.0,
    n_nodes: int = 41,
    tol: float = 1e-10,
    max_iter: int = 40,
    attempts: int = 20,
) -> float:
    """Largest ``T_max / factor**j`` on which Picard iteration converges with every
    successive gap ratio (from the second on) at most 1/2.

    This is the observed counterpart of :func:`contraction_horizon`, whose constants
    ``C0``, ``C1`` are unknown.  Returns 0.0 when no tried horizon qualifies.
    """
    if not (T_max > 0 and factor > 1):
        raise ValueError("need T_max > 0 and factor > 1")
    T = T_max
    for _ in range(attempts):
        try:
            with warnings.catch_warnings():
                warnings.simplefilter("ignore", HorizonWarning)
                gaps = picard_solve(u0, cfg, T, n_nodes, tol, max_iter).meta["gaps"]
        except PicardConvergenceError:
            gaps = None
        if gaps is not None and all(b <= 0.5 * a for a, b in zip(gaps, gaps[1:])):
            return T
        T /= factor
    return 0.0
