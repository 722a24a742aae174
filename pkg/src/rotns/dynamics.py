"""Right-hand side of the Leray-projected rotating Navier-Stokes system in
Fourier space.

    d/dt u_hat = -nu |k|^2 u_hat - Omega P(e3 x u)_hat - P(div(u (x) u))_hat
"""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .spectral import SpectralField, _project, project_leray

# (i, j) component pairs of the symmetric tensor u_i u_j
_PAIRS = ((0, 0), (1, 1), (2, 2), (0, 1), (0, 2), (1, 2))
_PAIR_INDEX = {}
for _p, (_i, _j) in enumerate(_PAIRS):
    _PAIR_INDEX[_i, _j] = _PAIR_INDEX[_j, _i] = _p


class BlowUpError(FloatingPointError):
    """Raised when a state or right-hand side stops being finite."""

    def __init__(self, message: str, *, partial=None):
        super().__init__(message)
        self.partial = partial


def e3_cross(c: np.ndarray) -> np.ndarray:
    """``e3 x u`` per mode: ``(-u2, u1, 0)``."""
    out = np.zeros_like(c)
    out[0] = -c[1]
    out[1] = c[0]
    return out


def coriolis_rhs(f: SpectralField, omega: float) -> SpectralField:
    """``-Omega P(e3 x u)``."""
    if omega == 0:
        return SpectralField.zeros(f.grid)
    return project_leray(f.with_coeffs(-omega * e3_cross(f.coeffs)))


def _stress_half(f: SpectralField) -> np.ndarray:
    """Half-spectrum of the six products ``u_i u_j`` of the dealiased field."""
    g = f.grid
    u = g.to_physical(f.coeffs * g.dealias_mask)
    prods = np.empty((6,) + u.shape[1:])
    for p, (i, j) in enumerate(_PAIRS):
        np.multiply(u[i], u[j], out=prods[p])
    return g.to_half(prods)


def _divergence_half(f: SpectralField, stress: np.ndarray) -> np.ndarray:
    """Half-spectrum of ``div(u (x) u)``: ``sum_j i k_j (u_i u_j)_hat``."""
    kx = f.grid.kvec_half
    out = np.empty((3,) + stress.shape[1:], dtype=complex)
    for i in range(3):
        acc = kx[0] * stress[_PAIR_INDEX[i, 0]]
        acc += kx[1] * stress[_PAIR_INDEX[i, 1]]
        acc += kx[2] * stress[_PAIR_INDEX[i, 2]]
        out[i] = 1j * acc
    return out


def nonlinear_rhs(f: SpectralField) -> SpectralField:
    """``-P div(u (x) u)``, pseudo-spectral with 2/3-rule dealiasing before the
    products and after the transform back."""
    g = f.grid
    div = _divergence_half(f, _stress_half(f))
    div *= g.dealias_half
    div = _project(div, g.kvec_half, g.inv_k2_half)
    out = g.half_to_full(-div)
    if not np.all(np.isfinite(out)):
        raise BlowUpError("non-finite nonlinear term")
    return SpectralField(g, out)


@dataclass(frozen=True)
class RhsTerms:
    viscous: SpectralField
    coriolis: SpectralField
    nonlinear: SpectralField
    total: SpectralField


def full_rhs(f: SpectralField, cfg, linear_only: bool | None = None) -> RhsTerms:
    """Split right-hand side for viscosity ``cfg.nu`` and rotation ``cfg.omega``.

    ``linear_only`` defaults to ``cfg.linear_only``; when set, the nonlinear
    term is reported as zero and left out of the total.
    """
    if linear_only is None:
        linear_only = getattr(cfg, "linear_only", False)
    g = f.grid
    visc = f.with_coeffs(-cfg.nu * g.k2 * f.coeffs)
    cor = coriolis_rhs(f, cfg.omega)
    nl = SpectralField.zeros(g) if linear_only else nonlinear_rhs(f)
    total = f.with_coeffs(visc.coeffs + cor.coeffs + nl.coeffs)
    if not total.is_finite():
        raise BlowUpError("non-finite right-hand side")
    return RhsTerms(visc, cor, nl, total)


def recover_pressure(f: SpectralField, omega: float) -> np.ndarray:
    """Pressure coefficients ``p_hat_k = i k.g_hat_k / |k|^2`` where ``g`` is
    ``(u.grad)u + Omega e3 x u`` (advection taken in divergence form).

    Returns a complex array of shape ``(n, n, n)`` with ``p_hat_0 = 0``.
    """
    g = f.grid
    adv = g.half_to_full(_divergence_half(f, _stress_half(f)))
    gh = adv + omega * e3_cross(f.coeffs)
    return 1j * np.einsum("i...,i...->...", g.kvec, gh) * g.inv_k2


def pressure_gradient(grid, p_hat: np.ndarray) -> np.ndarray:
    return 1j * grid.kvec * p_hat


def advection_plus_coriolis(f: SpectralField, omega: float) -> np.ndarray:
    """Unprojected ``(u.grad)u + Omega e3 x u`` coefficients (diagnostic)."""
    g = f.grid
    return g.half_to_full(_divergence_half(f, _stress_half(f))) + omega * e3_cross(f.coeffs)


def coriolis_neutrality_residual(f: SpectralField, omega: float) -> float:
    """``|Re sum_k Omega (e3 x u_hat_k) . conj(u_hat_k)|``; zero in exact arithmetic."""
    c = f.coeffs
    return float(abs(omega * np.sum((e3_cross(c) * np.conj(c)).real)))
