"""Fourier-coefficient vector fields on the periodic box and the norms used to
measure them.

A field is stored as the full complex coefficient array ``coeffs[i, kx, ky, kz]``
in FFT ordering, with the series convention

    u(x) = sum_k  u_hat_k exp(i k.x),      u_hat_k = N^-3 sum_x u(x) exp(-i k.x)

so products of fields have convolution constant 1 on the lattice.  Nyquist
planes (``|k_i| = n/2``) are always held at zero: odd-order operators cannot be
applied to them without breaking Hermitian symmetry.
"""
from __future__ import annotations

from dataclasses import dataclass, field
from functools import cached_property
from typing import NamedTuple

import numpy as np
import scipy.fft as sfft

_AXES = (-3, -2, -1)


@dataclass(frozen=True)
class Grid:
    """Uniform periodic lattice of ``n**3`` points on a cube of side ``period``."""

    n: int
    period: float = 2.0 * np.pi
    dealias_fraction: float = 2.0 / 3.0

    def __post_init__(self):
        if int(self.n) != self.n or self.n < 8 or self.n % 2:
            raise ValueError(f"n must be an even integer >= 8, got {self.n}")
        if not self.period > 0:
            raise ValueError(f"period must be positive, got {self.period}")
        if not 0.0 < self.dealias_fraction <= 1.0:
            raise ValueError(f"dealias_fraction must lie in (0, 1], got {self.dealias_fraction}")
        object.__setattr__(self, "n", int(self.n))
        object.__setattr__(self, "period", float(self.period))
        object.__setattr__(self, "dealias_fraction", float(self.dealias_fraction))

    # -- lattice geometry ---------------------------------------------------

    @property
    def scale(self) -> float:
        """Wavenumber of the fundamental mode, ``2 pi / period``."""
        return 2.0 * np.pi / self.period

    @property
    def spacing(self) -> float:
        return self.period / self.n

    @property
    def half(self) -> int:
        return self.n // 2 + 1

    @cached_property
    def int_k(self) -> np.ndarray:
        """Integer wavenumbers along one axis, FFT ordering."""
        return np.fft.fftfreq(self.n, 1.0 / self.n).astype(np.int64)

    @cached_property
    def int_lattice(self) -> np.ndarray:
        """Integer triples, shape ``(3, n, n, n)``."""
        return np.stack(np.meshgrid(self.int_k, self.int_k, self.int_k, indexing="ij"))

    @cached_property
    def k2_int(self) -> np.ndarray:
        return np.sum(self.int_lattice**2, axis=0)

    @cached_property
    def kvec(self) -> np.ndarray:
        """Physical wavevectors, shape ``(3, n, n, n)``."""
        return self.scale * self.int_lattice.astype(float)

    @cached_property
    def k2(self) -> np.ndarray:
        return self.scale**2 * self.k2_int.astype(float)

    @cached_property
    def kmag(self) -> np.ndarray:
        return np.sqrt(self.k2)

    @cached_property
    def inv_k2(self) -> np.ndarray:
        out = np.zeros_like(self.k2)
        nz = self.k2_int > 0
        out[nz] = 1.0 / self.k2[nz]
        return out

    @cached_property
    def nyquist(self) -> np.ndarray:
        return np.any(np.abs(self.int_lattice) == self.n // 2, axis=0)

    @cached_property
    def representable(self) -> np.ndarray:
        """Nonzero, non-Nyquist lattice points: where a valid field may live."""
        return (self.k2_int > 0) & ~self.nyquist

    @property
    def dealias_cutoff(self) -> float:
        return self.dealias_fraction * self.n / 2

    @cached_property
    def dealias_mask(self) -> np.ndarray:
        keep = np.all(np.abs(self.int_lattice) <= self.dealias_cutoff, axis=0)
        return keep & ~self.nyquist

    @cached_property
    def neg_index(self) -> np.ndarray:
        """Index of ``-k`` along one axis."""
        return (-np.arange(self.n)) % self.n

    def kpow(self, m: float) -> np.ndarray:
        """``|k|**m`` with the k = 0 entry set to zero."""
        out = np.zeros_like(self.kmag)
        nz = self.k2_int > 0
        out[nz] = self.kmag[nz] ** m
        return out

    @cached_property
    def shells(self) -> np.ndarray:
        """Sorted distinct ``|k|`` over the representable lattice."""
        return self.scale * np.sqrt(np.unique(self.k2_int[self.representable]).astype(float))

    def snap_to_shell(self, R: float) -> float:
        """Largest shell radius ``<= R`` (0.0 if ``R`` is below the first shell)."""
        idx = np.searchsorted(self.shells, R * (1 + 1e-12), side="right")
        return float(self.shells[idx - 1]) if idx else 0.0

    # -- half-spectrum helpers (real transforms) ------------------------------

    @cached_property
    def kvec_half(self) -> np.ndarray:
        return self.kvec[..., : self.half]

    @cached_property
    def inv_k2_half(self) -> np.ndarray:
        return self.inv_k2[..., : self.half]

    @cached_property
    def dealias_half(self) -> np.ndarray:
        return self.dealias_mask[..., : self.half]

    def physical_points(self) -> np.ndarray:
        x = np.arange(self.n) * self.spacing
        return np.stack(np.meshgrid(x, x, x, indexing="ij"))

    def to_physical(self, coeffs: np.ndarray) -> np.ndarray:
        """Evaluate a Hermitian coefficient array on the grid (real output)."""
        return sfft.irfftn(coeffs[..., : self.half], s=(self.n,) * 3, axes=_AXES, norm="forward")

    def to_half(self, values: np.ndarray) -> np.ndarray:
        return sfft.rfftn(values, axes=_AXES, norm="forward")

    def half_to_full(self, half: np.ndarray) -> np.ndarray:
        """Rebuild the full coefficient array from its ``kz >= 0`` half."""
        n, h = self.n, self.half
        full = np.empty(half.shape[:-1] + (n,), dtype=complex)
        full[..., :h] = half
        # kz = n-l for l in h..n-1 comes from -k of the stored half
        src = half[..., h - 2 : 0 : -1]
        src = np.take(np.take(src, self.neg_index, axis=-3), self.neg_index, axis=-2)
        full[..., h:] = np.conj(src)
        return full

    def from_physical(self, values: np.ndarray) -> np.ndarray:
        out = sfft.fftn(np.asarray(values, dtype=float), axes=_AXES, norm="forward")
        out[..., self.nyquist] = 0.0
        return out

    def conj_reflect(self, coeffs: np.ndarray) -> np.ndarray:
        """``conj(c[-k])`` for every k; equals ``c`` for a real field."""
        idx = self.neg_index
        return np.conj(coeffs[..., idx, :, :][..., idx, :][..., idx])


@dataclass(frozen=True, eq=False)
class SpectralField:
    """Three-component vector field held by its Fourier coefficients.

    ``coeffs`` has shape ``(3, n, n, n)``.  The array is marked read-only on
    construction; build a new field instead of mutating.
    """

    grid: Grid
    coeffs: np.ndarray = field(repr=False)

    def __post_init__(self):
        c = np.asarray(self.coeffs, dtype=complex)
        n = self.grid.n
        if c.shape != (3, n, n, n):
            raise ValueError(f"coeffs must have shape (3, {n}, {n}, {n}), got {c.shape}")
        c.flags.writeable = False
        object.__setattr__(self, "coeffs", c)

    @classmethod
    def zeros(cls, grid: Grid) -> "SpectralField":
        return cls(grid, np.zeros((3, grid.n, grid.n, grid.n), dtype=complex))

    @classmethod
    def from_physical(cls, grid: Grid, values: np.ndarray) -> "SpectralField":
        """Transform real grid values of shape ``(3, n, n, n)``; Nyquist planes are dropped."""
        return cls(grid, grid.from_physical(values))

    def physical(self) -> np.ndarray:
        return self.grid.to_physical(self.coeffs)

    def with_coeffs(self, coeffs: np.ndarray) -> "SpectralField":
        return SpectralField(self.grid, coeffs)

    def _check_grid(self, other: "SpectralField"):
        if other.grid != self.grid:
            raise ValueError("fields live on different grids")

    def __add__(self, other: "SpectralField") -> "SpectralField":
        self._check_grid(other)
        return self.with_coeffs(self.coeffs + other.coeffs)

    def __sub__(self, other: "SpectralField") -> "SpectralField":
        self._check_grid(other)
        return self.with_coeffs(self.coeffs - other.coeffs)

    def __mul__(self, c: float) -> "SpectralField":
        return self.with_coeffs(c * self.coeffs)

    __rmul__ = __mul__

    def __neg__(self) -> "SpectralField":
        return self.with_coeffs(-self.coeffs)

    @property
    def amplitude(self) -> np.ndarray:
        """Per-mode magnitude ``|u_hat_k|`` (Euclidean over components)."""
        a = np.abs(self.coeffs)
        return np.hypot(np.hypot(a[0], a[1]), a[2])

    def mean(self) -> np.ndarray:
        return np.array(self.coeffs[:, 0, 0, 0])

    def hermitian_defect(self) -> float:
        """Relative size of ``u_hat_{-k} - conj(u_hat_k)``."""
        scale = np.max(np.abs(self.coeffs), initial=0.0)
        if scale == 0.0:
            return 0.0
        return float(np.max(np.abs(self.coeffs - self.grid.conj_reflect(self.coeffs))) / scale)

    def divergence_defect(self) -> float:
        """max over k != 0 of ``|k.u_hat_k| / |k|``, relative to the largest ``|u_hat_k|``."""
        g = self.grid
        scale = np.max(self.amplitude, initial=0.0)
        if scale == 0.0:
            return 0.0
        kdot = np.abs(np.einsum("i...,i...->...", g.kvec, self.coeffs))
        nz = g.k2_int > 0
        return float(np.max(kdot[nz] / g.kmag[nz]) / scale)

    def is_finite(self) -> bool:
        return bool(np.all(np.isfinite(self.coeffs)))

    def validate(self, *, tol: float = 1e-13, solenoidal: bool = False) -> "SpectralField":
        """Raise ``ValueError`` unless the field is real, mean-free and Nyquist-free."""
        if not self.is_finite():
            raise ValueError("field has non-finite coefficients")
        if np.any(self.mean() != 0):
            raise ValueError("field is not mean-free (k = 0 coefficient nonzero)")
        if np.any(self.coeffs[:, self.grid.nyquist] != 0):
            raise ValueError("field has energy on the Nyquist planes")
        if self.hermitian_defect() > tol:
            raise ValueError("field is not Hermitian (not real in physical space)")
        if solenoidal and self.divergence_defect() > tol:
            raise ValueError("field is not divergence-free")
        return self


def project_leray(f: SpectralField) -> SpectralField:
    """Orthogonal projection onto divergence-free fields, mode by mode:
    ``u_hat -> u_hat - (k.u_hat) k / |k|^2``.  The k = 0 mode passes through."""
    return f.with_coeffs(_project(f.coeffs, f.grid.kvec, f.grid.inv_k2))


def _project(c: np.ndarray, kvec: np.ndarray, inv_k2: np.ndarray) -> np.ndarray:
    kdot = np.einsum("i...,i...->...", kvec, c)
    return c - kvec * (kdot * inv_k2)


def dealias(f: SpectralField) -> SpectralField:
    """Zero every mode with some ``|k_i| > dealias_fraction * n / 2``."""
    return f.with_coeffs(f.coeffs * f.grid.dealias_mask)


def chi_norm(f: SpectralField, m: float) -> float:
    """Lattice analogue of the chi^m norm: ``sum_{k != 0} |k|^m |u_hat_k|``."""
    amp = f.amplitude
    if m < 0 and amp[0, 0, 0] != 0:
        raise ValueError("chi^m with m < 0 requires a mean-free field")
    return float(np.sum(f.grid.kpow(m) * amp))


class SobolevNorms(NamedTuple):
    l2: float
    hs_hom: float
    hs_full: float


def sobolev_norms(f: SpectralField, s: float) -> SobolevNorms:
    """L2, homogeneous and inhomogeneous H^s norms with the Parseval factor
    ``period**1.5`` (so ``l2`` is the true L2 norm over the box)."""
    if s < 0:
        raise ValueError("s must be nonnegative")
    g = f.grid
    a2 = f.amplitude**2
    vol = g.period**1.5
    l2 = vol * np.sqrt(np.sum(a2))
    hom = vol * np.sqrt(np.sum(g.kpow(2 * s) * a2)) if s > 0 else l2
    full = vol * np.sqrt(np.sum((1.0 + g.k2) ** s * a2))
    return SobolevNorms(float(l2), float(hom), float(full))


def velocity_gradient(f: SpectralField) -> np.ndarray:
    """Jacobian ``d_j u_i`` on the grid, shape ``(3, 3, n, n, n)``."""
    g = f.grid
    half = f.coeffs[:, None, ..., : g.half] * (1j * g.kvec_half)[None, :]
    return sfft.irfftn(half, s=(g.n,) * 3, axes=_AXES, norm="forward")


def grad_inf(f: SpectralField) -> float:
    """Max over grid points of the Frobenius norm of the velocity gradient."""
    jac = velocity_gradient(f)
    return float(np.sqrt(np.max(np.sum(jac**2, axis=(0, 1)))))


def sup_norm(f: SpectralField) -> float:
    """Max over grid points of ``|u(x)|``."""
    u = f.physical()
    return float(np.sqrt(np.max(np.sum(u**2, axis=0))))


@dataclass(frozen=True)
class NormReport:
    """All norms of one field; ``energy = l2**2 / 2`` and ``grad_l2 = ||grad u||_L2``."""

    chi_m1: float
    chi_0: float
    chi_1: float
    l2: float
    hs_hom: float
    hs_full: float
    grad_inf: float
    grad_l2: float
    energy: float
    s: float


def norm_report(f: SpectralField, s: float = 2.0) -> NormReport:
    g = f.grid
    amp = f.amplitude
    if amp[0, 0, 0] != 0:
        raise ValueError("norm_report requires a mean-free field")
    sob = sobolev_norms(f, s)
    grad_l2 = g.period**1.5 * np.sqrt(np.sum(g.k2 * amp**2))
    return NormReport(
        chi_m1=float(np.sum(g.kpow(-1) * amp)),
        chi_0=float(np.sum(amp) - amp[0, 0, 0]),
        chi_1=float(np.sum(g.kmag * amp)),
        l2=sob.l2,
        hs_hom=sob.hs_hom,
        hs_full=sob.hs_full,
        grad_inf=grad_inf(f),
        grad_l2=float(grad_l2),
        energy=0.5 * sob.l2**2,
        s=float(s),
    )


# -- interpolation inequalities ----------------------------------------------------


@dataclass(frozen=True)
class ShellSums:
    radii: np.ndarray
    low: np.ndarray  # sum_{0<|k|<=R} |k|^-2
    tail: np.ndarray  # sum_{|k|>R} |k|^(-2-2s), representable lattice only
    omitted_tail: float  # continuum estimate of the lattice sum beyond the box


def shell_sums(grid: Grid, s: float) -> ShellSums:
    k2i, counts = np.unique(grid.k2_int[grid.representable], return_counts=True)
    radii = grid.scale * np.sqrt(k2i.astype(float))
    low = np.cumsum(counts * radii**-2.0)
    w = counts * radii ** (-2.0 - 2.0 * s)
    tail = np.concatenate([np.cumsum(w[::-1])[::-1][1:], [0.0]])
    K = grid.scale * grid.n / 2
    omitted = (grid.period / (2 * np.pi)) ** 3 * 4 * np.pi * K ** (1 - 2 * s) / (2 * s - 1)
    return ShellSums(radii, low, tail, float(omitted))


@dataclass(frozen=True)
class Lemma1Report:
    s: float
    chi_m1: float
    bound_1: float
    best_R: float
    tail_truncated: bool
    chi_0: float
    bound_2: float
    grad_inf: float
    chi_1: float
    violations: tuple

    @property
    def ok(self) -> bool:
        return not self.violations


def lemma1_check(f: SpectralField, s: float = 1.0, *, rtol: float = 1e-12) -> Lemma1Report:
    """Evaluate the three chi-space inequalities on ``f``.

    (1) ``chi^-1 <= min_R [S2(R)^1/2 E + T(R)^1/2 H_s]`` with exact lattice
        shell sums (Cauchy-Schwarz inside and outside the ball of radius R);
    (2) ``chi^0 <= (chi^-1 chi^1)^1/2``;
    (3) ``||grad u||_inf <= chi^1``.
    """
    if not s > 0.5:
        raise ValueError("s must exceed 1/2")
    g = f.grid
    amp = f.amplitude
    chi_m1 = chi_norm(f, -1)
    chi_0 = chi_norm(f, 0)
    chi_1 = chi_norm(f, 1)
    E = np.sqrt(np.sum(amp**2))
    H = np.sqrt(np.sum(g.kpow(2 * s) * amp**2))
    sums = shell_sums(g, s)
    bounds = np.sqrt(sums.low) * E + np.sqrt(sums.tail) * H
    i = int(np.argmin(bounds))
    gi = grad_inf(f)
    b2 = np.sqrt(chi_m1 * chi_1)
    violations = []
    if chi_m1 > bounds[i] * (1 + rtol):
        violations.append(1)
    if chi_0 > b2 * (1 + rtol):
        violations.append(2)
    if gi > chi_1 * (1 + rtol):
        violations.append(3)
    truncated = sums.omitted_tail > 1e-6 * sums.tail[i] if sums.tail[i] > 0 else sums.omitted_tail > 0
    return Lemma1Report(
        s=float(s),
        chi_m1=chi_m1,
        bound_1=float(bounds[i]),
        best_R=float(sums.radii[i]),
        tail_truncated=bool(truncated),
        chi_0=chi_0,
        bound_2=float(b2),
        grad_inf=gi,
        chi_1=chi_1,
        violations=tuple(violations),
    )
