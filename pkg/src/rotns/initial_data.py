"""Initial data generators and spectral surgery on fields."""
from __future__ import annotations

import numpy as np

from .spectral import Grid, SpectralField, chi_norm

# Continuum smallness threshold is (2 pi)^3 nu with the transform
# f_hat(xi) = int exp(-i x.xi) f(x) dx; the lattice series has convolution
# constant 1, which maps it to nu.
CONVENTION_NOTE = "torus convolution constant = 1; paper threshold (2π)³ν ↦ ν"


def smallness_threshold(nu: float) -> float:
    """Data-size threshold of the a priori estimate in the lattice convention."""
    return float(nu)


def continuum_threshold(nu: float) -> float:
    """The same threshold for the whole-space transform, ``(2 pi)^3 nu``."""
    return float((2 * np.pi) ** 3 * nu)


def taylor_green(grid: Grid, A: float = 1.0) -> SpectralField:
    """``A (sin x cos y cos z, -cos x sin y cos z, 0)`` (coordinates scaled to the box).

    Eight modes with every ``|k_i| = 1``:
    ``u1_hat = -i A sx / 8`` and ``u2_hat = i A sy / 8`` at ``(sx, sy, sz)``.
    """
    n = grid.n
    c = np.zeros((3, n, n, n), dtype=complex)
    for sx in (1, -1):
        for sy in (1, -1):
            for sz in (1, -1):
                idx = (sx % n, sy % n, sz % n)
                c[(0,) + idx] = -1j * A * sx / 8
                c[(1,) + idx] = 1j * A * sy / 8
    return SpectralField(grid, c)


def single_mode(grid: Grid, k, amplitude) -> SpectralField:
    """Conjugate pair ``a exp(i k.x) + conj(a) exp(-i k.x)`` for an integer triple ``k``."""
    n = grid.n
    a = np.asarray(amplitude, dtype=complex)
    c = np.zeros((3, n, n, n), dtype=complex)
    kp = tuple(int(ki) % n for ki in k)
    km = tuple(-int(ki) % n for ki in k)
    if kp == km:
        raise ValueError("k must be nonzero")
    c[(slice(None),) + kp] = a
    c[(slice(None),) + km] = np.conj(a)
    return SpectralField(grid, c)


def _mode_rng(seed: int, k) -> np.random.Generator:
    # counter-based stream keyed by (seed, k): independent of grid size and draw order
    code = ((int(k[0]) + 2**20) << 42) | ((int(k[1]) + 2**20) << 21) | (int(k[2]) + 2**20)
    return np.random.Generator(np.random.Philox(key=np.array([seed % 2**64, code], dtype=np.uint64)))


def random_solenoidal(grid: Grid, kmax: float, spectral_exponent: float = 1.0, seed: int = 0) -> SpectralField:
    """Random real divergence-free field on ``0 < |k| <= kmax`` (dealiased modes only)
    with ``|u_hat_k| = |k|^-spectral_exponent`` and random polarisation and phase."""
    if kmax < grid.scale:
        raise ValueError("kmax is below the first shell")
    n = grid.n
    c = np.zeros((3, n, n, n), dtype=complex)
    lat = grid.int_lattice
    active = grid.dealias_mask & (grid.kmag <= kmax * (1 + 1e-12)) & (grid.k2_int > 0)
    for idx in zip(*np.nonzero(active)):
        k = lat[(slice(None),) + idx]
        # canonical half: first nonzero component positive
        nz = k[np.nonzero(k)[0][0]]
        if nz < 0:
            continue
        g = _mode_rng(seed, k).standard_normal(6)
        v = g[:3] + 1j * g[3:]
        kv = grid.kvec[(slice(None),) + idx]
        v = v - kv * (kv @ v) / (kv @ kv)
        v *= grid.kmag[idx] ** (-spectral_exponent) / np.linalg.norm(v)
        c[(slice(None),) + idx] = v
        c[(slice(None),) + tuple(-k % n)] = np.conj(v)
    return SpectralField(grid, c)


def scale_to_chi(f: SpectralField, target: float) -> SpectralField:
    """Rescale so that ``chi_norm(f, -1) == target``."""
    cur = chi_norm(f, -1)
    if cur == 0:
        raise ValueError("cannot rescale the zero field")
    if cur == target:
        return f
    return f * (target / cur)


def truncate_R(f: SpectralField, R: float) -> SpectralField:
    """Keep modes with ``|k| <= R`` and ``|u_hat_k| <= R``.

    The amplitude cut uses the lattice coefficient, so unlike the wavenumber
    cut it does not commute with rescaling the field.
    """
    if not R > 0:
        raise ValueError("R must be positive")
    keep = (f.grid.kmag <= R * (1 + 1e-12)) & (f.amplitude <= R)
    return f.with_coeffs(f.coeffs * keep)


def split_lowhigh(f: SpectralField, R0: float) -> tuple[SpectralField, SpectralField]:
    """``(v0, w0)`` with ``v0`` on ``|k| <= R0`` and ``w0`` on ``|k| > R0``; ``v0 + w0 == f``."""
    low = f.grid.kmag <= R0 * (1 + 1e-12)
    v0 = f.with_coeffs(np.where(low, f.coeffs, 0))
    w0 = f.with_coeffs(np.where(low, 0, f.coeffs))
    return v0, w0


def high_tail(f: SpectralField, R: float) -> float:
    """``sum_{|k| > R} |k|^-1 |u_hat_k|``."""
    return chi_norm(split_lowhigh(f, R)[1], -1)


def choose_R0(f: SpectralField, eps: float) -> float:
    """Smallest shell radius whose high part has ``chi^-1 < eps / 2``."""
    g = f.grid
    amp = f.amplitude
    w = g.kpow(-1) * amp
    shells = g.shells
    # tail beyond each shell, by reverse cumulative sums over shells
    k2i = g.k2_int[g.representable]
    per_shell = np.zeros(len(shells))
    np.add.at(per_shell, np.searchsorted(np.unique(k2i), k2i), w[g.representable])
    tails = np.concatenate([np.cumsum(per_shell[::-1])[::-1][1:], [0.0]])
    hit = np.nonzero(tails < eps / 2)[0]
    return float(shells[hit[0]])
