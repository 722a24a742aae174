"""Fixed-step integrating-factor Runge-Kutta integration of the projected system."""
from __future__ import annotations

import math
import warnings
from dataclasses import asdict, dataclass, field
from functools import lru_cache

import numpy as np

from .dynamics import BlowUpError, coriolis_rhs, nonlinear_rhs
from .spectral import Grid, NormReport, SpectralField, norm_report, sup_norm, chi_norm

SCHEMES = ("IF-RK4", "EXACT-LINEAR-RK4")


@dataclass(frozen=True)
class SolverConfig:
    """Physical and numerical parameters of one run.

    ``C0`` and ``C1`` are the constants of the local-existence horizon used by
    :func:`rotns.mild.contraction_horizon`; they are knobs, not known values.
    """

    nu: float = 1.0
    omega: float = 0.0
    dt: float = 1e-3
    T: float = 1.0
    scheme: str = "EXACT-LINEAR-RK4"
    s: float = 2.0
    observer_stride: int = 10
    C0: float = 1.0
    C1: float = 1.0
    linear_only: bool = False

    def __post_init__(self):
        if not self.nu > 0:
            raise ValueError(f"nu must be positive, got {self.nu}")
        if not self.dt > 0:
            raise ValueError(f"dt must be positive, got {self.dt}")
        if not self.T >= 0:
            raise ValueError(f"T must be nonnegative, got {self.T}")
        if self.T > 0 and self.dt > self.T:
            raise ValueError(f"dt={self.dt} exceeds the horizon T={self.T}")
        if self.scheme not in SCHEMES:
            raise ValueError(f"scheme must be one of {SCHEMES}, got {self.scheme!r}")
        if int(self.observer_stride) != self.observer_stride or self.observer_stride < 1:
            raise ValueError("observer_stride must be a positive integer")
        if self.s < 0:
            raise ValueError("s must be nonnegative")
        if not (math.isfinite(self.omega) and self.C0 > 0 and self.C1 > 0):
            raise ValueError("omega must be finite and C0, C1 positive")
        object.__setattr__(self, "observer_stride", int(self.observer_stride))
        if self.scheme == "IF-RK4" and abs(self.omega) * self.dt > 0.5:
            warnings.warn(
                f"IF-RK4 treats rotation explicitly; |omega|*dt = {abs(self.omega) * self.dt:g} > 0.5",
                stacklevel=3,
            )

    def replace(self, **changes) -> "SolverConfig":
        return SolverConfig(**{**asdict(self), **changes})

    @property
    def n_steps(self) -> int:
        if self.T == 0:
            return 0
        return max(1, math.ceil(self.T / self.dt - 1e-9))

    @property
    def step_size(self) -> float:
        """Step actually taken: ``T / n_steps`` (never larger than ``dt``)."""
        return self.T / self.n_steps if self.n_steps else self.dt


# -- linear propagators ------------------------------------------------------------

_S = np.array([[0.0, -1.0, 0.0], [1.0, 0.0, 0.0], [0.0, 0.0, 0.0]])


def coriolis_generator(grid: Grid, omega: float) -> np.ndarray:
    """Per-mode matrix ``-Omega P_k S P_k``, shape ``(n, n, n, 3, 3)``."""
    khat = grid.kvec * np.sqrt(grid.inv_k2)
    P = np.eye(3) - np.einsum("i...,j...->...ij", khat, khat)
    return -omega * P @ _S @ P


def expm_batched(A: np.ndarray, degree: int = 18) -> np.ndarray:
    """Matrix exponential of a stack of small matrices by scaling and squaring
    a truncated Taylor series."""
    norm = np.max(np.sum(np.abs(A), axis=-2), initial=0.0)
    squarings = max(0, int(math.ceil(math.log2(norm)))) if norm > 1 else 0
    X = A / 2.0**squarings
    eye = np.broadcast_to(np.eye(A.shape[-1]), A.shape)
    # Horner: I + X(I + X/2(I + X/3(...)))
    E = eye.copy()
    for j in range(degree, 0, -1):
        E = eye + (X @ E) / j
    for _ in range(squarings):
        E = E @ E
    return E


@lru_cache(maxsize=32)
def _exact_linear_matrix(grid: Grid, nu: float, omega: float, tau: float) -> np.ndarray:
    """``exp(tau (-nu |k|^2 I - Omega P S P))`` stored as ``(3, 3, n, n, n)``."""
    rot = expm_batched(tau * coriolis_generator(grid, omega))
    E = np.exp(-nu * tau * grid.k2)[..., None, None] * rot
    E = np.ascontiguousarray(np.moveaxis(E, (-2, -1), (0, 1)))
    E.flags.writeable = False
    return E


def exact_linear_propagator(grid: Grid, nu: float, omega: float, tau: float) -> np.ndarray:
    """Per-mode 3x3 propagator of the heat + projected Coriolis flow, ``(n, n, n, 3, 3)``."""
    return np.moveaxis(_exact_linear_matrix(grid, float(nu), float(omega), float(tau)), (0, 1), (-2, -1))


@lru_cache(maxsize=32)
def _heat_factor(grid: Grid, nu: float, tau: float) -> np.ndarray:
    out = np.exp(-nu * tau * grid.k2)
    out.flags.writeable = False
    return out


class _Propagator:
    def __init__(self, grid: Grid, cfg: SolverConfig, tau: float):
        self.exact = cfg.scheme == "EXACT-LINEAR-RK4"
        if self.exact:
            self.M = _exact_linear_matrix(grid, float(cfg.nu), float(cfg.omega), float(tau))
        else:
            self.e = _heat_factor(grid, float(cfg.nu), float(tau))

    def __call__(self, c: np.ndarray) -> np.ndarray:
        if not self.exact:
            return self.e * c
        M = self.M
        out = np.empty_like(c)
        for i in range(3):
            np.multiply(M[i, 0], c[0], out=out[i])
            out[i] += M[i, 1] * c[1]
            out[i] += M[i, 2] * c[2]
        return out


def _explicit_part(cfg: SolverConfig):
    """Terms advanced by Runge-Kutta; the rest sits in the propagator."""
    rotate = cfg.scheme == "IF-RK4" and cfg.omega != 0

    def N(c: np.ndarray, grid: Grid) -> np.ndarray | None:
        f = SpectralField(grid, c)
        out = None
        if not cfg.linear_only:
            out = np.array(nonlinear_rhs(f).coeffs)
        if rotate:
            cor = coriolis_rhs(f, cfg.omega).coeffs
            out = cor if out is None else out + cor
        return out

    return N


def _rk4_step(c: np.ndarray, grid: Grid, h: float, E, Eh, N) -> np.ndarray:
    """Lawson (integrating-factor) RK4."""
    a = N(c, grid)
    if a is None:
        return E(c)
    ch = Eh(c)
    ec = E(c)
    b = N(ch + Eh((0.5 * h) * a), grid)
    cc = N(ch + (0.5 * h) * b, grid)
    d = N(ec + h * Eh(cc), grid)
    return ec + (h / 6.0) * (E(a) + 2.0 * Eh(b + cc) + d)


def step(f: SpectralField, cfg: SolverConfig, dt: float | None = None) -> SpectralField:
    """Advance ``f`` by one step of size ``dt`` (default ``cfg.dt``)."""
    h = cfg.dt if dt is None else dt
    E = _Propagator(f.grid, cfg, h)
    Eh = _Propagator(f.grid, cfg, 0.5 * h)
    out = _rk4_step(np.asarray(f.coeffs), f.grid, h, E, Eh, _explicit_part(cfg))
    if not np.all(np.isfinite(out)):
        raise BlowUpError("non-finite state after step")
    return SpectralField(f.grid, out)


@dataclass
class Trajectory:
    """Observed states of one run.

    ``snapshots[j]`` may be ``None`` for interior times when the run was made
    with ``keep_snapshots=False``; the first and last are always kept.
    """

    config: SolverConfig
    times: np.ndarray
    snapshots: list
    reports: list
    steps_taken: int = 0
    meta: dict = field(default_factory=dict)

    def series(self, name: str) -> np.ndarray:
        return np.array([getattr(r, name) for r in self.reports])

    def __len__(self) -> int:
        return len(self.times)

    @property
    def grid(self) -> Grid:
        return self.snapshots[0].grid

    def field_at(self, j: int) -> SpectralField:
        f = self.snapshots[j]
        if f is None:
            raise ValueError(f"snapshot {j} was not kept; rerun with keep_snapshots=True")
        return f


def integrate(u0: SpectralField, cfg: SolverConfig, *, keep_snapshots: bool = True) -> Trajectory:
    """Run from ``u0`` to ``cfg.T`` and observe every ``cfg.observer_stride`` steps
    (and at ``T``).  A non-finite state raises :class:`BlowUpError` whose
    ``partial`` attribute holds the trajectory up to the last good state."""
    grid = u0.grid
    n_steps = cfg.n_steps
    h = cfg.step_size
    times = [0.0]
    snaps = [u0]
    reports = [norm_report(u0, cfg.s)]
    if n_steps:
        E = _Propagator(grid, cfg, h)
        Eh = _Propagator(grid, cfg, 0.5 * h)
        N = _explicit_part(cfg)
    c = np.asarray(u0.coeffs)
    for j in range(1, n_steps + 1):
        try:
            with np.errstate(over="ignore", invalid="ignore"):
                c = _rk4_step(c, grid, h, E, Eh, N)
            finite = bool(np.all(np.isfinite(c)))
        except BlowUpError:
            finite = False
        if not finite:
            partial = Trajectory(cfg, np.array(times), snaps, reports, j - 1, {"blowup_step": j})
            raise BlowUpError(f"non-finite state at step {j} (t = {j * h:g})", partial=partial)
        if j % cfg.observer_stride == 0 or j == n_steps:
            f = SpectralField(grid, c)
            times.append(j * h if j < n_steps else cfg.T)
            reports.append(norm_report(f, cfg.s))
            snaps.append(f if keep_snapshots or j == n_steps else None)
    return Trajectory(cfg, np.array(times), snaps, reports, n_steps)


def cfl_suggest(f: SpectralField, cfg: SolverConfig) -> float:
    """Advisory step bound ``min(0.5/|Omega|, 0.5 h/||u||_inf, 0.5/chi^1)``, capped at ``cfg.T``."""
    bounds = [cfg.T if cfg.T > 0 else math.inf]
    if cfg.omega != 0:
        bounds.append(0.5 / abs(cfg.omega))
    umax = sup_norm(f)
    if umax > 0:
        bounds.append(0.5 * f.grid.spacing / umax)
    c1 = chi_norm(f, 1)
    if c1 > 0:
        bounds.append(0.5 / c1)
    return float(min(bounds))
