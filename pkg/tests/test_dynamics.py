import numpy as np
import pytest
from support import random_field

from rotns.dynamics import (
    BlowUpError,
    advection_plus_coriolis,
    coriolis_neutrality_residual,
    coriolis_rhs,
    e3_cross,
    full_rhs,
    nonlinear_rhs,
    pressure_gradient,
    recover_pressure,
)
from rotns.initial_data import single_mode, taylor_green
from rotns.spectral import Grid, SpectralField, chi_norm, project_leray
from rotns.timestepper import SolverConfig


def dense_nonlinear(f: SpectralField) -> np.ndarray:
    """-P div(u (x) u) by summing every triad p + q = k over the dealiased lattice."""
    g = f.grid
    n = g.n
    lat = g.int_lattice.reshape(3, -1).T
    keep = g.dealias_mask.reshape(-1)
    c = (f.coeffs * g.dealias_mask).reshape(3, -1)
    out = np.zeros((3, n, n, n), complex)
    for a in np.nonzero(keep & (np.abs(c).sum(0) > 0))[0]:
        p = lat[a]
        for b in np.nonzero(keep & (np.abs(c).sum(0) > 0))[0]:
            k = p + lat[b]
            if np.any(np.abs(k) > g.dealias_cutoff):
                continue
            kv = k * g.scale
            idx = tuple(k % n)
            # (u_j d_j u_i)^ in divergence form: i k_j u_i(p) u_j(q)
            out[(slice(None),) + idx] += 1j * c[:, a] * (kv @ c[:, b])
    return -project_leray(SpectralField(g, out)).coeffs


class TestCoriolis:
    def test_zero_rotation(self, grid8):
        f = taylor_green(grid8)
        assert np.all(coriolis_rhs(f, 0.0).coeffs == 0)

    def test_vertical_mode(self, grid8):
        c = np.zeros((3, 8, 8, 8), complex)
        c[:, 0, 0, 1] = (1, 1j, 0)
        assert np.allclose(e3_cross(c)[:, 0, 0, 1], (-1j, 1, 0))
        out = coriolis_rhs(SpectralField(grid8, c), 1.0).coeffs[:, 0, 0, 1]
        assert np.allclose(out, (1j, -1, 0), atol=1e-16)

    def test_neutral_on_random_fields(self, grid16):
        for i in range(100):
            f = random_field(grid16, 200 + i)
            scale = 100.0 * np.sum(f.amplitude**2)
            assert coriolis_neutrality_residual(f, 100.0) <= 1e-12 * scale
            work = np.sum((coriolis_rhs(f, 100.0).coeffs * np.conj(f.coeffs)).real)
            assert abs(work) <= 1e-12 * scale

    def test_residual_zero_without_rotation(self, grid8):
        assert coriolis_neutrality_residual(random_field(grid8, 1), 0.0) == 0.0

    def test_real_coefficients_exact(self, grid8):
        f = single_mode(grid8, (1, 1, 0), (1.0, -1.0, 0.5))
        assert coriolis_neutrality_residual(f, 7.0) == 0.0

    def test_output_solenoidal(self, grid16):
        out = coriolis_rhs(random_field(grid16, 4), 3.0)
        assert out.divergence_defect() < 1e-14


class TestNonlinear:
    def test_taylor_green_against_dense_oracle(self, grid8):
        f = taylor_green(grid8, 1.7)
        ref = dense_nonlinear(f)
        out = nonlinear_rhs(f).coeffs
        assert np.max(np.abs(out - ref)) <= 1e-10 * np.max(np.abs(ref))

    def test_random_against_dense_oracle(self, grid8):
        f = random_field(grid8, 9, kmax=3.5)
        ref = dense_nonlinear(f)
        out = nonlinear_rhs(f).coeffs
        assert np.max(np.abs(out - ref)) <= 1e-10 * np.max(np.abs(ref))

    @pytest.mark.parametrize("k", [(1, 0, 0), (1, 1, 0), (0, 1, 1), (1, -1, 1)])
    def test_single_pair_support(self, grid8, k):
        kv = np.array(k, float)
        v = np.cross(kv, [0.3, 1.0, 0.2]) * (0.4 + 0.9j)
        f = single_mode(grid8, k, v)
        out = nonlinear_rhs(f)
        ref = dense_nonlinear(f)
        assert np.max(np.abs(out.coeffs - ref)) <= 1e-12 * max(np.max(np.abs(ref)), 1.0)
        support = np.argwhere(out.amplitude > 1e-14)
        allowed = {tuple(np.array(k) * 2 % 8), tuple(-np.array(k) * 2 % 8)}
        assert {tuple(s) for s in support} <= allowed
        assert out.amplitude[0, 0, 0] == 0.0

    def test_zero(self, grid8):
        assert np.all(nonlinear_rhs(SpectralField.zeros(grid8)).coeffs == 0)

    def test_advective_form(self, grid16):
        # for solenoidal u, div(u u) = (u.grad)u
        f = random_field(grid16, 5, kmax=4.0)
        g = grid16
        u = f.physical()
        jac = np.fft.irfftn(
            f.coeffs[:, None, ..., : g.half] * (1j * g.kvec_half)[None], s=(16,) * 3, axes=(-3, -2, -1), norm="forward"
        )
        adv = np.einsum("j...,ij...->i...", u, jac)
        ref = -project_leray(SpectralField(g, g.from_physical(adv) * g.dealias_mask)).coeffs
        out = nonlinear_rhs(f).coeffs
        assert np.max(np.abs(out - ref)) <= 1e-12 * np.max(np.abs(ref))

    def test_energy_neutral(self, grid16):
        for i in range(20):
            f = random_field(grid16, 700 + i, exponent=i / 5)
            work = abs(np.sum((nonlinear_rhs(f).coeffs * np.conj(f.coeffs)).real))
            assert work <= 1e-10 * np.sum(f.amplitude**2) * chi_norm(f, 1)

    def test_output_valid(self, grid16):
        nonlinear_rhs(random_field(grid16, 6)).validate(tol=1e-12, solenoidal=True)

    def test_blowup_signalled(self, grid8):
        c = np.array(taylor_green(grid8).coeffs)
        c[:, 1, 1, 1] = np.nan
        with pytest.raises(BlowUpError):
            nonlinear_rhs(SpectralField(grid8, c))


class TestFullRhs:
    def test_inviscid_linear_is_zero(self, grid8):
        cfg = SolverConfig(nu=1.0, omega=0.0).replace(nu=1e-300)
        terms = full_rhs(taylor_green(grid8), cfg, linear_only=True)
        assert np.max(np.abs(terms.total.coeffs)) < 1e-290

    def test_viscous_shell(self, grid8):
        f = single_mode(grid8, (2, 0, 0), (0, 1.0, 0))
        terms = full_rhs(f, SolverConfig(nu=1.0), linear_only=True)
        assert np.array_equal(terms.viscous.coeffs, -4 * f.coeffs)

    def test_sum_of_parts(self, grid16):
        f = random_field(grid16, 7)
        t = full_rhs(f, SolverConfig(nu=0.3, omega=5.0))
        assert np.array_equal(t.total.coeffs, t.viscous.coeffs + t.coriolis.coeffs + t.nonlinear.coeffs)

    def test_linear_only_from_config(self, grid8):
        t = full_rhs(taylor_green(grid8), SolverConfig(linear_only=True))
        assert np.all(t.nonlinear.coeffs == 0)


class TestPressure:
    def test_zero(self, grid8):
        assert np.all(recover_pressure(SpectralField.zeros(grid8), 3.0) == 0)

    @pytest.mark.parametrize("k", [(1, 0, 0), (1, 2, 0)])
    def test_pair_support(self, grid8, k):
        kv = np.array(k, float)
        f = single_mode(grid8, k, np.cross(kv, [0, 0.5, 1.0]) * 1j)
        p = recover_pressure(f, 0.0)
        allowed = {tuple(np.array(k) * 2 % 8), tuple(-np.array(k) * 2 % 8)}
        assert {tuple(s) for s in np.argwhere(np.abs(p) > 1e-14)} <= allowed

    @pytest.mark.parametrize("omega", [0.0, 10.0])
    def test_residual_identity(self, grid16, omega):
        for i in range(5):
            f = random_field(grid16, 40 + i, kmax=4.0)
            gcoef = advection_plus_coriolis(f, omega)
            potential = gcoef - project_leray(SpectralField(grid16, gcoef)).coeffs
            res = pressure_gradient(grid16, recover_pressure(f, omega)) + potential
            res[:, 0, 0, 0] = 0
            assert np.linalg.norm(res) <= 1e-10 * np.linalg.norm(gcoef)

    def test_taylor_green_closed_form(self):
        # p = A^2/16 (cos 2x + cos 2y)(cos 2z + 2) for the Taylor-Green vortex at Omega = 0
        g = Grid(16)
        A = 2.0
        p = recover_pressure(taylor_green(g, A), 0.0)
        x = g.physical_points()
        ref = A**2 / 16 * (np.cos(2 * x[0]) + np.cos(2 * x[1])) * (np.cos(2 * x[2]) + 2)
        ref_hat = g.from_physical(ref[None])[0]
        ref_hat[0, 0, 0] = 0
        assert np.max(np.abs(p - ref_hat)) < 1e-14
