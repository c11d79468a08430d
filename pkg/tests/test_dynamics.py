"""RHS assembly tests.

Oracles: hand time-derivatives of plane waves, constant-field reductions of
the transport operators against direct spectral derivatives, Beltrami
stationarity for the vorticity system, and the discrete divergence theorem
for the high-field energy flux.
"""

import numpy as np
import pytest

from sabi.dynamics import (
    MHDState,
    VorticityState,
    bi_rhs,
    euler_vorticity_rhs,
    expectation_rhs,
    get_model,
    ito_drift_correction,
    make_drift,
    mhd_rhs,
    mhd_stochastic_increment,
    stochastic_increment,
)
from sabi.em_fields import EMState
from sabi.errors import ConstraintError, NumericalError
from sabi.grid import GridSpec, VectorField, laplacian, max_div, lie2form
from sabi.noise import NoiseModel, make_constant_mode, make_divfree_mode

from test_grid import random_band_limited


@pytest.fixture(scope="module")
def grid():
    return GridSpec(16, 16, 16)


def em_state(grid, seed, amplitude, kmax=2):
    D = random_band_limited(grid, seed=seed, kmax=kmax, divfree=True)
    B = random_band_limited(grid, seed=seed + 500, kmax=kmax, divfree=True)
    return EMState(
        VectorField(grid, amplitude * D.values),
        VectorField(grid, amplitude * B.values),
    )


def spectral_dx(grid, arr):
    spec = grid.rfft(arr)
    return grid.irfft(1j * grid.kx * spec)


class TestDeterministicEM:
    def test_zero_state(self, grid):
        dD, dB = bi_rhs(EMState.zeros(grid))
        assert dD.max_norm() == 0.0 and dB.max_norm() == 0.0

    def test_uniform_fields(self, grid):
        vals = np.ones((3, *grid.shape))
        s = EMState(VectorField(grid, vals), VectorField(grid, 0.5 * vals))
        dD, dB = bi_rhs(s)
        assert dD.max_norm() < 1e-12 and dB.max_norm() < 1e-12

    def test_maxwell_plane_wave_identity(self, grid):
        # D = (0, cos(x-t), 0), B = (0, 0, cos(x-t)) solves the weak-field
        # system; at t=0 both time derivatives equal (.., sin x, ..)
        X, _, _ = grid.meshgrid()
        zero = np.zeros_like(X)
        s = EMState(
            VectorField(grid, np.stack([zero, np.cos(X), zero])),
            VectorField(grid, np.stack([zero, zero, np.cos(X)])),
        )
        dD, dB = bi_rhs(s, closure="maxwell")
        assert np.max(np.abs(dD.values[1] - np.sin(X))) < 1e-12
        assert np.max(np.abs(dB.values[2] - np.sin(X))) < 1e-12

    def test_rhs_divergence_free(self, grid):
        s = em_state(grid, seed=1, amplitude=0.4)
        dD, dB = bi_rhs(s)
        assert max_div(dD) < 1e-12 and max_div(dB) < 1e-12


class TestStochasticIncrement:
    def test_zero_dw(self, grid):
        s = em_state(grid, seed=2, amplitude=0.3)
        noise = NoiseModel.from_modes(grid, [make_constant_mode(grid, (1, 0, 0))])
        dD, dB = stochastic_increment(s, noise, np.zeros(1))
        assert dD.max_norm() == 0.0 and dB.max_norm() == 0.0

    def test_constant_mode_reduction(self, grid):
        sigma, dw = 0.7, 0.13
        s = em_state(grid, seed=3, amplitude=0.3)
        noise = NoiseModel.from_modes(grid, [make_constant_mode(grid, (sigma, 0, 0))])
        dD, dB = stochastic_increment(s, noise, np.array([dw]))
        assert np.max(np.abs(dD.values + sigma * dw * spectral_dx(grid, s.D.values))) < 1e-11
        assert np.max(np.abs(dB.values + sigma * dw * spectral_dx(grid, s.B.values))) < 1e-11

    def test_output_divergence_free(self, grid):
        s = em_state(grid, seed=4, amplitude=0.3)
        noise = NoiseModel.from_modes(
            grid, [make_divfree_mode(grid, k=(1, 0, 0), a=(0, 1, 0))]
        )
        dD, dB = stochastic_increment(s, noise, np.array([0.2]))
        assert max_div(dD) < 1e-12 and max_div(dB) < 1e-12


class TestItoCorrection:
    def test_zero_noise(self, grid):
        s = em_state(grid, seed=5, amplitude=0.3)
        cD, cB = ito_drift_correction(s, NoiseModel.empty(grid))
        assert cD.max_norm() == 0.0 and cB.max_norm() == 0.0

    def test_constant_mode_heat_operator(self, grid):
        sigma = 0.6
        s = em_state(grid, seed=6, amplitude=0.3)
        noise = NoiseModel.from_modes(grid, [make_constant_mode(grid, (sigma, 0, 0))])
        cD, _ = ito_drift_correction(s, noise)
        spec = grid.rfft(s.D.values)
        dxx = grid.irfft(-(grid.kx**2) * spec)
        assert np.max(np.abs(cD.values - 0.5 * sigma**2 * dxx)) < 1e-11

    def test_harmonic_mode_matches_composition(self):
        # independent oracle: apply the transport operator twice through the
        # public lie2form on a truncation-free grid
        g = GridSpec(16, 16, 16, dealias=False)
        s = em_state(g, seed=7, amplitude=0.3, kmax=2)
        xi = make_divfree_mode(g, k=(0, 1, 0), a=(1, 0, 0), amplitude=0.8)
        noise = NoiseModel.from_modes(g, [xi])
        cD, cB = ito_drift_correction(s, noise)
        for F, got in ((s.D, cD), (s.B, cB)):
            twice = lie2form(xi, lie2form(xi, F))
            assert np.max(np.abs(got.values - 0.5 * twice.values)) < 1e-10

    def test_constant_fast_path_matches_generic(self, grid):
        # force the generic path by disguising a uniform mode as non-constant
        s = em_state(grid, seed=8, amplitude=0.3)
        xi = make_constant_mode(grid, (0.4, 0.3, 0.0))
        fast = NoiseModel(grid, (xi,), (True,))
        slow = NoiseModel(grid, (xi,), (False,))
        cf, _ = ito_drift_correction(s, fast)
        cs, _ = ito_drift_correction(s, slow)
        assert np.max(np.abs(cf.values - cs.values)) < 1e-12


class TestExpectationRHS:
    def test_reduces_to_maxwell_without_noise(self, grid):
        s = em_state(grid, seed=9, amplitude=0.2)
        d1 = expectation_rhs(s, NoiseModel.empty(grid))
        d2 = bi_rhs(s, closure="maxwell")
        for a, b in zip(d1, d2):
            assert np.max(np.abs(a.values - b.values)) < 1e-14

    def test_constant_basis_reduces_to_laplacian(self, grid):
        sigma = 0.5
        s = em_state(grid, seed=10, amplitude=0.2)
        noise = NoiseModel.from_modes(
            grid,
            [
                make_constant_mode(grid, (sigma, 0, 0)),
                make_constant_mode(grid, (0, sigma, 0)),
                make_constant_mode(grid, (0, 0, sigma)),
            ],
        )
        dD, _ = expectation_rhs(s, noise)
        base, _ = bi_rhs(s, closure="maxwell")
        lap = laplacian(s.D)
        expected = base.values + 0.5 * sigma**2 * lap.values
        assert np.max(np.abs(dD.values - expected)) < 1e-10

    def test_single_mode_damping_rate(self, grid):
        # a pure D-mode has rhs curl B + correction = -sigma^2/2 D for k=(1,0,0)
        sigma = 0.8
        X, _, _ = grid.meshgrid()
        zero = np.zeros_like(X)
        s = EMState(
            VectorField(grid, np.stack([zero, np.cos(X), zero])),
            VectorField.zeros(grid),
        )
        noise = NoiseModel.from_modes(grid, [make_constant_mode(grid, (sigma, 0, 0))])
        dD, _ = expectation_rhs(s, noise)
        assert np.max(np.abs(dD.values - (-0.5 * sigma**2) * s.D.values)) < 1e-11

    def test_rejects_bi_closure(self, grid):
        s = em_state(grid, seed=11, amplitude=0.2)
        with pytest.raises(ConstraintError):
            expectation_rhs(s, NoiseModel.empty(grid), closure="bi")


class TestVorticity:
    def test_mean_mode_rejected(self, grid):
        vals = np.zeros((3, *grid.shape))
        vals[2] = 1.0
        with pytest.raises(ConstraintError):
            euler_vorticity_rhs(
                VorticityState(VectorField(grid, vals)),
                NoiseModel.empty(grid),
                np.zeros(0),
                0.1,
            )

    def test_beltrami_is_stationary(self, grid):
        # the unit-amplitude swirl field is a curl eigenfield, so u = w and
        # u x w = 0: the deterministic rhs must vanish
        X, Y, Z = grid.meshgrid()
        w = np.stack(
            [
                np.sin(Z) + np.cos(Y),
                np.sin(X) + np.cos(Z),
                np.sin(Y) + np.cos(X),
            ]
        )
        state = VorticityState(VectorField(grid, w))
        out = euler_vorticity_rhs(state, NoiseModel.empty(grid), np.zeros(0), 1.0)
        assert out.max_norm() < 1e-11

    def test_constant_noise_translation(self, grid):
        w = random_band_limited(grid, seed=12, kmax=2, divfree=True)
        state = VorticityState(w)
        sigma, dw = 0.5, 0.2
        noise = NoiseModel.from_modes(grid, [make_constant_mode(grid, (sigma, 0, 0))])
        out = euler_vorticity_rhs(state, noise, np.array([dw]), dt=0.0)
        assert np.max(np.abs(out.values + sigma * dw * spectral_dx(grid, w.values))) < 1e-11

    def test_rhs_divergence_free(self, grid):
        w = random_band_limited(grid, seed=13, kmax=2, divfree=True)
        out = euler_vorticity_rhs(
            VorticityState(w), NoiseModel.empty(grid), np.zeros(0), 1.0
        )
        assert max_div(out) < 1e-12


def helical_orthogonal_state(grid, seed=0, eps=0.1, w_amp=0.3, kmax=2):
    """B = unit-norm circular mode + small divfree part; P = w x B."""
    X, Y, Z = grid.meshgrid()
    B = np.stack([np.cos(Z), np.sin(Z), np.zeros_like(Z)])
    pert = random_band_limited(grid, seed=seed, kmax=kmax, divfree=True)
    B = B + eps * pert.values
    wfield = random_band_limited(grid, seed=seed + 100, kmax=kmax)
    P = np.cross(w_amp * wfield.values, B, axis=0)
    return MHDState(VectorField(grid, P), VectorField(grid, B))


class TestMHD:
    def test_uniform_states_stationary(self, grid):
        vals = np.zeros((3, *grid.shape))
        vals[0] = 0.8
        zero = VectorField.zeros(grid)
        dP, dB = mhd_rhs(MHDState(VectorField(grid, vals), VectorField(grid, vals * 0.5)))
        assert dP.max_norm() < 1e-12 and dB.max_norm() < 1e-12
        dP, dB = mhd_rhs(MHDState(zero, VectorField(grid, vals)))
        assert dP.max_norm() < 1e-12 and dB.max_norm() < 1e-12

    def test_energy_flux_integral_vanishes(self):
        # the flux-divergence tail leaking past the dealias band shrinks
        # spectrally; 32^3 with modest amplitudes puts it far below 1e-9
        g = GridSpec(32, 32, 32)
        s = helical_orthogonal_state(g, seed=14, eps=0.05, w_amp=0.15)
        dP, dB = mhd_rhs(s)
        h = s.h_values()
        dh = np.sum(s.P.values * dP.values + s.B.values * dB.values, axis=0) / h
        drift = abs(float(np.mean(dh)) * g.volume)
        assert drift < 1e-9

    def test_floor_violation_aborts(self, grid):
        zero = VectorField.zeros(grid)
        with pytest.raises(NumericalError):
            mhd_rhs(MHDState(zero, zero))

    def test_db_divergence_free(self, grid):
        s = helical_orthogonal_state(grid, seed=15)
        _, dB = mhd_rhs(s)
        assert max_div(dB) < 1e-12

    def test_stochastic_zero_dw(self, grid):
        s = helical_orthogonal_state(grid, seed=16)
        noise = NoiseModel.from_modes(grid, [make_constant_mode(grid, (1, 0, 0))])
        dP, dB = mhd_stochastic_increment(s, noise, np.zeros(1))
        assert dP.max_norm() == 0.0 and dB.max_norm() == 0.0

    def test_stochastic_constant_reduction(self, grid):
        s = helical_orthogonal_state(grid, seed=17)
        sigma, dw = 0.4, 0.11
        noise = NoiseModel.from_modes(grid, [make_constant_mode(grid, (sigma, 0, 0))])
        dP, dB = mhd_stochastic_increment(s, noise, np.array([dw]))
        assert np.max(np.abs(dP.values + sigma * dw * spectral_dx(grid, s.P.values))) < 1e-11
        assert np.max(np.abs(dB.values + sigma * dw * spectral_dx(grid, s.B.values))) < 1e-11

    def test_harmonic_noise_changes_total_momentum(self, grid):
        # non-uniform noise amplitude: the momentum increment has a nonzero
        # spatial integral, unlike the constant-mode case
        s = helical_orthogonal_state(grid, seed=18)
        harmonic = NoiseModel.from_modes(
            grid, [make_divfree_mode(grid, k=(0, 0, 1), a=(1, 0, 0), amplitude=0.5)]
        )
        const = NoiseModel.from_modes(grid, [make_constant_mode(grid, (0.5, 0, 0))])
        dP_h, _ = mhd_stochastic_increment(s, harmonic, np.array([0.3]))
        dP_c, _ = mhd_stochastic_increment(s, const, np.array([0.3]))
        mom_h = np.linalg.norm(dP_h.values.mean(axis=(1, 2, 3)) * grid.volume)
        mom_c = np.linalg.norm(dP_c.values.mean(axis=(1, 2, 3)) * grid.volume)
        assert mom_c < 1e-10
        assert mom_h > 1e-3


class TestModelRegistry:
    def test_known_models(self):
        for name in (
            "bi",
            "maxwell",
            "bi-stratonovich",
            "bi-ito",
            "maxwell-expectation",
            "euler-vorticity",
            "mhd",
            "mhd-stratonovich",
        ):
            assert get_model(name).name == name

    def test_unknown_model(self):
        with pytest.raises(ConstraintError):
            get_model("navier-stokes")

    def test_drift_closure_matches_public_op(self, grid):
        s = em_state(grid, seed=19, amplitude=0.4)
        f = make_drift(get_model("bi"), grid)
        dD, dB = f((s.D.values, s.B.values))
        pD, pB = bi_rhs(s)
        assert np.max(np.abs(dD - pD.values)) < 1e-14
        assert np.max(np.abs(dB - pB.values)) < 1e-14
