import math

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st
from scipy.integrate import quad, solve_ivp

from csremote import (CoefVector, DimensionError, DomainError, Plant, SignalSpace,
                      kernel_basis_inner_product, kernel_matrix, matrix_exponential,
                      simulate_output, steady_state_output_coefs, synthesize, transfer)
from csremote.lti import kernel_on_uniform_grid

from conftest import conj_symmetric, example_plant


def taylor_expm(M, terms=50):
    out = np.eye(M.shape[0], dtype=np.result_type(M, float))
    term = out.copy()
    for k in range(1, terms):
        term = term @ M / k
        out = out + term
    return out


def quad_inner_product(plant, tau, omega, T):
    def kernel(t):
        return plant.c @ matrix_exponential((tau - t) * plant.A) @ plant.b
    re = quad(lambda t: kernel(t) * math.cos(omega * t), 0, tau, epsabs=1e-13, epsrel=1e-13, limit=400)[0]
    im = quad(lambda t: -kernel(t) * math.sin(omega * t), 0, tau, epsabs=1e-13, epsrel=1e-13, limit=400)[0]
    return (re + 1j * im) / math.sqrt(T)


class TestMatrixExponential:
    def test_zero_and_diagonal(self):
        assert np.array_equal(matrix_exponential(np.zeros((3, 3))), np.eye(3))
        np.testing.assert_allclose(matrix_exponential(np.diag([0.3, -2.0])),
                                   np.diag(np.exp([0.3, -2.0])), rtol=1e-14)

    def test_matches_taylor_series(self, plant):
        M = plant.A * (np.pi / 2)
        np.testing.assert_allclose(matrix_exponential(M), taylor_expm(M), atol=1e-10)

    def test_complex_augmented_against_taylor(self, plant):
        Z = np.zeros((3, 3), dtype=complex)
        Z[:2, :2], Z[:2, 2], Z[2, 2] = plant.A, plant.b, -3j
        np.testing.assert_allclose(matrix_exponential(0.7 * Z), taylor_expm(0.7 * Z), atol=1e-12)

    def test_rejects_bad_input(self):
        with pytest.raises(DimensionError):
            matrix_exponential(np.ones((2, 3)))
        with pytest.raises(DomainError):
            matrix_exponential(np.array([[np.nan, 0], [0, 1.0]]))


class TestPlant:
    def test_rejects_unstable_and_marginal(self):
        with pytest.raises(DomainError):
            Plant([[0.1]], [1.0], [1.0])
        with pytest.raises(DomainError):
            Plant([[0.0, 1.0], [-1.0, 0.0]], [0, 1], [1, 0])

    def test_dimension_checks(self):
        with pytest.raises(DimensionError):
            Plant([[-1.0, 0], [0, -2.0]], [1.0], [1.0, 0.0])
        with pytest.raises(DimensionError):
            Plant([[-1.0]], [1.0], [1.0], [0.0, 1.0])

    def test_defaults_and_immutability(self, plant):
        assert plant.nu == 2
        assert np.array_equal(plant.x0, [0, 0])
        with pytest.raises(ValueError):
            plant.A[0, 0] = 1.0


class TestTransfer:
    def test_dc_gain(self, plant):
        dc = plant.c @ np.linalg.solve(-plant.A, plant.b)
        assert transfer(plant, 0).value == pytest.approx(dc)
        assert dc == pytest.approx(-1.0)  # (0 - a) / (a * 1)

    def test_factored_form(self, plant):
        s = 20j
        direct = (s - 0.5) / ((s + 0.5) * (s + 1))
        assert transfer(plant, s).value == pytest.approx(direct, rel=1e-13)


class TestKernel:
    def test_zero_at_tau_zero(self, plant):
        for w in (0.0, 5.0, -40.0):
            assert kernel_basis_inner_product(plant, 0.0, w, 2 * np.pi) == 0

    @pytest.mark.parametrize("omega", [0.0, 20.0])
    def test_matches_quadrature_at_pi(self, plant, omega):
        T = 2 * np.pi
        got = kernel_basis_inner_product(plant, np.pi, omega, T)
        assert abs(got - quad_inner_product(plant, np.pi, omega, T)) < 1e-8

    def test_quadrature_grid(self, plant, space):
        taus = np.linspace(0, space.T, 20)
        ms = np.linspace(-100, 100, 11).astype(int)
        K = kernel_matrix(plant, taus, ms.astype(float), space.T)
        for i, tau in enumerate(taus):
            for j, m in enumerate(ms):
                assert abs(K[i, j] - quad_inner_product(plant, tau, float(m), space.T)) < 1e-8

    def test_conjugate_symmetry(self, plant):
        for tau in (0.4, 3.0, 6.2):
            a = kernel_basis_inner_product(plant, tau, 7.0, 2 * np.pi)
            b = kernel_basis_inner_product(plant, tau, -7.0, 2 * np.pi)
            assert a == pytest.approx(np.conj(b), abs=1e-15)

    def test_tau_outside_horizon(self, plant):
        with pytest.raises(DomainError):
            kernel_basis_inner_product(plant, 7.0, 0.0, 2 * np.pi)
        with pytest.raises(DomainError):
            kernel_basis_inner_product(plant, -0.1, 0.0, 2 * np.pi)

    def test_uniform_grid_propagation(self, plant, space):
        n = 300
        fast = kernel_on_uniform_grid(plant, space.omegas, space.T, n, block=64)
        direct = kernel_matrix(plant, np.linspace(0, space.T, n + 1), space.omegas, space.T)
        np.testing.assert_allclose(fast, direct, atol=1e-12)


def _rk_output(plant, theta, space, taus):
    def rhs(t, x):
        u = synthesize(CoefVector(theta, space), min(t, space.T))
        return plant.A @ x + plant.b * u
    sol = solve_ivp(rhs, (0, taus[-1]), plant.x0, t_eval=taus, method="DOP853",
                    rtol=1e-11, atol=1e-12, max_step=0.01)
    return plant.c @ sol.y


class TestSimulate:
    def test_zero_dynamics(self, plant):
        sp = SignalSpace(2 * np.pi, 3)
        y = simulate_output(plant, CoefVector.zeros(sp), sp, np.linspace(0, sp.T, 17))
        assert np.array_equal(y, np.zeros(17))

    def test_free_response_matches_ode(self):
        p = example_plant([1.0, -0.5])
        sp = SignalSpace(2 * np.pi, 3)
        taus = np.linspace(0, sp.T, 25)
        y = simulate_output(p, CoefVector.zeros(sp), sp, taus)
        np.testing.assert_allclose(y, _rk_output(p, np.zeros(sp.N), sp, taus), atol=1e-8)

    def test_random_controls_match_ode(self):
        rng = np.random.default_rng(3)
        sp = SignalSpace(2 * np.pi, 4)
        p = example_plant([0.3, 0.2])
        theta = conj_symmetric(rng, sp.N)
        y = simulate_output(p, CoefVector(theta, sp), sp, sp.times)
        np.testing.assert_allclose(y, _rk_output(p, theta, sp, sp.times), atol=1e-6)

    def test_length_mismatch(self, plant):
        sp = SignalSpace(2 * np.pi, 3)
        with pytest.raises(DimensionError):
            simulate_output(plant, np.zeros(5), sp, [0.0])

    def test_non_symmetric_theta_rejected(self, plant):
        sp = SignalSpace(2 * np.pi, 2)
        theta = np.zeros(sp.N, dtype=complex)
        theta[sp.index(1)] = 1.0
        with pytest.raises(DomainError):
            simulate_output(plant, theta, sp, [1.0])


class TestSteadyState:
    def test_zero_and_dc(self, plant):
        sp = SignalSpace(2 * np.pi, 5)
        assert not np.any(steady_state_output_coefs(plant, CoefVector.zeros(sp), sp).values)
        theta = np.zeros(sp.N, dtype=complex)
        theta[sp.index(0)] = 2.0
        out = steady_state_output_coefs(plant, CoefVector(theta, sp), sp)
        assert out[0] == pytest.approx(-2.0)

    def test_m20_gain(self, plant):
        sp = SignalSpace(2 * np.pi, 25)
        theta = np.zeros(sp.N, dtype=complex)
        theta[sp.index(20)] = 1.0
        s = 20j
        expected = (s - 0.5) / ((s + 0.5) * (s + 1))
        assert steady_state_output_coefs(plant, CoefVector(theta, sp), sp)[20] == pytest.approx(expected)

    @settings(max_examples=30, deadline=None)
    @given(st.lists(st.integers(-6, 6), max_size=8))
    def test_sparsity_preserved(self, support):
        sp = SignalSpace(2 * np.pi, 6)
        theta = np.zeros(sp.N, dtype=complex)
        for m in support:
            theta[sp.index(m)] = 1.0 + 0.5j
        out = steady_state_output_coefs(example_plant(), CoefVector(theta, sp), sp)
        assert np.count_nonzero(out.values) <= np.count_nonzero(theta)
