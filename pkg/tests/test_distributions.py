from __future__ import annotations

import math

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st
from scipy import integrate as sci

from zenofisher.distributions import (
    Dirac,
    PerturbationDirection,
    PointMass,
    SignedMeasure,
    Tabulated,
    Uniform,
    moment,
    mu2_shift_direction,
    pair_with_log_q,
    sample,
    uniform_mu2_moment_derivative,
)
from zenofisher.errors import ArgumentError, EvaluationError, QuadratureError
from zenofisher.quadrature import gauss_legendre, integrate

from conftest import NS

MU1, MU2 = 10 * NS, 60 * NS


class TestQuadrature:
    def test_polynomial(self):
        assert integrate(lambda x: x**3, 0.0, 2.0) == pytest.approx(4.0, rel=1e-14)

    def test_against_scipy(self):
        f = lambda x: np.exp(-x) * np.cos(3 * x)
        ref = sci.quad(f, 0.0, 5.0, epsabs=0, epsrel=1e-13)[0]
        assert integrate(f, 0.0, 5.0) == pytest.approx(ref, rel=1e-12)

    def test_breakpoints(self):
        f = lambda x: np.abs(x - 0.3)
        assert integrate(f, 0.0, 1.0, points=[0.3]) == pytest.approx(0.5 * (0.09 + 0.49), rel=1e-14)

    def test_gauss_legendre(self):
        assert gauss_legendre(np.sin, 0.0, math.pi) == pytest.approx(2.0, rel=1e-14)

    def test_subdivision_cap(self):
        # a non-integrable singularity cannot converge
        with pytest.raises(QuadratureError), np.errstate(divide="ignore"):
            integrate(lambda x: 1.0 / x, 0.0, 1.0, max_subdivisions=64)


class TestUniform:
    def test_first_moment_unit(self):
        assert moment(Uniform(0.0, 1.0), 1) == 0.5

    def test_second_moment_reference(self):
        np.testing.assert_allclose(moment(Uniform(MU1, MU2), 2), 4300.0 / 3.0 * NS**2, rtol=1e-15)
        ref = sci.quad(lambda x: x**2 / (MU2 - MU1), MU1, MU2, epsabs=0, epsrel=1e-13)[0]
        np.testing.assert_allclose(moment(Uniform(MU1, MU2), 2), ref, rtol=1e-13)

    @pytest.mark.parametrize("k", range(0, 9))
    def test_moments_against_quadrature(self, k):
        d = Uniform(MU1, MU2)
        ref = sci.quad(lambda x: x**k, MU1, MU2, epsabs=0, epsrel=1e-13)[0] / (MU2 - MU1)
        np.testing.assert_allclose(d.moment(k), ref, rtol=1e-12)
        np.testing.assert_allclose(d.as_measure().moment(k), ref, rtol=1e-12)

    def test_normalised(self):
        assert Uniform(MU1, MU2).as_measure().mass == pytest.approx(1.0, rel=1e-14)

    @pytest.mark.parametrize("args", [(-1.0, 1.0), (2.0, 1.0), (1.0, 1.0), (0.0, math.inf)])
    def test_invalid(self, args):
        with pytest.raises(ArgumentError):
            Uniform(*args)

    @settings(max_examples=50, deadline=None)
    @given(a=st.floats(0.0, 100.0), w=st.floats(1e-3, 100.0))
    def test_variance_nonnegative(self, a, w):
        d = Uniform(a * NS, (a + w) * NS)
        chi1, chi2 = d.moment(1), d.moment(2)
        assert chi2 >= chi1**2 - 1e-12 * chi1**2


class TestDirac:
    @pytest.mark.parametrize("k", [0, 1, 3, 8])
    def test_moments(self, k):
        assert Dirac(MU2).moment(k) == MU2**k

    def test_samples(self):
        s = sample(Dirac(MU2), np.random.default_rng(0), 100)
        assert np.all(s == MU2)

    def test_invalid(self):
        with pytest.raises(ArgumentError):
            Dirac(-1.0)


class TestSampling:
    def test_support(self):
        s = sample(Uniform(MU1, MU2), np.random.default_rng(1), 10_000)
        assert np.all((s >= MU1) & (s <= MU2))

    @pytest.mark.parametrize("k", [1, 2, 4])
    def test_law_of_large_numbers(self, k):
        d = Uniform(MU1, MU2)
        s = sample(d, np.random.default_rng(2024 + k), 10**6)
        var_k = d.moment(2 * k) - d.moment(k) ** 2
        se = math.sqrt(var_k / s.size)
        assert abs(np.mean(s**k) - d.moment(k)) <= 4 * se

    def test_deterministic(self):
        a = sample(Uniform(MU1, MU2), np.random.default_rng(99), 1000)
        b = sample(Uniform(MU1, MU2), np.random.default_rng(99), 1000)
        np.testing.assert_array_equal(a, b)

    def test_count(self):
        with pytest.raises(ArgumentError):
            sample(Uniform(MU1, MU2), np.random.default_rng(0), 0)


class TestTabulated:
    def test_normalised_and_moments(self):
        grid = np.array([0.0, 1.0, 3.0, 4.0])
        d = Tabulated(grid, [1.0, 0.5, 2.0])
        assert d.as_measure().mass == pytest.approx(1.0, abs=1e-10)
        # piecewise-constant density: exact moments cell by cell
        dens = d.density_values
        for k in range(1, 6):
            exact = sum(dens[i] * (grid[i + 1] ** (k + 1) - grid[i] ** (k + 1)) / (k + 1) for i in range(3))
            np.testing.assert_allclose(d.moment(k), exact, rtol=1e-12)

    def test_reduces_to_uniform(self):
        t = Tabulated([MU1, 30 * NS, MU2], [1.0, 1.0])
        u = Uniform(MU1, MU2)
        for k in range(1, 9):
            np.testing.assert_allclose(t.moment(k), u.moment(k), rtol=1e-12)

    def test_sampler_matches_cdf(self):
        d = Tabulated([0.0, 1.0, 2.0, 3.0], [1.0, 0.0, 3.0])
        s = d.sample(np.random.default_rng(5), 200_000)
        assert not np.any((s > 1.0) & (s < 2.0))
        frac = np.mean(s <= 1.0)
        assert abs(frac - 0.25) <= 4 * math.sqrt(0.25 * 0.75 / s.size)

    def test_zero_weight(self):
        with pytest.raises(ArgumentError):
            Tabulated([0.0, 1.0, 2.0], [0.0, 0.0])

    @pytest.mark.parametrize("grid, weights", [([0.0, 1.0], [1.0, 1.0]), ([1.0, 0.5], [1.0]),
                                               ([-1.0, 1.0], [1.0]), ([0.0, 1.0], [-1.0])])
    def test_invalid(self, grid, weights):
        with pytest.raises(ArgumentError):
            Tabulated(grid, weights)


class TestMu2Shift:
    def test_zero_mass(self):
        f = mu2_shift_direction(Uniform(MU1, MU2))
        assert abs(f.mass) * (MU2 - MU1) <= 1e-12
        f.check_zero_mass()

    def test_xi2_reference(self):
        f = mu2_shift_direction(Uniform(MU1, MU2))
        xi2 = f.moments(2)[1]
        np.testing.assert_allclose(xi2, 325000.0 / 7500.0 * NS, rtol=1e-13)
        formula = (-3 * MU2**2 * MU1 + 2 * MU2**3 + MU1**3) / (3 * (MU2 - MU1) ** 2)
        np.testing.assert_allclose(xi2, formula, rtol=1e-13)

    @pytest.mark.parametrize("k", range(1, 9))
    def test_xi_finite_difference(self, k):
        h = 1e-4 * (MU2 - MU1)
        fd = (Uniform(MU1, MU2 + h).moment(k) - Uniform(MU1, MU2 - h).moment(k)) / (2 * h)
        np.testing.assert_allclose(uniform_mu2_moment_derivative(MU1, MU2, k), fd, rtol=1e-6)

    @pytest.mark.parametrize("k", range(1, 9))
    def test_xi_against_integrated_moments(self, k):
        f = mu2_shift_direction(Uniform(MU1, MU2))
        integrated = SignedMeasure.moments(f, k)[-1]
        np.testing.assert_allclose(f.moments(k)[-1], integrated, rtol=1e-11)

    def test_perturbed_moments_second_order(self):
        d = Uniform(MU1, MU2)
        f = mu2_shift_direction(d)
        xi = f.moments(8)
        chi = d.moments(8)
        dcs = (MU2 - MU1) * np.geomspace(1e-4, 1e-2, 6)
        err = np.array([np.max(np.abs((Uniform(MU1, MU2 + dc).moments(8) - chi - dc * xi) / chi)) for dc in dcs])
        slope = np.polyfit(np.log(dcs), np.log(err), 1)[0]
        assert slope >= 1.9

    def test_combined_measure_linear(self):
        d = Uniform(MU1, MU2)
        f = mu2_shift_direction(d)
        dc = 1e-3 * (MU2 - MU1)
        combined = d.as_measure().combine(f, dc)
        np.testing.assert_allclose(combined.moments(4), d.moments(4) + dc * f.moments(4), rtol=1e-11)

    def test_degenerate(self):
        with pytest.raises(ArgumentError):
            mu2_shift_direction(Dirac(MU1))


class TestPairing:
    def test_quadratic_log_q(self):
        var = 3.0e12
        d = Uniform(MU1, MU2)
        f = mu2_shift_direction(d)
        got = pair_with_log_q(f, lambda x: -var * x**2)
        expected = -var * (MU2**2 - d.moment(2)) / (MU2 - MU1)
        np.testing.assert_allclose(got, expected, rtol=1e-12)

    def test_orthogonal_to_constants(self):
        f = mu2_shift_direction(Uniform(MU1, MU2))
        assert abs(pair_with_log_q(f, lambda x: np.full_like(x, -0.7))) <= 1e-12 * 0.7 * f.abs_mass()

    def test_density_against_series(self, ref_survival):
        d = Uniform(MU1, MU2)
        p = PerturbationDirection.from_distribution(d)
        beta = ref_survival.betas(8)
        chi = d.moments(8)
        series = math.fsum(beta * chi / np.array([math.factorial(k) for k in range(1, 9)]))
        np.testing.assert_allclose(pair_with_log_q(p, ref_survival.log_q), series, rtol=1e-9)

    def test_point_mass_exact(self):
        meas = SignedMeasure(None, (0.0, 0.0), [PointMass(2.0, 0.5), PointMass(3.0, -0.25)])
        assert pair_with_log_q(meas, lambda x: x**2) == 0.5 * 4.0 - 0.25 * 9.0

    def test_non_finite(self):
        with pytest.raises(EvaluationError):
            pair_with_log_q(Uniform(0.0, 1.0).as_measure(), lambda x: np.full_like(x, -np.inf))
