"""Special-function kernel: closed-form anchors and scipy oracles."""

import math

import numpy as np
import pytest
from scipy import integrate, special

from bregman_bounds import specfun as sf
from bregman_bounds.errors import DomainError, SingularityError, UnsupportedError

EULER_GAMMA = 0.5772156649015329


class TestLogGamma:
    def test_anchor_values(self):
        assert sf.log_gamma(1.0) == pytest.approx(0.0, abs=1e-14)
        assert sf.log_gamma(5.0) == pytest.approx(math.log(24.0), rel=1e-13)
        assert sf.log_gamma(0.5) == pytest.approx(0.5 * math.log(math.pi), rel=1e-13)

    def test_relative_error_over_range(self):
        # Relative to the function value where it is bounded away from
        # its zeros at 1 and 2, absolute there.
        xs = np.geomspace(1e-3, 1e6, 5000)
        ours = sf.log_gamma(xs)
        ref = special.gammaln(xs)
        scaled = np.abs(ours - ref) / np.maximum(np.abs(ref), 1.0)
        assert scaled.max() < 1e-12

    def test_domain_error(self):
        with pytest.raises(DomainError):
            sf.log_gamma(0.0)
        with pytest.raises(DomainError):
            sf.log_gamma(-2.5)


class TestDigamma:
    def test_anchor_values(self):
        assert sf.digamma(1.0) == pytest.approx(-EULER_GAMMA, rel=1e-12)
        psi4 = -EULER_GAMMA + 1.0 + 0.5 + 1.0 / 3.0
        assert sf.digamma(4.0) == pytest.approx(psi4, rel=1e-12)
        assert sf.digamma(5.0) == pytest.approx(psi4 + 0.25, rel=1e-12)

    def test_against_scipy(self):
        xs = np.geomspace(1e-3, 1e6, 5000)
        scaled = np.abs(sf.digamma(xs) - special.psi(xs)) / np.maximum(
            np.abs(special.psi(xs)), 1.0
        )
        assert scaled.max() < 1e-10

    def test_recurrence_property(self):
        rng = np.random.default_rng(7)
        xs = rng.uniform(0.1, 100.0, 100)
        gaps = sf.digamma(xs + 1.0) - sf.digamma(xs) - 1.0 / xs
        assert np.max(np.abs(gaps)) < 1e-10

    def test_domain_error(self):
        with pytest.raises(DomainError):
            sf.digamma(-1.0)


class TestStirlingAndFactorial:
    def test_table_values(self):
        assert sf.stirling2(3, 2) == 3
        assert sf.stirling2(2, -1) == 0
        assert sf.stirling2(2, -2) == 0
        assert sf.stirling2(0, 0) == 1
        assert sf.stirling2(4, 7) == 0

    def test_exactness_cap(self):
        assert sf.stirling2(64, 32) > 0
        with pytest.raises(OverflowError):
            sf.stirling2(65, 3)

    def test_falling_factorial(self):
        assert sf.falling_factorial(5, 2) == 20.0
        assert sf.falling_factorial(7.3, 0) == 1.0
        assert sf.falling_factorial(3, 4) == 0.0
        assert sf.falling_factorial(3, -1) == 0.0

    def test_power_expansion_identity(self):
        # sum_k s(m, k) x_(k) = x^m, exactly in integers.
        for m in range(9):
            for x in range(11):
                total = sum(
                    sf.stirling2(m, k) * sf.falling_factorial(x, k) for k in range(m + 1)
                )
                assert total == float(x**m)


class TestGaussLegendre:
    def test_low_orders(self):
        r1 = sf.gauss_legendre(1)
        np.testing.assert_allclose(r1.nodes, [0.0], atol=1e-15)
        np.testing.assert_allclose(r1.weights, [2.0], atol=1e-15)
        r2 = sf.gauss_legendre(2)
        np.testing.assert_allclose(r2.nodes, [-1 / math.sqrt(3), 1 / math.sqrt(3)], atol=1e-15)
        np.testing.assert_allclose(r2.weights, [1.0, 1.0], atol=1e-15)

    @pytest.mark.parametrize("order", [3, 8, 32, 100, 256])
    def test_rule_invariants(self, order):
        rule = sf.gauss_legendre(order)
        assert abs(rule.weights.sum() - 2.0) < 1e-12
        assert np.all(np.diff(rule.nodes) > 0)
        assert np.all(rule.weights > 0)
        # exact for polynomials up to degree 2 * order - 1
        for deg in (2 * order - 1, 2 * order - 2):
            exact = (1.0 - (-1.0) ** (deg + 1)) / (deg + 1)
            got = float(np.sum(rule.weights * rule.nodes**deg))
            assert abs(got - exact) < 1e-12

    def test_monomial_on_unit_interval(self):
        nodes, weights = sf.gauss_legendre(32).mapped(0.0, 1.0)
        assert abs(float(np.sum(weights * nodes**30)) - 1.0 / 31.0) < 1e-13

    def test_unsupported_order(self):
        with pytest.raises(UnsupportedError):
            sf.gauss_legendre(0)
        with pytest.raises(UnsupportedError):
            sf.gauss_legendre(257)


class TestAdaptiveQuadrature:
    def test_against_scipy(self):
        cases = [
            (lambda t: np.exp(-t) * np.sin(3.0 * t), 0.0, 5.0),
            (lambda t: 1.0 / (1.0 + t**2), -4.0, 4.0),
            (lambda t: np.sqrt(np.abs(t)), 0.0, 1.0),
        ]
        for f, lo, hi in cases:
            ref = integrate.quad(f, lo, hi, epsabs=1e-13, epsrel=1e-13)[0]
            assert sf.adaptive_quadrature(f, lo, hi) == pytest.approx(ref, rel=1e-9, abs=1e-12)

    def test_empty_interval(self):
        assert sf.adaptive_quadrature(lambda t: t, 1.0, 1.0) == 0.0

    def test_non_integrable_singularity(self):
        with pytest.raises((SingularityError, DomainError)):
            sf.adaptive_quadrature(lambda t: 1.0 / t, 0.0, 1.0)


# Euler-integral oracle, evaluated with scipy before the implementation
# was written: quad(t^(b-1) (1-t)^(c-b-1) (1-z t)^(-a)) / B(b, c-b).
HYP_315508 = 1.9345656160015419


class TestGauss2F1:
    def test_truncating_b_zero(self):
        assert sf.gauss_2f1(3.0, 0.0, 5.5, 0.8) == 1.0

    def test_euler_oracle(self):
        assert sf.gauss_2f1(3.0, 1.0, 5.5, 0.8) == pytest.approx(HYP_315508, rel=1e-9)

    def test_log_closed_form(self):
        assert sf.gauss_2f1(1.0, 1.0, 2.0, 0.5) == pytest.approx(
            -math.log(0.5) / 0.5, rel=1e-12
        )

    def test_series_vs_euler_grid(self):
        # Both internal evaluation paths agree on a parameter cube.
        for a in (0.5, 1.7, 3.1, 5.0):
            for b in (0.5, 1.7, 3.1, 5.0):
                for c in (0.6, 1.7, 3.1, 5.0):
                    if min(a, b) >= c:
                        continue
                    for z in (0.1, 0.5, 0.8):
                        series = sf._series_2f1(a, b, c, z, terminate_at=None)
                        euler = sf._euler_integral_2f1(a, b, c, z)
                        assert euler == pytest.approx(series, rel=1e-8)

    def test_against_scipy_high_z(self):
        for a, b, c, z in [(3, 1, 5.5, 0.95), (2.5, 1.5, 6.0, 0.99), (3, 1, 5.5, 1.0)]:
            assert sf.gauss_2f1(a, b, c, z) == pytest.approx(
                float(special.hyp2f1(a, b, c, z)), rel=1e-9
            )

    def test_terminating_at_one_matches_scipy(self):
        assert sf.gauss_2f1(4.0, -3.0, 9.0, 1.0) == pytest.approx(
            float(special.hyp2f1(4.0, -3.0, 9.0, 1.0)), rel=1e-12
        )

    def test_domain_errors(self):
        with pytest.raises(DomainError):
            sf.gauss_2f1(1.0, 1.0, 2.0, 1.5)
        with pytest.raises(DomainError):
            sf.gauss_2f1(1.0, 1.0, -2.0, 0.5)
        with pytest.raises(DomainError):
            sf.gauss_2f1(3.0, 4.0, 5.0, 1.0)  # diverges: c - a - b < 0
