import math

import numpy as np
import pytest

from sketchopt.orthopoly import (
    chebyshev_q_eval,
    gaussian_coefficients,
    heavy_ball_coefficients,
    mp_poly_eval,
    rate_report,
    srht_coefficients,
    srht_params,
    srht_poly_eval,
    theoretical_loss_gaussian,
    u_closed_form,
    u_ratio_roots,
)
from sketchopt.spectral import DensitySpec, density_quadrature, sqrt_edge_rule

RHO = 0.5


def reference_params():
    # (gamma, xi) = (0.2, 0.4) gives rational parameters, handy for exact checks.
    return srht_params(0.2, 0.4)


class TestMpPolynomials:
    def test_value_at_zero_is_one(self):
        for t in range(51):
            assert mp_poly_eval(t, RHO, 0.0) == pytest.approx(1.0, abs=1e-9)

    def test_degree_two_closed_form(self):
        xs = np.linspace(-1, 3, 9)
        assert np.allclose(mp_poly_eval(2, RHO, xs), 1 - (2 + RHO) * xs + xs ** 2, atol=1e-12)
        assert mp_poly_eval(2, RHO, 1.0) == pytest.approx(-0.5, abs=1e-14)

    @pytest.mark.parametrize("t", [1, 2, 3, 5, 8])
    def test_degree_and_leading_coefficient(self, t):
        # Finite differences at unit steps: order-t difference equals
        # t! * leading coefficient, order-(t+1) vanishes.
        pts = mp_poly_eval(t, RHO, np.arange(t + 2, dtype=float))
        diffs = pts.copy()
        for _ in range(t):
            diffs = np.diff(diffs)
        assert diffs[0] / math.factorial(t) == pytest.approx((-1.0) ** t, abs=1e-9)
        assert abs(np.diff(diffs)[0]) < 1e-6

    def test_orthogonal_under_mp(self):
        for rho in (0.3, 0.5, 0.7):
            x, w = density_quadrature(DensitySpec.mp(rho))
            polys = [mp_poly_eval(k, rho, x) for k in range(11)]
            for k in range(11):
                for l in range(k):
                    assert abs((w * polys[k] * polys[l]).sum()) < 1e-8

    def test_invalid_args(self):
        with pytest.raises(ValueError):
            mp_poly_eval(-1, RHO, 0.0)
        with pytest.raises(ValueError):
            mp_poly_eval(2, 1.5, 0.0)


class TestChebyshev:
    def test_q1_value(self):
        assert chebyshev_q_eval(1, RHO, 1.0) == pytest.approx(-0.5 / math.sqrt(0.5), abs=1e-14)

    def test_moments_alternating(self):
        x, w = density_quadrature(DensitySpec.mp(RHO))
        for k in range(9):
            val = (w * chebyshev_q_eval(k, RHO, x)).sum()
            assert abs(val - (-math.sqrt(RHO)) ** k) < 1e-7

    def test_orthonormal_under_x_weighted_mp(self):
        x, w = density_quadrature(DensitySpec.mp(RHO))
        Q = [chebyshev_q_eval(k, RHO, x) for k in range(9)]
        for k in range(9):
            for l in range(9):
                val = (w * x * Q[k] * Q[l]).sum()
                assert abs(val - (1.0 if k == l else 0.0)) < 1e-7

    def test_gram_schmidt_identity(self):
        spec = DensitySpec.mp(RHO)
        xs = np.linspace(spec.support_lo, spec.support_hi, 400)
        for t in range(1, 9):
            acc = np.ones_like(xs)
            for j in range(1, t + 1):
                acc -= (-math.sqrt(RHO)) ** (j - 1) * xs * chebyshev_q_eval(j - 1, RHO, xs)
            assert np.max(np.abs(mp_poly_eval(t, RHO, xs) - acc)) < 1e-9


class TestSrhtParams:
    def test_reference_point_rational_values(self):
        p = reference_params()
        assert p.tau == pytest.approx(0.375, abs=1e-10)
        assert p.c == pytest.approx(0.125, abs=1e-10)
        assert p.omega == pytest.approx(4.0 / 3.0, abs=1e-10)
        assert p.kappa == pytest.approx(2.0 / 3.0, abs=1e-10)
        assert p.eta == pytest.approx(11.0 / 6.0, abs=1e-10)

    def test_tau_identity_on_grid(self):
        for gamma in np.linspace(0.04, 0.8, 20):
            for xi in np.linspace(gamma + 0.02, 0.96, 20):
                p = srht_params(gamma, xi)
                rho = gamma / xi
                assert abs(p.tau - rho * (1 - xi) / (1 - gamma)) < 1e-10
                assert p.eta ** 2 / 4.0 > p.kappa
                assert p.alpha > p.c

    def test_small_gamma_collapse(self):
        p = srht_params(1e-7, 0.4)
        assert p.lambda_h == pytest.approx(0.4, abs=1e-3)
        assert p.Lambda_h == pytest.approx(0.4, abs=1e-3)
        assert p.tau < 1e-6

    def test_invalid_ordering(self):
        with pytest.raises(ValueError):
            srht_params(0.5, 0.4)


class TestSrhtCoefficients:
    def test_hand_computed_values(self):
        # omega*c = 1/6, eta = 11/6: u_1 = 7/6, u_2 = 53/36.
        sched = srht_coefficients(reference_params(), 5)
        assert sched.b[1] == pytest.approx(-1.0 / 7.0, abs=1e-12)
        assert sched.a[2] == pytest.approx(77.0 / 53.0, abs=1e-12)
        assert sched.b[2] == pytest.approx(-7.0 / 53.0, abs=1e-12)

    def test_unused_slots_are_nan(self):
        sched = srht_coefficients(reference_params(), 4)
        assert np.isnan(sched.a[0]) and np.isnan(sched.a[1]) and np.isnan(sched.b[0])

    def test_closed_form_matches_recursion(self):
        p = reference_params()
        u_prev, u = 1.0, p.eta - p.kappa
        assert abs(u_closed_form(p, 0) - 1.0) < 1e-12
        for t in range(1, 31):
            closed = u_closed_form(p, t)
            assert abs(closed - u) <= 1e-10 * abs(u)
            u_prev, u = u, p.eta * u - p.kappa * u_prev

    def test_u1_equals_one_plus_omega_c(self):
        p = reference_params()
        assert u_closed_form(p, 1) == pytest.approx(1.0 + p.omega * p.c, abs=1e-12)
        assert u_closed_form(p, 1) == pytest.approx(p.eta - p.kappa, abs=1e-12)

    def test_ratio_converges_monotonically(self):
        p = reference_params()
        x1, _ = u_ratio_roots(p)
        v = p.eta - p.kappa
        prev = v
        for _ in range(200):
            v = p.eta - p.kappa / v
            assert v >= prev - 1e-15
            prev = v
        assert v == pytest.approx(x1, abs=1e-12)

    def test_limits_match_edge_parameters(self):
        p = reference_params()
        sched = srht_coefficients(p, 200)
        sl, sL = math.sqrt(p.lambda_h), math.sqrt(p.Lambda_h)
        mu_h = 4.0 / (1.0 / sL + 1.0 / sl) ** 2
        beta_h = ((sL - sl) / (sL + sl)) ** 2
        assert abs(sched.a[200] - (1.0 + beta_h)) < 1e-6
        assert abs(sched.b[200] + mu_h) < 1e-6

    def test_ratio_root_equals_omega_at_reference_point(self):
        # Observed numeric identity backing the coefficient limits.
        p = reference_params()
        x1, _ = u_ratio_roots(p)
        assert x1 == pytest.approx(p.omega, abs=1e-10)

    def test_no_overflow_at_million_iterations(self):
        sched = srht_coefficients(reference_params(), 1_000_000)
        assert np.isfinite(sched.a[2:]).all()
        assert np.isfinite(sched.b[1:]).all()

    def test_delta_views(self):
        sched = srht_coefficients(reference_params(), 3, delta=0.01)
        assert sched.a_delta[2] == pytest.approx(1.01 * sched.a[2])
        assert sched.b_delta[1] == pytest.approx(0.99 * sched.b[1])


class TestGaussianCoefficients:
    def test_constant_schedule(self):
        sched = gaussian_coefficients(0.5, 6)
        assert np.allclose(sched.a[2:], 1.5)
        assert np.allclose(sched.b[1:], -0.25)

    def test_momentum_identity(self):
        sched = gaussian_coefficients(0.5, 4)
        assert np.allclose(1.0 - sched.a[2:], -0.5)

    def test_newton_limit(self):
        sched = gaussian_coefficients(1e-9, 3)
        assert sched.a[2] == pytest.approx(1.0, abs=1e-8)
        assert sched.b[1] == pytest.approx(-1.0, abs=1e-8)

    def test_heavy_ball_schedule(self):
        sched = heavy_ball_coefficients(0.125, 0.375, 4)
        assert np.allclose(sched.a[2:], 1.375)
        assert np.allclose(sched.b[1:], -0.125)


class TestSrhtPolynomials:
    def test_value_at_zero(self):
        p = reference_params()
        for t in range(31):
            assert srht_poly_eval(t, p, 0.0) == pytest.approx(1.0, abs=1e-9)

    def test_degree_one_closed_form(self):
        p = reference_params()
        oc = p.omega * p.c
        xs = np.linspace(0.0, 3.0, 7)
        assert np.allclose(srht_poly_eval(1, p, xs), 1.0 - oc / (1.0 + oc) * xs, atol=1e-12)
        assert srht_poly_eval(1, p, 1.0) == pytest.approx(6.0 / 7.0, abs=1e-12)

    def test_orthogonality_under_shifted_weight(self):
        # weight x * mu_tau(x) / (x - c) on [alpha, beta]
        p = reference_params()
        x, w = sqrt_edge_rule(p.alpha, p.beta)
        g = w / (2 * math.pi * p.tau * (x - p.c))
        R = [srht_poly_eval(k, p, x / p.c) for k in range(7)]
        for k in range(7):
            for l in range(k):
                assert abs((g * R[k] * R[l]).sum()) < 1e-7


class TestLossAndRates:
    def test_loss_basics(self):
        assert theoretical_loss_gaussian(0, 0.7) == 1.0
        assert theoretical_loss_gaussian(3, 0.5) == pytest.approx(0.125)

    def test_loss_identity_by_quadrature(self):
        x, w = density_quadrature(DensitySpec.mp(RHO))
        for t in range(9):
            val = (1.0 - RHO) * (w / x * mp_poly_eval(t, RHO, x) ** 2).sum()
            assert abs(val - theoretical_loss_gaussian(t, RHO)) < 1e-7

    def test_reference_rates(self):
        r = rate_report(0.2, 0.4)
        assert r.rho == pytest.approx(0.5, abs=1e-14)
        assert r.rho_h == pytest.approx(0.375, abs=1e-14)
        assert r.rho_h_ref == pytest.approx(3.0 / 7.0, abs=1e-14)

    def test_rate_ordering_on_grid(self):
        for gamma in np.linspace(0.05, 0.8, 8):
            for xi in np.linspace(gamma + 0.03, 0.95, 8):
                r = rate_report(gamma, xi)
                assert r.rho_h < r.rho_h_ref < 1.0
                assert r.rho_h < r.rho

    def test_degenerate_sketch_limit(self):
        r = rate_report(0.4, 0.4 + 1e-9)
        assert r.rho == pytest.approx(1.0, abs=1e-6)
        assert r.rho_h == pytest.approx(1.0, abs=1e-6)
        assert r.rho_h_ref == pytest.approx(1.0, abs=1e-6)

    def test_invalid_parameters(self):
        with pytest.raises(ValueError):
            rate_report(0.4, 0.2)
