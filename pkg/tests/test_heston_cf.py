"""Single-period characteristic-function coefficients against the Riccati ODE."""

import numpy as np
import pytest

from tdheston import (
    CfCoeffs,
    NumericalSingularityError,
    ParameterDomainError,
    PeriodParams,
    evaluate_cf,
    period_coeffs,
)

from _oracles import riccati_ode_coeffs

BASE = PeriodParams(kappa=2.0, theta=0.04, sigma=0.5, rho=-0.7, mu=0.0)


class TestPeriodParams:
    def test_accepts_boundary_values(self):
        PeriodParams(kappa=0.0, theta=0.0, sigma=1e-8, rho=-1.0, mu=-0.1)
        PeriodParams(kappa=100.0, theta=100.0, sigma=100.0, rho=1.0)

    @pytest.mark.parametrize("bad", [
        dict(kappa=-0.1, theta=0.04, sigma=0.5, rho=-0.7),
        dict(kappa=2.0, theta=-0.01, sigma=0.5, rho=-0.7),
        dict(kappa=2.0, theta=0.04, sigma=0.0, rho=-0.7),
        dict(kappa=2.0, theta=0.04, sigma=1e-9, rho=-0.7),
        dict(kappa=2.0, theta=0.04, sigma=0.5, rho=-1.2),
        dict(kappa=2.0, theta=0.04, sigma=float("nan"), rho=0.0),
    ])
    def test_rejects_out_of_domain(self, bad):
        with pytest.raises(ParameterDomainError):
            PeriodParams(**bad)

    def test_feller_flag(self):
        assert PeriodParams(kappa=2.0, theta=0.09, sigma=0.3, rho=0.0).feller_satisfied
        assert not PeriodParams(kappa=0.29, theta=0.31, sigma=1.14, rho=0.0).feller_satisfied


class TestTerminalCondition:
    def test_initial_conditions_returned_at_tau_zero(self):
        c0, d0 = 0.3 + 0.1j, -0.2j
        out = period_coeffs(0.0, 1.7 - 0.3j, c0, d0, BASE)
        assert abs(out.c - c0) <= 1e-14
        assert abs(out.d2 - d0) <= 1e-14
        assert out.d1 == 1j * (1.7 - 0.3j)

    def test_terminal_condition_across_random_inputs(self):
        rng = np.random.default_rng(7)
        for _ in range(25):
            p = PeriodParams(
                kappa=rng.uniform(0, 20), theta=rng.uniform(0, 1),
                sigma=rng.uniform(0.01, 1.5), rho=rng.uniform(-1, 1),
                mu=rng.uniform(-0.1, 0.1),
            )
            c0 = complex(rng.normal(), rng.normal())
            d0 = complex(rng.normal(), rng.normal())
            x = complex(rng.uniform(-50, 50), rng.uniform(-1, 1))
            out = period_coeffs(0.0, x, c0, d0, p)
            assert abs(out.c - c0) <= 1e-14 * max(1, abs(c0))
            assert abs(out.d2 - d0) <= 1e-14 * max(1, abs(d0))


class TestClosedFormAgainstOde:
    def test_frozen_oracle_value(self):
        # RK (DOP853, rtol 1e-12) value for tau=1, X=1 under BASE params
        out = period_coeffs(1.0, 1.0, 0.0, 0.0, BASE)
        assert out.c == pytest.approx(-0.01220785746856573 - 0.010246971232805263j, abs=1e-8)
        assert out.d2 == pytest.approx(-0.238532238876543 - 0.18467192001814622j, abs=1e-8)

    def test_against_ode_with_generalized_initial_conditions(self):
        rng = np.random.default_rng(11)
        for _ in range(20):
            p = PeriodParams(
                kappa=rng.uniform(0, 20), theta=rng.uniform(0.001, 1),
                sigma=rng.uniform(0.01, 1.5), rho=rng.uniform(-1, 1),
                mu=rng.uniform(-0.1, 0.1),
            )
            tau = rng.uniform(0.01, 10)
            x = rng.uniform(-50, 50)
            c0 = complex(0.3 * rng.normal(), 0.3 * rng.normal())
            d0 = complex(0.3 * rng.normal() - 0.5, 0.3 * rng.normal())
            out = period_coeffs(tau, x, c0, d0, p)
            c_ref, d_ref = riccati_ode_coeffs(tau, x, c0, d0, p)
            assert abs(out.c - c_ref) <= 1e-8
            assert abs(out.d2 - d_ref) <= 1e-8

    def test_ode_residual_by_finite_differences(self):
        # d/dtau of the closed forms must satisfy the Riccati system
        rng = np.random.default_rng(3)
        for _ in range(20):
            p = PeriodParams(
                kappa=rng.uniform(0.1, 10), theta=rng.uniform(0.01, 0.5),
                sigma=rng.uniform(0.1, 1.5), rho=rng.uniform(-0.95, 0.95),
                mu=rng.uniform(-0.05, 0.05),
            )
            tau = rng.uniform(0.1, 8)
            x = rng.uniform(-30, 30)
            h = 1e-5
            up = period_coeffs(tau + h, x, 0.0, 0.0, p)
            dn = period_coeffs(tau - h, x, 0.0, 0.0, p)
            mid = period_coeffs(tau, x, 0.0, 0.0, p)
            dc = (up.c - dn.c) / (2 * h)
            dd = (up.d2 - dn.d2) / (2 * h)
            a_coef = -0.5 * p.sigma**2
            b_coef = p.kappa - 1j * x * p.sigma * p.rho
            m_coef = 0.5 * x * (1j + x)
            rhs_d = -(a_coef * mid.d2**2 + b_coef * mid.d2 + m_coef)
            rhs_c = 1j * x * p.mu + p.kappa * p.theta * mid.d2
            assert abs(dd - rhs_d) <= 1e-6 * max(1.0, abs(rhs_d))
            assert abs(dc - rhs_c) <= 1e-6 * max(1.0, abs(rhs_c))


class TestIdentities:
    def test_zero_argument_gives_unit_cf(self):
        out = period_coeffs(3.0, 0.0, 0.0, 0.0, BASE)
        assert out.c == 0
        assert out.d2 == 0
        assert out.d1 == 0
        assert evaluate_cf(out, 1.3, 0.2) == 1.0

    def test_martingale_identity_at_minus_i(self):
        # mu = 0: the drift term of the Riccati system vanishes at X = -i
        for p in (BASE, PeriodParams(kappa=0.3, theta=0.04, sigma=0.9, rho=0.9)):
            out = period_coeffs(5.0, -1j, 0.0, 0.0, p)
            assert out.c == 0
            assert out.d2 == 0
            x0 = 1.234
            assert evaluate_cf(out, x0, 0.07) == pytest.approx(np.exp(x0), rel=1e-14)

    def test_conjugate_symmetry(self):
        rng = np.random.default_rng(5)
        for _ in range(20):
            p = PeriodParams(
                kappa=rng.uniform(0, 15), theta=rng.uniform(0.001, 0.8),
                sigma=rng.uniform(0.05, 1.5), rho=rng.uniform(-1, 1),
                mu=rng.uniform(-0.1, 0.1),
            )
            tau = rng.uniform(0.05, 10)
            x = rng.uniform(0.01, 50)
            pos = period_coeffs(tau, x, 0.0, 0.0, p)
            neg = period_coeffs(tau, -x, 0.0, 0.0, p)
            assert abs(np.conj(pos.c) - neg.c) <= 1e-12 * max(1, abs(pos.c))
            assert abs(np.conj(pos.d2) - neg.d2) <= 1e-12 * max(1, abs(pos.d2))

    def test_decaying_branch_never_explodes(self):
        # |exp(-d tau)| <= 1 by the principal-root choice, so coefficients
        # stay finite out to very long maturities and large arguments
        for tau in (1.0, 10.0, 50.0):
            for x in (0.5, 5.0, 50.0, 500.0):
                out = period_coeffs(tau, x, 0.0, 0.0, BASE)
                assert np.isfinite(out.c)
                assert np.isfinite(out.d2)

    def test_small_sigma_matches_deterministic_variance_limit(self):
        # sigma -> 0 with v0 = theta: lognormal with variance theta * tau
        p = PeriodParams(kappa=1.7, theta=0.0225, sigma=1e-6, rho=0.0)
        for x in (0.5, 1.7, 6.0):
            out = period_coeffs(1.0, x, 0.0, 0.0, p)
            phi = evaluate_cf(out, 0.0, 0.0225)
            xc = complex(x)
            ref = np.exp(-0.5 * xc * (1j + xc) * 0.0225)
            assert abs(phi - ref) <= 1e-9 * abs(ref)


class TestVectorization:
    def test_array_argument_matches_scalars(self):
        xs = np.array([0.3, 1.0, -2.0, 7.5])
        out = period_coeffs(0.8, xs, 0.0, 0.0, BASE)
        assert isinstance(out, CfCoeffs)
        assert out.c.shape == xs.shape
        for k, x in enumerate(xs):
            single = period_coeffs(0.8, complex(x), 0.0, 0.0, BASE)
            assert out.c[k] == single.c
            assert out.d2[k] == single.d2

    def test_evaluate_cf_broadcasts(self):
        xs = np.linspace(0.1, 5, 9)
        out = period_coeffs(0.8, xs, 0.0, 0.0, BASE)
        vals = evaluate_cf(out, 0.3, 0.04)
        assert vals.shape == xs.shape
        assert np.all(np.isfinite(vals))


class TestErrors:
    def test_negative_tau_rejected(self):
        with pytest.raises(ParameterDomainError):
            period_coeffs(-0.5, 1.0, 0.0, 0.0, BASE)

    def test_singular_denominator_raises(self):
        # initial condition above the unstable Riccati fixed point blows the
        # solution up in finite time; at X = 0 the blow-up instant solves
        # 2 = sigma^2 d0 (1 - e^{-kappa tau})/kappa in closed form
        p = PeriodParams(kappa=1.0, theta=0.04, sigma=0.5, rho=0.0)
        d0 = 8.5
        tau_star = -np.log(1.0 - 2.0 * p.kappa / (p.sigma**2 * d0)) / p.kappa
        with pytest.raises(NumericalSingularityError):
            period_coeffs(tau_star, 0.0, 0.0, d0, p)
