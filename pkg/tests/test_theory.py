"""Closed-form constants against independent quadrature and root oracles."""

import math

import numpy as np
import pytest
import scipy.integrate
import scipy.optimize
import scipy.special
from hypothesis import assume, given, settings
from hypothesis import strategies as st

from rdcheck import (
    exponent_algebra,
    fit_rate,
    free_space_constants,
    gamma_fn,
    gaussian_moment,
    interpolation_constants,
    optimal_k,
    quad_equilibrium,
)

# Hardcoded unit-sphere surface areas for n = 1, 2, 3; independent of the
# package's gamma implementation.
SPHERE_AREA = {1: 2.0, 2: 2.0 * math.pi, 3: 4.0 * math.pi}


def moment_oracle(n: int, delta: float) -> float:
    """Radial quadrature of |y|^delta exp(-|y|^2) over R^n."""
    # The integrand is below 1e-60 past r = 12, so the truncation is free.
    radial, err = scipy.integrate.quad(
        lambda r: r ** (n - 1 + delta) * math.exp(-r * r),
        0.0,
        12.0,
        epsabs=1e-13,
        epsrel=1e-13,
        limit=200,
    )
    assert err < 1e-12
    return SPHERE_AREA[n] * radial


def equilibrium_oracle(m13: float, m23: float, m24: float) -> np.ndarray:
    """Bisection on the balance g(s) = (m13-s)(m23-s) - s(m24-m23+s).

    s = u3; g is strictly decreasing on [0, min(m13, m23)] with g(0) > 0,
    so the root there is unique.
    """

    def g(s):
        return (m13 - s) * (m23 - s) - s * (m24 - m23 + s)

    hi = min(m13, m23)
    assert g(0.0) > 0.0 and g(hi) < 0.0
    u3 = scipy.optimize.bisect(g, 0.0, hi, xtol=1e-15, rtol=8.9e-16, maxiter=200)
    u1 = m13 - u3
    u2 = m23 - u3
    u4 = m24 - u2
    return np.array([u1, u2, u3, u4])


class TestGammaFn:
    @pytest.mark.parametrize(
        "x,expect",
        [
            (1.0, 1.0),
            (2.0, 1.0),
            (0.5, math.sqrt(math.pi)),
            (1.5, math.sqrt(math.pi) / 2.0),
            (2.5, 3.0 * math.sqrt(math.pi) / 4.0),
            (5.0, 24.0),
            (10.0, 362880.0),
            (20.0, 121645100408832000.0),
        ],
    )
    def test_frozen_values(self, x, expect):
        assert gamma_fn(x) == pytest.approx(expect, rel=1e-13)

    def test_against_scipy_on_a_grid(self):
        xs = np.linspace(0.05, 30.0, 277)
        for x in xs:
            assert gamma_fn(float(x)) == pytest.approx(
                float(scipy.special.gamma(x)), rel=5e-13
            )

    def test_recurrence_below_half(self):
        assert gamma_fn(0.1) * 0.1 == pytest.approx(gamma_fn(1.1), rel=1e-14)

    @pytest.mark.parametrize("bad", [0.0, -1.0, float("inf"), float("nan")])
    def test_domain(self, bad):
        with pytest.raises(ValueError):
            gamma_fn(bad)


class TestGaussianMoment:
    @pytest.mark.parametrize(
        "n,expect",
        [(1, math.pi**0.5), (2, math.pi), (3, math.pi**1.5)],
    )
    def test_zeroth_moment_is_pi_power(self, n, expect):
        assert gaussian_moment(n, 0.0) == pytest.approx(expect, rel=1e-13)

    def test_first_moment_three_dimensions(self):
        assert gaussian_moment(3, 1.0) == pytest.approx(2.0 * math.pi, rel=1e-13)

    @pytest.mark.parametrize("n", [1, 2, 3])
    @pytest.mark.parametrize("delta", [0.0, 0.5, 1.0, 2.0])
    def test_against_quadrature(self, n, delta):
        assert gaussian_moment(n, delta) == pytest.approx(
            moment_oracle(n, delta), rel=1e-9
        )

    @pytest.mark.parametrize("args", [(0, 0.0), (1.5, 0.0), (2, -0.1)])
    def test_domain(self, args):
        with pytest.raises(ValueError):
            gaussian_moment(*args)


class TestInterpolationConstants:
    def test_frozen_triple_one_one_zero(self):
        c = interpolation_constants(1, 1.0, 0.0)
        assert c.b4 == pytest.approx(2.0, rel=1e-12)
        assert c.b5 == pytest.approx(1.0, rel=1e-12)
        assert c.b == pytest.approx(2.0 * math.sqrt(2.0), rel=1e-12)
        assert c.case == "free-space"
        assert c.b1 is None and c.b2 is None and c.b3 is None

    def test_frozen_triple_two_one_zero(self):
        c = interpolation_constants(2, 1.0, 0.0)
        assert c.b4 == pytest.approx(math.pi, rel=1e-12)
        assert c.b5 == pytest.approx(math.pi / 2.0, rel=1e-12)
        assert c.b == pytest.approx(math.sqrt(2.0) * math.pi, rel=1e-12)

    def test_frozen_triple_one_four_zero(self):
        c = interpolation_constants(1, 4.0, 0.0)
        assert c.b4 == pytest.approx(1.0, rel=1e-12)
        assert c.b5 == pytest.approx(0.5, rel=1e-12)
        assert c.b == pytest.approx(math.sqrt(2.0), rel=1e-12)

    def test_diffusion_scaling_laws(self):
        # B4 scales like d^{-1/2} and B5 like d^{(gamma-1)/2}.
        gamma = 0.5
        a = interpolation_constants(2, 1.0, gamma)
        b = interpolation_constants(2, 9.0, gamma)
        assert b.b4 == pytest.approx(a.b4 / 3.0, rel=1e-12)
        assert b.b5 == pytest.approx(a.b5 * 9.0 ** ((gamma - 1.0) / 2.0), rel=1e-12)

    def test_kernel_envelope_hand_case(self):
        c = interpolation_constants(1, 1.0, 0.0, c_n=1.0, kappa_n=1.0)
        assert c.case == "kernel-envelope"
        assert c.b1 == pytest.approx(math.pi, rel=1e-12)
        assert c.b2 == pytest.approx(1.0, rel=1e-12)
        assert c.b3 == pytest.approx(math.sqrt(math.pi), rel=1e-12)
        # combine(B1, B3) with gamma = 0: 2 sqrt(B1 B3).
        assert c.b == pytest.approx(2.0 * math.sqrt(math.pi * math.sqrt(math.pi)), rel=1e-12)
        # The free-space pair is still reported alongside.
        assert c.b4 == pytest.approx(2.0, rel=1e-12)

    def test_free_space_alias(self):
        assert free_space_constants(1, 1.0, 0.0) == interpolation_constants(1, 1.0, 0.0)

    def test_half_supplied_envelope_rejected(self):
        with pytest.raises(ValueError):
            interpolation_constants(1, 1.0, 0.0, c_n=1.0)
        with pytest.raises(ValueError):
            interpolation_constants(1, 1.0, 0.0, kappa_n=1.0)

    @pytest.mark.parametrize(
        "args",
        [(0, 1.0, 0.0), (1.5, 1.0, 0.0), (1, 0.0, 0.0), (1, 1.0, 1.0), (1, 1.0, -0.1)],
    )
    def test_domain(self, args):
        with pytest.raises(ValueError):
            interpolation_constants(*args)


class TestOptimalK:
    def test_zero_forcing_gives_zero(self):
        assert optimal_k(2.0, 1.0, 0.0, 1.0, 0.0) == 0.0

    def test_hand_value(self):
        # sqrt(k) = (2*1 / (1*1*1))^{1/2} = sqrt(2), so k = 2.
        assert optimal_k(2.0, 1.0, 1.0, 1.0, 0.0) == pytest.approx(2.0, rel=1e-12)

    def test_balances_the_two_terms(self):
        # sqrt(k) minimizes b_holder H s^{1-gamma} + b_grad F / s, the shape
        # of the interpolation bound as a function of the damping root.
        gamma, bg, bh, forcing, holder = 0.5, 3.0, 1.7, 2.2, 0.9
        k = optimal_k(bg, bh, forcing, holder, gamma)
        root = math.sqrt(k)

        def objective(s):
            return bh * holder * s ** (1.0 - gamma) + bg * forcing / s

        eps = 1e-6 * root
        lo = objective(root - eps)
        mid = objective(root)
        hi = objective(root + eps)
        assert mid <= lo and mid <= hi

    def test_domain(self):
        with pytest.raises(ValueError):
            optimal_k(2.0, 1.0, -1.0, 1.0, 0.0)
        with pytest.raises(ValueError):
            optimal_k(2.0, 1.0, 1.0, 0.0, 0.0)
        with pytest.raises(ValueError):
            optimal_k(0.0, 1.0, 1.0, 1.0, 0.0)
        with pytest.raises(ValueError):
            optimal_k(2.0, 1.0, 1.0, 1.0, 1.0)


class TestExponentAlgebra:
    def test_frozen_zero_one(self):
        alg = exponent_algebra(0.0, 1.0)
        assert alg.lam == 0.75
        assert alg.admissible is True
        assert alg.xi == 4.0

    def test_frozen_zero_half(self):
        alg = exponent_algebra(0.0, 0.5)
        assert alg.lam == pytest.approx(11.0 / 12.0, rel=1e-14)
        assert alg.admissible is True
        assert alg.xi == pytest.approx(12.0, rel=1e-12)

    def test_inadmissible_pair(self):
        alg = exponent_algebra(1.0, 1.0)  # lambda = 1 exactly
        assert alg.admissible is False
        assert alg.xi is None

    @settings(max_examples=200, deadline=None)
    @given(
        st.floats(0.0, 2.0, allow_nan=False),
        st.floats(0.01, 1.0, allow_nan=False),
    )
    def test_admissibility_equivalence(self, eps, delta):
        threshold = delta / (2.0 - delta)
        assume(abs(eps - threshold) > 1e-9)
        alg = exponent_algebra(eps, delta)
        assert alg.admissible == (eps < threshold)
        if alg.admissible:
            assert alg.xi > 0.0

    def test_domain(self):
        with pytest.raises(ValueError):
            exponent_algebra(-0.1, 1.0)
        with pytest.raises(ValueError):
            exponent_algebra(0.0, 0.0)
        with pytest.raises(ValueError):
            exponent_algebra(0.0, 1.5)


class TestQuadEquilibrium:
    def test_frozen_symmetric(self):
        eq = quad_equilibrium(2.0, 2.0, 2.0)
        np.testing.assert_allclose(eq.as_array(), [1.0, 1.0, 1.0, 1.0], atol=1e-15)

    def test_frozen_asymmetric(self):
        eq = quad_equilibrium(1.0, 2.0, 3.0)
        np.testing.assert_allclose(eq.as_array(), [0.5, 1.5, 0.5, 1.5], rtol=1e-15)

    def test_against_bisection_oracle(self):
        rng = np.random.default_rng(11)
        done = 0
        while done < 200:
            m13, m23, m24 = rng.uniform(0.05, 5.0, size=3)
            if m13 + m24 <= m23 + 1e-9:
                continue
            ours = quad_equilibrium(m13, m23, m24).as_array()
            oracle = equilibrium_oracle(m13, m23, m24)
            np.testing.assert_allclose(ours, oracle, rtol=1e-10, atol=1e-12)
            done += 1

    @settings(max_examples=150, deadline=None)
    @given(
        st.floats(0.05, 10.0, allow_nan=False),
        st.floats(0.05, 10.0, allow_nan=False),
        st.floats(0.05, 10.0, allow_nan=False),
    )
    def test_identities_on_admissible_masses(self, m13, m23, m24):
        assume(m13 + m24 > m23 + 1e-6)
        eq = quad_equilibrium(m13, m23, m24)
        u = eq.as_array()
        assert np.all(u > 0.0)
        assert u[0] + u[2] == pytest.approx(m13, rel=1e-12)
        assert u[1] + u[2] == pytest.approx(m23, rel=1e-12)
        assert u[1] + u[3] == pytest.approx(m24, rel=1e-12)
        assert u[0] * u[1] == pytest.approx(u[2] * u[3], rel=1e-9, abs=1e-12)

    def test_boundary_raises_with_component_name(self):
        # m13 + m24 <= m23 makes u1 nonpositive.
        with pytest.raises(ValueError, match="u1"):
            quad_equilibrium(1.0, 4.0, 2.0)

    def test_nonpositive_mass_rejected(self):
        with pytest.raises(ValueError, match="m23"):
            quad_equilibrium(1.0, 0.0, 1.0)


class TestFitRate:
    def test_exact_exponential(self):
        t = np.linspace(0.0, 3.0, 40)
        y = 3.0 * np.exp(-2.0 * t)
        fit = fit_rate(t, y, "exponential")
        assert fit.rate == pytest.approx(2.0, rel=1e-12)
        assert fit.prefactor == pytest.approx(3.0, rel=1e-12)
        assert fit.r_squared == pytest.approx(1.0, abs=1e-12)

    def test_exact_power_law(self):
        t = np.linspace(0.5, 4.0, 25)
        y = 5.0 * t**1.5
        fit = fit_rate(t, y, "polynomial")
        assert fit.rate == pytest.approx(1.5, rel=1e-12)
        assert fit.prefactor == pytest.approx(5.0, rel=1e-12)

    def test_decaying_power_law_signs(self):
        t = np.linspace(1.0, 8.0, 12)
        fit = fit_rate(t, t**-4.0, "polynomial")
        assert fit.rate == pytest.approx(-4.0, rel=1e-12)

    def test_growth_gives_negative_exponential_rate(self):
        t = np.linspace(0.0, 2.0, 10)
        fit = fit_rate(t, np.exp(1.5 * t), "exponential")
        assert fit.rate == pytest.approx(-1.5, rel=1e-12)

    def test_noisy_data_r_squared_below_one(self):
        t = np.linspace(0.0, 5.0, 60)
        y = np.exp(-t) * (1.0 + 0.02 * np.sin(37.0 * t))
        fit = fit_rate(t, y, "exponential")
        assert 0.9 < fit.r_squared < 1.0
        assert fit.rate == pytest.approx(1.0, rel=0.05)

    def test_errors(self):
        with pytest.raises(ValueError):
            fit_rate([0.0, 1.0, 2.0], [1.0, 1.0, 1.0])
        with pytest.raises(ValueError):
            fit_rate([0.0, 1.0, 2.0, 3.0], [1.0, 0.0, 1.0, 1.0])
        with pytest.raises(ValueError):
            fit_rate([0.0, 1.0, 2.0, 3.0], [1.0, 1.0, 1.0, 1.0], "polynomial")
        with pytest.raises(ValueError):
            fit_rate([2.0, 2.0, 2.0, 2.0], [1.0, 1.0, 1.0, 1.0])
        with pytest.raises(ValueError):
            fit_rate([0.0, 1.0, 2.0, 3.0], [1.0, 1.0, 1.0, 1.0], "cubic")
