"""Quadrature layer: product rule for the 1/sqrt singularity, spatial
convolutions against the heat kernel, and the layer-potential history rule.

Closed-form references:
  * int_0^T 1/sqrt(T-tau) dtau             = 2 sqrt(T)
  * int_0^T tau/sqrt(T-tau) dtau           = (4/3) T^(3/2)
  * int_0^1 sqrt(tau)/sqrt(1-tau) dtau     = pi/2
  * int_a^b G(x,t;xi,0) dxi                = (erf(p_a) - erf(p_b)) / 2,
    p_y = (x - y)/(2 sqrt(kappa t))
  * int_a^b dG/dx dxi                      = G(x,t;a,0) - G(x,t;b,0)
  * kappa int_0^t G_x(s0 -+ eps, t; s0, tau) dtau
                                           = +-(1/2) erfc(eps/(2 sqrt(kappa t)))
"""

import math

import numpy as np
import pytest
from scipy.integrate import quad

from falsebottom.kernels import Curve, FactoredBoundaryKernel, GreenKernel, green_eval
from falsebottom.quad import (
    SampledFunction,
    TimeGrid,
    abel_integrate,
    abel_weights,
    finite_convolve,
    gauss_convolve,
    layer_history,
    running_integral,
    semi_infinite_convolve,
)


def abel_reference(times, values, T):
    """Exact integral of the piecewise-linear interpolant against 1/sqrt(T-tau).

    Per segment [a, b], writing u = T - tau, ua = T - a, ub = T - b, the hat
    basis integrals reduce (after cancelling the segment length) to

        int (b-tau)/sqrt(T-tau) dtau = d/(sa+sb) [(2/3)(ua + sa sb + ub) - 2 ub]
        int (tau-a)/sqrt(T-tau) dtau = d/(sa+sb) [2 ua - (2/3)(ua + sa sb + ub)]

    with sa = sqrt(ua), sb = sqrt(ub), d = b - a; this form is stable for
    tiny segments where antiderivative differences cancel catastrophically.
    """
    total = 0.0
    for j in range(len(times) - 1):
        a, b = times[j], times[j + 1]
        ua, ub = T - a, T - b
        sa, sb = math.sqrt(ua), math.sqrt(ub)
        mid = (2.0 / 3.0) * (ua + sa * sb + ub)
        total += (values[j] * (mid - 2.0 * ub) + values[j + 1] * (2.0 * ua - mid)) / (
            sa + sb
        )
    return total


class TestTimeGrid:
    def test_nodes_and_dt(self):
        g = TimeGrid(0.0, 2.0, 4)
        assert g.dt == 0.5
        assert np.allclose(g.nodes, [0.0, 0.5, 1.0, 1.5, 2.0])
        assert g.nodes[0] == 0.0 and g.nodes[-1] == 2.0

    def test_rejects_bad_bounds(self):
        with pytest.raises(ValueError):
            TimeGrid(1.0, 1.0, 4)
        with pytest.raises(ValueError):
            TimeGrid(0.0, -1.0, 4)
        with pytest.raises(ValueError):
            TimeGrid(0.0, 1.0, 0)

    def test_sampled_function_validation(self):
        g = TimeGrid(0.0, 1.0, 4)
        with pytest.raises(ValueError):
            SampledFunction(g, np.zeros(4))  # needs n_steps + 1 values
        with pytest.raises(ValueError):
            SampledFunction(g, np.array([0.0, 1.0, np.nan, 0.0, 0.0]))
        f = SampledFunction(g, np.linspace(0.0, 1.0, 5))
        assert f(0.375) == pytest.approx(0.375)


class TestAbel:
    def test_exact_on_piecewise_linear(self):
        rng = np.random.default_rng(42)
        for n in (1, 2, 7, 33):
            times = np.sort(rng.uniform(0.0, 3.0, size=n + 1))
            times[0] = 0.0
            if np.any(np.diff(times) <= 0):
                continue
            values = rng.uniform(-2.0, 2.0, size=n + 1)
            w = abel_weights(times)
            got = float(w @ values)
            ref = abel_reference(times, values, times[-1])
            assert got == pytest.approx(ref, rel=1e-12, abs=1e-14)

    def test_constant_and_linear_closed_forms(self):
        g = TimeGrid(0.0, 2.0, 16)
        ones = SampledFunction(g, np.ones(17))
        ramp = SampledFunction(g, g.nodes.copy())
        for k in (1, 5, 16):
            tk = g.nodes[k]
            assert abel_integrate(ones, k) == pytest.approx(2.0 * math.sqrt(tk), rel=1e-13)
            assert abel_integrate(ramp, k) == pytest.approx(
                (4.0 / 3.0) * tk**1.5, rel=1e-13
            )

    def test_sqrt_oracle_converges_monotonically(self):
        errs = []
        for n in (16, 32, 64):
            g = TimeGrid(0.0, 1.0, n)
            f = SampledFunction(g, np.sqrt(g.nodes))
            errs.append(abs(abel_integrate(f, n) - math.pi / 2.0))
        assert errs[0] > errs[1] > errs[2]
        assert errs[2] <= 2e-3

    def test_cosine_against_adaptive_quadrature(self):
        T = 1.7
        ref, _ = quad(lambda tau: math.cos(tau), 0.0, T, weight="alg", wvar=(0.0, -0.5))
        errs = []
        for n in (32, 64, 128):
            g = TimeGrid(0.0, T, n)
            f = SampledFunction(g, np.cos(g.nodes))
            errs.append(abs(abel_integrate(f, n) - ref))
        assert errs[0] > errs[1] > errs[2]
        assert errs[2] <= 1e-4 * abs(ref)

    def test_rejects_bad_inputs(self):
        with pytest.raises(ValueError):
            abel_weights(np.array([0.0, 1.0, 1.0]))
        with pytest.raises(ValueError):
            abel_weights(np.array([[0.0, 1.0]]))
        g = TimeGrid(0.0, 1.0, 4)
        f = SampledFunction(g, np.ones(5))
        for bad in (0, 5, 2.5):
            with pytest.raises(ValueError):
                abel_integrate(f, bad)

    def test_single_node_weights_are_zero(self):
        assert abel_weights(np.array([0.7])) == pytest.approx([0.0])


class TestRunningIntegral:
    def test_exact_for_linear(self):
        g = TimeGrid(0.0, 3.0, 6)
        f = SampledFunction(g, 2.0 * g.nodes + 1.0)
        acc = running_integral(f)
        assert acc.values[0] == 0.0
        expect = g.nodes**2 + g.nodes
        assert np.allclose(acc.values, expect, rtol=1e-14, atol=1e-14)


class TestSpatialConvolutions:
    def test_rejects_bad_time_and_bounds(self):
        k = GreenKernel(1.0)
        with pytest.raises(ValueError):
            gauss_convolve(k, 0.0, 0.0, np.cos, -1.0, 1.0)
        with pytest.raises(ValueError):
            gauss_convolve(k, 0.0, 1.0, np.cos, 1.0, -1.0)
        with pytest.raises(ValueError):
            finite_convolve(k, 0.0, 1.0, np.cos, -math.inf, 1.0)

    def test_constant_mass(self):
        k = GreenKernel(0.5)
        val = semi_infinite_convolve(k, -1.0, 2.0, lambda xi: 3.0 * np.ones_like(xi), 50.0)
        assert abs(val - 3.0) <= 3.0 * 1e-10

    def test_half_mass_at_boundary(self):
        k = GreenKernel(0.5)
        ones = lambda xi: np.ones_like(xi)
        b = 0.3
        for x, expect in ((b, 0.5), (b - 0.2, 0.5 * math.erfc(-0.2 / (2 * math.sqrt(0.5 * 1.0))))):
            val = semi_infinite_convolve(k, x, 1.0, ones, b)
            # For domain (-inf, b]: mass = (1/2) erfc((x - b)/(2 sqrt(kappa t))).
            exact = 0.5 * math.erfc((x - b) / (2.0 * math.sqrt(0.5 * 1.0)))
            assert val == pytest.approx(exact, rel=1e-8)
            assert val == pytest.approx(expect, rel=1e-8)

    def test_ramp_closed_form(self):
        # Heat evolution of max(xi, 0): u(x,t) = (x/2) erfc(-x/(2w)) + w/sqrt(pi) e^(-x^2/(4w^2)),
        # w = sqrt(kappa t).
        k = GreenKernel(1.0)
        t = 0.25
        w = math.sqrt(k.kappa * t)
        # The integrand's kink generally falls inside a fixed Gauss panel,
        # which caps the rule's accuracy near 7e-6 relative for such data.
        for x in (-0.5, 0.0, 0.4, 1.0):
            val = gauss_convolve(k, x, t, lambda xi: np.maximum(xi, 0.0), -math.inf, math.inf)
            exact = 0.5 * x * math.erfc(-x / (2.0 * w)) + w / math.sqrt(math.pi) * math.exp(
                -(x**2) / (4.0 * w**2)
            )
            assert val == pytest.approx(exact, rel=2e-5, abs=1e-12)

    def test_finite_window_closed_forms(self):
        k = GreenKernel(2.0)
        x, t, a, b = 0.3, 0.7, -0.5, 0.9
        w = 2.0 * math.sqrt(k.kappa * t)
        ones = lambda xi: np.ones_like(xi)
        mass = finite_convolve(k, x, t, ones, a, b)
        exact = 0.5 * (math.erf((x - a) / w) - math.erf((x - b) / w))
        assert mass == pytest.approx(exact, rel=1e-10)
        grad = finite_convolve(k, x, t, ones, a, b, deriv=True)
        exact_grad = green_eval(k, x, t, a, 0.0) - green_eval(k, x, t, b, 0.0)
        assert grad == pytest.approx(exact_grad, rel=1e-10)

    def test_delta_limit_recovers_integrand(self):
        k = GreenKernel(1.0)
        val = gauss_convolve(k, 0.3, 1e-10, np.cos, -math.inf, math.inf)
        assert val == pytest.approx(math.cos(0.3), rel=1e-6)

    def test_matches_adaptive_quadrature_on_smooth_data(self):
        k = GreenKernel(0.8)
        x, t = 0.2, 0.6
        f = lambda xi: np.exp(-((xi - 0.5) ** 2)) * np.sin(3.0 * xi)
        ref, _ = quad(
            lambda xi: green_eval(k, x, t, xi, 0.0) * float(f(np.asarray(xi))),
            -12.0,
            12.0,
            limit=400,
        )
        val = gauss_convolve(k, x, t, f, -math.inf, math.inf)
        assert val == pytest.approx(ref, rel=1e-9)


class TestLayerHistory:
    def test_off_curve_matches_adaptive_quadrature(self):
        k = GreenKernel(0.7)
        t = 1.3

        def integrand(tau):
            xi = 0.1 + 0.02 * math.sin(tau)
            return green_eval(k, 0.6, t, xi, tau) * math.cos(0.8 * tau)

        ref, _ = quad(integrand, 0.0, t, limit=400)
        errs = []
        for n in (96, 192):
            times = TimeGrid(0.0, t, n).nodes
            curve = Curve(times, 0.1 + 0.02 * np.sin(times), 0.02 * np.cos(times))
            dens = np.cos(0.8 * times)
            fk = FactoredBoundaryKernel(k, curve, 0.6, "value")
            errs.append(abs(layer_history(fk, t, times, dens) - ref))
        assert errs[0] <= 5e-5 * abs(ref)
        assert errs[1] < errs[0]

    def test_on_curve_matches_singular_quadrature(self):
        from falsebottom.kernels import factored_eval

        k = GreenKernel(0.7)
        t = 1.3
        times = TimeGrid(0.0, t, 128).nodes
        curve = Curve(times, 0.1 + 0.05 * times, 0.05 * np.ones_like(times))
        dens = 1.0 + 0.5 * times
        fk = FactoredBoundaryKernel(k, curve, curve, "d_dx")
        val = layer_history(fk, t, times, dens)
        ref, _ = quad(
            lambda tau: factored_eval(fk, t, tau) * (1.0 + 0.5 * tau),
            0.0,
            t,
            weight="alg",
            wvar=(0.0, -0.5),
        )
        assert val == pytest.approx(ref, rel=1e-5)

    def test_precomputed_weights_match(self):
        k = GreenKernel(1.0)
        t = 1.0
        times = TimeGrid(0.0, t, 64).nodes
        curve = Curve(times, np.full_like(times, 0.3), np.zeros_like(times))
        dens = np.exp(-times)
        fk = FactoredBoundaryKernel(k, curve, curve, "value")
        w = abel_weights(times)
        assert layer_history(fk, t, times, dens, weights=w) == layer_history(
            fk, t, times, dens
        )

    @pytest.mark.parametrize("side,sign", [("left", 1.0), ("right", -1.0)])
    def test_gradient_layer_jump_relation(self, side, sign):
        # kappa * int_0^t G_x(x, t; s0, tau) p0 dtau tends to +-p0/2 as x
        # approaches the constant curve s0; the finite-eps value is
        # sign * (p0/2) erfc(eps / (2 sqrt(kappa t))).
        kappa, t, s0, p0 = 1.0, 1.0, 0.3, 1.0
        k = GreenKernel(kappa)
        grid = TimeGrid(0.0, t, 256)
        curve = Curve(np.array([0.0, t]), np.array([s0, s0]), np.zeros(2))
        dens = p0 * np.ones(grid.n_steps + 1)
        vals = []
        for j in (2, 3, 4, 5):
            eps = 10.0**-j * math.sqrt(kappa * t)
            fk = FactoredBoundaryKernel(k, curve, s0 - sign * eps, "d_dx")
            val = kappa * layer_history(fk, t, grid.nodes, dens)
            exact = sign * 0.5 * p0 * math.erfc(eps / (2.0 * math.sqrt(kappa * t)))
            assert abs(val - exact) <= 1e-6
            vals.append(val)
        # One step of Richardson in eps (ratio 10, first order).
        extrapolated = vals[-1] + (vals[-1] - vals[-2]) / 9.0
        assert abs(extrapolated - sign * 0.5 * p0) <= 1e-4
