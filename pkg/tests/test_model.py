"""Parameter containers, initial profiles, and admissibility checks."""

import math

import numpy as np
import pytest

from falsebottom.model import (
    BoundaryPath,
    PhysicalParams,
    ProblemSetup,
    Profile,
    VState,
    derived_stefan_coefficients,
    freezing_salinity,
    validate_setup,
)
from falsebottom.quad import SampledFunction, TimeGrid

from conftest import reference_params, reference_setup


class TestDerivedCoefficients:
    def test_simple_ratio(self):
        assert derived_stefan_coefficients(2.0, 4.0, 1.0, 2.0) == (1.0, 2.0)

    def test_homogeneity_in_latent_heat_density(self):
        a = derived_stefan_coefficients(2.2, 0.6, 917.0, 3.34e5)
        b = derived_stefan_coefficients(2.2, 0.6, 2 * 917.0, 3.34e5)
        assert b[0] == pytest.approx(a[0] / 2.0, rel=1e-15)
        assert b[1] == pytest.approx(a[1] / 2.0, rel=1e-15)

    def test_linearity_in_conductivities(self):
        a = derived_stefan_coefficients(1.0, 1.0, 900.0, 3e5)
        b = derived_stefan_coefficients(3.0, 5.0, 900.0, 3e5)
        assert b[0] == pytest.approx(3.0 * a[0], rel=1e-15)
        assert b[1] == pytest.approx(5.0 * a[1], rel=1e-15)

    @pytest.mark.parametrize("bad", [(0.0, 1, 1, 1), (1, -2.0, 1, 1), (1, 1, 0.0, 1), (1, 1, 1, -1.0)])
    def test_rejects_nonpositive_inputs(self, bad):
        with pytest.raises(ValueError):
            derived_stefan_coefficients(*bad)


class TestFreezingSalinity:
    def test_zero_point(self):
        p = reference_params()
        assert freezing_salinity(0.0, 0.0, p) == 0.0

    def test_standard_seawater(self):
        # -m0 * S = T0 at equilibrium: S = 1.836 / 0.054 = 34 psu.
        p = reference_params()
        assert freezing_salinity(-1.836, 0.0, p) == pytest.approx(34.0, rel=1e-12)

    def test_kinetic_undercooling_term(self):
        lam_i, lam_o = derived_stefan_coefficients(2.2, 0.6, 917.0, 3.34e5)
        p = PhysicalParams(
            lambda_I_tilde=lam_i, lambda_O_tilde=lam_o,
            D_I=1.17e-6, D_O=1.4e-7, D=7e-10, m0=0.054, n0=10.0,
        )
        # S = -(T0 + n0 dT0)/m0 = -(-1 + 0.1)/0.054.
        assert freezing_salinity(-1.0, 0.01, p) == pytest.approx(0.9 / 0.054, rel=1e-12)

    def test_vectorized(self):
        p = reference_params()
        t0 = np.array([0.0, -0.54, -1.08])
        out = freezing_salinity(t0, np.zeros(3), p)
        assert np.allclose(out, [0.0, 10.0, 20.0], rtol=1e-12)


class TestPhysicalParams:
    def test_accepts_consistent_raw_quadruple(self):
        lam_i, lam_o = derived_stefan_coefficients(2.2, 0.6, 917.0, 3.34e5)
        p = PhysicalParams(
            lambda_I_tilde=lam_i, lambda_O_tilde=lam_o,
            D_I=1.17e-6, D_O=1.4e-7, D=7e-10, m0=0.054, n0=4e5,
            lambda_I=2.2, lambda_O=0.6, rho_I=917.0, L_f=3.34e5,
        )
        assert p.lambda_I == 2.2

    def test_rejects_inconsistent_raw_quadruple(self):
        lam_i, lam_o = derived_stefan_coefficients(2.2, 0.6, 917.0, 3.34e5)
        with pytest.raises(ValueError):
            PhysicalParams(
                lambda_I_tilde=lam_i, lambda_O_tilde=lam_o,
                D_I=1.17e-6, D_O=1.4e-7, D=7e-10, m0=0.054, n0=4e5,
                lambda_I=2.2, lambda_O=0.6, rho_I=917.0, L_f=3.00e5,
            )

    def test_rejects_partial_raw_quadruple(self):
        lam_i, lam_o = derived_stefan_coefficients(2.2, 0.6, 917.0, 3.34e5)
        with pytest.raises(ValueError):
            PhysicalParams(
                lambda_I_tilde=lam_i, lambda_O_tilde=lam_o,
                D_I=1.17e-6, D_O=1.4e-7, D=7e-10, m0=0.054, n0=4e5,
                lambda_I=2.2,
            )

    @pytest.mark.parametrize(
        "field,value",
        [
            ("lambda_I_tilde", 0.0),
            ("lambda_O_tilde", -1.0),
            ("D_I", 0.0),
            ("D_O", -2.0),
            ("D", 0.0),
            ("m0", 0.0),
            ("n0", 0.0),
        ],
    )
    def test_rejects_degenerate_values(self, field, value):
        lam_i, lam_o = derived_stefan_coefficients(2.2, 0.6, 917.0, 3.34e5)
        kwargs = dict(
            lambda_I_tilde=lam_i, lambda_O_tilde=lam_o,
            D_I=1.17e-6, D_O=1.4e-7, D=7e-10, m0=0.054, n0=4e5,
        )
        kwargs[field] = value
        with pytest.raises(ValueError):
            PhysicalParams(**kwargs)


class TestProfile:
    def test_constant(self):
        f = Profile.constant(-0.5, -1.0, 0.0)
        assert f(-0.3) == -0.5
        assert f(5.0) == -0.5  # constant everywhere
        assert f.deriv(-0.3) == 0.0
        assert f.far_field == -0.5

    def test_linear_with_clamping(self):
        f = Profile.linear(0.0, -0.5, 10.0, 0.0, 0.05)
        assert f(0.0) == -0.5
        assert f(0.05) == pytest.approx(0.0)
        assert f(0.025) == pytest.approx(-0.25)
        # Clamped outside [x_lo, x_hi]:
        assert f(-1.0) == -0.5
        assert f(1.0) == pytest.approx(0.0)
        assert f.deriv(0.02) == 10.0
        assert f.deriv(-1.0) == 0.0
        assert f.far_field == -0.5

    def test_linear_one_sided_derivatives_at_kinks(self):
        f = Profile.linear(0.0, -0.5, 10.0, 0.0, 0.05)
        assert f.deriv(0.0, side=+1) == 10.0
        assert f.deriv(0.0, side=-1) == 0.0
        assert f.deriv(0.05, side=-1) == 10.0
        assert f.deriv(0.05, side=+1) == 0.0

    def test_erf_step(self):
        f = Profile.erf_step(-0.5, 0.0, -0.1, 0.02, -1.0, 0.0)
        assert f(-0.1) == pytest.approx(-0.25)
        assert f(-1.0) == pytest.approx(-0.5, abs=1e-12)
        assert f(0.0) == pytest.approx(0.0, abs=1e-12)
        mid = -0.5 + 0.25 * (1.0 + math.erf(0.5))
        assert f(-0.09) == pytest.approx(mid, rel=1e-12)
        assert f.far_field == -0.5
        with pytest.raises(ValueError):
            Profile.erf_step(-0.5, 0.0, -0.1, 0.0, -1.0, 0.0)

    def test_table(self):
        f = Profile.table([0.0, 1.0, 2.0], [0.0, 2.0, 1.0])
        assert f(0.5) == 1.0
        assert f(1.5) == 1.5
        assert f(-3.0) == 0.0  # constant extrapolation
        assert f(9.0) == 1.0
        assert f.deriv(0.5) == 2.0
        assert f.deriv(1.0, side=-1) == 2.0
        assert f.deriv(1.0, side=+1) == -1.0
        assert f.far_field == 0.0

    def test_table_validation(self):
        with pytest.raises(ValueError):
            Profile.table([0.0, 0.0, 1.0], [0.0, 1.0, 2.0])
        with pytest.raises(ValueError):
            Profile.table([0.0], [1.0])

    def test_array_evaluation(self):
        f = Profile.linear(0.0, -0.5, 10.0, 0.0, 0.05)
        xs = np.array([-0.5, 0.0, 0.025, 0.05, 0.2])
        assert np.allclose(f(xs), [-0.5, -0.5, -0.25, 0.0, 0.0], atol=1e-14)


class TestValidateSetup:
    def test_reference_setup_is_admissible(self):
        report = validate_setup(reference_setup())
        assert report.ok
        assert len(report.violations) == 0

    def test_rejects_disordered_interfaces(self):
        s = reference_setup()
        bad = ProblemSetup(
            params=s.params, h0_init=0.06, hu_init=0.05,
            T_ocean_init=s.T_ocean_init, T_ice_init=s.T_ice_init, S_init=s.S_init,
        )
        report = validate_setup(bad)
        assert not report.ok
        assert any(v.code == "H1" for v in report.violations)

    def test_rejects_temperature_jump_at_contact(self):
        s = reference_setup()
        bad = ProblemSetup(
            params=s.params, h0_init=0.0, hu_init=0.05,
            T_ocean_init=Profile.constant(-0.4, -1.0, 0.0),
            T_ice_init=s.T_ice_init, S_init=s.S_init,
        )
        report = validate_setup(bad)
        assert not report.ok
        assert any(v.code == "H2" for v in report.violations)

    def test_rejects_warm_ice_top(self):
        s = reference_setup()
        bad = ProblemSetup(
            params=s.params, h0_init=0.0, hu_init=0.05,
            T_ocean_init=s.T_ocean_init,
            T_ice_init=Profile.linear(0.0, -0.5, 8.0, 0.0, 0.05),  # -0.1 at hu
            S_init=s.S_init,
        )
        report = validate_setup(bad)
        assert not report.ok
        assert any(v.code == "H2" for v in report.violations)

    def test_gap_property(self):
        s = reference_setup()
        assert s.gap == pytest.approx(0.05)


class TestVState:
    def test_zeros_and_norm(self):
        g = TimeGrid(0.0, 1.0, 4)
        v = VState.zeros(g)
        assert v.sup_norm() == 0.0
        assert v.as_matrix().shape == (4, 5)

    def test_from_arrays_and_distance(self):
        g = TimeGrid(0.0, 1.0, 4)
        ones = np.ones(5)
        v = VState.from_arrays(g, 1.0 * ones, 2.0 * ones, -3.0 * ones, 0.5 * ones)
        assert v.sup_norm() == 3.0
        w = VState.zeros(g)
        assert v.distance(w) == 3.0
        assert v.distance(v) == 0.0

    def test_from_arrays_shape_mismatch(self):
        g = TimeGrid(0.0, 1.0, 4)
        with pytest.raises(ValueError):
            VState.from_arrays(g, np.ones(4), np.ones(5), np.ones(5), np.ones(5))


class TestBoundaryPath:
    def test_curves_and_min_gap(self):
        g = TimeGrid(0.0, 2.0, 2)
        h0 = SampledFunction(g, np.array([0.0, 0.01, 0.015]))
        hu = SampledFunction(g, np.array([0.05, 0.045, 0.044]))
        dh0 = SampledFunction(g, np.array([0.01, 0.008, 0.002]))
        dhu = SampledFunction(g, np.array([-0.005, -0.003, 0.0]))
        path = BoundaryPath(g, h0, hu, dh0, dhu)
        assert path.min_gap() == pytest.approx(0.044 - 0.015)
        c = path.h0_curve()
        assert c.position(1.0) == pytest.approx(0.01)
        assert c.velocity(1.0) == pytest.approx(0.008)
        assert path.hu_curve().position(2.0) == pytest.approx(0.044)
