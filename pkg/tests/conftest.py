"""Shared fixtures: the reference melt configuration and its expensive solves.

The reference problem is a 5-cm ice layer over a -0.5 degC, 34-psu ocean with
a linear in-ice temperature ramp.  Session-scoped fixtures cache the three
costly artifacts (a single-window Picard fixed point, a multi-window
trajectory, and a fine finite-difference run) so the field, residual, and
cross-validation tests can share them.
"""

import math

import numpy as np
import pytest

from falsebottom import fields, oracle
from falsebottom.model import (
    PhysicalParams,
    ProblemSetup,
    Profile,
    derived_stefan_coefficients,
)
from falsebottom.volterra import SolverConfig, advance, boundaries_from_v, picard_solve

# Conductivities (W/m/K), density (kg/m^3) and latent heat (J/kg) of sea ice;
# diffusivities in m^2/s, m0 in K/psu, n0 in K*s/m.
ICE_CONDUCTIVITY = 2.2
OCEAN_CONDUCTIVITY = 0.6
ICE_DENSITY = 917.0
LATENT_HEAT = 3.34e5

D_ICE = 1.17e-6
D_OCEAN = 1.4e-7
D_SALT = 7e-10
M_LIQUIDUS = 0.054
N_KINETIC = 4.0e5

H0_INIT = 0.0
HU_INIT = 0.05
X_LO = -1.0
T_OCEAN_FAR = -0.5
S_FAR = 34.0
ICE_SLOPE = 10.0

REFERENCE_SIGMA = 2400.0
REFERENCE_T_END = 12000.0
REFERENCE_BALL = 20.0  # 2 * ||P(0)|| for this configuration


def reference_params():
    lam_i, lam_o = derived_stefan_coefficients(
        ICE_CONDUCTIVITY, OCEAN_CONDUCTIVITY, ICE_DENSITY, LATENT_HEAT
    )
    return PhysicalParams(
        lambda_I_tilde=lam_i,
        lambda_O_tilde=lam_o,
        D_I=D_ICE,
        D_O=D_OCEAN,
        D=D_SALT,
        m0=M_LIQUIDUS,
        n0=N_KINETIC,
    )


def reference_setup():
    return ProblemSetup(
        params=reference_params(),
        h0_init=H0_INIT,
        hu_init=HU_INIT,
        T_ocean_init=Profile.constant(T_OCEAN_FAR, X_LO, H0_INIT),
        T_ice_init=Profile.linear(H0_INIT, T_OCEAN_FAR, ICE_SLOPE, H0_INIT, HU_INIT),
        S_init=Profile.constant(S_FAR, X_LO, H0_INIT),
    )


@pytest.fixture(scope="session")
def ref_setup():
    return reference_setup()


@pytest.fixture(scope="session")
def ref_fixed_point(ref_setup):
    """Fixed point of the Picard map over one 2400-s window at 256 steps."""
    cfg = SolverConfig(
        t_end=REFERENCE_SIGMA,
        sigma_cap=REFERENCE_SIGMA,
        n_steps=256,
        picard_tol=1e-10,
    )
    v, diag = picard_solve(ref_setup, cfg, REFERENCE_SIGMA, REFERENCE_BALL)
    path = boundaries_from_v(v, ref_setup)
    traces = fields.interface_traces(v, ref_setup)
    ctx = fields.FieldContext(v, path, traces, ref_setup)
    return {"v": v, "diag": diag, "path": path, "traces": traces, "ctx": ctx}


@pytest.fixture(scope="session")
def ref_trajectory(ref_setup):
    """Five-window trajectory of the full solver out to 12000 s."""
    cfg = SolverConfig(
        t_end=REFERENCE_T_END,
        sigma_cap=REFERENCE_SIGMA,
        n_steps=256,
        picard_tol=1e-10,
    )
    return advance(ref_setup, cfg)


@pytest.fixture(scope="session")
def ref_fd(ref_setup):
    """Fine finite-difference run over the same 12000-s horizon."""
    fdcfg = oracle.FDConfig(
        L=X_LO, n_ocean=400, n_ice=128, dt=5.0, far_T=T_OCEAN_FAR, far_S=S_FAR
    )
    return oracle.fd_solve(ref_setup, fdcfg, REFERENCE_T_END)


# Manufactured moving-window problem: u = exp(-kappa t) sin x solves the heat
# equation exactly, and the window endpoints a(t) < b(t) are prescribed smooth
# curves.  Reassembling u from the Green identity (initial convolution plus
# value and dipole layers on both endpoint histories) exercises every kernel
# and quadrature path with a known answer.
MANU_KAPPA = 0.3
MANU_T = 0.8


def _manu_a(t):
    return 0.2 + 0.04 * np.sin(1.3 * np.asarray(t, dtype=float))


def _manu_da(t):
    return 0.052 * np.cos(1.3 * np.asarray(t, dtype=float))


def _manu_b(t):
    t = np.asarray(t, dtype=float)
    return 1.2 + 0.08 * t - 0.03 * np.sin(t)


def _manu_db(t):
    return 0.08 - 0.03 * np.cos(np.asarray(t, dtype=float))


def _manu_u(x, t):
    return np.exp(-MANU_KAPPA * np.asarray(t, dtype=float)) * np.sin(x)


def _manu_ux(x, t):
    return np.exp(-MANU_KAPPA * np.asarray(t, dtype=float)) * np.cos(x)


def manufactured_points(t=MANU_T):
    a, b = float(_manu_a(t)), float(_manu_b(t))
    return (0.7, a + 0.05, b - 0.05, 0.5 * (a + b))


def manufactured_errors(n_steps, xs=None, t=MANU_T):
    """Absolute reconstruction errors of the manufactured solution.

    Green identity on a(t) < x < b(t):
      u(x,t) = int G(x,t;xi,0) u(xi,0) dxi
             + int_0^t [kappa*G*u_x + kappa*G_x*u + G*u*s'] at xi=b(tau)
             - int_0^t [same bracket] at xi=a(tau).
    """
    from falsebottom.kernels import Curve, FactoredBoundaryKernel, GreenKernel
    from falsebottom.quad import TimeGrid, abel_weights, finite_convolve, layer_history

    kap = MANU_KAPPA
    k = GreenKernel(kap)
    nodes = TimeGrid(0.0, t, n_steps).nodes
    w = abel_weights(nodes)
    if xs is None:
        xs = manufactured_points(t)
    curves = (
        (Curve(nodes, _manu_b(nodes), _manu_db(nodes)), _manu_b, _manu_db, 1.0),
        (Curve(nodes, _manu_a(nodes), _manu_da(nodes)), _manu_a, _manu_da, -1.0),
    )
    errs = []
    for x in xs:
        total = finite_convolve(
            k, float(x), t, lambda xi: _manu_u(xi, 0.0), float(_manu_a(0.0)), float(_manu_b(0.0))
        )
        for curve, pos, dpos, sgn in curves:
            s_tau = pos(nodes)
            u_tau = _manu_u(s_tau, nodes)
            dens_val = kap * _manu_ux(s_tau, nodes) + u_tau * dpos(nodes)
            fk_val = FactoredBoundaryKernel(k, curve, float(x), "value")
            fk_dx = FactoredBoundaryKernel(k, curve, float(x), "d_dx")
            total += sgn * layer_history(fk_val, t, nodes, dens_val, weights=w)
            total += sgn * layer_history(fk_dx, t, nodes, kap * u_tau, weights=w)
        errs.append(abs(total - float(_manu_u(x, t))))
    return np.asarray(errs)


def sup_rel_err(measured, expected, scale=None):
    measured = np.asarray(measured, dtype=float)
    expected = np.asarray(expected, dtype=float)
    denom = scale if scale is not None else np.max(np.abs(expected))
    if denom == 0.0:
        return float(np.max(np.abs(measured - expected)))
    return float(np.max(np.abs(measured - expected)) / denom)


def assert_close(value, expected, tol, label=""):
    assert math.isfinite(value), f"{label}: non-finite value {value}"
    assert abs(value - expected) <= tol, (
        f"{label}: |{value} - {expected}| = {abs(value - expected):.3e} > {tol:.1e}"
    )
