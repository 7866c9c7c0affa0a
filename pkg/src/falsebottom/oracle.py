"""Independent validation solvers.

Two cross-checks live here.  ``fd_solve`` is a front-tracking
finite-difference solver for the full two-interface system: each moving
domain is mapped onto a fixed unit interval, the transported diffusion
equations are stepped with a theta-weighted implicit scheme, and the
interfaces move by explicit Euler on the flux-jump laws.  It shares no
code with the integral-equation path, which is the point.

``classical_stefan_via_machinery`` runs the opposite direction: it uses
the package's kernels, product quadrature and Picard iteration on the
textbook one-phase melting problem, whose exact answer is the Neumann
similarity solution ``s(t) = 2 lambda sqrt(kappa t)`` with ``lambda``
from a scalar transcendental equation (``neumann_lambda``).
"""

import math
from dataclasses import dataclass

import numpy as np
from scipy.linalg import solve_banded
from scipy.special import erf as _erf

from .kernels import Curve, FactoredBoundaryKernel, GreenKernel
from .model import ProblemSetup
from .quad import TimeGrid, abel_weights, finite_convolve, layer_history
from .volterra import NonConvergenceError, SolverError

__all__ = [
    "FDConfig",
    "FDResult",
    "FDInstabilityError",
    "fd_solve",
    "neumann_lambda",
    "classical_stefan_via_machinery",
]

# Interface gap below this fraction of its initial value counts as
# pinch-off; mirrors the integral solver's default.
FD_PINCH_RATIO = 1e-6

# A field norm growing past this factor of its initial scale flags a
# blown-up time step.
FD_GROWTH_LIMIT = 50.0


class FDInstabilityError(SolverError):
    """Norm growth in the finite-difference solver (time step too large)."""


@dataclass(frozen=True)
class FDConfig:
    """Discretization of the front-tracking finite-difference solver.

    Parameters
    ----------
    L : float
        Ocean truncation depth (m); must lie below the initial lower
        interface, and far enough that the Dirichlet data there cannot
        influence the comparison window.
    n_ocean, n_ice : int
        Spatial node counts per domain, at least 16.
    dt : float
        Time step (s).
    theta : float
        Implicitness weight in [1/2, 1]; 1 is backward Euler.
    far_T, far_S : float
        Dirichlet data held at x = L.
    grading : float
        Ocean mesh grading exponent; nodes cluster toward the moving
        interface as y = 1 - (1-u)^grading so the thin salt boundary
        layer is resolved without a huge uniform mesh.  1 is uniform.
    pinch_ratio : float
        Gap fraction below which the run stops with a pinch-off event.
    """

    L: float
    n_ocean: int
    n_ice: int
    dt: float
    theta: float = 1.0
    far_T: float = 0.0
    far_S: float = 0.0
    grading: float = 2.0
    pinch_ratio: float = FD_PINCH_RATIO

    def __post_init__(self):
        if not np.isfinite(self.L):
            raise ValueError(f"L must be finite, got {self.L!r}")
        if self.n_ocean < 16 or self.n_ice < 16:
            raise ValueError(
                f"node counts must be >= 16, got {self.n_ocean}, {self.n_ice}"
            )
        if not (np.isfinite(self.dt) and self.dt > 0.0):
            raise ValueError(f"dt must be positive, got {self.dt!r}")
        if not 0.5 <= self.theta <= 1.0:
            raise ValueError(f"theta must be in [1/2, 1], got {self.theta!r}")
        if not self.grading >= 1.0:
            raise ValueError(f"grading must be >= 1, got {self.grading!r}")
        if not 0.0 < self.pinch_ratio < 1.0:
            raise ValueError(
                f"pinch_ratio must be in (0, 1), got {self.pinch_ratio!r}"
            )


@dataclass
class FDResult:
    """Trajectories and terminal fields from ``fd_solve``.

    ``salt_total`` is the running integral of S over the ocean domain and
    ``flux_L`` the diffusive salt flux at the truncation boundary; together
    they express the ocean salt budget.  ``pinch_off`` is ``None`` or an
    event dict with the collision time.
    """

    times: np.ndarray
    h0: np.ndarray
    hu: np.ndarray
    T0: np.ndarray
    S0: np.ndarray
    y_ocean: np.ndarray
    y_ice: np.ndarray
    T_ocean: np.ndarray
    S_ocean: np.ndarray
    T_ice: np.ndarray
    salt_total: np.ndarray
    flux_L: np.ndarray
    pinch_off: dict | None = None
    L: float = 0.0

    def x_ocean(self, k=-1):
        """Physical ocean nodes at step index ``k``."""
        return self.L + self.y_ocean * (self.h0[k] - self.L)

    def x_ice(self, k=-1):
        """Physical ice nodes at step index ``k``."""
        return self.h0[k] + self.y_ice * (self.hu[k] - self.h0[k])


def _deriv_start(y, u):
    """One-sided second-order first derivative at the first node."""
    h1 = y[1] - y[0]
    h2 = y[2] - y[1]
    c0 = -(2.0 * h1 + h2) / (h1 * (h1 + h2))
    c1 = (h1 + h2) / (h1 * h2)
    c2 = -h1 / (h2 * (h1 + h2))
    return c0 * u[0] + c1 * u[1] + c2 * u[2]


def _deriv_end(y, u):
    """One-sided second-order first derivative at the last node."""
    g1 = y[-1] - y[-2]
    g2 = y[-2] - y[-3]
    c0 = (2.0 * g1 + g2) / (g1 * (g1 + g2))
    c1 = -(g1 + g2) / (g1 * g2)
    c2 = g1 / (g2 * (g1 + g2))
    return c0 * u[-1] + c1 * u[-2] + c2 * u[-3]


def _operator_rows(y, diff, adv):
    """Nonuniform 3-point rows of  diff * u_yy + adv(y) * u_y  at interior nodes.

    Returns (lower, mid, upper) coefficient arrays of length n-2.
    """
    hm = y[1:-1] - y[:-2]
    hp = y[2:] - y[1:-1]
    a = adv(y[1:-1]) if callable(adv) else adv
    lo = 2.0 * diff / (hm * (hm + hp)) - a * hp / (hm * (hm + hp))
    mid = -2.0 * diff / (hm * hp) + a * (hp - hm) / (hm * hp)
    up = 2.0 * diff / (hp * (hm + hp)) + a * hm / (hp * (hm + hp))
    return lo, mid, up


def _theta_step(y, u_old, diff, adv, dt, theta, bc_end):
    """One theta-weighted implicit step of u_t = diff u_yy + adv u_y.

    The first node is Dirichlet (value kept from ``u_old[0]``).  ``bc_end``
    is ``("dirichlet", value)`` or ``("robin", alpha, beta)`` imposing
    ``alpha * u_y(1) + beta * u(1) = 0`` with a one-sided second-order
    stencil.  The banded system has bandwidths (2, 1) to accommodate that
    last row.
    """
    n = y.size
    lo, mid, up = _operator_rows(y, diff, adv)

    rhs = u_old.copy()
    if theta < 1.0:
        w = (1.0 - theta) * dt
        rhs[1:-1] += w * (lo * u_old[:-2] + mid * u_old[1:-1] + up * u_old[2:])

    # banded layout for solve_banded((2, 1)): row 0 super, row 1 diag,
    # row 2 sub, row 3 sub-sub
    ab = np.zeros((4, n))
    ab[1, :] = 1.0
    w = theta * dt
    ab[0, 2:] = -w * up
    ab[1, 1:-1] = 1.0 - w * mid
    ab[2, :-2] = -w * lo

    # Dirichlet at the far end
    ab[0, 1] = 0.0
    ab[1, 0] = 1.0
    rhs[0] = u_old[0]

    kind = bc_end[0]
    if kind == "dirichlet":
        ab[1, -1] = 1.0
        ab[2, -2] = 0.0
        ab[3, -3] = 0.0
        rhs[-1] = bc_end[1]
    elif kind == "robin":
        alpha, beta = bc_end[1], bc_end[2]
        g1 = y[-1] - y[-2]
        g2 = y[-2] - y[-3]
        c0 = (2.0 * g1 + g2) / (g1 * (g1 + g2))
        c1 = -(g1 + g2) / (g1 * g2)
        c2 = g1 / (g2 * (g1 + g2))
        ab[1, -1] = alpha * c0 + beta
        ab[2, -2] = alpha * c1
        ab[3, -3] = alpha * c2
        rhs[-1] = 0.0
    else:
        raise ValueError(f"unknown boundary condition kind {kind!r}")

    return solve_banded((2, 1), ab, rhs)


def fd_solve(setup: ProblemSetup, fdcfg: FDConfig, t_end: float) -> FDResult:
    """Front-tracking finite-difference solution of the full system.

    Both moving domains are mapped to fixed unit intervals: ocean
    x = L + y (h0 - L) with y in [0, 1], ice x = h0 + z (hu - h0).  The
    maps turn each diffusion equation into diffusion plus a mesh-advection
    term; those are stepped theta-implicitly on the new geometry while the
    interfaces advance by explicit Euler on the flux-jump laws with
    one-sided second-order gradients.  The salt equation carries the
    no-total-flux condition at the moving end as a Robin row; interface
    temperature follows from the freezing relation with the trace
    derivative replaced by a backward difference.
    """
    if not (np.isfinite(t_end) and t_end > 0.0):
        raise ValueError(f"t_end must be positive, got {t_end!r}")
    if fdcfg.L >= setup.h0_init:
        raise ValueError(
            f"truncation depth L={fdcfg.L!r} must lie below h0(0)={setup.h0_init!r}"
        )
    p = setup.params

    # ocean nodes cluster toward y = 1 (the moving interface)
    u = np.linspace(0.0, 1.0, fdcfg.n_ocean)
    y = 1.0 - (1.0 - u) ** fdcfg.grading
    z = np.linspace(0.0, 1.0, fdcfg.n_ice)

    h0 = setup.h0_init
    hu = setup.hu_init
    gap0 = hu - h0
    a = h0 - fdcfg.L
    b = hu - h0

    x_oc = fdcfg.L + y * a
    x_ice = h0 + z * b
    T_oc = setup.T_ocean_init(x_oc)
    S_oc = setup.S_init(x_oc)
    T_ic = setup.T_ice_init(x_ice)
    T_oc[0] = fdcfg.far_T
    S_oc[0] = fdcfg.far_S

    scale_T = max(np.max(np.abs(T_oc)), np.max(np.abs(T_ic)), abs(fdcfg.far_T), 1e-30)
    scale_S = max(np.max(np.abs(S_oc)), abs(fdcfg.far_S), 1e-30)

    n_steps = int(math.ceil(t_end / fdcfg.dt - 1e-12))
    times = [0.0]
    h0_hist = [h0]
    hu_hist = [hu]
    T0_hist = [float(T_ic[0])]
    S0_hist = [float(S_oc[-1])]
    salt_hist = [float(np.trapezoid(S_oc, x_oc))]
    flux_hist = [p.D * _deriv_start(y, S_oc) / a]
    pinch = None

    T0 = T0_hist[0]
    for step in range(n_steps):
        t_new = min((step + 1) * fdcfg.dt, t_end)
        dt = t_new - times[-1]

        # interface gradients from the current fields
        grad_T_oc = _deriv_end(y, T_oc) / a
        grad_T_ic_lo = _deriv_start(z, T_ic) / b
        grad_T_ic_hi = _deriv_end(z, T_ic) / b

        dh0 = p.lambda_I_tilde * grad_T_ic_lo - p.lambda_O_tilde * grad_T_oc
        dhu = p.lambda_I_tilde * grad_T_ic_hi

        h0_new = h0 + dt * dh0
        hu_new = hu + dt * dhu
        if hu_new - h0_new <= fdcfg.pinch_ratio * gap0:
            pinch = {
                "t": float(t_new),
                "gap": float(hu_new - h0_new),
                "threshold": float(fdcfg.pinch_ratio * gap0),
            }
            break
        if h0_new <= fdcfg.L:
            raise SolverError(
                "lower interface reached the truncation depth; increase |L|",
                diagnostics={"t": float(t_new), "h0": float(h0_new)},
            )

        a_new = h0_new - fdcfg.L
        b_new = hu_new - h0_new
        adot = (a_new - a) / dt

        # salt: transported diffusion with the no-total-flux Robin row at y=1
        S_oc = _theta_step(
            y,
            S_oc,
            p.D / a_new**2,
            lambda yy: yy * adot / a_new,
            dt,
            fdcfg.theta,
            ("robin", p.D / a_new, dh0),
        )
        S0_new = float(S_oc[-1])

        # freezing relation with v0 by backward differencing of T0
        T0_new = (p.n0 / dt * T0 - p.m0 * S0_new) / (1.0 + p.n0 / dt)

        # ocean heat: Dirichlet far value and fresh interface trace
        T_oc = _theta_step(
            y,
            T_oc,
            p.D_O / a_new**2,
            lambda yy: yy * adot / a_new,
            dt,
            fdcfg.theta,
            ("dirichlet", T0_new),
        )

        # ice heat: traces at both ends, mesh velocity from both interfaces
        bdot = (b_new - b) / dt
        T_ic = _theta_step(
            z,
            T_ic,
            p.D_I / b_new**2,
            lambda zz: (dh0 + zz * bdot) / b_new,
            dt,
            fdcfg.theta,
            ("dirichlet", 0.0),
        )
        T_ic[0] = T0_new

        if not (np.all(np.isfinite(S_oc)) and np.all(np.isfinite(T_oc)) and np.all(np.isfinite(T_ic))):
            raise FDInstabilityError(
                "non-finite field values; reduce dt",
                diagnostics={"t": float(t_new)},
            )
        if (
            np.max(np.abs(T_oc)) > FD_GROWTH_LIMIT * scale_T
            or np.max(np.abs(S_oc)) > FD_GROWTH_LIMIT * scale_S
        ):
            raise FDInstabilityError(
                "field norm growth; reduce dt",
                diagnostics={
                    "t": float(t_new),
                    "T_norm": float(np.max(np.abs(T_oc))),
                    "S_norm": float(np.max(np.abs(S_oc))),
                },
            )

        h0, hu, a, b, T0 = h0_new, hu_new, a_new, b_new, T0_new
        times.append(t_new)
        h0_hist.append(h0)
        hu_hist.append(hu)
        T0_hist.append(T0_new)
        S0_hist.append(S0_new)
        x_oc = fdcfg.L + y * a
        salt_hist.append(float(np.trapezoid(S_oc, x_oc)))
        flux_hist.append(p.D * _deriv_start(y, S_oc) / a)

    return FDResult(
        times=np.asarray(times),
        h0=np.asarray(h0_hist),
        hu=np.asarray(hu_hist),
        T0=np.asarray(T0_hist),
        S0=np.asarray(S0_hist),
        y_ocean=y,
        y_ice=z,
        T_ocean=T_oc,
        S_ocean=S_oc,
        T_ice=T_ic,
        salt_total=np.asarray(salt_hist),
        flux_L=np.asarray(flux_hist),
        pinch_off=pinch,
        L=fdcfg.L,
    )


def neumann_lambda(stefan_rhs: float) -> float:
    """Positive root of  lambda exp(lambda^2) erf(lambda) = stefan_rhs / sqrt(pi).

    Bracketed bisection to 1e-12.  The left side is strictly increasing
    from 0, so the root exists and is unique for any positive right side.
    """
    if not (np.isfinite(stefan_rhs) and stefan_rhs > 0.0):
        raise ValueError(f"stefan_rhs must be positive, got {stefan_rhs!r}")
    target = stefan_rhs / math.sqrt(math.pi)

    def f(lam):
        return lam * math.exp(lam * lam) * math.erf(lam) - target

    hi = 1.0
    while f(hi) < 0.0:
        hi *= 2.0
        if hi > 1e8:
            raise ValueError(f"no bracket found for stefan_rhs={stefan_rhs!r}")
    lo = 0.0
    while hi - lo > 1e-12:
        mid = 0.5 * (lo + hi)
        if f(mid) < 0.0:
            lo = mid
        else:
            hi = mid
    return 0.5 * (lo + hi)


def _cumtrapz(tau, w):
    """Running trapezoid of samples ``w`` on nodes ``tau``; zero at node 0."""
    return np.concatenate(
        ([0.0], np.cumsum(0.5 * np.diff(tau) * (w[1:] + w[:-1])))
    )


def classical_stefan_via_machinery(
    kappa: float,
    boundary_temp: float,
    stefan_coeff: float,
    t_end: float,
    n_steps: int,
    t_start: float = 1.0,
    s_start: float | None = None,
    picard_tol: float = 1e-12,
    max_iters: int = 80,
):
    """One-phase melting front computed with the package's own machinery.

    The liquid occupies 0 < x < s(t) with u(0, t) = ``boundary_temp``,
    u(s(t), t) = 0 and s'(t) = -``stefan_coeff`` * u_x(s(t)-, t).  Green's
    identity with the wall-image kernel K = G(x,t;xi,tau) - G(x,t;-xi,tau)
    reduces the problem to a single Volterra equation for
    w(t) = u_x(s(t)-, t),

        w(t) = 2 int_0^{s(0)} u0(xi) K_x(s(t), t; xi, 0) dxi
             + 2 kappa int_0^t w(tau) K_x(s(t), t; s(tau), tau) dtau
             - 2 U_b exp(-s(t)^2 / (4 kappa t)) / sqrt(pi kappa t),

    where the last term is the closed-form wall contribution of the fixed
    boundary value U_b and the factor 2 absorbs the jump relation of the
    one-sided limit.  The equation is assembled with the same factored
    kernels and product quadrature as the two-interface system and solved
    by Picard iteration; s comes from the running integral of the Stefan
    law.  The clock starts at absolute time ``t_start`` on the Neumann
    similarity profile, so the exact front is
    s(t) = 2 lambda sqrt(kappa (t + t_start)); returned times are measured
    from ``t_start``.

    With ``boundary_temp`` zero the temperature is identically zero and
    the front stays at ``s_start`` (default sqrt(kappa * t_start)).

    Returns ``(times, s, w)``.
    """
    if not (kappa > 0.0 and stefan_coeff > 0.0 and t_end > 0.0 and n_steps >= 1):
        raise ValueError("kappa, stefan_coeff, t_end must be positive, n_steps >= 1")
    if not t_start > 0.0:
        raise ValueError(f"t_start must be positive, got {t_start!r}")
    U_b = float(boundary_temp)
    grid = TimeGrid(0.0, t_end, n_steps)
    tau = grid.nodes
    kern = GreenKernel(kappa)

    if U_b == 0.0:
        s0 = math.sqrt(kappa * t_start) if s_start is None else float(s_start)
        return tau, np.full(tau.size, s0), np.zeros(tau.size)
    if U_b < 0.0:
        raise ValueError("boundary_temp must be >= 0 for the melting benchmark")

    lam = neumann_lambda(stefan_coeff * U_b / kappa)
    s0 = 2.0 * lam * math.sqrt(kappa * t_start) if s_start is None else float(s_start)
    erf_lam = math.erf(lam)
    denom = 2.0 * math.sqrt(kappa * t_start)

    def u0(xi):
        return U_b * (1.0 - _erf(np.asarray(xi, dtype=float) / denom) / erf_lam)

    w0 = -U_b * math.exp(-lam * lam) / (erf_lam * math.sqrt(math.pi * kappa * t_start))

    def apply_once(w):
        s = s0 - stefan_coeff * _cumtrapz(tau, w)
        curve = Curve(tau, s, -stefan_coeff * w)
        mirror = Curve(tau, -s, stefan_coeff * w)
        out = np.empty_like(w)
        out[0] = w0
        for k in range(1, tau.size):
            t = tau[k]
            st = float(s[k])
            pre = tau[: k + 1]
            wts = abel_weights(pre)
            fk_self = FactoredBoundaryKernel(kern, curve, st, "d_dx")
            fk_img = FactoredBoundaryKernel(kern, mirror, st, "d_dx")
            hist = layer_history(fk_self, t, pre, w[: k + 1], weights=wts)
            hist -= layer_history(fk_img, t, pre, w[: k + 1], weights=wts)
            # initial-data term: the image part folds to a mirrored source
            # interval, the kernel clock measures time since the data
            init = finite_convolve(kern, st, t, u0, 0.0, s0, deriv=True)
            init -= finite_convolve(
                kern, st, t, lambda xi: u0(-np.asarray(xi)), -s0, 0.0, deriv=True
            )
            wall = -2.0 * U_b * math.exp(-st * st / (4.0 * kappa * t)) / math.sqrt(
                math.pi * kappa * t
            )
            out[k] = 2.0 * init + 2.0 * kappa * hist + wall
        return out

    w = np.full(tau.size, w0)
    res = math.inf
    for _ in range(max_iters):
        w_new = apply_once(w)
        res = float(np.max(np.abs(w_new - w)))
        w = w_new
        if res <= picard_tol * (1.0 + float(np.max(np.abs(w)))):
            break
    else:
        raise NonConvergenceError(
            "classical Stefan Picard iteration did not converge",
            diagnostics={"residual": res, "n_steps": n_steps},
        )

    s = s0 - stefan_coeff * _cumtrapz(tau, w)
    return tau, s, w
