"""Heat kernels and their boundary-composed, factored forms.

The free-boundary problem is rewritten as integral equations whose kernels
are the fundamental solution of the heat equation,

    G(x, t; xi, tau) = H(t - tau) / (2 sqrt(pi kappa (t - tau)))
                       * exp(-(x - xi)^2 / (4 kappa (t - tau))),

its spatial derivatives, and compositions of these with the moving
interfaces.  Composed along one interface curve the derivative kernels have
an integrable 1/sqrt(t - tau) singularity on the diagonal; everything here
is therefore exposed in the factored form

    K(t, tau) = g(t, tau) / sqrt(t - tau),

where g is smooth up to the diagonal and its diagonal value is known in
closed form.  Product quadrature then integrates the singular weight
exactly (see :mod:`falsebottom.quad`).
"""

import math
from dataclasses import dataclass, field

import numpy as np

__all__ = [
    "GreenKernel",
    "Curve",
    "FactoredBoundaryKernel",
    "green_eval",
    "green_dx",
    "green_dxi",
    "image_kernel_eval",
    "factored_eval",
    "layer_tail_moments",
    "layer_tail_value",
    "layer_tail_dx",
]

# exp() underflows below roughly -745; results are cut to an exact 0.0 so
# that downstream quadrature never sees subnormal noise.
EXP_UNDERFLOW = -745.0

# (t - tau) below DIAG_REL * t counts as a diagonal evaluation; the closed
# form limit is returned instead of the (catastrophically cancelling)
# direct formula.
DIAG_REL = 1e-12

_SQRT_PI = math.sqrt(math.pi)


def _require_finite(**values):
    for name, value in values.items():
        if not np.all(np.isfinite(value)):
            raise ValueError(f"non-finite argument {name!r}: {value!r}")


@dataclass(frozen=True)
class GreenKernel:
    """Fundamental heat kernel with diffusivity ``kappa``.

    Parameters
    ----------
    kappa : float
        Diffusivity, strictly positive and finite.
    """

    kappa: float

    def __post_init__(self):
        if not (np.isfinite(self.kappa) and self.kappa > 0.0):
            raise ValueError(f"kappa must be positive and finite, got {self.kappa!r}")


def green_eval(kernel, x, t, xi, tau):
    """Evaluate G(x, t; xi, tau).

    Returns exactly 0.0 for ``tau >= t`` (the causal Heaviside factor) and
    for exponents past the underflow threshold.  Non-finite arguments are
    rejected.
    """
    _require_finite(x=x, t=t, xi=xi, tau=tau)
    dt = t - tau
    if dt <= 0.0:
        return 0.0
    k = kernel.kappa
    arg = -((x - xi) ** 2) / (4.0 * k * dt)
    if arg <= EXP_UNDERFLOW:
        return 0.0
    return math.exp(arg) / (2.0 * math.sqrt(math.pi * k * dt))


def green_dx(kernel, x, t, xi, tau):
    """Evaluate dG/dx at (x, t; xi, tau); requires ``t > tau``.

    dG/dx = -(x - xi) / (4 sqrt(pi kappa^3 (t - tau)^3)) * exp(same Gaussian).
    """
    _require_finite(x=x, t=t, xi=xi, tau=tau)
    dt = t - tau
    if dt <= 0.0:
        raise ValueError(f"green_dx requires t > tau, got t={t!r}, tau={tau!r}")
    k = kernel.kappa
    arg = -((x - xi) ** 2) / (4.0 * k * dt)
    if arg <= EXP_UNDERFLOW:
        return 0.0
    return -(x - xi) / (4.0 * math.sqrt(math.pi * (k * dt) ** 3)) * math.exp(arg)


def green_dxi(kernel, x, t, xi, tau):
    """Evaluate dG/dxi; identically ``-green_dx`` since G depends on x - xi."""
    return -green_dx(kernel, x, t, xi, tau)


def image_kernel_eval(kernel, L, x, t, xi, tau):
    """Half-plane kernel K = G(x,t;xi,tau) - G(2L-x,t;xi,tau) for x, xi >= L.

    The image term makes K vanish on the wall x = L, which absorbs a
    homogeneous Dirichlet condition on a truncated domain.
    """
    _require_finite(L=L, x=x, t=t, xi=xi, tau=tau)
    if x < L or xi < L:
        raise ValueError(
            f"image kernel needs x >= L and xi >= L, got L={L!r}, x={x!r}, xi={xi!r}"
        )
    return green_eval(kernel, x, t, xi, tau) - green_eval(kernel, 2.0 * L - x, t, xi, tau)


@dataclass(frozen=True)
class Curve:
    """A sampled interface path with nodal slopes.

    Positions between nodes are interpolated piecewise-linearly.  The nodal
    slopes come from the governing interface velocity law, not from
    differencing ``values``; they supply the diagonal limits of composed
    derivative kernels.

    Parameters
    ----------
    times : ndarray
        Strictly increasing sample times.
    values : ndarray
        Positions at the sample times.
    slopes : ndarray
        Velocities at the sample times.
    """

    times: np.ndarray
    values: np.ndarray
    slopes: np.ndarray

    def __post_init__(self):
        times = np.asarray(self.times, dtype=float)
        values = np.asarray(self.values, dtype=float)
        slopes = np.asarray(self.slopes, dtype=float)
        if times.ndim != 1 or times.size < 1:
            raise ValueError("curve needs at least one sample time")
        if values.shape != times.shape or slopes.shape != times.shape:
            raise ValueError("times, values and slopes must have matching shapes")
        if times.size > 1 and not np.all(np.diff(times) > 0.0):
            raise ValueError("curve sample times must be strictly increasing")
        _require_finite(times=times, values=values, slopes=slopes)
        object.__setattr__(self, "times", times)
        object.__setattr__(self, "values", values)
        object.__setattr__(self, "slopes", slopes)

    @property
    def t_start(self):
        return float(self.times[0])

    @property
    def t_end(self):
        return float(self.times[-1])

    def position(self, tau):
        return np.interp(tau, self.times, self.values)

    def velocity(self, tau):
        return np.interp(tau, self.times, self.slopes)


@dataclass(frozen=True)
class FactoredBoundaryKernel:
    """A kernel composed with interface curves, in factored form.

    ``variant="value"`` composes G itself, ``variant="d_dx"`` composes dG/dx.
    The evaluation point is either a fixed position or a second curve sampled
    at the outer time t; the source point runs along ``source`` at the inner
    time tau.  ``factored_eval`` returns

        g(t, tau) = sqrt(t - tau) * K(t, tau),

    which stays bounded on the diagonal:

    * value, eval point on the source curve:       g(t, t) = 1/(2 sqrt(pi kappa))
    * d_dx, eval point on the source curve:        g(t, t) = -h'(t)/(4 sqrt(pi kappa^3))
    * eval point off the curve (both variants):    g(t, t) = 0 (Gaussian decay)
    """

    kernel: GreenKernel
    source: Curve
    eval_point: object  # float or Curve
    variant: str
    _same: bool = field(init=False, repr=False)

    def __post_init__(self):
        if self.variant not in ("value", "d_dx"):
            raise ValueError(f"unknown variant {self.variant!r}")
        if not isinstance(self.source, Curve):
            raise ValueError("source must be a Curve")
        if not isinstance(self.eval_point, Curve):
            x = float(self.eval_point)
            _require_finite(eval_point=x)
            object.__setattr__(self, "eval_point", x)
        object.__setattr__(self, "_same", self.eval_point is self.source)


def _eval_position(fk, t):
    if isinstance(fk.eval_point, Curve):
        if not (fk.eval_point.t_start <= t <= fk.eval_point.t_end):
            raise ValueError(f"t={t!r} outside the sampled range of the eval curve")
        return float(fk.eval_point.position(t))
    return fk.eval_point


def factored_eval(fk, t, tau):
    """Evaluate g(t, tau) = sqrt(t - tau) * K(t, tau) for tau <= t.

    ``tau`` may be a scalar or an array; both must lie inside the sampled
    range of the curves and satisfy tau <= t.  Diagonal and near-diagonal
    entries (t - tau < DIAG_REL * t) take the closed-form limit.
    """
    tau_arr = np.asarray(tau, dtype=float)
    scalar = tau_arr.ndim == 0
    tau_arr = np.atleast_1d(tau_arr)
    _require_finite(t=t, tau=tau_arr)
    src = fk.source
    if not (src.t_start <= t <= src.t_end):
        raise ValueError(f"t={t!r} outside the sampled range of the source curve")
    if np.any(tau_arr > t) or np.any(tau_arr < src.t_start):
        raise ValueError("tau must satisfy t_start <= tau <= t")

    kappa = fk.kernel.kappa
    x = _eval_position(fk, t)
    d = x - src.position(tau_arr)
    dt = t - tau_arr
    near = dt <= DIAG_REL * max(abs(t), np.finfo(float).tiny)

    out = np.zeros_like(tau_arr)
    reg = ~near
    if np.any(reg):
        dr = d[reg]
        dtr = dt[reg]
        arg = -(dr * dr) / (4.0 * kappa * dtr)
        gauss = np.where(arg > EXP_UNDERFLOW, np.exp(np.maximum(arg, EXP_UNDERFLOW)), 0.0)
        if fk.variant == "value":
            out[reg] = gauss / (2.0 * math.sqrt(math.pi * kappa))
        else:
            out[reg] = -dr / (4.0 * math.sqrt(math.pi * kappa**3) * dtr) * gauss
    if np.any(near):
        # On the diagonal the relative position d -> x(t) - h(t): zero only
        # when the evaluation point rides the source curve, in which case the
        # sampled slope supplies the limit of d/(t - tau).
        d0 = x - float(src.position(t))
        on_curve = fk._same or d0 == 0.0
        if fk.variant == "value":
            lim = 1.0 / (2.0 * math.sqrt(math.pi * kappa)) if on_curve else 0.0
        else:
            lim = -float(src.velocity(t)) / (4.0 * math.sqrt(math.pi * kappa**3)) if on_curve else 0.0
        out[near] = lim
    return float(out[0]) if scalar else out


# -- closed-form tails along a locally straight curve -------------------------
#
# Evaluating a layer potential at a point near (but off) its source curve
# puts a Gaussian bump of temporal width d0^2/kappa inside the last few
# quadrature panels, which a product rule sampling the factored kernel at
# the panel nodes cannot resolve.  With the relative position frozen to a
# straight path d(s) = d0 + c s over the final window s in (0, W), the tail
# integrals have exact erfc expressions; quadrature code subtracts its own
# estimate of the window and adds these instead.


def _exp_times_erfc(m, z):
    """exp(m) * erfc(z), stable when m is large positive (then z > 0 and
    m - z^2 <= 0 at every call site)."""
    if m <= 0.0:
        return math.exp(m) * math.erfc(z)
    arg = m - z * z
    if arg <= EXP_UNDERFLOW:
        return 0.0
    from scipy.special import erfcx

    return float(erfcx(z)) * math.exp(arg)


def layer_tail_moments(kernel, d0, c, W):
    """Moments of the straight-curve tail integrals over s in (0, W).

    Returns (V0, X0, V1, X1) with

        V0 = int G(d(s); s) ds,        V1 = int s G(d(s); s) ds,
        X0 = int dG/dx(d(s); s) ds,    X1 = int s dG/dx(d(s); s) ds,

    for the relative path d(s) = d0 + c*s, d0 != 0.  V1/X1 let quadrature
    code model a linearly varying layer density over the repaired window.
    """
    if not W > 0.0:
        return 0.0, 0.0, 0.0, 0.0
    if d0 == 0.0:
        raise ValueError("tail moments need an off-curve evaluation point")
    kappa = kernel.kappa
    rk = math.sqrt(kappa)
    sgn = 1.0 if d0 > 0.0 else -1.0
    A = abs(d0) / (2.0 * rk)
    B = sgn * c / (2.0 * rk)
    sW = math.sqrt(W)
    a = A / sW
    u = a - B * sW
    w = a + B * sW
    ew2 = math.exp(-w * w) if w * w < -EXP_UNDERFLOW else 0.0
    term_u = _exp_times_erfc(-4.0 * A * B, u)
    term_w = math.erfc(w)

    # J_p = exp(-2AB) * int s^(p/2) exp(-A^2/s - B^2 s) ds over (0, W).
    # J_m3's sum form is exact even at B = 0; the difference/quotient forms
    # for J_m1 and J_p1 cancel as B -> 0 and switch to frozen-drift forms.
    # J_p1 only feeds the first-order density correction, so its fallback
    # threshold is loose.
    ea = math.exp(-a * a) if a * a < -EXP_UNDERFLOW else 0.0
    J0_m1 = 2.0 * sW * ea - 2.0 * A * _SQRT_PI * math.erfc(a)
    J_m3 = _SQRT_PI * (term_u + term_w) / (2.0 * A)
    if abs(B) * sW < 1e-6:
        J_m1 = math.exp(-2.0 * A * B) * J0_m1
    else:
        J_m1 = _SQRT_PI * (term_u - term_w) / (2.0 * B)
    if abs(B) * sW < 1e-3:
        J0_p1 = (2.0 / 3.0) * W * sW * ea - (2.0 / 3.0) * A * A * J0_m1
        J_p1 = math.exp(-2.0 * A * B) * J0_p1
    else:
        J_p1 = (0.5 * J_m1 + A * A * J_m3 - sW * ew2) / (B * B)

    pref_v = 1.0 / (2.0 * math.sqrt(math.pi * kappa))
    pref_x = 1.0 / (4.0 * math.sqrt(math.pi * kappa**3))
    d0a = abs(d0)
    V0 = pref_v * J_m1
    V1 = pref_v * J_p1
    X0 = -sgn * term_u / (2.0 * kappa)
    X1 = -sgn * pref_x * (d0a * J_m1 + (sgn * c) * J_p1)
    return V0, X0, V1, X1


def layer_tail_value(kernel, d0, c, W):
    """Exact integral of G(d(s); s) over s in (0, W) with d(s) = d0 + c*s."""
    return layer_tail_moments(kernel, d0, c, W)[0]


def layer_tail_dx(kernel, d0, c, W):
    """Exact integral of dG/dx(d(s); s) over s in (0, W), d(s) = d0 + c*s."""
    return layer_tail_moments(kernel, d0, c, W)[1]
