"""Product quadrature for Abel-type integrals and Gaussian convolutions.

Two integral shapes recur in the interface equations.  Time integrals carry
an integrable endpoint singularity,

    I(t_k) = int_{t_0}^{t_k} g(tau) / sqrt(t_k - tau) dtau,

and are computed by product integration: g is replaced by its piecewise
linear interpolant and the moments of 1/sqrt(t_k - tau) against the linear
basis are integrated in closed form, so the rule is exact (to rounding) for
piecewise linear g.  Initial-condition integrals are Gaussian convolutions

    int_a^b G(x, t; xi, 0) f(xi) dxi,

computed after the substitution xi = x - 2 sqrt(kappa t) z, which maps the
kernel to exp(-z^2)/sqrt(pi); the z-integral is truncated at |z| <= 8
(tail below 1e-30) and evaluated with a fixed 200-panel composite
Gauss-Legendre rule.
"""

import math
from dataclasses import dataclass, field

import numpy as np

__all__ = [
    "TimeGrid",
    "SampledFunction",
    "abel_weights",
    "abel_integrate",
    "running_integral",
    "layer_history",
    "gauss_convolve",
    "semi_infinite_convolve",
    "finite_convolve",
]

# Truncation of the substituted Gaussian integrals: erfc(8) ~ 1.1e-29.
GAUSS_CUTOFF = 8.0
GAUSS_PANELS = 200

# 4-point Gauss-Legendre panel rule; fixed nodes keep results deterministic.
_GL_X, _GL_W = np.polynomial.legendre.leggauss(4)


@dataclass(frozen=True)
class TimeGrid:
    """Uniform time grid with ``n_steps + 1`` nodes on [t_start, t_end]."""

    t_start: float
    t_end: float
    n_steps: int
    nodes: np.ndarray = field(init=False, repr=False, compare=False)

    def __post_init__(self):
        if not (np.isfinite(self.t_start) and np.isfinite(self.t_end)):
            raise ValueError("grid endpoints must be finite")
        if not self.t_end > self.t_start:
            raise ValueError(f"need t_end > t_start, got [{self.t_start}, {self.t_end}]")
        if int(self.n_steps) != self.n_steps or self.n_steps < 1:
            raise ValueError(f"n_steps must be a positive integer, got {self.n_steps!r}")
        object.__setattr__(self, "n_steps", int(self.n_steps))
        object.__setattr__(
            self, "nodes", np.linspace(self.t_start, self.t_end, self.n_steps + 1)
        )

    @property
    def dt(self):
        return (self.t_end - self.t_start) / self.n_steps


@dataclass
class SampledFunction:
    """Nodal values of a function on a :class:`TimeGrid`."""

    grid: TimeGrid
    values: np.ndarray

    def __post_init__(self):
        values = np.asarray(self.values, dtype=float)
        if values.shape != (self.grid.n_steps + 1,):
            raise ValueError(
                f"expected {self.grid.n_steps + 1} nodal values, got shape {values.shape}"
            )
        if not np.all(np.isfinite(values)):
            raise ValueError("sampled values must be finite")
        self.values = values

    def __call__(self, t):
        return np.interp(t, self.grid.nodes, self.values)


def abel_weights(times):
    """Nodal weights of the product rule for int g(tau)/sqrt(T - tau) dtau.

    ``times`` is a strictly increasing array whose last entry is the upper
    limit T.  The returned weights w satisfy

        sum_j w[j] g(times[j]) = int_{times[0]}^{T} ghat(tau)/sqrt(T - tau) dtau

    exactly for the piecewise linear interpolant ghat.  The grid need not be
    uniform, which lets callers append a partial final interval.
    """
    times = np.asarray(times, dtype=float)
    if times.ndim != 1 or times.size < 1:
        raise ValueError("times must be a 1-d array with at least one node")
    w = np.zeros_like(times)
    if times.size == 1:
        return w
    if not np.all(np.diff(times) > 0.0):
        raise ValueError("times must be strictly increasing")
    T = times[-1]
    a = T - times[:-1]   # distance from the left node of each panel
    b = T - times[1:]    # distance from the right node (0 for the last panel)
    delta = a - b
    sa = np.sqrt(a)
    sb = np.sqrt(b)
    m0 = 2.0 * (sa - sb)
    m1 = a * m0 - (2.0 / 3.0) * (a * sa - b * sb)
    frac = m1 / delta
    w[:-1] += m0 - frac
    w[1:] += frac
    return w


def abel_integrate(g, k):
    """Integrate g(tau)/sqrt(t_k - tau) over [t_0, t_k] on g's own grid.

    Parameters
    ----------
    g : SampledFunction
        Nodal samples of the smooth factor.
    k : int
        Index of the upper limit node, 1 <= k <= n_steps.
    """
    if int(k) != k or not 1 <= k <= g.grid.n_steps:
        raise ValueError(f"k must lie in [1, {g.grid.n_steps}], got {k!r}")
    k = int(k)
    w = abel_weights(g.grid.nodes[: k + 1])
    return float(w @ g.values[: k + 1])


def running_integral(v):
    """Cumulative trapezoid of a :class:`SampledFunction`; value 0 at node 0."""
    dt = np.diff(v.grid.nodes)
    acc = np.concatenate(
        ([0.0], np.cumsum(0.5 * dt * (v.values[1:] + v.values[:-1])))
    )
    return SampledFunction(v.grid, acc)


# Tail repair of layer_history.  An off-curve kernel concentrates at
# t - tau = Delta* = d0^2/(4 kappa); the repaired window always spans at
# least TAIL_PANELS panels and at least TAIL_COVER * Delta*, so the bump
# sits well inside the re-integrated region.  The panel floor matters on
# its own: at Delta = j dt the factored off-curve density behaves like
# Phi(j)/sqrt(dt), so the plain rule's interpolation error is a function
# of j alone and only dies off like j^(-5/2); 48 panels push that floor
# below 1e-5 of the history integral.  The window is clamped to the
# available history (the integral is then evaluated by the graded rule in
# full); evaluation points so far off-curve that the kernel never wakes up
# (Delta* beyond TAIL_FAR_FACTOR times the history span) skip the repair.
# Inside the window the integrand is smooth in log(t - tau) with an
# O(1)-decade bump, so a composite Gauss-Legendre rule with
# TAIL_PANELS_PER_DECADE panels per decade converges rapidly;
# contributions below Delta*/TAIL_CUT_RATIO are beyond the kernel's
# underflow and are dropped.
TAIL_PANELS = 48
TAIL_COVER = 6.0
TAIL_FAR_FACTOR = 64.0
TAIL_PANELS_PER_DECADE = 6
TAIL_CUT_RATIO = 1e3


def layer_history(fk, t, times, density, weights=None):
    """Time integral of a layer potential along a sampled curve.

    Computes  int K(t, tau) density(tau) dtau  over ``times`` (strictly
    increasing, ending at t) for a factored boundary kernel, using the
    product rule on the factored form.  When the evaluation point lies
    near but off the source curve, the rule's view of the final panels is
    replaced by a log-graded composite Gauss-Legendre integral of the true
    kernel along the interpolated curve, which removes the near-diagonal
    resolution bias (the kernel concentrates at t - tau = d^2/(4 kappa),
    too sharp for the panels to see).

    ``weights`` may pass precomputed ``abel_weights(times)``.
    """
    from .kernels import Curve, factored_eval

    times = np.asarray(times, dtype=float)
    density = np.asarray(density, dtype=float)
    if times.shape != density.shape:
        raise ValueError("times and density must have matching shapes")
    if weights is None:
        weights = abel_weights(times)
    g = factored_eval(fk, t, times)
    total = float(weights @ (g * density))

    x = fk.eval_point.position(t) if isinstance(fk.eval_point, Curve) else fk.eval_point
    d0 = float(x) - float(fk.source.position(t))
    if d0 == 0.0 or times.size < 2:
        return total
    kappa = fk.kernel.kappa
    dstar = d0 * d0 / (4.0 * kappa)
    dt_loc = times[-1] - times[-2]
    span = t - times[0]
    if dstar > TAIL_FAR_FACTOR * span:
        # kernel maximum exp(-dstar/span) is negligible; nothing to repair
        return total
    needed = int(math.ceil(TAIL_COVER * dstar / dt_loc))
    nw = min(max(TAIL_PANELS, needed), times.size - 1)
    window = times[-(nw + 1) :]
    W = t - window[0]
    if not W > 0.0:
        return total
    ww = abel_weights(window)
    win_rule = float(ww @ (g[-(nw + 1) :] * density[-(nw + 1) :]))
    refined = _window_integral(fk, float(x), t, times, density, W, dstar)
    return total - win_rule + refined


def _window_integral(fk, x, t, times, density, W, dstar):
    """Direct quadrature of the layer integrand over [t - W, t).

    Gauss-Legendre in u = log(t - tau); the off-curve integrand is smooth
    there with a bump of O(1) decades centred at u = log(dstar).  Panel
    edges include the original sample times so the piecewise-linear
    density's kinks stay on panel boundaries.
    """
    kappa = fk.kernel.kappa
    cut = min(dstar, W) / TAIL_CUT_RATIO
    decades = math.log10(W / cut)
    n_panels = max(4, int(math.ceil(TAIL_PANELS_PER_DECADE * decades)))
    edges = np.geomspace(cut, W, n_panels + 1)
    interior = t - times[:-1]
    interior = interior[(interior > cut) & (interior < W)]
    edges = np.unique(np.concatenate((edges, interior)))
    lo = np.log(edges[:-1])
    hi = np.log(edges[1:])
    mid = 0.5 * (lo + hi)
    half = 0.5 * (hi - lo)
    u = (mid[:, None] + half[:, None] * _GL_X[None, :]).ravel()
    wts = (half[:, None] * _GL_W[None, :]).ravel()
    delta = np.exp(u)
    s = t - delta
    pos = fk.source.position(s)
    dens = np.interp(s, times, density)
    from .kernels import EXP_UNDERFLOW

    arg = -((x - pos) ** 2) / (4.0 * kappa * delta)
    live = arg > EXP_UNDERFLOW
    e = np.where(live, np.exp(np.where(live, arg, 0.0)), 0.0)
    if fk.variant == "d_dx":
        vals = -(x - pos) / (4.0 * np.sqrt(np.pi * (kappa * delta) ** 3)) * e
    else:
        vals = e / (2.0 * np.sqrt(np.pi * kappa * delta))
    # the d(tau) = delta d(log delta) Jacobian
    return float(wts @ (vals * dens * delta))


def gauss_convolve(kernel, x, t, f, lo, hi, deriv=False):
    """Integrate G(x,t;xi,0) f(xi) (or dG/dx f) over [lo, hi] at time t > 0.

    ``lo`` may be ``-inf`` and ``hi`` ``+inf``; the substituted z-integral is
    truncated at |z| <= GAUSS_CUTOFF either way.  ``f`` must accept ndarray
    arguments.
    """
    if not (np.isfinite(x) and np.isfinite(t)) or t <= 0.0:
        raise ValueError(f"need finite x and t > 0, got x={x!r}, t={t!r}")
    if not lo < hi:
        raise ValueError(f"need lo < hi, got [{lo!r}, {hi!r}]")
    kappa = kernel.kappa
    width = 2.0 * math.sqrt(kappa * t)
    # xi = x - width * z maps decreasing xi to increasing z.
    z_lo = (x - hi) / width if np.isfinite(hi) else -GAUSS_CUTOFF
    z_hi = (x - lo) / width if np.isfinite(lo) else GAUSS_CUTOFF
    z_lo = max(z_lo, -GAUSS_CUTOFF)
    z_hi = min(z_hi, GAUSS_CUTOFF)
    if z_lo >= z_hi:
        return 0.0
    edges = np.linspace(z_lo, z_hi, GAUSS_PANELS + 1)
    mid = 0.5 * (edges[1:] + edges[:-1])
    half = 0.5 * (edges[1] - edges[0])
    z = (mid[:, None] + half * _GL_X[None, :]).ravel()
    wz = (half * _GL_W)[None, :].repeat(GAUSS_PANELS, axis=0).ravel()
    fv = np.asarray(f(x - width * z), dtype=float)
    if deriv:
        # dG/dx transforms to -z exp(-z^2) / sqrt(pi kappa t).
        core = -z * np.exp(-z * z) / math.sqrt(math.pi * kappa * t)
    else:
        core = np.exp(-z * z) / math.sqrt(math.pi)
    return float(np.sum(wz * core * fv))


def semi_infinite_convolve(kernel, x, t, f, b):
    """Integrate G(x,t;xi,0) f(xi) over (-inf, b]; ``b`` may be +inf."""
    return gauss_convolve(kernel, x, t, f, -math.inf, b)


def finite_convolve(kernel, x, t, f, a, b, deriv=False):
    """Integrate G(x,t;xi,0) f(xi) (or dG/dx f) over the finite [a, b]."""
    if not (np.isfinite(a) and np.isfinite(b)):
        raise ValueError("finite_convolve needs finite endpoints")
    return gauss_convolve(kernel, x, t, f, a, b, deriv=deriv)
