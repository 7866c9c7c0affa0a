"""Field reconstruction from a solved trace vector.

Once the four interface traces and the induced boundary paths are known,
the salinity and the two temperature branches are single layer heat
potentials plus an initial-condition convolution.  This module evaluates
those representation formulas at interior points, extrapolates them to the
interfaces, and packages full spatial snapshots.

Evaluation right on a curve is deliberately avoided: the normal derivative
of a single layer potential jumps across the curve, so interface values
are obtained by Richardson extrapolation from three interior offsets
instead of by on-curve quadrature.
"""

import math
from dataclasses import dataclass

import numpy as np

from .kernels import FactoredBoundaryKernel, GreenKernel
from .model import freezing_salinity
from .quad import (
    SampledFunction,
    abel_weights,
    finite_convolve,
    layer_history,
    running_integral,
    semi_infinite_convolve,
)

__all__ = [
    "InterfaceTraces",
    "FieldSnapshot",
    "FieldContext",
    "interface_traces",
    "salinity_field",
    "salinity_gradient",
    "temperature_field",
    "temperature_gradient",
    "psi_residuals",
    "snapshot",
]

# Richardson extrapolation to the interface from offsets {1, 2, 4} * eps,
# exact for values with O(eps) and O(eps^2) contamination.
_RICH_W = (8.0 / 3.0, -2.0, 1.0 / 3.0)

REGION_OCEAN = "ocean"
REGION_ICE = "ice"
REGION_FRESH = "fresh"
TAG_OCEAN_ICE = "ocean/ice"
TAG_ICE_FRESH = "ice/fresh"


@dataclass(frozen=True)
class InterfaceTraces:
    """Interface temperature and salinity on a step grid.

    T0(t) integrates v0 from the initial contact temperature; S0 follows
    from the linearized freezing relation at every node.
    """

    T0: SampledFunction
    S0: SampledFunction

    @property
    def grid(self):
        return self.T0.grid


@dataclass(frozen=True)
class FieldSnapshot:
    """Field values on a spatial grid at one instant.

    ``region`` holds one tag per node: ocean, ice, fresh, or the interface
    tags ocean/ice and ice/fresh for nodes sitting on a boundary.  S is NaN
    outside the ocean branch; Tx is NaN on interface nodes where the two
    one-sided slopes differ.  The fresh region is identically 0 degrees.
    """

    t: float
    x_nodes: np.ndarray
    region: tuple
    T: np.ndarray
    Tx: np.ndarray
    S: np.ndarray
    h0: float
    hu: float

    def __post_init__(self):
        n = self.x_nodes.size
        if not (len(self.region) == n and self.T.size == n and self.S.size == n):
            raise ValueError("snapshot arrays must share one length")


def interface_traces(v, setup):
    """Traces T0, S0 induced by the v0 component of an iterate."""
    T0_init = float(setup.T_ocean_init(setup.h0_init))
    T0 = T0_init + running_integral(v.v0).values
    S0 = freezing_salinity(T0, v.v0.values, setup.params)
    g = v.grid
    return InterfaceTraces(SampledFunction(g, T0), SampledFunction(g, S0))


class FieldContext:
    """Shared state for evaluating the representation formulas.

    Builds the boundary curves and nodal data once, then evaluates any of
    the five fields at scalar (x, t).  History quadrature rows are cached
    per evaluation time, so snapshots over many x at one t reuse them.
    """

    def __init__(self, v, path, traces, setup):
        if v.grid.t_start != 0.0:
            raise ValueError("field evaluation expects a step-local grid starting at 0")
        self.v = v
        self.path = path
        self.traces = traces
        self.setup = setup
        p = setup.params
        self.params = p
        self.k_salt = GreenKernel(p.D)
        self.k_oc = GreenKernel(p.D_O)
        self.k_ice = GreenKernel(p.D_I)
        self.h0c = path.h0_curve()
        self.huc = path.hu_curve()
        self.nodes = v.grid.nodes
        self.dt = v.grid.dt
        # salt-trace time derivative, needed by the gradient representation
        self._S0p = np.gradient(traces.S0.values, self.nodes)
        self._cache = {}

    # -- history machinery -------------------------------------------------

    def _prefix(self, t):
        """Quadrature times ending exactly at t, weights, and nodal data."""
        key = float(t)
        hit = self._cache.get(key)
        if hit is not None:
            return hit
        nodes = self.nodes
        t_end = nodes[-1]
        if not 0.0 < t <= t_end * (1.0 + 1e-12):
            raise ValueError(f"time {t!r} outside the solved range (0, {t_end!r}]")
        t = min(float(t), float(t_end))
        j = int(np.searchsorted(nodes, t))
        if j < nodes.size and abs(nodes[j] - t) <= 1e-12 * max(1.0, t):
            times = nodes[: j + 1]
        else:
            times = np.append(nodes[:j], t)
        w = abel_weights(times)

        def at(arr):
            return np.interp(times, nodes, arr)

        data = {
            "v0": at(self.v.v0.values),
            "v1": at(self.v.v1.values),
            "v2": at(self.v.v2.values),
            "v3": at(self.v.v3.values),
            "T0": at(self.traces.T0.values),
            "S0": at(self.traces.S0.values),
            "dh0": at(self.path.dh0.values),
            "S0p": at(self._S0p),
        }
        entry = (times, w, data)
        self._cache[key] = entry
        return entry

    def _hist(self, kernel, curve, x, t, variant, density, times, w):
        fk = FactoredBoundaryKernel(kernel, curve, float(x), variant)
        return layer_history(fk, t, times, density, weights=w)

    def boundary_positions(self, t):
        return self.h0c.position(t), self.huc.position(t)

    # -- representation formulas -------------------------------------------

    def salinity(self, x, t):
        h0t = self.h0c.position(t)
        if not x < h0t:
            raise ValueError(f"salinity is defined for x < h0(t); got x={x!r}, h0={h0t!r}")
        times, w, d = self._prefix(t)
        hist = self._hist(self.k_salt, self.h0c, x, t, "d_dx", d["S0"], times, w)
        init = semi_infinite_convolve(self.k_salt, x, t, self.setup.S_init, self.setup.h0_init)
        return self.params.D * hist + init

    def salinity_gradient(self, x, t):
        h0t = self.h0c.position(t)
        if not x < h0t:
            raise ValueError(f"salinity is defined for x < h0(t); got x={x!r}, h0={h0t!r}")
        times, w, d = self._prefix(t)
        hist = self._hist(self.k_salt, self.h0c, x, t, "value", d["S0p"], times, w)
        hist -= self._hist(self.k_salt, self.h0c, x, t, "d_dx", d["dh0"] * d["S0"], times, w)
        init = semi_infinite_convolve(
            self.k_salt, x, t, self.setup.S_init.deriv, self.setup.h0_init
        )
        return hist + init

    def ocean_T(self, x, t):
        p = self.params
        times, w, d = self._prefix(t)
        hist = self._hist(
            self.k_oc, self.h0c, x, t, "value", p.D_O * d["v1"] + d["T0"] * d["dh0"], times, w
        )
        hist += p.D_O * self._hist(self.k_oc, self.h0c, x, t, "d_dx", d["T0"], times, w)
        init = semi_infinite_convolve(self.k_oc, x, t, self.setup.T_ocean_init, self.setup.h0_init)
        return hist + init

    def ocean_Tx(self, x, t):
        p = self.params
        times, w, d = self._prefix(t)
        hist = p.D_O * self._hist(self.k_oc, self.h0c, x, t, "d_dx", d["v1"], times, w)
        hist += self._hist(self.k_oc, self.h0c, x, t, "value", d["v0"], times, w)
        init = semi_infinite_convolve(
            self.k_oc, x, t, self.setup.T_ocean_init.deriv, self.setup.h0_init
        )
        return hist + init

    def ice_T(self, x, t):
        p = self.params
        times, w, d = self._prefix(t)
        hist = p.D_I * self._hist(self.k_ice, self.huc, x, t, "value", d["v3"], times, w)
        hist -= self._hist(
            self.k_ice, self.h0c, x, t, "value", p.D_I * d["v2"] + d["T0"] * d["dh0"], times, w
        )
        hist -= p.D_I * self._hist(self.k_ice, self.h0c, x, t, "d_dx", d["T0"], times, w)
        init = finite_convolve(
            self.k_ice, x, t, self.setup.T_ice_init, self.setup.h0_init, self.setup.hu_init
        )
        return hist + init

    def ice_Tx(self, x, t):
        p = self.params
        times, w, d = self._prefix(t)
        hist = p.D_I * self._hist(self.k_ice, self.huc, x, t, "d_dx", d["v3"], times, w)
        hist -= p.D_I * self._hist(self.k_ice, self.h0c, x, t, "d_dx", d["v2"], times, w)
        hist -= self._hist(self.k_ice, self.h0c, x, t, "value", d["v0"], times, w)
        init = finite_convolve(
            self.k_ice,
            x,
            t,
            self.setup.T_ice_init.deriv,
            self.setup.h0_init,
            self.setup.hu_init,
        )
        return hist + init

    # -- boundary-layer aware evaluation ------------------------------------

    # The quadrature cannot resolve the last time panel's diffusion layer,
    # so points closer to an interface than 2*sqrt(kappa*dt) are filled from
    # the trace-anchored Taylor expansion (slopes are solved unknowns, not
    # differenced values).

    def _trace_at(self, t):
        T0t = float(self.traces.T0(t))
        S0t = float(self.traces.S0(t))
        v1t = float(self.v.v1(t))
        v2t = float(self.v.v2(t))
        v3t = float(self.v.v3(t))
        dh0t = float(np.interp(t, self.nodes, self.path.dh0.values))
        return T0t, S0t, v1t, v2t, v3t, dh0t

    def ocean_T_smooth(self, x, t):
        h0t = self.h0c.position(t)
        eps = 2.0 * math.sqrt(self.params.D_O * self.dt)
        if h0t - x < eps:
            T0t, _, v1t, _, _, _ = self._trace_at(t)
            return T0t + v1t * (x - h0t)
        return self.ocean_T(x, t)

    def ocean_Tx_smooth(self, x, t):
        h0t = self.h0c.position(t)
        eps = 2.0 * math.sqrt(self.params.D_O * self.dt)
        if h0t - x < eps:
            return float(self.v.v1(t))
        return self.ocean_Tx(x, t)

    def salinity_smooth(self, x, t):
        h0t = self.h0c.position(t)
        eps = 2.0 * math.sqrt(self.params.D * self.dt)
        if h0t - x < eps:
            _, S0t, _, _, _, dh0t = self._trace_at(t)
            # interface slope from the salt balance law S_x = -S0 h0' / D
            return S0t - (S0t * dh0t / self.params.D) * (x - h0t)
        return self.salinity(x, t)

    def salinity_gradient_smooth(self, x, t):
        h0t = self.h0c.position(t)
        eps = 2.0 * math.sqrt(self.params.D * self.dt)
        if h0t - x < eps:
            _, S0t, _, _, _, dh0t = self._trace_at(t)
            return -S0t * dh0t / self.params.D
        return self.salinity_gradient(x, t)

    def _hermite_ice(self, x, t):
        h0t, hut = self.boundary_positions(t)
        gap = hut - h0t
        T0t, _, _, v2t, v3t, _ = self._trace_at(t)
        s = (x - h0t) / gap
        h00 = (1.0 + 2.0 * s) * (1.0 - s) ** 2
        h10 = s * (1.0 - s) ** 2
        h11 = s * s * (s - 1.0)
        val = h00 * T0t + gap * (h10 * v2t + h11 * v3t)
        d00 = 6.0 * s * (s - 1.0) / gap
        d10 = (1.0 - s) * (1.0 - 3.0 * s)
        d11 = s * (3.0 * s - 2.0)
        slope = d00 * T0t + d10 * v2t + d11 * v3t
        return val, slope

    def ice_T_smooth(self, x, t):
        h0t, hut = self.boundary_positions(t)
        eps = 2.0 * math.sqrt(self.params.D_I * self.dt)
        if hut - h0t < 4.0 * eps:
            return self._hermite_ice(x, t)[0]
        T0t, _, _, v2t, v3t, _ = self._trace_at(t)
        if x - h0t < eps:
            return T0t + v2t * (x - h0t)
        if hut - x < eps:
            return v3t * (x - hut)
        return self.ice_T(x, t)

    def ice_Tx_smooth(self, x, t):
        h0t, hut = self.boundary_positions(t)
        eps = 2.0 * math.sqrt(self.params.D_I * self.dt)
        if hut - h0t < 4.0 * eps:
            return self._hermite_ice(x, t)[1]
        if x - h0t < eps:
            return float(self.v.v2(t))
        if hut - x < eps:
            return float(self.v.v3(t))
        return self.ice_Tx(x, t)

    # -- interface residuals -------------------------------------------------

    def _extrapolate(self, f, eps):
        return sum(wi * f(k * eps) for wi, k in zip(_RICH_W, (1.0, 2.0, 4.0)))

    def psi(self, t):
        p = self.params
        h0t, hut = self.boundary_positions(t)
        gap = hut - h0t
        T0t, S0t, _, _, _, dh0t = self._trace_at(t)
        eps_S = 2.0 * math.sqrt(p.D * self.dt)
        eps_O = 2.0 * math.sqrt(p.D_O * self.dt)
        # smaller ice base so the gap/8 cap (largest offset at gap/2) stays
        # inactive on coarse grids and the residual keeps its dt scaling
        eps_I = min(0.5 * math.sqrt(p.D_I * self.dt), gap / 8.0)
        sx = self._extrapolate(lambda e: self.salinity_gradient(h0t - e, t), eps_S)
        psi1 = p.D * sx + S0t * dh0t
        psi2 = self._extrapolate(lambda e: self.ocean_T(h0t - e, t), eps_O) - T0t
        psi3 = self._extrapolate(lambda e: self.ice_T(h0t + e, t), eps_I) - T0t
        psi4 = self._extrapolate(lambda e: self.ice_T(hut - e, t), eps_I)
        return psi1, psi2, psi3, psi4


# -- module-level operations ------------------------------------------------


def salinity_field(x, t, v, path, traces, setup):
    """Salinity at an ocean point from the single layer representation."""
    return FieldContext(v, path, traces, setup).salinity(float(x), float(t))


def salinity_gradient(x, t, v, path, traces, setup):
    """Spatial salinity derivative from the differentiated representation."""
    return FieldContext(v, path, traces, setup).salinity_gradient(float(x), float(t))


def temperature_field(x, t, v, path, traces, setup):
    """Temperature at x: ocean branch below h0(t), ice branch between the
    interfaces, the trace value exactly at h0(t)."""
    ctx = FieldContext(v, path, traces, setup)
    return _dispatch_T(ctx, float(x), float(t))


def _interface_tol(h0t, hut):
    return 1e-15 + 1e-12 * max(1.0, abs(h0t), abs(hut))


def _dispatch_T(ctx, x, t):
    h0t, hut = ctx.boundary_positions(t)
    tol = _interface_tol(h0t, hut)
    if x >= hut - tol:
        raise ValueError(
            f"temperature is defined for x < hu(t); got x={x!r}, hu={hut!r}"
        )
    if abs(x - h0t) <= tol:
        return float(ctx.traces.T0(t))
    if x < h0t:
        return ctx.ocean_T(x, t)
    return ctx.ice_T(x, t)


def temperature_gradient(x, t, v, path, traces, setup):
    """Temperature slope from the differentiated representations; NaN at
    x = h0(t) where the two one-sided limits differ."""
    ctx = FieldContext(v, path, traces, setup)
    x, t = float(x), float(t)
    h0t, hut = ctx.boundary_positions(t)
    tol = _interface_tol(h0t, hut)
    if x >= hut - tol:
        raise ValueError(
            f"temperature is defined for x < hu(t); got x={x!r}, hu={hut!r}"
        )
    if abs(x - h0t) <= tol:
        return math.nan
    if x < h0t:
        return ctx.ocean_Tx(x, t)
    return ctx.ice_Tx(x, t)


def psi_residuals(v, path, traces, setup, t):
    """Interface consistency residuals (salt balance, three temperature
    matching conditions), extrapolated to the curves from interior offsets."""
    return FieldContext(v, path, traces, setup).psi(float(t))


def snapshot(t, x_nodes, v, path, traces, setup):
    """Evaluate all fields on a sorted spatial grid at one instant.

    Nodes within the last quadrature panel's diffusion layer of an
    interface use the trace-anchored expansion, which keeps the columns
    usable all the way to the boundaries.  t = 0 returns the initial data.
    """
    xs = np.asarray(x_nodes, dtype=float)
    if xs.ndim != 1 or xs.size == 0:
        raise ValueError("x_nodes must be a non-empty 1-d array")
    if not np.all(np.isfinite(xs)) or np.any(np.diff(xs) <= 0.0):
        raise ValueError("x_nodes must be finite and strictly increasing")
    t = float(t)

    if t == 0.0:
        return _initial_snapshot(xs, setup)

    ctx = FieldContext(v, path, traces, setup)
    h0t, hut = ctx.boundary_positions(t)
    tol = _interface_tol(h0t, hut)
    T0t = float(traces.T0(t))
    S0t = float(traces.S0(t))

    region = []
    T = np.empty_like(xs)
    Tx = np.empty_like(xs)
    S = np.full_like(xs, math.nan)
    for i, x in enumerate(xs):
        if abs(x - h0t) <= tol:
            region.append(TAG_OCEAN_ICE)
            T[i] = T0t
            Tx[i] = math.nan
            S[i] = S0t
        elif abs(x - hut) <= tol:
            region.append(TAG_ICE_FRESH)
            T[i] = 0.0
            Tx[i] = math.nan
        elif x < h0t:
            region.append(REGION_OCEAN)
            T[i] = ctx.ocean_T_smooth(x, t)
            Tx[i] = ctx.ocean_Tx_smooth(x, t)
            S[i] = ctx.salinity_smooth(x, t)
        elif x < hut:
            region.append(REGION_ICE)
            T[i] = ctx.ice_T_smooth(x, t)
            Tx[i] = ctx.ice_Tx_smooth(x, t)
        else:
            region.append(REGION_FRESH)
            T[i] = 0.0
            Tx[i] = 0.0
    return FieldSnapshot(
        t=t, x_nodes=xs, region=tuple(region), T=T, Tx=Tx, S=S, h0=h0t, hu=hut
    )


def _initial_snapshot(xs, setup):
    h0t, hut = setup.h0_init, setup.hu_init
    tol = _interface_tol(h0t, hut)
    region = []
    T = np.empty_like(xs)
    Tx = np.empty_like(xs)
    S = np.full_like(xs, math.nan)
    for i, x in enumerate(xs):
        if abs(x - h0t) <= tol:
            region.append(TAG_OCEAN_ICE)
            T[i] = float(setup.T_ocean_init(h0t))
            Tx[i] = math.nan
            S[i] = float(setup.S_init(h0t))
        elif abs(x - hut) <= tol:
            region.append(TAG_ICE_FRESH)
            T[i] = 0.0
            Tx[i] = math.nan
        elif x < h0t:
            region.append(REGION_OCEAN)
            T[i] = float(setup.T_ocean_init(x))
            Tx[i] = float(setup.T_ocean_init.deriv(x))
            S[i] = float(setup.S_init(x))
        elif x < hut:
            region.append(REGION_ICE)
            T[i] = float(setup.T_ice_init(x))
            Tx[i] = float(setup.T_ice_init.deriv(x))
        else:
            region.append(REGION_FRESH)
            T[i] = 0.0
            Tx[i] = 0.0
    return FieldSnapshot(
        t=0.0, x_nodes=xs, region=tuple(region), T=T, Tx=Tx, S=S, h0=h0t, hu=hut
    )
