"""Physical parameters, initial profiles and problem setup.

Geometry and units
------------------
The vertical coordinate x is in metres and increases upward.  Ocean water
occupies x < h0(t), the ice layer (the false bottom) occupies
h0(t) < x < hu(t), and fresh water at the melting point sits above hu(t).
Temperatures are in degrees Celsius, salinity in psu, time in seconds.

The interface velocity laws are

    h0'(t) = lambda_I_tilde * T_x(h0+, t) - lambda_O_tilde * T_x(h0-, t)
    hu'(t) = lambda_I_tilde * T_x(hu-, t)

with lambda_tilde = lambda / (rho_I * L_f), and the ocean/ice interface
temperature and salinity are tied by the linearized freezing relation

    T0(t) + n0 * T0'(t) = -m0 * S0(t).

The unknown vector of the integral formulation collects the four interface
traces

    v0 = T0'(t),  v1 = T_x(h0-, t),  v2 = T_x(h0+, t),  v3 = T_x(hu-, t).
"""

import math
from dataclasses import dataclass, field

import numpy as np
from scipy.special import erf

from .kernels import Curve
from .quad import SampledFunction, TimeGrid

__all__ = [
    "PhysicalParams",
    "Profile",
    "ProblemSetup",
    "VState",
    "BoundaryPath",
    "Violation",
    "ValidationReport",
    "derived_stefan_coefficients",
    "freezing_salinity",
    "validate_setup",
]

# Tolerance of the interface compatibility checks (H2): temperature is
# continuous across h0 and vanishes at hu in the initial data.
COMPAT_TOL = 1e-10

# Number of sample points used when checking profile boundedness.
_SCAN_POINTS = 10_001


def derived_stefan_coefficients(lambda_I, lambda_O, rho_I, L_f):
    """Reduce raw conductivities to the interface-law coefficients.

    Returns ``(lambda_I_tilde, lambda_O_tilde) = (lambda_I, lambda_O) / (rho_I * L_f)``.
    All inputs must be strictly positive.
    """
    for name, val in (
        ("lambda_I", lambda_I),
        ("lambda_O", lambda_O),
        ("rho_I", rho_I),
        ("L_f", L_f),
    ):
        if not (np.isfinite(val) and val > 0.0):
            raise ValueError(f"{name} must be positive and finite, got {val!r}")
    denom = rho_I * L_f
    return lambda_I / denom, lambda_O / denom


@dataclass(frozen=True)
class PhysicalParams:
    """Material constants of the two-phase problem.

    Attributes
    ----------
    lambda_I_tilde, lambda_O_tilde : float
        Interface-law coefficients, m / (s degC); strictly positive.
    D_I, D_O, D : float
        Thermal diffusivity of ice and ocean and salt diffusivity, m^2/s.
    m0 : float
        Liquidus slope of the freezing relation, degC/psu; nonzero.
    n0 : float
        Relaxation coefficient multiplying T0'(t) in the freezing relation,
        seconds; nonzero (the formulation divides by it).
    lambda_I, lambda_O, rho_I, L_f : float, optional
        Raw conductivities, ice density and latent heat.  When given they
        must reproduce the tilde coefficients.
    """

    lambda_I_tilde: float
    lambda_O_tilde: float
    D_I: float
    D_O: float
    D: float
    m0: float
    n0: float
    lambda_I: float | None = None
    lambda_O: float | None = None
    rho_I: float | None = None
    L_f: float | None = None

    def __post_init__(self):
        for name in ("lambda_I_tilde", "lambda_O_tilde", "D_I", "D_O", "D"):
            val = getattr(self, name)
            if not (np.isfinite(val) and val > 0.0):
                raise ValueError(f"{name} must be positive and finite, got {val!r}")
        for name in ("m0", "n0"):
            val = getattr(self, name)
            if not (np.isfinite(val) and val != 0.0):
                raise ValueError(f"{name} must be nonzero and finite, got {val!r}")
        raw = (self.lambda_I, self.lambda_O, self.rho_I, self.L_f)
        if any(v is not None for v in raw):
            if any(v is None for v in raw):
                raise ValueError("give either all of lambda_I, lambda_O, rho_I, L_f or none")
            lt_i, lt_o = derived_stefan_coefficients(*raw)
            for name, expect, got in (
                ("lambda_I_tilde", lt_i, self.lambda_I_tilde),
                ("lambda_O_tilde", lt_o, self.lambda_O_tilde),
            ):
                if not math.isclose(expect, got, rel_tol=1e-9):
                    raise ValueError(
                        f"{name}={got!r} inconsistent with raw constants (expected {expect!r})"
                    )


def freezing_salinity(T0, dT0, params):
    """Interface salinity from the freezing relation: -(T0 + n0*dT0)/m0.

    Accepts scalars or arrays.  Relies on ``params.m0 != 0``.
    """
    if params.m0 == 0.0:
        raise ValueError("freezing relation needs m0 != 0")
    return -(np.asarray(T0, dtype=float) + params.n0 * np.asarray(dT0, dtype=float)) / params.m0


@dataclass(frozen=True)
class Profile:
    """A one-dimensional initial profile on a hinted domain [x_lo, x_hi].

    Supported kinds:

    * ``constant``: params = (value,)
    * ``linear``: params = (x_ref, y_ref, slope); clamped to its endpoint
      values outside [x_lo, x_hi] so it stays bounded
    * ``erf_step``: params = (level_lo, level_hi, center, width); a smooth
      transition, analytic on the whole line
    * ``table``: nodes ``xs``/``ys``, linear interpolation with constant
      extrapolation

    Calling the profile evaluates it; ``deriv`` gives the slope (one-sided
    at kinks when ``side`` is -1 or +1).  ``far_field`` is the constant the
    profile takes toward x -> -inf.
    """

    kind: str
    x_lo: float
    x_hi: float
    params: tuple = ()
    xs: np.ndarray | None = None
    ys: np.ndarray | None = None

    def __post_init__(self):
        if self.kind not in ("constant", "linear", "erf_step", "table"):
            raise ValueError(f"unknown profile kind {self.kind!r}")
        if not (np.isfinite(self.x_lo) and np.isfinite(self.x_hi) and self.x_lo < self.x_hi):
            raise ValueError(f"bad domain hint [{self.x_lo!r}, {self.x_hi!r}]")
        if self.kind == "table":
            xs = np.asarray(self.xs, dtype=float)
            ys = np.asarray(self.ys, dtype=float)
            if xs.ndim != 1 or xs.size < 2 or xs.shape != ys.shape:
                raise ValueError("table profile needs matching 1-d xs and ys, size >= 2")
            if not np.all(np.diff(xs) > 0.0):
                raise ValueError("table xs must be strictly increasing")
            if not (np.all(np.isfinite(xs)) and np.all(np.isfinite(ys))):
                raise ValueError("table values must be finite")
            object.__setattr__(self, "xs", xs)
            object.__setattr__(self, "ys", ys)
        else:
            if self.xs is not None or self.ys is not None:
                raise ValueError("xs/ys are only valid for table profiles")
            if not np.all(np.isfinite(self.params)):
                raise ValueError("profile parameters must be finite")
        n_expected = {"constant": 1, "linear": 3, "erf_step": 4, "table": 0}[self.kind]
        if len(self.params) != n_expected:
            raise ValueError(f"{self.kind} profile takes {n_expected} parameters")
        if self.kind == "erf_step" and self.params[3] <= 0.0:
            raise ValueError("erf_step width must be positive")

    # -- constructors ---------------------------------------------------
    @classmethod
    def constant(cls, value, x_lo, x_hi):
        return cls("constant", x_lo, x_hi, (float(value),))

    @classmethod
    def linear(cls, x_ref, y_ref, slope, x_lo, x_hi):
        return cls("linear", x_lo, x_hi, (float(x_ref), float(y_ref), float(slope)))

    @classmethod
    def erf_step(cls, level_lo, level_hi, center, width, x_lo, x_hi):
        return cls(
            "erf_step", x_lo, x_hi,
            (float(level_lo), float(level_hi), float(center), float(width)),
        )

    @classmethod
    def table(cls, xs, ys):
        xs = np.asarray(xs, dtype=float)
        return cls("table", float(xs[0]), float(xs[-1]), (), xs=xs, ys=np.asarray(ys, dtype=float))

    # -- evaluation ------------------------------------------------------
    def __call__(self, x):
        x = np.asarray(x, dtype=float)
        if self.kind == "constant":
            out = np.full_like(x, self.params[0])
        elif self.kind == "linear":
            x_ref, y_ref, slope = self.params
            out = y_ref + slope * (np.clip(x, self.x_lo, self.x_hi) - x_ref)
        elif self.kind == "erf_step":
            lo, hi, center, width = self.params
            out = lo + 0.5 * (hi - lo) * (1.0 + erf((x - center) / width))
        else:
            out = np.interp(x, self.xs, self.ys)
        return float(out) if out.ndim == 0 else out

    def deriv(self, x, side=0):
        """Slope at x; ``side=-1``/``+1`` selects the one-sided limit at kinks."""
        x = np.asarray(x, dtype=float)
        if self.kind == "constant":
            out = np.zeros_like(x)
        elif self.kind == "linear":
            slope = self.params[2]
            if side < 0:
                inside = (x > self.x_lo) & (x <= self.x_hi)
            elif side > 0:
                inside = (x >= self.x_lo) & (x < self.x_hi)
            else:
                inside = (x >= self.x_lo) & (x <= self.x_hi)
            out = np.where(inside, slope, 0.0)
        elif self.kind == "erf_step":
            lo, hi, center, width = self.params
            z = (x - center) / width
            out = (hi - lo) / (width * math.sqrt(math.pi)) * np.exp(-z * z)
        else:
            seg = np.diff(self.ys) / np.diff(self.xs)
            # pick the segment left of x for side<=0, right of x for side>0
            idx = np.searchsorted(self.xs, x, side="left" if side <= 0 else "right")
            idx = np.clip(idx - 1, 0, seg.size - 1)
            if side < 0:
                inside = (x > self.xs[0]) & (x <= self.xs[-1])
            elif side > 0:
                inside = (x >= self.xs[0]) & (x < self.xs[-1])
            else:
                inside = (x > self.xs[0]) & (x < self.xs[-1])
            out = np.where(inside, seg[idx], 0.0)
        return float(out) if out.ndim == 0 else out

    @property
    def far_field(self):
        """Constant value toward x -> -inf."""
        if self.kind == "constant":
            return self.params[0]
        if self.kind == "linear":
            return float(self(self.x_lo))
        if self.kind == "erf_step":
            return self.params[0]
        return float(self.ys[0])


@dataclass(frozen=True)
class ProblemSetup:
    """Initial data of one solve interval.

    Construction never raises on physically inconsistent data; use
    :func:`validate_setup` to obtain the violation report.
    """

    params: PhysicalParams
    h0_init: float
    hu_init: float
    T_ocean_init: Profile
    T_ice_init: Profile
    S_init: Profile

    def __post_init__(self):
        if not (np.isfinite(self.h0_init) and np.isfinite(self.hu_init)):
            raise ValueError("interface positions must be finite")

    @property
    def gap(self):
        return self.hu_init - self.h0_init


@dataclass(frozen=True)
class Violation:
    code: str
    message: str
    measured: float | None = None


@dataclass(frozen=True)
class ValidationReport:
    ok: bool
    violations: tuple


def _scan(profile, lo, hi):
    xs = np.linspace(lo, hi, _SCAN_POINTS)
    vals = profile(xs)
    slopes = np.diff(vals) / np.diff(xs)
    return vals, slopes


def validate_setup(setup):
    """Check the geometric and compatibility hypotheses of the initial data.

    H1: h0_init < hu_init.
    H2: the initial temperature is continuous at h0, vanishes at hu, and has
        bounded slope on both phases.
    H3: the initial salinity is bounded on the ocean side.

    Violations are returned as data, never raised.
    """
    bad = []
    if not setup.h0_init < setup.hu_init:
        bad.append(Violation(
            "H1",
            f"interfaces must be ordered h0 < hu, got h0={setup.h0_init!r}, hu={setup.hu_init!r}",
            setup.hu_init - setup.h0_init,
        ))
    t_oc = float(setup.T_ocean_init(setup.h0_init))
    t_ic = float(setup.T_ice_init(setup.h0_init))
    if not (np.isfinite(t_oc) and np.isfinite(t_ic)) or abs(t_oc - t_ic) > COMPAT_TOL:
        bad.append(Violation(
            "H2",
            f"initial temperature jumps across h0: ocean {t_oc!r} vs ice {t_ic!r}",
            abs(t_oc - t_ic),
        ))
    t_top = float(setup.T_ice_init(setup.hu_init))
    if not np.isfinite(t_top) or abs(t_top) > COMPAT_TOL:
        bad.append(Violation(
            "H2",
            f"initial ice temperature must vanish at hu, got {t_top!r}",
            abs(t_top),
        ))
    width = max(setup.T_ocean_init.x_hi - setup.T_ocean_init.x_lo, 1e-6)
    vals, slopes = _scan(setup.T_ocean_init, setup.T_ocean_init.x_lo - width,
                         min(setup.h0_init, setup.T_ocean_init.x_hi))
    if not (np.all(np.isfinite(vals)) and np.all(np.isfinite(slopes))):
        bad.append(Violation("H2", "ocean temperature profile is unbounded", None))
    if setup.h0_init < setup.hu_init:
        vals, slopes = _scan(setup.T_ice_init, setup.h0_init, setup.hu_init)
        if not (np.all(np.isfinite(vals)) and np.all(np.isfinite(slopes))):
            bad.append(Violation("H2", "ice temperature profile is unbounded", None))
    width = max(setup.S_init.x_hi - setup.S_init.x_lo, 1e-6)
    vals, slopes = _scan(setup.S_init, setup.S_init.x_lo - width,
                         min(setup.h0_init, setup.S_init.x_hi))
    if not (np.all(np.isfinite(vals)) and np.all(np.isfinite(slopes))):
        bad.append(Violation("H3", "salinity profile is unbounded", None))
    return ValidationReport(ok=not bad, violations=tuple(bad))


@dataclass
class VState:
    """The four interface-trace unknowns sampled on a shared time grid."""

    grid: TimeGrid
    v0: SampledFunction
    v1: SampledFunction
    v2: SampledFunction
    v3: SampledFunction

    def __post_init__(self):
        for name in ("v0", "v1", "v2", "v3"):
            comp = getattr(self, name)
            if comp.grid is not self.grid and not (
                comp.grid.t_start == self.grid.t_start
                and comp.grid.t_end == self.grid.t_end
                and comp.grid.n_steps == self.grid.n_steps
            ):
                raise ValueError(f"component {name} lives on a different grid")

    @classmethod
    def zeros(cls, grid):
        z = lambda: SampledFunction(grid, np.zeros(grid.n_steps + 1))
        return cls(grid, z(), z(), z(), z())

    @classmethod
    def from_arrays(cls, grid, v0, v1, v2, v3):
        return cls(
            grid,
            SampledFunction(grid, v0),
            SampledFunction(grid, v1),
            SampledFunction(grid, v2),
            SampledFunction(grid, v3),
        )

    def as_matrix(self):
        return np.vstack([self.v0.values, self.v1.values, self.v2.values, self.v3.values])

    def sup_norm(self):
        return float(np.max(np.abs(self.as_matrix())))

    def distance(self, other):
        return float(np.max(np.abs(self.as_matrix() - other.as_matrix())))


@dataclass
class BoundaryPath:
    """Interface positions and velocities on a time grid.

    ``dh0``/``dhu`` are the nodal velocities implied by the interface laws,
    carried alongside so composed kernels get exact diagonal limits.
    """

    grid: TimeGrid
    h0: SampledFunction
    hu: SampledFunction
    dh0: SampledFunction
    dhu: SampledFunction

    def h0_curve(self):
        return Curve(self.grid.nodes, self.h0.values, self.dh0.values)

    def hu_curve(self):
        return Curve(self.grid.nodes, self.hu.values, self.dhu.values)

    def min_gap(self):
        return float(np.min(self.hu.values - self.h0.values))
