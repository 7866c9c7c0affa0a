"""Fixed-point operator, Picard solver and time extension.

The four interface traces v = (v0, v1, v2, v3) satisfy v = P(v) where P is
an operator built from heat kernels composed with the interface curves that
the input v itself induces.  On a short enough interval [0, sigma] the map
contracts on a ball of radius M, with the step length tied to M and to the
initial interface gap by

    sigma <= gap / (2 (lambda_I_tilde + lambda_O_tilde) M),

which also keeps every induced interface pair separated by at least half
the initial gap.  ``picard_solve`` iterates P from v = 0 and monitors the
empirical contraction ratio; ``advance`` strings solved intervals together
by rebuilding the initial profiles from the reconstructed fields at the end
of each interval.
"""

import math
from dataclasses import dataclass, field

import numpy as np

from .kernels import FactoredBoundaryKernel, GreenKernel
from .model import ProblemSetup, Profile, VState, BoundaryPath, validate_setup
from .quad import (
    SampledFunction,
    TimeGrid,
    abel_weights,
    finite_convolve,
    layer_history,
    running_integral,
    semi_infinite_convolve,
)

__all__ = [
    "SolverConfig",
    "PicardDiagnostics",
    "SolverError",
    "PinchOffError",
    "ContractionGuardError",
    "BallEscapeError",
    "NonConvergenceError",
    "IterationDivergedError",
    "ProlongationError",
    "StepRecord",
    "Trajectory",
    "boundaries_from_v",
    "apply_P",
    "choose_sigma",
    "picard_solve",
    "advance",
]


class SolverError(RuntimeError):
    """Base class for solver failures."""

    def __init__(self, message, diagnostics=None):
        super().__init__(message)
        self.diagnostics = diagnostics


class PinchOffError(SolverError):
    """The interface gap is not positive."""


class ContractionGuardError(SolverError):
    """Consecutive Picard residual ratios exceeded the guard; retry with smaller sigma."""


class BallEscapeError(SolverError):
    """An iterate left the ball of radius M; retry with larger M."""


class NonConvergenceError(SolverError):
    """The Picard iteration hit max_picard_iters without meeting tolerance."""


class IterationDivergedError(SolverError):
    """The operator produced non-finite values."""


class ProlongationError(SolverError):
    """A reconstructed state failed the setup hypotheses."""


@dataclass
class SolverConfig:
    """Knobs of the Picard solver and the stepping loop.

    ``M`` is the ball radius; leave it ``None`` to derive 2*||P(0)|| from a
    probe evaluation.  ``sigma_cap`` is a hard ceiling on the step length
    (it may be ``inf`` to always use the contraction bound).
    """

    t_end: float
    sigma_cap: float
    n_steps: int = 128
    M: float | None = None
    picard_tol: float = 1e-10
    max_picard_iters: int = 40
    contraction_guard: float = 0.9
    pinch_ratio: float = 1e-6
    max_step_retries: int = 8
    max_steps: int = 10_000
    recon_width: float | None = None
    recon_points: int = 160

    def __post_init__(self):
        if not (np.isfinite(self.t_end) and self.t_end > 0.0):
            raise ValueError(f"t_end must be positive and finite, got {self.t_end!r}")
        if not self.sigma_cap > 0.0:
            raise ValueError(f"sigma_cap must be positive, got {self.sigma_cap!r}")
        if int(self.n_steps) != self.n_steps or self.n_steps < 8:
            raise ValueError(f"n_steps must be an integer >= 8, got {self.n_steps!r}")
        if self.M is not None and not self.M > 0.0:
            raise ValueError(f"M must be positive when given, got {self.M!r}")
        if not self.picard_tol > 0.0:
            raise ValueError(f"picard_tol must be positive, got {self.picard_tol!r}")
        if not 0.0 < self.contraction_guard < 1.0:
            raise ValueError(
                f"contraction_guard must lie in (0, 1), got {self.contraction_guard!r}"
            )
        if not 0.0 < self.pinch_ratio < 1.0:
            raise ValueError(f"pinch_ratio must lie in (0, 1), got {self.pinch_ratio!r}")


@dataclass
class PicardDiagnostics:
    """Convergence record of one Picard solve."""

    sigma_used: float
    iterations: int = 0
    residual_history: list = field(default_factory=list)
    ratio_history: list = field(default_factory=list)
    min_separation: float = math.inf
    ball_radius: float = math.nan
    converged: bool = False


def boundaries_from_v(v, setup, h0_start=None, hu_start=None):
    """Integrate the interface laws for the paths induced by an iterate.

    h0(t) = h0_start + lambda_I_tilde * int v2 - lambda_O_tilde * int v1 and
    hu(t) = hu_start + lambda_I_tilde * int v3, with nodal velocities stored
    exactly as evaluated from the laws.  Start positions default to the
    setup's initial interfaces.
    """
    p = setup.params
    if h0_start is None:
        h0_start = setup.h0_init
    if hu_start is None:
        hu_start = setup.hu_init
    c1 = running_integral(v.v1).values
    c2 = running_integral(v.v2).values
    c3 = running_integral(v.v3).values
    h0 = h0_start + p.lambda_I_tilde * c2 - p.lambda_O_tilde * c1
    hu = hu_start + p.lambda_I_tilde * c3
    dh0 = p.lambda_I_tilde * v.v2.values - p.lambda_O_tilde * v.v1.values
    dhu = p.lambda_I_tilde * v.v3.values
    g = v.grid
    return BoundaryPath(
        g,
        SampledFunction(g, h0),
        SampledFunction(g, hu),
        SampledFunction(g, dh0),
        SampledFunction(g, dhu),
    )


def apply_P(v, setup):
    """One application of the fixed-point operator (pure Picard map).

    Every occurrence of the unknowns on the right-hand side, including the
    interface curves entering the kernels, uses the input iterate.  Node 0
    is the t -> 0+ limit, where the initial-condition convolutions collapse
    to one-sided initial slopes and the freezing relation.
    """
    grid = v.grid
    if grid.t_start != 0.0:
        raise ValueError("apply_P expects a step-local grid starting at 0")
    p = setup.params
    times = grid.nodes
    n = grid.n_steps

    path = boundaries_from_v(v, setup)
    h0c = path.h0_curve()
    huc = path.hu_curve()
    k_salt = GreenKernel(p.D)
    k_oc = GreenKernel(p.D_O)
    k_ice = GreenKernel(p.D_I)

    fk = {
        "salt_dx_00": FactoredBoundaryKernel(k_salt, h0c, h0c, "d_dx"),
        "oc_dx_00": FactoredBoundaryKernel(k_oc, h0c, h0c, "d_dx"),
        "oc_val_00": FactoredBoundaryKernel(k_oc, h0c, h0c, "value"),
        "ice_dx_0u": FactoredBoundaryKernel(k_ice, huc, h0c, "d_dx"),
        "ice_dx_00": FactoredBoundaryKernel(k_ice, h0c, h0c, "d_dx"),
        "ice_val_00": FactoredBoundaryKernel(k_ice, h0c, h0c, "value"),
        "ice_dx_uu": FactoredBoundaryKernel(k_ice, huc, huc, "d_dx"),
        "ice_dx_u0": FactoredBoundaryKernel(k_ice, h0c, huc, "d_dx"),
        "ice_val_u0": FactoredBoundaryKernel(k_ice, h0c, huc, "value"),
    }

    T0_init = float(setup.T_ocean_init(setup.h0_init))
    cum0 = running_integral(v.v0).values
    # The freezing relation turns this bracket into -m0 * S0(tau).
    bracket = T0_init + cum0 + p.n0 * v.v0.values

    v0, v1, v2, v3 = v.v0.values, v.v1.values, v.v2.values, v.v3.values
    out = np.empty((4, n + 1))
    out[0, 0] = -(T0_init + p.m0 * float(setup.S_init(setup.h0_init))) / p.n0
    out[1, 0] = float(setup.T_ocean_init.deriv(setup.h0_init, side=-1))
    out[2, 0] = float(setup.T_ice_init.deriv(setup.h0_init, side=+1))
    out[3, 0] = float(setup.T_ice_init.deriv(setup.hu_init, side=-1))

    for k in range(1, n + 1):
        t = times[k]
        tau = times[: k + 1]
        w = abel_weights(tau)
        x0 = path.h0.values[k]
        xu = path.hu.values[k]

        # salt trace equation: dG/dxi = -dG/dx for the composed kernel
        hist = -layer_history(fk["salt_dx_00"], t, tau, bracket[: k + 1], weights=w)
        init = semi_infinite_convolve(k_salt, x0, t, setup.S_init, setup.h0_init)
        out[0, k] = -(T0_init + cum0[k] + 2.0 * p.m0 * init + 2.0 * p.D * hist) / p.n0

        # ocean-side temperature gradient
        init = semi_infinite_convolve(k_oc, x0, t, setup.T_ocean_init.deriv, setup.h0_init)
        out[1, k] = (
            2.0 * p.D_O * layer_history(fk["oc_dx_00"], t, tau, v1[: k + 1], weights=w)
            + 2.0 * layer_history(fk["oc_val_00"], t, tau, v0[: k + 1], weights=w)
            + 2.0 * init
        )

        # ice-side gradient at the lower interface
        init = finite_convolve(
            k_ice, x0, t, setup.T_ice_init.deriv, setup.h0_init, setup.hu_init
        )
        out[2, k] = (
            2.0 * p.D_I * layer_history(fk["ice_dx_0u"], t, tau, v3[: k + 1], weights=w)
            - 2.0 * p.D_I * layer_history(fk["ice_dx_00"], t, tau, v2[: k + 1], weights=w)
            - 2.0 * layer_history(fk["ice_val_00"], t, tau, v0[: k + 1], weights=w)
            + 2.0 * init
        )

        # ice-side gradient at the upper interface
        init = finite_convolve(
            k_ice, xu, t, setup.T_ice_init.deriv, setup.h0_init, setup.hu_init
        )
        out[3, k] = (
            2.0 * p.D_I * layer_history(fk["ice_dx_uu"], t, tau, v3[: k + 1], weights=w)
            - 2.0 * p.D_I * layer_history(fk["ice_dx_u0"], t, tau, v2[: k + 1], weights=w)
            - 2.0 * layer_history(fk["ice_val_u0"], t, tau, v0[: k + 1], weights=w)
            + 2.0 * init
        )

    if not np.all(np.isfinite(out)):
        bad = np.argwhere(~np.isfinite(out))
        raise IterationDivergedError(
            f"operator produced non-finite values at (component, node) {bad[0].tolist()}"
        )
    return VState.from_arrays(grid, out[0], out[1], out[2], out[3])


def choose_sigma(setup, cfg, M=None):
    """Step length from the contraction bound, capped by ``cfg.sigma_cap``.

    sigma = min(sigma_cap, gap / (2 (lambda_I_tilde + lambda_O_tilde) M)).
    Raises :class:`PinchOffError` when the gap is not positive.
    """
    gap = setup.gap
    if gap <= 0.0:
        raise PinchOffError(f"interface gap must be positive, got {gap!r}")
    if M is None:
        M = cfg.M
    if M is None:
        raise ValueError("no ball radius: set cfg.M or pass M explicitly")
    if M == 0.0:
        return cfg.sigma_cap
    lam = setup.params.lambda_I_tilde + setup.params.lambda_O_tilde
    return min(cfg.sigma_cap, gap / (2.0 * lam * M))


def _probe_ball_radius(setup, cfg, horizon):
    """M = 2 * ||P(0)|| on a probe grid over [0, horizon]."""
    grid = TimeGrid(0.0, horizon, cfg.n_steps)
    p0 = apply_P(VState.zeros(grid), setup)
    return 2.0 * p0.sup_norm()


def picard_solve(setup, cfg, sigma, M=None):
    """Iterate v <- P(v) from v = 0 on [0, sigma].

    Returns ``(VState, PicardDiagnostics)``.  Raises
    :class:`BallEscapeError` when an iterate leaves the ball of radius M,
    :class:`ContractionGuardError` when two consecutive residual ratios
    exceed ``cfg.contraction_guard`` and :class:`NonConvergenceError` after
    ``cfg.max_picard_iters`` iterations.
    """
    if not sigma > 0.0:
        raise ValueError(f"sigma must be positive, got {sigma!r}")
    if M is None:
        M = cfg.M
    if M is None:
        M = _probe_ball_radius(setup, cfg, sigma)
    grid = TimeGrid(0.0, sigma, cfg.n_steps)
    v = VState.zeros(grid)
    diag = PicardDiagnostics(sigma_used=sigma, ball_radius=M)
    for _ in range(cfg.max_picard_iters):
        w = apply_P(v, setup)
        diag.iterations += 1
        res = w.distance(v)
        if diag.residual_history:
            prev = diag.residual_history[-1]
            diag.ratio_history.append(res / prev if prev > 0.0 else 0.0)
        diag.residual_history.append(res)
        diag.min_separation = min(
            diag.min_separation, boundaries_from_v(w, setup).min_gap()
        )
        norm = w.sup_norm()
        if M > 0.0 and norm > M:
            raise BallEscapeError(
                f"iterate norm {norm:.6g} escaped the ball of radius {M:.6g}", diag
            )
        if (
            len(diag.ratio_history) >= 2
            and diag.ratio_history[-1] > cfg.contraction_guard
            and diag.ratio_history[-2] > cfg.contraction_guard
        ):
            raise ContractionGuardError(
                "two consecutive residual ratios above the contraction guard "
                f"({diag.ratio_history[-2]:.3g}, {diag.ratio_history[-1]:.3g})",
                diag,
            )
        v = w
        if res <= cfg.picard_tol * (1.0 + norm):
            diag.converged = True
            return v, diag
    raise NonConvergenceError(
        f"no convergence after {cfg.max_picard_iters} iterations "
        f"(last residual {diag.residual_history[-1]:.3g})",
        diag,
    )


@dataclass
class StepRecord:
    """One accepted interval of the stepping loop (times are step-local)."""

    t_start: float
    sigma: float
    setup: ProblemSetup
    v: VState
    path: BoundaryPath
    traces: object  # fields.InterfaceTraces
    diagnostics: PicardDiagnostics


@dataclass
class Trajectory:
    """Concatenated result of :func:`advance`."""

    steps: list
    times: np.ndarray
    h0: np.ndarray
    hu: np.ndarray
    dh0: np.ndarray
    dhu: np.ndarray
    T0: np.ndarray
    S0: np.ndarray
    pinch_off: dict | None
    reached_t_end: bool

    def locate(self, t):
        """Step record containing global time t, and the step-local time."""
        if not self.steps:
            raise ValueError("empty trajectory")
        for rec in self.steps:
            if t <= rec.t_start + rec.sigma + 1e-12 * max(1.0, abs(t)):
                if t >= rec.t_start - 1e-12 * max(1.0, abs(t)):
                    return rec, min(max(t - rec.t_start, 0.0), rec.sigma)
        raise ValueError(f"time {t!r} outside the solved range")

    def snapshot_at(self, t, x_nodes):
        """Spatial snapshot at a global time (dispatches to the owning step)."""
        from . import fields

        if t == 0.0 and self.steps:
            rec = self.steps[0]
            return fields.snapshot(0.0, x_nodes, rec.v, rec.path, rec.traces, rec.setup)
        rec, t_local = self.locate(t)
        snap = fields.snapshot(t_local, x_nodes, rec.v, rec.path, rec.traces, rec.setup)
        return fields.FieldSnapshot(
            t=float(t),
            x_nodes=snap.x_nodes,
            region=snap.region,
            T=snap.T,
            Tx=snap.Tx,
            S=snap.S,
            h0=snap.h0,
            hu=snap.hu,
        )


def _ladder_offsets(finest, width, n):
    """Geometric ladder of ``n`` offsets from ``finest`` out to ``width``.

    Constant points-per-octave, so every diffusive boundary layer between
    the two scales (salt, thermal) is resolved equally well.  Linear
    interpolation error on an erf-like layer of width w then scales with
    (ln(width/finest)/n)^2 uniformly in w, instead of being dominated by
    whichever layer is thinner than the backbone spacing.
    """
    ratio = max((width / finest) ** (1.0 / (n - 1)), 1.0 + 1e-9)
    return finest * ratio ** np.arange(n)


def _reconstruct_profiles(rec, width, n_coarse):
    """Table profiles of T and S at the end of an accepted step.

    Interface values are pinned to the traces, which keeps the new initial
    state exactly compatible (continuity at h0, zero at hu).  Interior
    values come from the boundary-layer aware field evaluators, which
    switch to trace-anchored expansions where the quadrature cannot
    resolve the final time panel.
    """
    from . import fields

    setup = rec.setup
    p = setup.params
    sigma = rec.sigma
    dtau = sigma / rec.v.grid.n_steps
    h0_end = float(rec.path.h0.values[-1])
    hu_end = float(rec.path.hu.values[-1])
    T0_end = float(rec.traces.T0.values[-1])
    S0_end = float(rec.traces.S0.values[-1])

    ctx = fields.FieldContext(rec.v, rec.path, rec.traces, setup)

    # ocean grid: geometric ladder from the last-panel salt scale out to
    # the full window, so both the salt and the thermal boundary layers
    # get the same points-per-octave
    finest = 0.5 * math.sqrt(p.D * dtau)
    n_oc = max(int(n_coarse), 48)
    x_oc = h0_end - _ladder_offsets(finest, width, n_oc)[::-1]

    T_oc = np.empty_like(x_oc)
    S_oc = np.empty_like(x_oc)
    far_T = setup.T_ocean_init.far_field
    far_S = setup.S_init.far_field
    for i, x in enumerate(x_oc):
        if h0_end - x > 0.5 * width:
            # beyond the diffusive reach: keep the far-field constants
            T_oc[i] = far_T
            S_oc[i] = far_S
        else:
            T_oc[i] = ctx.ocean_T_smooth(x, sigma)
            S_oc[i] = ctx.salinity_smooth(x, sigma)

    x_oc_full = np.concatenate([x_oc, [h0_end]])
    T_oc_full = np.concatenate([T_oc, [T0_end]])
    S_oc_full = np.concatenate([S_oc, [S0_end]])

    # ice grid
    n_ice = 65
    x_ice = np.linspace(h0_end, hu_end, n_ice)
    T_ice = np.empty_like(x_ice)
    for i, x in enumerate(x_ice):
        T_ice[i] = ctx.ice_T_smooth(x, sigma)
    T_ice[0] = T0_end
    T_ice[-1] = 0.0

    return (
        Profile.table(x_oc_full, T_oc_full),
        Profile.table(x_ice, T_ice),
        Profile.table(x_oc_full, S_oc_full),
    )


def advance(setup, cfg):
    """March the solution to ``cfg.t_end`` by repeated short solves.

    Each accepted interval ends with a field reconstruction that becomes the
    next interval's initial data (interface values pinned to the traces, so
    the joints are exactly continuous).  Terminates early with a pinch-off
    event when the gap falls below ``cfg.pinch_ratio`` times the initial
    gap.  Returns a :class:`Trajectory`.
    """
    from . import fields

    initial_report = validate_setup(setup)
    if not initial_report.ok:
        raise ProlongationError(
            "initial data violates setup hypotheses: "
            + "; ".join(v.message for v in initial_report.violations)
        )

    gap0 = setup.gap
    width = cfg.recon_width
    if width is None:
        hint = setup.T_ocean_init.x_hi - setup.T_ocean_init.x_lo
        width = max(hint, 12.0 * math.sqrt(max(setup.params.D, setup.params.D_O) * cfg.t_end))

    steps = []
    pinch = None
    t_cur = 0.0
    cur = setup
    while t_cur < cfg.t_end * (1.0 - 1e-12):
        gap = cur.gap
        if gap <= cfg.pinch_ratio * gap0:
            pinch = {"t": t_cur, "gap": gap, "threshold": cfg.pinch_ratio * gap0}
            break
        if len(steps) >= cfg.max_steps:
            raise SolverError(f"exceeded max_steps={cfg.max_steps} before reaching t_end")
        remaining = cfg.t_end - t_cur
        M = cfg.M
        if M is None:
            M = _probe_ball_radius(cur, cfg, min(cfg.sigma_cap, remaining))
        if M == 0.0:
            sigma = min(cfg.sigma_cap, remaining)
            M = 1.0
        else:
            sigma = min(choose_sigma(cur, cfg, M), remaining)

        solved = None
        last_err = None
        for _ in range(cfg.max_step_retries):
            try:
                solved = picard_solve(cur, cfg, sigma, M)
                break
            except (ContractionGuardError, IterationDivergedError) as err:
                last_err = err
                sigma *= 0.5
            except BallEscapeError as err:
                last_err = err
                M *= 2.0
                sigma = min(choose_sigma(cur, cfg, M), remaining, sigma)
        if solved is None:
            raise SolverError(
                f"step at t={t_cur:.6g} failed after {cfg.max_step_retries} retries: {last_err}",
                getattr(last_err, "diagnostics", None),
            )
        v, diag = solved
        path = boundaries_from_v(v, cur)
        traces = fields.interface_traces(v, cur)
        rec = StepRecord(t_cur, sigma, cur, v, path, traces, diag)
        steps.append(rec)
        t_cur += sigma

        t_oc, t_ice, s_oc = _reconstruct_profiles(rec, width, cfg.recon_points)
        nxt = ProblemSetup(
            params=cur.params,
            h0_init=float(path.h0.values[-1]),
            hu_init=float(path.hu.values[-1]),
            T_ocean_init=t_oc,
            T_ice_init=t_ice,
            S_init=s_oc,
        )
        report = validate_setup(nxt)
        if not report.ok:
            raise ProlongationError(
                f"reconstructed state at t={t_cur:.6g} violates setup hypotheses: "
                + "; ".join(vi.message for vi in report.violations)
            )
        cur = nxt
        if pinch is None and nxt.gap <= cfg.pinch_ratio * gap0:
            pinch = {"t": t_cur, "gap": nxt.gap, "threshold": cfg.pinch_ratio * gap0}
            break

    # concatenate global nodal series, dropping duplicated joint nodes
    times, h0, hu, dh0, dhu, T0, S0 = [], [], [], [], [], [], []
    for i, rec in enumerate(steps):
        sl = slice(None) if i == 0 else slice(1, None)
        times.append(rec.t_start + rec.v.grid.nodes[sl])
        h0.append(rec.path.h0.values[sl])
        hu.append(rec.path.hu.values[sl])
        dh0.append(rec.path.dh0.values[sl])
        dhu.append(rec.path.dhu.values[sl])
        T0.append(rec.traces.T0.values[sl])
        S0.append(rec.traces.S0.values[sl])
    cat = lambda parts: np.concatenate(parts) if parts else np.array([])
    return Trajectory(
        steps=steps,
        times=cat(times),
        h0=cat(h0),
        hu=cat(hu),
        dh0=cat(dh0),
        dhu=cat(dhu),
        T0=cat(T0),
        S0=cat(S0),
        pinch_off=pinch,
        reached_t_end=pinch is None and t_cur >= cfg.t_end * (1.0 - 1e-12),
    )
