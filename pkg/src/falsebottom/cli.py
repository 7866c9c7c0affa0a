"""Command-line front end.

Subcommands: ``simulate`` runs the integral-equation solver and persists
trajectories, snapshots and diagnostics; ``validate`` runs the property
and residual suites against a config; ``compare`` cross-checks the
integral solver against the finite-difference oracle; ``benchmark`` runs
the Neumann similarity suite without a config.

Exit codes: 0 success (including a clean pinch-off), 1 config error,
2 solver failure, 3 failed validation or comparison.  Output files are
written atomically (temp file plus rename) with shortest round-trip
decimal formatting, so identical configs produce byte-identical files.
"""

import argparse
import dataclasses
import json
import math
import os
import sys
import tempfile

import numpy as np

from . import fields, kernels, model, oracle, quad, volterra

EXIT_OK = 0
EXIT_CONFIG = 1
EXIT_SOLVER = 2
EXIT_CHECK = 3

# far-boundary influence bound: the truncation depth must exceed this many
# diffusion lengths for the oracle comparison to be meaningful
DEPTH_MARGIN = 12.0

__all__ = [
    "ConfigError",
    "main",
    "cmd_simulate",
    "cmd_validate",
    "cmd_compare",
    "cmd_benchmark",
]


class ConfigError(ValueError):
    """Malformed or inconsistent run configuration."""


# ---------------------------------------------------------------------------
# config parsing

def _need(node, key, where):
    if key not in node:
        raise ConfigError(f"missing key {key!r} in section {where!r}")
    return node[key]


def _profile_from(node, where):
    if not isinstance(node, dict):
        raise ConfigError(f"profile {where!r} must be an object with a 'kind'")
    kind = _need(node, "kind", where)
    try:
        if kind == "constant":
            return model.Profile.constant(
                float(_need(node, "value", where)),
                float(_need(node, "x_lo", where)),
                float(_need(node, "x_hi", where)),
            )
        if kind == "linear":
            return model.Profile.linear(
                float(_need(node, "x_ref", where)),
                float(_need(node, "y_ref", where)),
                float(_need(node, "slope", where)),
                float(_need(node, "x_lo", where)),
                float(_need(node, "x_hi", where)),
            )
        if kind == "erf_step":
            return model.Profile.erf_step(
                float(_need(node, "level_lo", where)),
                float(_need(node, "level_hi", where)),
                float(_need(node, "center", where)),
                float(_need(node, "width", where)),
                float(_need(node, "x_lo", where)),
                float(_need(node, "x_hi", where)),
            )
        if kind == "table":
            return model.Profile.table(
                [float(v) for v in _need(node, "xs", where)],
                [float(v) for v in _need(node, "ys", where)],
            )
    except ConfigError:
        raise
    except (TypeError, ValueError) as exc:
        raise ConfigError(f"bad profile {where!r}: {exc}") from exc
    raise ConfigError(f"unknown profile kind {kind!r} in {where!r}")


def _params_from(node):
    try:
        if "lambda_I_tilde" in node:
            lI = float(_need(node, "lambda_I_tilde", "params"))
            lO = float(_need(node, "lambda_O_tilde", "params"))
            extra = {}
        else:
            lam_I = float(_need(node, "lambda_I", "params"))
            lam_O = float(_need(node, "lambda_O", "params"))
            rho_I = float(_need(node, "rho_I", "params"))
            L_f = float(_need(node, "L_f", "params"))
            lI, lO = model.derived_stefan_coefficients(lam_I, lam_O, rho_I, L_f)
            extra = {"lambda_I": lam_I, "lambda_O": lam_O, "rho_I": rho_I, "L_f": L_f}
        return model.PhysicalParams(
            lambda_I_tilde=lI,
            lambda_O_tilde=lO,
            D_I=float(_need(node, "D_I", "params")),
            D_O=float(_need(node, "D_O", "params")),
            D=float(_need(node, "D", "params")),
            m0=float(_need(node, "m0", "params")),
            n0=float(_need(node, "n0", "params")),
            **extra,
        )
    except ConfigError:
        raise
    except (TypeError, ValueError) as exc:
        raise ConfigError(f"bad params section: {exc}") from exc


def _setup_from(cfg):
    params = _params_from(_need(cfg, "params", "<root>"))
    ini = _need(cfg, "initial", "<root>")
    try:
        setup = model.ProblemSetup(
            params=params,
            h0_init=float(_need(ini, "h0", "initial")),
            hu_init=float(_need(ini, "hu", "initial")),
            T_ocean_init=_profile_from(_need(ini, "T_ocean", "initial"), "initial.T_ocean"),
            T_ice_init=_profile_from(_need(ini, "T_ice", "initial"), "initial.T_ice"),
            S_init=_profile_from(_need(ini, "S", "initial"), "initial.S"),
        )
    except ConfigError:
        raise
    except (TypeError, ValueError) as exc:
        raise ConfigError(f"bad initial section: {exc}") from exc
    report = model.validate_setup(setup)
    if not report.ok:
        lines = "; ".join(f"{v.code}: {v.message}" for v in report.violations)
        raise ConfigError(f"initial data rejected ({lines})")
    return setup


def _solver_from(cfg):
    node = _need(cfg, "solver", "<root>")
    known = {
        "t_end", "sigma_cap", "n_steps", "M", "picard_tol", "max_picard_iters",
        "contraction_guard", "pinch_ratio", "max_step_retries", "max_steps",
        "recon_width", "recon_points",
    }
    bad = set(node) - known
    if bad:
        raise ConfigError(f"unknown solver keys {sorted(bad)!r}")
    try:
        return volterra.SolverConfig(
            t_end=float(_need(node, "t_end", "solver")),
            sigma_cap=float(_need(node, "sigma_cap", "solver")),
            **{k: node[k] for k in known - {"t_end", "sigma_cap"} if k in node},
        )
    except ConfigError:
        raise
    except (TypeError, ValueError) as exc:
        raise ConfigError(f"bad solver section: {exc}") from exc


def _oracle_from(cfg):
    node = cfg.get("oracle")
    if node is None:
        raise ConfigError("compare requires an 'oracle' section")
    try:
        fdcfg = oracle.FDConfig(
            L=float(_need(node, "L", "oracle")),
            n_ocean=int(_need(node, "n_ocean", "oracle")),
            n_ice=int(_need(node, "n_ice", "oracle")),
            dt=float(_need(node, "dt", "oracle")),
            theta=float(node.get("theta", 1.0)),
            far_T=float(node.get("far_T", 0.0)),
            far_S=float(node.get("far_S", 0.0)),
            grading=float(node.get("grading", 2.0)),
            pinch_ratio=float(node.get("pinch_ratio", oracle.FD_PINCH_RATIO)),
        )
    except ConfigError:
        raise
    except (TypeError, ValueError) as exc:
        raise ConfigError(f"bad oracle section: {exc}") from exc
    tol = float(node.get("tolerance", 0.01))
    if not tol > 0.0:
        raise ConfigError(f"oracle tolerance must be positive, got {tol!r}")
    return fdcfg, tol


def _outputs_from(cfg, setup, scfg, override_dir):
    node = cfg.get("outputs", {})
    out_dir = override_dir or node.get("dir", "out")
    times = [float(t) for t in node.get("snapshot_times", [])]
    for t in times:
        if not 0.0 <= t <= scfg.t_end:
            raise ConfigError(
                f"snapshot time {t!r} outside the run interval [0, {scfg.t_end!r}]"
            )
    n_nodes = int(node.get("snapshot_nodes", 201))
    if n_nodes < 2:
        raise ConfigError(f"snapshot_nodes must be >= 2, got {n_nodes}")
    gap = setup.hu_init - setup.h0_init
    x_lo = float(node.get("x_lo", setup.T_ocean_init.x_lo))
    x_hi = float(node.get("x_hi", setup.hu_init + 0.5 * gap))
    if not x_lo < x_hi:
        raise ConfigError(f"snapshot window must satisfy x_lo < x_hi, got [{x_lo}, {x_hi}]")
    return out_dir, times, np.linspace(x_lo, x_hi, n_nodes)


def _load_config(path):
    try:
        with open(path, encoding="utf-8") as fh:
            cfg = json.load(fh)
    except OSError as exc:
        raise ConfigError(f"cannot read config {path!r}: {exc}") from exc
    except json.JSONDecodeError as exc:
        raise ConfigError(f"config {path!r} is not valid JSON: {exc}") from exc
    if not isinstance(cfg, dict):
        raise ConfigError(f"config {path!r} must be a JSON object")
    return cfg


# ---------------------------------------------------------------------------
# output helpers

def _fmt(v):
    f = float(v)
    if f == 0.0:
        f = 0.0  # collapse negative zero
    return repr(f)


def _atomic_write(path, text):
    d = os.path.dirname(path) or "."
    fd, tmp = tempfile.mkstemp(dir=d, prefix=".tmp-", suffix="~")
    try:
        with os.fdopen(fd, "w", encoding="utf-8", newline="\n") as fh:
            fh.write(text)
        os.replace(tmp, path)
    except BaseException:
        try:
            os.unlink(tmp)
        except OSError:
            pass
        raise


def _write_csv(path, header, columns):
    rows = zip(*columns)
    lines = [",".join(header)]
    for row in rows:
        lines.append(",".join(c if isinstance(c, str) else _fmt(c) for c in row))
    _atomic_write(path, "\n".join(lines) + "\n")


def _write_json(path, obj):
    _atomic_write(path, json.dumps(obj, indent=2, sort_keys=True) + "\n")


def _jsonable(obj):
    if dataclasses.is_dataclass(obj) and not isinstance(obj, type):
        return _jsonable(dataclasses.asdict(obj))
    if isinstance(obj, dict):
        return {k: _jsonable(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [_jsonable(v) for v in obj]
    if isinstance(obj, np.ndarray):
        return [_jsonable(v) for v in obj.tolist()]
    if isinstance(obj, (np.bool_, bool)):
        return bool(obj)
    if isinstance(obj, (np.floating, float)):
        return float(obj)
    if isinstance(obj, (np.integer, int)):
        return int(obj)
    if obj is None or isinstance(obj, str):
        return obj
    return str(obj)


def _say(args, msg):
    if not args.quiet:
        print(msg)


# ---------------------------------------------------------------------------
# simulate

def cmd_simulate(args):
    cfg = _load_config(args.config)
    setup = _setup_from(cfg)
    scfg = _solver_from(cfg)
    out_dir, snap_times, x_nodes = _outputs_from(cfg, setup, scfg, args.out)
    try:
        os.makedirs(out_dir, exist_ok=True)
    except OSError as exc:
        raise ConfigError(f"cannot create output directory {out_dir!r}: {exc}") from exc

    try:
        traj = volterra.advance(setup, scfg)
    except volterra.SolverError as exc:
        _write_json(
            os.path.join(out_dir, "diagnostics.json"),
            {
                "error": {
                    "type": type(exc).__name__,
                    "message": str(exc),
                    "diagnostics": _jsonable(getattr(exc, "diagnostics", None)),
                },
            },
        )
        print(f"solver failure: {exc}", file=sys.stderr)
        return EXIT_SOLVER

    _write_csv(
        os.path.join(out_dir, "boundaries.csv"),
        ["t", "h0", "hu", "dh0", "dhu", "T0", "S0"],
        [traj.times, traj.h0, traj.hu, traj.dh0, traj.dhu, traj.T0, traj.S0],
    )

    t_reached = float(traj.times[-1])
    for t in snap_times:
        if t > t_reached:
            continue  # interval lost to pinch-off
        snap = traj.snapshot_at(t, x_nodes)
        _write_csv(
            os.path.join(out_dir, f"snapshot_{_fmt(t)}.csv"),
            ["x", "region", "T", "Tx", "S"],
            [snap.x_nodes, [str(r) for r in snap.region], snap.T, snap.Tx, snap.S],
        )

    diag = {
        "reached_t_end": bool(traj.reached_t_end),
        "t_reached": t_reached,
        "pinch_off": _jsonable(traj.pinch_off),
        "steps": [
            {
                "t_start": float(rec.t_start),
                "sigma": float(rec.diagnostics.sigma_used),
                "iterations": int(rec.diagnostics.iterations),
                "residual_history": _jsonable(rec.diagnostics.residual_history),
                "contraction_ratios": _jsonable(rec.diagnostics.ratio_history),
                "min_separation": float(rec.diagnostics.min_separation),
                "ball_radius": float(rec.diagnostics.ball_radius),
                "converged": bool(rec.diagnostics.converged),
            }
            for rec in traj.steps
        ],
    }
    _write_json(os.path.join(out_dir, "diagnostics.json"), diag)
    if traj.pinch_off is not None:
        _say(args, f"pinch-off at t={traj.pinch_off['t']!r}; outputs in {out_dir}")
    else:
        _say(args, f"completed t={t_reached!r}; outputs in {out_dir}")
    return EXIT_OK


# ---------------------------------------------------------------------------
# validate

def _check_kernel_normalization(rng):
    worst = 0.0
    glx, glw = np.polynomial.legendre.leggauss(24)
    for _ in range(5):
        kappa = 10.0 ** rng.uniform(-9.0, 0.0)
        delta = 10.0 ** rng.uniform(-2.0, 4.0)
        x = rng.uniform(-1.0, 1.0)
        kern = kernels.GreenKernel(kappa)
        std = math.sqrt(2.0 * kappa * delta)
        edges = np.linspace(x - 12.0 * std, x + 12.0 * std, 49)
        total = 0.0
        for a, b in zip(edges[:-1], edges[1:]):
            mid, half = 0.5 * (a + b), 0.5 * (b - a)
            xi = mid + half * glx
            vals = [kernels.green_eval(kern, x, delta, float(q), 0.0) for q in xi]
            total += half * float(glw @ np.asarray(vals))
        worst = max(worst, abs(total - 1.0))
    return worst


def _check_kernel_pde(rng):
    worst = 0.0
    for _ in range(5):
        kappa = 10.0 ** rng.uniform(-9.0, 0.0)
        delta = 10.0 ** rng.uniform(-2.0, 4.0)
        x = rng.uniform(-1.0, 1.0)
        std = math.sqrt(2.0 * kappa * delta)
        xi = x + rng.uniform(-1.5, 1.5) * std
        kern = kernels.GreenKernel(kappa)
        dx = 3e-4 * std
        dt = 3e-4 * delta

        def g(xx, tt, qq, ss):
            return kernels.green_eval(kern, xx, tt, qq, ss)

        g_t = (g(x, delta + dt, xi, 0.0) - g(x, delta - dt, xi, 0.0)) / (2.0 * dt)
        g_xx = (
            g(x + dx, delta, xi, 0.0)
            - 2.0 * g(x, delta, xi, 0.0)
            + g(x - dx, delta, xi, 0.0)
        ) / dx**2
        scale = max(abs(g_t), kappa * abs(g_xx), 1e-300)
        worst = max(worst, abs(g_t - kappa * g_xx) / scale)

        # adjoint equation in the source variables, backward in source time
        g_tau = (g(x, delta - dt, xi, 0.0) - g(x, delta + dt, xi, 0.0)) / (2.0 * dt)
        g_qq = (
            g(x, delta, xi + dx, 0.0)
            - 2.0 * g(x, delta, xi, 0.0)
            + g(x, delta, xi - dx, 0.0)
        ) / dx**2
        scale = max(abs(g_tau), kappa * abs(g_qq), 1e-300)
        worst = max(worst, abs(g_tau + kappa * g_qq) / scale)
    return worst


def _check_gradient_antisymmetry(rng):
    worst = 0.0
    for _ in range(20):
        kappa = 10.0 ** rng.uniform(-9.0, 0.0)
        delta = 10.0 ** rng.uniform(-2.0, 4.0)
        x = rng.uniform(-1.0, 1.0)
        xi = x + rng.uniform(-3.0, 3.0) * math.sqrt(2.0 * kappa * delta)
        kern = kernels.GreenKernel(kappa)
        a = kernels.green_dx(kern, x, delta, xi, 0.0)
        b = kernels.green_dxi(kern, x, delta, xi, 0.0)
        worst = max(worst, abs(a + b))
    return worst


def _check_abel_exact(rng):
    worst = 0.0
    for _ in range(5):
        n = int(rng.integers(3, 30))
        times = np.sort(rng.uniform(0.0, 10.0, n + 1))
        times[0] = 0.0
        if np.min(np.diff(times)) <= 1e-9:
            times = np.linspace(0.0, 10.0, n + 1)
        vals = rng.uniform(-2.0, 2.0, n + 1)
        w = quad.abel_weights(times)
        got = float(w @ vals)
        t = times[-1]
        exact = 0.0
        for j in range(n):
            ta, tb = times[j], times[j + 1]
            c1 = (vals[j + 1] - vals[j]) / (tb - ta)
            c0 = vals[j] - c1 * ta

            def prim(r):
                return 2.0 * (c0 + c1 * t) * math.sqrt(r) - (2.0 / 3.0) * c1 * r**1.5

            exact += prim(t - ta) - prim(t - tb)
        scale = max(abs(exact), 1.0)
        worst = max(worst, abs(got - exact) / scale)
    return worst


def _sqrt_oracle_errors(steps_list):
    errs = []
    for n in steps_list:
        grid = quad.TimeGrid(0.0, 1.0, n)
        g = quad.SampledFunction(grid, np.sqrt(grid.nodes))
        errs.append(abs(quad.abel_integrate(g, n) - math.pi / 2.0))
    return errs


def _checks_static(rng):
    checks = []
    checks.append(("kernel_normalization", _check_kernel_normalization(rng), 1e-10))
    checks.append(("kernel_pde_residual", _check_kernel_pde(rng), 1e-6))
    checks.append(("kernel_gradient_antisymmetry", _check_gradient_antisymmetry(rng), 0.0))
    checks.append(("abel_piecewise_linear_exact", _check_abel_exact(rng), 1e-12))
    errs = _sqrt_oracle_errors([16, 32, 64])
    checks.append(("abel_sqrt_value_64", errs[-1], 2e-3))
    mono = 0.0 if errs[0] >= errs[1] >= errs[2] else 1.0
    checks.append(("abel_sqrt_monotone_refinement", mono, 0.5))
    lam_err = abs(
        oracle.neumann_lambda(
            math.sqrt(math.pi) * 0.5 * math.exp(0.25) * math.erf(0.5)
        )
        - 0.5
    )
    checks.append(("neumann_round_trip", lam_err, 1e-10))
    return checks


def cmd_validate(args):
    cfg = _load_config(args.config)
    setup = _setup_from(cfg)
    scfg = _solver_from(cfg)
    out_dir, _, _ = _outputs_from(cfg, setup, scfg, args.out)
    try:
        os.makedirs(out_dir, exist_ok=True)
    except OSError as exc:
        raise ConfigError(f"cannot create output directory {out_dir!r}: {exc}") from exc
    psi_tol = float(cfg.get("validate", {}).get("psi_tol", 1e-3))

    rng = np.random.default_rng(args.seed)
    checks = _checks_static(rng)

    sigma = min(scfg.sigma_cap, scfg.t_end)
    try:
        v, diag = volterra.picard_solve(setup, scfg, sigma)
    except volterra.SolverError as exc:
        print(f"solver failure: {exc}", file=sys.stderr)
        return EXIT_SOLVER
    path = volterra.boundaries_from_v(v, setup)
    traces = fields.interface_traces(v, setup)
    worst_psi = 0.0
    for frac in (0.25, 0.5, 0.75):
        psis = fields.psi_residuals(v, path, traces, setup, frac * sigma)
        worst_psi = max(worst_psi, max(abs(p) for p in psis))
    checks.append(("interface_residuals", worst_psi, psi_tol))
    checks.append(
        (
            "interface_separation",
            0.5 * (setup.hu_init - setup.h0_init) - path.min_gap(),
            0.0,
        )
    )

    report = {
        "all_passed": True,
        "seed": int(args.seed),
        "checks": [],
    }
    for name, measured, tol in checks:
        passed = bool(measured <= tol)
        report["checks"].append(
            {"name": name, "measured": float(measured), "tolerance": float(tol), "passed": passed}
        )
        report["all_passed"] = report["all_passed"] and passed
        _say(args, f"{'PASS' if passed else 'FAIL'}  {name}: {measured:.3e} (tol {tol:.3e})")

    _write_json(os.path.join(out_dir, "validation.json"), report)
    return EXIT_OK if report["all_passed"] else EXIT_CHECK


# ---------------------------------------------------------------------------
# compare

def cmd_compare(args):
    cfg = _load_config(args.config)
    setup = _setup_from(cfg)
    scfg = _solver_from(cfg)
    fdcfg, tol = _oracle_from(cfg)
    out_dir, _, _ = _outputs_from(cfg, setup, scfg, args.out)
    try:
        os.makedirs(out_dir, exist_ok=True)
    except OSError as exc:
        raise ConfigError(f"cannot create output directory {out_dir!r}: {exc}") from exc

    depth = abs(fdcfg.L - setup.h0_init)
    needed = DEPTH_MARGIN * math.sqrt(setup.params.D_O * scfg.t_end)
    if depth < needed:
        print(
            f"warning: truncation depth |L - h0(0)| = {depth:.3g} m is below the "
            f"far-boundary influence bound {needed:.3g} m; oracle agreement is "
            "not guaranteed",
            file=sys.stderr,
        )

    try:
        traj = volterra.advance(setup, scfg)
        res = oracle.fd_solve(setup, fdcfg, float(traj.times[-1]))
    except volterra.SolverError as exc:
        print(f"solver failure: {exc}", file=sys.stderr)
        return EXIT_SOLVER

    h0_fd = np.interp(traj.times, res.times, res.h0)
    hu_fd = np.interp(traj.times, res.times, res.hu)
    d_h0 = np.abs(traj.h0 - h0_fd)
    d_hu = np.abs(traj.hu - hu_fd)
    _write_csv(
        os.path.join(out_dir, "compare.csv"),
        ["t", "h0_int", "h0_fd", "hu_int", "hu_fd", "d_h0", "d_hu"],
        [traj.times, traj.h0, h0_fd, traj.hu, hu_fd, d_h0, d_hu],
    )
    gap0 = setup.hu_init - setup.h0_init
    rel = max(float(np.max(d_h0)), float(np.max(d_hu))) / gap0
    _say(args, f"max boundary difference {rel:.3e} of the initial gap (tol {tol:.3e})")
    return EXIT_OK if rel <= tol else EXIT_CHECK


# ---------------------------------------------------------------------------
# benchmark

def cmd_benchmark(args):
    ok = True
    for lam in (0.1, 0.25, 0.5, 1.0, 2.0):
        rhs = math.sqrt(math.pi) * lam * math.exp(lam * lam) * math.erf(lam)
        err = abs(oracle.neumann_lambda(rhs) - lam)
        ok = ok and err <= 1e-10
        _say(args, f"neumann lambda={lam}: round-trip error {err:.3e}")

    lam = 0.25
    boundary = math.sqrt(math.pi) * lam * math.exp(lam * lam) * math.erf(lam)
    errs = []
    for n in (64, 128):
        tau, s, _ = oracle.classical_stefan_via_machinery(1.0, boundary, 1.0, 1.0, n)
        exact = 2.0 * lam * np.sqrt(tau + 1.0)
        errs.append(float(np.max(np.abs(s - exact)) / exact[-1]))
        _say(args, f"stefan benchmark n={n}: relative error {errs[-1]:.3e}")
    ratio = errs[0] / max(errs[1], 1e-300)
    ok = ok and errs[1] <= 1e-3 and ratio >= 1.5
    _say(args, f"stefan refinement ratio {ratio:.2f}")

    if args.out:
        os.makedirs(args.out, exist_ok=True)
        _write_json(
            os.path.join(args.out, "benchmark.json"),
            {"stefan_errors": errs, "stefan_ratio": ratio, "passed": bool(ok)},
        )
    return EXIT_OK if ok else EXIT_CHECK


# ---------------------------------------------------------------------------
# entry point

class _Parser(argparse.ArgumentParser):
    # bad command lines are config errors; keep exit code 2 for solver failures
    def error(self, message):
        self.print_usage(sys.stderr)
        print(f"{self.prog}: error: {message}", file=sys.stderr)
        raise SystemExit(EXIT_CONFIG)


def _build_parser():
    common = _Parser(add_help=False)
    common.add_argument("--out", help="output directory (overrides config)", default=None)
    common.add_argument("--quiet", action="store_true", help="suppress progress output")
    common.add_argument("--seed", type=int, default=0, help="seed for randomized checks")
    ap = _Parser(
        prog="falsebottom",
        description="Two-interface melting-layer solver and validation tools.",
    )
    sub = ap.add_subparsers(dest="command", required=True, parser_class=_Parser)
    for name, doc in (
        ("simulate", "run the integral-equation solver and write outputs"),
        ("validate", "run property and residual checks against a config"),
        ("compare", "cross-check the solver against the finite-difference oracle"),
    ):
        sp = sub.add_parser(name, help=doc, parents=[common])
        sp.add_argument("config", help="path to a JSON run configuration")
    sub.add_parser("benchmark", help="run the similarity-solution benchmark suite",
                   parents=[common])
    return ap


def main(argv=None):
    args = _build_parser().parse_args(argv)
    handler = {
        "simulate": cmd_simulate,
        "validate": cmd_validate,
        "compare": cmd_compare,
        "benchmark": cmd_benchmark,
    }[args.command]
    try:
        return handler(args)
    except ConfigError as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return EXIT_CONFIG


if __name__ == "__main__":
    sys.exit(main())
