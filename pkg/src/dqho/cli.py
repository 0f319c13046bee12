"""Command-line front end.

Every subcommand reads a flat ``key = value`` config, runs one pipeline and
writes data files into ``--out``. Exit codes: 0 success, 2 invalid
configuration, 3 numerical failure.
"""

import argparse
import os
import sys
from contextlib import contextmanager

import numpy as np

from . import io
from .bath import (BathPreparation, SpectralDensity, damping_kernel,
                   nonthermal_equivalent_preparation, thermal_preparation)
from .chain import (ChainParams, chain_positivity, chain_spectral_density,
                    homogeneous_stationary, no_pole_condition, parameter_scan,
                    pole_sweep_path, quench_preparation, quench_stationary,
                    weak_damping_temperature)
from .equilibrium import classify, stationary_covariance, stationary_state, weak_damping_state
from .exceptions import ConfigError, DQHOError
from .oracle import build_finite, evolve_exact, revival_time_estimate
from .propagation import PhaseMoments, propagate_moments, propagate_trajectory, wigner_grid
from .response import compute_u_fourier, compute_u_volterra, find_poles

EXIT_OK, EXIT_CONFIG, EXIT_NUMERICAL = 0, 2, 3


class StepError(Exception):
    def __init__(self, operation, error):
        super().__init__(f"{operation}: {error}")
        self.operation = operation
        self.error = error


@contextmanager
def step(operation):
    """Tag library errors with the pipeline step that raised them."""
    try:
        yield
    except DQHOError as exc:
        raise StepError(operation, exc) from exc


# -- model assembly ---------------------------------------------------------

def chain_params(cfg):
    if cfg.omega_b != 1.0:
        raise ConfigError("chain runs use normalized units; set omega_b = 1 and give "
                          "normalized kappa, omega_r, t0, t_max and dt")
    return ChainParams(cfg.kappa_b, cfg.kappa, cfg.omega_r_value)


def build_model(cfg):
    """``(spec, omega, chain)`` with ``chain`` None unless model = chain."""
    if cfg.model == "none":
        return SpectralDensity.null(), cfg.omega, None
    if cfg.model == "custom":
        return SpectralDensity.from_csv(cfg.spectral_file), cfg.omega, None
    p = chain_params(cfg)
    ok, margin = chain_positivity(p)
    if not ok:
        raise ConfigError(f"chain violates positivity (margin {margin:.6g} in omega_r^2)")
    return chain_spectral_density(p), p.omega, p


def build_preparation(cfg, chain):
    if cfg.prep == "thermal":
        return thermal_preparation(cfg.t0)
    if cfg.prep == "nonthermal":
        return nonthermal_equivalent_preparation(cfg.t0)
    if cfg.prep == "file":
        return BathPreparation.from_csv(cfg.prep_file)
    if chain is None:
        raise ConfigError("prep = quench needs model = chain")
    return quench_preparation(chain, cfg.t0)


def time_grid(cfg):
    n = int(round(cfg.t_max / cfg.dt))
    return np.arange(n + 1) * cfg.dt


def response(cfg, spec, omega):
    times = time_grid(cfg)
    if cfg.method == "fourier":
        return compute_u_fourier(spec, omega, times, tol=min(cfg.tol, 1e-10))
    omega_max = max(spec.support[1], omega)
    return compute_u_volterra(spec, omega, times, omega_max=omega_max).response()


def initial_state(cfg, omega):
    kind = cfg.initial_state
    if kind == "coherent":
        return PhaseMoments.coherent(omega, cfg.q0, cfg.p0)
    if kind == "squeezed":
        return PhaseMoments.squeezed(omega, cfg.squeeze, cfg.q0, cfg.p0)
    if kind == "thermal":
        return PhaseMoments.thermal(omega, cfg.t_central, cfg.q0, cfg.p0)
    raise ConfigError(f"unknown initial_state {kind!r}")


# -- subcommands ------------------------------------------------------------

def cmd_kernel(cfg, ctx):
    with step("building model"):
        spec, omega, _ = build_model(cfg)
    with step(f"computing u ({cfg.method})"):
        rf = response(cfg, spec, omega)
    with step("damping kernel"):
        K = damping_kernel(spec, rf.times, tol=max(cfg.tol, 1e-10))
    nan = np.full(rf.times.size, np.nan)
    uc = rf.u_continuum if rf.u_continuum is not None else nan
    up = rf.u_poles if rf.u_poles is not None else nan
    ctx.table("u", ["t", "u", "udot", "u_continuum", "u_poles"],
              zip(rf.times, rf.u, rf.udot, uc, up))
    ctx.table("kernel", ["t", "K"], zip(rf.times, K))
    with step("locating poles"):
        poles = rf.poles if rf.method == "fourier" else find_poles(spec, omega)
    ctx.json("poles", {"count": len(poles), "poles": [p.as_dict() for p in poles]})


def cmd_propagate(cfg, ctx):
    with step("building model"):
        spec, omega, chain = build_model(cfg)
        prep = build_preparation(cfg, chain)
        m0 = initial_state(cfg, omega)
    with step(f"computing u ({cfg.method})"):
        rf = response(cfg, spec, omega)
    times = np.linspace(0.0, rf.t_max, cfg.n_times)
    with step("propagating moments"):
        X, S = propagate_trajectory(rf, spec, prep, m0, times, tol=cfg.tol)
    det = np.linalg.det(S)
    ctx.table("moments", ["t", "Xq", "Xp", "Sqq", "Sqp", "Spp", "detS"],
              ((t, x[0], x[1], s[0, 0], s[0, 1], s[1, 1], d)
               for t, x, s, d in zip(times, X, S, det)))
    for t in cfg.wigner_times:
        if not 0.0 <= t <= rf.t_max:
            raise ConfigError(f"wigner time {t} outside [0, t_max]")
        with step(f"Wigner function at t={t}"):
            m = propagate_moments(rf, spec, prep, m0, t, tol=cfg.tol)
            q, p, W = wigner_grid(m, cfg.wigner_n, cfg.wigner_width)
        Q, P = np.meshgrid(q, p, indexing="ij")
        ctx.table(f"wigner_t{t:g}", ["q", "p", "w"], zip(Q.ravel(), P.ravel(), W.ravel()))


def _closed_forms(cfg, chain):
    """Chain-quench closed forms available for the configured parameters."""
    out = {"t_inf_weak_damping": float(weak_damping_temperature(chain.omega_r, cfg.t0))}
    qs = quench_stationary(chain, cfg.t0)
    out["quench"] = {"sigma_inf": qs.sigma, "omega_inf": qs.omega_inf, "t_inf": qs.t_inf}
    if chain.kappa == chain.kappa_b and chain.omega_r == 1.0:
        sigma, om, t = homogeneous_stationary(chain.kappa, cfg.t0)
        out["homogeneous"] = {"sigma_inf": sigma, "omega_inf": om, "t_inf": t}
    return out


def cmd_equilibrium(cfg, ctx):
    with step("building model"):
        spec, omega, chain = build_model(cfg)
        prep = build_preparation(cfg, chain)
    with step("classifying"):
        cl = classify(spec, omega, prep, tol2=cfg.tol2, tol3=cfg.tol3)
    ctx.json("classification", cl.as_dict())
    report = {"flags": cl.flags, "poles": [p.as_dict() for p in cl.poles]}
    if cl.flags["E0"]:
        with step("stationary covariance"):
            st = stationary_covariance(spec, omega, prep, tol=min(cfg.tol, 1e-10))
        report.update(st.as_dict())
        with step("weak-damping limit"):
            report["weak_damping"] = dict(zip(("omega_inf", "t_inf"),
                                              weak_damping_state(spec, omega, prep)))
        if chain is not None and cfg.prep == "quench":
            with step("chain closed forms"):
                report["closed_forms"] = _closed_forms(cfg, chain)
    ctx.json("stationary", report)


def cmd_quench(cfg, ctx):
    with step("building model"):
        if cfg.model != "chain":
            raise ConfigError("quench needs model = chain")
        if cfg.quench_kind == "homogeneous":
            p = ChainParams(cfg.kappa, cfg.kappa, 1.0)
        elif cfg.quench_kind == "local":
            p = chain_params(cfg)
        else:
            raise ConfigError("quench_kind must be local or homogeneous")
        ok, margin = chain_positivity(p)
        if not ok:
            raise ConfigError(f"chain violates positivity (margin {margin:.6g})")
        cond = no_pole_condition(p)
    report = {"kappa": p.kappa, "kappa_b": p.kappa_b, "omega_r": p.omega_r, "t0": cfg.t0,
              "kind": cfg.quench_kind, "no_pole": cond.ok,
              "t_inf_weak_damping": float(weak_damping_temperature(p.omega_r, cfg.t0))}
    if cond.ok:
        with step("quench closed forms"):
            report["closed_form"] = _closed_forms(cfg, p)
        with step("numerical stationary state"):
            st = stationary_state(chain_spectral_density(p), p.omega,
                                  quench_preparation(p, cfg.t0), tol=min(cfg.tol, 1e-10))
        report["numeric"] = {"sigma_inf": st.sigma, "omega_inf": st.omega_inf,
                             "t_inf": st.t_inf}
    else:
        with step("locating poles"):
            poles = find_poles(chain_spectral_density(p), p.omega)
        report["poles"] = [q.as_dict() for q in poles]
    ctx.json("quench", report)


def _sweep_row(args):
    s, kb, r2, kappa = args
    p = ChainParams(kb, kappa, np.sqrt(r2)) if r2 > 0 else None
    row = [s, kb, r2]
    if p is None or not chain_positivity(p)[0]:
        return row + [-1] + [np.nan] * 4
    poles = find_poles(chain_spectral_density(p), p.omega)
    cells = []
    for k in range(2):
        cells += [poles[k].omega, poles[k].weight] if k < len(poles) else [np.nan, np.nan]
    return row + [len(poles)] + cells


def cmd_scan(cfg, ctx):
    mode = cfg.scan_mode
    if mode not in ("all", "region", "sweep", "curves"):
        raise ConfigError("scan_mode must be all, region, sweep or curves")
    if mode in ("all", "region"):
        kb = np.linspace(cfg.kappa_b_min, cfg.kappa_b_max, cfg.n_kappa_b)
        r2 = np.linspace(cfg.omega_r2_min, cfg.omega_r2_max, cfg.n_omega_r2)
        with step("region map"):
            grid = parameter_scan(cfg.kappa, kb, r2, jobs=ctx.jobs)
        analytic = grid["lower_ineq"] & grid["upper_ineq"]
        numeric = grid["pole_count"] == 0
        agree = np.where(grid["pole_count"] < 0, True, analytic == numeric)
        ctx.table("region_map", ["kappa_b", "omega_r2", "pole_count", "positivity_margin",
                                 "lower_ineq", "upper_ineq", "analytic_no_pole", "agree"],
                  zip(grid["kappa_b"], grid["omega_r2"], grid["pole_count"],
                      grid["positivity_margin"], grid["lower_ineq"], grid["upper_ineq"],
                      analytic, agree))
    if mode in ("all", "sweep"):
        s, kb, r2 = pole_sweep_path(cfg.n_path)
        tasks = [(a, b, c, cfg.kappa) for a, b, c in zip(s, kb, r2)]
        with step("pole sweep"):
            rows = ctx.map(_sweep_row, tasks)
        ctx.table("pole_sweep", ["s", "kappa_b", "omega_r2", "pole_count", "pole1_omega",
                                 "pole1_weight", "pole2_omega", "pole2_weight"], rows)
    if mode in ("all", "curves"):
        omega_r = np.unique(np.append(np.linspace(3.0 / cfg.n_curve, 3.0, cfg.n_curve), 1.0))
        rows = []
        with step("weak-damping temperature curves"):
            for t0 in cfg.t0_values:
                rows += [(w, t0, t) for w, t in
                         zip(omega_r, weak_damping_temperature(omega_r, t0))]
        ctx.table("t_inf_curves", ["omega_r", "t0", "t_inf"], rows)
        kappa = np.linspace(0.0, 1.0, cfg.n_curve + 1)
        rows = []
        with step("homogeneous-chain curves"):
            for t0 in cfg.homogeneous_t0_values:
                _, om, t = homogeneous_stationary(kappa, t0)
                rows += list(zip(kappa, np.full(kappa.size, t0), om, t))
        ctx.table("homogeneous_curves", ["kappa", "t0", "omega_inf", "t_inf"], rows)


def cmd_oracle_compare(cfg, ctx):
    with step("building model"):
        spec, omega, chain = build_model(cfg)
    with step("diagonalizing finite system"):
        if chain is not None:
            fs = build_finite(chain, n=cfg.n_sites)
        elif spec.is_null:
            raise ConfigError("oracle-compare needs a bath")
        else:
            fs = build_finite(spec, omega, n=cfg.n_sites)
        revival = revival_time_estimate(fs)
    t_guard = min(cfg.t_max, 0.5 * revival)
    n = int(np.floor(t_guard / cfg.dt + 1e-9))
    times = np.arange(n + 1) * cfg.dt
    with step("continuum response function"):
        rf = compute_u_fourier(spec, omega, times, tol=min(cfg.tol, 1e-10))
    with step("exact finite-system evolution"):
        ex = evolve_exact(fs, times=times)
    err = np.abs(ex.u - rf.u)
    ctx.table("oracle", ["t", "u_oracle", "u_continuum", "abs_err"],
              zip(times, ex.u, rf.u, err))
    ctx.json("oracle_summary", {
        "size": fs.size, "revival_estimate": revival, "t_compared": float(times[-1]),
        "max_abs_err": float(err.max()), "orthogonality_error": fs.orthogonality_error(),
        "diagonalization_residual": fs.residual()})


COMMANDS = {
    "kernel": cmd_kernel,
    "propagate": cmd_propagate,
    "equilibrium": cmd_equilibrium,
    "scan": cmd_scan,
    "quench": cmd_quench,
    "oracle-compare": cmd_oracle_compare,
}


class Context:
    """Output sink shared by a run: one writer, optional worker pool."""

    def __init__(self, cfg, command, out, fmt, jobs):
        self.out = out
        self.jobs = jobs
        self.header = io.header_lines(cfg, command)
        self.writer = io.TableWriter(fmt, self.header)
        self.written = []

    def table(self, name, columns, rows):
        self.written.append(self.writer.write(os.path.join(self.out, name), columns, rows))

    def json(self, name, payload):
        path = os.path.join(self.out, f"{name}.json")
        self.written.append(io.write_json(path, payload, header=self.header))

    def map(self, fn, tasks):
        if self.jobs > 1:
            from concurrent.futures import ProcessPoolExecutor
            with ProcessPoolExecutor(max_workers=self.jobs) as pool:
                return list(pool.map(fn, tasks))
        return [fn(t) for t in tasks]


def build_parser():
    ap = argparse.ArgumentParser(prog="dqho", description=__doc__.splitlines()[0])
    ap.add_argument("--config", help="flat key=value config file")
    ap.add_argument("--out", default=".", help="output directory")
    ap.add_argument("--format", choices=("csv", "json"), default="csv")
    ap.add_argument("--jobs", type=int, default=1, help="worker processes for scans")
    ap.add_argument("--set", action="append", default=[], metavar="KEY=VALUE",
                    help="override a config key (repeatable)")
    ap.add_argument("command", choices=sorted(COMMANDS))
    return ap


def main(argv=None):
    args = build_parser().parse_args(argv)
    try:
        overrides = {}
        for item in args.set:
            if "=" not in item:
                raise ConfigError(f"--set expects KEY=VALUE, got {item!r}")
            k, v = item.split("=", 1)
            overrides[k.strip()] = v.strip()
        if args.jobs < 1:
            raise ConfigError("--jobs must be at least 1")
        cfg = io.load_config(args.config, overrides)
        os.makedirs(args.out, exist_ok=True)
        ctx = Context(cfg, args.command, args.out, args.format, args.jobs)
        COMMANDS[args.command](cfg, ctx)
    except StepError as exc:
        code = EXIT_CONFIG if isinstance(exc.error, ConfigError) else EXIT_NUMERICAL
        print(f"dqho {args.command}: {exc.operation} failed: {exc.error}", file=sys.stderr)
        return code
    except ConfigError as exc:
        print(f"dqho {args.command}: invalid configuration: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    except DQHOError as exc:
        print(f"dqho {args.command}: numerical failure: {exc}", file=sys.stderr)
        return EXIT_NUMERICAL
    for path in ctx.written:
        print(path)
    return EXIT_OK


if __name__ == "__main__":
    sys.exit(main())
