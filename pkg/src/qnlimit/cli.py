"""Command-line interface: ``qnlimit <subcommand> [options]``.

Exit status is 0 on success, 1 for invalid input or configuration and 2 for
numerical failures.
"""

from __future__ import annotations

import argparse
import os
import sys
import warnings

import numpy as np

from . import checks
from .closures import ElectronClosure
from .config import load_config, solver_config
from .errors import ConfigError, NumericalError, ValidationError
from .euler import EulerState, RarefactionWave, wave_strength
from .fluid import run
from .harness import SweepPlan, sweep
from .params import validate_S
from .smoothwave import SmoothWave, delta_from_epsilon


class UsageError(ValidationError):
    pass


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        self.print_usage(sys.stderr)
        raise UsageError(f"{self.prog}: error: {message}")


def _fmt(v):
    return repr(float(v)) if isinstance(v, (float, np.floating)) else str(v)


def _write_csv(fh, header, rows):
    fh.write(",".join(header) + "\n")
    for row in rows:
        fh.write(",".join(_fmt(v) for v in row) + "\n")


def _closure_args(p):
    p.add_argument("--closure", choices=["boltzmann", "gamma"], default=None)
    p.add_argument("--A-e", dest="A_e", type=float, default=None)
    p.add_argument("--gamma-e", dest="gamma_e", type=float, default=None)


def _physics_args(p):
    for name in ("epsilon", "a", "b", "k", "rho-minus", "u1-minus", "theta-minus", "rho-plus", "delta0"):
        p.add_argument(f"--{name}", dest=name.replace("-", "_"), type=float, default=None)
    p.add_argument("--L", dest="L", type=float, default=None)
    p.add_argument("--nx", type=int, default=None)
    p.add_argument("--t-end", dest="t_end", type=float, default=None)
    p.add_argument("--cfl", type=float, default=None)
    p.add_argument("--snapshot-interval", dest="snapshot_interval", type=float, default=None)


def build_parser():
    parser = _Parser(prog="qnlimit", description=__doc__.splitlines()[0])
    sub = parser.add_subparsers(dest="command", parser_class=_Parser)
    sub.required = True

    def add(name, help_):
        p = sub.add_parser(name, help=help_)
        p.add_argument("--config", default=None, help="key = value config file")
        p.add_argument("--out", default=None, help="output directory")
        p.add_argument("--force", action="store_true", help="skip admissibility guards")
        return p

    p = add("riemann", "connect a left state through a 3-rarefaction")
    _physics_args(p)
    _closure_args(p)

    p = add("wave", "sample the smooth approximate wave")
    _physics_args(p)
    _closure_args(p)
    p.add_argument("--delta", type=float, default=None)
    p.add_argument("--times", type=float, nargs="+", default=None)
    p.add_argument("--x-min", dest="x_min", type=float, default=None)
    p.add_argument("--x-max", dest="x_max", type=float, default=None)

    p = add("simulate", "run the fluid solver from smooth-wave data")
    _physics_args(p)
    _closure_args(p)

    p = add("sweep", "measure the convergence rate over a list of epsilons")
    _physics_args(p)
    _closure_args(p)
    p.add_argument("--epsilons", type=float, nargs="+", default=None)
    p.add_argument("--ell", type=float, default=None)
    p.add_argument("--parallelism", type=int, default=None)
    p.add_argument("--measure-interval", dest="measure_interval", type=float, default=None)

    add("check", "run the property battery and print a pass/fail table")

    p = add("diagnostics", "auxiliary tables")
    p.add_argument("topic", choices=["kinetic"])
    p.add_argument("--V", type=float, default=8.0)
    p.add_argument("--n", type=int, default=64)
    return parser


def _solver_cfg(args, sections, force=None, skip=()):
    keys = ("epsilon", "a", "b", "k", "rho_minus", "u1_minus", "theta_minus", "rho_plus", "delta0",
            "L", "nx", "t_end", "cfl", "snapshot_interval")
    over = {k: getattr(args, k, None) for k in keys if k not in skip}
    over.update(kind=getattr(args, "closure", None), A_e=getattr(args, "A_e", None),
                gamma_e=getattr(args, "gamma_e", None))
    return solver_config(sections, force=args.force if force is None else force, **over)


def _out_dir(args, sections, default):
    out = args.out or sections.get("output", {}).get("dir") or default
    os.makedirs(out, exist_ok=True)
    return out


def cmd_riemann(args, sections, stdout):
    ph = sections.get("physics", {})
    cl = sections.get("closure", {})
    closure = ElectronClosure(args.closure or cl.get("kind", "boltzmann"),
                              args.A_e if args.A_e is not None else cl.get("A_e", 1.0),
                              args.gamma_e if args.gamma_e is not None else cl.get("gamma_e", 1.0))

    def pick(name, default):
        val = getattr(args, name)
        return val if val is not None else ph.get(name, default)

    left = EulerState(pick("rho_minus", 1.0), pick("u1_minus", 0.0), pick("theta_minus", 1.5))
    wave = RarefactionWave.from_left(left, pick("rho_plus", 1.1), closure)
    r = wave.right
    _write_csv(stdout, ["rho_plus", "u1_plus", "theta_plus", "phi_plus", "strength", "xi_lo", "xi_hi"],
               [[r.rho, r.u1, r.theta, wave.phi_plus, wave_strength(wave), wave.xi_lo, wave.xi_hi]])
    return 0


def cmd_wave(args, sections, stdout):
    ws = sections.get("wave", {})
    # only the wave itself is needed here, so the run-level guards are skipped
    # --nx is the sample count here, not the solver grid
    cfg = _solver_cfg(args, sections, force=True, skip=("nx",))
    ok, why = validate_S(cfg.a, cfg.b)
    if not ok and not args.force:
        raise ConfigError(f"(a, b) outside the admissible set: {why}")
    delta = args.delta if args.delta is not None else ws.get("delta")
    if delta is None:
        delta = delta_from_epsilon(cfg.epsilon, cfg.a, cfg.k)
    if not 0 < delta < cfg.delta0 and not args.force:
        raise ConfigError(f"delta={delta:g} outside (0, delta0={cfg.delta0:g}); raise delta0 or pass --force")
    sw = SmoothWave(cfg.wave(), delta)
    times = args.times or ws.get("times") or (0.0, 1.0, 5.0)
    x_min = args.x_min if args.x_min is not None else ws.get("x_min", -20.0)
    x_max = args.x_max if args.x_max is not None else ws.get("x_max", 20.0)
    nx = args.nx if args.nx is not None else ws.get("nx", 801)
    x = np.linspace(x_min, x_max, int(nx))
    header = ["t", "x", "rho", "u1", "theta", "phi", "rho_x", "u1_x", "theta_x", "phi_x"]
    out_dir = args.out or sections.get("output", {}).get("dir")
    for i, t in enumerate(times):
        f = sw.fields(t, x, derivs=1)
        cols = [np.full_like(x, t), x] + [f[c] for c in header[2:]]
        rows = zip(*cols)
        if out_dir:
            os.makedirs(out_dir, exist_ok=True)
            with open(os.path.join(out_dir, f"wave_{i:05d}.csv"), "w", newline="") as fh:
                _write_csv(fh, header, rows)
        else:
            _write_csv(stdout, header, rows)
    return 0


def cmd_simulate(args, sections, stdout):
    cfg = _solver_cfg(args, sections)
    out = _out_dir(args, sections, "qnlimit_run")
    traj = run(cfg, out_dir=out, keep=False)
    stdout.write(f"frames {traj.manifest['run.frames']} steps {traj.manifest['run.steps']} -> {out}\n")
    if not traj.completed:
        raise NumericalError(f"run aborted: {traj.manifest['run.error']}")
    return 0


def cmd_sweep(args, sections, stdout):
    cfg = _solver_cfg(args, sections)
    sw = sections.get("sweep", {})
    eps = args.epsilons or sw.get("epsilons")
    if not eps:
        raise ConfigError("sweep needs epsilons (--epsilons or [sweep] epsilons)")
    plan = SweepPlan(
        tuple(eps), cfg,
        ell=args.ell if args.ell is not None else sw.get("ell", 1.0),
        parallelism=args.parallelism if args.parallelism is not None else sw.get("parallelism", 1),
        measure_interval=args.measure_interval if args.measure_interval is not None else sw.get("measure_interval", 0.1),
        write_snapshots=sections.get("output", {}).get("snapshots", False),
    )
    out = _out_dir(args, sections, "qnlimit_sweep")
    rep = sweep(plan, out)
    stdout.write(f"{rep.notice}\n")
    for r in rep.rows:
        stdout.write(f"eps={r['epsilon']:.6g} delta={r['delta']:.6g} error={r['error']:.6g} {r['status']}\n")
    stdout.write(f"target slope {0.6 - 0.4 * plan.a:.6g}; outputs in {out}\n")
    return 0


def cmd_check(args, sections, stdout):
    results = checks.run_battery()
    _write_csv(stdout, ["check", "value", "threshold", "passed"],
               [[r.name, r.value, r.threshold, "pass" if r.passed else "FAIL"] for r in results])
    n = sum(r.passed for r in results)
    stdout.write(f"passed {n}/{len(results)}\n")
    if args.out:
        os.makedirs(args.out, exist_ok=True)
        with open(os.path.join(args.out, "check_report.csv"), "w", newline="") as fh:
            _write_csv(fh, ["check", "value", "threshold", "passed"],
                       [[r.name, r.value, r.threshold, "pass" if r.passed else "FAIL"] for r in results])
    return 0 if n == len(results) else 2


def cmd_diagnostics(args, sections, stdout):
    tables = checks.kinetic_tables(V=args.V, n=args.n)
    if args.out:
        os.makedirs(args.out, exist_ok=True)
        for name, (header, rows) in tables.items():
            with open(os.path.join(args.out, f"{name}.csv"), "w", newline="") as fh:
                _write_csv(fh, header, rows)
    else:
        for name, (header, rows) in tables.items():
            stdout.write(f"# {name}\n")
            _write_csv(stdout, header, rows)
    return 0


COMMANDS = {
    "riemann": cmd_riemann,
    "wave": cmd_wave,
    "simulate": cmd_simulate,
    "sweep": cmd_sweep,
    "check": cmd_check,
    "diagnostics": cmd_diagnostics,
}


def main(argv=None, stdout=None, stderr=None):
    stdout = stdout or sys.stdout
    stderr = stderr or sys.stderr
    argv = sys.argv[1:] if argv is None else list(argv)
    try:
        args = build_parser().parse_args(argv)
    except UsageError as exc:
        stderr.write(f"{exc}\n")
        return 1
    except SystemExit as exc:  # --help
        return int(exc.code or 0)
    try:
        sections = load_config(args.config) if args.config else {}
        with warnings.catch_warnings():
            warnings.simplefilter("default")
            return COMMANDS[args.command](args, sections, stdout)
    except ValidationError as exc:
        stderr.write(f"error: {exc}\n")
        return 1
    except NumericalError as exc:
        stderr.write(f"numerical failure: {exc}\n")
        return 2


if __name__ == "__main__":
    sys.exit(main())
