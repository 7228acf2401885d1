"""Convergence-rate sweeps over the Knudsen number.

Each epsilon gets its own fluid run from well-prepared smooth-wave data with
delta = eps^(3/5 - 2a/5) / k. The error of a run is the largest, over
measurement times in [ell, t_end], of the sup-norm gap to the exact wave
(largest fluid component plus the potential). Runs are independent and may
execute in worker processes; results are merged in the order of the
epsilon list, so the written tables do not depend on scheduling.
"""

from __future__ import annotations

import math
import os
import time
import warnings
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field, replace

import numpy as np

from .diagnostics import energy_terms, rate_fit, sup_distance_to_wave
from .errors import ConfigError, InputError, QnlimitError
from .fluid import SolverConfig, run, write_manifest
from .params import validate_S
from .smoothwave import SmoothWave

__all__ = ["SweepPlan", "SweepReport", "validate_S", "run_one", "sweep"]


@dataclass(frozen=True)
class SweepPlan:
    epsilon_list: tuple
    base: SolverConfig
    ell: float = 1.0
    parallelism: int = 1
    measure_interval: float = 0.1
    write_snapshots: bool = False

    def __post_init__(self):
        eps = tuple(float(e) for e in self.epsilon_list)
        object.__setattr__(self, "epsilon_list", eps)
        if not eps:
            raise ConfigError("sweep needs at least one epsilon")
        if any(e2 >= e1 for e1, e2 in zip(eps, eps[1:])):
            raise ConfigError("epsilon_list must be strictly decreasing")
        if not self.ell > 0:
            raise ConfigError("ell must be positive")
        if self.ell >= self.base.t_end:
            raise ConfigError(f"ell={self.ell} must be below t_end={self.base.t_end}")
        if int(self.parallelism) != self.parallelism or self.parallelism < 1:
            raise ConfigError("parallelism must be a positive integer")
        if not self.measure_interval > 0:
            raise ConfigError("measure_interval must be positive")
        if not self.base.force:
            ok, why = validate_S(self.a, self.b)
            if not ok:
                raise ConfigError(f"(a, b) = ({self.a:g}, {self.b:g}) is not admissible: {why}")
        big = [e for e in eps if e >= self.k]
        if big:
            warnings.warn(f"epsilon values {big} are not below k={self.k:g}", stacklevel=2)
        for e in eps:
            # every run config must validate before any numerics start
            self.config_for(e)

    @property
    def a(self):
        return self.base.a

    @property
    def b(self):
        return self.base.b

    @property
    def k(self):
        return self.base.k

    def config_for(self, eps):
        return replace(self.base, epsilon=float(eps))

    def describe(self):
        out = {f"base.{k}": v for k, v in self.base.describe().items() if k != "physics.epsilon"}
        out.update({
            "sweep.epsilons": " ".join(repr(e) for e in self.epsilon_list),
            "sweep.ell": self.ell,
            "sweep.parallelism": self.parallelism,
            "sweep.measure_interval": self.measure_interval,
        })
        return out


def run_one(cfg: SolverConfig, ell, measure_interval, out_dir=None, write_snapshots=False):
    """Single sweep point: run the solver and measure the gap to the exact wave."""
    wave = cfg.wave()
    sw = SmoothWave(wave, cfg.delta)
    worst = {"total": -1.0}
    energy = {"E_sup": 0.0, "D_int": 0.0}
    last = {}

    def observe(f):
        rep = energy_terms(f, sw, cfg.epsilon, cfg.a, cfg.b)
        energy["E_sup"] = max(energy["E_sup"], rep.fluid_E)
        if "tau" in last:
            energy["D_int"] += 0.5 * (rep.fluid_D + last["D"]) * (rep.tau - last["tau"])
        last.update(tau=rep.tau, D=rep.fluid_D)
        if f.t < ell - 1e-12:
            return
        d = sup_distance_to_wave(f, wave)
        if d["total"] > worst["total"]:
            worst.update(d, t=f.t)

    traj = run(
        cfg,
        out_dir=out_dir if write_snapshots else None,
        observe=observe,
        observe_interval=measure_interval,
        keep=False,
    )
    if out_dir is not None:
        os.makedirs(out_dir, exist_ok=True)
        write_manifest(os.path.join(out_dir, "manifest.txt"), traj.manifest)
    ok = traj.completed and worst["total"] >= 0
    return {
        "epsilon": cfg.epsilon,
        "delta": cfg.delta,
        "status": "ok" if ok else "failed",
        "error": worst.get("total", math.nan) if ok else math.nan,
        "error_fluid": worst.get("fluid", math.nan),
        "error_phi": worst.get("phi", math.nan),
        "t_at_max": worst.get("t", math.nan),
        "E_sup": energy["E_sup"],
        "D_int": energy["D_int"],
        "steps": traj.manifest["run.steps"],
        "message": traj.manifest["run.error"],
    }


def _task(args):
    cfg, ell, interval, out_dir, snaps = args
    try:
        return run_one(cfg, ell, interval, out_dir, snaps)
    except QnlimitError as exc:
        return {"epsilon": cfg.epsilon, "delta": cfg.delta, "status": "failed", "error": math.nan,
                "error_fluid": math.nan, "error_phi": math.nan, "t_at_max": math.nan,
                "E_sup": math.nan, "D_int": math.nan, "steps": 0,
                "message": f"{type(exc).__name__}: {exc}"}


@dataclass
class SweepReport:
    rows: list
    fit: object | None
    notice: str
    manifest: dict = field(default_factory=dict)

    @property
    def survivors(self):
        return [r for r in self.rows if r["status"] == "ok"]


TABLE_COLUMNS = ("epsilon", "delta", "error", "error_fluid", "error_phi", "t_at_max",
                 "E_sup", "D_int", "eps_rate_bound", "fitted", "status")


def _fmt(v):
    if isinstance(v, (float, np.floating)):
        return repr(float(v))
    return str(v)


def sweep(plan: SweepPlan, out_dir=None):
    """Run every epsilon of ``plan``, fit the rate and (optionally) write the tables."""
    t_wall = time.perf_counter()
    tasks = []
    for i, eps in enumerate(plan.epsilon_list):
        sub = None if out_dir is None else os.path.join(out_dir, "runs", f"eps_{i:02d}")
        tasks.append((plan.config_for(eps), plan.ell, plan.measure_interval, sub, plan.write_snapshots))
    if plan.parallelism > 1 and len(tasks) > 1:
        with ProcessPoolExecutor(max_workers=min(plan.parallelism, len(tasks))) as pool:
            rows = list(pool.map(_task, tasks))
    else:
        rows = [_task(t) for t in tasks]

    good = [r for r in rows if r["status"] == "ok" and r["error"] > 0]
    for r in rows:
        if r["status"] != "ok":
            warnings.warn(f"run at epsilon={r['epsilon']} failed and is excluded: {r['message']}", stacklevel=2)
    fit, notice = None, ""
    if len(good) >= 4:
        fit = rate_fit([(r["epsilon"], r["error"]) for r in good], a=plan.a)
        notice = fit.summary()
    elif len(plan.epsilon_list) == 1:
        notice = "single epsilon: rate fit skipped"
    else:
        notice = f"only {len(good)} successful runs: rate fit needs at least 4"
    power = 1.2 - 0.8 * plan.a
    for r in rows:
        r["eps_rate_bound"] = r["epsilon"] ** power
        if fit is not None and r["status"] == "ok":
            r["fitted"] = math.exp(fit.intercept) * r["epsilon"] ** fit.slope * abs(math.log(r["epsilon"]))
        else:
            r["fitted"] = math.nan

    manifest = dict(plan.describe())
    manifest.update({
        "fit.notice": notice,
        "fit.slope": fit.slope if fit else math.nan,
        "fit.residual": fit.residual if fit else math.nan,
        "fit.target": 0.6 - 0.4 * plan.a,
        "sweep.failed": sum(r["status"] != "ok" for r in rows),
        "sweep.wall_time_s": time.perf_counter() - t_wall,
    })
    report = SweepReport(rows, fit, notice, manifest)
    if out_dir is not None:
        write_sweep_outputs(report, out_dir)
    return report


def write_sweep_outputs(report: SweepReport, out_dir):
    os.makedirs(out_dir, exist_ok=True)
    with open(os.path.join(out_dir, "eps_table.csv"), "w", newline="") as fh:
        fh.write(",".join(TABLE_COLUMNS) + "\n")
        for r in report.rows:
            fh.write(",".join(_fmt(r[c]) for c in TABLE_COLUMNS) + "\n")
    fit = report.fit
    with open(os.path.join(out_dir, "fit.csv"), "w", newline="") as fh:
        fh.write("quantity,value\n")
        if fit is None:
            fh.write(f"notice,{report.notice}\n")
        else:
            for key in ("slope", "intercept", "residual", "n", "target"):
                fh.write(f"{key},{_fmt(getattr(fit, key))}\n")
    write_manifest(os.path.join(out_dir, "manifest.txt"), report.manifest)


def load_table(path):
    """Read an eps_table.csv back as a list of dicts (numbers parsed)."""
    rows = []
    with open(path) as fh:
        head = fh.readline().strip().split(",")
        for line in fh:
            vals = line.strip().split(",")
            row = {}
            for k, v in zip(head, vals):
                try:
                    row[k] = float(v)
                except ValueError:
                    row[k] = v
            rows.append(row)
    if not rows and not head:
        raise InputError(f"empty table {path}")
    return rows
