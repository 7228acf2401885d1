"""Plain ``key = value`` configuration files with sections.

Recognised sections and keys::

    [physics]   epsilon a b k rho_minus u1_minus theta_minus rho_plus delta0
    [closure]   kind A_e gamma_e
    [grid]      L nx margin
    [time]      cfl t_end snapshot_interval
    [transport] law mu0 kappa0 s
    [output]    dir snapshots
    [wave]      delta times nx x_min x_max
    [sweep]     epsilons ell parallelism measure_interval

Unknown sections or keys are rejected so that typos never pass silently.
"""

from __future__ import annotations

import configparser
from dataclasses import replace

from .closures import ElectronClosure
from .errors import ConfigError
from .euler import EulerState
from .fluid import SolverConfig, TransportLaw

SCHEMA = {
    "physics": {"epsilon": float, "a": float, "b": float, "k": float, "rho_minus": float,
                "u1_minus": float, "theta_minus": float, "rho_plus": float, "delta0": float},
    "closure": {"kind": str, "A_e": float, "gamma_e": float},
    "grid": {"L": float, "nx": int, "margin": float},
    "time": {"cfl": float, "t_end": float, "snapshot_interval": float},
    "transport": {"law": str, "mu0": float, "kappa0": float, "s": float},
    "output": {"dir": str, "snapshots": "bool"},
    "wave": {"delta": float, "times": "floats", "nx": int, "x_min": float, "x_max": float},
    "sweep": {"epsilons": "floats", "ell": float, "parallelism": int, "measure_interval": float},
}


def _convert(section, key, raw, kind):
    try:
        if kind == "floats":
            return tuple(float(t) for t in raw.replace(",", " ").split())
        if kind == "bool":
            low = raw.strip().lower()
            if low in ("1", "true", "yes", "on"):
                return True
            if low in ("0", "false", "no", "off"):
                return False
            raise ValueError(raw)
        if kind is int:
            val = float(raw)
            if val != int(val):
                raise ValueError(raw)
            return int(val)
        return kind(raw.strip())
    except ValueError:
        raise ConfigError(f"[{section}] {key} = {raw!r} is not a valid value") from None


def parse_config_text(text):
    """Parse config text into ``{section: {key: value}}`` with type conversion."""
    cp = configparser.ConfigParser(interpolation=None, inline_comment_prefixes=("#", ";"))
    cp.optionxform = str
    try:
        cp.read_string(text)
    except configparser.Error as exc:
        raise ConfigError(f"cannot parse config: {exc}") from None
    out = {}
    for section in cp.sections():
        if section not in SCHEMA:
            raise ConfigError(f"unknown config section [{section}]")
        keys = {k.lower(): k for k in SCHEMA[section]}
        out[section] = {}
        for key, raw in cp.items(section):
            real = keys.get(key.lower())
            if real is None:
                raise ConfigError(f"unknown key {key!r} in [{section}]")
            out[section][real] = _convert(section, real, raw, SCHEMA[section][real])
    return out


def load_config(path):
    try:
        with open(path) as fh:
            text = fh.read()
    except OSError as exc:
        raise ConfigError(f"cannot read config file {path}: {exc}") from None
    return parse_config_text(text)


def solver_config(sections=None, force=False, **overrides):
    """Build a SolverConfig from parsed sections plus keyword overrides (None ignored)."""
    sections = sections or {}
    ph = dict(sections.get("physics", {}))
    cl = dict(sections.get("closure", {}))
    gr = dict(sections.get("grid", {}))
    tm = dict(sections.get("time", {}))
    tr = dict(sections.get("transport", {}))
    flat = {**ph, **gr, **tm}
    flat.update({k: v for k, v in overrides.items() if v is not None and k not in ("kind", "A_e", "gamma_e")})
    for key in ("kind", "A_e", "gamma_e"):
        if overrides.get(key) is not None:
            cl[key] = overrides[key]
    try:
        closure = ElectronClosure(cl.get("kind", "boltzmann"), cl.get("A_e", 1.0), cl.get("gamma_e", 1.0))
        transport = TransportLaw(**tr)
        left = EulerState(flat.pop("rho_minus", 1.0), flat.pop("u1_minus", 0.0), flat.pop("theta_minus", 1.5))
    except ConfigError:
        raise
    except ValueError as exc:
        raise ConfigError(str(exc)) from None
    base = SolverConfig(force=True)
    known = set(SolverConfig.__dataclass_fields__)
    args = {k: v for k, v in flat.items() if k in known}
    cfg = replace(base, closure=closure, transport=transport, left=left, force=force, **args)
    return cfg
