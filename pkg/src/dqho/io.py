"""Run configuration and deterministic file output for the command-line tool."""

import csv
import json
from dataclasses import dataclass, field

import numpy as np

from .exceptions import ConfigError

__all__ = ["RunConfig", "load_config", "TableWriter", "header_lines", "write_json"]

VERSION = "0.1.0"


def _floats(text):
    return tuple(float(v) for v in text.split(",") if v.strip())


# key -> (parser, default)
SCHEMA = {
    "model": (str, "chain"),
    "kappa": (float, 0.5),
    "kappa_b": (float, 0.6),
    "omega_r": (float, None),
    "omega_r2": (float, None),
    "omega_b": (float, 1.0),
    "omega": (float, 1.0),
    "spectral_file": (str, None),
    "prep": (str, "thermal"),
    "prep_file": (str, None),
    "t0": (float, 0.5),
    "method": (str, "fourier"),
    "t_max": (float, 50.0),
    "dt": (float, 0.05),
    "tol": (float, 1e-8),
    "tol2": (float, 1e-3),
    "tol3": (float, 1e-6),
    "initial_state": (str, "coherent"),
    "squeeze": (float, 1.0),
    "q0": (float, 0.0),
    "p0": (float, 0.0),
    "t_central": (float, 0.0),
    "n_times": (int, 101),
    "wigner_times": (_floats, ()),
    "wigner_n": (int, 257),
    "wigner_width": (float, 6.0),
    "n_sites": (int, 256),
    "scan_mode": (str, "all"),
    "kappa_b_min": (float, 0.02),
    "kappa_b_max": (float, 1.0),
    "n_kappa_b": (int, 50),
    "omega_r2_min": (float, 0.02),
    "omega_r2_max": (float, 2.0),
    "n_omega_r2": (int, 50),
    "n_path": (int, 100),
    "t0_values": (_floats, (0.2, 0.4, 0.6, 0.8)),
    "homogeneous_t0_values": (_floats, (0.0, 0.2, 0.5, 1.0)),
    "n_curve": (int, 200),
    "quench_kind": (str, "local"),
}

MODELS = {"none", "chain", "custom"}
PREPS = {"thermal", "nonthermal", "quench", "file"}
TOLERANCE_KEYS = ("tol", "tol2", "tol3")


@dataclass(frozen=True)
class RunConfig:
    values: dict = field(default_factory=dict)
    explicit: tuple = ()

    def __getattr__(self, key):
        try:
            return self.values[key]
        except KeyError:
            raise AttributeError(key) from None

    @property
    def omega_r_value(self):
        if self.values["omega_r"] is not None:
            return self.values["omega_r"]
        if self.values["omega_r2"] is not None:
            return float(np.sqrt(self.values["omega_r2"]))
        return 1.0

    def validate(self):
        v = self.values
        if v["model"] not in MODELS:
            raise ConfigError(f"model must be one of {sorted(MODELS)}")
        if v["prep"] not in PREPS:
            raise ConfigError(f"prep must be one of {sorted(PREPS)}")
        if v["method"] not in ("fourier", "volterra"):
            raise ConfigError("method must be fourier or volterra")
        for key in TOLERANCE_KEYS:
            if v[key] <= 0:
                raise ConfigError(f"{key} must be positive")
        if v["dt"] <= 0 or v["t_max"] <= v["dt"]:
            raise ConfigError("need dt > 0 and t_max > dt")
        if v["t0"] < 0:
            raise ConfigError("t0 must be non-negative")
        if v["model"] == "custom" and not v["spectral_file"]:
            raise ConfigError("model=custom needs spectral_file")
        if v["prep"] == "file" and not v["prep_file"]:
            raise ConfigError("prep=file needs prep_file")
        if v["omega_r"] is not None and v["omega_r2"] is not None:
            raise ConfigError("give omega_r or omega_r2, not both")
        return self

    def echo(self):
        """Sorted ``key=value`` lines of the explicitly configured keys."""
        return [f"{k}={self.values[k]}" for k in sorted(self.explicit)]


def load_config(path=None, overrides=None):
    """Parse a flat ``key = value`` file; ``#`` starts a comment."""
    values = {k: d for k, (_, d) in SCHEMA.items()}
    explicit = []
    lines = []
    if path is not None:
        try:
            with open(path) as fh:
                lines = fh.read().splitlines()
        except OSError as exc:
            raise ConfigError(f"cannot read config {path}: {exc}") from None
    items = []
    for no, raw in enumerate(lines, 1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        if "=" not in line:
            raise ConfigError(f"{path}:{no}: expected key=value")
        key, val = (s.strip() for s in line.split("=", 1))
        items.append((key.lower(), val, f"{path}:{no}"))
    for key, val in (overrides or {}).items():
        items.append((key.lower(), str(val), "override"))
    for key, val, where in items:
        if key not in SCHEMA:
            raise ConfigError(f"{where}: unknown key {key!r}")
        parser = SCHEMA[key][0]
        try:
            values[key] = parser(val)
        except ValueError:
            raise ConfigError(f"{where}: bad value for {key}: {val!r}") from None
        if key not in explicit:
            explicit.append(key)
    return RunConfig(values, tuple(explicit)).validate()


def header_lines(config, command):
    lines = [f"dqho {VERSION}", f"command: {command}"]
    lines += [f"config: {line}" for line in config.echo()]
    lines += [f"tolerance: {k}={config.values[k]}" for k in TOLERANCE_KEYS]
    return lines


def _fmt(v):
    if isinstance(v, (bool, np.bool_)):
        return str(bool(v)).lower()
    if isinstance(v, (int, np.integer)):
        return str(int(v))
    return repr(float(v))


class TableWriter:
    """Writes a table as CSV (with ``#`` header) or JSON (with a metadata key)."""

    def __init__(self, fmt, header):
        if fmt not in ("csv", "json"):
            raise ConfigError("format must be csv or json")
        self.fmt = fmt
        self.header = list(header)

    def write(self, path_stem, columns, rows):
        path = f"{path_stem}.{self.fmt}"
        if self.fmt == "csv":
            with open(path, "w", newline="") as fh:
                for line in self.header:
                    fh.write(f"# {line}\n")
                w = csv.writer(fh, lineterminator="\n")
                w.writerow(columns)
                for row in rows:
                    w.writerow([_fmt(v) for v in row])
        else:
            payload = {"metadata": self.header, "columns": list(columns),
                       "rows": [[_jsonable(v) for v in row] for row in rows]}
            write_json(path, payload)
        return path


def _jsonable(v):
    if isinstance(v, (bool, np.bool_)):
        return bool(v)
    if isinstance(v, (int, np.integer)):
        return int(v)
    if isinstance(v, (float, np.floating)):
        v = float(v)
        return v if np.isfinite(v) else None
    if isinstance(v, np.ndarray):
        return [_jsonable(x) for x in v.tolist()]
    if isinstance(v, (list, tuple)):
        return [_jsonable(x) for x in v]
    if isinstance(v, dict):
        return {str(k): _jsonable(x) for k, x in v.items()}
    return v


def write_json(path, payload, header=None):
    if header is not None:
        payload = {"metadata": list(header), **payload}
    with open(path, "w") as fh:
        json.dump(_jsonable(payload), fh, indent=2, sort_keys=False)
        fh.write("\n")
    return path
