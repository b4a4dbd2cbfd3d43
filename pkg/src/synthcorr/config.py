"""Run configuration: an INI-style text file with fixed sections and keys.

Unknown sections or keys are rejected.  Example::

    [experiment]
    J_CH = 129.6
    delta_t = 0.5e-3

    [protocol]
    order = fourth
    n_repeat = 3

    [errors]
    delta_theta = 0.04
    inject_pulse_error = true
"""

from __future__ import annotations

import configparser
from dataclasses import dataclass, field
from pathlib import Path

from .engine import COUPLING_ONLY, METHODS, MODES, tau_grid
from .errors import ErrorParams
from .model import ExperimentParams


class ConfigError(ValueError):
    pass


def _bool(s: str) -> bool:
    v = s.strip().lower()
    if v in ("1", "true", "yes", "on"):
        return True
    if v in ("0", "false", "no", "off"):
        return False
    raise ValueError(f"not a boolean: {s!r}")


def _sigma(s: str):
    return "preset" if s.strip().lower() == "preset" else float(s)


def _floats(s: str) -> tuple:
    return tuple(float(x) for x in s.replace(",", " ").split())


SCHEMA = {
    "experiment": {
        "J_CH": (float, 129.6), "nu": (float, 24000.0), "p_C": (float, 1.0), "p_H": (float, 1.0),
        "delta_t": (float, 0.5e-3), "bath_spins": (int, 3),
    },
    "errors": {
        "delta_theta": (float, 0.04), "k_decay": (float, 2.76e3), "readout_sigma": (_sigma, 0.0),
        "gaussian_s": (float, 5e3), "seed": (int, 0),
        "inject_pulse_error": (_bool, False), "apply_decay": (_bool, False),
    },
    "protocol": {
        "order": (str, "second"), "n_repeat": (int, 1), "channel_file": (str, ""),
        "taus": (_floats, ()), "sweep_slot": (int, 0),
        "tau32": (float, 10e-6), "tau43": (float, 10e-6),
        "coupling_mode": (str, COUPLING_ONLY), "method": (str, "phase-cycle"),
    },
    "sweep": {
        "tau_start": (float, 0.0), "tau_step": (float, 2e-6), "tau_count": (int, 40),
        "tau43_start": (float, 0.0), "tau43_step": (float, 2e-6), "tau43_count": (int, 32),
        "workers": (int, 1),
    },
    "budget": {
        "theta": (int, 2), "dt_min": (float, 0.05e-3), "dt_max": (float, 2e-3), "dt_count": (int, 60),
    },
    "output": {"path": (str, "out.csv")},
}


@dataclass(frozen=True)
class RunConfig:
    experiment: ExperimentParams
    errors: ErrorParams
    raw: dict = field(default_factory=dict)
    readout_preset: bool = False

    def get(self, section: str, key: str):
        return self.raw[section][key]

    @property
    def tau_grid(self):
        s = self.raw["sweep"]
        return tau_grid(s["tau_start"], s["tau_step"], s["tau_count"])

    @property
    def tau43_grid(self):
        s = self.raw["sweep"]
        return tau_grid(s["tau43_start"], s["tau43_step"], s["tau43_count"])

    def as_dict(self) -> dict:
        return {sec: {k: (list(v) if isinstance(v, tuple) else v) for k, v in vals.items()}
                for sec, vals in self.raw.items()}


def parse_config_text(text: str) -> RunConfig:
    cp = configparser.ConfigParser(interpolation=None)
    cp.optionxform = str  # keep key case
    try:
        cp.read_string(text)
    except configparser.Error as exc:
        raise ConfigError(f"cannot parse config: {exc}") from None
    raw = {sec: {k: d for k, (_, d) in keys.items()} for sec, keys in SCHEMA.items()}
    for sec in cp.sections():
        if sec not in SCHEMA:
            raise ConfigError(f"unknown section [{sec}]")
        for key, val in cp.items(sec):
            if key not in SCHEMA[sec]:
                raise ConfigError(f"unknown key {key!r} in [{sec}]")
            conv = SCHEMA[sec][key][0]
            try:
                raw[sec][key] = conv(val)
            except ValueError as exc:
                raise ConfigError(f"[{sec}] {key}: {exc}") from None
    return _validate(raw)


def _validate(raw: dict) -> RunConfig:
    p = raw["protocol"]
    if p["order"] not in ("second", "fourth", "custom"):
        raise ConfigError("[protocol] order must be second, fourth or custom")
    if p["order"] == "custom" and not p["channel_file"]:
        raise ConfigError("[protocol] custom order needs channel_file")
    if p["coupling_mode"] not in MODES:
        raise ConfigError(f"[protocol] coupling_mode must be one of {MODES}")
    if p["method"] not in METHODS:
        raise ConfigError(f"[protocol] method must be one of {METHODS}")
    s = raw["sweep"]
    if s["tau_count"] < 1 or s["tau43_count"] < 1:
        raise ConfigError("[sweep] counts must be >= 1")
    if s["tau_step"] <= 0 or s["tau43_step"] <= 0:
        raise ConfigError("[sweep] steps must be positive")
    b = raw["budget"]
    if b["theta"] not in (2, 4):
        raise ConfigError("[budget] theta must be 2 or 4")
    if b["dt_count"] < 1 or not 0 < b["dt_min"] <= b["dt_max"]:
        raise ConfigError("[budget] needs 0 < dt_min <= dt_max and dt_count >= 1")
    e = dict(raw["errors"])
    preset = e["readout_sigma"] == "preset"
    try:
        exp = ExperimentParams(n_repeat=p["n_repeat"], **raw["experiment"])
        err = ErrorParams(
            delta_theta=e["delta_theta"], k_decay=e["k_decay"],
            readout_sigma=0.0 if preset else e["readout_sigma"],
            gaussian_s=e["gaussian_s"], seed=e["seed"],
        )
    except ValueError as exc:
        raise ConfigError(str(exc)) from None
    return RunConfig(exp, err, raw, preset)


def load_config(path) -> RunConfig:
    """Read and validate a config file; OSError propagates for I/O failures."""
    return parse_config_text(Path(path).read_text(encoding="utf-8"))


def dump_config(data: dict) -> str:
    """INI text for a config dictionary, e.g. one recovered from CSV metadata."""

    def text(v):
        if isinstance(v, bool):
            return "true" if v else "false"
        if isinstance(v, (list, tuple)):
            return " ".join(repr(float(x)) for x in v)
        return repr(v) if isinstance(v, float) else str(v)

    out = []
    for sec, vals in data.items():
        out.append(f"[{sec}]")
        out.extend(f"{k} = {text(v)}" for k, v in vals.items())
        out.append("")
    return "\n".join(out)


def default_config() -> RunConfig:
    return parse_config_text("")
