"""Run configuration: INI-style document with sections [model], [initial],
[numerics], [output].

The [model] keys are the symbols a, b, c, m, q, r, d, mu, h0, chi0, u_m and
are required; everything else has defaults.  Unknown sections or keys are
rejected so typos fail loudly.
"""

from __future__ import annotations

import configparser
from dataclasses import dataclass
from pathlib import Path

from .model import InitialData, ModelParams, SampledProfile, cosine_initial_data
from .operators import Grid
from .solver import Controls

__all__ = ["ConfigError", "RunConfig", "load_config", "parse_overrides"]


class ConfigError(ValueError):
    pass


_MODEL_KEYS = ("a", "b", "c", "m", "q", "r", "d", "mu", "h0", "chi0", "u_m")

_INITIAL_DEFAULTS = {
    "profile": "cosine",
    "U": "0.5",
    "V": "0.5",
    "u0_samples": "",
    "v0_samples": "",
}

_NUMERICS_DEFAULTS = {
    "N": "400",
    "cfl": "0.4",
    "dt_max": "1e-3",
    "t_max": "200",
    "sample_dt": "0.1",
    "snapshot_times": "",
    "react_cap": "0.2",
}

_OUTPUT_DEFAULTS = {
    "dir": "out",
}

_SECTIONS = {
    "model": dict.fromkeys(_MODEL_KEYS),
    "initial": _INITIAL_DEFAULTS,
    "numerics": _NUMERICS_DEFAULTS,
    "output": _OUTPUT_DEFAULTS,
}


@dataclass(frozen=True)
class RunConfig:
    params: ModelParams
    initial: InitialData
    grid: Grid
    controls: Controls
    outdir: str
    resolved: tuple  # ((section.key, value), ...) echoed into the manifest


def parse_overrides(pairs):
    """--set section.key=value strings to a {(section, key): value} dict."""
    out = {}
    for item in pairs or ():
        if "=" not in item:
            raise ConfigError(f"override {item!r} is not of the form section.key=value")
        key, value = item.split("=", 1)
        if "." not in key:
            raise ConfigError(f"override key {key!r} must be section.key")
        section, name = key.split(".", 1)
        out[(section.strip(), name.strip())] = value.strip()
    return out


def _float(section: str, key: str, raw: str) -> float:
    try:
        return float(raw)
    except ValueError:
        raise ConfigError(f"[{section}] {key} = {raw!r} is not a number") from None


def _float_list(section: str, key: str, raw: str):
    raw = raw.strip()
    if not raw:
        return ()
    return tuple(_float(section, key, part) for part in raw.replace(";", ",").split(",") if part.strip())


def load_config(path, overrides=None) -> RunConfig:
    """Parse and resolve a configuration file, applying --set overrides."""
    parser = configparser.ConfigParser(interpolation=None)
    parser.optionxform = str  # keys are case-sensitive (U, V vs u_m)
    try:
        text = Path(path).read_text()
        parser.read_string(text)
    except OSError as exc:
        raise ConfigError(f"cannot read config {path}: {exc}") from None
    except configparser.Error as exc:
        raise ConfigError(f"malformed config {path}: {exc}") from None

    raw = {section: dict(parser.items(section)) for section in parser.sections()}
    for (section, key), value in (overrides or {}).items():
        raw.setdefault(section, {})[key] = value

    for section, entries in raw.items():
        if section not in _SECTIONS:
            raise ConfigError(f"unknown section [{section}]")
        known = _SECTIONS[section]
        for key in entries:
            if key not in known:
                raise ConfigError(f"unknown key {key!r} in section [{section}]")

    model_raw = raw.get("model", {})
    missing = [key for key in _MODEL_KEYS if key not in model_raw]
    if missing:
        raise ConfigError("missing [model] parameter(s): " + ", ".join(missing))
    try:
        params = ModelParams(**{key: _float("model", key, model_raw[key])
                                for key in _MODEL_KEYS})
    except ValueError as exc:
        raise ConfigError(str(exc)) from None

    init_raw = {**_INITIAL_DEFAULTS, **raw.get("initial", {})}
    profile = init_raw["profile"].strip().lower()
    if profile == "cosine":
        initial = cosine_initial_data(_float("initial", "U", init_raw["U"]),
                                      _float("initial", "V", init_raw["V"]),
                                      params.h0)
    elif profile == "samples":
        u_samples = _float_list("initial", "u0_samples", init_raw["u0_samples"])
        v_samples = _float_list("initial", "v0_samples", init_raw["v0_samples"])
        if len(u_samples) < 3 or len(v_samples) < 3:
            raise ConfigError("profile = samples needs u0_samples and v0_samples "
                              "(>= 3 comma-separated values on uniform nodes over [0, h0])")
        initial = InitialData(u0=SampledProfile(u_samples, params.h0),
                              v0=SampledProfile(v_samples, params.h0))
    else:
        raise ConfigError(f"unknown profile family {init_raw['profile']!r}")

    num_raw = {**_NUMERICS_DEFAULTS, **raw.get("numerics", {})}
    try:
        n = int(num_raw["N"])
    except ValueError:
        raise ConfigError(f"[numerics] N = {num_raw['N']!r} is not an integer") from None
    try:
        grid = Grid(n)
        controls = Controls(
            t_max=_float("numerics", "t_max", num_raw["t_max"]),
            sample_dt=_float("numerics", "sample_dt", num_raw["sample_dt"]),
            snapshot_times=_float_list("numerics", "snapshot_times", num_raw["snapshot_times"]),
            cfl=_float("numerics", "cfl", num_raw["cfl"]),
            dt_max=_float("numerics", "dt_max", num_raw["dt_max"]),
            react_cap=_float("numerics", "react_cap", num_raw["react_cap"]),
        )
    except ValueError as exc:
        raise ConfigError(str(exc)) from None

    out_raw = {**_OUTPUT_DEFAULTS, **raw.get("output", {})}

    resolved = []
    for key in _MODEL_KEYS:
        resolved.append((f"model.{key}", getattr(params, key)))
    resolved.append(("initial.profile", profile))
    if profile == "cosine":
        resolved.append(("initial.U", _float("initial", "U", init_raw["U"])))
        resolved.append(("initial.V", _float("initial", "V", init_raw["V"])))
    else:
        resolved.append(("initial.u0_samples", ",".join(map(str, u_samples))))
        resolved.append(("initial.v0_samples", ",".join(map(str, v_samples))))
    resolved.append(("numerics.N", n))
    for key in ("cfl", "dt_max", "t_max", "sample_dt", "react_cap"):
        resolved.append((f"numerics.{key}", getattr(controls, key)))
    resolved.append(("numerics.snapshot_times",
                     ",".join(format(t, "g") for t in controls.snapshot_times)))
    resolved.append(("output.dir", out_raw["dir"]))

    return RunConfig(params=params, initial=initial, grid=grid, controls=controls,
                     outdir=out_raw["dir"], resolved=tuple(resolved))
