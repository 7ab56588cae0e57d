"""Flat ``key = value`` run configuration.

Lines are ``key = value``; ``#`` starts a comment. Every key must be known,
and a key may appear at most once per file. ``--set key=value`` overrides
from the command line are applied on top of the file.
"""
from __future__ import annotations

import math
from dataclasses import dataclass
from pathlib import Path
from typing import Any, Callable, Mapping

from .errors import ConfigError, ParameterError
from .params import PARAM_FIELDS, NetworkParams, Variant


@dataclass(frozen=True)
class Key:
    default: str
    unit: str
    help: str
    parse: Callable[[str], Any]


def _float(raw: str) -> float:
    value = float(raw)
    if not math.isfinite(value):
        raise ValueError("must be finite")
    return value


def _int(raw: str) -> int:
    return int(raw)


def _bool(raw: str) -> bool:
    low = raw.strip().lower()
    if low in ("true", "yes", "1", "on"):
        return True
    if low in ("false", "no", "0", "off"):
        return False
    raise ValueError("expected true or false")


def _names(raw: str) -> tuple[str, ...]:
    return tuple(part.strip() for part in raw.split(",") if part.strip())


def _pair(raw: str) -> tuple[float, float]:
    parts = [p.strip() for p in raw.split(",")]
    if len(parts) != 2:
        raise ValueError("expected 'lower,upper'")
    return _float(parts[0]), _float(parts[1])


def _choice(*options: str) -> Callable[[str], str]:
    def parse(raw: str) -> str:
        value = raw.strip()
        if value not in options:
            raise ValueError(f"expected one of {', '.join(options)}")
        return value
    return parse


def _seed(raw: str) -> int:
    value = int(raw)
    if not 0 <= value < 2 ** 64:
        raise ValueError("seed must be an unsigned 64-bit integer")
    return value


_RATE = "gamma_ref"
_PARAM_UNITS = {
    "omega_c1": _RATE, "omega_c2": _RATE, "omega_a1": _RATE, "omega_a2": _RATE,
    "g1": _RATE, "g2": _RATE, "alpha": "rad",
    "gamma_R1": _RATE, "gamma_R2": _RATE, "gamma_L1": _RATE, "gamma_L2": _RATE,
    "Gamma1": _RATE, "Gamma2": _RATE, "kD": "rad", "variant": "-",
}
_PARAM_HELP = {
    "omega_c1": "cavity 1 frequency", "omega_c2": "cavity 2 frequency",
    "omega_a1": "atom 1 transition frequency", "omega_a2": "atom 2 transition frequency",
    "g1": "atom-cavity coupling, node 1", "g2": "atom-cavity coupling, node 2",
    "alpha": "phase of the node-2 coupling",
    "gamma_R1": "cavity 1 decay into right-moving modes",
    "gamma_R2": "cavity 2 decay into right-moving modes",
    "gamma_L1": "cavity 1 decay into left-moving modes",
    "gamma_L2": "cavity 2 decay into left-moving modes",
    "Gamma1": "atom 1 decay into non-guided modes",
    "Gamma2": "atom 2 decay into non-guided modes",
    "kD": "propagation phase between the nodes (2*pi*D/lambda)",
    "variant": "with_cavity | no_cavity",
}

_defaults = NetworkParams()
KEYS: dict[str, Key] = {
    name: Key(
        default=str(getattr(_defaults, name).value if name == "variant" else getattr(_defaults, name)),
        unit=_PARAM_UNITS[name],
        help=_PARAM_HELP[name],
        parse=_choice("with_cavity", "no_cavity") if name == "variant" else _float,
    )
    for name in PARAM_FIELDS
}
KEYS.update({
    "t_max": Key("40", "1/gamma_ref", "time horizon for trajectories and peak searches", _float),
    "n_times": Key("401", "-", "grid points of the simulate trajectory", _int),
    "solver": Key("master", "-", "simulate solver: master | schrodinger | analytic",
                  _choice("master", "schrodinger", "analytic")),
    "observable": Key("concurrence", "-", "objective: concurrence | F1 | F2 | F3",
                      _choice("concurrence", "F1", "F2", "F3")),
    "free": Key("g1,g2", "-", "comma list of optimized parameters from g1, g2, gamma_R2", _names),
    "g1_bounds": Key("0,4", _RATE, "optimizer bounds for g1", _pair),
    "g2_bounds": Key("0,4", _RATE, "optimizer bounds for g2", _pair),
    "gamma_R2_bounds": Key("0.1,10", _RATE, "optimizer bounds for gamma_R2", _pair),
    "grid_points": Key("21", "-", "optimizer grid points per axis", _int),
    "n_starts": Key("3", "-", "Nelder-Mead starts from the best grid points", _int),
    "max_evals": Key("2000", "-", "evaluation cap per Nelder-Mead start", _int),
    "d_min": Key("0", "lambda", "distance sweep start (D/lambda)", _float),
    "d_max": Key("2", "lambda", "distance sweep end (D/lambda)", _float),
    "d_points": Key("21", "-", "distance sweep points", _int),
    "chi_min": Key("0", "-", "chirality sweep start", _float),
    "chi_max": Key("1", "-", "chirality sweep end", _float),
    "chi_points": Key("11", "-", "chirality sweep points", _int),
    "chi_hold": Key("gamma_R", "-", "held fixed while chirality varies: gamma_R | total",
                    _choice("gamma_R", "total")),
    "chi_d": Key("0.5", "lambda", "node spacing for the chirality sweep (D/lambda)", _float),
    "detuning_target": Key("omega_a1", "-", "detuned frequency: omega_a1 | omega_a2 | omega_c1 | omega_c2",
                           _choice("omega_a1", "omega_a2", "omega_c1", "omega_c2")),
    "delta_min": Key("0", _RATE, "detuning width sweep start", _float),
    "delta_max": Key("1", _RATE, "detuning width sweep end", _float),
    "delta_points": Key("5", "-", "detuning width sweep points", _int),
    "samples": Key("200", "-", "Monte-Carlo samples per detuning width", _int),
    "seed": Key("0", "-", "RNG seed (unsigned 64-bit)", _seed),
    "Gamma_min": Key("0", _RATE, "atomic decay sweep start", _float),
    "Gamma_max": Key("0.1", _RATE, "atomic decay sweep end", _float),
    "Gamma_points": Key("6", "-", "atomic decay sweep points", _int),
    "reoptimize": Key("both", "-", "decay sweep curves: true (C_opt) | false (C_0) | both",
                      _choice("true", "false", "both")),
    "bell_n": Key("1", "-", "standing-wave index n for the Bell-phase check (kD = n*pi)", _int),
})

STUDY_KEYS = tuple(k for k in KEYS if k not in PARAM_FIELDS)


def parse_text(text: str, source: str = "<config>") -> dict[str, str]:
    """Raw ``key -> value`` strings from config text, with line diagnostics."""
    out: dict[str, str] = {}
    for lineno, line in enumerate(text.splitlines(), start=1):
        body = line.split("#", 1)[0].strip()
        if not body:
            continue
        if "=" not in body:
            raise ConfigError(f"{source}:{lineno}: expected 'key = value', got {line.strip()!r}")
        key, value = (part.strip() for part in body.split("=", 1))
        if key not in KEYS:
            raise ConfigError(f"{source}:{lineno}: unknown key {key!r}")
        if key in out:
            raise ConfigError(f"{source}:{lineno}: duplicate key {key!r}")
        if not value:
            raise ConfigError(f"{source}:{lineno}: empty value for {key!r}")
        out[key] = value
    return out


def parse_overrides(items: list[str] | None) -> dict[str, str]:
    out: dict[str, str] = {}
    for item in items or []:
        if "=" not in item:
            raise ConfigError(f"--set expects key=value, got {item!r}")
        key, value = (part.strip() for part in item.split("=", 1))
        if key not in KEYS:
            raise ConfigError(f"--set: unknown key {key!r}")
        out[key] = value
    return out


@dataclass(frozen=True)
class RunConfig:
    params: NetworkParams
    values: Mapping[str, Any]

    def __getitem__(self, key: str) -> Any:
        return self.values[key]

    @classmethod
    def from_raw(cls, raw: Mapping[str, str], source: str = "<config>") -> "RunConfig":
        typed: dict[str, Any] = {}
        for key, spec in KEYS.items():
            text = raw.get(key, spec.default)
            try:
                typed[key] = spec.parse(text)
            except ValueError as exc:
                raise ConfigError(f"{source}: bad value {text!r} for {key!r}: {exc}") from None
        try:
            params = NetworkParams.from_mapping({k: typed[k] for k in PARAM_FIELDS})
        except ParameterError as exc:
            raise ConfigError(f"{source}: {exc}") from None
        return cls(params, {k: typed[k] for k in STUDY_KEYS})


def load(path: str | Path | None = None, overrides: list[str] | None = None) -> RunConfig:
    raw: dict[str, str] = {}
    source = "<defaults>"
    if path is not None:
        source = str(path)
        try:
            text = Path(path).read_text(encoding="utf-8")
        except OSError as exc:
            raise ConfigError(f"cannot read config {path}: {exc}") from None
        raw = parse_text(text, source)
    raw.update(parse_overrides(overrides))
    return RunConfig.from_raw(raw, source)


def dump_params(p: NetworkParams) -> str:
    lines = []
    for key, value in p.to_mapping().items():
        lines.append(f"{key} = {value.value if isinstance(value, Variant) else value}")
    return "\n".join(lines) + "\n"


def help_table() -> str:
    width = max(len(k) for k in KEYS)
    lines = ["config keys (key = default [unit]: meaning):"]
    for key, spec in KEYS.items():
        lines.append(f"  {key:<{width}} = {spec.default:<10} [{spec.unit}]  {spec.help}")
    return "\n".join(lines)
