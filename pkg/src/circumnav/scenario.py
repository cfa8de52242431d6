"""Scenario files: TOML with the sections below.

::

    id = "section5"
    description = "..."

    [target]
    position = [0.0, 0.0]

    [formation]
    d_star = 1.2
    beta_star = ["5pi/18", "pi/9", "5pi/18", "5pi/18", "19pi/18"]
    d_min = 0.5                 # optional distance-corridor radius

    [gains]
    k_est = 5.0
    k_c = 1.5
    k_omega = 1.0
    alpha = "3.5pi"

    [initial]
    positions = [[1.0, 0.0], ...]
    estimates = [[0.3, 0.2], ...]

    [integration]               # every key optional
    dt = 0.001
    t_end = 60.0
    integrator = "rk4"          # or "euler"
    log_stride = 1
    seed = 0

    [options]                   # every key optional
    controller = "proposed"     # or "baseline"
    allow_unsafe_alpha = false
    eps_dist = 1e-9

Angles are radians, either as numbers or as strings of the form ``"pi"``,
``"-pi/2"``, ``"5pi/18"``, ``"3.5pi"`` or ``"2*pi/3"``.
"""

from __future__ import annotations

import math
import re
import sys
from importlib import resources
from pathlib import Path

import tomli_w

if sys.version_info >= (3, 11):
    import tomllib
else:
    import tomli as tomllib

from circumnav.control import ControlGains
from circumnav.sim import ConfigError, ScenarioConfig

_PI_FORM = re.compile(
    r"^\s*(?P<num>[+-]?(?:\d+(?:\.\d*)?|\.\d+)(?:[eE][+-]?\d+)?|[+-])?\s*\*?\s*pi"
    r"\s*(?:/\s*(?P<den>\d+(?:\.\d*)?))?\s*$"
)

_SECTIONS = {"target", "formation", "gains", "initial", "integration", "options"}


def parse_angle(value) -> float:
    """Radians from a number or a rational multiple of pi written as text."""
    if isinstance(value, bool):
        raise ConfigError(f"not an angle: {value!r}")
    if isinstance(value, (int, float)):
        return float(value)
    if not isinstance(value, str):
        raise ConfigError(f"not an angle: {value!r}")
    m = _PI_FORM.match(value)
    if m is None:
        try:
            return float(value)
        except ValueError:
            raise ConfigError(f"cannot parse angle {value!r}") from None
    num = m.group("num")
    if num in (None, "+"):
        coef = 1.0
    elif num == "-":
        coef = -1.0
    else:
        coef = float(num)
    if m.group("den") is None:
        return coef * math.pi
    den = float(m.group("den"))
    if den == 0:
        raise ConfigError(f"zero denominator in angle {value!r}")
    return coef * math.pi / den


def format_angle(x: float, max_den: int = 360):
    """Shortest ``"<k>pi/<d>"`` form that parses back to exactly ``x``,
    else ``x`` itself."""
    if x == 0.0:
        return 0.0
    for den in range(1, max_den + 1):
        k = round(x * den / math.pi)
        if k == 0:
            continue
        coef = "" if k == 1 else "-" if k == -1 else str(k)
        text = f"{coef}pi" if den == 1 else f"{coef}pi/{den}"
        if parse_angle(text) == x:
            return text
    half = round(2 * x / math.pi) / 2
    if half and parse_angle(f"{half}pi") == x:
        return f"{half}pi"
    return x


def _pairs(value, what: str) -> tuple[tuple[float, float], ...]:
    try:
        pairs = tuple((float(p[0]), float(p[1])) for p in value)
    except (TypeError, ValueError, IndexError):
        raise ConfigError(f"{what} must be a list of [x, y] pairs") from None
    if any(len(p) != 2 for p in value):
        raise ConfigError(f"{what} must be a list of [x, y] pairs")
    return pairs


def from_dict(data: dict) -> ScenarioConfig:
    unknown = set(data) - _SECTIONS - {"id", "description", "n"}
    if unknown:
        raise ConfigError(f"unknown keys: {sorted(unknown)}")
    try:
        formation, gains, initial = data["formation"], data["gains"], data["initial"]
        target = data["target"]["position"]
        cfg = ScenarioConfig(
            target=(float(target[0]), float(target[1])),
            d_star=float(formation["d_star"]),
            beta_star=tuple(parse_angle(b) for b in formation["beta_star"]),
            d_min=float(formation["d_min"]) if "d_min" in formation else None,
            gains=ControlGains(
                k_est=float(gains["k_est"]),
                k_c=float(gains["k_c"]),
                k_omega=float(gains["k_omega"]),
                alpha=parse_angle(gains["alpha"]),
            ),
            initial_positions=_pairs(initial["positions"], "initial.positions"),
            initial_estimates=_pairs(initial["estimates"], "initial.estimates"),
            **_optional(data.get("integration", {}), {
                "dt": float, "t_end": float, "integrator": str, "log_stride": int, "seed": int,
            }),
            **_optional(data.get("options", {}), {
                "controller": str, "allow_unsafe_alpha": bool, "eps_dist": float,
            }),
            scenario_id=str(data.get("id", "scenario")),
            description=str(data.get("description", "")),
        )
    except KeyError as exc:
        raise ConfigError(f"missing required key {exc.args[0]!r}") from None
    except (TypeError, ValueError) as exc:
        if isinstance(exc, ConfigError):
            raise
        raise ConfigError(str(exc)) from None
    if "n" in data and int(data["n"]) != cfg.n:
        raise ConfigError(f"n = {data['n']} but {cfg.n} initial positions given")
    return cfg


def _optional(section: dict, types: dict) -> dict:
    unknown = set(section) - set(types)
    if unknown:
        raise ConfigError(f"unknown keys: {sorted(unknown)}")
    return {k: types[k](v) for k, v in section.items()}


def to_dict(cfg: ScenarioConfig) -> dict:
    formation = {"d_star": cfg.d_star, "beta_star": [format_angle(b) for b in cfg.beta_star]}
    if cfg.d_min is not None:
        formation["d_min"] = cfg.d_min
    g = cfg.gains
    return {
        "id": cfg.scenario_id,
        "description": cfg.description,
        "n": cfg.n,
        "target": {"position": list(cfg.target)},
        "formation": formation,
        "gains": {"k_est": g.k_est, "k_c": g.k_c, "k_omega": g.k_omega, "alpha": format_angle(g.alpha)},
        "initial": {
            "positions": [list(p) for p in cfg.initial_positions],
            "estimates": [list(p) for p in cfg.initial_estimates],
        },
        "integration": {
            "dt": cfg.dt, "t_end": cfg.t_end, "integrator": cfg.integrator,
            "log_stride": cfg.log_stride, "seed": cfg.seed,
        },
        "options": {
            "controller": cfg.controller,
            "allow_unsafe_alpha": cfg.allow_unsafe_alpha,
            "eps_dist": cfg.eps_dist,
        },
    }


def loads(text: str) -> ScenarioConfig:
    try:
        data = tomllib.loads(text)
    except tomllib.TOMLDecodeError as exc:
        raise ConfigError(f"invalid scenario file: {exc}") from None
    return from_dict(data)


def dumps(cfg: ScenarioConfig) -> str:
    return tomli_w.dumps(to_dict(cfg))


def bundled_names() -> list[str]:
    root = resources.files("circumnav") / "scenarios"
    return sorted(p.name for p in root.iterdir() if p.name.endswith(".scenario"))


def bundled_path(name: str):
    return resources.files("circumnav") / "scenarios" / name


def load(path) -> ScenarioConfig:
    """Read a scenario from ``path``; a bare bundled name such as
    ``section5.scenario`` is looked up in the package if no such file exists."""
    p = Path(path)
    if not p.exists() and p.name == str(path):
        candidate = bundled_path(p.name if p.suffix else p.name + ".scenario")
        if candidate.is_file():
            return loads(candidate.read_text())
    try:
        text = p.read_text()
    except OSError as exc:
        raise ConfigError(f"cannot read scenario {path}: {exc}") from None
    return loads(text)
