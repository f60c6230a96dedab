"""Flat key-value scenario configuration.

One `key = value` pair per line, `#` comments, no sections.  Unknown keys
are hard errors so configs cannot drift silently.  Every parse error names
the offending key.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

__all__ = ["ConfigError", "ScenarioConfig", "parse_config", "load_config"]

_SCENARIOS = ("slice", "graph", "mesh-file")
_CHECKS = ("stability", "killing", "conformal", "variation")
_LEVELS = (3, 4, 5, 6)


class ConfigError(ValueError):
    def __init__(self, message: str, key: str | None = None):
        super().__init__(message)
        self.key = key


@dataclass(frozen=True)
class ScenarioConfig:
    scenario: str
    r: int
    n: int = 2
    s0: float | None = None
    axis: tuple[float, ...] | None = None
    perturbations: tuple[tuple[int, int, float], ...] = ()
    level: int = 5
    mesh_file: str | None = None
    mesh_fit_lmax: int = 6
    tol_gap: float = 2e-2
    tol_const: float | None = None     # default depends on the scenario
    solver_tol: float = 1e-8
    checks: tuple[str, ...] = ("stability",)
    killing_u: tuple[float, ...] = field(default=(1.0, 0.0, 0.0, 0.0))
    killing_v: tuple[float, ...] | None = None   # defaults to the axis
    fd_h: float = 1e-3
    seed: int = 0

    @property
    def axis_array(self) -> np.ndarray:
        if self.axis is not None:
            return np.array(self.axis, dtype=float)
        a = np.zeros(self.n + 2)
        a[-1] = 1.0
        return a

    @property
    def constancy_tolerance(self) -> float:
        if self.tol_const is not None:
            return self.tol_const
        return 1e-2 if self.scenario == "graph" and self.perturbations else 1e-6

    @property
    def killing_v_array(self) -> np.ndarray:
        if self.killing_v is not None:
            return np.array(self.killing_v, dtype=float)
        return self.axis_array


def _parse_floats(key: str, raw: str) -> tuple[float, ...]:
    try:
        return tuple(float(x) for x in raw.replace(",", " ").split())
    except ValueError as err:
        raise ConfigError(f"key '{key}': expected a list of reals, got '{raw}'", key=key) from err


def _parse_perturbations(raw: str) -> tuple[tuple[int, int, float], ...]:
    out = []
    for chunk in raw.split(";"):
        chunk = chunk.strip()
        if not chunk:
            continue
        parts = [p.strip() for p in chunk.split(",")]
        if len(parts) != 3:
            raise ConfigError(
                f"key 'perturbations': expected 'l,m,amplitude' triples, got '{chunk}'",
                key="perturbations",
            )
        try:
            out.append((int(parts[0]), int(parts[1]), float(parts[2])))
        except ValueError as err:
            raise ConfigError(
                f"key 'perturbations': bad triple '{chunk}'", key="perturbations"
            ) from err
    return tuple(out)


def parse_config(text: str) -> ScenarioConfig:
    pairs: dict[str, str] = {}
    for lineno, raw in enumerate(text.splitlines(), start=1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        if "=" not in line:
            raise ConfigError(f"line {lineno}: expected 'key = value', got '{line}'")
        key, _, value = line.partition("=")
        key = key.strip()
        value = value.strip()
        if key in pairs:
            raise ConfigError(f"key '{key}' given twice", key=key)
        pairs[key] = value

    known = {
        "scenario", "n", "r", "s0", "axis", "perturbations", "level", "mesh_file",
        "mesh_fit_lmax", "tol_gap", "tol_const", "solver_tol", "checks",
        "killing_u", "killing_v", "fd_h", "seed",
    }
    for key in pairs:
        if key not in known:
            raise ConfigError(f"unknown key '{key}'", key=key)

    def take_int(key: str, default=None):
        if key not in pairs:
            return default
        try:
            return int(pairs[key])
        except ValueError as err:
            raise ConfigError(f"key '{key}': expected an integer, got '{pairs[key]}'", key=key) from err

    def take_float(key: str, default=None):
        if key not in pairs:
            return default
        try:
            return float(pairs[key])
        except ValueError as err:
            raise ConfigError(f"key '{key}': expected a real, got '{pairs[key]}'", key=key) from err

    if "scenario" not in pairs:
        raise ConfigError("missing required key 'scenario'", key="scenario")
    scenario = pairs["scenario"]
    if scenario not in _SCENARIOS:
        raise ConfigError(
            f"key 'scenario': expected one of {_SCENARIOS}, got '{scenario}'", key="scenario"
        )
    if "r" not in pairs:
        raise ConfigError("missing required key 'r'", key="r")

    n = take_int("n", 2)
    if scenario in ("graph", "mesh-file") and n != 2:
        raise ConfigError(f"key 'n': scenario '{scenario}' fixes n = 2", key="n")
    r = take_int("r")
    if not 0 <= r <= n - 1:
        raise ConfigError(f"key 'r': need 0 <= r <= n-1 = {n - 1}, got {r}", key="r")

    s0 = take_float("s0")
    if scenario in ("slice", "graph") and s0 is None:
        raise ConfigError(f"missing required key 's0' for scenario '{scenario}'", key="s0")
    mesh_file = pairs.get("mesh_file")
    if scenario == "mesh-file" and not mesh_file:
        raise ConfigError("missing required key 'mesh_file'", key="mesh_file")

    axis = _parse_floats("axis", pairs["axis"]) if "axis" in pairs else None
    if axis is not None and len(axis) != n + 2:
        raise ConfigError(f"key 'axis': expected {n + 2} components", key="axis")

    perturbations = _parse_perturbations(pairs.get("perturbations", ""))
    for l, m, amp in perturbations:
        if not np.isfinite(amp):
            raise ConfigError("key 'perturbations': amplitudes must be finite", key="perturbations")

    level = take_int("level", 5)
    if level not in _LEVELS:
        raise ConfigError(f"key 'level': expected one of {_LEVELS}, got {level}", key="level")

    checks_raw = pairs.get("checks", "stability")
    checks = tuple(c.strip() for c in checks_raw.split(",") if c.strip())
    for c in checks:
        if c not in _CHECKS:
            raise ConfigError(f"key 'checks': unknown check '{c}' (known: {_CHECKS})", key="checks")

    killing_u = _parse_floats("killing_u", pairs["killing_u"]) if "killing_u" in pairs else (1.0, 0.0, 0.0, 0.0)
    killing_v = _parse_floats("killing_v", pairs["killing_v"]) if "killing_v" in pairs else None
    for key, vec in (("killing_u", killing_u), ("killing_v", killing_v)):
        if vec is not None and len(vec) != n + 2:
            raise ConfigError(f"key '{key}': expected {n + 2} components", key=key)

    fd_h = take_float("fd_h", 1e-3)
    if not 0 < fd_h <= 5e-3:
        raise ConfigError("key 'fd_h': need 0 < fd_h <= 5e-3 (second-order steps use 10*fd_h)", key="fd_h")

    return ScenarioConfig(
        scenario=scenario,
        n=n,
        r=r,
        s0=s0,
        axis=axis,
        perturbations=perturbations,
        level=level,
        mesh_file=mesh_file,
        mesh_fit_lmax=take_int("mesh_fit_lmax", 6),
        tol_gap=take_float("tol_gap", 2e-2),
        tol_const=take_float("tol_const", None),
        solver_tol=take_float("solver_tol", 1e-8),
        checks=checks,
        killing_u=killing_u,
        killing_v=killing_v,
        fd_h=fd_h,
        seed=take_int("seed", 0),
    )


def load_config(path: str | Path) -> ScenarioConfig:
    p = Path(path)
    if not p.is_file():
        raise ConfigError(f"config file not found: {p}")
    return parse_config(p.read_text(encoding="utf-8"))
