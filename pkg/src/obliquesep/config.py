"""Experiment configuration (INI text) and run manifests (JSON)."""

from __future__ import annotations

import configparser
import dataclasses
import json
import platform
from dataclasses import dataclass, field, fields
from pathlib import Path

import numpy as np

from .exceptions import InvalidArgumentError

__all__ = ["ExperimentConfig", "RunManifest", "ConfigError", "PRECISIONS"]

PRECISIONS = {"double": np.float64, "extended": np.longdouble}


class ConfigError(InvalidArgumentError):
    """A configuration file could not be parsed or holds an invalid value."""


# (section, key) for every field; the INI layout is flat key = value per section
_LAYOUT = {
    "a": "grid", "b": "grid", "n_points": "grid", "precision": "grid",
    "knot_spacing": "basis", "knots": "basis", "normalize_basis": "basis",
    "background_count": "background", "normalize_background": "background",
    "background_ratio": "background",
    "K": "spectrum", "coeff_low": "spectrum", "coeff_high": "spectrum",
    "noise_percent": "noise", "noise_mode": "noise",
    "support_seed": "seeds", "coeff_seed": "seeds", "noise_seed": "seeds",
    "q": "solver", "delta": "solver", "delta_safety": "solver",
    "max_constraints": "solver", "init": "solver", "support_tol": "solver",
    "wperp_rel_tol": "projector", "rank_tol": "projector", "method": "projector",
    "truncations": "projector",
    "noise_levels": "experiment", "replicates": "experiment",
}


@dataclass(frozen=True)
class ExperimentConfig:
    a: float = 0.0
    b: float = 1.0
    n_points: int = 1001
    precision: str = "extended"
    knot_spacing: float = 0.01
    knots: str = "clamped"
    normalize_basis: bool = True
    background_count: int = 50
    normalize_background: bool = False
    background_ratio: float | None = 1.0
    K: int = 30
    coeff_low: float = 0.0
    coeff_high: float = 1.0
    noise_percent: float = 1e-5
    noise_mode: str = "relative_std"
    support_seed: int = 0
    coeff_seed: int = 1
    noise_seed: int = 2
    q: float = 0.8
    delta: float | None = None
    delta_safety: float = 1.2
    max_constraints: int | None = None
    init: str = "uniform"
    support_tol: float = 1e-3
    wperp_rel_tol: float = 1e-3
    rank_tol: float = 0.0
    method: str = "svd"
    truncations: int = 3
    noise_levels: tuple = (1e-5, 1.0, 3.0)
    replicates: int = 1

    def __post_init__(self):
        object.__setattr__(self, "noise_levels", tuple(float(p) for p in self.noise_levels))
        checks = [
            (self.a < self.b, "need a < b"),
            (self.n_points >= 2, "n_points must be >= 2"),
            (self.precision in PRECISIONS, f"precision must be one of {sorted(PRECISIONS)}"),
            (self.knot_spacing > 0, "knot_spacing must be positive"),
            (self.background_count >= 1, "background count must be >= 1"),
            (self.K >= 1, "K must be >= 1"),
            (self.coeff_low <= self.coeff_high, "coeff_low must not exceed coeff_high"),
            (self.noise_percent >= 0, "noise percent must be >= 0"),
            (all(p >= 0 for p in self.noise_levels), "noise levels must be >= 0"),
            (0 < self.q <= 1, "q must lie in (0, 1]"),
            (self.delta is None or self.delta >= 0, "delta must be >= 0"),
            (self.delta_safety > 0, "delta_safety must be positive"),
            (self.init in ("uniform", "warm"), "init must be uniform or warm"),
            (0 < self.wperp_rel_tol < 1, "wperp_rel_tol must lie in (0, 1)"),
            (self.rank_tol >= 0, "rank_tol must be >= 0"),
            (self.method in ("svd", "gram"), "method must be svd or gram"),
            (self.truncations >= 0, "truncations must be >= 0"),
            (self.replicates >= 1, "replicates must be >= 1"),
        ]
        for ok, msg in checks:
            if not ok:
                raise ConfigError(msg)

    @property
    def dtype(self):
        return np.dtype(PRECISIONS[self.precision])

    @property
    def seeds(self):
        return {"support_seed": self.support_seed, "coeff_seed": self.coeff_seed,
                "noise_seed": self.noise_seed}

    def replace(self, **changes):
        return dataclasses.replace(self, **changes)

    def replicate(self, k):
        """Seeds shifted by ``k`` for the k-th repetition."""
        return self.replace(support_seed=self.support_seed + k, coeff_seed=self.coeff_seed + k,
                            noise_seed=self.noise_seed + k)

    # -- INI text --------------------------------------------------------

    def to_ini(self):
        cp = configparser.ConfigParser()
        cp.optionxform = str
        for f in fields(self):
            sec = _LAYOUT[f.name]
            if not cp.has_section(sec):
                cp.add_section(sec)
            cp.set(sec, f.name, _format(getattr(self, f.name)))
        lines = []
        for sec in cp.sections():
            lines.append(f"[{sec}]")
            lines += [f"{k} = {v}" for k, v in cp.items(sec)]
            lines.append("")
        return "\n".join(lines)

    @classmethod
    def from_ini(cls, text, source="<string>"):
        cp = configparser.ConfigParser(inline_comment_prefixes=(";", "#"))
        cp.optionxform = str
        try:
            cp.read_string(text, source=source)
        except configparser.Error as exc:
            lineno = getattr(exc, "lineno", None)
            if lineno is None and getattr(exc, "errors", None):
                lineno = exc.errors[0][0]
            where = source if lineno is None else f"{source}, line {lineno}"
            raise ConfigError(f"{where}: {exc.message.splitlines()[0]}") from exc
        known = {f.name: f for f in fields(cls)}
        kwargs = {}
        for sec in cp.sections():
            for key, raw in cp.items(sec):
                where = f"{source}, line {_line_of(text, key)}"
                if key not in known or _LAYOUT[key] != sec:
                    raise ConfigError(f"{where}: unknown key '{key}' in section [{sec}]")
                try:
                    kwargs[key] = _parse(raw, known[key].type)
                except ValueError as exc:
                    raise ConfigError(f"{where}: [{sec}] {key} = {raw!r}: {exc}") from exc
        try:
            return cls(**kwargs)
        except ConfigError as exc:
            raise ConfigError(f"{source}: {exc}") from exc

    @classmethod
    def load(cls, path):
        path = Path(path)
        return cls.from_ini(path.read_text(), source=str(path))

    def save(self, path):
        Path(path).write_text(self.to_ini())


def _line_of(text, key):
    for n, line in enumerate(text.splitlines(), 1):
        if line.split("=", 1)[0].split(":", 1)[0].strip() == key:
            return n
    return "?"


def _format(value):
    if value is None:
        return "none"
    if isinstance(value, bool):
        return "true" if value else "false"
    if isinstance(value, float):
        return repr(value)
    if isinstance(value, tuple):
        return ", ".join(_format(v) for v in value)
    return str(value)


def _parse(raw, annotation):
    # annotations are strings here (postponed evaluation)
    raw = raw.strip()
    if raw.lower() == "none":
        if "None" not in annotation:
            raise ValueError("a value is required")
        return None
    kind = annotation.split("|")[0].strip()
    if kind == "bool":
        low = raw.lower()
        if low in ("true", "yes", "on", "1"):
            return True
        if low in ("false", "no", "off", "0"):
            return False
        raise ValueError("expected a boolean")
    if kind == "tuple":
        return tuple(float(p) for p in raw.split(",") if p.strip())
    if kind == "int":
        return int(raw)
    if kind == "str":
        return raw
    return float(raw)


@dataclass
class RunManifest:
    """Everything needed to rerun a command, plus what it produced."""

    command: str
    config: ExperimentConfig
    arguments: dict = field(default_factory=dict)
    tool_version: str = ""
    outputs: dict = field(default_factory=dict)
    timings: dict = field(default_factory=dict)
    metrics: dict = field(default_factory=dict)
    success: bool = True
    error: str | None = None
    platform: str = field(default_factory=platform.platform)

    def to_dict(self):
        return {
            "command": self.command,
            "arguments": self.arguments,
            "config": self.config.to_ini(),
            "seeds": self.config.seeds,
            "tool_version": self.tool_version,
            "outputs": self.outputs,
            "timings": self.timings,
            "metrics": self.metrics,
            "success": self.success,
            "error": self.error,
            "platform": self.platform,
        }

    @classmethod
    def from_dict(cls, d):
        return cls(
            command=d["command"],
            config=ExperimentConfig.from_ini(d["config"]),
            arguments=d.get("arguments", {}),
            tool_version=d.get("tool_version", ""),
            outputs=d.get("outputs", {}),
            timings=d.get("timings", {}),
            metrics=d.get("metrics", {}),
            success=d.get("success", True),
            error=d.get("error"),
            platform=d.get("platform", ""),
        )

    def save(self, path):
        Path(path).write_text(json.dumps(self.to_dict(), indent=2) + "\n")

    @classmethod
    def load(cls, path):
        return cls.from_dict(json.loads(Path(path).read_text()))
