"""Run configuration: ``key = value`` files plus command-line overrides."""

from __future__ import annotations

import dataclasses
import math
from dataclasses import dataclass, field
from pathlib import Path

from .errors import ConfigError
from .graph import LiftConfig
from .pendulum import ContactPendulum, LinearSpringPendulum
from .potential import PotentialSystem

SYSTEMS = ("linear-pendulum", "contact-pendulum")


@dataclass
class RunConfig:
    system: str = "linear-pendulum"
    # model parameters; k_c only affects the linear pendulum, the contact keys only the contact one
    L0: float = 1.0
    mg: float = 10.0
    k_c: float = 1.0
    W0: float = 0.1
    k_min: float = 1.0
    k_max: float = 1e4
    eps: float = 0.1
    d0: float | None = None
    # grid; bounds default to +-1.5*L0 around the model's natural centre
    grid: tuple[int, int] = (31, 31)
    bounds: tuple[float, float, float, float] | None = None
    diagonals: bool = False
    # solver
    tol: float = 1e-10
    max_iter: int = 50
    n_seeds: int = 16
    dedup_radius: float = 1e-6
    crit_threshold: float = 1e-8
    complete_fibers: bool = True
    # planner
    match_threshold: float | None = None
    switch_penalty: float = 0.0
    symmetric: bool = False
    workers: int = 1
    out: Path = field(default_factory=lambda: Path("."))

    def validate(self) -> "RunConfig":
        if self.system not in SYSTEMS:
            raise ConfigError(f"system must be one of {', '.join(SYSTEMS)}; got {self.system!r}")
        positive = {
            "L0": self.L0,
            "k_c": self.k_c,
            "W0": self.W0,
            "k_min": self.k_min,
            "tol": self.tol,
            "dedup_radius": self.dedup_radius,
            "crit_threshold": self.crit_threshold,
        }
        for key, val in positive.items():
            if not (math.isfinite(val) and val > 0):
                raise ConfigError(f"{key} must be positive and finite, got {val}")
        if not (math.isfinite(self.mg) and self.mg >= 0):
            raise ConfigError(f"mg must be nonnegative, got {self.mg}")
        if not self.k_max > self.k_min:
            raise ConfigError("k_max must exceed k_min")
        if not 0 < self.eps < 2:
            raise ConfigError("eps must lie in (0, 2)")
        if self.d0 is not None and not self.d0 > 0:
            raise ConfigError("d0 must be positive")
        if len(self.grid) != 2 or min(self.grid) < 1:
            raise ConfigError(f"grid needs two counts >= 1, got {self.grid}")
        if self.bounds is not None:
            if len(self.bounds) != 4 or not all(math.isfinite(b) for b in self.bounds):
                raise ConfigError("bounds needs four finite numbers: ux_lo, ux_hi, uy_lo, uy_hi")
            for lo, hi, r in ((self.bounds[0], self.bounds[1], self.grid[0]), (self.bounds[2], self.bounds[3], self.grid[1])):
                if lo > hi or (r > 1 and lo == hi):
                    raise ConfigError(f"degenerate bounds ({lo}, {hi})")
        if self.max_iter < 1 or self.n_seeds < 1 or self.workers < 1:
            raise ConfigError("max_iter, n_seeds and workers must be >= 1")
        if self.match_threshold is not None and not self.match_threshold > 0:
            raise ConfigError("match_threshold must be positive")
        if not (math.isfinite(self.switch_penalty) and self.switch_penalty >= 0):
            raise ConfigError("switch_penalty must be nonnegative")
        return self

    def build_system(self) -> PotentialSystem:
        try:
            if self.system == "linear-pendulum":
                return LinearSpringPendulum(L0=self.L0, mg=self.mg, k_c=self.k_c)
            return ContactPendulum(
                L0=self.L0, W0=self.W0, mg=self.mg, k_min=self.k_min, k_max=self.k_max, eps=self.eps, d0=self.d0
            )
        except ValueError as exc:
            raise ConfigError(str(exc)) from exc

    def grid_bounds(self) -> list[tuple[float, float]]:
        if self.bounds is not None:
            b = self.bounds
            return [(b[0], b[1]), (b[2], b[3])]
        r = 1.5 * self.L0
        cy = self.mg / (2.0 * self.k_c) if self.system == "linear-pendulum" else 0.0
        return [(-r, r), (cy - r, cy + r)]

    def lift_config(self) -> LiftConfig:
        return LiftConfig(
            tol=self.tol,
            max_iter=self.max_iter,
            n_seeds=self.n_seeds,
            dedup_radius=self.dedup_radius,
            crit_threshold=self.crit_threshold,
            match_threshold=self.match_threshold,
            complete_fibers=self.complete_fibers,
            switch_penalty=self.switch_penalty,
            symmetric=self.symmetric,
            workers=self.workers,
        )


def parse_grid(text: str) -> tuple[int, int]:
    parts = text.lower().replace(" ", "").split("x")
    try:
        nx, ny = (int(p) for p in parts)
    except ValueError:
        raise ConfigError(f"grid must look like NxM, got {text!r}") from None
    return nx, ny


def _parse_bool(text: str) -> bool:
    t = text.strip().lower()
    if t in ("1", "true", "yes", "on"):
        return True
    if t in ("0", "false", "no", "off"):
        return False
    raise ConfigError(f"not a boolean: {text!r}")


def _optional_float(text: str) -> float | None:
    return None if text.strip().lower() in ("auto", "none", "") else float(text)


_PARSERS = {
    "system": str.strip,
    "grid": parse_grid,
    "bounds": lambda s: tuple(float(x) for x in s.split(",")),
    "diagonals": _parse_bool,
    "symmetric": _parse_bool,
    "complete_fibers": _parse_bool,
    "d0": _optional_float,
    "match_threshold": _optional_float,
    "out": lambda s: Path(s.strip()),
}


def _coerce(key: str, text: str):
    if key in _PARSERS:
        return _PARSERS[key](text)
    default = RunConfig.__dataclass_fields__[key].default
    return int(text) if isinstance(default, int) and not isinstance(default, bool) else float(text)


def parse_config_text(text: str, base: RunConfig | None = None) -> RunConfig:
    keys = {f.name for f in dataclasses.fields(RunConfig)}
    values = {}
    for lineno, raw in enumerate(text.splitlines(), start=1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        if "=" not in line:
            raise ConfigError(f"line {lineno}: expected 'key = value'")
        key, val = (s.strip() for s in line.split("=", 1))
        if key not in keys:
            raise ConfigError(f"line {lineno}: unknown key {key!r}")
        try:
            values[key] = _coerce(key, val)
        except ValueError as exc:
            raise ConfigError(f"line {lineno}: bad value for {key}: {exc}") from None
    return dataclasses.replace(base or RunConfig(), **values)


def load_config(path) -> RunConfig:
    try:
        text = Path(path).read_text()
    except OSError as exc:
        raise ConfigError(f"cannot read config {path}: {exc}") from exc
    return parse_config_text(text)
