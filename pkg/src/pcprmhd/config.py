"""Run configuration: a flat JSON object validated into :class:`RunConfig`."""

from __future__ import annotations

import json
import math
from dataclasses import dataclass, field, fields
from pathlib import Path
from typing import Any

from .errors import ConfigError

PRESETS_1D = ("alfven1d", "rp1", "rp2", "rp3", "custom")
PRESETS_2D = ("sine2d-init", "rotor", "blast")
SCHEMES_1D = ("lxf1", "muscl2-pcp")
SCHEMES_2D = ("lxf2d",)
CFL_BOUND = {"lxf1": 1.0, "muscl2-pcp": 0.5, "lxf2d": 1.0}

# preset -> (domain, boundary, default final time, default gamma)
PRESET_DEFAULTS: dict[str, tuple[tuple[float, ...], str, float, float]] = {
    "alfven1d": ((0.0, 1.0), "periodic", 1.0, 5.0 / 3.0),
    "rp1": ((-0.5, 0.5), "outflow", 0.4, 5.0 / 3.0),
    "rp2": ((-0.5, 0.5), "outflow", 0.4, 5.0 / 3.0),
    "rp3": ((-0.5, 0.5), "outflow", 0.4, 5.0 / 3.0),
    "custom": ((-0.5, 0.5), "outflow", 0.4, 5.0 / 3.0),
    "sine2d-init": ((0.0, 1.0, 0.0, 1.0), "periodic", 0.1, 5.0 / 3.0),
    "rotor": ((-0.5, 0.5, -0.5, 0.5), "outflow", 0.1, 5.0 / 3.0),
    "blast": ((-6.0, 6.0, -6.0, 6.0), "outflow", 0.5, 4.0 / 3.0),
}


@dataclass
class RunConfig:
    """Validated experiment configuration.

    Unset fields (``None``) are filled from the preset defaults by
    :meth:`resolved`.  ``eps`` may be the string ``"off"`` to disable the
    positivity limiter.
    """

    preset: str
    scheme: str | None = None
    n_cells: int | None = None
    nx: int | None = None
    ny: int | None = None
    cfl: float = 0.15
    t_final: float | None = None
    max_steps: int | None = None
    eps: float | str = 1e-13
    gamma: float | None = None
    seed: int = 0
    output_dir: str = "output"
    bc: str | None = None
    domain: list[float] | None = None
    snapshot_every: int = 0
    cells: list[int] | None = None
    left: list[float] | None = None
    right: list[float] | None = None
    alpha: float = 9.95
    b_a: float = 0.1
    full_scale: bool = False
    quad_order: int = 5
    extra: dict[str, Any] = field(default_factory=dict, repr=False)

    @property
    def is_2d(self) -> bool:
        return self.preset in PRESETS_2D

    @property
    def limiter_eps(self) -> float | None:
        return None if self.eps == "off" else float(self.eps)

    @classmethod
    def from_dict(cls, data: dict[str, Any]) -> RunConfig:
        """Build and validate a configuration.

        Raises:
            ConfigError: On unknown keys, missing fields or invalid values.
        """
        if not isinstance(data, dict):
            raise ConfigError("configuration must be a JSON object")
        known = {f.name for f in fields(cls)} - {"extra"}
        unknown = set(data) - known
        if unknown:
            raise ConfigError(f"unknown configuration keys: {sorted(unknown)}")
        if "preset" not in data:
            raise ConfigError("configuration needs a 'preset'")
        try:
            cfg = cls(**data)
        except TypeError as exc:
            raise ConfigError(str(exc)) from exc
        return cfg.resolved()

    @classmethod
    def load(cls, path: str | Path) -> RunConfig:
        try:
            text = Path(path).read_text(encoding="utf-8")
            data = json.loads(text)
        except (OSError, json.JSONDecodeError) as exc:
            raise ConfigError(f"cannot read configuration {path}: {exc}") from exc
        return cls.from_dict(data)

    def resolved(self) -> RunConfig:
        if self.preset not in PRESET_DEFAULTS:
            raise ConfigError(f"unknown preset {self.preset!r}")
        domain, bc, t_final, gamma = PRESET_DEFAULTS[self.preset]
        if self.scheme is None:
            self.scheme = "lxf2d" if self.is_2d else "muscl2-pcp"
        allowed = SCHEMES_2D if self.is_2d else SCHEMES_1D
        if self.scheme not in allowed:
            raise ConfigError(f"scheme {self.scheme!r} not valid for preset {self.preset!r}")
        if self.preset == "blast" and self.full_scale:
            self.nx = self.nx or 400
            self.ny = self.ny or 400
            t_final = 4.0
        self.t_final = t_final if self.t_final is None else self.t_final
        self.gamma = gamma if self.gamma is None else self.gamma
        self.bc = bc if self.bc is None else self.bc
        self.domain = list(domain) if self.domain is None else list(self.domain)
        if self.is_2d:
            self.nx = self.nx or self.n_cells or 100
            self.ny = self.ny or self.nx
            if len(self.domain) != 4:
                raise ConfigError("2D presets need a domain [x0, x1, y0, y1]")
        else:
            self.n_cells = self.n_cells or 200
            if len(self.domain) != 2:
                raise ConfigError("1D presets need a domain [x0, x1]")
            if self.n_cells < 4:
                raise ConfigError("n_cells must be at least 4")
        self._validate()
        return self

    def _validate(self) -> None:
        if not (isinstance(self.cfl, (int, float)) and 0.0 < self.cfl <= CFL_BOUND[self.scheme]):
            raise ConfigError(f"cfl must lie in (0, {CFL_BOUND[self.scheme]}] for {self.scheme}")
        if not (isinstance(self.t_final, (int, float)) and math.isfinite(self.t_final) and self.t_final >= 0):
            raise ConfigError("t_final must be a nonnegative number")
        if not 1.0 < float(self.gamma) <= 2.0:
            raise ConfigError("gamma must lie in (1, 2]")
        if self.eps != "off" and not (isinstance(self.eps, (int, float)) and self.eps > 0):
            raise ConfigError("eps must be a positive number or 'off'")
        if self.bc not in ("periodic", "outflow", "dirichlet"):
            raise ConfigError(f"unknown boundary kind {self.bc!r}")
        if self.preset == "custom" and (self.left is None or self.right is None
                                        or len(self.left) != 8 or len(self.right) != 8):
            raise ConfigError("the custom preset needs 8-component 'left' and 'right' primitive states")
        if self.max_steps is not None and self.max_steps < 0:
            raise ConfigError("max_steps must be nonnegative")
        if self.cells is not None and (not self.cells or any(int(n) < 4 for n in self.cells)):
            raise ConfigError("'cells' must be a nonempty list of sizes >= 4")
