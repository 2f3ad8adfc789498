"""Run configuration (JSON) and the named parameter presets."""

from __future__ import annotations

import copy
import json
import math
from dataclasses import asdict, dataclass, field, fields

import numpy as np

from .core import TWO_PI, Grid1D, MediumParams, SeedSpec
from .errors import HitchError
from .fit import Geometry

#: vapour-cell length and D1 wavelength of the four-wave-mixing experiment
CELL_LENGTH_M = 20e-3
WAVELENGTH_M = 795e-9
EXPERIMENT_LENGTH = CELL_LENGTH_M / WAVELENGTH_M
EXPERIMENT_ANGLE = 5e-3
LOSS_LEVELS = (0.0, 1.3e-5, 1.7e-5, 2.3e-5)


class ConfigError(HitchError, ValueError):
    pass


@dataclass
class GridConfig:
    n: int = 4096
    width: float = 4096.0


@dataclass
class MediumConfig:
    a1_re: float = 2.8e-5
    a1_im: float = 0.0
    a2_re: float = 2.8e-5
    a2_im: float = 0.0
    b: float = 1.0e-4
    length: float = 5.0e4
    k: float = TWO_PI


@dataclass
class SeedConfig:
    sigma: float = 100.0
    x0: float = 0.0
    tilt: float = 3.0e-3
    amplitude: float = 1.0


@dataclass
class ScanConfig:
    nz: int = 200
    b_values: list | None = None
    gain_values: list | None = None
    im_a1_values: list | None = None
    normalize_per_z: bool = True
    onset_fraction: float = 0.9


@dataclass
class FitConfig:
    fit_im_a1: bool = True
    weighted: bool = True
    shared_offset: bool = False
    bounds: list = field(default_factory=lambda: [0.0, 1e-3])
    im_a1_start: float = 1e-5
    xatol: float = 1e-8
    frtol: float = 1e-10
    max_evals: int = 500


@dataclass
class OutputConfig:
    directory: str = "out"
    formats: list = field(default_factory=lambda: ["csv", "pgm", "json"])


@dataclass
class RunConfig:
    grid: GridConfig = field(default_factory=GridConfig)
    medium: MediumConfig = field(default_factory=MediumConfig)
    seed: SeedConfig = field(default_factory=SeedConfig)
    scan: ScanConfig = field(default_factory=ScanConfig)
    fit: FitConfig = field(default_factory=FitConfig)
    output: OutputConfig = field(default_factory=OutputConfig)

    def to_dict(self):
        return asdict(self)

    @classmethod
    def from_dict(cls, data, base: "RunConfig | None" = None):
        """Overlay ``data`` on ``base`` (default: the built-in defaults).

        Unknown sections or keys raise :class:`ConfigError`.
        """
        cfg = copy.deepcopy(base) if base is not None else cls()
        if not isinstance(data, dict):
            raise ConfigError("configuration must be a JSON object")
        sections = {f.name for f in fields(cls)}
        for name, values in data.items():
            if name not in sections:
                raise ConfigError(f"unknown configuration section {name!r}")
            if not isinstance(values, dict):
                raise ConfigError(f"section {name!r} must be an object")
            section = getattr(cfg, name)
            known = {f.name: f.type for f in fields(section)}
            for key, value in values.items():
                if key not in known:
                    raise ConfigError(f"unknown key {name}.{key}")
                _check_type(f"{name}.{key}", value, known[key])
                setattr(section, key, value)
        return cfg

    def make_grid(self):
        return Grid1D(self.grid.n, self.grid.width)

    def make_medium(self):
        m = self.medium
        return MediumParams(
            a1=complex(m.a1_re, m.a1_im), a2=complex(m.a2_re, m.a2_im), b=m.b, length=m.length, k=m.k
        )

    def make_seed(self):
        s = self.seed
        return SeedSpec(sigma=s.sigma, x0=s.x0, tilt=s.tilt, amplitude=s.amplitude)

    def make_geometry(self):
        return Geometry(
            angle=self.seed.tilt,
            length=self.medium.length,
            k=self.medium.k,
            seed_sigma=self.seed.sigma,
            x0=self.seed.x0,
        )


def _check_type(where, value, annotation):
    # annotations are strings here (postponed evaluation)
    options = [a.strip() for a in str(annotation).split("|")]
    ok = (
        (value is None and "None" in options)
        or (isinstance(value, bool) and "bool" in options)
        or (not isinstance(value, bool) and isinstance(value, int) and {"int", "float"} & set(options))
        or (isinstance(value, float) and "float" in options)
        or (isinstance(value, str) and "str" in options)
        or (isinstance(value, list) and "list" in options)
    )
    if not ok:
        raise ConfigError(f"{where} must be {annotation}, got {type(value).__name__}")


def load_config(path, base=None):
    try:
        with open(path, encoding="utf-8") as fh:
            data = json.load(fh)
    except OSError as exc:
        raise ConfigError(f"cannot read config {path}: {exc}") from exc
    except json.JSONDecodeError as exc:
        raise ConfigError(f"{path}: line {exc.lineno}: {exc.msg}") from exc
    return RunConfig.from_dict(data, base)


def _experiment_gains():
    return np.geomspace(1.5, 30.0, 20).tolist()


def _preset_fig1():
    return RunConfig()


def _preset_free():
    cfg = RunConfig()
    cfg.medium = MediumConfig(a1_re=0.0, a2_re=0.0, b=0.0)
    return cfg


def _preset_fig2_loss():
    cfg = RunConfig()
    cfg.medium.a1_im = LOSS_LEVELS[-1]
    return cfg


def _preset_experiment():
    cfg = RunConfig()
    k = cfg.medium.k
    cfg.medium = MediumConfig(
        a1_re=k * EXPERIMENT_ANGLE**2, a2_re=0.0, b=1.0e-4, length=EXPERIMENT_LENGTH
    )
    cfg.seed = SeedConfig(sigma=100.0, x0=0.0, tilt=EXPERIMENT_ANGLE)
    cfg.scan.gain_values = _experiment_gains()
    return cfg


def _preset_fig8():
    cfg = _preset_experiment()
    cfg.scan.im_a1_values = list(LOSS_LEVELS)
    return cfg


PRESETS = {
    "fig1": _preset_fig1,
    "free": _preset_free,
    "fig2-loss": _preset_fig2_loss,
    "experiment": _preset_experiment,
    "fig8": _preset_fig8,
}


def preset(name):
    try:
        return PRESETS[name]()
    except KeyError:
        raise ConfigError(f"unknown preset {name!r}; choose from {', '.join(PRESETS)}") from None


def check_finite(values, what):
    out = []
    for v in values:
        v = float(v)
        if not math.isfinite(v):
            raise ConfigError(f"non-finite entry in {what}")
        out.append(v)
    return out
