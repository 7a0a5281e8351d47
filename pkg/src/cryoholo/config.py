"""Job configuration: unit-suffixed quantities and the flat ``key = value`` file format.

Example file::

    input = micrograph.mrc
    pixel_pitch = 2.2A
    voltage = 120kV
    cs = 2mm
    roi = 512,640,256
    roi = 900,300
    sweep = 2um:4um:5nm
    out_dir = results
"""

from __future__ import annotations

import os
import re
from dataclasses import dataclass, field, fields
from pathlib import Path

from .types import DomainError

CONFIG_ENV = "CRYOHOLO_CONFIG"

_LENGTH_UNITS = {
    "m": 1.0,
    "mm": 1e-3,
    "um": 1e-6,
    "μm": 1e-6,
    "µm": 1e-6,
    "nm": 1e-9,
    "a": 1e-10,
    "å": 1e-10,
    "angstrom": 1e-10,
    "pm": 1e-12,
}
_VOLT_UNITS = {"v": 1.0, "kv": 1e3, "mv": 1e6}
_QUANTITY = re.compile(r"^\s*([-+]?(?:\d+\.?\d*|\.\d+)(?:[eE][-+]?\d+)?)\s*([^\d\s]*)\s*$")


class ConfigError(ValueError):
    pass


def _parse(text: str, units: dict, kind: str) -> float:
    m = _QUANTITY.match(text)
    if not m:
        raise ConfigError(f"cannot parse {kind} {text!r}")
    value, unit = float(m.group(1)), m.group(2).lower()
    if not unit:
        raise ConfigError(f"{kind} {text!r} needs an explicit unit ({', '.join(units)})")
    if unit not in units:
        raise ConfigError(f"unknown {kind} unit {unit!r} in {text!r}")
    return value * units[unit]


def parse_length(text: str) -> float:
    """Parse e.g. ``"2.2A"``, ``"5nm"``, ``"3.67um"``, ``"2mm"`` into meters."""
    return _parse(text, _LENGTH_UNITS, "length")


def parse_voltage(text: str) -> float:
    return _parse(text, _VOLT_UNITS, "voltage")


@dataclass(frozen=True)
class RoiSpec:
    center_x: int
    center_y: int
    size: int = 256

    def __post_init__(self):
        if self.size < 2 or self.size % 2:
            raise DomainError(f"ROI size must be even and >= 2, got {self.size}")

    @classmethod
    def parse(cls, text: str) -> RoiSpec:
        parts = [p.strip() for p in text.split(",")]
        if len(parts) not in (2, 3):
            raise ConfigError(f"ROI must be 'x,y[,size]', got {text!r}")
        try:
            nums = [int(p) for p in parts]
        except ValueError as exc:
            raise ConfigError(f"ROI must be integers, got {text!r}") from exc
        return cls(*nums)


def parse_sweep(text: str) -> tuple[float, float, float]:
    parts = text.split(":")
    if len(parts) != 3:
        raise ConfigError(f"sweep must be 'zmin:zmax:step', got {text!r}")
    return tuple(parse_length(p) for p in parts)


@dataclass
class JobConfig:
    input: str | None = None
    rois: list[RoiSpec] = field(default_factory=list)
    pixel_pitch: float | None = None  # None: take it from the micrograph header
    voltage: float = 120e3
    cs: float = 2e-3
    amplitude_contrast: float = 0.07
    defocus: float | None = None  # pins the de-focus and skips the sweep
    z_min: float = 2e-6
    z_max: float = 4e-6
    z_step: float = 5e-9
    flip_defocus_sign: bool = False
    tau: float = 1e-4
    theta_stop: float = 160.0
    max_iters: int = 500
    seed: int = 0
    init_spread: float = 1.0
    normalize: str = "mean-one"
    out_dir: str = "cryoholo-out"
    workers: int = 0  # 0: one per logical core

    def __post_init__(self):
        if self.normalize not in ("none", "mean-one"):
            raise ConfigError(f"normalize must be 'none' or 'mean-one', got {self.normalize!r}")
        if self.voltage <= 0:
            raise ConfigError("voltage must be positive")
        if self.workers < 0:
            raise ConfigError("workers must be >= 0")

    def to_dict(self) -> dict:
        d = {f.name: getattr(self, f.name) for f in fields(self)}
        d["rois"] = [[r.center_x, r.center_y, r.size] for r in self.rois]
        return d


# config key -> (JobConfig attribute, parser)
_KEYS = {
    "input": ("input", str),
    "pixel_pitch": ("pixel_pitch", parse_length),
    "voltage": ("voltage", parse_voltage),
    "cs": ("cs", parse_length),
    "amplitude_contrast": ("amplitude_contrast", float),
    "defocus": ("defocus", parse_length),
    "tau": ("tau", float),
    "theta_stop": ("theta_stop", float),
    "max_iters": ("max_iters", int),
    "seed": ("seed", int),
    "init_spread": ("init_spread", float),
    "normalize": ("normalize", str),
    "out_dir": ("out_dir", str),
    "workers": ("workers", int),
}


def _bool(text: str) -> bool:
    t = text.strip().lower()
    if t in ("1", "true", "yes", "on"):
        return True
    if t in ("0", "false", "no", "off"):
        return False
    raise ConfigError(f"not a boolean: {text!r}")


def apply_setting(values: dict, key: str, raw: str) -> None:
    """Parse one ``key = raw`` setting into ``values`` (JobConfig keyword arguments)."""
    key = key.strip().replace("-", "_")
    raw = raw.strip()
    try:
        if key == "roi":
            values.setdefault("rois", []).append(RoiSpec.parse(raw))
        elif key == "sweep":
            values["z_min"], values["z_max"], values["z_step"] = parse_sweep(raw)
        elif key == "flip_defocus_sign":
            values["flip_defocus_sign"] = _bool(raw)
        elif key in _KEYS:
            attr, parse = _KEYS[key]
            values[attr] = parse(raw)
        else:
            raise ConfigError(f"unknown config key {key!r}")
    except (ValueError, DomainError) as exc:
        if isinstance(exc, ConfigError):
            raise
        raise ConfigError(f"{key}: {exc}") from exc


def read_config_file(path) -> dict:
    values: dict = {}
    for lineno, line in enumerate(Path(path).read_text().splitlines(), 1):
        line = line.split("#", 1)[0].strip()
        if not line:
            continue
        if "=" not in line:
            raise ConfigError(f"{path}:{lineno}: expected 'key = value'")
        key, raw = line.split("=", 1)
        try:
            apply_setting(values, key, raw)
        except ConfigError as exc:
            raise ConfigError(f"{path}:{lineno}: {exc}") from exc
    return values


def default_config_path() -> str | None:
    return os.environ.get(CONFIG_ENV) or None
