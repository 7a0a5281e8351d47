"""Value types shared across the package: grids with physical metadata and
the optics parameters that define every transfer function.

All lengths are SI meters. Arrays stored on the types are read-only copies,
so instances can be shared freely between workers.
"""

from __future__ import annotations

import math
from dataclasses import asdict, dataclass, field

import numpy as np
from scipy import constants


class DomainError(ValueError):
    """Raised when an input lies outside the domain of an operation."""


def _frozen(arr: np.ndarray) -> np.ndarray:
    arr = np.array(arr, copy=True)
    arr.setflags(write=False)
    return arr


@dataclass(frozen=True)
class OpticsParams:
    """Electron-optical parameters of a micrograph.

    Parameters
    ----------
    wavelength : float
        Electron de Broglie wavelength [m].
    defocus : float
        De-focus distance [m]; positive is under-focus.
    cs : float
        Spherical-aberration coefficient [m].
    pixel_pitch : float
        Sample-plane pixel size [m].
    amplitude_contrast : float
        Fraction of contrast attributed to absorption, in [0, 1).
    """

    wavelength: float
    defocus: float = 0.0
    cs: float = 0.0
    pixel_pitch: float = 2.2e-10
    amplitude_contrast: float = 0.07

    def __post_init__(self):
        for name in ("wavelength", "defocus", "cs", "pixel_pitch", "amplitude_contrast"):
            value = float(getattr(self, name))
            if not math.isfinite(value):
                raise DomainError(f"{name} must be finite, got {value!r}")
            object.__setattr__(self, name, value)
        if self.wavelength <= 0:
            raise DomainError("wavelength must be positive")
        if self.pixel_pitch <= 0:
            raise DomainError("pixel_pitch must be positive")
        if self.cs < 0:
            raise DomainError("cs must be non-negative")
        if not 0 <= self.amplitude_contrast < 1:
            raise DomainError("amplitude_contrast must lie in [0, 1)")

    def with_defocus(self, defocus: float) -> OpticsParams:
        return OpticsParams(
            wavelength=self.wavelength,
            defocus=defocus,
            cs=self.cs,
            pixel_pitch=self.pixel_pitch,
            amplitude_contrast=self.amplitude_contrast,
        )

    def to_dict(self) -> dict:
        return asdict(self)

    @classmethod
    def from_dict(cls, d: dict) -> OpticsParams:
        return cls(**{k: d[k] for k in ("wavelength", "defocus", "cs", "pixel_pitch", "amplitude_contrast")})


def _check_grid_array(data: np.ndarray, pixel_pitch: float) -> None:
    if data.ndim != 2:
        raise DomainError(f"expected a 2-D array, got shape {data.shape}")
    if min(data.shape) < 2:
        raise DomainError(f"grid must be at least 2x2, got {data.shape}")
    if not np.all(np.isfinite(data)):
        raise DomainError("grid contains non-finite samples")
    if not (pixel_pitch > 0 and math.isfinite(pixel_pitch)):
        raise DomainError("pixel_pitch must be positive and finite")


@dataclass(frozen=True)
class ComplexField:
    """2-D complex field sampled on a square-pixel grid (rows = y)."""

    data: np.ndarray
    pixel_pitch: float

    def __post_init__(self):
        data = np.asarray(self.data, dtype=np.complex128)
        _check_grid_array(data, self.pixel_pitch)
        object.__setattr__(self, "data", _frozen(data))
        object.__setattr__(self, "pixel_pitch", float(self.pixel_pitch))

    @property
    def shape(self) -> tuple[int, int]:
        return self.data.shape

    def norm(self) -> float:
        return float(np.linalg.norm(self.data))


@dataclass(frozen=True)
class RealImage:
    """2-D real image sampled on a square-pixel grid (rows = y)."""

    data: np.ndarray
    pixel_pitch: float

    def __post_init__(self):
        data = np.asarray(self.data, dtype=np.float64)
        _check_grid_array(data, self.pixel_pitch)
        object.__setattr__(self, "data", _frozen(data))
        object.__setattr__(self, "pixel_pitch", float(self.pixel_pitch))

    @property
    def shape(self) -> tuple[int, int]:
        return self.data.shape

    def require_nonnegative(self) -> RealImage:
        if np.any(self.data < 0):
            raise DomainError("irradiance image has negative samples")
        return self


@dataclass(frozen=True)
class FrequencyGrid:
    """Spatial frequencies [cycles/m] in DFT order; fx varies along columns."""

    fx: np.ndarray
    fy: np.ndarray
    pixel_pitch: float
    rho2: np.ndarray = field(init=False, repr=False)

    def __post_init__(self):
        object.__setattr__(self, "fx", _frozen(self.fx))
        object.__setattr__(self, "fy", _frozen(self.fy))
        object.__setattr__(self, "rho2", _frozen(self.fx**2 + self.fy**2))

    @property
    def shape(self) -> tuple[int, int]:
        return self.fx.shape


def wavelength_from_voltage(voltage: float) -> float:
    """Relativistic electron wavelength [m] for an accelerating voltage [V]."""
    if not voltage > 0:
        raise DomainError(f"voltage must be positive, got {voltage!r}")
    m0, e, c, h = constants.m_e, constants.e, constants.c, constants.h
    eV = e * voltage
    return h / math.sqrt(2 * m0 * eV * (1 + eV / (2 * m0 * c**2)))


def make_frequency_grid(height: int, width: int, pixel_pitch: float) -> FrequencyGrid:
    if height < 2 or width < 2:
        raise DomainError(f"grid dimensions must be >= 2, got {height}x{width}")
    if not pixel_pitch > 0:
        raise DomainError("pixel_pitch must be positive")
    fy = np.fft.fftfreq(height, d=pixel_pitch)
    fx = np.fft.fftfreq(width, d=pixel_pitch)
    FX, FY = np.meshgrid(fx, fy)
    return FrequencyGrid(fx=FX, fy=FY, pixel_pitch=float(pixel_pitch))
