"""Per-particle de-focus estimation by back-propagation and the
sparsity-of-gradient (Tamura) focus merit."""

from __future__ import annotations

import math
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass

import numpy as np

from .optics import aberration_phase, filter_symmetrized, mirror_extend
from .types import ComplexField, DomainError, OpticsParams, RealImage, make_frequency_grid


@dataclass(frozen=True)
class SweepConfig:
    z_min: float = 2e-6
    z_max: float = 4e-6
    z_step: float = 5e-9
    base_params: OpticsParams | None = None

    def __post_init__(self):
        if not self.z_min < self.z_max:
            raise DomainError("z_min must be smaller than z_max")
        if not 0 < self.z_step <= self.z_max - self.z_min:
            raise DomainError("z_step must lie in (0, z_max - z_min]")
        if self.base_params is None:
            raise DomainError("SweepConfig needs base_params")

    def z_values(self) -> np.ndarray:
        # integer stepping avoids float drift in the grid of z values
        n = int(math.floor((self.z_max - self.z_min) / self.z_step + 1e-9)) + 1
        return self.z_min + self.z_step * np.arange(n)


@dataclass(frozen=True)
class MeritCurve:
    z_values: np.ndarray
    merit: np.ndarray
    peak_z: float
    peak_index: int

    def to_text(self) -> str:
        """Two columns: z in micrometers and the merit value."""
        lines = ["# z_um merit"]
        lines += [f"{z * 1e6:.6f} {m:.12e}" for z, m in zip(self.z_values, self.merit)]
        return "\n".join(lines) + "\n"


def back_propagate(roi: RealImage, params: OpticsParams, z: float) -> ComplexField:
    """Numerically refocus a hologram ROI to distance ``z`` [m]."""
    roi.require_nonnegative()
    return filter_symmetrized(roi, lambda grid: np.exp(-1j * aberration_phase(params, grid.rho2, defocus=z)))


def _gradient_magnitude(q: np.ndarray) -> np.ndarray:
    gx = np.zeros_like(q)
    gy = np.zeros_like(q)
    gx[:, :-1] = q[:, 1:] - q[:, :-1]
    gy[:-1, :] = q[1:, :] - q[:-1, :]
    return np.sqrt(np.abs(gx) ** 2 + np.abs(gy) ** 2)


def gradient_magnitude(q: ComplexField) -> RealImage:
    """Forward-difference gradient magnitude; the last row/column get zero."""
    return RealImage(_gradient_magnitude(q.data), q.pixel_pitch)


def _tamura(u: np.ndarray) -> float:
    mean = u.mean()
    if mean == 0:
        return 0.0
    return math.sqrt(u.std() / mean)


def tamura_coefficient(u: RealImage) -> float:
    """sqrt(std / mean) over all pixels, 0 for an all-zero image."""
    if np.any(u.data < 0):
        raise DomainError("gradient magnitude image has negative pixels")
    return _tamura(u.data)


def sweep_focus(roi: RealImage, cfg: SweepConfig, workers: int = 1) -> MeritCurve:
    """Evaluate the focus merit over the configured z range and locate its peak.

    The spectrum of the mirrored ROI is computed once and reused for every z;
    results are identical for any ``workers``.
    """
    roi.require_nonnegative()
    h, w = roi.shape
    if h % 2 or w % 2:
        raise DomainError(f"ROI needs even dimensions, got {roi.shape}")
    zs = cfg.z_values()
    if zs.size < 2:
        raise DomainError("focus sweep needs at least two z values")

    params = cfg.base_params
    grid = make_frequency_grid(2 * h, 2 * w, roi.pixel_pitch)
    spectrum = np.fft.fft2(mirror_extend(roi.data))
    defocus_kernel = np.pi * params.wavelength * grid.rho2
    cs_phase = aberration_phase(params, grid.rho2, defocus=0.0)

    def merit_at(z: float) -> float:
        filt = np.exp(1j * (defocus_kernel * z - cs_phase))
        q = np.fft.ifft2(spectrum * filt)[:h, :w]
        return _tamura(_gradient_magnitude(q))

    if workers > 1:
        with ThreadPoolExecutor(max_workers=workers) as pool:
            merit = np.array(list(pool.map(merit_at, zs)))
    else:
        merit = np.array([merit_at(z) for z in zs])

    peak = int(np.argmax(merit))  # first maximum = smallest z on ties
    return MeritCurve(z_values=zs, merit=merit, peak_z=float(zs[peak]), peak_index=peak)
