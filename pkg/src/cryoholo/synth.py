"""Synthetic weak-phase particles and their de-focused holograms."""

from __future__ import annotations

import warnings
from dataclasses import dataclass, field

import numpy as np

from .optics import record_intensity
from .rng import make_rng
from .types import ComplexField, DomainError, OpticsParams, RealImage

PHANTOM_KINDS = ("gaussian-blob", "disk", "annulus", "multi-blob")
NOISE_MODELS = ("none", "gaussian", "poisson")


@dataclass(frozen=True)
class PhantomSpec:
    """Geometry and contrast of a synthetic particle.

    ``radii`` meaning depends on ``kind``:

    * gaussian-blob: ``(sigma,)``
    * disk: ``(radius,)`` or ``(radius, edge_width)``
    * annulus: ``(ring_radius, ring_width)``
    * multi-blob: ``(sigma,)``; blob centers are ``offsets`` relative to ``center``
    """

    kind: str = "gaussian-blob"
    peak_phase: float = 0.3
    amplitude_contrast: float = 0.0
    center: tuple[float, float] | None = None  # (x, y) in pixels
    radii: tuple[float, ...] = (6.0,)
    height: int = 256
    width: int = 256
    pixel_pitch: float = 2.2e-10
    offsets: tuple[tuple[float, float], ...] = field(default=((-14.0, -8.0), (10.0, -12.0), (2.0, 14.0)))

    def resolved_center(self) -> tuple[float, float]:
        if self.center is None:
            return (self.width / 2, self.height / 2)
        return self.center


@dataclass(frozen=True)
class NoiseSpec:
    model: str = "none"
    level: float = 0.0  # SNR for gaussian, mean dose [counts/pixel] for poisson
    seed: int = 0

    def __post_init__(self):
        if self.model not in NOISE_MODELS:
            raise DomainError(f"unknown noise model {self.model!r}")
        if self.model != "none" and not self.level > 0:
            raise DomainError("noise level must be positive")


def _profile(spec: PhantomSpec) -> np.ndarray:
    """Normalized particle profile in [0, 1] with max 1 (or all zero)."""
    cx, cy = spec.resolved_center()
    y, x = np.mgrid[0 : spec.height, 0 : spec.width].astype(np.float64)
    if spec.kind == "gaussian-blob":
        (sigma,) = spec.radii[:1]
        extent = 3 * sigma
        prof = np.exp(-((x - cx) ** 2 + (y - cy) ** 2) / (2 * sigma**2))
        centers = [(cx, cy)]
    elif spec.kind == "disk":
        radius = spec.radii[0]
        edge = spec.radii[1] if len(spec.radii) > 1 else 1.0
        extent = radius + 3 * edge
        r = np.hypot(x - cx, y - cy)
        prof = 0.5 * (1 - np.tanh((r - radius) / edge))
        centers = [(cx, cy)]
    elif spec.kind == "annulus":
        r0, width = spec.radii[:2]
        extent = r0 + 3 * width
        r = np.hypot(x - cx, y - cy)
        prof = np.exp(-((r - r0) ** 2) / (2 * width**2))
        centers = [(cx, cy)]
    elif spec.kind == "multi-blob":
        (sigma,) = spec.radii[:1]
        extent = 3 * sigma
        centers = [(cx + ox, cy + oy) for ox, oy in spec.offsets]
        prof = sum(np.exp(-((x - px) ** 2 + (y - py) ** 2) / (2 * sigma**2)) for px, py in centers)
    else:
        raise DomainError(f"unknown phantom kind {spec.kind!r}")

    for px, py in centers:
        if px - extent < 0 or py - extent < 0 or px + extent > spec.width - 1 or py + extent > spec.height - 1:
            raise DomainError("phantom geometry extends outside the grid")
    peak = prof.max()
    return prof / peak if peak > 0 else prof


def make_phantom(spec: PhantomSpec) -> tuple[ComplexField, np.ndarray]:
    """Return the exit wave ``A exp(i theta)`` and the ground-truth phase ``theta``."""
    if spec.peak_phase < 0:
        raise DomainError("peak_phase must be non-negative")
    if not 0 <= spec.amplitude_contrast < 1:
        raise DomainError("amplitude_contrast must lie in [0, 1)")
    if spec.peak_phase > 1:
        warnings.warn("peak_phase above 1 rad leaves the weak-phase regime", stacklevel=2)
    prof = _profile(spec)
    theta = spec.peak_phase * prof
    amplitude = 1 - spec.amplitude_contrast * prof
    return ComplexField(amplitude * np.exp(1j * theta), spec.pixel_pitch), theta


def make_hologram(phantom: ComplexField, params: OpticsParams, noise: NoiseSpec = NoiseSpec()) -> RealImage:
    clean = record_intensity(phantom, params).data
    if noise.model == "none":
        noisy = clean
    else:
        rng = make_rng(noise.seed)
        mean = clean.mean()
        if noise.model == "gaussian":
            noisy = clean + rng.normal(0.0, mean / noise.level, size=clean.shape)
        else:
            counts = rng.poisson(noise.level * clean / mean)
            noisy = counts * (mean / noise.level)
    return RealImage(np.maximum(noisy, 0.0), phantom.pixel_pitch)
