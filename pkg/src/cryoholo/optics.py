"""Imaging forward model: coherent transfer function, detector-plane
operators and the scalar CTF.

The transfer function is a pure phase factor (constant unit envelope), so the
forward operator is unitary and its adjoint is its inverse.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Callable

import numpy as np

from .types import ComplexField, DomainError, FrequencyGrid, OpticsParams, RealImage, make_frequency_grid


@dataclass(frozen=True)
class TransferFunction:
    values: np.ndarray
    params: OpticsParams


def aberration_phase(params: OpticsParams, rho2: np.ndarray | float, defocus: float | None = None):
    """Phase chi(rho) = -pi*lambda*dz*rho^2 + (pi/2)*Cs*lambda^3*rho^4.

    ``rho2`` is the squared spatial frequency.
    """
    lam = params.wavelength
    dz = params.defocus if defocus is None else defocus
    return -np.pi * lam * dz * rho2 + 0.5 * np.pi * params.cs * lam**3 * rho2**2


def build_transfer(params: OpticsParams, grid: FrequencyGrid) -> TransferFunction:
    values = np.exp(1j * aberration_phase(params, grid.rho2))
    values[0, 0] = 1.0
    return TransferFunction(values=values, params=params)


def _require_even(shape: tuple[int, int]) -> None:
    if shape[0] % 2 or shape[1] % 2:
        raise DomainError(f"FFT-path operations need even dimensions, got {shape}")


def _transfer_for(shape, params: OpticsParams) -> np.ndarray:
    grid = make_frequency_grid(shape[0], shape[1], params.pixel_pitch)
    return build_transfer(params, grid).values


def _check_pitch(field_pitch: float, params: OpticsParams) -> None:
    if not math.isclose(field_pitch, params.pixel_pitch, rel_tol=1e-9):
        raise DomainError(
            f"field pixel pitch {field_pitch:g} m does not match optics pitch {params.pixel_pitch:g} m"
        )


def _filter(data: np.ndarray, H: np.ndarray) -> np.ndarray:
    return np.fft.ifft2(np.fft.fft2(data) * H)


def apply_forward(g: ComplexField, params: OpticsParams) -> ComplexField:
    """Propagate an exit wave to the detector plane, ``A g``."""
    _require_even(g.shape)
    _check_pitch(g.pixel_pitch, params)
    H = _transfer_for(g.shape, params)
    return ComplexField(_filter(g.data, H), g.pixel_pitch)


def apply_adjoint(d: ComplexField, params: OpticsParams) -> ComplexField:
    """Adjoint of :func:`apply_forward` (filter with the conjugate transfer)."""
    _require_even(d.shape)
    _check_pitch(d.pixel_pitch, params)
    H = _transfer_for(d.shape, params)
    return ComplexField(_filter(d.data, np.conj(H)), d.pixel_pitch)


def record_intensity(g: ComplexField, params: OpticsParams) -> RealImage:
    """Detector irradiance ``|A g|^2``."""
    d = apply_forward(g, params).data
    return RealImage(d.real**2 + d.imag**2, g.pixel_pitch)


def mirror_extend(img: np.ndarray) -> np.ndarray:
    """Even extension of an HxW array to 2Hx2W (mirror about both far edges)."""
    top = np.concatenate([img, img[:, ::-1]], axis=1)
    return np.concatenate([top, top[::-1, :]], axis=0)


def filter_symmetrized(
    img: RealImage, filter_builder: Callable[[FrequencyGrid], TransferFunction | np.ndarray]
) -> ComplexField:
    """Filter an image after even-symmetrization; return the top-left quadrant.

    ``filter_builder`` receives the frequency grid of the doubled image and
    returns a :class:`TransferFunction` or a bare complex array.
    """
    h, w = img.shape
    _require_even(img.shape)
    ext = mirror_extend(img.data)
    grid = make_frequency_grid(2 * h, 2 * w, img.pixel_pitch)
    H = filter_builder(grid)
    if isinstance(H, TransferFunction):
        H = H.values
    out = _filter(ext, H)[:h, :w]
    return ComplexField(out, img.pixel_pitch)


def eval_ctf(params: OpticsParams, rho: float | np.ndarray):
    """Scalar contrast transfer function ``w cos(chi) + sqrt(1 - w^2) sin(chi)``.

    ``rho`` is a spatial frequency in cycles/m (scalar or array).
    """
    rho_arr = np.asarray(rho, dtype=np.float64)
    if np.any(rho_arr < 0):
        raise DomainError("spatial frequency must be non-negative")
    chi = aberration_phase(params, rho_arr**2)
    w = params.amplitude_contrast
    ctf = w * np.cos(chi) + math.sqrt(1 - w * w) * np.sin(chi)
    return float(ctf) if np.ndim(rho) == 0 else ctf


def ctf_zeros(params: OpticsParams, rho_max: float) -> np.ndarray:
    """Zeros of the CTF in (0, rho_max], in cycles/m, solved in closed form.

    With ``phi = arcsin(w)`` the CTF equals ``sin(chi + phi)``, so zeros sit
    where ``chi(rho) = k*pi - phi``. ``chi`` is a quadratic in ``s = rho^2``,
    giving at most two roots per integer ``k``.
    """
    if not rho_max > 0:
        raise DomainError("rho_max must be positive")
    lam, dz, cs = params.wavelength, params.defocus, params.cs
    a = 0.5 * np.pi * cs * lam**3  # chi = a s^2 + b s
    b = -np.pi * lam * dz
    phi = math.asin(params.amplitude_contrast)
    s_max = rho_max**2
    chi_end = a * s_max**2 + b * s_max
    if a > 0 and -b / (2 * a) < s_max:
        chi_lo = min(chi_end, -b * b / (4 * a))
    else:
        chi_lo = min(0.0, chi_end)
    chi_hi = max(0.0, chi_end)
    k_lo = math.floor((chi_lo + phi) / np.pi)
    k_hi = math.ceil((chi_hi + phi) / np.pi)
    roots = []
    for k in range(k_lo, k_hi + 1):
        t = k * np.pi - phi
        if a == 0:
            cand = [t / b] if b != 0 else []
        else:
            disc = b * b + 4 * a * t
            if disc < 0:
                continue
            sq = math.sqrt(disc)
            cand = [(-b - sq) / (2 * a), (-b + sq) / (2 * a)]
        roots += [s for s in cand if 0 < s <= s_max]
    return np.sqrt(np.unique(np.array(roots, dtype=np.float64)))
