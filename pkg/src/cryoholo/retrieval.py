"""Sparsity-assisted Fresnel-zone phase retrieval by mean gradient descent (MGD).

The unknown exit wave ``g`` is driven by two competing costs: the data misfit
``C1 = ||I - |A g|^2||^2`` and a modified Huber penalty on its gradient
``C2 = sum(sqrt(1 + |grad g|^2 / delta^2) - 1)``. Each MGD step moves along
the bisector of the two unit-normalized descent directions, so no weight
between the terms has to be chosen. Iteration stops once the two directions
are nearly opposite (the angle between them exceeds ``theta_stop``).
"""

from __future__ import annotations

import logging
import math
from dataclasses import dataclass, field, replace
from typing import Callable

import numpy as np

from .optics import _require_even, _transfer_for
from .rng import make_rng
from .types import ComplexField, DomainError, OpticsParams, RealImage

log = logging.getLogger(__name__)


class StationaryPoint(Exception):
    """Both descent directions vanished; the current guess is stationary."""


@dataclass(frozen=True)
class RetrievalConfig:
    params: OpticsParams
    tau: float = 1e-4
    theta_stop: float = 160.0
    max_iters: int = 500
    rng_seed: int = 0
    init_spread: float = 1.0

    def __post_init__(self):
        if not 0 <= self.init_spread <= 1:
            raise DomainError("init_spread must lie in [0, 1]")
        if not self.tau > 0:
            raise DomainError("tau must be positive")
        if not 90 < self.theta_stop < 180:
            raise DomainError("theta_stop must lie strictly between 90 and 180 degrees")
        if self.max_iters < 1:
            raise DomainError("max_iters must be at least 1")


@dataclass(frozen=True)
class RetrievalState:
    g: ComplexField
    iter: int = 0
    theta_history: tuple[float, ...] = ()
    error_history: tuple[float, ...] = ()
    delta: float = 0.0
    converged: bool = False


@dataclass(frozen=True)
class RetrievalResult:
    exit_wave: ComplexField
    amplitude: RealImage
    phase: RealImage
    reprojection: RealImage
    final_error: float
    iterations: int
    converged: bool
    theta_history: tuple[float, ...] = field(default=(), repr=False)
    error_history: tuple[float, ...] = field(default=(), repr=False)


# -- discrete gradient pair ---------------------------------------------------
# Forward differences with a zero last row/column, and the matching divergence
# (minus the transpose), so that <grad g, p> = -<g, div p> holds exactly.


def grad(g: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
    gx = np.zeros_like(g)
    gy = np.zeros_like(g)
    gx[:, :-1] = g[:, 1:] - g[:, :-1]
    gy[:-1, :] = g[1:, :] - g[:-1, :]
    return gx, gy


def div(px: np.ndarray, py: np.ndarray) -> np.ndarray:
    out = np.zeros_like(px)
    out[:, :-1] += px[:, :-1]
    out[:, 1:] -= px[:, :-1]
    out[:-1, :] += py[:-1, :]
    out[1:, :] -= py[:-1, :]
    return out


class _Operator:
    """Forward model ``A`` and its adjoint with the transfer function cached."""

    def __init__(self, shape, params: OpticsParams):
        _require_even(shape)
        self.H = _transfer_for(shape, params)
        self.Hc = np.conj(self.H)

    def forward(self, g):
        return np.fft.ifft2(np.fft.fft2(g) * self.H)

    def adjoint(self, d):
        return np.fft.ifft2(np.fft.fft2(d) * self.Hc)


def _check_shapes(g: ComplexField, roi: RealImage) -> None:
    if g.shape != roi.shape:
        raise DomainError(f"field shape {g.shape} does not match ROI shape {roi.shape}")


def _data_gradient(op: _Operator, g: np.ndarray, intensity: np.ndarray) -> np.ndarray:
    Ag = op.forward(g)
    residual = intensity - (Ag.real**2 + Ag.imag**2)
    return -2.0 * op.adjoint(residual * Ag)


def data_gradient(g: ComplexField, roi: RealImage, params: OpticsParams) -> ComplexField:
    """Wirtinger gradient of the data misfit with respect to ``conj(g)``.

    Equals ``-2 A^H[(I - |A g|^2) A g]``. The derivative of the misfit along
    the real and imaginary parts of pixel ``k`` is ``2 Re``/``2 Im`` of entry k.
    """
    _check_shapes(g, roi)
    op = _Operator(g.shape, params)
    return ComplexField(_data_gradient(op, g.data, roi.data), g.pixel_pitch)


def _huber_flux(g: np.ndarray, delta: float) -> tuple[np.ndarray, np.ndarray]:
    gx, gy = grad(g)
    weight = 1.0 / np.sqrt(1.0 + (np.abs(gx) ** 2 + np.abs(gy) ** 2) / delta**2)
    return weight * gx, weight * gy


def huber_flux(g: ComplexField, delta: float) -> tuple[np.ndarray, np.ndarray]:
    """Weighted gradient field ``grad g / sqrt(1 + |grad g|^2 / delta^2)`` (x, y parts).

    Its magnitude approaches ``delta`` where ``|grad g| >> delta`` (TV-like regime).
    """
    if not delta > 0:
        raise DomainError("delta must be positive")
    return _huber_flux(g.data, delta)


def _huber_gradient(g: np.ndarray, delta: float) -> np.ndarray:
    return -div(*_huber_flux(g, delta))


def huber_gradient(g: ComplexField, delta: float) -> ComplexField:
    """Descent direction of the Huber penalty, ``-div(grad g / sqrt(1 + |grad g|^2/delta^2))``.

    This is ``2 delta^2`` times the Wirtinger gradient of the penalty; the
    scale drops out once the direction is normalized.
    """
    if not delta > 0:
        raise DomainError("delta must be positive")
    return ComplexField(_huber_gradient(g.data, delta), g.pixel_pitch)


def huber_cost(g: np.ndarray, delta: float) -> float:
    gx, gy = grad(g)
    return float(np.sum(np.sqrt(1.0 + (np.abs(gx) ** 2 + np.abs(gy) ** 2) / delta**2) - 1.0))


def data_cost(g: np.ndarray, intensity: np.ndarray, params: OpticsParams) -> float:
    Ag = _Operator(g.shape, params).forward(g)
    return float(np.sum((intensity - np.abs(Ag) ** 2) ** 2))


def _update_delta(g: np.ndarray) -> float:
    gx, gy = grad(g)
    mag = np.sqrt(np.abs(gx) ** 2 + np.abs(gy) ** 2).ravel()
    # lower median for an even count, so the value is always an actual sample
    med = float(np.partition(mag, (mag.size - 1) // 2)[(mag.size - 1) // 2])
    if med > 0:
        return med
    positive = mag[mag > 0]
    return float(positive.min()) if positive.size else 1.0


def update_delta(g: ComplexField) -> float:
    """Median gradient magnitude of ``g`` (smallest positive one, or 1, if that is 0)."""
    return _update_delta(g.data)


def _bisector(grad1: np.ndarray, grad2: np.ndarray) -> np.ndarray:
    n1 = np.linalg.norm(grad1)
    n2 = np.linalg.norm(grad2)
    if n1 == 0 and n2 == 0:
        raise StationaryPoint("both gradients are zero")
    u = np.zeros_like(grad1)
    if n1 > 0:
        u += grad1 / n1
    if n2 > 0:
        u += grad2 / n2
    return 0.5 * u


def bisector_direction(grad1: ComplexField, grad2: ComplexField) -> ComplexField:
    return ComplexField(_bisector(grad1.data, grad2.data), grad1.pixel_pitch)


def _angle(a: np.ndarray, b: np.ndarray) -> float:
    na = np.linalg.norm(a)
    nb = np.linalg.norm(b)
    if na == 0 or nb == 0:
        raise DomainError("angle undefined for a zero vector")
    # real dot product of the [Re, Im] concatenations
    cos = float(np.vdot(a, b).real) / (na * nb)
    return math.degrees(math.acos(min(1.0, max(-1.0, cos))))


def angle_between(grad1: ComplexField, grad2: ComplexField) -> float:
    """Angle in degrees between two complex fields viewed as real vectors."""
    return _angle(grad1.data, grad2.data)


def _relative_error(intensity: np.ndarray, Ag: np.ndarray) -> float:
    return float(np.linalg.norm(intensity - (Ag.real**2 + Ag.imag**2)) / np.linalg.norm(intensity))


def relative_error(roi: RealImage, g: ComplexField, params: OpticsParams) -> float:
    """``||I - |A g|^2|| / ||I||``."""
    _check_shapes(g, roi)
    norm = np.linalg.norm(roi.data)
    if norm == 0:
        raise DomainError("ROI has zero norm")
    return _relative_error(roi.data, _Operator(g.shape, params).forward(g.data))


def initial_guess(roi: RealImage, seed: int, spread: float = 1.0) -> ComplexField:
    """Real random start with mean m = mean(sqrt(I)).

    Pixels are uniform on ``[m(1 - spread), m(1 + spread)]``; the default
    spread of 1 gives ``[0, 2m]``.
    """
    m = float(np.sqrt(roi.data).mean())
    rng = make_rng(seed)
    values = rng.uniform(m * (1.0 - spread), m * (1.0 + spread), size=roi.shape)
    return ComplexField(values.astype(np.complex128), roi.pixel_pitch)


def _step(op: _Operator, g: np.ndarray, intensity: np.ndarray, tau: float):
    """One MGD iteration on raw arrays: returns (g_next, theta, error, delta)."""
    delta = _update_delta(g)
    Ag = op.forward(g)
    residual = intensity - (Ag.real**2 + Ag.imag**2)
    inorm = np.linalg.norm(intensity)
    error = float(np.linalg.norm(residual) / inorm) if inorm > 0 else float("nan")
    # the step moves against the gradients, so the descent directions are -g1, -g2;
    # the angle between them equals the angle between the gradients
    g1 = -2.0 * op.adjoint(residual * Ag)
    g2 = _huber_gradient(g, delta)
    if not np.any(g1) or not np.any(g2):
        theta = float("nan")
    else:
        theta = _angle(g1, g2)
    u = _bisector(g1, g2)
    g_next = g - tau * np.linalg.norm(g) * u
    return g_next, theta, error, delta


def mgd_step(state: RetrievalState, roi: RealImage, cfg: RetrievalConfig) -> RetrievalState:
    """Advance the retrieval by one MGD iteration.

    Raises :class:`StationaryPoint` when both gradients vanish.
    """
    _check_shapes(state.g, roi)
    op = _Operator(roi.shape, cfg.params)
    g_next, theta, error, delta = _step(op, state.g.data, roi.data, cfg.tau)
    return RetrievalState(
        g=ComplexField(g_next, state.g.pixel_pitch),
        iter=state.iter + 1,
        theta_history=state.theta_history + (theta,),
        error_history=state.error_history + (error,),
        delta=delta,
        converged=theta >= cfg.theta_stop,
    )


def _result(g: np.ndarray, op: _Operator, intensity: np.ndarray, pitch: float, iters, converged, thetas, errors):
    Ag = op.forward(g)
    reproj = Ag.real**2 + Ag.imag**2
    return RetrievalResult(
        exit_wave=ComplexField(g, pitch),
        amplitude=RealImage(np.abs(g), pitch),
        phase=RealImage(np.angle(g), pitch),
        reprojection=RealImage(reproj, pitch),
        final_error=_relative_error(intensity, Ag),
        iterations=iters,
        converged=converged,
        theta_history=tuple(thetas),
        error_history=tuple(errors),
    )


def retrieve(
    roi: RealImage,
    cfg: RetrievalConfig,
    callback: Callable[[int, float, float], None] | None = None,
    initial: ComplexField | None = None,
) -> RetrievalResult:
    """Recover the complex exit wave behind a hologram ROI.

    Parameters
    ----------
    roi : RealImage
        Non-negative irradiance, even dimensions.
    cfg : RetrievalConfig
        Optics (with the particle de-focus), step size and stopping rule.
    callback : callable, optional
        Called as ``callback(iteration, theta_deg, error)`` after every step.
    initial : ComplexField, optional
        Starting guess; defaults to the seeded random real image.
    """
    roi.require_nonnegative()
    if np.linalg.norm(roi.data) == 0:
        raise DomainError("ROI has zero norm")
    op = _Operator(roi.shape, cfg.params)
    intensity = roi.data
    g = (initial if initial is not None else initial_guess(roi, cfg.rng_seed, cfg.init_spread)).data.copy()
    _check_shapes(ComplexField(g, roi.pixel_pitch), roi)

    thetas: list[float] = []
    errors: list[float] = []
    converged = False
    for it in range(1, cfg.max_iters + 1):
        try:
            g_next, theta, error, _ = _step(op, g, intensity, cfg.tau)
        except StationaryPoint:
            log.info("stationary point reached at iteration %d", it)
            converged = True
            break
        g = g_next
        thetas.append(theta)
        errors.append(error)
        if callback is not None:
            callback(it, theta, error)
        if theta >= cfg.theta_stop:
            converged = True
            break
    return _result(g, op, intensity, roi.pixel_pitch, len(thetas), converged, thetas, errors)


def with_params(cfg: RetrievalConfig, params: OpticsParams) -> RetrievalConfig:
    return replace(cfg, params=params)
