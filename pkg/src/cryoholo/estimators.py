"""scikit-learn style wrappers around the focus sweep and the phase retrieval.

``X`` is a single ROI (2-D array) or a stack of ROIs (3-D, first axis =
particles). Optics are given as plain constructor parameters so the
estimators support ``get_params``/``set_params``, cloning and grid search.
"""

from __future__ import annotations

import numpy as np
from sklearn.base import BaseEstimator, TransformerMixin
from sklearn.utils.validation import check_is_fitted

from .autofocus import SweepConfig, sweep_focus
from .retrieval import RetrievalConfig, retrieve
from .types import DomainError, OpticsParams, RealImage, wavelength_from_voltage


def check_roi_stack(X) -> np.ndarray:
    """Validate ROIs and return them as a float64 ``(n, H, W)`` array."""
    X = np.asarray(X, dtype=np.float64)
    if X.ndim == 2:
        X = X[np.newaxis]
    if X.ndim != 3:
        raise ValueError(f"expected a 2-D ROI or a 3-D stack of ROIs, got shape {X.shape}")
    if X.shape[0] == 0:
        raise ValueError("empty ROI stack")
    if X.shape[1] % 2 or X.shape[2] % 2 or min(X.shape[1:]) < 2:
        raise ValueError(f"ROIs need even dimensions >= 2, got {X.shape[1:]}")
    if not np.all(np.isfinite(X)):
        raise ValueError("ROIs contain NaN or infinite values")
    if np.any(X < 0):
        raise ValueError("ROIs must be non-negative irradiance")
    return X


def _check_defocus(defocus, n: int) -> np.ndarray:
    d = np.broadcast_to(np.asarray(defocus, dtype=np.float64), (n,))
    if not np.all(np.isfinite(d)):
        raise ValueError("defocus values must be finite")
    return d


class _OpticsMixin:
    def _optics(self, defocus: float = 0.0) -> OpticsParams:
        wavelength = self.wavelength if self.wavelength is not None else wavelength_from_voltage(self.voltage)
        try:
            return OpticsParams(
                wavelength=wavelength,
                defocus=defocus,
                cs=self.cs,
                pixel_pitch=self.pixel_pitch,
                amplitude_contrast=self.amplitude_contrast,
            )
        except DomainError as exc:
            raise ValueError(str(exc)) from exc


class DefocusEstimator(_OpticsMixin, BaseEstimator):
    """Estimate per-particle de-focus from the peak of the focus merit.

    Parameters
    ----------
    voltage : float, default=120e3
        Accelerating voltage [V]; ignored when ``wavelength`` is given.
    wavelength : float, optional
        Electron wavelength [m].
    cs : float, default=2e-3
        Spherical aberration [m].
    pixel_pitch : float, default=2.2e-10
        Sample-plane pixel size [m].
    amplitude_contrast : float, default=0.07
    z_min, z_max, z_step : float
        Sweep range and step [m].
    n_jobs : int, default=1
        Threads used inside each sweep.

    Attributes
    ----------
    defocus_ : ndarray of shape (n_rois,)
        Merit peak for each ROI seen in ``fit``.
    merit_curves_ : list of MeritCurve
    """

    def __init__(
        self,
        voltage=120e3,
        wavelength=None,
        cs=2e-3,
        pixel_pitch=2.2e-10,
        amplitude_contrast=0.07,
        z_min=2e-6,
        z_max=4e-6,
        z_step=5e-9,
        n_jobs=1,
    ):
        self.voltage = voltage
        self.wavelength = wavelength
        self.cs = cs
        self.pixel_pitch = pixel_pitch
        self.amplitude_contrast = amplitude_contrast
        self.z_min = z_min
        self.z_max = z_max
        self.z_step = z_step
        self.n_jobs = n_jobs

    def _sweep(self, X):
        X = check_roi_stack(X)
        try:
            cfg = SweepConfig(self.z_min, self.z_max, self.z_step, self._optics())
        except DomainError as exc:
            raise ValueError(str(exc)) from exc
        return [sweep_focus(RealImage(x, self.pixel_pitch), cfg, workers=self.n_jobs) for x in X]

    def fit(self, X, y=None):
        self.merit_curves_ = self._sweep(X)
        self.defocus_ = np.array([c.peak_z for c in self.merit_curves_])
        return self

    def predict(self, X):
        """De-focus [m] for each ROI in ``X``."""
        check_is_fitted(self, "defocus_")
        return np.array([c.peak_z for c in self._sweep(X)])

    def fit_predict(self, X, y=None):
        return self.fit(X).defocus_


class PhaseRetriever(_OpticsMixin, TransformerMixin, BaseEstimator):
    """Recover exit waves from hologram ROIs by mean gradient descent.

    ``fit`` only validates the configuration; the work happens in
    ``transform``, which returns the phase maps (or the complex exit waves
    with ``output="exit_wave"``). The last batch of full results is kept in
    ``results_``.

    Parameters
    ----------
    defocus : float or array-like, default=3e-6
        De-focus [m], scalar or one value per ROI. ``transform`` also accepts
        a ``defocus`` argument, e.g. the output of :class:`DefocusEstimator`.
    tau, theta_stop, max_iters, random_state, init_spread
        Step size, stopping angle [deg], iteration cap, seed of the random
        start and its relative spread.
    output : {"phase", "exit_wave", "amplitude"}, default="phase"
    """

    def __init__(
        self,
        defocus=3e-6,
        voltage=120e3,
        wavelength=None,
        cs=2e-3,
        pixel_pitch=2.2e-10,
        amplitude_contrast=0.07,
        tau=1e-4,
        theta_stop=160.0,
        max_iters=500,
        random_state=0,
        init_spread=1.0,
        output="phase",
    ):
        self.defocus = defocus
        self.voltage = voltage
        self.wavelength = wavelength
        self.cs = cs
        self.pixel_pitch = pixel_pitch
        self.amplitude_contrast = amplitude_contrast
        self.tau = tau
        self.theta_stop = theta_stop
        self.max_iters = max_iters
        self.random_state = random_state
        self.init_spread = init_spread
        self.output = output

    def _config(self, defocus: float) -> RetrievalConfig:
        try:
            return RetrievalConfig(
                params=self._optics(defocus),
                tau=self.tau,
                theta_stop=self.theta_stop,
                max_iters=self.max_iters,
                rng_seed=self.random_state,
                init_spread=self.init_spread,
            )
        except DomainError as exc:
            raise ValueError(str(exc)) from exc

    def fit(self, X=None, y=None):
        if self.output not in ("phase", "exit_wave", "amplitude"):
            raise ValueError(f"unknown output {self.output!r}")
        self._config(0.0)
        if X is not None:
            check_roi_stack(X)
        self.optics_ = self._optics()
        return self

    def transform(self, X, defocus=None):
        check_is_fitted(self, "optics_")
        X = check_roi_stack(X)
        dz = _check_defocus(self.defocus if defocus is None else defocus, X.shape[0])
        self.results_ = [retrieve(RealImage(x, self.pixel_pitch), self._config(d)) for x, d in zip(X, dz)]
        if self.output == "exit_wave":
            return np.stack([r.exit_wave.data for r in self.results_])
        if self.output == "amplitude":
            return np.stack([r.amplitude.data for r in self.results_])
        return np.stack([r.phase.data for r in self.results_])

    def score(self, X, y=None):
        """Negative mean relative error of the last transform of ``X``."""
        self.transform(X)
        return -float(np.mean([r.final_error for r in self.results_]))
