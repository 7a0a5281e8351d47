"""Per-particle de-focus estimation and quantitative phase retrieval for
de-focused electron micrographs, treating each particle ROI as an in-line
Fresnel hologram."""

__version__ = "0.1.0"

from .autofocus import MeritCurve, SweepConfig, back_propagate, gradient_magnitude, sweep_focus, tamura_coefficient
from .estimators import DefocusEstimator, PhaseRetriever
from .optics import (
    TransferFunction,
    apply_adjoint,
    apply_forward,
    build_transfer,
    eval_ctf,
    filter_symmetrized,
    record_intensity,
)
from .retrieval import (
    RetrievalConfig,
    RetrievalResult,
    RetrievalState,
    angle_between,
    bisector_direction,
    data_gradient,
    huber_gradient,
    mgd_step,
    relative_error,
    retrieve,
    update_delta,
)
from .synth import NoiseSpec, PhantomSpec, make_hologram, make_phantom
from .types import (
    ComplexField,
    DomainError,
    FrequencyGrid,
    OpticsParams,
    RealImage,
    make_frequency_grid,
    wavelength_from_voltage,
)

__all__ = [
    "ComplexField",
    "DefocusEstimator",
    "DomainError",
    "FrequencyGrid",
    "MeritCurve",
    "NoiseSpec",
    "OpticsParams",
    "PhantomSpec",
    "PhaseRetriever",
    "RealImage",
    "RetrievalConfig",
    "RetrievalResult",
    "RetrievalState",
    "SweepConfig",
    "TransferFunction",
    "angle_between",
    "apply_adjoint",
    "apply_forward",
    "back_propagate",
    "bisector_direction",
    "build_transfer",
    "data_gradient",
    "eval_ctf",
    "filter_symmetrized",
    "gradient_magnitude",
    "huber_gradient",
    "make_frequency_grid",
    "make_hologram",
    "make_phantom",
    "mgd_step",
    "record_intensity",
    "relative_error",
    "retrieve",
    "sweep_focus",
    "tamura_coefficient",
    "update_delta",
    "wavelength_from_voltage",
]
