"""Output rasters: float32 MRC + JSON side-car, 8-bit previews and plots."""

from __future__ import annotations

import json
from pathlib import Path

import numpy as np
from PIL import Image

from .mrc import write_mrc
from .types import ComplexField, DomainError, RealImage

COMPONENTS = ("real", "imag", "abs", "angle")


def preview_bytes(data: np.ndarray) -> np.ndarray:
    """Min-max window to 0..255; a constant image maps to mid-gray 128."""
    lo = float(data.min())
    hi = float(data.max())
    if hi == lo:
        return np.full(data.shape, 128, dtype=np.uint8)
    scaled = (data - lo) * (255.0 / (hi - lo))
    return np.clip(np.rint(scaled), 0, 255).astype(np.uint8)


def _component(img, component: str | None) -> tuple[np.ndarray, float]:
    if isinstance(img, ComplexField):
        if component not in COMPONENTS:
            raise DomainError(f"complex fields need a component in {COMPONENTS}")
        data = getattr(np, component)(img.data) if component in ("abs", "angle") else getattr(img.data, component)
        return np.asarray(data, dtype=np.float64), img.pixel_pitch
    if isinstance(img, RealImage):
        return img.data, img.pixel_pitch
    raise TypeError(f"cannot write {type(img).__name__}")


def write_raster(img, path, fmt: str = "mrc", component: str | None = None, provenance: dict | None = None) -> Path:
    """Write a float32 raster plus ``<path>.json`` metadata and ``<stem>.png`` preview.

    ``fmt`` is ``"mrc"`` or ``"raw"`` (headerless little-endian float32).
    Returns the path of the raster.
    """
    data, pitch = _component(img, component)
    if not np.all(np.isfinite(data)):
        raise DomainError(f"refusing to write non-finite samples to {path}")
    path = Path(path)
    f32 = data.astype("<f4")
    try:
        if fmt == "mrc":
            write_mrc(path, f32, pitch)
        elif fmt == "raw":
            path.write_bytes(f32.tobytes())
        else:
            raise DomainError(f"unknown raster format {fmt!r}")
        meta = {
            "format": fmt,
            "dtype": "float32",
            "height": int(f32.shape[0]),
            "width": int(f32.shape[1]),
            "pixel_pitch_m": pitch,
            "min": float(f32.min()),
            "max": float(f32.max()),
            "component": component,
            "provenance": provenance or {},
        }
        path.with_name(path.name + ".json").write_text(json.dumps(meta, indent=2, sort_keys=True) + "\n")
        Image.fromarray(preview_bytes(f32.astype(np.float64)), mode="L").save(path.with_suffix(".png"))
    except OSError as exc:
        raise OSError(f"failed writing raster {path}: {exc}") from exc
    return path


def read_raw(path, height: int, width: int) -> np.ndarray:
    return np.fromfile(path, dtype="<f4").reshape(height, width)


def plot_curve(x, y, path, xlabel: str, ylabel: str, marker_x: float | None = None) -> None:
    import matplotlib

    matplotlib.use("Agg")
    import matplotlib.pyplot as plt

    fig, ax = plt.subplots(figsize=(5, 3.5), dpi=100)
    ax.plot(x, y, lw=1)
    if marker_x is not None:
        ax.axvline(marker_x, color="r", lw=0.8, ls="--")
    ax.set_xlabel(xlabel)
    ax.set_ylabel(ylabel)
    fig.tight_layout()
    # fixed metadata keeps the PNG bytes reproducible
    fig.savefig(path, metadata={"Software": None})
    plt.close(fig)
