"""Batch processing of particle ROIs: crop, normalize, focus, retrieve, write."""

from __future__ import annotations

import hashlib
import json
import logging
import math
import os
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass
from pathlib import Path

import numpy as np

from . import __version__
from .autofocus import MeritCurve, SweepConfig, sweep_focus
from .config import JobConfig, RoiSpec
from .mrc import read_micrograph
from .raster import plot_curve, write_raster
from .retrieval import RetrievalConfig, RetrievalResult, retrieve
from .types import DomainError, OpticsParams, RealImage, wavelength_from_voltage

log = logging.getLogger(__name__)


def crop_roi(img: RealImage, spec: RoiSpec) -> RealImage:
    """Cut a ``size x size`` block whose index ``size/2`` sits on the center pixel."""
    half = spec.size // 2
    y0 = spec.center_y - half
    x0 = spec.center_x - half
    h, w = img.shape
    if y0 < 0 or x0 < 0 or y0 + spec.size > h or x0 + spec.size > w:
        raise DomainError(
            f"ROI centered at ({spec.center_x}, {spec.center_y}) with size {spec.size} leaves the {w}x{h} image"
        )
    return RealImage(img.data[y0 : y0 + spec.size, x0 : x0 + spec.size], img.pixel_pitch)


def normalize_roi(roi: RealImage, policy: str = "mean-one") -> RealImage:
    if policy == "none":
        return roi
    if policy != "mean-one":
        raise DomainError(f"unknown normalization policy {policy!r}")
    mean = float(roi.data.mean())
    if not mean > 0:
        raise DomainError("cannot normalize an ROI with non-positive mean")
    return RealImage(roi.data / mean, roi.pixel_pitch)


@dataclass
class RoiOutcome:
    index: int
    spec: RoiSpec
    roi: RealImage | None = None
    curve: MeritCurve | None = None
    defocus: float | None = None
    result: RetrievalResult | None = None
    error: str | None = None


def base_params(cfg: JobConfig, pixel_pitch: float) -> OpticsParams:
    return OpticsParams(
        wavelength=wavelength_from_voltage(cfg.voltage),
        defocus=0.0,
        cs=cfg.cs,
        pixel_pitch=pixel_pitch,
        amplitude_contrast=cfg.amplitude_contrast,
    )


def focus_roi(roi: RealImage, cfg: JobConfig, params: OpticsParams, workers: int = 1) -> tuple[float, MeritCurve]:
    """Sweep the configured range; returns the signed de-focus and the curve."""
    if cfg.flip_defocus_sign:
        sweep = SweepConfig(-cfg.z_max, -cfg.z_min, cfg.z_step, params)
    else:
        sweep = SweepConfig(cfg.z_min, cfg.z_max, cfg.z_step, params)
    curve = sweep_focus(roi, sweep, workers=workers)
    return curve.peak_z, curve


def process_roi(index: int, image: RealImage, spec: RoiSpec, cfg: JobConfig, params: OpticsParams) -> RoiOutcome:
    out = RoiOutcome(index=index, spec=spec)
    try:
        roi = normalize_roi(crop_roi(image, spec), cfg.normalize)
        out.roi = roi
        if cfg.defocus is not None:
            out.defocus = -cfg.defocus if cfg.flip_defocus_sign else cfg.defocus
        else:
            out.defocus, out.curve = focus_roi(roi, cfg, params)
        rcfg = RetrievalConfig(
            params=params.with_defocus(out.defocus),
            tau=cfg.tau,
            theta_stop=cfg.theta_stop,
            max_iters=cfg.max_iters,
            rng_seed=cfg.seed + index,
            init_spread=cfg.init_spread,
        )
        out.result = retrieve(roi, rcfg)
    except (DomainError, ValueError, FloatingPointError) as exc:
        log.warning("ROI %d failed: %s", index, exc)
        out.error = f"{type(exc).__name__}: {exc}"
    return out


def _json_float(x: float | None):
    if x is None or not math.isfinite(x):
        return None
    return x


def _write_outcome(out: RoiOutcome, out_dir: Path, provenance: dict) -> dict:
    stem = f"roi_{out.index:03d}"
    entry = {
        "roi": out.index,
        "center_x": out.spec.center_x,
        "center_y": out.spec.center_y,
        "size": out.spec.size,
    }
    if out.error is not None:
        entry.update(status="error", error=out.error)
        return entry
    prov = dict(provenance, roi=out.index)
    if out.curve is not None:
        (out_dir / f"{stem}_merit.txt").write_text(out.curve.to_text())
        plot_curve(
            out.curve.z_values * 1e6, out.curve.merit, out_dir / f"{stem}_merit.png",
            "z [um]", "merit", marker_x=out.curve.peak_z * 1e6,
        )
    res = out.result
    write_raster(out.roi, out_dir / f"{stem}_roi.mrc", provenance=prov)
    write_raster(res.amplitude, out_dir / f"{stem}_amplitude.mrc", provenance=prov)
    write_raster(res.phase, out_dir / f"{stem}_phase.mrc", provenance=prov)
    write_raster(res.reprojection, out_dir / f"{stem}_reprojection.mrc", provenance=prov)
    write_raster(res.exit_wave, out_dir / f"{stem}_exit_real.mrc", component="real", provenance=prov)
    write_raster(res.exit_wave, out_dir / f"{stem}_exit_imag.mrc", component="imag", provenance=prov)
    with open(out_dir / f"{stem}_iterations.tsv", "w") as fh:
        fh.write("iter\ttheta_deg\trelative_error\n")
        for i, (th, e) in enumerate(zip(res.theta_history, res.error_history), 1):
            fh.write(f"{i}\t{th:.10g}\t{e:.10g}\n")
    entry.update(
        status="ok",
        defocus_m=out.defocus,
        defocus_source="pinned" if out.curve is None else "sweep",
        final_error=_json_float(res.final_error),
        iterations=res.iterations,
        converged=res.converged,
        final_theta_deg=_json_float(res.theta_history[-1]) if res.theta_history else None,
    )
    return entry


def run_job(cfg: JobConfig, image: RealImage | None = None) -> dict:
    """Process every ROI of a job and write rasters plus ``report.jsonl``.

    ``image`` may be passed directly instead of reading ``cfg.input``.
    Per-ROI failures are recorded in the report; config or input errors raise.
    """
    if image is None:
        if not cfg.input:
            raise DomainError("job has no input micrograph")
        image, _ = read_micrograph(cfg.input, pixel_pitch=cfg.pixel_pitch)
    elif cfg.pixel_pitch is not None:
        image = RealImage(image.data, cfg.pixel_pitch)
    params = base_params(cfg, image.pixel_pitch)
    out_dir = Path(cfg.out_dir)
    out_dir.mkdir(parents=True, exist_ok=True)

    # only settings that affect the numbers go into the hash
    hashed = {k: v for k, v in cfg.to_dict().items() if k not in ("out_dir", "workers")}
    config_blob = json.dumps(hashed, sort_keys=True, default=str)
    provenance = {
        "package": "cryoholo",
        "version": __version__,
        "config_sha256": hashlib.sha256(config_blob.encode()).hexdigest(),
    }

    workers = cfg.workers or os.cpu_count() or 1
    jobs = list(enumerate(cfg.rois))
    if workers > 1 and len(jobs) > 1:
        with ThreadPoolExecutor(max_workers=workers) as pool:
            outcomes = list(pool.map(lambda j: process_roi(j[0], image, j[1], cfg, params), jobs))
    else:
        outcomes = [process_roi(i, image, spec, cfg, params) for i, spec in jobs]

    # single writer, ROI order
    entries = [_write_outcome(o, out_dir, provenance) for o in outcomes]
    ok = [e for e in entries if e["status"] == "ok"]
    defoci = np.array([e["defocus_m"] for e in ok if e["defocus_source"] == "sweep"])
    summary = {
        "summary": True,
        "n_rois": len(entries),
        "n_ok": len(ok),
        "n_failed": len(entries) - len(ok),
        "defocus_mean_m": float(defoci.mean()) if defoci.size else None,
        "defocus_std_m": float(defoci.std()) if defoci.size else None,
    }
    with open(out_dir / "report.jsonl", "w") as fh:
        for e in entries + [summary]:
            fh.write(json.dumps(e, sort_keys=True) + "\n")
    return {"rois": entries, "summary": summary, "ok": len(ok) == len(entries)}
