"""Command-line interface.

Subcommands ``focus``, ``retrieve``, ``simulate``, ``ctf-plot`` and ``run``
share one set of flags; every flag can also come from a ``key = value``
config file (``--config`` or the ``CRYOHOLO_CONFIG`` environment variable),
with flags taking precedence.
"""

from __future__ import annotations

import argparse
import json
import logging
import sys
from pathlib import Path

import numpy as np

from .config import ConfigError, JobConfig, apply_setting, default_config_path, parse_length, read_config_file
from .jobs import base_params, run_job
from .mrc import FormatError
from .optics import eval_ctf
from .raster import plot_curve, write_raster
from .synth import NoiseSpec, PhantomSpec, make_hologram, make_phantom
from .types import DomainError

log = logging.getLogger("cryoholo")

EXIT_OK, EXIT_ROI_FAILED, EXIT_CONFIG = 0, 1, 2

# flag -> config key; values stay strings so the config parser handles units
_JOB_FLAGS = {
    "input": "input",
    "pixel_pitch": "pixel_pitch",
    "voltage": "voltage",
    "cs": "cs",
    "amplitude_contrast": "amplitude_contrast",
    "defocus": "defocus",
    "sweep": "sweep",
    "tau": "tau",
    "theta_stop": "theta_stop",
    "max_iters": "max_iters",
    "seed": "seed",
    "init_spread": "init_spread",
    "normalize": "normalize",
    "out_dir": "out_dir",
    "workers": "workers",
}


def _add_job_flags(p: argparse.ArgumentParser) -> None:
    p.add_argument("--config", help="key = value config file")
    p.add_argument("--input", help="MRC micrograph")
    p.add_argument("--roi", action="append", metavar="X,Y[,SIZE]", help="particle ROI (repeatable)")
    p.add_argument("--pixel-pitch", help="sample pixel size with unit, e.g. 2.2A")
    p.add_argument("--voltage", help="accelerating voltage with unit, e.g. 120kV")
    p.add_argument("--cs", help="spherical aberration with unit, e.g. 2mm")
    p.add_argument("--amplitude-contrast", help="amplitude contrast fraction")
    p.add_argument("--defocus", help="pin the de-focus (skips the sweep), e.g. 3.67um")
    p.add_argument("--sweep", metavar="ZMIN:ZMAX:STEP", help="focus sweep, e.g. 2um:4um:5nm")
    p.add_argument("--flip-defocus-sign", action="store_true", default=None, help="use the opposite de-focus sign")
    p.add_argument("--tau", help="MGD step size")
    p.add_argument("--theta-stop", help="stop angle in degrees")
    p.add_argument("--max-iters", help="iteration cap")
    p.add_argument("--seed", help="seed of the random starting guess")
    p.add_argument("--init-spread", help="relative spread of the random start (1 = uniform on [0, 2m])")
    p.add_argument("--normalize", choices=("none", "mean-one"))
    p.add_argument("--out-dir", help="output directory")
    p.add_argument("--workers", help="ROI worker threads (0 = one per core)")


def build_job_config(args: argparse.Namespace) -> JobConfig:
    values: dict = {}
    path = args.config or default_config_path()
    if path:
        values.update(read_config_file(path))
    for attr, key in _JOB_FLAGS.items():
        raw = getattr(args, attr, None)
        if raw is not None:
            apply_setting(values, key, str(raw))
    if getattr(args, "roi", None):
        values["rois"] = []
        for r in args.roi:
            apply_setting(values, "roi", r)
    if getattr(args, "flip_defocus_sign", None):
        values["flip_defocus_sign"] = True
    try:
        return JobConfig(**values)
    except DomainError as exc:
        raise ConfigError(str(exc)) from exc


def _report_exit(report: dict) -> int:
    for entry in report["rois"]:
        print(json.dumps(entry, sort_keys=True))
    return EXIT_OK if report["ok"] else EXIT_ROI_FAILED


def cmd_run(args) -> int:
    cfg = build_job_config(args)
    return _report_exit(run_job(cfg))


def cmd_retrieve(args) -> int:
    cfg = build_job_config(args)
    if cfg.defocus is None:
        raise ConfigError("retrieve needs --defocus; use 'run' to estimate it")
    return _report_exit(run_job(cfg))


def cmd_focus(args) -> int:
    from .autofocus import SweepConfig, sweep_focus
    from .jobs import crop_roi, normalize_roi
    from .mrc import read_micrograph

    cfg = build_job_config(args)
    if not cfg.input:
        raise ConfigError("focus needs --input")
    image, _ = read_micrograph(cfg.input, pixel_pitch=cfg.pixel_pitch)
    params = base_params(cfg, image.pixel_pitch)
    out_dir = Path(cfg.out_dir)
    out_dir.mkdir(parents=True, exist_ok=True)
    lo, hi = (-cfg.z_max, -cfg.z_min) if cfg.flip_defocus_sign else (cfg.z_min, cfg.z_max)
    sweep = SweepConfig(lo, hi, cfg.z_step, params)
    failed = False
    for i, spec in enumerate(cfg.rois):
        try:
            roi = normalize_roi(crop_roi(image, spec), cfg.normalize)
            curve = sweep_focus(roi, sweep, workers=cfg.workers or 1)
        except DomainError as exc:
            failed = True
            print(json.dumps({"roi": i, "status": "error", "error": str(exc)}))
            continue
        (out_dir / f"roi_{i:03d}_merit.txt").write_text(curve.to_text())
        plot_curve(curve.z_values * 1e6, curve.merit, out_dir / f"roi_{i:03d}_merit.png", "z [um]", "merit",
                   marker_x=curve.peak_z * 1e6)
        print(json.dumps({"roi": i, "status": "ok", "defocus_m": curve.peak_z}))
    return EXIT_ROI_FAILED if failed else EXIT_OK


def cmd_simulate(args) -> int:
    cfg = build_job_config(args)
    if cfg.defocus is None:
        raise ConfigError("simulate needs --defocus")
    pitch = cfg.pixel_pitch if cfg.pixel_pitch is not None else 2.2e-10
    params = base_params(cfg, pitch).with_defocus(cfg.defocus)
    radii = tuple(float(r) for r in args.radii.split(",")) if args.radii else None
    spec_kw = dict(kind=args.phantom, peak_phase=args.peak_phase, amplitude_contrast=args.phantom_absorption,
                   height=args.size, width=args.size, pixel_pitch=pitch)
    if radii:
        spec_kw["radii"] = radii
    phantom, theta = make_phantom(PhantomSpec(**spec_kw))
    noise = NoiseSpec(args.noise, args.noise_level, cfg.seed)
    holo = make_hologram(phantom, params, noise)
    out_dir = Path(cfg.out_dir)
    out_dir.mkdir(parents=True, exist_ok=True)
    prov = {"phantom": spec_kw, "defocus_m": cfg.defocus, "noise": [noise.model, noise.level, noise.seed]}
    write_raster(holo, out_dir / "hologram.mrc", provenance=prov)
    write_raster(phantom, out_dir / "truth_phase.mrc", component="angle", provenance=prov)
    print(json.dumps({"hologram": str(out_dir / "hologram.mrc"), "truth_phase": str(out_dir / "truth_phase.mrc")}))
    return EXIT_OK


def cmd_ctf_plot(args) -> int:
    cfg = build_job_config(args)
    if cfg.defocus is None:
        raise ConfigError("ctf-plot needs --defocus")
    pitch = cfg.pixel_pitch if cfg.pixel_pitch is not None else 2.2e-10
    params = base_params(cfg, pitch).with_defocus(cfg.defocus)
    rho_max = parse_length(args.rho_max) if args.rho_max else None
    nyquist = 1 / (2 * pitch)
    # rho_max is given as a length period; convert to a frequency
    top = 1 / rho_max if rho_max else nyquist
    rho = np.linspace(0.0, top, args.samples)
    ctf = eval_ctf(params, rho)
    out_dir = Path(cfg.out_dir)
    out_dir.mkdir(parents=True, exist_ok=True)
    with open(out_dir / "ctf.txt", "w") as fh:
        fh.write("# rho_per_nm ctf\n")
        for r, c in zip(rho, ctf):
            fh.write(f"{r * 1e-9:.8f} {c:.10f}\n")
    plot_curve(rho * 1e-9, ctf, out_dir / "ctf.png", "spatial frequency [1/nm]", "CTF")
    print(json.dumps({"ctf": str(out_dir / "ctf.txt")}))
    return EXIT_OK


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="cryoholo", description="De-focus estimation and phase retrieval for particle ROIs in cryo-EM micrographs."
    )
    parser.add_argument("-v", "--verbose", action="store_true")
    sub = parser.add_subparsers(dest="command", required=True)

    for name, func, helptext in (
        ("run", cmd_run, "focus sweep + phase retrieval for every ROI"),
        ("focus", cmd_focus, "focus sweep only"),
        ("retrieve", cmd_retrieve, "phase retrieval at a pinned de-focus"),
    ):
        p = sub.add_parser(name, help=helptext)
        _add_job_flags(p)
        p.set_defaults(func=func)

    p = sub.add_parser("simulate", help="write a synthetic hologram and its ground-truth phase")
    _add_job_flags(p)
    p.add_argument("--phantom", default="disk", choices=("gaussian-blob", "disk", "annulus", "multi-blob"))
    p.add_argument("--peak-phase", type=float, default=0.3)
    p.add_argument("--phantom-absorption", type=float, default=0.0)
    p.add_argument("--radii", help="comma-separated phantom radii in pixels")
    p.add_argument("--size", type=int, default=256)
    p.add_argument("--noise", default="none", choices=("none", "gaussian", "poisson"))
    p.add_argument("--noise-level", type=float, default=0.0, help="SNR (gaussian) or dose per pixel (poisson)")
    p.set_defaults(func=cmd_simulate)

    p = sub.add_parser("ctf-plot", help="tabulate and plot the CTF")
    _add_job_flags(p)
    p.add_argument("--rho-max", help="finest period to plot, e.g. 5A (default: Nyquist)")
    p.add_argument("--samples", type=int, default=2000)
    p.set_defaults(func=cmd_ctf_plot)
    return parser


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING, format="%(levelname)s %(message)s")
    try:
        return args.func(args)
    except (ConfigError, FormatError, DomainError, OSError) as exc:
        print(f"cryoholo {args.command}: {exc}", file=sys.stderr)
        return EXIT_CONFIG


if __name__ == "__main__":
    sys.exit(main())
