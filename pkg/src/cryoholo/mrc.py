"""Minimal reader/writer for single-slice MRC rasters.

Supports modes 0 (int8), 1 (int16), 2 (float32) and 6 (uint16) in either
byte order. Only NZ = 1 images are accepted.
"""

from __future__ import annotations

import struct
from dataclasses import dataclass
from pathlib import Path

import numpy as np

from .types import RealImage

HEADER_BYTES = 1024
_MODES = {0: "i1", 1: "i2", 2: "f4", 6: "u2"}
_MAX_DIM = 1 << 16


class FormatError(ValueError):
    """Malformed or unsupported raster file."""

    def __init__(self, message: str, offset: int | None = None):
        if offset is not None:
            message = f"{message} (byte offset {offset})"
        super().__init__(message)
        self.offset = offset


@dataclass(frozen=True)
class MicrographHeader:
    width: int
    height: int
    mode: int
    pixel_pitch: float | None  # meters; None when the cell is empty
    byte_order: str  # "<" or ">"
    data_offset: int = HEADER_BYTES


def _byte_order(raw: bytes) -> str:
    stamp = raw[212]
    if stamp == 0x44:
        return "<"
    if stamp == 0x11:
        return ">"
    # no machine stamp: choose the order that yields a known mode
    for order in "<>":
        (mode,) = struct.unpack_from(order + "i", raw, 12)
        if mode in _MODES:
            return order
    raise FormatError("cannot determine byte order", 212)


def read_header(raw: bytes) -> MicrographHeader:
    if len(raw) < HEADER_BYTES:
        raise FormatError(f"file shorter than the {HEADER_BYTES}-byte header", len(raw))
    order = _byte_order(raw)
    nx, ny, nz, mode = struct.unpack_from(order + "4i", raw, 0)
    mx, my, mz = struct.unpack_from(order + "3i", raw, 28)
    xlen, ylen, zlen = struct.unpack_from(order + "3f", raw, 40)
    (nsymbt,) = struct.unpack_from(order + "i", raw, 92)
    if mode not in _MODES:
        raise FormatError(f"unsupported MRC mode {mode}", 12)
    for value, offset, name in ((nx, 0, "NX"), (ny, 4, "NY")):
        if value < 2:
            raise FormatError(f"{name}={value} must be at least 2", offset)
        if value > _MAX_DIM:
            raise FormatError(f"{name}={value} exceeds the supported size", offset)
    if nz != 1:
        raise FormatError(f"only single-slice images are supported, NZ={nz}", 8)
    if nsymbt < 0:
        raise FormatError(f"negative extended header size {nsymbt}", 92)
    pitch = None
    if mx > 0 and xlen > 0:
        pitch = xlen / mx * 1e-10  # cell lengths are in Angstrom
    return MicrographHeader(
        width=nx, height=ny, mode=mode, pixel_pitch=pitch, byte_order=order, data_offset=HEADER_BYTES + nsymbt
    )


def read_micrograph(path, pixel_pitch: float | None = None) -> tuple[RealImage, MicrographHeader]:
    """Read an MRC image.

    ``pixel_pitch`` [m] overrides the value derived from the header cell.
    Samples keep their stored values (promoted to float64).
    """
    raw = Path(path).read_bytes()
    header = read_header(raw)
    dtype = np.dtype(_MODES[header.mode]).newbyteorder(header.byte_order)
    need = header.width * header.height * dtype.itemsize
    end = header.data_offset + need
    if len(raw) < end:
        raise FormatError(f"truncated data: expected {need} bytes of samples", len(raw))
    data = np.frombuffer(raw, dtype=dtype, count=header.width * header.height, offset=header.data_offset)
    data = data.reshape(header.height, header.width).astype(np.float64)
    pitch = pixel_pitch if pixel_pitch is not None else header.pixel_pitch
    if pitch is None:
        raise FormatError("header carries no pixel size and none was supplied", 40)
    return RealImage(data, pitch), header


def write_mrc(path, data: np.ndarray, pixel_pitch: float, byte_order: str = "<", mode: int = 2) -> None:
    """Write a 2-D array as a single-slice MRC file."""
    data = np.asarray(data)
    ny, nx = data.shape
    dtype = np.dtype(_MODES[mode]).newbyteorder(byte_order)
    samples = data.astype(dtype)
    header = bytearray(HEADER_BYTES)
    struct.pack_into(byte_order + "4i", header, 0, nx, ny, 1, mode)
    struct.pack_into(byte_order + "3i", header, 28, nx, ny, 1)
    cell = pixel_pitch * 1e10
    struct.pack_into(byte_order + "3f", header, 40, cell * nx, cell * ny, cell)
    struct.pack_into(byte_order + "3f", header, 52, 90.0, 90.0, 90.0)
    struct.pack_into(byte_order + "3i", header, 64, 1, 2, 3)
    as_float = samples.astype(np.float64)
    struct.pack_into(byte_order + "3f", header, 76, as_float.min(), as_float.max(), as_float.mean())
    header[208:212] = b"MAP "
    header[212:214] = b"\x44\x44" if byte_order == "<" else b"\x11\x11"
    with open(path, "wb") as fh:
        fh.write(bytes(header))
        fh.write(samples.tobytes())
