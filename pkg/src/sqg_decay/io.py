"""Snapshot files, CSV tables and the run manifest."""

from __future__ import annotations

import csv
import json
import platform
import struct
from dataclasses import dataclass
from pathlib import Path
from typing import Iterable, Sequence

import numpy as np

from .spectral import GridSpec, SpectralField

__all__ = ["SnapshotFile", "write_snapshot", "read_snapshot", "write_csv", "write_manifest", "MAGIC"]

MAGIC = b"SQGD1"
ENDIAN_TAG = b"L"
# magic, endianness tag, n, L, alpha, time
_HEADER = struct.Struct("<5scIddd")


@dataclass(frozen=True)
class SnapshotFile:
    """Binary field snapshot.

    Layout: a 34-byte little-endian header (magic "SQGD1", endianness tag "L",
    uint32 n, float64 L, float64 alpha, float64 time) followed by n^2
    (real, imag) float64 pairs. The pairs run over the wavenumber lattice in
    row-major order with k from -n/2 to n/2 - 1 along each axis.
    """

    field: SpectralField
    alpha: float
    time: float

    def to_bytes(self) -> bytes:
        grid = self.field.grid
        header = _HEADER.pack(MAGIC, ENDIAN_TAG, grid.n_points, grid.box_length, self.alpha, self.time)
        payload = np.fft.fftshift(self.field.coefficients).astype("<c16", copy=False).tobytes()
        return header + payload

    @classmethod
    def from_bytes(cls, data: bytes) -> "SnapshotFile":
        if len(data) < _HEADER.size:
            raise ValueError("snapshot too short for its header")
        magic, tag, n, length, alpha, time = _HEADER.unpack_from(data)
        if magic != MAGIC:
            raise ValueError(f"bad snapshot magic {magic!r}")
        if tag != ENDIAN_TAG:
            raise ValueError(f"unsupported endianness tag {tag!r}")
        expected = 2 * 8 * n * n
        payload = data[_HEADER.size :]
        if len(payload) != expected:
            raise ValueError(f"snapshot payload is {len(payload)} bytes, expected {expected}")
        grid = GridSpec(n, length)
        coeffs = np.fft.ifftshift(np.frombuffer(payload, dtype="<c16").reshape(n, n)).astype(np.complex128)
        return cls(SpectralField(coeffs, grid), alpha, time)


def write_snapshot(path: str | Path, field: SpectralField, alpha: float, time: float) -> Path:
    path = Path(path)
    path.write_bytes(SnapshotFile(field, alpha, time).to_bytes())
    return path


def read_snapshot(path: str | Path) -> SnapshotFile:
    return SnapshotFile.from_bytes(Path(path).read_bytes())


def _fmt(value) -> str:
    if isinstance(value, str):
        return value
    if value is None:
        return ""
    if isinstance(value, (bool, np.bool_)):
        return "true" if value else "false"
    if isinstance(value, (int, np.integer)):
        return str(int(value))
    return "%.17g" % float(value)


def write_csv(path: str | Path, header: Sequence[str], rows: Iterable[Sequence]) -> Path:
    """Write a CSV with a header row; floats use 17 significant digits so values round-trip."""
    path = Path(path)
    with path.open("w", newline="") as fh:
        writer = csv.writer(fh, lineterminator="\n")
        writer.writerow(header)
        for row in rows:
            if len(row) != len(header):
                raise ValueError(f"row has {len(row)} fields, header has {len(header)}")
            writer.writerow([_fmt(v) for v in row])
    return path


def write_manifest(path: str | Path, config: dict, outputs: Sequence[str], wall_time: float, summary: dict | None = None) -> Path:
    import scipy

    from . import __version__

    manifest = {
        "config": config,
        "versions": {
            "sqg_decay": __version__,
            "python": platform.python_version(),
            "numpy": np.__version__,
            "scipy": scipy.__version__,
        },
        "wall_time_seconds": wall_time,
        "outputs": list(outputs),
        "summary": summary or {},
    }
    path = Path(path)
    path.write_text(json.dumps(manifest, indent=2, sort_keys=True, default=str) + "\n")
    return path
