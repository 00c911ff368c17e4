"""Field snapshot files.

Layout::

    QCSNAP 1\\n
    key=value\\n      (nx, ny, lx, ly, x_offset, y_offset, zeta, scenario)
    ...
    END\\n
    <nx*ny complex values>

The payload is ``nx*ny`` pairs ``(re, im)`` of little-endian IEEE-754
float64, row-major with x varying fastest (index ``iy*nx + ix``), i.e.
exactly ``ny*nx*16`` bytes.  Floats in the header use ``repr`` so they
round-trip bit-exactly.
"""

from __future__ import annotations

from dataclasses import dataclass
from pathlib import Path

import numpy as np

from .grid import TransverseGrid

MAGIC = b"QCSNAP 1\n"
_DTYPE = np.dtype("<c16")


class SnapshotError(ValueError):
    pass


@dataclass(frozen=True)
class Snapshot:
    grid: TransverseGrid
    values: np.ndarray
    zeta: float = 0.0
    scenario: str = ""


def write_snapshot(path, grid: TransverseGrid, values, zeta: float = 0.0, scenario: str = "") -> Path:
    values = np.ascontiguousarray(grid.check(values), dtype=_DTYPE)
    if "\n" in scenario or "=" in scenario:
        raise SnapshotError("scenario id may not contain newlines or '='")
    header = {
        "nx": grid.nx, "ny": grid.ny, "lx": repr(float(grid.lx)), "ly": repr(float(grid.ly)),
        "x_offset": repr(float(grid.x_offset)), "y_offset": repr(float(grid.y_offset)),
        "zeta": repr(float(zeta)), "scenario": scenario,
    }
    path = Path(path)
    with open(path, "wb") as fh:
        fh.write(MAGIC)
        for key, val in header.items():
            fh.write(f"{key}={val}\n".encode("ascii"))
        fh.write(b"END\n")
        fh.write(values.tobytes(order="C"))
    return path


def read_snapshot(path) -> Snapshot:
    with open(path, "rb") as fh:
        if fh.readline() != MAGIC:
            raise SnapshotError(f"{path}: not a snapshot file")
        header = {}
        while True:
            line = fh.readline()
            if not line:
                raise SnapshotError(f"{path}: truncated header")
            line = line.decode("ascii").rstrip("\n")
            if line == "END":
                break
            key, sep, val = line.partition("=")
            if not sep:
                raise SnapshotError(f"{path}: malformed header line {line!r}")
            header[key] = val
        payload = fh.read()
    try:
        grid = TransverseGrid(int(header["nx"]), int(header["ny"]), float(header["lx"]), float(header["ly"]),
                              float(header["x_offset"]), float(header["y_offset"]))
        zeta = float(header["zeta"])
    except KeyError as exc:
        raise SnapshotError(f"{path}: missing header key {exc}") from None
    expected = grid.nx * grid.ny * _DTYPE.itemsize
    if len(payload) != expected:
        raise SnapshotError(f"{path}: payload has {len(payload)} bytes, expected {expected}")
    values = np.frombuffer(payload, dtype=_DTYPE).reshape(grid.shape).astype(complex)
    return Snapshot(grid, values, zeta, header.get("scenario", ""))
