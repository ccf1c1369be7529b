"""Binary containers and CSV export for fields, Gramian blocks, trajectories.

Field container layout (all little-endian):

    magic  b"KPIF" | u8 version | u8 dimension | u32 nx | u32 ny (0 in 1D)
    | u32 truncation | nx[*ny] coefficients, each an (re, im) float64 pair

Matrix and trajectory containers follow the same pattern with magics
``KPIM`` and ``KPIT``. CSV exports use one row per coefficient with columns
``k, l, re, im`` and a fixed 17-significant-digit float format so reruns are
byte-identical.
"""

from __future__ import annotations

import struct
from pathlib import Path

import numpy as np

from .errors import DimensionError
from .fourier import SpectralField, TorusGrid
from .observe import GramianBlock

FIELD_MAGIC = b"KPIF"
MATRIX_MAGIC = b"KPIM"
TRAJECTORY_MAGIC = b"KPIT"
_VERSION = 1


def _fmt(x: float) -> str:
    return f"{x:.17g}"


def write_field(field: SpectralField, path: str | Path) -> None:
    grid = field.grid
    ny = grid.ny or 0
    header = struct.pack(
        "<4sBBIII", FIELD_MAGIC, _VERSION, grid.dimension, grid.nx, ny, grid.nx // 2
    )
    Path(path).write_bytes(header + field.coeffs.astype("<c16").tobytes())


def read_field(path: str | Path) -> SpectralField:
    raw = Path(path).read_bytes()
    head = struct.calcsize("<4sBBIII")
    magic, version, dim, nx, ny, _trunc = struct.unpack("<4sBBIII", raw[:head])
    if magic != FIELD_MAGIC or version != _VERSION:
        raise DimensionError(f"{path} is not a version-{_VERSION} field container")
    grid = TorusGrid(nx) if dim == 1 else TorusGrid(nx, ny)
    coeffs = np.frombuffer(raw[head:], dtype="<c16").reshape(grid.shape)
    return SpectralField(grid, coeffs.astype(np.complex128))


def field_to_csv(field: SpectralField, path: str | Path) -> None:
    grid = field.grid
    lines = ["k,l,re,im"]
    if grid.dimension == 1:
        for i, k in enumerate(grid.k_values):
            c = field.coeffs[i]
            lines.append(f"{k},0,{_fmt(c.real)},{_fmt(c.imag)}")
    else:
        for i, k in enumerate(grid.k_values):
            for j, l in enumerate(grid.l_values):
                c = field.coeffs[i, j]
                lines.append(f"{k},{l},{_fmt(c.real)},{_fmt(c.imag)}")
    Path(path).write_text("\n".join(lines) + "\n")


def field_to_json(field: SpectralField, path: str | Path) -> None:
    import json

    grid = field.grid
    records = []
    if grid.dimension == 1:
        for i, k in enumerate(grid.k_values):
            c = field.coeffs[i]
            records.append({"k": int(k), "l": 0, "re": c.real, "im": c.imag})
    else:
        for i, k in enumerate(grid.k_values):
            for j, l in enumerate(grid.l_values):
                c = field.coeffs[i, j]
                records.append({"k": int(k), "l": int(l), "re": c.real, "im": c.imag})
    payload = {"dimension": grid.dimension, "nx": grid.nx, "ny": grid.ny, "coefficients": records}
    Path(path).write_text(json.dumps(payload) + "\n")


def write_gramian(block: GramianBlock, path: str | Path) -> None:
    n = block.matrix.shape[0]
    header = struct.pack(
        "<4sBBiId",
        MATRIX_MAGIC,
        _VERSION,
        0 if block.axis == "x" else 1,
        block.fixed_freq,
        n,
        block.horizon,
    )
    body = block.indices.astype("<i4").tobytes() + block.matrix.astype("<c16").tobytes()
    Path(path).write_bytes(header + body)


def read_gramian(path: str | Path) -> GramianBlock:
    raw = Path(path).read_bytes()
    head = struct.calcsize("<4sBBiId")
    magic, version, axis, fixed, n, horizon = struct.unpack("<4sBBiId", raw[:head])
    if magic != MATRIX_MAGIC or version != _VERSION:
        raise DimensionError(f"{path} is not a version-{_VERSION} matrix container")
    idx_bytes = 4 * n
    indices = np.frombuffer(raw[head : head + idx_bytes], dtype="<i4").astype(int)
    matrix = np.frombuffer(raw[head + idx_bytes :], dtype="<c16").reshape(n, n)
    return GramianBlock(
        indices=indices,
        fixed_freq=fixed,
        horizon=horizon,
        matrix=matrix.astype(np.complex128),
        axis="x" if axis == 0 else "y",
    )


def eigenvalues_to_csv(blocks, path: str | Path) -> None:
    lines = ["fixed_freq,index,eigenvalue"]
    for block in blocks:
        for i, lam in enumerate(block.eigenvalues):
            lines.append(f"{block.fixed_freq},{i},{_fmt(float(lam))}")
    Path(path).write_text("\n".join(lines) + "\n")


def write_trajectory(traj, path: str | Path) -> None:
    grid = traj.phi_final.grid
    ny = grid.ny or 0
    header = struct.pack(
        "<4sBBIIId",
        TRAJECTORY_MAGIC,
        _VERSION,
        grid.dimension,
        grid.nx,
        ny,
        len(traj.samples),
        traj.horizon,
    )
    chunks = [header, traj.phi_final.coeffs.astype("<c16").tobytes()]
    for t, sample in zip(traj.times, traj.samples):
        chunks.append(struct.pack("<d", float(t)))
        chunks.append(sample.coeffs.astype("<c16").tobytes())
    Path(path).write_bytes(b"".join(chunks))


def rows_to_csv(header: list[str], rows: list[list], path: str | Path) -> None:
    """Write rows with deterministic float formatting."""
    lines = [",".join(header)]
    for row in rows:
        cells = [_fmt(c) if isinstance(c, float) else str(c) for c in row]
        lines.append(",".join(cells))
    Path(path).write_text("\n".join(lines) + "\n")
