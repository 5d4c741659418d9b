"""CSV and binary snapshot persistence.

Every file is written to a temporary sibling first and moved into place, so
readers never see a partial result. CSV numbers use ``repr``-exact ``.17g``
formatting, which is locale independent and round-trips doubles bit for bit.
"""

from __future__ import annotations

import csv
import os
import struct
import tempfile
from pathlib import Path

import numpy as np

from .diagnostics import ConvergenceRow, ConvergenceTable, DiagnosticsRecord
from .model import Grid, TraceSeries, Wavefunction

TRACE_COLUMNS = ("t", "re_g", "im_g")
DIAG_COLUMNS = ("t", "Q", "H", "h1", "boundary_mass", "flags")
TABLE_COLUMNS = ("epsilon", "sup_distance", "R", "tau")

SNAPSHOT_MAGIC = b"DNLS1\0"
SNAPSHOT_VERSION = 1
_HEADER = struct.Struct("<6sIQdd")


class SnapshotError(ValueError):
    pass


def provenance(config_sha256: str | None = None) -> str:
    from . import __version__

    return f"# deltanls {__version__} config_sha256={config_sha256 or 'none'}"


def format_float(x: float) -> str:
    return format(float(x), ".17g")


def atomic_write(path, data: bytes) -> Path:
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    fd, tmp = tempfile.mkstemp(prefix=f".{path.name}.", dir=path.parent)
    try:
        with os.fdopen(fd, "wb") as fh:
            fh.write(data)
        os.replace(tmp, path)
    except BaseException:
        Path(tmp).unlink(missing_ok=True)
        raise
    return path


def _write_rows(path, columns, rows, config_sha256) -> Path:
    lines = [provenance(config_sha256), ",".join(columns)]
    lines += [",".join(row) for row in rows]
    return atomic_write(path, ("\n".join(lines) + "\n").encode("ascii"))


def _read_rows(path, columns) -> list[dict[str, str]]:
    with open(path, newline="", encoding="ascii") as fh:
        body = [line for line in fh if not line.startswith("#")]
    reader = csv.DictReader(body)
    if tuple(reader.fieldnames or ()) != tuple(columns):
        raise ValueError(f"{path}: expected columns {list(columns)}, got {reader.fieldnames}")
    return list(reader)


# {{{ csv


def write_trace_csv(g: TraceSeries, path, config_sha256: str | None = None) -> Path:
    f = format_float
    rows = ((f(t), f(v.real), f(v.imag)) for t, v in zip(g.times, g.values))
    return _write_rows(path, TRACE_COLUMNS, rows, config_sha256)


def read_trace_csv(path) -> tuple[np.ndarray, np.ndarray]:
    """Times and complex values of a trace file."""
    rows = _read_rows(path, TRACE_COLUMNS)
    t = np.array([float(r["t"]) for r in rows])
    g = np.array([complex(float(r["re_g"]), float(r["im_g"])) for r in rows])
    return t, g


def write_diag_csv(records, path, config_sha256: str | None = None) -> Path:
    f = format_float
    rows = ((f(r.t), f(r.Q), f(r.H), f(r.h1), f(r.boundary_mass), "|".join(r.flags))
            for r in records)
    return _write_rows(path, DIAG_COLUMNS, rows, config_sha256)


def read_diag_csv(path) -> list[DiagnosticsRecord]:
    out = []
    for r in _read_rows(path, DIAG_COLUMNS):
        flags = tuple(f for f in r["flags"].split("|") if f)
        out.append(DiagnosticsRecord(float(r["t"]), float(r["Q"]), float(r["H"]),
                                     float(r["h1"]), float(r["boundary_mass"]), flags=flags))
    return out


def write_table_csv(table: ConvergenceTable, path, config_sha256: str | None = None) -> Path:
    f = format_float
    rows = ((f(r.epsilon), f(r.sup_distance), f(r.R), f(r.tau)) for r in table.rows)
    return _write_rows(path, TABLE_COLUMNS, rows, config_sha256)


def read_table_csv(path) -> ConvergenceTable:
    rows = _read_rows(path, TABLE_COLUMNS)
    return ConvergenceTable(tuple(
        ConvergenceRow(float(r["epsilon"]), float(r["sup_distance"]), float(r["R"]), float(r["tau"]))
        for r in rows
    ))


# }}}


# {{{ snapshots


def write_snapshot(psi: Wavefunction, t: float, path) -> Path:
    grid = psi.grid
    header = _HEADER.pack(SNAPSHOT_MAGIC, SNAPSHOT_VERSION, grid.n, float(grid.L), float(t))
    payload = np.ascontiguousarray(psi.values, dtype="<c16").tobytes()
    return atomic_write(path, header + payload)


def read_snapshot(path) -> tuple[Wavefunction, float]:
    data = Path(path).read_bytes()
    if len(data) < _HEADER.size or data[:6] != SNAPSHOT_MAGIC:
        raise SnapshotError(f"{path}: not a DNLS snapshot")
    _, version, n, L, t = _HEADER.unpack_from(data)
    if version != SNAPSHOT_VERSION:
        raise SnapshotError(f"{path}: unsupported snapshot version {version}")
    payload = data[_HEADER.size :]
    if len(payload) != 16 * n:
        raise SnapshotError(
            f"{path}: header declares n = {n} samples but payload holds {len(payload) / 16:g}"
        )
    try:
        grid = Grid(L, n)
    except ValueError as exc:
        raise SnapshotError(f"{path}: invalid header: {exc}") from None
    values = np.frombuffer(payload, dtype="<c16").astype(np.complex128)
    return Wavefunction(grid, values), t


# }}}
