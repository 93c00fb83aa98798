"""Bit-stable file formats: particle CSVs, cell-field CSVs, manifests.

Reals are serialized with 17 significant digits, which round-trips binary
doubles exactly; files are UTF-8 with LF endings and mandatory headers, so
identical runs produce byte-identical outputs.
"""

from __future__ import annotations

import hashlib
import json
from pathlib import Path

import numpy as np

from .errors import ValidationError
from .gqs import WEIGHT_FLOOR, GeometricQuantumState

PARTICLES_HEADER = "t,alpha,x,p,phi"
CELLS_HEADER = "t,i,k,value"
CELLS_VECTOR_HEADER = "t,i,k,jp,jphi"
ENTROPY_HEADER = "t,entropy"
CLUSTERS_HEADER = "t,n_clusters"


def fmt(x: float) -> str:
    return format(float(x), ".17g")


class ParseError(ValidationError):
    """Malformed input file; message carries the file and line number."""


def _parse_float(token: str, path: Path, line_no: int, column: str) -> float:
    try:
        return float(token)
    except ValueError:
        raise ParseError(f"{path}:{line_no}: column '{column}' is not a number: {token!r}") from None


def _parse_int(token: str, path: Path, line_no: int, column: str) -> int:
    try:
        return int(token)
    except ValueError:
        raise ParseError(f"{path}:{line_no}: column '{column}' is not an integer: {token!r}") from None


def _check_header(line: str, expected: str, path: Path) -> None:
    if line.strip() != expected:
        raise ParseError(f"{path}:1: expected header '{expected}', got '{line.strip()}'")


def write_particles_csv(path, snapshots) -> None:
    path = Path(path)
    with open(path, "w", encoding="utf-8", newline="\n") as f:
        f.write(PARTICLES_HEADER + "\n")
        for snap in snapshots:
            t = fmt(snap.time)
            for alpha in range(snap.n_particles):
                f.write(f"{t},{alpha},{fmt(snap.weights[alpha])},"
                        f"{fmt(snap.points[alpha, 0])},{fmt(snap.points[alpha, 1])}\n")


def read_particles_csv(path) -> list[GeometricQuantumState]:
    """Rebuild swarm snapshots; rows must be grouped by time with alpha ascending."""
    path = Path(path)
    lines = path.read_text(encoding="utf-8").splitlines()
    if not lines:
        raise ParseError(f"{path}:1: empty file, expected header '{PARTICLES_HEADER}'")
    _check_header(lines[0], PARTICLES_HEADER, path)
    groups: list[tuple[float, list[tuple[float, float, float]]]] = []
    for line_no, line in enumerate(lines[1:], start=2):
        if not line.strip():
            continue
        parts = line.split(",")
        if len(parts) != 5:
            raise ParseError(f"{path}:{line_no}: expected 5 columns (t,alpha,x,p,phi), got {len(parts)}")
        t = _parse_float(parts[0], path, line_no, "t")
        alpha = _parse_int(parts[1], path, line_no, "alpha")
        x = _parse_float(parts[2], path, line_no, "x")
        p = _parse_float(parts[3], path, line_no, "p")
        phi = _parse_float(parts[4], path, line_no, "phi")
        if not groups or groups[-1][0] != t:
            groups.append((t, []))
        rows = groups[-1][1]
        if alpha != len(rows):
            raise ParseError(f"{path}:{line_no}: alpha {alpha} out of order, expected {len(rows)}")
        rows.append((x, p, phi))
    if not groups:
        raise ParseError(f"{path}:2: no data rows")
    sizes = {len(rows) for _, rows in groups}
    if len(sizes) != 1:
        raise ParseError(f"{path}: snapshots disagree on particle count: {sorted(sizes)}")
    snapshots = []
    for t, rows in groups:
        arr = np.array(rows, dtype=float)
        weights = arr[:, 0]
        points = arr[:, 1:3]
        chis = np.column_stack([np.sqrt(np.clip(1.0 - points[:, 0], 0.0, 1.0)).astype(complex),
                                np.sqrt(np.clip(points[:, 0], 0.0, 1.0)) * np.exp(1j * points[:, 1])])
        snapshots.append(GeometricQuantumState(
            weights=weights, chis=chis, points=points,
            coordinate_defined=weights > WEIGHT_FLOOR, time=t))
    return snapshots


def write_cells_csv(path, times, values: np.ndarray) -> None:
    """values: (T, n_p, n_phi) scalar field, one row per cell per snapshot."""
    path = Path(path)
    n_t, n_p, n_phi = values.shape
    if len(times) != n_t:
        raise ValidationError(f"time axis {len(times)} does not match field {n_t}")
    with open(path, "w", encoding="utf-8", newline="\n") as f:
        f.write(CELLS_HEADER + "\n")
        for t_idx in range(n_t):
            t = fmt(times[t_idx])
            for i in range(n_p):
                for k in range(n_phi):
                    f.write(f"{t},{i},{k},{fmt(values[t_idx, i, k])}\n")


def write_cells_vector_csv(path, times, values: np.ndarray) -> None:
    """values: (T, n_p, n_phi, 2) vector field for quiver rendering."""
    path = Path(path)
    n_t, n_p, n_phi, _ = values.shape
    if len(times) != n_t:
        raise ValidationError(f"time axis {len(times)} does not match field {n_t}")
    with open(path, "w", encoding="utf-8", newline="\n") as f:
        f.write(CELLS_VECTOR_HEADER + "\n")
        for t_idx in range(n_t):
            t = fmt(times[t_idx])
            for i in range(n_p):
                for k in range(n_phi):
                    f.write(f"{t},{i},{k},{fmt(values[t_idx, i, k, 0])},"
                            f"{fmt(values[t_idx, i, k, 1])}\n")


def read_cells_csv(path) -> tuple[np.ndarray, np.ndarray]:
    """Returns (times (T,), values (T, n_p, n_phi)); grid extent inferred."""
    path = Path(path)
    lines = path.read_text(encoding="utf-8").splitlines()
    if not lines:
        raise ParseError(f"{path}:1: empty file, expected header '{CELLS_HEADER}'")
    _check_header(lines[0], CELLS_HEADER, path)
    times: list[float] = []
    rows: list[tuple[int, int, int, float]] = []
    max_i = max_k = -1
    for line_no, line in enumerate(lines[1:], start=2):
        if not line.strip():
            continue
        parts = line.split(",")
        if len(parts) != 4:
            raise ParseError(f"{path}:{line_no}: expected 4 columns (t,i,k,value), got {len(parts)}")
        t = _parse_float(parts[0], path, line_no, "t")
        i = _parse_int(parts[1], path, line_no, "i")
        k = _parse_int(parts[2], path, line_no, "k")
        value = _parse_float(parts[3], path, line_no, "value")
        if i < 0 or k < 0:
            raise ParseError(f"{path}:{line_no}: negative cell index")
        if not times or times[-1] != t:
            times.append(t)
        rows.append((len(times) - 1, i, k, value))
        max_i = max(max_i, i)
        max_k = max(max_k, k)
    if not rows:
        raise ParseError(f"{path}:2: no data rows")
    values = np.zeros((len(times), max_i + 1, max_k + 1))
    for t_idx, i, k, value in rows:
        values[t_idx, i, k] = value
    return np.array(times), values


def write_series_csv(path, header: str, rows) -> None:
    path = Path(path)
    with open(path, "w", encoding="utf-8", newline="\n") as f:
        f.write(header + "\n")
        for row in rows:
            f.write(",".join(str(c) if isinstance(c, int) else fmt(c) for c in row) + "\n")


def sha256_file(path) -> str:
    digest = hashlib.sha256()
    with open(path, "rb") as f:
        for chunk in iter(lambda: f.read(65536), b""):
            digest.update(chunk)
    return digest.hexdigest()


def write_manifest(path, config: dict, output_files) -> None:
    """Resolved config, code version, and a checksum for every output file."""
    from . import __version__
    path = Path(path)
    outputs = {Path(p).name: sha256_file(p) for p in output_files}
    body = {"config": config, "version": __version__, "outputs": outputs}
    with open(path, "w", encoding="utf-8", newline="\n") as f:
        json.dump(body, f, indent=2, sort_keys=True)
        f.write("\n")
