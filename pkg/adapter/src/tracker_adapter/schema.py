"""Track-file writer.

The JSON layout here is the interchange contract with trackstab's
loader: schema_version 1, row-major positions[T][N][2] in (x, y) order,
visibility[T][N] booleans, and null at any position that is not finite.
Visible entries must be finite; invisible entries may carry a finite
last-known position, which is preserved as written.
"""

import json
from pathlib import Path

import numpy as np

from .errors import InvalidConfigError

SCHEMA_VERSION = 1


def validate_track_arrays(
    positions: np.ndarray, visibility: np.ndarray, width: int, height: int
) -> tuple[np.ndarray, np.ndarray]:
    positions = np.asarray(positions, dtype=np.float64)
    visibility = np.asarray(visibility)
    if width < 1 or height < 1:
        raise InvalidConfigError(f"image size must be positive, got {width}x{height}")
    if positions.ndim != 3 or positions.shape[2] != 2:
        raise InvalidConfigError(
            f"positions must have shape (T, N, 2), got {positions.shape}"
        )
    if visibility.shape != positions.shape[:2]:
        raise InvalidConfigError(
            f"visibility shape {visibility.shape} does not match "
            f"positions {positions.shape[:2]}"
        )
    if visibility.dtype != np.bool_:
        raise InvalidConfigError(f"visibility must be boolean, got {visibility.dtype}")
    finite = np.isfinite(positions).all(axis=2)
    bad = visibility & ~finite
    if bad.any():
        t, i = np.argwhere(bad)[0]
        raise InvalidConfigError(
            f"track {i} is visible at frame {t} but its position is not finite"
        )
    return positions, visibility


def write_track_file(
    path: str | Path,
    source_tag: str,
    width: int,
    height: int,
    positions: np.ndarray,
    visibility: np.ndarray,
) -> Path:
    positions, visibility = validate_track_arrays(positions, visibility, width, height)
    num_frames, num_points = positions.shape[:2]
    rows = []
    for t in range(num_frames):
        row = []
        for i in range(num_points):
            p = positions[t, i]
            row.append([float(p[0]), float(p[1])] if np.isfinite(p).all() else None)
        rows.append(row)
    doc = {
        "schema_version": SCHEMA_VERSION,
        "source_tag": source_tag,
        "width": int(width),
        "height": int(height),
        "num_points": int(num_points),
        "num_frames": int(num_frames),
        "positions": rows,
        "visibility": [[bool(v) for v in row] for row in visibility],
    }
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    with open(path, "w") as fh:
        json.dump(doc, fh, allow_nan=False, sort_keys=True, indent=1)
        fh.write("\n")
    return path
