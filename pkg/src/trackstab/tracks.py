"""Sparse point tracks: the TrackSet type, query samplers, and track-file I/O.

A track set stores, for N tracked points over T frames, the continuous
pixel-center position of every point in every frame plus a per-frame
visibility flag.  Frame-0 positions are by definition the query points
the tracks started from.

The JSON track file (schema_version 1) is the contract consumed from
external tracker adapters:

    {"schema_version": 1, "source_tag": "...", "width": W, "height": H,
     "num_points": N, "num_frames": T,
     "positions": [T][N] of [x, y] (or null where no finite position exists),
     "visibility": [T][N] of booleans}

A ``null`` position is only legal for an invisible point and loads as NaN.
"""

from __future__ import annotations

import json
from dataclasses import dataclass
from pathlib import Path

import numpy as np

from .errors import (
    DimensionMismatchError,
    InvalidParameterError,
    SchemaError,
)
from .imgcore import Frame

SAMPLING_STRATEGIES = ("uniform-grid", "random", "gftt")


@dataclass(frozen=True, eq=False)
class TrackSet:
    """Positions (T, N, 2) in (x, y) order and visibility (T, N) for N tracks.

    Invariants enforced here: positions are finite wherever visibility is
    true; non-finite entries at invisible slots are normalized to NaN so
    that save/load round-trips are exact.
    """

    positions: np.ndarray
    visibility: np.ndarray
    source_tag: str
    width: int
    height: int

    def __post_init__(self):
        pos = np.array(self.positions, dtype=np.float64, copy=True)
        vis = np.array(self.visibility, dtype=bool, copy=True)
        if pos.ndim != 3 or pos.shape[2] != 2 or pos.shape[0] < 1 or pos.shape[1] < 1:
            raise DimensionMismatchError(
                f"positions must have shape (T, N, 2) with T, N >= 1, got {pos.shape}"
            )
        if vis.shape != pos.shape[:2]:
            raise DimensionMismatchError(
                f"visibility shape {vis.shape} does not match positions {pos.shape[:2]}"
            )
        if self.width < 1 or self.height < 1:
            raise InvalidParameterError(
                f"track image dimensions must be positive, got {self.width}x{self.height}"
            )
        finite = np.isfinite(pos).all(axis=2)
        bad = vis & ~finite
        if bad.any():
            t, i = np.argwhere(bad)[0]
            raise SchemaError(
                f"track {i} at frame {t}: marked visible but position is not finite"
            )
        # canonicalize hidden garbage so file round-trips compare equal
        pos[~finite] = np.nan
        pos.setflags(write=False)
        vis.setflags(write=False)
        object.__setattr__(self, "positions", pos)
        object.__setattr__(self, "visibility", vis)

    @property
    def num_frames(self) -> int:
        return self.positions.shape[0]

    @property
    def num_points(self) -> int:
        return self.positions.shape[1]

    @property
    def queries(self) -> np.ndarray:
        """The frame-0 positions the tracks started from, shape (N, 2)."""
        return self.positions[0]

    def equals(self, other: "TrackSet") -> bool:
        return (
            self.source_tag == other.source_tag
            and self.width == other.width
            and self.height == other.height
            and np.array_equal(self.visibility, other.visibility)
            and np.array_equal(self.positions, other.positions, equal_nan=True)
        )


@dataclass(frozen=True)
class SamplingSpec:
    """Which query sampler to run and with what parameters."""

    strategy: str = "uniform-grid"
    grid_size: int = 16
    count: int = 100
    seed: int = 0
    gftt_quality: float = 0.01
    gftt_min_distance: float = 0.0

    def __post_init__(self):
        if self.strategy not in SAMPLING_STRATEGIES:
            raise InvalidParameterError(
                f"strategy must be one of {SAMPLING_STRATEGIES}, got {self.strategy!r}"
            )
        if self.strategy == "uniform-grid" and self.grid_size < 2:
            raise InvalidParameterError(
                f"uniform-grid needs grid_size >= 2, got {self.grid_size}"
            )
        if self.strategy in ("random", "gftt") and self.count < 1:
            raise InvalidParameterError(
                f"{self.strategy} sampling needs count >= 1, got {self.count}"
            )
        if not (0.0 < self.gftt_quality <= 1.0):
            raise InvalidParameterError(
                f"gftt_quality must be in (0, 1], got {self.gftt_quality}"
            )
        if self.gftt_min_distance < 0:
            raise InvalidParameterError(
                f"gftt_min_distance must be >= 0, got {self.gftt_min_distance}"
            )


def sample_uniform_grid(width: int, height: int, g: int) -> np.ndarray:
    """Corner-inclusive g x g grid of query points, row-major order.

    Point (i, j) sits at ``(j * (width-1) / (g-1), i * (height-1) / (g-1))``.
    """
    if g < 2:
        raise InvalidParameterError(f"grid side count must be >= 2, got {g}")
    if g > min(width, height):
        raise InvalidParameterError(
            f"grid side count {g} exceeds image side min({width}, {height})"
        )
    xs = np.arange(g, dtype=np.float64) * (width - 1) / (g - 1)
    ys = np.arange(g, dtype=np.float64) * (height - 1) / (g - 1)
    gx, gy = np.meshgrid(xs, ys)
    return np.column_stack([gx.ravel(), gy.ravel()])


def sample_random(width: int, height: int, n: int, seed: int) -> np.ndarray:
    """n points drawn uniformly over the integer pixel lattice, seeded."""
    if n < 1:
        raise InvalidParameterError(f"point count must be >= 1, got {n}")
    rng = np.random.default_rng(seed)
    xs = rng.integers(0, width, size=n)
    ys = rng.integers(0, height, size=n)
    return np.column_stack([xs, ys]).astype(np.float64)


def gftt_score_map(pixels: np.ndarray) -> np.ndarray:
    """Shi-Tomasi corner score: min eigenvalue of the 3x3-window structure tensor.

    Gradients are 3x3 Sobel with edge replication; the structure tensor is
    summed over the 3x3 neighborhood of each pixel.
    """
    p = np.pad(np.asarray(pixels, dtype=np.float64), 1, mode="edge")
    gx = (p[:-2, 2:] + 2.0 * p[1:-1, 2:] + p[2:, 2:]) - (
        p[:-2, :-2] + 2.0 * p[1:-1, :-2] + p[2:, :-2]
    )
    gy = (p[2:, :-2] + 2.0 * p[2:, 1:-1] + p[2:, 2:]) - (
        p[:-2, :-2] + 2.0 * p[:-2, 1:-1] + p[:-2, 2:]
    )

    def box3(img):
        q = np.pad(img, 1, mode="edge")
        return (
            q[:-2, :-2] + q[:-2, 1:-1] + q[:-2, 2:]
            + q[1:-1, :-2] + q[1:-1, 1:-1] + q[1:-1, 2:]
            + q[2:, :-2] + q[2:, 1:-1] + q[2:, 2:]
        )

    a = box3(gx * gx)
    b = box3(gx * gy)
    c = box3(gy * gy)
    # min eigenvalue of [[a, b], [b, c]]
    return 0.5 * ((a + c) - np.sqrt((a - c) ** 2 + 4.0 * b * b))


def sample_gftt(
    frame: Frame, n: int, quality: float = 0.01, min_distance: float = 0.0
) -> np.ndarray:
    """Up to n corner points by descending Shi-Tomasi score.

    Candidates below ``quality * max_score`` are dropped; survivors are
    accepted greedily in descending score (ties broken row-major) subject
    to pairwise distance >= min_distance.  A constant image yields an
    empty (0, 2) array.
    """
    if n < 1:
        raise InvalidParameterError(f"point count must be >= 1, got {n}")
    if not (0.0 < quality <= 1.0):
        raise InvalidParameterError(f"quality must be in (0, 1], got {quality}")
    if min_distance < 0:
        raise InvalidParameterError(f"min_distance must be >= 0, got {min_distance}")
    scores = gftt_score_map(frame.pixels)
    max_score = float(scores.max())
    if max_score <= 0.0:
        return np.zeros((0, 2), dtype=np.float64)
    flat = scores.ravel()
    # stable sort on negated scores: ties fall back to row-major pixel order
    order = np.argsort(-flat, kind="stable")
    order = order[flat[order] >= quality * max_score]
    w = frame.width
    accepted: list[tuple[float, float]] = []
    min_d2 = min_distance * min_distance
    for idx in order:
        x = float(idx % w)
        y = float(idx // w)
        if min_distance > 0 and any(
            (x - ax) ** 2 + (y - ay) ** 2 < min_d2 for ax, ay in accepted
        ):
            continue
        accepted.append((x, y))
        if len(accepted) == n:
            break
    if not accepted:
        return np.zeros((0, 2), dtype=np.float64)
    return np.array(accepted, dtype=np.float64)


def sample_queries(
    spec: SamplingSpec, frame: Frame | None, width: int, height: int
) -> np.ndarray:
    """Dispatch a SamplingSpec to the matching sampler (GFTT needs a frame)."""
    if spec.strategy == "uniform-grid":
        return sample_uniform_grid(width, height, spec.grid_size)
    if spec.strategy == "random":
        return sample_random(width, height, spec.count, spec.seed)
    if spec.strategy == "gftt":
        if frame is None:
            raise InvalidParameterError("gftt sampling needs a frame to score")
        return sample_gftt(frame, spec.count, spec.gftt_quality, spec.gftt_min_distance)
    raise InvalidParameterError(
        f"unknown sampling strategy {spec.strategy!r}; expected one of {SAMPLING_STRATEGIES}"
    )


def save_tracks(tracks: TrackSet, path: str | Path) -> Path:
    """Write the schema-version-1 JSON track file (lossless round-trip)."""
    path = Path(path)
    positions = []
    for t in range(tracks.num_frames):
        row = []
        for i in range(tracks.num_points):
            p = tracks.positions[t, i]
            if np.isfinite(p).all():
                row.append([float(p[0]), float(p[1])])
            else:
                row.append(None)
        positions.append(row)
    doc = {
        "schema_version": 1,
        "source_tag": tracks.source_tag,
        "width": tracks.width,
        "height": tracks.height,
        "num_points": tracks.num_points,
        "num_frames": tracks.num_frames,
        "positions": positions,
        "visibility": [
            [bool(v) for v in row] for row in tracks.visibility
        ],
    }
    path.parent.mkdir(parents=True, exist_ok=True)
    with open(path, "w") as fh:
        json.dump(doc, fh, allow_nan=False, sort_keys=True, indent=1)
        fh.write("\n")
    return path


def _require_key(doc: dict, key: str):
    if key not in doc:
        raise SchemaError(f"track file missing required key {key!r}")
    return doc[key]


def load_tracks(path: str | Path) -> TrackSet:
    """Read and validate a schema-version-1 JSON track file."""
    path = Path(path)
    if not path.is_file():
        raise SchemaError(f"track file not found: {path}")
    try:
        with open(path) as fh:
            doc = json.load(fh)
    except json.JSONDecodeError as exc:
        raise SchemaError(f"track file is not valid JSON: {exc}") from exc
    if not isinstance(doc, dict):
        raise SchemaError("track file must contain a JSON object at top level")

    version = _require_key(doc, "schema_version")
    if version != 1:
        raise SchemaError(f"unsupported track schema_version {version!r}; expected 1")
    source_tag = _require_key(doc, "source_tag")
    if not isinstance(source_tag, str):
        raise SchemaError("source_tag must be a string")
    width = _require_key(doc, "width")
    height = _require_key(doc, "height")
    num_points = _require_key(doc, "num_points")
    num_frames = _require_key(doc, "num_frames")
    for name, val in (("width", width), ("height", height),
                      ("num_points", num_points), ("num_frames", num_frames)):
        if not isinstance(val, int) or isinstance(val, bool) or val < 1:
            raise SchemaError(f"{name} must be a positive integer, got {val!r}")

    raw_pos = _require_key(doc, "positions")
    raw_vis = _require_key(doc, "visibility")
    if not isinstance(raw_pos, list) or len(raw_pos) != num_frames:
        raise SchemaError(
            f"positions: expected {num_frames} frames "
            f"(num_frames x num_points x 2 = {num_frames}x{num_points}x2), "
            f"got {len(raw_pos) if isinstance(raw_pos, list) else type(raw_pos).__name__}"
        )
    if not isinstance(raw_vis, list) or len(raw_vis) != num_frames:
        raise SchemaError(f"visibility: expected {num_frames} frames")

    positions = np.full((num_frames, num_points, 2), np.nan, dtype=np.float64)
    visibility = np.zeros((num_frames, num_points), dtype=bool)
    for t, (prow, vrow) in enumerate(zip(raw_pos, raw_vis)):
        if not isinstance(prow, list) or len(prow) != num_points:
            raise SchemaError(
                f"positions[{t}]: expected {num_points} entries, got "
                f"{len(prow) if isinstance(prow, list) else type(prow).__name__}"
            )
        if not isinstance(vrow, list) or len(vrow) != num_points:
            raise SchemaError(f"visibility[{t}]: expected {num_points} entries")
        for i, (p, v) in enumerate(zip(prow, vrow)):
            if not isinstance(v, bool):
                raise SchemaError(f"visibility[{t}][{i}] must be a boolean, got {v!r}")
            visibility[t, i] = v
            if p is None:
                if v:
                    raise SchemaError(
                        f"track {i} at frame {t}: marked visible but position is null"
                    )
                continue
            if (
                not isinstance(p, list)
                or len(p) != 2
                or not all(isinstance(c, (int, float)) and not isinstance(c, bool) for c in p)
            ):
                raise SchemaError(
                    f"positions[{t}][{i}] must be [x, y] or null, got {p!r}"
                )
            positions[t, i] = (float(p[0]), float(p[1]))
            if v and not np.isfinite(positions[t, i]).all():
                raise SchemaError(
                    f"track {i} at frame {t}: marked visible but position is not finite"
                )
    return TrackSet(positions, visibility, source_tag, width, height)
