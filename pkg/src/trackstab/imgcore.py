"""Core image types, interpolation, warping, resizing, and frame I/O.

Conventions used throughout the package:

* A frame is a 2-D float64 array of intensities in ``[0, 255]``.  Pixel
  ``(row r, col c)`` sits at continuous coordinate ``(x=c, y=r)``, i.e.
  coordinates are measured at pixel centers and x runs along columns.
* A displacement field stores, for every output pixel, the *source*
  coordinate to read from (backward warping): ``out[r, c] =
  frame(map_x[r, c], map_y[r, c])``.  The identity field therefore has
  ``map_x[r, c] == c`` and ``map_y[r, c] == r``.
* Intensities stay real-valued through every operation; rounding to
  bytes happens only when a frame is written to disk.
"""

from __future__ import annotations

import re
from dataclasses import dataclass
from pathlib import Path

import numpy as np
from PIL import Image

from .errors import (
    DimensionMismatchError,
    InvalidParameterError,
    NonFiniteFieldError,
    SchemaError,
)

INTERP_MODES = ("bilinear", "nearest")


def _readonly_f64(arr: np.ndarray) -> np.ndarray:
    out = np.array(arr, dtype=np.float64, copy=True, order="C")
    out.setflags(write=False)
    return out


@dataclass(frozen=True)
class BoundaryPolicy:
    """How to produce intensities for source coordinates outside the frame.

    ``clamp`` replicates the nearest edge pixel; ``constant`` blends with
    a fixed fill value.
    """

    mode: str = "clamp"
    value: float = 0.0

    def __post_init__(self):
        if self.mode not in ("clamp", "constant"):
            raise InvalidParameterError(
                f"boundary mode must be 'clamp' or 'constant', got {self.mode!r}"
            )
        if not np.isfinite(self.value):
            raise InvalidParameterError("constant boundary value must be finite")

    @classmethod
    def parse(cls, text: str) -> "BoundaryPolicy":
        """Parse ``"clamp"``, ``"constant"`` or ``"constant:<value>"``."""
        if text == "clamp":
            return cls("clamp")
        if text == "constant":
            return cls("constant", 0.0)
        m = re.fullmatch(r"constant:([-+0-9.eE]+)", text)
        if m:
            return cls("constant", float(m.group(1)))
        raise InvalidParameterError(
            f"cannot parse boundary policy {text!r}; expected 'clamp' or 'constant[:value]'"
        )

    def __str__(self) -> str:
        if self.mode == "clamp":
            return "clamp"
        return f"constant:{self.value:g}"


CLAMP = BoundaryPolicy("clamp")


@dataclass(frozen=True)
class Frame:
    """A single grayscale frame: 2-D float64 intensities in [0, 255]."""

    pixels: np.ndarray
    frame_index: int = 0

    def __post_init__(self):
        px = np.asarray(self.pixels)
        if px.ndim != 2 or px.size == 0:
            raise DimensionMismatchError(
                f"frame pixels must be a non-empty 2-D array, got shape {px.shape}"
            )
        px = _readonly_f64(px)
        if not np.isfinite(px).all():
            raise InvalidParameterError("frame pixels must be finite")
        if px.min() < 0.0 or px.max() > 255.0:
            raise InvalidParameterError(
                f"frame intensities must lie in [0, 255], got range "
                f"[{px.min():g}, {px.max():g}]"
            )
        object.__setattr__(self, "pixels", px)

    @property
    def height(self) -> int:
        return self.pixels.shape[0]

    @property
    def width(self) -> int:
        return self.pixels.shape[1]

    @property
    def shape(self) -> tuple[int, int]:
        return self.pixels.shape

    @classmethod
    def from_array(cls, arr, frame_index: int = 0) -> "Frame":
        return cls(np.asarray(arr, dtype=np.float64), frame_index)


@dataclass(frozen=True)
class FrameSequence:
    """An ordered run of equally sized frames with a nominal frame rate."""

    frames: tuple[Frame, ...]
    fps: float = 30.0

    def __post_init__(self):
        frames = tuple(self.frames)
        if not frames:
            raise InvalidParameterError("frame sequence must contain at least one frame")
        shape = frames[0].shape
        for f in frames:
            if f.shape != shape:
                raise DimensionMismatchError(
                    f"all frames must share one shape; frame {f.frame_index} has "
                    f"{f.shape}, expected {shape}"
                )
        if not (np.isfinite(self.fps) and self.fps > 0):
            raise InvalidParameterError(f"fps must be positive, got {self.fps}")
        object.__setattr__(self, "frames", frames)

    @property
    def num_frames(self) -> int:
        return len(self.frames)

    @property
    def height(self) -> int:
        return self.frames[0].height

    @property
    def width(self) -> int:
        return self.frames[0].width

    def __len__(self) -> int:
        return len(self.frames)

    def __getitem__(self, i: int) -> Frame:
        return self.frames[i]

    def __iter__(self):
        return iter(self.frames)

    def pixels_stack(self) -> np.ndarray:
        return np.stack([f.pixels for f in self.frames])


@dataclass(frozen=True)
class DisplacementField:
    """Per-pixel source coordinates for backward warping.

    Finiteness is deliberately not enforced at construction so that
    fields produced by failing numerics can be inspected; every consumer
    (warp, compose, jacobian, I/O) calls :meth:`require_finite` first.
    """

    map_x: np.ndarray
    map_y: np.ndarray

    def __post_init__(self):
        mx = np.asarray(self.map_x)
        my = np.asarray(self.map_y)
        if mx.ndim != 2 or mx.size == 0:
            raise DimensionMismatchError(
                f"map_x must be a non-empty 2-D array, got shape {mx.shape}"
            )
        if my.shape != mx.shape:
            raise DimensionMismatchError(
                f"map_x and map_y shapes differ: {mx.shape} vs {my.shape}"
            )
        object.__setattr__(self, "map_x", _readonly_f64(mx))
        object.__setattr__(self, "map_y", _readonly_f64(my))

    @property
    def height(self) -> int:
        return self.map_x.shape[0]

    @property
    def width(self) -> int:
        return self.map_x.shape[1]

    @property
    def shape(self) -> tuple[int, int]:
        return self.map_x.shape

    @classmethod
    def identity(cls, width: int, height: int) -> "DisplacementField":
        if width < 1 or height < 1:
            raise InvalidParameterError(
                f"field dimensions must be positive, got {width}x{height}"
            )
        map_x, map_y = np.meshgrid(
            np.arange(width, dtype=np.float64), np.arange(height, dtype=np.float64)
        )
        return cls(map_x, map_y)

    @classmethod
    def from_displacement(cls, dx: np.ndarray, dy: np.ndarray) -> "DisplacementField":
        dx = np.asarray(dx, dtype=np.float64)
        dy = np.asarray(dy, dtype=np.float64)
        if dx.ndim != 2 or dx.shape != dy.shape:
            raise DimensionMismatchError(
                f"displacement components must be matching 2-D arrays, got "
                f"{dx.shape} and {dy.shape}"
            )
        ident = cls.identity(dx.shape[1], dx.shape[0])
        return cls(ident.map_x + dx, ident.map_y + dy)

    def displacement(self) -> tuple[np.ndarray, np.ndarray]:
        """Return (dx, dy) relative to the identity field."""
        ident = DisplacementField.identity(self.width, self.height)
        return self.map_x - ident.map_x, self.map_y - ident.map_y

    def require_finite(self, context: str) -> None:
        if not (np.isfinite(self.map_x).all() and np.isfinite(self.map_y).all()):
            bad = int(
                (~np.isfinite(self.map_x)).sum() + (~np.isfinite(self.map_y)).sum()
            )
            raise NonFiniteFieldError(
                f"{context}: displacement field contains {bad} non-finite entries"
            )


def sample_at(
    pixels: np.ndarray,
    xs: np.ndarray,
    ys: np.ndarray,
    interp: str = "bilinear",
    boundary: BoundaryPolicy = CLAMP,
) -> np.ndarray:
    """Sample an intensity array at continuous coordinates.

    Args:
        pixels: 2-D intensity array.
        xs, ys: coordinate arrays of identical shape (x along columns).
        interp: "bilinear" or "nearest" (nearest rounds halves up).
        boundary: out-of-bounds handling.

    Returns:
        Array of sampled values, same shape as ``xs``.
    """
    if interp not in INTERP_MODES:
        raise InvalidParameterError(
            f"interp must be one of {INTERP_MODES}, got {interp!r}"
        )
    pixels = np.asarray(pixels, dtype=np.float64)
    xs = np.asarray(xs, dtype=np.float64)
    ys = np.asarray(ys, dtype=np.float64)
    if xs.shape != ys.shape:
        raise DimensionMismatchError(
            f"coordinate arrays must match: {xs.shape} vs {ys.shape}"
        )
    h, w = pixels.shape

    if interp == "nearest":
        xi = np.floor(xs + 0.5).astype(np.int64)
        yi = np.floor(ys + 0.5).astype(np.int64)
        xc = np.clip(xi, 0, w - 1)
        yc = np.clip(yi, 0, h - 1)
        vals = pixels[yc, xc]
        if boundary.mode == "constant":
            inside = (xi >= 0) & (xi <= w - 1) & (yi >= 0) & (yi <= h - 1)
            vals = np.where(inside, vals, boundary.value)
        return vals

    x0 = np.floor(xs)
    y0 = np.floor(ys)
    wx = xs - x0
    wy = ys - y0
    x0i = x0.astype(np.int64)
    y0i = y0.astype(np.int64)
    x1i = x0i + 1
    y1i = y0i + 1

    x0c = np.clip(x0i, 0, w - 1)
    x1c = np.clip(x1i, 0, w - 1)
    y0c = np.clip(y0i, 0, h - 1)
    y1c = np.clip(y1i, 0, h - 1)

    v00 = pixels[y0c, x0c]
    v01 = pixels[y0c, x1c]
    v10 = pixels[y1c, x0c]
    v11 = pixels[y1c, x1c]

    if boundary.mode == "constant":
        c = boundary.value
        in_x0 = (x0i >= 0) & (x0i <= w - 1)
        in_x1 = (x1i >= 0) & (x1i <= w - 1)
        in_y0 = (y0i >= 0) & (y0i <= h - 1)
        in_y1 = (y1i >= 0) & (y1i <= h - 1)
        v00 = np.where(in_y0 & in_x0, v00, c)
        v01 = np.where(in_y0 & in_x1, v01, c)
        v10 = np.where(in_y1 & in_x0, v10, c)
        v11 = np.where(in_y1 & in_x1, v11, c)

    top = (1.0 - wx) * v00 + wx * v01
    bot = (1.0 - wx) * v10 + wx * v11
    return (1.0 - wy) * top + wy * bot


def warp(
    frame: Frame,
    field: DisplacementField,
    interp: str = "bilinear",
    boundary: BoundaryPolicy = CLAMP,
) -> Frame:
    """Backward-warp a frame: ``out[r, c] = frame(map_x[r, c], map_y[r, c])``.

    Warping through the identity field returns a bit-identical copy.
    The output is clipped to [0, 255] (bilinear stays in range anyway;
    a constant boundary value outside the range would not).
    """
    if field.shape != frame.shape:
        raise DimensionMismatchError(
            f"field shape {field.shape} does not match frame shape {frame.shape}"
        )
    field.require_finite("warp")
    vals = sample_at(frame.pixels, field.map_x, field.map_y, interp, boundary)
    vals = np.clip(vals, 0.0, 255.0)
    return Frame(vals, frame.frame_index)


def warp_sequence(
    seq: FrameSequence,
    fields: list[DisplacementField],
    interp: str = "bilinear",
    boundary: BoundaryPolicy = CLAMP,
) -> FrameSequence:
    if len(fields) != seq.num_frames:
        raise DimensionMismatchError(
            f"need one field per frame: {len(fields)} fields for "
            f"{seq.num_frames} frames"
        )
    return FrameSequence(
        tuple(warp(f, fld, interp, boundary) for f, fld in zip(seq, fields)),
        fps=seq.fps,
    )


def resize_to(frame: Frame, width: int, height: int) -> Frame:
    """Bilinear resize with center-aligned sampling.

    Output pixel (r, c) reads source coordinate
    ``((c + 0.5) * in_w / out_w - 0.5, (r + 0.5) * in_h / out_h - 0.5)``,
    so resizing to the same size is bit-identical.
    """
    if width < 1 or height < 1:
        raise InvalidParameterError(
            f"target dimensions must be positive, got {width}x{height}"
        )
    xs = (np.arange(width, dtype=np.float64) + 0.5) * (frame.width / width) - 0.5
    ys = (np.arange(height, dtype=np.float64) + 0.5) * (frame.height / height) - 0.5
    gx, gy = np.meshgrid(xs, ys)
    vals = sample_at(frame.pixels, gx, gy, "bilinear", CLAMP)
    return Frame(np.clip(vals, 0.0, 255.0), frame.frame_index)


def central_crop(frame: Frame, fraction: float) -> Frame:
    """Center crop keeping ``fraction`` of each side (e.g. 0.8 keeps 80%)."""
    if not (0.0 < fraction <= 1.0):
        raise InvalidParameterError(f"crop fraction must be in (0, 1], got {fraction}")
    ch = max(1, int(round(frame.height * fraction)))
    cw = max(1, int(round(frame.width * fraction)))
    y0 = (frame.height - ch) // 2
    x0 = (frame.width - cw) // 2
    return Frame(frame.pixels[y0 : y0 + ch, x0 : x0 + cw], frame.frame_index)


def export_bytes(pixels: np.ndarray) -> np.ndarray:
    """Quantize real intensities to uint8, rounding halves away from zero."""
    clipped = np.clip(np.asarray(pixels, dtype=np.float64), 0.0, 255.0)
    return np.floor(clipped + 0.5).astype(np.uint8)


def frame_filename(index: int, ext: str = "png") -> str:
    return f"frame_{index:06d}.{ext}"


_FRAME_FILE_RE = re.compile(r"frame_(\d{6})\.(png|pgm)$")


def save_frame(frame: Frame, path: str | Path) -> Path:
    """Write a frame as 8-bit grayscale PNG or PGM (by file suffix)."""
    path = Path(path)
    if path.suffix.lower() not in (".png", ".pgm"):
        raise InvalidParameterError(
            f"unsupported frame format {path.suffix!r}; use .png or .pgm"
        )
    img = Image.fromarray(export_bytes(frame.pixels), mode="L")
    img.save(path)
    return path


def load_frame(path: str | Path, frame_index: int = 0) -> Frame:
    path = Path(path)
    if not path.is_file():
        raise SchemaError(f"frame file not found: {path}")
    with Image.open(path) as img:
        arr = np.asarray(img.convert("L"), dtype=np.float64)
    return Frame(arr, frame_index)


def save_sequence(seq: FrameSequence, directory: str | Path, ext: str = "png") -> list[Path]:
    directory = Path(directory)
    directory.mkdir(parents=True, exist_ok=True)
    paths = []
    for i, frame in enumerate(seq):
        paths.append(save_frame(Frame(frame.pixels, i), directory / frame_filename(i, ext)))
    return paths


def load_sequence(directory: str | Path, fps: float = 30.0) -> FrameSequence:
    """Load ``frame_000000.png`` style files from a directory.

    Files must be numbered consecutively from zero and share one size.
    """
    directory = Path(directory)
    if not directory.is_dir():
        raise SchemaError(f"frame directory not found: {directory}")
    entries = []
    for p in sorted(directory.iterdir()):
        m = _FRAME_FILE_RE.fullmatch(p.name)
        if m:
            entries.append((int(m.group(1)), p))
    if not entries:
        raise SchemaError(f"no frame_NNNNNN.png/.pgm files in {directory}")
    entries.sort()
    indices = [i for i, _ in entries]
    if indices != list(range(len(entries))):
        raise SchemaError(
            f"frame files must be numbered consecutively from 0; got indices "
            f"{indices[:5]}{'...' if len(indices) > 5 else ''}"
        )
    frames = tuple(load_frame(p, i) for i, p in entries)
    return FrameSequence(frames, fps=fps)
