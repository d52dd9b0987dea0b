"""Evaluation metrics: MSE, SSIM, landmark MAPE, and per-sequence reports.

All intensity metrics operate on the [0, 255] scale.  SSIM follows the
reference parameterization: 11x11 Gaussian window with sigma 1.5,
K1 = 0.01, K2 = 0.03, dynamic range L = 255, averaged over window
positions where the kernel fits entirely inside the image (valid mode).
"""

from __future__ import annotations

import csv
import json
from dataclasses import dataclass
from pathlib import Path

import numpy as np
from scipy.ndimage import convolve1d

from .errors import (
    DimensionMismatchError,
    InvalidParameterError,
    SchemaError,
)
from .imgcore import Frame, FrameSequence


@dataclass(frozen=True)
class SsimParams:
    window: int = 11
    sigma: float = 1.5
    k1: float = 0.01
    k2: float = 0.03
    data_range: float = 255.0

    def __post_init__(self):
        if self.window < 3 or self.window % 2 == 0:
            raise InvalidParameterError(
                f"SSIM window must be odd and >= 3, got {self.window}"
            )
        if self.sigma <= 0 or self.data_range <= 0:
            raise InvalidParameterError("SSIM sigma and data_range must be positive")


@dataclass(frozen=True)
class LandmarkSet:
    """Named landmark trajectories: positions (T, L, 2) in (x, y) order."""

    names: tuple[str, ...]
    positions: np.ndarray
    kind: str = "reference"

    def __post_init__(self):
        names = tuple(self.names)
        pos = np.array(self.positions, dtype=np.float64, copy=True)
        if pos.ndim != 3 or pos.shape[2] != 2:
            raise DimensionMismatchError(
                f"landmark positions must have shape (T, L, 2), got {pos.shape}"
            )
        if len(names) != pos.shape[1] or len(names) < 1:
            raise DimensionMismatchError(
                f"{len(names)} names for {pos.shape[1]} landmark columns"
            )
        if len(set(names)) != len(names):
            raise InvalidParameterError("landmark names must be unique")
        if self.kind not in ("reference", "predicted"):
            raise InvalidParameterError(
                f"landmark kind must be 'reference' or 'predicted', got {self.kind!r}"
            )
        if not np.isfinite(pos).all():
            raise InvalidParameterError("landmark positions must be finite")
        pos.setflags(write=False)
        object.__setattr__(self, "names", names)
        object.__setattr__(self, "positions", pos)

    @property
    def num_frames(self) -> int:
        return self.positions.shape[0]

    @property
    def num_landmarks(self) -> int:
        return self.positions.shape[1]


@dataclass(frozen=True)
class MetricsReport:
    """Per-frame (frame_index, mse, ssim) rows plus per-video aggregates."""

    per_frame: tuple[tuple[int, float, float], ...]
    mse_mean: float
    mse_sd: float
    ssim_mean: float
    ssim_sd: float
    mape_per_landmark: tuple[tuple[str, float], ...] | None = None

    def to_dict(self) -> dict:
        return {
            "mse_mean": self.mse_mean,
            "mse_sd": self.mse_sd,
            "ssim_mean": self.ssim_mean,
            "ssim_sd": self.ssim_sd,
            "mape": (
                None
                if self.mape_per_landmark is None
                else {name: val for name, val in self.mape_per_landmark}
            ),
        }


def mse(a: Frame, b: Frame) -> float:
    """Mean squared intensity difference over all pixels."""
    if a.shape != b.shape:
        raise DimensionMismatchError(
            f"cannot compare frames of shapes {a.shape} and {b.shape}"
        )
    diff = a.pixels - b.pixels
    return float(np.mean(diff * diff))


def gaussian_window(size: int, sigma: float) -> np.ndarray:
    """1-D Gaussian taps normalized to sum 1 (outer product gives the 2-D window)."""
    half = (size - 1) / 2.0
    x = np.arange(size, dtype=np.float64) - half
    g = np.exp(-(x * x) / (2.0 * sigma * sigma))
    return g / g.sum()


def _windowed_means(img: np.ndarray, g: np.ndarray) -> np.ndarray:
    """Valid-mode weighted local means via separable filtering."""
    r = len(g) // 2
    out = convolve1d(img, g, axis=0, mode="constant")
    out = convolve1d(out, g, axis=1, mode="constant")
    return out[r:-r, r:-r]


def ssim(a: Frame, b: Frame, params: SsimParams = SsimParams()) -> float:
    """Mean structural similarity over all valid window positions.

    ssim(I, I) is exactly 1.0; two constant images of values u, v score
    (2uv + C1) / (u^2 + v^2 + C1) in every window.
    """
    if a.shape != b.shape:
        raise DimensionMismatchError(
            f"cannot compare frames of shapes {a.shape} and {b.shape}"
        )
    if a.height < params.window or a.width < params.window:
        raise InvalidParameterError(
            f"image {a.width}x{a.height} is smaller than the "
            f"{params.window}x{params.window} SSIM window"
        )
    c1 = (params.k1 * params.data_range) ** 2
    c2 = (params.k2 * params.data_range) ** 2
    g = gaussian_window(params.window, params.sigma)
    x = a.pixels
    y = b.pixels
    mu_x = _windowed_means(x, g)
    mu_y = _windowed_means(y, g)
    m_xx = _windowed_means(x * x, g)
    m_yy = _windowed_means(y * y, g)
    m_xy = _windowed_means(x * y, g)
    var_x = m_xx - mu_x * mu_x
    var_y = m_yy - mu_y * mu_y
    cov = m_xy - mu_x * mu_y
    num = (2.0 * mu_x * mu_y + c1) * (2.0 * cov + c2)
    den = (mu_x * mu_x + mu_y * mu_y + c1) * (var_x + var_y + c2)
    return float(np.mean(num / den))


def mape(
    predicted: LandmarkSet, reference: LandmarkSet, norm: float = 256.0
) -> list[tuple[str, float]]:
    """Per-landmark mean Euclidean error as a percentage of ``norm``.

    A constant offset of 2.56 px under the default 256-px normalization
    reads as exactly 1.0%.
    """
    if norm <= 0:
        raise InvalidParameterError(f"norm must be positive, got {norm}")
    if predicted.names != reference.names:
        raise SchemaError(
            f"landmark names differ: {predicted.names} vs {reference.names}"
        )
    if predicted.positions.shape != reference.positions.shape:
        raise DimensionMismatchError(
            f"landmark shapes differ: {predicted.positions.shape} vs "
            f"{reference.positions.shape}"
        )
    err = np.linalg.norm(predicted.positions - reference.positions, axis=2)
    per_landmark = err.mean(axis=0) / norm * 100.0
    return [(name, float(v)) for name, v in zip(predicted.names, per_landmark)]


def evaluate_sequence(
    seq: FrameSequence,
    reference_index: int = 0,
    params: SsimParams = SsimParams(),
    mape_pairs: tuple[LandmarkSet, LandmarkSet] | None = None,
    mape_norm: float = 256.0,
) -> MetricsReport:
    """MSE/SSIM of every frame against the reference frame, aggregated.

    Aggregates are mean and population standard deviation over frames.
    Optionally attaches landmark MAPE from a (predicted, reference) pair.
    """
    if not (0 <= reference_index < seq.num_frames):
        raise InvalidParameterError(
            f"reference_index {reference_index} out of range for "
            f"{seq.num_frames} frames"
        )
    ref = seq[reference_index]
    rows = []
    for i, frame in enumerate(seq):
        rows.append((i, mse(frame, ref), ssim(frame, ref, params)))
    mses = np.array([r[1] for r in rows])
    ssims = np.array([r[2] for r in rows])
    mape_rows = None
    if mape_pairs is not None:
        mape_rows = tuple(mape(mape_pairs[0], mape_pairs[1], mape_norm))
    return MetricsReport(
        per_frame=tuple(rows),
        mse_mean=float(mses.mean()),
        mse_sd=float(mses.std()),
        ssim_mean=float(ssims.mean()),
        ssim_sd=float(ssims.std()),
        mape_per_landmark=mape_rows,
    )


def write_report_csv(report: MetricsReport, path: str | Path) -> Path:
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    with open(path, "w", newline="") as fh:
        writer = csv.writer(fh, lineterminator="\n")
        writer.writerow(["frame_index", "mse", "ssim"])
        for idx, m, s in report.per_frame:
            writer.writerow([idx, repr(float(m)), repr(float(s))])
    return path


def write_report_json(report: MetricsReport, path: str | Path) -> Path:
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    with open(path, "w") as fh:
        json.dump(report.to_dict(), fh, sort_keys=True, indent=2)
        fh.write("\n")
    return path


def save_landmarks(landmarks: LandmarkSet, path: str | Path) -> Path:
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    doc = {
        "schema_version": 1,
        "kind": landmarks.kind,
        "names": list(landmarks.names),
        "positions": [
            [[float(x), float(y)] for x, y in frame_row]
            for frame_row in landmarks.positions
        ],
    }
    with open(path, "w") as fh:
        json.dump(doc, fh, allow_nan=False, sort_keys=True, indent=1)
        fh.write("\n")
    return path


def load_landmarks(path: str | Path) -> LandmarkSet:
    path = Path(path)
    if not path.is_file():
        raise SchemaError(f"landmark file not found: {path}")
    try:
        with open(path) as fh:
            doc = json.load(fh)
    except json.JSONDecodeError as exc:
        raise SchemaError(f"landmark file is not valid JSON: {exc}") from exc
    for key in ("names", "positions", "kind"):
        if key not in doc:
            raise SchemaError(f"landmark file missing required key {key!r}")
    try:
        return LandmarkSet(tuple(doc["names"]), np.asarray(doc["positions"]), doc["kind"])
    except (TypeError, ValueError) as exc:
        raise SchemaError(f"malformed landmark file {path}: {exc}") from exc
