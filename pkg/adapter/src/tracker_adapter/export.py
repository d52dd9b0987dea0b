"""Run a tracker over a frame directory and emit a track file.

The adapter never post-processes tracker output (no smoothing, no
outlier handling); downstream owns all numerics.  The one enforced
contract is the query echo: frame-0 positions in the written file equal
the requested query points exactly.
"""

from dataclasses import dataclass
from pathlib import Path

import cv2
import numpy as np

from .backends import load_backend
from .errors import AdapterError, FramesError, InferenceError, InvalidConfigError
from .schema import write_track_file

SAMPLING_STRATEGIES = ("uniform-grid", "random")


@dataclass(frozen=True)
class AdapterConfig:
    tracker: str
    frames_dir: str | Path
    out_path: str | Path
    strategy: str = "uniform-grid"
    grid: int = 16
    count: int = 64
    seed: int = 0
    device: str = "cpu"

    def __post_init__(self):
        if not self.tracker:
            raise InvalidConfigError("tracker name must be non-empty")
        if self.strategy not in SAMPLING_STRATEGIES:
            raise InvalidConfigError(
                f"strategy must be one of {SAMPLING_STRATEGIES}, got {self.strategy!r}"
            )
        if self.strategy == "uniform-grid" and self.grid < 2:
            raise InvalidConfigError(f"grid side count must be >= 2, got {self.grid}")
        if self.strategy == "random" and self.count < 1:
            raise InvalidConfigError(f"point count must be >= 1, got {self.count}")
        if not self.device:
            raise InvalidConfigError("device hint must be non-empty")


def read_frames(frames_dir: str | Path) -> np.ndarray:
    """Load a directory of grayscale PNGs as a (T, H, W) float32 stack."""
    frames_dir = Path(frames_dir)
    if not frames_dir.is_dir():
        raise FramesError(f"frame directory not found: {frames_dir}")
    files = sorted(frames_dir.glob("*.png"))
    if not files:
        raise FramesError(f"no PNG frames in {frames_dir}")
    stack = []
    for path in files:
        img = cv2.imread(str(path), cv2.IMREAD_GRAYSCALE)
        if img is None:
            raise FramesError(f"unreadable frame: {path}")
        if stack and img.shape != stack[0].shape:
            raise FramesError(
                f"frame {path.name} is {img.shape[1]}x{img.shape[0]}, "
                f"expected {stack[0].shape[1]}x{stack[0].shape[0]}"
            )
        stack.append(img.astype(np.float32))
    return np.stack(stack)


def grid_queries(width: int, height: int, g: int) -> np.ndarray:
    # corner-inclusive g x g lattice, row-major; identical arithmetic to
    # the consumer's sampler so positions match it bit for bit
    if g < 2:
        raise InvalidConfigError(f"grid side count must be >= 2, got {g}")
    if g > min(width, height):
        raise InvalidConfigError(
            f"grid side count {g} exceeds image side min({width}, {height})"
        )
    xs = np.arange(g, dtype=np.float64) * (width - 1) / (g - 1)
    ys = np.arange(g, dtype=np.float64) * (height - 1) / (g - 1)
    gx, gy = np.meshgrid(xs, ys)
    return np.column_stack([gx.ravel(), gy.ravel()])


def random_queries(width: int, height: int, n: int, seed: int) -> np.ndarray:
    rng = np.random.default_rng(seed)
    xs = rng.integers(0, width, size=n)
    ys = rng.integers(0, height, size=n)
    return np.column_stack([xs, ys]).astype(np.float64)


def make_queries(cfg: AdapterConfig, width: int, height: int) -> np.ndarray:
    if cfg.strategy == "uniform-grid":
        return grid_queries(width, height, cfg.grid)
    return random_queries(width, height, cfg.count, cfg.seed)


def export_tracks(cfg: AdapterConfig) -> Path:
    frames = read_frames(cfg.frames_dir)
    num_frames, height, width = frames.shape
    queries = make_queries(cfg, width, height)
    backend = load_backend(cfg.tracker)
    try:
        positions, visibility = backend.infer(frames, queries, cfg.device)
    except AdapterError:
        raise
    except Exception as exc:
        raise InferenceError(f"{backend.name} inference failed: {exc}") from exc
    positions = np.asarray(positions, dtype=np.float64).copy()
    visibility = np.asarray(visibility, dtype=bool).copy()
    expected = (num_frames, len(queries), 2)
    if positions.shape != expected:
        raise InferenceError(
            f"{backend.name} returned positions {positions.shape}, "
            f"expected {expected}"
        )
    if visibility.shape != expected[:2]:
        raise InferenceError(
            f"{backend.name} returned visibility {visibility.shape}, "
            f"expected {expected[:2]}"
        )
    positions[0] = queries  # query echo contract
    return write_track_file(
        cfg.out_path,
        source_tag=f"{backend.name}:{backend.model_id}",
        width=width,
        height=height,
        positions=positions,
        visibility=visibility,
    )
