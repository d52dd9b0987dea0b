import cv2
import numpy as np
import pytest

from tracker_adapter import Backend, register_backend, unregister_backend


def drift_infer(frames, queries, device):
    """Deterministic stand-in tracker: constant drift, NaN once off-frame."""
    num_frames, height, width = frames.shape
    positions = np.repeat(queries[None].astype(np.float64), num_frames, axis=0)
    steps = np.arange(num_frames, dtype=np.float64)[:, None, None]
    positions = positions + steps * np.array([1.5, -1.0])
    inside = (
        (positions[..., 0] >= 0) & (positions[..., 0] <= width - 1)
        & (positions[..., 1] >= 0) & (positions[..., 1] <= height - 1)
    )
    positions[~inside] = np.nan
    return positions, inside.copy()


@pytest.fixture
def fake_backend():
    register_backend("fake", lambda: Backend("fake", "fake-0.1", drift_infer))
    yield "fake"
    unregister_backend("fake")


@pytest.fixture
def frame_dir(tmp_path):
    def build(num_frames=4, width=64, height=64, subdir="frames"):
        out = tmp_path / subdir
        out.mkdir(parents=True, exist_ok=True)
        yy, xx = np.mgrid[0:height, 0:width]
        for t in range(num_frames):
            img = ((xx * 3 + yy * 2 + t * 7) % 256).astype(np.uint8)
            assert cv2.imwrite(str(out / f"frame_{t:06d}.png"), img)
        return out

    return build
