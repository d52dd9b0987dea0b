"""Video to frame-directory extraction."""

from pathlib import Path

import cv2

from .errors import InvalidConfigError, VideoError


def extract_frames(video_path: str | Path, out_dir: str | Path, size: int = 256) -> list[Path]:
    """Decode a video into zero-padded grayscale square PNG frames.

    Frames are converted to grayscale and resized to size x size
    (area-averaged), then written as frame_000000.png, frame_000001.png,
    and so on under out_dir.
    """
    if size < 1:
        raise InvalidConfigError(f"frame size must be >= 1, got {size}")
    video_path = Path(video_path)
    if not video_path.is_file():
        raise VideoError(f"video not found: {video_path}")
    cap = cv2.VideoCapture(str(video_path))
    if not cap.isOpened():
        raise VideoError(f"cannot decode video: {video_path}")
    out_dir = Path(out_dir)
    out_dir.mkdir(parents=True, exist_ok=True)
    written: list[Path] = []
    try:
        while True:
            ok, frame = cap.read()
            if not ok:
                break
            if frame.ndim == 3:
                frame = cv2.cvtColor(frame, cv2.COLOR_BGR2GRAY)
            if frame.shape != (size, size):
                frame = cv2.resize(frame, (size, size), interpolation=cv2.INTER_AREA)
            path = out_dir / f"frame_{len(written):06d}.png"
            if not cv2.imwrite(str(path), frame):
                raise VideoError(f"failed to write {path}")
            written.append(path)
    finally:
        cap.release()
    if not written:
        raise VideoError(f"no frames decoded from {video_path}")
    return written
