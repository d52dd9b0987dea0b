"""Pretrained point trackers in, canonical track files out."""

from .backends import (
    Backend,
    cache_dir,
    load_backend,
    recognized_backends,
    register_backend,
    unregister_backend,
)
from .errors import (
    AdapterError,
    BackendUnavailableError,
    FramesError,
    InferenceError,
    InvalidConfigError,
    VideoError,
)
from .export import (
    AdapterConfig,
    export_tracks,
    grid_queries,
    random_queries,
    read_frames,
)
from .extract import extract_frames
from .schema import SCHEMA_VERSION, validate_track_arrays, write_track_file

__all__ = [
    "AdapterConfig", "AdapterError", "Backend", "BackendUnavailableError",
    "FramesError", "InferenceError", "InvalidConfigError", "SCHEMA_VERSION",
    "VideoError", "cache_dir", "export_tracks", "extract_frames",
    "grid_queries", "load_backend", "random_queries", "read_frames",
    "recognized_backends", "register_backend", "unregister_backend",
    "validate_track_arrays", "write_track_file",
]
