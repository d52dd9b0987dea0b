"""Tracker registry.

A backend is a named inference callable: (frames, queries, device) ->
(positions, visibility), where frames is (T, H, W) float32 grayscale,
queries is (N, 2) in (x, y) pixel coordinates on frame 0, positions is
(T, N, 2) and visibility is (T, N) bool.  The three stock entries load
their pretrained models on demand; each raises BackendUnavailableError
with an actionable message when its package or checkpoint is absent,
so the stock names are always safe to list.  Tests (or downstream
code) may register additional backends.
"""

import importlib
import os
from dataclasses import dataclass
from pathlib import Path
from typing import Callable

import numpy as np

from .errors import BackendUnavailableError, InvalidConfigError

InferFn = Callable[[np.ndarray, np.ndarray, str], tuple[np.ndarray, np.ndarray]]

CACHE_ENV = "TRACKER_ADAPTER_CACHE"


def cache_dir() -> Path:
    return Path(os.environ.get(CACHE_ENV, Path.home() / ".cache" / "tracker-adapter"))


@dataclass(frozen=True)
class Backend:
    name: str
    model_id: str
    infer: InferFn


_LOADERS: dict[str, Callable[[], Backend]] = {}


def register_backend(name: str, loader: Callable[[], Backend], replace: bool = False):
    if name in _LOADERS and not replace:
        raise InvalidConfigError(f"backend {name!r} is already registered")
    _LOADERS[name] = loader


def unregister_backend(name: str):
    _LOADERS.pop(name, None)


def recognized_backends() -> tuple[str, ...]:
    return tuple(sorted(_LOADERS))


def load_backend(name: str) -> Backend:
    if name not in _LOADERS:
        raise InvalidConfigError(
            f"unknown tracker {name!r}; recognized: {', '.join(recognized_backends())}"
        )
    return _LOADERS[name]()


def _import_or_unavailable(name: str, module: str, hint: str):
    try:
        return importlib.import_module(module)
    except ImportError as exc:
        raise BackendUnavailableError(
            f"{name} backend needs the {module!r} package ({hint}); "
            f"import failed: {exc}"
        ) from exc


def _load_cotracker() -> Backend:
    _import_or_unavailable(
        "cotracker", "cotracker",
        "install from the facebookresearch/co-tracker repository",
    )
    torch = _import_or_unavailable("cotracker", "torch", "pip install torch")
    ckpt = cache_dir() / "cotracker2.pth"
    if not ckpt.is_file():
        raise BackendUnavailableError(
            f"cotracker checkpoint not found at {ckpt}; download cotracker2.pth "
            f"into that directory (override with ${CACHE_ENV})"
        )
    from cotracker.predictor import CoTrackerPredictor

    model = CoTrackerPredictor(checkpoint=str(ckpt))

    def infer(frames, queries, device):
        model.to(device)
        # (T, H, W) grayscale -> (1, T, 3, H, W) video tensor
        video = torch.from_numpy(np.ascontiguousarray(frames)).float()
        video = video[None, :, None].repeat(1, 1, 3, 1, 1).to(device)
        q = torch.from_numpy(
            np.column_stack([np.zeros(len(queries)), queries]).astype(np.float32)
        )[None].to(device)
        tracks, vis = model(video, queries=q)
        return (
            tracks[0].detach().cpu().numpy().astype(np.float64),
            vis[0].detach().cpu().numpy() > 0.5,
        )

    return Backend("cotracker", ckpt.name, infer)


def _load_pips() -> Backend:
    _import_or_unavailable(
        "pips", "pips2", "install from the aharley/pips2 repository"
    )
    ckpt = cache_dir() / "pips2.pth"
    if not ckpt.is_file():
        raise BackendUnavailableError(
            f"pips checkpoint not found at {ckpt}; place the reference model "
            f"weights there (override with ${CACHE_ENV})"
        )
    raise BackendUnavailableError(
        "pips backend found its package but driver glue for this pips2 "
        "version is not bundled; pin the repository revision and register "
        "a backend wrapping its Pips.forward"
    )


def _load_tapnet() -> Backend:
    _import_or_unavailable(
        "tapnet", "tapnet", "install from the google-deepmind/tapnet repository"
    )
    ckpt = cache_dir() / "tapnet_checkpoint.npy"
    if not ckpt.is_file():
        raise BackendUnavailableError(
            f"tapnet checkpoint not found at {ckpt}; place the released "
            f"checkpoint there (override with ${CACHE_ENV})"
        )
    raise BackendUnavailableError(
        "tapnet backend found its package but driver glue for this tapnet "
        "version is not bundled; pin the repository revision and register "
        "a backend wrapping its tapir inference function"
    )


register_backend("cotracker", _load_cotracker)
register_backend("pips", _load_pips)
register_backend("tapnet", _load_tapnet)
