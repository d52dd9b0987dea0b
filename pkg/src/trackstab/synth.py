"""Synthetic ground truth: parametric motion over procedural phantoms.

A MotionSpec defines, per frame t, a forward motion map M_t taking
frame-0 (base) coordinates to frame-t coordinates, with M_0 = identity.
From one spec the generator produces three mutually consistent artifacts:

* frames: frame t is the base backward-warped through M_t^{-1}, so
  content genuinely moves forward along M_t;
* exact tracks: positions[t] = M_t(query), the closed-form trajectories;
* generation fields: the M_t^{-1} coordinate maps used for rendering.

Stabilizing the generated frames with the exact tracks must therefore
recover the base frame up to interpolation error, which is what the
end-to-end oracle tests assert.

Rigid and affine motions invert analytically; smooth deformation inverts
by fixed-point iteration, convergent because the displacement amplitude
is validated against the contraction bound a * 2*pi*f / side < 1.
"""

from __future__ import annotations

import json
from dataclasses import dataclass
from pathlib import Path

import numpy as np

from .errors import (
    DimensionMismatchError,
    InvalidParameterError,
    NumericError,
    SchemaError,
)
from .imgcore import CLAMP, DisplacementField, Frame, FrameSequence, warp
from .metrics import LandmarkSet
from .tracks import TrackSet

MOTION_KINDS = ("translation", "rotation", "affine", "smooth-deformation", "composite")

_INVERT_TOL = 1e-12
_INVERT_MAX_ITERS = 100


@dataclass(frozen=True)
class MotionSpec:
    """Per-frame forward motion parameters; see module docstring.

    Trajectories (shifts, angles_deg, matrices, amplitude) all have
    length T and must describe the identity at frame 0 so that tracks
    start exactly at their queries.
    """

    kind: str
    shifts: np.ndarray | None = None
    angles_deg: np.ndarray | None = None
    center: tuple[float, float] | None = None
    matrices: np.ndarray | None = None
    amplitude: np.ndarray | None = None
    frequency: float = 1.0
    phase: tuple[float, float] = (0.0, 0.0)
    components: tuple["MotionSpec", ...] = ()
    seed: int = 0

    def __post_init__(self):
        if self.kind not in MOTION_KINDS:
            raise InvalidParameterError(
                f"motion kind must be one of {MOTION_KINDS}, got {self.kind!r}"
            )
        if self.kind == "translation":
            arr = np.asarray(self.shifts, dtype=np.float64)
            if arr.ndim != 2 or arr.shape[1] != 2 or arr.shape[0] < 1:
                raise InvalidParameterError(
                    f"translation shifts must have shape (T, 2), got {arr.shape}"
                )
            object.__setattr__(self, "shifts", arr)
        elif self.kind == "rotation":
            arr = np.asarray(self.angles_deg, dtype=np.float64)
            if arr.ndim != 1 or arr.shape[0] < 1:
                raise InvalidParameterError(
                    f"rotation angles_deg must have shape (T,), got {arr.shape}"
                )
            object.__setattr__(self, "angles_deg", arr)
        elif self.kind == "affine":
            arr = np.asarray(self.matrices, dtype=np.float64)
            if arr.ndim != 3 or arr.shape[1:] != (2, 3) or arr.shape[0] < 1:
                raise InvalidParameterError(
                    f"affine matrices must have shape (T, 2, 3), got {arr.shape}"
                )
            object.__setattr__(self, "matrices", arr)
        elif self.kind == "smooth-deformation":
            arr = np.asarray(self.amplitude, dtype=np.float64)
            if arr.ndim != 1 or arr.shape[0] < 1:
                raise InvalidParameterError(
                    f"deformation amplitude must have shape (T,), got {arr.shape}"
                )
            if not (np.isfinite(self.frequency) and self.frequency > 0):
                raise InvalidParameterError(
                    f"deformation frequency must be positive, got {self.frequency}"
                )
            object.__setattr__(self, "amplitude", arr)
        else:  # composite
            comps = tuple(self.components)
            if not comps:
                raise InvalidParameterError("composite motion needs at least one component")
            t0 = comps[0].num_frames
            for c in comps:
                if c.num_frames != t0:
                    raise InvalidParameterError(
                        f"composite components disagree on frame count: "
                        f"{c.num_frames} vs {t0}"
                    )
            object.__setattr__(self, "components", comps)

    # -- convenience constructors -------------------------------------------

    @classmethod
    def translation(cls, shifts) -> "MotionSpec":
        return cls("translation", shifts=np.asarray(shifts, dtype=np.float64))

    @classmethod
    def rotation(cls, angles_deg, center: tuple[float, float] | None = None) -> "MotionSpec":
        return cls("rotation", angles_deg=np.asarray(angles_deg, dtype=np.float64),
                   center=center)

    @classmethod
    def affine(cls, matrices) -> "MotionSpec":
        return cls("affine", matrices=np.asarray(matrices, dtype=np.float64))

    @classmethod
    def smooth_deformation(
        cls, amplitude, frequency: float, phase: tuple[float, float] = (0.0, 0.0)
    ) -> "MotionSpec":
        return cls("smooth-deformation", amplitude=np.asarray(amplitude, dtype=np.float64),
                   frequency=frequency, phase=(float(phase[0]), float(phase[1])))

    @classmethod
    def composite(cls, components) -> "MotionSpec":
        return cls("composite", components=tuple(components))

    # -- derived info ---------------------------------------------------------

    @property
    def num_frames(self) -> int:
        if self.kind == "translation":
            return self.shifts.shape[0]
        if self.kind == "rotation":
            return self.angles_deg.shape[0]
        if self.kind == "affine":
            return self.matrices.shape[0]
        if self.kind == "smooth-deformation":
            return self.amplitude.shape[0]
        return self.components[0].num_frames

    def _center(self, width: int, height: int) -> tuple[float, float]:
        if self.center is not None:
            return (float(self.center[0]), float(self.center[1]))
        return ((width - 1) / 2.0, (height - 1) / 2.0)

    def validate(self, width: int, height: int) -> None:
        """Check parameter finiteness, identity at frame 0, and invertibility."""
        if self.kind == "translation":
            if not np.isfinite(self.shifts).all():
                raise InvalidParameterError("translation shifts must be finite")
            if not np.allclose(self.shifts[0], 0.0, atol=0.0):
                raise InvalidParameterError(
                    "motion must start at identity: shifts[0] must be (0, 0)"
                )
        elif self.kind == "rotation":
            if not np.isfinite(self.angles_deg).all():
                raise InvalidParameterError("rotation angles must be finite")
            if self.angles_deg[0] != 0.0:
                raise InvalidParameterError(
                    "motion must start at identity: angles_deg[0] must be 0"
                )
            cx, cy = self._center(width, height)
            if not (0.0 <= cx <= width - 1 and 0.0 <= cy <= height - 1):
                raise InvalidParameterError(
                    f"rotation center ({cx}, {cy}) lies outside the image"
                )
        elif self.kind == "affine":
            if not np.isfinite(self.matrices).all():
                raise InvalidParameterError("affine matrices must be finite")
            ident = np.array([[1.0, 0.0, 0.0], [0.0, 1.0, 0.0]])
            if not np.array_equal(self.matrices[0], ident):
                raise InvalidParameterError(
                    "motion must start at identity: matrices[0] must be [I | 0]"
                )
            dets = np.linalg.det(self.matrices[:, :, :2])
            if np.any(np.abs(dets) < 1e-12):
                raise InvalidParameterError("affine matrices must be invertible")
        elif self.kind == "smooth-deformation":
            if not np.isfinite(self.amplitude).all():
                raise InvalidParameterError("deformation amplitude must be finite")
            if self.amplitude[0] != 0.0:
                raise InvalidParameterError(
                    "motion must start at identity: amplitude[0] must be 0"
                )
            side = min(width, height)
            bound = float(np.max(np.abs(self.amplitude)) * 2.0 * np.pi * self.frequency / side)
            if bound >= 1.0:
                raise InvalidParameterError(
                    f"smooth deformation violates the invertibility bound "
                    f"amplitude * 2*pi*frequency / side < 1 (got {bound:.4g})"
                )
        else:
            for c in self.components:
                c.validate(width, height)

    # -- forward and inverse point maps --------------------------------------

    def _smooth_displacement(
        self, t: int, pts: np.ndarray, width: int, height: int
    ) -> np.ndarray:
        a = float(self.amplitude[t])
        f = self.frequency
        px, py = self.phase
        x = pts[:, 0]
        y = pts[:, 1]
        # border-anchored envelope: displacement fades to zero at the edges,
        # so moved points stay inside the frame
        env = np.sin(np.pi * np.clip(x, 0, width - 1) / (width - 1)) * np.sin(
            np.pi * np.clip(y, 0, height - 1) / (height - 1)
        )
        dx = a * np.sin(2.0 * np.pi * f * x / width + px) * env
        dy = a * np.sin(2.0 * np.pi * f * y / height + py) * env
        return np.column_stack([dx, dy])

    def apply_points(self, t: int, pts: np.ndarray, width: int, height: int) -> np.ndarray:
        """Forward map M_t over an (N, 2) point array."""
        pts = np.asarray(pts, dtype=np.float64)
        if self.kind == "translation":
            return pts + self.shifts[t]
        if self.kind == "rotation":
            theta = np.deg2rad(self.angles_deg[t])
            c = np.array(self._center(width, height))
            rot = np.array(
                [[np.cos(theta), -np.sin(theta)], [np.sin(theta), np.cos(theta)]]
            )
            return (pts - c) @ rot.T + c
        if self.kind == "affine":
            a = self.matrices[t, :, :2]
            b = self.matrices[t, :, 2]
            return pts @ a.T + b
        if self.kind == "smooth-deformation":
            return pts + self._smooth_displacement(t, pts, width, height)
        out = pts
        for c in self.components:
            out = c.apply_points(t, out, width, height)
        return out

    def invert_points(self, t: int, pts: np.ndarray, width: int, height: int) -> np.ndarray:
        """Inverse map M_t^{-1} over an (N, 2) point array."""
        pts = np.asarray(pts, dtype=np.float64)
        if self.kind == "translation":
            return pts - self.shifts[t]
        if self.kind == "rotation":
            theta = -np.deg2rad(self.angles_deg[t])
            c = np.array(self._center(width, height))
            rot = np.array(
                [[np.cos(theta), -np.sin(theta)], [np.sin(theta), np.cos(theta)]]
            )
            return (pts - c) @ rot.T + c
        if self.kind == "affine":
            a = self.matrices[t, :, :2]
            b = self.matrices[t, :, 2]
            return np.linalg.solve(a, (pts - b).T).T
        if self.kind == "smooth-deformation":
            # fixed-point iteration q <- p - d(q); a contraction under the
            # validated amplitude bound
            q = pts.copy()
            for _ in range(_INVERT_MAX_ITERS):
                q_new = pts - self._smooth_displacement(t, q, width, height)
                delta = float(np.max(np.abs(q_new - q)))
                q = q_new
                if delta < _INVERT_TOL:
                    return q
            raise NumericError(
                f"smooth-deformation inversion did not converge at frame {t} "
                f"(last delta {delta:.3g})"
            )
        out = pts
        for c in reversed(self.components):
            out = c.invert_points(t, out, width, height)
        return out

    # -- JSON ------------------------------------------------------------------

    def to_json_dict(self) -> dict:
        doc: dict = {"kind": self.kind, "seed": self.seed}
        if self.kind == "translation":
            doc["shifts"] = self.shifts.tolist()
        elif self.kind == "rotation":
            doc["angles_deg"] = self.angles_deg.tolist()
            if self.center is not None:
                doc["center"] = [float(self.center[0]), float(self.center[1])]
        elif self.kind == "affine":
            doc["matrices"] = self.matrices.tolist()
        elif self.kind == "smooth-deformation":
            doc["amplitude"] = self.amplitude.tolist()
            doc["frequency"] = self.frequency
            doc["phase"] = [float(self.phase[0]), float(self.phase[1])]
        else:
            doc["components"] = [c.to_json_dict() for c in self.components]
        return doc

    @classmethod
    def from_json_dict(cls, doc: dict) -> "MotionSpec":
        if not isinstance(doc, dict) or "kind" not in doc:
            raise SchemaError("motion spec must be an object with a 'kind' key")
        kind = doc["kind"]
        seed = doc.get("seed", 0)
        try:
            if kind == "translation":
                return cls(kind, shifts=np.asarray(doc["shifts"], dtype=np.float64),
                           seed=seed)
            if kind == "rotation":
                center = doc.get("center")
                return cls(
                    kind,
                    angles_deg=np.asarray(doc["angles_deg"], dtype=np.float64),
                    center=None if center is None else (float(center[0]), float(center[1])),
                    seed=seed,
                )
            if kind == "affine":
                return cls(kind, matrices=np.asarray(doc["matrices"], dtype=np.float64),
                           seed=seed)
            if kind == "smooth-deformation":
                phase = doc.get("phase", (0.0, 0.0))
                return cls(
                    kind,
                    amplitude=np.asarray(doc["amplitude"], dtype=np.float64),
                    frequency=float(doc.get("frequency", 1.0)),
                    phase=(float(phase[0]), float(phase[1])),
                    seed=seed,
                )
            if kind == "composite":
                return cls(
                    kind,
                    components=tuple(cls.from_json_dict(c) for c in doc["components"]),
                    seed=seed,
                )
        except KeyError as exc:
            raise SchemaError(f"motion spec of kind {kind!r} missing key {exc}") from exc
        except (TypeError, ValueError) as exc:
            raise SchemaError(f"malformed motion spec: {exc}") from exc
        raise SchemaError(f"unknown motion kind {kind!r}")


def load_motion_spec(path: str | Path) -> MotionSpec:
    path = Path(path)
    if not path.is_file():
        raise SchemaError(f"motion spec file not found: {path}")
    try:
        with open(path) as fh:
            doc = json.load(fh)
    except json.JSONDecodeError as exc:
        raise SchemaError(f"motion spec is not valid JSON: {exc}") from exc
    try:
        return MotionSpec.from_json_dict(doc)
    except InvalidParameterError as exc:
        raise SchemaError(f"invalid motion spec: {exc}") from exc


def save_motion_spec(spec: MotionSpec, path: str | Path) -> Path:
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    with open(path, "w") as fh:
        json.dump(spec.to_json_dict(), fh, allow_nan=False, sort_keys=True, indent=1)
        fh.write("\n")
    return path


def make_phantom(width: int = 256, height: int = 256, seed: int = 0) -> Frame:
    """Procedural test image: soft blobs and a ring over smooth gradients.

    Deterministic per seed; intensities rescaled into [8, 247] so that
    warping headroom never clips.
    """
    if width < 16 or height < 16:
        raise InvalidParameterError(
            f"phantom must be at least 16x16, got {width}x{height}"
        )
    rng = np.random.default_rng(seed)
    yy, xx = np.mgrid[0:height, 0:width].astype(np.float64)
    xn = xx / (width - 1)
    yn = yy / (height - 1)
    img = 60.0 * (xn - 0.5) + 40.0 * (yn - 0.5)
    img += 25.0 * np.sin(2.0 * np.pi * (1.3 * xn + 0.7 * yn) + rng.uniform(0, 2 * np.pi))
    side = min(width, height)
    for _ in range(6):
        cx = rng.uniform(0.15, 0.85) * (width - 1)
        cy = rng.uniform(0.15, 0.85) * (height - 1)
        amp = rng.uniform(30.0, 70.0) * rng.choice([-1.0, 1.0])
        sig = rng.uniform(0.05, 0.12) * side
        img += amp * np.exp(-((xx - cx) ** 2 + (yy - cy) ** 2) / (2.0 * sig * sig))
    # one soft ring for orientation-sensitive structure
    rcx = rng.uniform(0.35, 0.65) * (width - 1)
    rcy = rng.uniform(0.35, 0.65) * (height - 1)
    r0 = rng.uniform(0.18, 0.28) * side
    rs = rng.uniform(0.02, 0.04) * side
    r = np.sqrt((xx - rcx) ** 2 + (yy - rcy) ** 2)
    img += rng.uniform(25.0, 45.0) * np.exp(-((r - r0) ** 2) / (2.0 * rs * rs))
    lo, hi = img.min(), img.max()
    img = 8.0 + (img - lo) * (239.0 / (hi - lo))
    return Frame(img)


def make_blob(
    width: int = 128, height: int = 128, sigma: float = 12.0,
    amplitude: float = 200.0, offset: tuple[float, float] = (0.0, 0.0),
    background: float = 10.0,
) -> Frame:
    """Single Gaussian blob at the image center plus ``offset``."""
    yy, xx = np.mgrid[0:height, 0:width].astype(np.float64)
    cx = (width - 1) / 2.0 + offset[0]
    cy = (height - 1) / 2.0 + offset[1]
    img = background + amplitude * np.exp(
        -((xx - cx) ** 2 + (yy - cy) ** 2) / (2.0 * sigma * sigma)
    )
    return Frame(np.clip(img, 0.0, 255.0))


def generate(
    base: Frame, spec: MotionSpec, num_frames: int
) -> tuple[FrameSequence, list[DisplacementField]]:
    """Render a moving sequence from a base frame.

    Frame t is the base backward-warped through M_t^{-1} evaluated on the
    pixel lattice; the returned fields are exactly those generation maps
    (field 0 is the identity).
    """
    if num_frames < 2:
        raise InvalidParameterError(f"need at least 2 frames, got {num_frames}")
    if spec.num_frames != num_frames:
        raise InvalidParameterError(
            f"motion spec defines {spec.num_frames} frames, requested {num_frames}"
        )
    w, h = base.width, base.height
    spec.validate(w, h)
    ident = DisplacementField.identity(w, h)
    lattice = np.column_stack([ident.map_x.ravel(), ident.map_y.ravel()])
    frames = []
    fields = []
    for t in range(num_frames):
        src = spec.invert_points(t, lattice, w, h)
        fld = DisplacementField(src[:, 0].reshape(h, w), src[:, 1].reshape(h, w))
        frames.append(warp(Frame(base.pixels, t), fld, "bilinear", CLAMP))
        fields.append(fld)
    return FrameSequence(tuple(frames)), fields


def exact_tracks(
    spec: MotionSpec,
    queries: np.ndarray,
    num_frames: int,
    width: int,
    height: int,
    source_tag: str = "synthetic-exact",
) -> TrackSet:
    """Closed-form tracks: positions[t] = M_t(query).

    Visibility is true exactly where the mapped position stays inside
    [0, width-1] x [0, height-1].
    """
    queries = np.asarray(queries, dtype=np.float64)
    if queries.ndim != 2 or queries.shape[1] != 2 or len(queries) < 1:
        raise DimensionMismatchError(
            f"queries must have shape (N, 2), got {queries.shape}"
        )
    if spec.num_frames != num_frames:
        raise InvalidParameterError(
            f"motion spec defines {spec.num_frames} frames, requested {num_frames}"
        )
    spec.validate(width, height)
    inb = (
        (queries[:, 0] >= 0) & (queries[:, 0] <= width - 1)
        & (queries[:, 1] >= 0) & (queries[:, 1] <= height - 1)
    )
    if not inb.all():
        i = int(np.argmin(inb))
        raise InvalidParameterError(
            f"query {i} at ({queries[i, 0]:g}, {queries[i, 1]:g}) lies outside "
            f"the {width}x{height} image"
        )
    positions = np.empty((num_frames, len(queries), 2), dtype=np.float64)
    visibility = np.empty((num_frames, len(queries)), dtype=bool)
    for t in range(num_frames):
        p = spec.apply_points(t, queries, width, height)
        positions[t] = p
        visibility[t] = (
            (p[:, 0] >= 0) & (p[:, 0] <= width - 1)
            & (p[:, 1] >= 0) & (p[:, 1] <= height - 1)
        )
    return TrackSet(positions, visibility, source_tag, width, height)


def default_landmarks(
    spec: MotionSpec, num_frames: int, width: int, height: int
) -> LandmarkSet:
    """Exact trajectories of three fixed named reference points."""
    names = ("landmark-center", "landmark-upper-left", "landmark-lower-right")
    pts = np.array(
        [
            [(width - 1) / 2.0, (height - 1) / 2.0],
            [0.3 * (width - 1), 0.3 * (height - 1)],
            [0.7 * (width - 1), 0.65 * (height - 1)],
        ]
    )
    spec.validate(width, height)
    positions = np.stack(
        [spec.apply_points(t, pts, width, height) for t in range(num_frames)]
    )
    return LandmarkSet(names, positions, "reference")


def perturb_tracks(
    tracks: TrackSet,
    noise_sigma: float,
    outlier_rate: float,
    seed: int,
    drift_sigma: float = 3.0,
) -> tuple[TrackSet, np.ndarray]:
    """Corrupt tracks: Gaussian jitter plus a fraction of drifting outliers.

    Jitter of sd ``noise_sigma`` is added per coordinate to every visible
    position.  ``round(outlier_rate * N)`` tracks (seeded choice) are
    replaced by Brownian drifts of per-frame sd ``drift_sigma`` anchored
    at their frame-0 position.  With sigma 0 and rate 0 the input is
    returned unchanged (bit-equal positions).

    Returns:
        (perturbed track set, sorted indices of the outlier tracks).
    """
    if noise_sigma < 0:
        raise InvalidParameterError(f"noise_sigma must be >= 0, got {noise_sigma}")
    if not (0.0 <= outlier_rate < 1.0):
        raise InvalidParameterError(
            f"outlier_rate must be in [0, 1), got {outlier_rate}"
        )
    rng = np.random.default_rng(seed)
    pos = np.array(tracks.positions, copy=True)
    vis = tracks.visibility
    t_n = pos.shape[0]
    n = pos.shape[1]
    noise = rng.normal(0.0, noise_sigma, size=pos.shape) if noise_sigma > 0 else 0.0
    pos = np.where(vis[:, :, None], pos + noise, pos)
    n_out = int(round(outlier_rate * n))
    outliers = np.sort(rng.choice(n, size=n_out, replace=False)) if n_out else np.array([], dtype=np.int64)
    for i in outliers:
        anchor = pos[0, i]
        if not np.isfinite(anchor).all():
            anchor = np.array([(tracks.width - 1) / 2.0, (tracks.height - 1) / 2.0])
        walk = np.cumsum(rng.normal(0.0, drift_sigma, size=(t_n - 1, 2)), axis=0)
        pos[1:, i] = anchor + walk
    return (
        TrackSet(pos, vis, tracks.source_tag, tracks.width, tracks.height),
        outliers,
    )
