"""Dense motion fields from sparse tracks, plus field algebra.

The stabilization direction: a track gives, for a query point q at the
reference frame, its position p(t) in frame t.  The dense field built
from those pairs maps reference coordinates to frame-t coordinates, which
is exactly the backward-warp map that pulls frame t onto the reference.

Two reconstructions are provided: exact bilinear interpolation on the
node lattice when the queries form a rectilinear grid, and inverse
distance weighting (IDW) for scattered points.
"""

from __future__ import annotations

import struct
from dataclasses import dataclass
from pathlib import Path

import numpy as np
from scipy.spatial import cKDTree

from .errors import (
    DimensionMismatchError,
    GridLayoutError,
    InsufficientPointsError,
    InvalidParameterError,
    NonFiniteFieldError,
    SchemaError,
)
from .imgcore import CLAMP, DisplacementField, sample_at
from .tracks import TrackSet

RECON_METHODS = ("grid-bilinear", "idw")
EXTRAPOLATION_MODES = ("clamp-to-hull", "nearest-point")

_EXACT_HIT = 1e-9


@dataclass(frozen=True)
class VelocityField:
    """Per-pixel motion components in pixels per timestep."""

    vx: np.ndarray
    vy: np.ndarray
    timestep: float = 1.0

    def __post_init__(self):
        vx = np.asarray(self.vx, dtype=np.float64)
        vy = np.asarray(self.vy, dtype=np.float64)
        if vx.ndim != 2 or vx.size == 0:
            raise DimensionMismatchError(
                f"vx must be a non-empty 2-D array, got shape {vx.shape}"
            )
        if vy.shape != vx.shape:
            raise DimensionMismatchError(
                f"vx and vy shapes differ: {vx.shape} vs {vy.shape}"
            )
        if not (np.isfinite(vx).all() and np.isfinite(vy).all()):
            raise NonFiniteFieldError("velocity field contains non-finite entries")
        if not (np.isfinite(self.timestep) and self.timestep > 0):
            raise InvalidParameterError(f"timestep must be positive, got {self.timestep}")
        object.__setattr__(self, "vx", vx)
        object.__setattr__(self, "vy", vy)

    @property
    def height(self) -> int:
        return self.vx.shape[0]

    @property
    def width(self) -> int:
        return self.vx.shape[1]

    @property
    def shape(self) -> tuple[int, int]:
        return self.vx.shape


@dataclass(frozen=True)
class FieldRecon:
    """How to turn sparse (query, position) pairs into a dense field."""

    method: str = "idw"
    idw_power: float = 2.0
    idw_k: int = 8
    extrapolation: str = "clamp-to-hull"

    def __post_init__(self):
        if self.method not in RECON_METHODS:
            raise InvalidParameterError(
                f"reconstruction method must be one of {RECON_METHODS}, got {self.method!r}"
            )
        if not self.idw_power > 0:
            raise InvalidParameterError(f"idw_power must be > 0, got {self.idw_power}")
        if self.idw_k < 1:
            raise InvalidParameterError(f"idw_k must be >= 1, got {self.idw_k}")
        if self.extrapolation not in EXTRAPOLATION_MODES:
            raise InvalidParameterError(
                f"extrapolation must be one of {EXTRAPOLATION_MODES}, "
                f"got {self.extrapolation!r}"
            )


def detect_grid(queries: np.ndarray, decimals: int = 6):
    """Detect a rectilinear grid layout in a query point set.

    Returns (xs, ys, index) where xs/ys are the sorted node coordinates
    and index[iy, ix] is the query index of node (iy, ix), or None when
    the points do not form a complete grid with >= 2 nodes per axis.
    """
    queries = np.asarray(queries, dtype=np.float64)
    if queries.ndim != 2 or queries.shape[1] != 2 or len(queries) < 4:
        return None
    if not np.isfinite(queries).all():
        return None
    rounded = np.round(queries, decimals)
    xs = np.unique(rounded[:, 0])
    ys = np.unique(rounded[:, 1])
    if len(xs) < 2 or len(ys) < 2 or len(xs) * len(ys) != len(queries):
        return None
    x_pos = {v: i for i, v in enumerate(xs)}
    y_pos = {v: i for i, v in enumerate(ys)}
    index = np.full((len(ys), len(xs)), -1, dtype=np.int64)
    for qi, (x, y) in enumerate(rounded):
        iy, ix = y_pos[y], x_pos[x]
        if index[iy, ix] != -1:
            return None
        index[iy, ix] = qi
    if (index < 0).any():
        return None
    return xs, ys, index


def choose_recon(queries: np.ndarray, base: FieldRecon | None = None) -> FieldRecon:
    """Pick grid-bilinear when the queries form a grid, IDW otherwise."""
    base = base or FieldRecon()
    method = "grid-bilinear" if detect_grid(queries) is not None else "idw"
    return FieldRecon(method, base.idw_power, base.idw_k, base.extrapolation)


def _nearest_index(nodes: np.ndarray, coords: np.ndarray) -> np.ndarray:
    """Index of the nearest value in sorted 1-D ``nodes`` for each coord."""
    j = np.clip(np.searchsorted(nodes, coords), 1, len(nodes) - 1)
    left = nodes[j - 1]
    right = nodes[j]
    return np.where(coords - left <= right - coords, j - 1, j)


def _grid_fill_invisible(
    xs: np.ndarray, ys: np.ndarray, disp: np.ndarray, node_vis: np.ndarray,
    power: float, k: int,
) -> np.ndarray:
    """Fill invisible grid nodes from visible neighbors.

    Prefers IDW over the visible 4-neighborhood; nodes with no visible
    axis neighbor fall back to IDW over the k nearest visible nodes.
    """
    gy, gx = node_vis.shape
    filled = disp.copy()
    vis_pts = None
    vis_disp = None
    tree = None
    for iy, ix in np.argwhere(~node_vis):
        neigh = []
        for ny, nx in ((iy - 1, ix), (iy + 1, ix), (iy, ix - 1), (iy, ix + 1)):
            if 0 <= ny < gy and 0 <= nx < gx and node_vis[ny, nx]:
                d = np.hypot(xs[nx] - xs[ix], ys[ny] - ys[iy])
                neigh.append((d, disp[ny, nx]))
        if neigh:
            w = np.array([1.0 / max(d, _EXACT_HIT) ** power for d, _ in neigh])
            vals = np.array([v for _, v in neigh])
            filled[iy, ix] = (w[:, None] * vals).sum(axis=0) / w.sum()
            continue
        if tree is None:
            vy, vx_ = np.nonzero(node_vis)
            vis_pts = np.column_stack([xs[vx_], ys[vy]])
            vis_disp = disp[vy, vx_]
            tree = cKDTree(vis_pts)
        kk = min(k, len(vis_pts))
        dist, idx = tree.query([xs[ix], ys[iy]], k=kk)
        dist = np.atleast_1d(dist)
        idx = np.atleast_1d(idx)
        w = 1.0 / np.maximum(dist, _EXACT_HIT) ** power
        filled[iy, ix] = (w[:, None] * vis_disp[idx]).sum(axis=0) / w.sum()
    return filled


def _grid_bilinear_dense(
    xs: np.ndarray, ys: np.ndarray, node_dx: np.ndarray, node_dy: np.ndarray,
    width: int, height: int, extrapolation: str,
) -> tuple[np.ndarray, np.ndarray]:
    px = np.arange(width, dtype=np.float64)
    py = np.arange(height, dtype=np.float64)
    # clamp-to-hull: evaluate at coordinates clipped into the node bbox;
    # inside the bbox this leaves coordinates unchanged
    cx = np.clip(px, xs[0], xs[-1])
    cy = np.clip(py, ys[0], ys[-1])
    ix = np.clip(np.searchsorted(xs, cx, side="right") - 1, 0, len(xs) - 2)
    iy = np.clip(np.searchsorted(ys, cy, side="right") - 1, 0, len(ys) - 2)
    tx = (cx - xs[ix]) / (xs[ix + 1] - xs[ix])
    ty = (cy - ys[iy]) / (ys[iy + 1] - ys[iy])

    def blend(node_vals):
        v00 = node_vals[np.ix_(iy, ix)]
        v01 = node_vals[np.ix_(iy, ix + 1)]
        v10 = node_vals[np.ix_(iy + 1, ix)]
        v11 = node_vals[np.ix_(iy + 1, ix + 1)]
        top = (1.0 - tx)[None, :] * v00 + tx[None, :] * v01
        bot = (1.0 - tx)[None, :] * v10 + tx[None, :] * v11
        return (1.0 - ty)[:, None] * top + ty[:, None] * bot

    dx = blend(node_dx)
    dy = blend(node_dy)
    if extrapolation == "nearest-point":
        out_x = (px < xs[0]) | (px > xs[-1])
        out_y = (py < ys[0]) | (py > ys[-1])
        if out_x.any() or out_y.any():
            jx = _nearest_index(xs, px)
            jy = _nearest_index(ys, py)
            mask = out_y[:, None] | out_x[None, :]
            dx = np.where(mask, node_dx[np.ix_(jy, jx)], dx)
            dy = np.where(mask, node_dy[np.ix_(jy, jx)], dy)
    return dx, dy


def _idw_dense(
    pts: np.ndarray, disp: np.ndarray, width: int, height: int,
    power: float, k: int, extrapolation: str,
) -> tuple[np.ndarray, np.ndarray]:
    gx, gy = np.meshgrid(
        np.arange(width, dtype=np.float64), np.arange(height, dtype=np.float64)
    )
    coords = np.column_stack([gx.ravel(), gy.ravel()])
    lo = pts.min(axis=0)
    hi = pts.max(axis=0)
    outside = ((coords < lo) | (coords > hi)).any(axis=1)
    eval_coords = coords
    if extrapolation == "clamp-to-hull":
        eval_coords = np.clip(coords, lo, hi)

    tree = cKDTree(pts)
    kk = min(k, len(pts))
    dist, idx = tree.query(eval_coords, k=kk)
    if kk == 1:
        dist = dist[:, None]
        idx = idx[:, None]
    with np.errstate(divide="ignore"):
        w = 1.0 / dist ** power
    # exact hits: the nearest neighbor is (numerically) at the eval point
    hit = dist[:, 0] < _EXACT_HIT
    w[hit] = 0.0
    w[hit, 0] = 1.0
    wsum = w.sum(axis=1)
    vals_x = (w * disp[idx, 0]).sum(axis=1) / wsum
    vals_y = (w * disp[idx, 1]).sum(axis=1) / wsum
    if extrapolation == "nearest-point" and outside.any():
        _, near = tree.query(coords[outside], k=1)
        vals_x[outside] = disp[near, 0]
        vals_y[outside] = disp[near, 1]
    return vals_x.reshape(height, width), vals_y.reshape(height, width)


def tracks_to_displacement(
    tracks: TrackSet,
    t: int,
    recon: FieldRecon,
    width: int,
    height: int,
    anchor_index: int = 0,
) -> DisplacementField:
    """Dense field mapping anchor-frame coordinates to frame-t coordinates.

    At every query visible in both frames the field reproduces the track
    exactly (grid-bilinear at nodes) or up to neighbor interpolation (idw).
    Warping frame t through the result pulls it back onto the anchor frame.

    Args:
        tracks: track set whose anchor-frame positions act as queries.
        t: target frame index.
        recon: reconstruction settings.
        width, height: output field size in pixels.
        anchor_index: frame whose positions anchor the displacements
            (default 0, the standard reference).
    """
    if width < 1 or height < 1:
        raise InvalidParameterError(
            f"field dimensions must be positive, got {width}x{height}"
        )
    for name, idx in (("t", t), ("anchor_index", anchor_index)):
        if not (0 <= idx < tracks.num_frames):
            raise InvalidParameterError(
                f"{name}={idx} out of range for {tracks.num_frames} frames"
            )
    anchors = tracks.positions[anchor_index]
    targets = tracks.positions[t]
    vis = tracks.visibility[anchor_index] & tracks.visibility[t]
    n_vis = int(vis.sum())
    if n_vis < 3:
        raise InsufficientPointsError(
            f"need at least 3 visible points to reconstruct a field, "
            f"got {n_vis} at frame {t}"
        )

    if recon.method == "grid-bilinear":
        grid = detect_grid(anchors)
        if grid is None:
            raise GridLayoutError(
                "grid-bilinear reconstruction requires queries laid out as a "
                "complete rectilinear grid; use idw for scattered points"
            )
        xs, ys, index = grid
        node_vis = vis[index]
        node_dx = np.where(node_vis, targets[index, 0] - anchors[index, 0], 0.0)
        node_dy = np.where(node_vis, targets[index, 1] - anchors[index, 1], 0.0)
        if not node_vis.all():
            disp = np.stack([node_dx, node_dy], axis=-1)
            disp = _grid_fill_invisible(
                xs, ys, disp, node_vis, recon.idw_power, recon.idw_k
            )
            node_dx, node_dy = disp[..., 0], disp[..., 1]
        dx, dy = _grid_bilinear_dense(
            xs, ys, node_dx, node_dy, width, height, recon.extrapolation
        )
    else:
        pts = anchors[vis]
        disp = targets[vis] - anchors[vis]
        dx, dy = _idw_dense(
            pts, disp, width, height, recon.idw_power, recon.idw_k,
            recon.extrapolation,
        )
    return DisplacementField.from_displacement(dx, dy)


def integrate_euler(
    velocities: list[VelocityField] | tuple[VelocityField, ...],
    interp: str = "bilinear",
) -> DisplacementField:
    """Forward-Euler flow of a velocity sequence, starting from identity.

    Each step samples the current velocity field at the current mapped
    position (bilinear, clamp-to-edge) and advances by timestep * v.
    """
    velocities = list(velocities)
    if not velocities:
        raise InvalidParameterError("need at least one velocity field to integrate")
    shape = velocities[0].shape
    for i, v in enumerate(velocities):
        if v.shape != shape:
            raise DimensionMismatchError(
                f"velocity step {i} has shape {v.shape}, expected {shape}"
            )
    h, w = shape
    ident = DisplacementField.identity(w, h)
    phi_x = ident.map_x.copy()
    phi_y = ident.map_y.copy()
    for v in velocities:
        sx = sample_at(v.vx, phi_x, phi_y, interp, CLAMP)
        sy = sample_at(v.vy, phi_x, phi_y, interp, CLAMP)
        phi_x = phi_x + v.timestep * sx
        phi_y = phi_y + v.timestep * sy
    return DisplacementField(phi_x, phi_y)


def compose(outer: DisplacementField, inner: DisplacementField) -> DisplacementField:
    """Field composition: result(x) = outer(inner(x)).

    outer's coordinate maps are sampled bilinearly (clamp-to-edge) at
    inner's coordinates.
    """
    if outer.shape != inner.shape:
        raise DimensionMismatchError(
            f"cannot compose fields of shapes {outer.shape} and {inner.shape}"
        )
    outer.require_finite("compose (outer)")
    inner.require_finite("compose (inner)")
    mx = sample_at(outer.map_x, inner.map_x, inner.map_y, "bilinear", CLAMP)
    my = sample_at(outer.map_y, inner.map_x, inner.map_y, "bilinear", CLAMP)
    return DisplacementField(mx, my)


def jacobian_determinant(field: DisplacementField) -> np.ndarray:
    """Per-pixel Jacobian determinant of the coordinate map.

    Central differences at interior pixels, one-sided at the boundary.
    Identity and any pure translation give 1.0 everywhere.
    """
    if field.height < 3 or field.width < 3:
        raise InvalidParameterError(
            f"jacobian needs at least 3x3 fields, got {field.width}x{field.height}"
        )
    field.require_finite("jacobian_determinant")
    dmx_dy, dmx_dx = np.gradient(field.map_x)
    dmy_dy, dmy_dx = np.gradient(field.map_y)
    return dmx_dx * dmy_dy - dmx_dy * dmy_dx


FIELD_MAGIC = b"DFLD"


def save_field(field: DisplacementField, path: str | Path) -> Path:
    """Write the binary field dump: magic, u32 w, u32 h, f32 maps (LE)."""
    field.require_finite("save_field")
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    with open(path, "wb") as fh:
        fh.write(struct.pack("<4sII", FIELD_MAGIC, field.width, field.height))
        fh.write(field.map_x.astype("<f4").tobytes(order="C"))
        fh.write(field.map_y.astype("<f4").tobytes(order="C"))
    return path


def load_field(path: str | Path) -> DisplacementField:
    path = Path(path)
    if not path.is_file():
        raise SchemaError(f"field file not found: {path}")
    blob = path.read_bytes()
    if len(blob) < 12 or blob[:4] != FIELD_MAGIC:
        raise SchemaError(f"not a field dump (bad magic) in {path}")
    _, w, h = struct.unpack("<4sII", blob[:12])
    expected = 12 + 2 * 4 * w * h
    if len(blob) != expected:
        raise SchemaError(
            f"field dump {path} has {len(blob)} bytes, expected {expected} "
            f"for {w}x{h}"
        )
    count = w * h
    mx = np.frombuffer(blob, dtype="<f4", count=count, offset=12)
    my = np.frombuffer(blob, dtype="<f4", count=count, offset=12 + 4 * count)
    return DisplacementField(
        mx.astype(np.float64).reshape(h, w), my.astype(np.float64).reshape(h, w)
    )
