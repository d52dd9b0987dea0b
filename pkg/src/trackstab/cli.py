"""Command-line pipeline: stabilize, gridsweep, register-baseline, synth,
metrics, and sample subcommands.

Configuration comes from an optional JSON file (--config) mirroring
PipelineConfig; explicit flags override file values.  Exit codes are
stable across commands: 0 success, 2 input/contract error, 3 numeric
failure.  Outputs carry no timestamps, so identical inputs and config
produce byte-identical output trees.
"""

from __future__ import annotations

import argparse
import csv
import dataclasses
import json
import sys
from dataclasses import dataclass, field as dc_field
from pathlib import Path

import numpy as np

from .errors import (
    DimensionMismatchError,
    DivergenceError,
    InvalidParameterError,
    NumericError,
    SchemaError,
    TrackStabError,
)
from .field import (
    FieldRecon,
    choose_recon,
    detect_grid,
    save_field,
    tracks_to_displacement,
)
from .imgcore import (
    CLAMP,
    BoundaryPolicy,
    Frame,
    FrameSequence,
    INTERP_MODES,
    load_frame,
    load_sequence,
    save_sequence,
    warp,
    warp_sequence,
)
from .metrics import (
    MetricsReport,
    evaluate_sequence,
    load_landmarks,
    write_report_csv,
    write_report_json,
)
from .plots import save_energy_figure, save_gridsweep_figure, save_metrics_figure
from .register import RegistrationConfig, register_diffeo
from .synth import (
    default_landmarks,
    exact_tracks,
    generate,
    load_motion_spec,
    make_phantom,
    save_motion_spec,
)
from .tracks import (
    SamplingSpec,
    TrackSet,
    load_tracks,
    sample_queries,
    sample_uniform_grid,
    save_tracks,
)
from .metrics import save_landmarks

RECON_CHOICES = ("auto", "grid-bilinear", "idw")


@dataclass
class PipelineConfig:
    """Everything a pipeline command may need; commands use their slice."""

    frames_dir: str | None = None
    tracks_path: str | None = None
    out_dir: str | None = None
    reference: int = 0
    sampling: SamplingSpec = dc_field(default_factory=SamplingSpec)
    recon_method: str = "auto"
    idw_power: float = 2.0
    idw_k: int = 8
    extrapolation: str = "clamp-to-hull"
    boundary: str = "clamp"
    interp: str = "bilinear"
    emit_fields: bool = False
    registration: RegistrationConfig = dc_field(default_factory=RegistrationConfig)
    motion_spec_path: str | None = None
    base_image_path: str | None = None
    width: int = 256
    height: int = 256
    phantom_seed: int = 0
    landmarks_path: str | None = None
    reference_landmarks_path: str | None = None
    mape_norm: float = 256.0

    def validate(self) -> None:
        if self.recon_method not in RECON_CHOICES:
            raise SchemaError(
                f"recon_method must be one of {RECON_CHOICES}, got {self.recon_method!r}"
            )
        if self.interp not in INTERP_MODES:
            raise SchemaError(
                f"interp must be one of {INTERP_MODES}, got {self.interp!r}"
            )
        BoundaryPolicy.parse(self.boundary)
        if self.reference < 0:
            raise SchemaError(f"reference frame index must be >= 0, got {self.reference}")
        if self.width < 1 or self.height < 1:
            raise SchemaError(
                f"width/height must be positive, got {self.width}x{self.height}"
            )
        if self.mape_norm <= 0:
            raise SchemaError(f"mape_norm must be positive, got {self.mape_norm}")
        if self.out_dir is not None:
            out = Path(self.out_dir).resolve()
            for label, p in (
                ("frames_dir", self.frames_dir),
                ("tracks_path", self.tracks_path),
                ("motion_spec_path", self.motion_spec_path),
                ("base_image_path", self.base_image_path),
                ("landmarks_path", self.landmarks_path),
                ("reference_landmarks_path", self.reference_landmarks_path),
            ):
                if p is None:
                    continue
                rp = Path(p).resolve()
                if rp == out or out in rp.parents:
                    raise SchemaError(
                        f"input path {label}={p!r} lies inside the output "
                        f"directory {self.out_dir!r}; inputs and outputs must "
                        f"be distinct"
                    )

    def recon(self) -> FieldRecon:
        method = "idw" if self.recon_method == "auto" else self.recon_method
        return FieldRecon(method, self.idw_power, self.idw_k, self.extrapolation)

    def to_manifest_dict(self) -> dict:
        doc = dataclasses.asdict(self)
        doc["registration"]["lambda"] = doc["registration"].pop("lam")
        return doc


_SAMPLING_KEYS = {
    "strategy", "grid_size", "count", "seed", "gftt_quality", "gftt_min_distance",
}
_REGISTRATION_KEYS = {
    "similarity", "lambda", "smoothing_sigma", "step_size", "max_iters",
    "squaring_steps", "tol",
}


def _parse_sampling(doc: dict) -> SamplingSpec:
    unknown = set(doc) - _SAMPLING_KEYS
    if unknown:
        raise SchemaError(f"unknown sampling config keys: {sorted(unknown)}")
    try:
        return SamplingSpec(**{k: doc[k] for k in doc})
    except TypeError as exc:
        raise SchemaError(f"bad sampling config: {exc}") from exc


def _parse_registration(doc: dict) -> RegistrationConfig:
    unknown = set(doc) - _REGISTRATION_KEYS
    if unknown:
        raise SchemaError(f"unknown registration config keys: {sorted(unknown)}")
    kwargs = {("lam" if k == "lambda" else k): v for k, v in doc.items()}
    try:
        return RegistrationConfig(**kwargs)
    except TypeError as exc:
        raise SchemaError(f"bad registration config: {exc}") from exc


def load_config(path: str | Path) -> PipelineConfig:
    """Parse a JSON config file mirroring PipelineConfig (strict keys)."""
    path = Path(path)
    if not path.is_file():
        raise SchemaError(f"config file not found: {path}")
    try:
        with open(path) as fh:
            doc = json.load(fh)
    except json.JSONDecodeError as exc:
        raise SchemaError(f"config file is not valid JSON: {exc}") from exc
    if not isinstance(doc, dict):
        raise SchemaError("config file must contain a JSON object")
    known = {f.name for f in dataclasses.fields(PipelineConfig)}
    unknown = set(doc) - known
    if unknown:
        raise SchemaError(f"unknown config keys: {sorted(unknown)}")
    kwargs: dict = {}
    for key, val in doc.items():
        if key == "sampling":
            kwargs[key] = _parse_sampling(val)
        elif key == "registration":
            kwargs[key] = _parse_registration(val)
        else:
            kwargs[key] = val
    try:
        cfg = PipelineConfig(**kwargs)
    except TypeError as exc:
        raise SchemaError(f"bad config: {exc}") from exc
    return cfg


def stabilize_sequence(
    seq: FrameSequence,
    tracks: TrackSet,
    recon: FieldRecon | None = None,
    reference: int = 0,
    boundary: BoundaryPolicy = CLAMP,
    interp: str = "bilinear",
):
    """Warp every frame back to the reference using track-derived fields.

    With recon=None the reconstruction is chosen automatically:
    grid-bilinear when the reference-frame queries form a grid, IDW
    otherwise.  Returns (stabilized sequence, per-frame fields).
    """
    if tracks.num_frames != seq.num_frames:
        raise DimensionMismatchError(
            f"track/frame count mismatch: tracks have {tracks.num_frames} "
            f"frames, sequence has {seq.num_frames}"
        )
    if (tracks.width, tracks.height) != (seq.width, seq.height):
        raise DimensionMismatchError(
            f"track/frame dimension mismatch: tracks are "
            f"{tracks.width}x{tracks.height}, frames are {seq.width}x{seq.height}"
        )
    if not (0 <= reference < seq.num_frames):
        raise InvalidParameterError(
            f"reference frame {reference} out of range for {seq.num_frames} frames"
        )
    if recon is None:
        recon = choose_recon(tracks.positions[reference])
    fields = [
        tracks_to_displacement(
            tracks, t, recon, seq.width, seq.height, anchor_index=reference
        )
        for t in range(seq.num_frames)
    ]
    return warp_sequence(seq, fields, interp, boundary), fields


def _write_json(doc: dict, path: Path) -> Path:
    path.parent.mkdir(parents=True, exist_ok=True)
    with open(path, "w") as fh:
        json.dump(doc, fh, sort_keys=True, indent=2)
        fh.write("\n")
    return path


def _require(cfg_value, flag: str, command: str):
    if cfg_value is None:
        raise SchemaError(f"{command} requires {flag} (flag or config entry)")
    return cfg_value


def cmd_stabilize(cfg: PipelineConfig) -> int:
    """Track-driven stabilization of a frame directory."""
    frames_dir = _require(cfg.frames_dir, "--frames", "stabilize")
    tracks_path = _require(cfg.tracks_path, "--tracks", "stabilize")
    out_dir = Path(_require(cfg.out_dir, "--out", "stabilize"))
    seq = load_sequence(frames_dir)
    tracks = load_tracks(tracks_path)
    recon = None if cfg.recon_method == "auto" else cfg.recon()
    stabilized, fields = stabilize_sequence(
        seq, tracks, recon, cfg.reference, BoundaryPolicy.parse(cfg.boundary),
        cfg.interp,
    )
    used_recon = recon or choose_recon(tracks.positions[cfg.reference],
                                       FieldRecon("idw", cfg.idw_power, cfg.idw_k,
                                                  cfg.extrapolation))
    save_sequence(stabilized, out_dir / "frames")
    if cfg.emit_fields:
        for t, fld in enumerate(fields):
            save_field(fld, out_dir / "fields" / f"field_{t:06d}.dfld")
    before = evaluate_sequence(seq, cfg.reference)
    after = evaluate_sequence(stabilized, cfg.reference)
    write_report_csv(before, out_dir / "metrics_before.csv")
    write_report_csv(after, out_dir / "metrics_after.csv")
    _write_json(
        {"before": before.to_dict(), "after": after.to_dict()},
        out_dir / "metrics.json",
    )
    save_metrics_figure(after, out_dir / "report.png", before=before,
                        title="stabilization: per-frame metrics")
    _write_json(
        {
            "command": "stabilize",
            "config": cfg.to_manifest_dict(),
            "recon_used": dataclasses.asdict(used_recon),
            "source_tag": tracks.source_tag,
            "num_frames": seq.num_frames,
            "num_points": tracks.num_points,
        },
        out_dir / "manifest.json",
    )
    return 0


def _subsample_grid_tracks(tracks: TrackSet, reference: int, g: int) -> TrackSet:
    """Every-k-th-node subsample of a grid-shaped track set."""
    grid = detect_grid(tracks.positions[reference])
    if grid is None:
        raise SchemaError(
            "gridsweep needs grid-structured tracks (or a motion spec to "
            "re-derive exact tracks)"
        )
    xs, ys, index = grid
    gx, gy = len(xs), len(ys)
    for side, name in ((gx, "x"), (gy, "y")):
        if g > side:
            raise SchemaError(
                f"cannot subsample a {gx}x{gy} track grid to {g} per side: too few "
                f"{name} nodes"
            )
        if (side - 1) % (g - 1) != 0:
            raise SchemaError(
                f"cannot subsample a {gx}x{gy} track grid to {g} per side: "
                f"({side} - 1) must be divisible by ({g} - 1)"
            )
    sel = index[:: (gy - 1) // (g - 1), :: (gx - 1) // (g - 1)].ravel()
    return TrackSet(
        tracks.positions[:, sel],
        tracks.visibility[:, sel],
        tracks.source_tag,
        tracks.width,
        tracks.height,
    )


def cmd_gridsweep(cfg: PipelineConfig, sizes: list[int]) -> int:
    """Stabilization quality as a function of track-grid density."""
    frames_dir = _require(cfg.frames_dir, "--frames", "gridsweep")
    out_dir = Path(_require(cfg.out_dir, "--out", "gridsweep"))
    if not sizes:
        raise SchemaError("gridsweep requires at least one grid size (--sizes)")
    for g in sizes:
        if g < 2:
            raise SchemaError(f"grid sizes must be >= 2, got {g}")
    sizes = sorted(set(sizes))
    seq = load_sequence(frames_dir)
    spec = None
    tracks = None
    if cfg.motion_spec_path is not None:
        spec = load_motion_spec(cfg.motion_spec_path)
    else:
        tracks = load_tracks(_require(
            cfg.tracks_path, "--tracks or motion_spec_path", "gridsweep"
        ))
    boundary = BoundaryPolicy.parse(cfg.boundary)
    rows = []
    for g in sizes:
        if spec is not None:
            queries = sample_uniform_grid(seq.width, seq.height, g)
            tracks_g = exact_tracks(
                spec, queries, seq.num_frames, seq.width, seq.height,
                source_tag=f"synthetic-exact-grid{g}",
            )
        else:
            tracks_g = _subsample_grid_tracks(tracks, cfg.reference, g)
        stabilized, _ = stabilize_sequence(
            seq, tracks_g, None, cfg.reference, boundary, cfg.interp
        )
        rep = evaluate_sequence(stabilized, cfg.reference)
        rows.append((g, rep.mse_mean, rep.ssim_mean))
    out_dir.mkdir(parents=True, exist_ok=True)
    with open(out_dir / "gridsweep.csv", "w", newline="") as fh:
        writer = csv.writer(fh, lineterminator="\n")
        writer.writerow(["grid_size", "mse_mean", "ssim_mean"])
        for g, m, s in rows:
            writer.writerow([g, repr(float(m)), repr(float(s))])
    save_gridsweep_figure(rows, out_dir / "gridsweep.png")
    _write_json(
        {
            "command": "gridsweep",
            "config": cfg.to_manifest_dict(),
            "sizes": sizes,
            "num_frames": seq.num_frames,
        },
        out_dir / "manifest.json",
    )
    return 0


def cmd_register_baseline(cfg: PipelineConfig) -> int:
    """Intensity-registration baseline over a frame directory."""
    frames_dir = _require(cfg.frames_dir, "--frames", "register-baseline")
    out_dir = Path(_require(cfg.out_dir, "--out", "register-baseline"))
    seq = load_sequence(frames_dir)
    if not (0 <= cfg.reference < seq.num_frames):
        raise InvalidParameterError(
            f"reference frame {cfg.reference} out of range for {seq.num_frames} frames"
        )
    fixed = seq[cfg.reference]
    boundary = BoundaryPolicy.parse(cfg.boundary)
    out_frames = []
    traces: dict[int, list[float]] = {}
    failures = []
    for t, frame in enumerate(seq):
        try:
            fld, trace = register_diffeo(frame, fixed, cfg.registration)
        except DivergenceError as exc:
            failures.append(
                {"frame_index": t, "iteration": exc.iteration, "message": str(exc)}
            )
            out_frames.append(frame)
            continue
        traces[t] = trace
        out_frames.append(warp(frame, fld, "bilinear", boundary))
    stabilized = FrameSequence(tuple(out_frames), fps=seq.fps)
    save_sequence(stabilized, out_dir / "frames")
    with open(out_dir / "traces.csv", "w", newline="") as fh:
        writer = csv.writer(fh, lineterminator="\n")
        writer.writerow(["frame_index", "iteration", "energy"])
        for t in sorted(traces):
            for it, e in enumerate(traces[t]):
                writer.writerow([t, it, repr(float(e))])
    if traces:
        save_energy_figure(traces, out_dir / "energy.png")
    before = evaluate_sequence(seq, cfg.reference)
    after = evaluate_sequence(stabilized, cfg.reference)
    write_report_csv(before, out_dir / "metrics_before.csv")
    write_report_csv(after, out_dir / "metrics_after.csv")
    _write_json(
        {"before": before.to_dict(), "after": after.to_dict()},
        out_dir / "metrics.json",
    )
    save_metrics_figure(after, out_dir / "report.png", before=before,
                        title="registration baseline: per-frame metrics")
    _write_json(
        {
            "command": "register-baseline",
            "config": cfg.to_manifest_dict(),
            "num_frames": seq.num_frames,
            "failures": failures,
        },
        out_dir / "manifest.json",
    )
    if failures:
        print(
            f"register-baseline: {len(failures)} frame(s) diverged; see manifest",
            file=sys.stderr,
        )
        return 3
    return 0


def cmd_synth(cfg: PipelineConfig) -> int:
    """Generate a synthetic sequence, exact tracks, and landmarks."""
    spec_path = _require(cfg.motion_spec_path, "--spec", "synth")
    out_dir = Path(_require(cfg.out_dir, "--out", "synth"))
    spec = load_motion_spec(spec_path)
    if spec.num_frames < 2:
        raise SchemaError(
            f"motion spec must define at least 2 frames, got {spec.num_frames}"
        )
    if cfg.base_image_path is not None:
        base = load_frame(cfg.base_image_path)
    else:
        base = make_phantom(cfg.width, cfg.height, cfg.phantom_seed)
    seq, _ = generate(base, spec, spec.num_frames)
    save_sequence(seq, out_dir / "frames")
    queries = sample_queries(cfg.sampling, base, base.width, base.height)
    if len(queries) < 3:
        raise SchemaError(
            f"sampling produced only {len(queries)} query points; need >= 3"
        )
    tracks = exact_tracks(
        spec, queries, spec.num_frames, base.width, base.height,
        source_tag=f"synthetic-exact-{cfg.sampling.strategy}",
    )
    save_tracks(tracks, out_dir / "tracks.json")
    save_landmarks(
        default_landmarks(spec, spec.num_frames, base.width, base.height),
        out_dir / "landmarks.json",
    )
    save_motion_spec(spec, out_dir / "motion_spec.json")
    _write_json(
        {
            "command": "synth",
            "config": cfg.to_manifest_dict(),
            "motion_kind": spec.kind,
            "motion_seed": spec.seed,
            "phantom_seed": cfg.phantom_seed,
            "num_frames": spec.num_frames,
            "num_points": tracks.num_points,
            "width": base.width,
            "height": base.height,
        },
        out_dir / "manifest.json",
    )
    return 0


def cmd_metrics(cfg: PipelineConfig) -> int:
    """Evaluate a frame directory against its reference frame."""
    frames_dir = _require(cfg.frames_dir, "--frames", "metrics")
    out_dir = Path(_require(cfg.out_dir, "--out", "metrics"))
    seq = load_sequence(frames_dir)
    pairs = None
    if cfg.landmarks_path is not None or cfg.reference_landmarks_path is not None:
        if cfg.landmarks_path is None or cfg.reference_landmarks_path is None:
            raise SchemaError(
                "landmark MAPE needs both --landmarks (predicted) and "
                "--landmarks-ref (reference)"
            )
        pairs = (
            load_landmarks(cfg.landmarks_path),
            load_landmarks(cfg.reference_landmarks_path),
        )
    report = evaluate_sequence(
        seq, cfg.reference, mape_pairs=pairs, mape_norm=cfg.mape_norm
    )
    write_report_csv(report, out_dir / "metrics.csv")
    write_report_json(report, out_dir / "metrics.json")
    save_metrics_figure(report, out_dir / "report.png",
                        title="per-frame metrics vs reference")
    _write_json(
        {
            "command": "metrics",
            "config": cfg.to_manifest_dict(),
            "num_frames": seq.num_frames,
        },
        out_dir / "manifest.json",
    )
    return 0


def cmd_sample(cfg: PipelineConfig) -> int:
    """Emit query points for the configured sampling strategy."""
    out_dir = Path(_require(cfg.out_dir, "--out", "sample"))
    frame = None
    width, height = cfg.width, cfg.height
    if cfg.frames_dir is not None:
        seq = load_sequence(cfg.frames_dir)
        frame = seq[0]
        width, height = seq.width, seq.height
    elif cfg.sampling.strategy == "gftt":
        raise SchemaError("gftt sampling requires --frames to score a frame")
    points = sample_queries(cfg.sampling, frame, width, height)
    _write_json(
        {
            "schema_version": 1,
            "strategy": cfg.sampling.strategy,
            "seed": cfg.sampling.seed,
            "width": width,
            "height": height,
            "count": len(points),
            "points": [[float(x), float(y)] for x, y in points],
        },
        out_dir / "points.json",
    )
    _write_json(
        {"command": "sample", "config": cfg.to_manifest_dict(),
         "num_points": len(points)},
        out_dir / "manifest.json",
    )
    return 0


def _normalize_strategy(name: str) -> str:
    return {"uniform": "uniform-grid"}.get(name, name)


def _add_common_flags(p: argparse.ArgumentParser) -> None:
    p.add_argument("--config", help="JSON config file mirroring PipelineConfig")
    p.add_argument("--frames", help="input frame directory")
    p.add_argument("--tracks", help="track file (JSON schema v1)")
    p.add_argument("--out", help="output directory")
    p.add_argument("--reference", type=int, help="reference frame index (default 0)")
    p.add_argument("--grid", type=int, help="uniform-grid side count")
    p.add_argument(
        "--strategy", choices=["uniform", "uniform-grid", "random", "gftt"],
        help="query sampling strategy",
    )
    p.add_argument("--count", type=int, help="point count for random/gftt sampling")
    p.add_argument("--seed", type=int, help="seed for all randomized behavior")
    p.add_argument("--boundary", help="warp boundary: clamp or constant[:value]")
    p.add_argument(
        "--emit-fields", action="store_const", const=True, default=None,
        help="also write per-frame displacement field dumps",
    )
    p.add_argument("--recon", choices=list(RECON_CHOICES),
                   help="field reconstruction method (default auto)")
    p.add_argument("--interp", choices=list(INTERP_MODES), help="warp interpolation")


def resolve_config(args: argparse.Namespace) -> PipelineConfig:
    """Config file first, then explicit flags override."""
    cfg = load_config(args.config) if getattr(args, "config", None) else PipelineConfig()
    simple = {
        "frames": "frames_dir",
        "tracks": "tracks_path",
        "out": "out_dir",
        "reference": "reference",
        "boundary": "boundary",
        "emit_fields": "emit_fields",
        "recon": "recon_method",
        "interp": "interp",
        "spec": "motion_spec_path",
        "base": "base_image_path",
        "size": None,  # handled below
        "landmarks": "landmarks_path",
        "landmarks_ref": "reference_landmarks_path",
        "norm": "mape_norm",
    }
    for flag, field_name in simple.items():
        if field_name is None:
            continue
        val = getattr(args, flag, None)
        if val is not None:
            setattr(cfg, field_name, val)
    size = getattr(args, "size", None)
    if size is not None:
        cfg.width = size
        cfg.height = size
    samp = dataclasses.asdict(cfg.sampling)
    if getattr(args, "strategy", None) is not None:
        samp["strategy"] = _normalize_strategy(args.strategy)
    if getattr(args, "grid", None) is not None:
        samp["grid_size"] = args.grid
        if getattr(args, "strategy", None) is None and cfg.sampling.strategy != "uniform-grid":
            samp["strategy"] = "uniform-grid"
    if getattr(args, "count", None) is not None:
        samp["count"] = args.count
    if getattr(args, "seed", None) is not None:
        samp["seed"] = args.seed
        cfg.phantom_seed = args.seed
    cfg.sampling = SamplingSpec(**samp)
    reg = dataclasses.asdict(cfg.registration)
    for flag, key in (
        ("similarity", "similarity"),
        ("step_size", "step_size"),
        ("max_iters", "max_iters"),
        ("smoothing_sigma", "smoothing_sigma"),
        ("reg_lambda", "lam"),
    ):
        val = getattr(args, flag, None)
        if val is not None:
            reg[key] = val
    cfg.registration = RegistrationConfig(**reg)
    cfg.validate()
    return cfg


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="trackstab",
        description="Track-driven motion correction for frame sequences",
    )
    sub = parser.add_subparsers(dest="command")

    p = sub.add_parser("stabilize", help="warp frames back to the reference "
                                         "using tracked points")
    _add_common_flags(p)
    p.set_defaults(func=lambda cfg, args: cmd_stabilize(cfg))

    p = sub.add_parser("gridsweep", help="stabilization quality vs grid density")
    _add_common_flags(p)
    p.add_argument("--sizes", required=True,
                   help="comma-separated grid sizes, e.g. 4,8,16,64")
    p.add_argument("--spec", help="motion spec JSON to re-derive exact tracks")
    p.set_defaults(func=lambda cfg, args: cmd_gridsweep(
        cfg, [int(s) for s in args.sizes.split(",") if s.strip()]
    ))

    p = sub.add_parser("register-baseline",
                       help="intensity-based diffeomorphic registration")
    _add_common_flags(p)
    p.add_argument("--similarity", choices=["ssd", "ncc"], help="similarity measure")
    p.add_argument("--step-size", dest="step_size", type=float, help="gradient step")
    p.add_argument("--max-iters", dest="max_iters", type=int, help="iteration cap")
    p.add_argument("--smoothing-sigma", dest="smoothing_sigma", type=float,
                   help="update smoothing width")
    p.add_argument("--lambda", dest="reg_lambda", type=float,
                   help="regularization weight")
    p.set_defaults(func=lambda cfg, args: cmd_register_baseline(cfg))

    p = sub.add_parser("synth", help="generate synthetic frames + exact tracks")
    _add_common_flags(p)
    p.add_argument("--spec", help="motion spec JSON file")
    p.add_argument("--base", help="base image (default: procedural phantom)")
    p.add_argument("--size", type=int, help="phantom side length (square)")
    p.set_defaults(func=lambda cfg, args: cmd_synth(cfg))

    p = sub.add_parser("metrics", help="evaluate frames against a reference")
    _add_common_flags(p)
    p.add_argument("--landmarks", help="predicted landmark JSON")
    p.add_argument("--landmarks-ref", dest="landmarks_ref",
                   help="reference landmark JSON")
    p.add_argument("--norm", type=float, help="MAPE normalization length (px)")
    p.set_defaults(func=lambda cfg, args: cmd_metrics(cfg))

    p = sub.add_parser("sample", help="emit query points for a sampling strategy")
    _add_common_flags(p)
    p.add_argument("--size", type=int, help="image side when no frames are given")
    p.set_defaults(func=lambda cfg, args: cmd_sample(cfg))

    return parser


def main(argv: list[str] | None = None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    if not hasattr(args, "func"):
        parser.print_help()
        return 2
    try:
        cfg = resolve_config(args)
        return args.func(cfg, args)
    except NumericError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 3
    except TrackStabError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2


if __name__ == "__main__":
    sys.exit(main())
