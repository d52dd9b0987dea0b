"""trackstab: motion correction driven by sparse point tracks.

Sparse markerless tracks are interpolated into dense displacement fields
that warp every frame back onto a reference frame.  The package also
ships a minimal diffeomorphic intensity-registration baseline, SSIM/MSE/
landmark metrics, a synthetic ground-truth generator, and a CLI.
"""

from .errors import (
    ConstantImageError,
    DimensionMismatchError,
    DivergenceError,
    GridLayoutError,
    InputContractError,
    InsufficientPointsError,
    InvalidParameterError,
    NonFiniteFieldError,
    NumericError,
    SchemaError,
    TrackStabError,
)
from .imgcore import (
    CLAMP,
    BoundaryPolicy,
    DisplacementField,
    Frame,
    FrameSequence,
    central_crop,
    load_frame,
    load_sequence,
    resize_to,
    sample_at,
    save_frame,
    save_sequence,
    warp,
    warp_sequence,
)
from .tracks import (
    SamplingSpec,
    TrackSet,
    load_tracks,
    sample_gftt,
    sample_queries,
    sample_random,
    sample_uniform_grid,
    save_tracks,
)
from .field import (
    FieldRecon,
    VelocityField,
    choose_recon,
    compose,
    detect_grid,
    integrate_euler,
    jacobian_determinant,
    load_field,
    save_field,
    tracks_to_displacement,
)
from .register import (
    RegistrationConfig,
    StationaryVelocity,
    energy,
    exp_map,
    register_diffeo,
)
from .metrics import (
    LandmarkSet,
    MetricsReport,
    SsimParams,
    evaluate_sequence,
    gaussian_window,
    load_landmarks,
    mape,
    mse,
    save_landmarks,
    ssim,
    write_report_csv,
    write_report_json,
)
from .synth import (
    MotionSpec,
    default_landmarks,
    exact_tracks,
    generate,
    load_motion_spec,
    make_blob,
    make_phantom,
    perturb_tracks,
    save_motion_spec,
)
from .cli import PipelineConfig, main, stabilize_sequence

__version__ = "0.1.0"

__all__ = [
    "BoundaryPolicy", "CLAMP", "ConstantImageError", "DimensionMismatchError",
    "DisplacementField", "DivergenceError", "FieldRecon", "Frame",
    "FrameSequence", "GridLayoutError", "InputContractError",
    "InsufficientPointsError", "InvalidParameterError", "LandmarkSet",
    "MetricsReport", "MotionSpec", "NonFiniteFieldError", "NumericError",
    "PipelineConfig", "RegistrationConfig", "SamplingSpec", "SchemaError",
    "SsimParams", "StationaryVelocity", "TrackSet", "TrackStabError",
    "VelocityField", "central_crop", "choose_recon", "compose",
    "default_landmarks", "detect_grid", "energy", "evaluate_sequence",
    "exact_tracks", "exp_map", "gaussian_window", "generate", "integrate_euler",
    "jacobian_determinant", "load_field", "load_frame", "load_landmarks",
    "load_motion_spec", "load_sequence", "load_tracks", "main", "make_blob",
    "make_phantom", "mape", "mse", "perturb_tracks", "register_diffeo",
    "resize_to", "sample_at", "sample_gftt", "sample_queries", "sample_random",
    "sample_uniform_grid", "save_field", "save_frame", "save_landmarks",
    "save_motion_spec", "save_sequence", "save_tracks", "ssim",
    "stabilize_sequence", "tracks_to_displacement", "warp", "warp_sequence",
    "write_report_csv", "write_report_json",
]
