"""Command line entry points.

Exit codes: 0 success, 2 bad configuration or unusable input, 3 tracker
backend unavailable or inference failure.
"""

import argparse
import sys

from .errors import AdapterError, BackendUnavailableError, InferenceError
from .export import AdapterConfig, export_tracks
from .extract import extract_frames


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="adapter",
        description="Run a pretrained point tracker and emit a track file, "
        "or extract video frames.",
    )
    sub = parser.add_subparsers(dest="command")

    exp = sub.add_parser("export", help="track a frame directory")
    exp.add_argument("--tracker", required=True, help="backend name, e.g. cotracker")
    exp.add_argument("--frames", required=True, help="directory of grayscale PNGs")
    exp.add_argument("--out", required=True, help="output track file path")
    exp.add_argument("--grid", type=int, default=16, help="uniform grid side count")
    exp.add_argument("--device", default="cpu", help="device hint for the backend")

    ext = sub.add_parser("extract", help="decode a video into PNG frames")
    ext.add_argument("--video", required=True)
    ext.add_argument("--out", required=True)
    ext.add_argument("--size", type=int, default=256, help="square frame side")
    return parser


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        if args.command == "export":
            cfg = AdapterConfig(
                tracker=args.tracker,
                frames_dir=args.frames,
                out_path=args.out,
                grid=args.grid,
                device=args.device,
            )
            path = export_tracks(cfg)
            print(path)
            return 0
        if args.command == "extract":
            written = extract_frames(args.video, args.out, args.size)
            print(f"{len(written)} frames -> {args.out}")
            return 0
        parser.print_help()
        return 2
    except (BackendUnavailableError, InferenceError) as exc:
        print(f"adapter: {exc}", file=sys.stderr)
        return 3
    except AdapterError as exc:
        print(f"adapter: {exc}", file=sys.stderr)
        return 2
