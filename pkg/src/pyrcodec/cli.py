"""Command-line interface: ``pyrcodec <command> ...``.

Exit status is 0 on success, 2 for usage, format and shape problems and 3
when a stream fails its integrity checks.
"""

from __future__ import annotations

import argparse
import csv
import logging
import sys
from pathlib import Path

from . import container
from .codec import CodecConfig, decode, encode, report_for
from .codec.stream import CodedStream
from .errors import DomainError, FormatError, IntegrityError, PyrCodecError, ShapeError
from .postprocess import IsolationForestConfig, despeckle_with_mask
from .ppm import read_image, write_image
from .pyramid import auto_levels, build_pyramid, invert_pyramid, level_shapes
from .scan import critical_path
from .stats import mutual_information_curve, pyramid_components, pyramid_entropy_profile

log = logging.getLogger("pyrcodec")

EXIT_OK = 0
EXIT_USAGE = 2
EXIT_INTEGRITY = 3
IMAGE_SUFFIXES = (".ppm", ".pgm", ".pnm", ".png")


def _levels_arg(text):
    if text == "auto":
        return None
    try:
        value = int(text)
    except ValueError:
        raise argparse.ArgumentTypeError(f"expected 'auto' or an integer, got {text!r}") from None
    if value < 0:
        raise argparse.ArgumentTypeError("level count must be non-negative")
    return value


def _squeeze_list(text):
    try:
        values = [int(v) for v in text.split(",")]
    except ValueError:
        raise argparse.ArgumentTypeError(f"expected an integer or comma list, got {text!r}") from None
    return values[0] if len(values) == 1 else values


def _resolve_levels(shape, levels):
    return auto_levels(shape) if levels is None else levels


def _write_csv(path, header, rows):
    with open(path, "w", newline="") as fh:
        writer = csv.writer(fh, lineterminator="\n")
        writer.writerow(header)
        writer.writerows(rows)


def _fmt(x):
    return f"{x:.6f}"


# -- commands

def cmd_decompose(args):
    img = read_image(args.input)
    if img.height % 2 or img.width % 2:
        raise ShapeError(f"input is {img.height}x{img.width}; both extents must be even")
    num_levels = _resolve_levels(img.shape, args.levels)
    pyr = build_pyramid(img, num_levels)
    Path(args.output).write_bytes(container.dump_pyramid(pyr))
    print(f"levels: {num_levels}")
    for lvl in pyr.levels:
        h, w, c = lvl.fine.shape
        print(f"F{lvl.index}\taxis={lvl.axis.name.lower()}\t{h}x{w}x{c}")
    h, w, c = pyr.coarsest.shape
    print(f"I{num_levels}\tcoarsest\t{h}x{w}x{c}")
    return EXIT_OK


def cmd_reconstruct(args):
    pyr = container.load_pyramid(Path(args.input).read_bytes())
    write_image(args.output, invert_pyramid(pyr))
    return EXIT_OK


def _codec_config(args):
    return CodecConfig(
        levels=args.levels, n_squeeze=args.n_squeeze, mode=args.mode, mixtures=args.mixtures,
        shift=not args.no_shift, modulo=not args.no_modulo, debug=args.verify, threads=args.threads,
    )


def _print_report(report):
    print(f"total\t{_fmt(report.bits_per_dim)} bits/dim\t(file {_fmt(report.file_bits_per_dim)} bits/dim)")
    for lv in report.levels:
        print(f"{lv.label}\t{_fmt(lv.bits_per_dim)} bits/dim\tshare {_fmt(lv.pixel_share)}")


def _write_rate_report(report, directory, stem):
    directory = Path(directory)
    directory.mkdir(parents=True, exist_ok=True)
    rows = [(lv.label, lv.samples, lv.bits, _fmt(lv.bits_per_dim), _fmt(lv.pixel_share)) for lv in report.levels]
    rows.append(("total", report.total_samples, report.payload_bits, _fmt(report.bits_per_dim), _fmt(1.0)))
    _write_csv(directory / f"{stem}_rate.csv", ["level", "samples", "bits", "bits_per_dim", "pixel_share"], rows)
    from .plotting import plot_rate_report

    plot_rate_report(report, directory / f"{stem}_rate.png")


def cmd_encode(args):
    img = read_image(args.input)
    stream = encode(img, _codec_config(args))
    Path(args.output).write_bytes(stream.to_bytes())
    report = report_for(stream)
    _print_report(report)
    if args.report_dir:
        _write_rate_report(report, args.report_dir, Path(args.input).stem)
    return EXIT_OK


def cmd_decode(args):
    data = Path(args.input).read_bytes()
    stream = CodedStream.from_bytes(data)
    write_image(args.output, decode(stream))
    _print_report(report_for(stream))
    return EXIT_OK


def _load_dir(directory):
    directory = Path(directory)
    if not directory.is_dir():
        raise FormatError(f"{directory} is not a directory")
    paths = sorted(p for p in directory.iterdir() if p.suffix.lower() in IMAGE_SUFFIXES)
    if not paths:
        raise FormatError(f"no PPM/PGM/PNG images in {directory}")
    return [read_image(p) for p in paths]


def cmd_stats(args):
    images = _load_dir(args.directory)
    shapes = {img.shape for img in images}
    if len(shapes) != 1:
        raise ShapeError(f"images must share one shape for the level profile, got {sorted(shapes)}")
    shape = shapes.pop()
    num_levels = _resolve_levels(shape, args.levels)
    out = Path(args.output)
    out.mkdir(parents=True, exist_ok=True)
    profile = pyramid_entropy_profile(images, num_levels)
    _write_csv(out / "entropy_profile.csv", ["level", "entropy_bits"], [(k, _fmt(v)) for k, v in profile])
    comps = pyramid_components(images, num_levels)
    curves = {}
    rows = []
    for label, parts in comps.items():
        limit = min(args.max_distance, min(parts[0].height, parts[0].width) - 1)
        if limit < 1:
            continue
        curve = mutual_information_curve(parts, limit)
        curves[label] = curve
        for d, mi, mh, mv in zip(curve.distances, curve.mi_bits, curve.mi_horizontal, curve.mi_vertical):
            rows.append((label, int(d), _fmt(mi), _fmt(mh), _fmt(mv)))
    _write_csv(out / "mi_curves.csv", ["component", "distance", "mi_bits", "mi_horizontal_bits", "mi_vertical_bits"],
               rows)
    from .plotting import plot_entropy_profile, plot_mi_curves

    plot_entropy_profile(profile, out / "entropy_profile.png")
    plot_mi_curves(curves, out / "mi_curves.png")
    for label, value in profile:
        print(f"{label}\t{_fmt(value)}")
    return EXIT_OK


def cmd_critical_path(args):
    report = critical_path(args.n0, args.coarsest, args.n_squeeze)
    print("level\tsteps")
    for level, steps in report.rows():
        print(f"{level}\t{steps}")
    print(f"L\t{report.num_levels}")
    print(f"T\t{report.total_steps}")
    return EXIT_OK


def cmd_despeckle(args):
    img = read_image(args.input)
    config = IsolationForestConfig(args.trees, args.subsample, args.contamination, args.seed)
    result = despeckle_with_mask(img, args.window, config, args.neighborhood)
    write_image(args.output, result.image)
    for key, value in result.metadata.items():
        print(f"{key}={value}")
    return EXIT_OK


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="pyrcodec", description="Paired-pyramid image transform and lossless codec.")
    parser.add_argument("-v", "--verbose", action="count", default=0)
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("decompose", help="write the pyramid of an image to a PPYR container")
    p.add_argument("input")
    p.add_argument("output")
    p.add_argument("--levels", type=_levels_arg, default=None, help="level count or 'auto' (4x4 coarsest)")
    p.set_defaults(func=cmd_decompose)

    p = sub.add_parser("reconstruct", help="rebuild an image from a PPYR container")
    p.add_argument("input")
    p.add_argument("output")
    p.set_defaults(func=cmd_reconstruct)

    p = sub.add_parser("encode", help="losslessly compress an image")
    p.add_argument("input")
    p.add_argument("output")
    p.add_argument("--levels", type=_levels_arg, default=None)
    p.add_argument("--mode", choices=("adaptive", "static"), default="adaptive")
    p.add_argument("--n-squeeze", type=int, default=2)
    p.add_argument("--mixtures", type=int, default=10)
    p.add_argument("--no-shift", action="store_true", help="do not cyclically shift coded samples")
    p.add_argument("--no-modulo", action="store_true", help="code raw removed rows instead of modulo differences")
    p.add_argument("--threads", type=int, default=None, help="worker threads (default: $PYRCODEC_THREADS or CPUs)")
    p.add_argument("--verify", action="store_true", help="shadow-decode every component while encoding")
    p.add_argument("--report-dir", help="write <stem>_rate.csv and <stem>_rate.png here")
    p.set_defaults(func=cmd_encode)

    p = sub.add_parser("decode", help="decompress a PPYC stream")
    p.add_argument("input")
    p.add_argument("output")
    p.set_defaults(func=cmd_decode)

    p = sub.add_parser("stats", help="entropy profile and MI curves of a directory of images")
    p.add_argument("directory")
    p.add_argument("--output", "-o", default="stats_out")
    p.add_argument("--max-distance", type=int, default=32)
    p.add_argument("--levels", type=_levels_arg, default=None)
    p.set_defaults(func=cmd_stats)

    p = sub.add_parser("critical-path", help="sequential step count of sampling an N0 x N0 image")
    p.add_argument("--n0", type=int, required=True)
    p.add_argument("--coarsest", type=int, default=4)
    p.add_argument("--n-squeeze", type=_squeeze_list, default=2, help="integer or comma list of L-1 values")
    p.set_defaults(func=cmd_critical_path)

    p = sub.add_parser("despeckle", help="replace isolated outlier pixels by their window median")
    p.add_argument("input")
    p.add_argument("output")
    p.add_argument("--window", type=int, default=7)
    p.add_argument("--trees", type=int, default=100)
    p.add_argument("--subsample", type=int, default=256)
    p.add_argument("--contamination", type=float, default=0.002)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--neighborhood", type=int, default=1, help="odd window of HSV values per forest sample")
    p.set_defaults(func=cmd_despeckle)
    return parser


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    logging.basicConfig(level=logging.WARNING - 10 * args.verbose, format="%(levelname)s %(name)s: %(message)s")
    try:
        return args.func(args)
    except IntegrityError as exc:
        print(f"error: integrity check failed: {exc}", file=sys.stderr)
        return EXIT_INTEGRITY
    except (FormatError, ShapeError, DomainError, PyrCodecError, OSError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_USAGE


if __name__ == "__main__":
    sys.exit(main())
