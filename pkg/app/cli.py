"""
`mpp` command line.

Exit codes: 0 ok, 1 usage, 2 data validation, 3 numerical failure.
"""
from __future__ import annotations

import argparse
import sys
from collections.abc import Callable, Sequence
from typing import NoReturn

from loguru import logger

import app
from app.core.calibrate import FitConfig
from app.core.errors import DataValidationError, NumericalError
from app.core.synth import DEFAULT_DURATION_S, DEFAULT_SAMPLE_RATE_HZ, DEFAULT_SPEEDS, OracleConfig, square_angle_grid
from app.logging import configure
from app.pipeline import (
    run_calibrate,
    run_design_eval,
    run_estimate,
    run_flight_validate,
    run_synth_design,
    run_synth_flight,
    run_synth_grid,
)
from app.services.deps import get_settings_service
from app.services.settings.base import Settings

EXIT_OK = 0
EXIT_USAGE = 1
EXIT_DATA = 2
EXIT_NUMERICAL = 3

Handler = Callable[[argparse.Namespace, Settings], int]


class UsageError(Exception):
    pass


class Parser(argparse.ArgumentParser):
    def error(self, message: str) -> NoReturn:
        msg = f"{self.prog}: {message}"
        raise UsageError(msg)


def _degree(value: str) -> int | str:
    if value == "auto":
        return value
    try:
        degree = int(value)
    except ValueError:
        degree = 0
    if degree < 1:
        msg = f"expected 'auto' or a positive integer, got {value!r}"
        raise argparse.ArgumentTypeError(msg)
    return degree


def _ratio(value: str) -> float:
    ratio = float(value)
    if not 0 < ratio < 1:
        msg = f"expected a ratio in (0, 1), got {value}"
        raise argparse.ArgumentTypeError(msg)
    return ratio


def _positive(value: str) -> float:
    number = float(value)
    if not number > 0:
        msg = f"expected a positive number, got {value}"
        raise argparse.ArgumentTypeError(msg)
    return number


def _non_negative(value: str) -> float:
    number = float(value)
    if not number >= 0:
        msg = f"expected a non-negative number, got {value}"
        raise argparse.ArgumentTypeError(msg)
    return number


def _floats(value: str) -> tuple[float, ...]:
    try:
        numbers = tuple(float(v) for v in value.split(",") if v.strip())
    except ValueError as exc:
        raise argparse.ArgumentTypeError(str(exc)) from exc
    if not numbers:
        msg = "expected a comma separated list of numbers"
        raise argparse.ArgumentTypeError(msg)
    return numbers


def _maneuvers(value: str) -> tuple[str, ...]:
    names = tuple(v.strip() for v in value.split(",") if v.strip())
    unknown = [n for n in names if n not in ("circle", "stall", "yaw")]
    if not names or unknown:
        msg = f"maneuvers must be drawn from circle,stall,yaw, got {value!r}"
        raise argparse.ArgumentTypeError(msg)
    return names


def _oracle(args: argparse.Namespace) -> OracleConfig:
    return OracleConfig(tip=args.tip, noise_sigma=args.sigma, full_scale_clip=args.clip, seed=args.seed)


def cmd_synth(args: argparse.Namespace, settings: Settings) -> int:
    cfg = _oracle(args)
    if args.mode == "grid":
        angles = square_angle_grid(35.0, args.grid_steps) if args.layout == "square" else None
        speeds = args.speeds or DEFAULT_SPEEDS
        path = run_synth_grid(args.out, cfg, speeds, args.duration, args.fs, settings, angle_grid=angles)
    elif args.mode == "design":
        path = run_synth_design(args.out, cfg, args.samples, args.speeds)
    else:
        path = run_synth_flight(args.out, cfg, args.maneuvers, args.fs, not args.no_pitot)
    print(f"wrote {path}")
    return EXIT_OK


def cmd_calibrate(args: argparse.Namespace, settings: Settings) -> int:
    cfg = FitConfig(
        degree=args.degree,
        seed=args.seed,
        augment=not args.no_augment,
        split_ratio=args.split,
        per_model_degree=args.per_model_degree,
        rho_ref=settings.rho_ref,
        q_min=settings.q_min,
        max_workers=settings.max_workers,
    )
    outcome = run_calibrate(args.manifest, args.out, cfg, args.fc, args.report, settings)
    report = outcome.report
    print(f"degree {outcome.bundle.degree} ({outcome.bundle.metadata.degree_selection}), {report.n_points} test points")
    print(f"{'':10}{'MAE':>10}{'RMSE':>10}")
    for name, stats, unit in (
        ("airspeed", report.airspeed, "m/s"),
        ("aoa", report.aoa, "deg"),
        ("aos", report.aos, "deg"),
    ):
        print(f"{name:10}{stats.mae:10.4f}{stats.rmse:10.4f} {unit}")
    print(f"bundle {outcome.bundle_path}\nreport {outcome.report_path}")
    return EXIT_OK


def cmd_estimate(args: argparse.Namespace, settings: Settings) -> int:
    outputs, path = run_estimate(args.model, args.input, args.out, args.fs, args.fc, settings)
    print(f"{len(outputs)} rows ({sum(o.gap for o in outputs)} gaps) -> {path}")
    return EXIT_OK


def cmd_design_eval(args: argparse.Namespace, settings: Settings) -> int:
    report, path, metrics = run_design_eval(args.matrix, args.out, settings)
    for test in report.tests:
        print(
            f"{test.metric.value:24} {test.grouping:8} {test.group_a:>8} vs {test.group_b:<8} "
            f"p={test.p:.4g} {test.stars}"
        )
    print(f"report {path}\nmetrics {metrics}")
    return EXIT_OK


def cmd_flight_validate(args: argparse.Namespace, settings: Settings) -> int:
    report, path, series = run_flight_validate(args.model, args.log, args.out, args.fs, args.fc, settings)
    print(report.banner)
    overall = report.overall
    print(f"paired {report.n_paired}/{report.n_rows} rows, {report.mpp_gaps} probe gaps")
    print(f"airspeed MAE {overall.airspeed_vs_reference} m/s, aoa MAE {overall.aoa} deg, aos MAE {overall.aos} deg")
    if overall.airspeed_vs_pitot is not None:
        print(f"airspeed vs pitot MAE {overall.airspeed_vs_pitot} m/s")
    for note in report.notes:
        print(f"note: {note}")
    print(f"report {path}\nseries {series}")
    return EXIT_OK


def build_parser() -> Parser:
    parser = Parser(prog="mpp", description="Multihole pressure probe calibration and air data estimation.")
    parser.add_argument("--version", action="version", version=f"%(prog)s {app.__version__}")
    parser.add_argument("--log-level", default=None, help="Override MPP_LOG_LEVEL.")
    commands = parser.add_subparsers(dest="command", required=True)

    synth = commands.add_parser("synth", help="Generate synthetic probe data from the forward model.")
    synth.add_argument("mode", choices=("grid", "design", "flight"))
    synth.add_argument("--out", required=True, help="Output directory (grid) or CSV file (design, flight).")
    synth.add_argument("--seed", type=int, default=42)
    synth.add_argument("--sigma", type=_non_negative, default=None, help="Sensor noise, Pa.")
    synth.add_argument("--tip", choices=("cone", "sphere"), default="cone")
    synth.add_argument("--clip", action="store_true", help="Saturate channels at full scale.")
    synth.add_argument("--speeds", type=_floats, default=None, help="Comma separated airspeeds, m/s.")
    synth.add_argument("--duration", type=_positive, default=DEFAULT_DURATION_S, help="Run length, s (grid).")
    synth.add_argument(
        "--layout",
        choices=("star", "square"),
        default="star",
        help="Angle grid (grid): 17-point star, or a dense square the flight check expects.",
    )
    synth.add_argument("--grid-steps", type=int, default=9, help="Points per axis of the square layout.")
    synth.add_argument("--fs", type=_positive, default=None, help="Sample rate, Hz (grid, flight).")
    synth.add_argument("--samples", type=int, default=70, help="Samples per cell (design).")
    synth.add_argument("--maneuvers", type=_maneuvers, default=("circle", "stall", "yaw"))
    synth.add_argument("--no-pitot", action="store_true", help="Omit the pitot column (flight).")
    synth.set_defaults(handler=cmd_synth)

    calibrate = commands.add_parser("calibrate", help="Fit a calibration bundle from a run manifest.")
    calibrate.add_argument("manifest")
    calibrate.add_argument("out", help="Bundle JSON path.")
    calibrate.add_argument("--degree", type=_degree, default="auto")
    calibrate.add_argument("--seed", type=int, default=42)
    calibrate.add_argument("--no-augment", action="store_true")
    calibrate.add_argument("--split", type=_ratio, default=0.7)
    calibrate.add_argument("--per-model-degree", action="store_true")
    calibrate.add_argument("--fc", type=_positive, default=None, help="Low-pass cutoff, Hz.")
    calibrate.add_argument("--report", default=None, help="Report JSON path (default <out>.report.json).")
    calibrate.set_defaults(handler=cmd_calibrate)

    estimate = commands.add_parser("estimate", help="Estimate air data for a pressure CSV.")
    estimate.add_argument("model")
    estimate.add_argument("input")
    estimate.add_argument("out")
    estimate.add_argument("--fs", type=_positive, required=True, help="Sample rate, Hz.")
    estimate.add_argument("--fc", type=_positive, default=None, help="Low-pass cutoff, Hz.")
    estimate.set_defaults(handler=cmd_estimate)

    design = commands.add_parser("design-eval", help="Compare hardware designs from a measurement matrix.")
    design.add_argument("matrix")
    design.add_argument("out")
    design.set_defaults(handler=cmd_design_eval)

    flight = commands.add_parser("flight-validate", help="Compare probe estimates with a flight log reference.")
    flight.add_argument("model")
    flight.add_argument("log")
    flight.add_argument("out")
    flight.add_argument("--fs", type=_positive, default=None, help="Sample rate, Hz (inferred from t when omitted).")
    flight.add_argument("--fc", type=_positive, default=None, help="Low-pass cutoff, Hz.")
    flight.set_defaults(handler=cmd_flight_validate)
    return parser


def _synth_defaults(args: argparse.Namespace) -> None:
    if args.sigma is None:
        args.sigma = 0.3 if args.mode == "design" else 0.5
    if args.fs is None:
        args.fs = 50.0 if args.mode == "flight" else DEFAULT_SAMPLE_RATE_HZ
    if args.samples < 1:
        msg = f"mpp synth: --samples must be >= 1, got {args.samples}"
        raise UsageError(msg)
    if args.grid_steps < 2:
        msg = f"mpp synth: --grid-steps must be >= 2, got {args.grid_steps}"
        raise UsageError(msg)


def main(argv: Sequence[str] | None = None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
        if args.command == "synth":
            _synth_defaults(args)
    except UsageError as exc:
        print(exc, file=sys.stderr)
        return EXIT_USAGE
    except SystemExit as exc:
        return exc.code if isinstance(exc.code, int) else EXIT_OK

    settings_service = get_settings_service()
    if args.log_level:
        settings_service.set("log_level", args.log_level.upper())
    settings = settings_service.settings
    configure(settings.log_level, settings.log_dir)

    handler: Handler = args.handler
    try:
        return handler(args, settings)
    except NumericalError as exc:
        logger.error(str(exc))
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_NUMERICAL
    except DataValidationError as exc:
        logger.error(str(exc))
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_DATA


def run() -> None:
    sys.exit(main())


if __name__ == "__main__":
    run()
