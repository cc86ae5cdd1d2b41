"""Command-line entry point.

Exit codes: 0 success, 1 usage or unparseable input file, 2 I/O failure,
3 validation failure, 4 numerical or processing failure.
"""

from __future__ import annotations

import argparse
import sys
from dataclasses import replace

from .errors import (
    ConfigParseError,
    FrameFormatError,
    NoDriverError,
    NumericalError,
    ValidationError,
)
from .fileio import (
    load_pipeline_config,
    load_scenario,
    read_frames,
    truth_to_dict,
    write_frames,
    write_json,
    write_modes,
    write_report,
)
from .pipeline import decompose, process_frames
from .rf import ground_truth, noise_std_for_snr, simulate_frames

EXIT_OK = 0
EXIT_USAGE = 1
EXIT_IO = 2
EXIT_VALIDATION = 3
EXIT_NUMERICAL = 4


class UsageError(Exception):
    pass


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        raise UsageError(f"{self.prog}: {message}")


def build_parser() -> argparse.ArgumentParser:
    parser = _Parser(prog="cabinvitals", description="In-cabin respiration and heart-rate estimation.")
    sub = parser.add_subparsers(dest="command", required=True, parser_class=_Parser)

    sim = sub.add_parser("simulate", help="synthesise a frame file from a scenario")
    sim.add_argument("--scenario", required=True, help="scenario JSON")
    sim.add_argument("--out", required=True, help="frame file to write")
    sim.add_argument("--seed", type=int, help="override the scenario seed")

    proc = sub.add_parser("process", help="estimate vitals for every window")
    proc.add_argument("--in", dest="input", required=True, help="frame file")
    proc.add_argument("--config", required=True, help="pipeline config JSON")
    proc.add_argument("--report", required=True, help="report CSV to write")

    dec = sub.add_parser("decompose", help="dump the driver's modes for the first usable window")
    dec.add_argument("--in", dest="input", required=True, help="frame file")
    dec.add_argument("--config", required=True, help="pipeline config JSON")
    dec.add_argument("--out", required=True, help="CSV to write")
    return parser


def cmd_simulate(args) -> int:
    spec = load_scenario(args.scenario)
    scenario = spec.scenario
    if args.seed is not None:
        scenario = replace(scenario, seed=args.seed)
    if spec.snr_db is not None:
        scenario = replace(scenario, noise_std=noise_std_for_snr(scenario, spec.radio, spec.snr_db))
    frames = simulate_frames(scenario, spec.radio)
    write_frames(args.out, frames)
    write_json(f"{args.out}.truth.json", truth_to_dict(ground_truth(scenario), scenario))
    print(f"wrote {frames.n_frames} frames x {frames.samples.shape[1]} bins to {args.out}")
    return EXIT_OK


def cmd_process(args) -> int:
    config = load_pipeline_config(args.config)
    frames = read_frames(args.input)
    summary = process_frames(frames, config)
    write_report(args.report, summary)
    print(
        f"windows processed {summary.windows_processed}, discarded {summary.windows_discarded}, "
        f"reported {len(summary.reported)}; {summary.total_seconds:.2f} s total, "
        f"{summary.mean_window_seconds:.3f} s mean per window, seed {summary.seed}"
    )
    return EXIT_OK


def cmd_decompose(args) -> int:
    config = load_pipeline_config(args.config)
    frames = read_frames(args.input)
    result = decompose(frames, config)
    write_modes(args.out, result.modes)
    if not result.modes.converged:
        print(
            f"warning: decomposition stopped after {result.modes.iterations_used} iterations "
            f"(residual {result.modes.final_residual:.3g})",
            file=sys.stderr,
        )
    freqs = ", ".join(f"{f:.3f}" for f in result.modes.center_freqs_hz)
    print(f"window at {result.window_start_s:.1f} s, driver at {result.driver.range_m:.2f} m, modes [{freqs}] Hz")
    return EXIT_OK


COMMANDS = {"simulate": cmd_simulate, "process": cmd_process, "decompose": cmd_decompose}


def main(argv=None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except UsageError as exc:
        print(parser.format_usage().rstrip(), file=sys.stderr)
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_USAGE
    try:
        return COMMANDS[args.command](args)
    except ConfigParseError as exc:
        print(f"parse error: {exc}", file=sys.stderr)
        return EXIT_USAGE
    except (FrameFormatError, OSError) as exc:
        print(f"i/o error: {exc}", file=sys.stderr)
        return EXIT_IO
    except ValidationError as exc:
        print(f"invalid input: {exc}", file=sys.stderr)
        return EXIT_VALIDATION
    except (NumericalError, NoDriverError, FloatingPointError) as exc:
        print(f"processing failed: {exc}", file=sys.stderr)
        return EXIT_NUMERICAL


if __name__ == "__main__":
    sys.exit(main())
