"""Command-line front end: calibrate, process (file/stream), simulate,
compare, bench.

Exit codes: 0 success, 1 validation error (bad flags, bad inputs, failed
comparison), 2 runtime error mid-stream (I/O failures after processing
started). ``ASR_LOG`` in {error, warn, info, debug} controls log verbosity.
"""

from __future__ import annotations

import argparse
import logging
import os
import sys
import time
from pathlib import Path

import numpy as np

from .calibration import asr_calibrate
from .comparison import compare
from .errors import AsrError, InvalidValue, ParseError
from .io_formats import (
    SignalRecord,
    atomic_write_text,
    load_calibration_data,
    load_calibration_state,
    load_signal_record,
    save_calibration_csv,
    save_calibration_state,
    save_signal_record,
)
from .processing import asr_process_chunk
from .runtime import Pipeline, SideChannelRegistry
from .synthetic import ArtifactEvent, SyntheticSpec, generate_synthetic
from .types import (
    CalibrationParams,
    CalibrationState,
    MultichannelChunk,
    PipelineConfig,
    ProcessorState,
)

logger = logging.getLogger(__name__)

_LOG_LEVELS = {
    "error": logging.ERROR,
    "warn": logging.WARNING,
    "info": logging.INFO,
    "debug": logging.DEBUG,
}


class _UsageError(Exception):
    pass


class _Parser(argparse.ArgumentParser):
    def error(self, message):  # exit 1 on bad flags, per the exit-code contract
        raise _UsageError(message)


def _configure_logging() -> None:
    level = _LOG_LEVELS.get(os.environ.get("ASR_LOG", "error").lower(), logging.ERROR)
    logging.basicConfig(level=level, format="%(levelname)s %(name)s: %(message)s")


def _load_any_calibration(path: str, srate: float) -> CalibrationState:
    """Accept either a saved calibration state or a clean-data CSV."""
    text_head = Path(path).read_text(encoding="utf-8", errors="replace").lstrip()[:1]
    if text_head == "{":
        state = load_calibration_state(path)
        if srate and state.srate != srate:
            raise InvalidValue(
                "srate", f"calibration was made at {state.srate} Hz, not {srate} Hz"
            )
        return state
    matrix, filter_b, filter_a = load_calibration_data(path)
    return asr_calibrate(matrix, srate, filter_b=filter_b, filter_a=filter_a)


def _print_report(lines: list[str]) -> None:
    for line in lines:
        print(line)


def cmd_calibrate(args) -> int:
    matrix, file_b, file_a = load_calibration_data(args.input)
    params = CalibrationParams(
        cutoff=args.cutoff,
        blocksize=args.blocksize,
        window_len=args.window_length,
        window_overlap=args.window_overlap,
        max_dims_fraction=args.max_dims_fraction,
    )
    state = asr_calibrate(
        matrix,
        args.srate,
        params,
        filter_b=file_b if args.filter_b is None else args.filter_b,
        filter_a=file_a if args.filter_a is None else args.filter_a,
    )
    save_calibration_state(args.output, state)
    amplitudes = np.linalg.norm(state.threshold, axis=1)
    if args.report:
        _print_report(
            [
                f"channels={state.channels}",
                f"window_samples={state.window_samples()}",
                f"threshold_min={amplitudes.min()!r}",
                f"threshold_max={amplitudes.max()!r}",
                f"output={args.output}",
            ]
        )
    else:
        print(
            f"calibrated {state.channels} channels; statistics window "
            f"{state.window_samples()} samples"
        )
        print(
            "per-component thresholds: "
            f"min {amplitudes.min():.4g}, median {np.median(amplitudes):.4g}, "
            f"max {amplitudes.max():.4g}"
        )
        print(f"wrote {args.output}")
    return 0


def _process_file(args, state: CalibrationState) -> int:
    record = load_signal_record(args.input)
    if record.srate != state.srate:
        raise InvalidValue(
            "srate", f"record is {record.srate} Hz, calibration is {state.srate} Hz"
        )
    proc = ProcessorState.initial(state, stepsize=args.stepsize, lookahead=args.lookahead)
    n = record.samples
    out = np.empty_like(record.data)
    chunk = max(1, args.chunk)
    pos = 0
    while pos < n:
        end = min(n, pos + chunk)
        piece = MultichannelChunk(record.data[:, pos:end], record.srate, pos)
        cleaned, proc = asr_process_chunk(piece, state, proc)
        out[:, pos:end] = cleaned.data
        pos = end
    save_signal_record(args.output, SignalRecord(data=out, srate=record.srate))
    if args.report:
        _print_report(
            [
                f"channels={record.channels}",
                f"samples={n}",
                f"lookahead={proc.lookahead}",
                f"updates={len(proc.update_log)}",
                f"output={args.output}",
            ]
        )
    else:
        print(f"processed {n} samples x {record.channels} channels -> {args.output}")
    return 0


def _publish_paced(pipeline, registry, name: str, block: np.ndarray) -> None:
    """File-driven producer: apply backpressure instead of overrunning the
    inbound ring, so nothing is dropped when stdin outruns the worker."""
    while pipeline.in_flight() >= pipeline.config.fifo_capacity - 1:
        pipeline.process()
        time.sleep(0.0002)
    registry.publish(name, block)
    pipeline.process()


def _parse_stream_header(line: str) -> tuple[int, float]:
    body = line.lstrip("#").strip()
    fields = dict(
        part.split("=", 1) for part in body.split() if "=" in part
    )
    try:
        return int(fields["channels"]), float(fields["srate"])
    except (KeyError, ValueError):
        raise ParseError(
            "stream header must look like '# channels=8 srate=250.0'"
        ) from None


def _process_stream(args, stdin, stdout) -> int:
    header = stdin.readline()
    if not header:
        raise ParseError("empty stream: expected a header line")
    channels, srate = _parse_stream_header(header)
    state = _load_any_calibration(args.calibration, srate)
    chunk = max(1, args.chunk)
    config = PipelineConfig(
        sampling_rate=srate,
        window_length=state.params.window_len,
        var_name=args.var_name,
        calibration_file_name=args.calibration,
        chunk_capacity=chunk,
        fifo_capacity=args.fifo_capacity,
        cutoff=state.params.cutoff,
        blocksize=state.params.blocksize,
        window_overlap=state.params.window_overlap,
        max_dims_fraction=state.params.max_dims_fraction,
        stepsize=args.stepsize,
        lookahead=args.lookahead,
    )
    registry = SideChannelRegistry()
    registry.register(args.var_name, channels, chunk)
    spool: list[np.ndarray] = []
    pipeline = Pipeline(
        config, registry, output_sink=lambda view, n, seq: spool.append(view.copy())
    )
    pipeline.prepare()

    def _write_spool() -> None:
        while spool:
            block = spool.pop(0)
            for col in block.T:
                stdout.write(",".join(repr(float(v)) for v in col) + "\n")

    exit_code = 0
    rows: list[list[float]] = []
    try:
        stdout.write(f"# channels={channels} srate={srate!r}\n")
        for lineno, raw in enumerate(stdin, start=2):
            line = raw.strip()
            if not line or line.startswith("#"):
                continue
            cells = line.split(",")
            if len(cells) != channels:
                raise ParseError(
                    f"expected {channels} values per line, got {len(cells)}", row=lineno
                )
            try:
                rows.append([float(c) for c in cells])
            except ValueError:
                raise ParseError("unparseable sample", row=lineno) from None
            if len(rows) >= chunk:
                _publish_paced(pipeline, registry, args.var_name, np.array(rows).T)
                rows.clear()
                _write_spool()
        if rows:
            _publish_paced(pipeline, registry, args.var_name, np.array(rows).T)
            rows.clear()
        pipeline.flush(timeout=5.0)
        _write_spool()
        stdout.flush()
    except (BrokenPipeError, OSError) as exc:
        logger.error("stream aborted: %s", exc)
        exit_code = 2
    except ParseError:
        raise
    finally:
        stats = pipeline.stats()
        pipeline.release()
        print(
            "stream done: "
            + " ".join(f"{k}={v}" for k, v in sorted(stats.items())),
            file=sys.stderr,
        )
    return exit_code


def cmd_process(args) -> int:
    if args.stream:
        return _process_stream(args, sys.stdin, sys.stdout)
    record_head = load_signal_record(args.input)
    state = _load_any_calibration(args.calibration, record_head.srate)
    if record_head.channels != state.channels:
        raise InvalidValue(
            "channels",
            f"record has {record_head.channels} channels, calibration has {state.channels}",
        )
    return _process_file(args, state)


def _parse_burst(text: str) -> ArtifactEvent:
    parts = text.split(":")
    if len(parts) != 3:
        raise _UsageError(f"--burst must be onset:duration:amplitude, got {text!r}")
    try:
        onset, duration, amplitude = (float(p) for p in parts)
    except ValueError:
        raise _UsageError(f"--burst values must be numbers, got {text!r}") from None
    return ArtifactEvent(onset=onset, duration=duration, amplitude=amplitude)


def cmd_simulate(args) -> int:
    spec = SyntheticSpec(
        channels=args.channels,
        srate=args.srate,
        duration=args.duration,
        calibration_duration=args.calibration_duration,
        mixing_seed=args.mixing_seed if args.mixing_seed is not None else args.seed,
        noise_seed=args.seed,
        events=tuple(_parse_burst(b) for b in args.burst),
    )
    calibration, recording, mask = generate_synthetic(spec)
    save_signal_record(args.output_record, SignalRecord(recording, spec.srate))
    written = [args.output_record]
    if args.output_calibration:
        save_calibration_csv(args.output_calibration, calibration)
        written.append(args.output_calibration)
    if args.output_mask:
        atomic_write_text(
            args.output_mask, ",".join(str(int(v)) for v in mask) + "\n"
        )
        written.append(args.output_mask)
    print(
        f"synthesized {spec.channels} ch x {recording.shape[1]} samples "
        f"({int(mask.sum())} artifact samples): " + ", ".join(written)
    )
    return 0


def cmd_compare(args) -> int:
    rec_a = load_signal_record(args.a)
    rec_b = load_signal_record(args.b)
    report = compare(rec_a.data, rec_b.data, args.tolerance)
    if args.report:
        _print_report(report.machine_lines())
    else:
        print(report.summary())
    return 0 if report.passed else 1


def cmd_bench(args) -> int:
    spec = SyntheticSpec(
        channels=args.channels,
        srate=args.srate,
        duration=args.duration,
        calibration_duration=20.0,
        mixing_seed=7,
        noise_seed=13,
    )
    calibration, recording, _ = generate_synthetic(spec)
    state = asr_calibrate(calibration, spec.srate)
    proc = ProcessorState.initial(state, stepsize=args.stepsize)
    chunk = max(1, args.chunk)
    n = recording.shape[1]
    start = time.perf_counter()
    pos = 0
    while pos < n:
        end = min(n, pos + chunk)
        piece = MultichannelChunk(recording[:, pos:end], spec.srate, pos)
        _, proc = asr_process_chunk(piece, state, proc)
        pos = end
    elapsed = time.perf_counter() - start
    samples_per_second = n / elapsed
    real_time_factor = samples_per_second / spec.srate
    if args.report:
        _print_report(
            [
                f"channels={args.channels}",
                f"srate={args.srate!r}",
                f"samples={n}",
                f"elapsed_seconds={elapsed!r}",
                f"samples_per_second={samples_per_second!r}",
                f"real_time_factor={real_time_factor!r}",
            ]
        )
    else:
        print(
            f"{args.channels} ch @ {args.srate:g} Hz: "
            f"{samples_per_second:,.0f} samples/s ({real_time_factor:.1f}x real time)"
        )
    return 0


def build_parser() -> _Parser:
    parser = _Parser(prog="asrstream", description=__doc__)
    sub = parser.add_subparsers(dest="command", required=True)

    cal = sub.add_parser("calibrate", help="learn a calibration state from clean data")
    cal.add_argument("--input", required=True, help="calibration CSV (rows are channels)")
    cal.add_argument("--srate", "--sampling-rate", dest="srate", type=float, required=True)
    cal.add_argument("--window-length", type=float, default=0.5, help="seconds")
    cal.add_argument("--cutoff", type=float, default=5.0)
    cal.add_argument("--blocksize", type=int, default=10)
    cal.add_argument("--window-overlap", type=float, default=0.66)
    cal.add_argument("--max-dims-fraction", type=float, default=0.66)
    cal.add_argument("--filter-b", type=float, nargs="+", default=None)
    cal.add_argument("--filter-a", type=float, nargs="+", default=None)
    cal.add_argument("--output", required=True, help="calibration state file to write")
    cal.add_argument("--report", action="store_true", help="machine-readable output")
    cal.set_defaults(func=cmd_calibrate)

    proc = sub.add_parser("process", help="clean a recording or a stream")
    proc.add_argument(
        "--calibration", "--calibration-file", dest="calibration", required=True,
        help="calibration state file or clean-data CSV",
    )
    proc.add_argument("--input", help="signal record to clean (file mode)")
    proc.add_argument("--output", help="cleaned signal record (file mode)")
    proc.add_argument("--chunk", type=int, default=256, help="samples per chunk")
    proc.add_argument("--stream", action="store_true", help="stdin -> stdout streaming")
    proc.add_argument("--var-name", default="eeg", help="stream-mode variable label")
    proc.add_argument("--fifo-capacity", type=int, default=8)
    proc.add_argument("--stepsize", type=int, default=32)
    proc.add_argument("--lookahead", type=int, default=None)
    proc.add_argument("--report", action="store_true")
    proc.set_defaults(func=cmd_process)

    sim = sub.add_parser("simulate", help="synthesize calibration/recording/mask files")
    sim.add_argument("--channels", type=int, default=8)
    sim.add_argument("--srate", "--sampling-rate", dest="srate", type=float, default=250.0)
    sim.add_argument("--duration", type=float, default=60.0)
    sim.add_argument("--calibration-duration", type=float, default=30.0)
    sim.add_argument("--seed", type=int, default=1)
    sim.add_argument("--mixing-seed", type=int, default=None)
    sim.add_argument(
        "--burst", action="append", default=[], metavar="ONSET:DUR:AMP",
        help="artifact burst (repeatable)",
    )
    sim.add_argument("--output-record", required=True)
    sim.add_argument("--output-calibration")
    sim.add_argument("--output-mask")
    sim.set_defaults(func=cmd_simulate)

    cmp_ = sub.add_parser("compare", help="compare two signal records")
    cmp_.add_argument("--a", required=True)
    cmp_.add_argument("--b", required=True)
    cmp_.add_argument("--tolerance", type=float, default=1e-5)
    cmp_.add_argument("--report", action="store_true")
    cmp_.set_defaults(func=cmd_compare)

    bench = sub.add_parser("bench", help="measure sustained throughput")
    bench.add_argument("--channels", type=int, default=24)
    bench.add_argument("--srate", "--sampling-rate", dest="srate", type=float, default=500.0)
    bench.add_argument("--duration", type=float, default=10.0)
    bench.add_argument("--chunk", type=int, default=256)
    bench.add_argument("--stepsize", type=int, default=32)
    bench.add_argument("--report", action="store_true")
    bench.set_defaults(func=cmd_bench)
    return parser


def main(argv=None) -> int:
    _configure_logging()
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except _UsageError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1
    try:
        if args.command == "process" and not args.stream:
            if not args.input or not args.output:
                print("error: file mode needs --input and --output", file=sys.stderr)
                return 1
        return args.func(args)
    except _UsageError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1
    except AsrError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1
    except FileNotFoundError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1


if __name__ == "__main__":
    sys.exit(main())
