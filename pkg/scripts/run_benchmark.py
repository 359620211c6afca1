#!/usr/bin/env python3
"""Sweep channel counts and sampling rates; print sustained throughput and
real-time factor for each configuration.

Usage: python3 scripts/run_benchmark.py [--duration 10] [--chunk 256]
"""

import argparse
import sys
import time

import asrstream as asr
from asrstream.synthetic import SyntheticSpec, generate_synthetic

CONFIGS = [
    (8, 250.0),
    (16, 250.0),
    (24, 500.0),
    (32, 500.0),
    (64, 1000.0),
]


def bench(channels, srate, duration, chunk):
    spec = SyntheticSpec(
        channels=channels,
        srate=srate,
        duration=duration,
        calibration_duration=max(20.0, 3.0 * channels / srate * 100),
        mixing_seed=7,
        noise_seed=13,
    )
    calibration, recording, _ = generate_synthetic(spec)
    state = asr.asr_calibrate(calibration, srate)
    proc = asr.ProcessorState.initial(state)
    n = recording.shape[1]
    started = time.perf_counter()
    pos = 0
    while pos < n:
        end = min(n, pos + chunk)
        piece = asr.MultichannelChunk(recording[:, pos:end], srate, pos)
        _, proc = asr.asr_process_chunk(piece, state, proc)
        pos = end
    elapsed = time.perf_counter() - started
    rate = n / elapsed
    return rate, rate / srate


def main(argv=None):
    parser = argparse.ArgumentParser(description=__doc__)
    parser.add_argument("--duration", type=float, default=10.0)
    parser.add_argument("--chunk", type=int, default=256)
    args = parser.parse_args(argv)
    print(f"{'channels':>8} {'srate':>8} {'samples/s':>12} {'x realtime':>11}")
    for channels, srate in CONFIGS:
        rate, factor = bench(channels, srate, args.duration, args.chunk)
        print(f"{channels:>8} {srate:>8g} {rate:>12,.0f} {factor:>10.1f}x")
    return 0


if __name__ == "__main__":
    sys.exit(main())
