"""Tolerance-based comparison of recordings and artifact-attenuation metrics."""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .errors import ShapeMismatch

REL_EPS = 1e-30  # denominator floor so zeros compare against zeros cleanly


@dataclass(frozen=True)
class ComparisonReport:
    max_relative_error: float
    max_absolute_error: float
    first_divergent_sample: int | None  # first sample (column) over tolerance
    tolerance: float
    passed: bool

    def summary(self) -> str:
        verdict = "PASS" if self.passed else "FAIL"
        where = (
            ""
            if self.first_divergent_sample is None
            else f", first divergence at sample {self.first_divergent_sample}"
        )
        return (
            f"{verdict}: max relative error {self.max_relative_error:.3e} "
            f"(tolerance {self.tolerance:.1e}), max absolute error "
            f"{self.max_absolute_error:.3e}{where}"
        )

    def machine_lines(self) -> list[str]:
        return [
            f"pass={int(self.passed)}",
            f"max_relative_error={self.max_relative_error!r}",
            f"max_absolute_error={self.max_absolute_error!r}",
            f"tolerance={self.tolerance!r}",
            f"first_divergent_sample={self.first_divergent_sample}",
        ]


def compare(a, b, rel_tol: float) -> ComparisonReport:
    """Per-sample relative comparison: |a-b| / max(|a|, |b|, 1e-30).

    Passes iff the maximum relative error stays at or below ``rel_tol``.
    """
    a = np.atleast_2d(np.asarray(a, dtype=float))
    b = np.atleast_2d(np.asarray(b, dtype=float))
    if a.shape != b.shape:
        raise ShapeMismatch(f"shapes differ: {a.shape} vs {b.shape}")
    if a.size == 0:
        return ComparisonReport(0.0, 0.0, None, rel_tol, True)
    abs_err = np.abs(a - b)
    rel = abs_err / np.maximum(np.maximum(np.abs(a), np.abs(b)), REL_EPS)
    per_sample = rel.max(axis=0)
    over = per_sample > rel_tol
    first = int(np.argmax(over)) if over.any() else None
    max_rel = float(rel.max())
    return ComparisonReport(
        max_relative_error=max_rel,
        max_absolute_error=float(abs_err.max()),
        first_divergent_sample=first,
        tolerance=rel_tol,
        passed=max_rel <= rel_tol,
    )


@dataclass(frozen=True)
class AttenuationMetrics:
    artifact_rms_reduction: float | None  # 1 - RMS(cleaned|mask)/RMS(raw|mask)
    clean_rms_change: float | None  # |RMS(cleaned|~mask)/RMS(raw|~mask) - 1|

    def machine_lines(self) -> list[str]:
        return [
            f"artifact_rms_reduction={self.artifact_rms_reduction!r}",
            f"clean_rms_change={self.clean_rms_change!r}",
        ]


def _rms(x: np.ndarray) -> float:
    return float(np.sqrt(np.mean(x * x))) if x.size else 0.0


def attenuation_metrics(cleaned, raw, mask) -> AttenuationMetrics:
    """How much artifact-segment energy was removed, and how much the clean
    segments changed. Inputs must already be aligned for pipeline delay."""
    cleaned = np.atleast_2d(np.asarray(cleaned, dtype=float))
    raw = np.atleast_2d(np.asarray(raw, dtype=float))
    mask = np.asarray(mask, dtype=bool)
    if cleaned.shape != raw.shape:
        raise ShapeMismatch(f"shapes differ: {cleaned.shape} vs {raw.shape}")
    if mask.shape != (raw.shape[1],):
        raise ShapeMismatch("mask length must equal the sample count")

    reduction = None
    if mask.any():
        raw_rms = _rms(raw[:, mask])
        if raw_rms > 0:
            reduction = 1.0 - _rms(cleaned[:, mask]) / raw_rms
    change = None
    if (~mask).any():
        raw_rms = _rms(raw[:, ~mask])
        if raw_rms > 0:
            change = abs(_rms(cleaned[:, ~mask]) / raw_rms - 1.0)
    return AttenuationMetrics(artifact_rms_reduction=reduction, clean_rms_change=change)


def align_for_delay(cleaned, raw, mask, lookahead: int):
    """Trim so cleaned[:, t] lines up with raw[:, t]: the pipeline emits the
    input delayed by ``lookahead`` samples."""
    cleaned = np.atleast_2d(np.asarray(cleaned, dtype=float))
    raw = np.atleast_2d(np.asarray(raw, dtype=float))
    mask = np.asarray(mask, dtype=bool)
    if lookahead == 0:
        return cleaned, raw, mask
    n = raw.shape[1] - lookahead
    return cleaned[:, lookahead:], raw[:, :n], mask[:n]
