"""Core data types: chunks, calibration model, streaming state, pipeline config.

All signal arrays are channel-major float64: shape (channels, samples).
"""

from __future__ import annotations

from collections import deque
from dataclasses import dataclass, field

import numpy as np

from .errors import InvalidValue


def round_samples(x: float) -> int:
    """Seconds-to-samples rounding used everywhere a window/delay is sized."""
    return int(round(x))


@dataclass(frozen=True)
class MultichannelChunk:
    """A block of samples for C channels; the unit of streaming.

    ``first_sample_index`` is informational (count since stream start); the
    processor keeps its own authoritative sample counter.
    """

    data: np.ndarray  # (channels, samples), channel-major
    srate: float  # Hz, constant across a stream
    first_sample_index: int = 0

    @property
    def channels(self) -> int:
        return self.data.shape[0]

    @property
    def samples(self) -> int:
        return self.data.shape[1]


@dataclass(frozen=True)
class CalibrationParams:
    """Tuning knobs for calibration and detection."""

    cutoff: float = 5.0  # stddev multiplier on the per-component threshold
    blocksize: int = 10  # samples per covariance block
    window_len: float = 0.5  # statistics window, seconds
    window_overlap: float = 0.66  # overlap fraction between windows, in [0, 1)
    max_dims_fraction: float = 0.66  # fraction of components correctable at once

    def __post_init__(self):
        if self.cutoff <= 0:
            raise InvalidValue("cutoff", "must be > 0")
        if self.blocksize < 1:
            raise InvalidValue("blocksize", "must be >= 1")
        if self.window_len <= 0:
            raise InvalidValue("window_len", "must be > 0")
        if not 0 <= self.window_overlap < 1:
            raise InvalidValue("window_overlap", "must be in [0, 1)")
        if not 0 < self.max_dims_fraction <= 1:
            raise InvalidValue("max_dims_fraction", "must be in (0, 1]")

    def window_samples(self, srate: float) -> int:
        return round_samples(self.window_len * srate)

    def window_stride(self, srate: float) -> int:
        w = self.window_samples(srate)
        return max(1, round_samples(w * (1.0 - self.window_overlap)))

    def default_lookahead(self, srate: float) -> int:
        return round_samples(self.window_len * srate / 2.0)


DEFAULT_STEPSIZE = 32  # samples between detection updates
UPDATE_LOG_LIMIT = 65536  # bounded diagnostic history of (sample, n_rejected)


@dataclass(frozen=True)
class CalibrationState:
    """The learned model; immutable and safe to share across threads.

    mixing:    PSD square root of the robust calibration covariance (C x C).
    threshold: per-component threshold operator diag(mu + k*sigma) @ V.T (C x C).
    """

    mixing: np.ndarray
    threshold: np.ndarray
    filter_b: tuple[float, ...]
    filter_a: tuple[float, ...]  # filter_a[0] == 1 after normalization
    srate: float
    params: CalibrationParams

    def __post_init__(self):
        m = self.mixing
        if m.ndim != 2 or m.shape[0] != m.shape[1]:
            raise InvalidValue("mixing", "must be a square matrix")
        scale = max(float(np.linalg.norm(m)), 1e-300)
        if float(np.linalg.norm(m - m.T)) > 1e-12 * scale:
            raise InvalidValue("mixing", "must be symmetric within 1e-12 relative")
        if float(np.linalg.eigvalsh((m + m.T) / 2.0).min()) < -1e-10 * scale:
            raise InvalidValue("mixing", "must be positive semidefinite")
        if self.threshold.shape != m.shape:
            raise InvalidValue("threshold", "must match the mixing matrix shape")
        if not np.all(np.isfinite(self.threshold)):
            raise InvalidValue("threshold", "entries must be finite")
        if not self.filter_a or self.filter_a[0] != 1.0:
            raise InvalidValue("filter_a", "leading coefficient must be 1 (normalized)")
        if self.srate <= 0:
            raise InvalidValue("srate", "must be > 0")

    @property
    def channels(self) -> int:
        return self.mixing.shape[0]

    def window_samples(self) -> int:
        return self.params.window_samples(self.srate)

    def default_lookahead(self) -> int:
        return self.params.default_lookahead(self.srate)


@dataclass
class ProcessorState:
    """All mutable streaming state; exclusively owned by one processing sequence.

    Ring positions are keyed off global sample indices, so any partition of a
    stream into chunks leaves identical state at identical stream positions.
    """

    filter_state: np.ndarray  # (C, order) IIR delay-line memory
    delay_buffer: np.ndarray  # (C, L) most recent raw samples, oldest first
    cov_window: np.ndarray  # (C, W) filtered-sample ring, zero-filled at start
    r_current: np.ndarray  # (C, C) reconstruction applied with weight w
    r_previous: np.ndarray  # (C, C) reconstruction applied with weight 1 - w
    stepsize: int  # samples between detection updates
    samples_since_update: int = 0  # in [0, stepsize); 0 right at an update instant
    total_samples_seen: int = 0
    trivial_current: bool = True  # r_current is exactly the identity
    trivial_previous: bool = True
    # most recent update instants as (sample index, n_rejected)
    update_log: deque[tuple[int, int]] = field(
        default_factory=lambda: deque(maxlen=UPDATE_LOG_LIMIT)
    )

    @property
    def lookahead(self) -> int:
        return self.delay_buffer.shape[1]

    @classmethod
    def initial(
        cls,
        calib: CalibrationState,
        stepsize: int = DEFAULT_STEPSIZE,
        lookahead: int | None = None,
    ) -> "ProcessorState":
        if stepsize < 1:
            raise InvalidValue("stepsize", "must be >= 1")
        c = calib.channels
        w = calib.window_samples()
        la = calib.default_lookahead() if lookahead is None else int(lookahead)
        if la < 0:
            raise InvalidValue("lookahead", "must be >= 0")
        order = max(len(calib.filter_b), len(calib.filter_a)) - 1
        return cls(
            filter_state=np.zeros((c, order)),
            delay_buffer=np.zeros((c, la)),
            cov_window=np.zeros((c, w)),
            r_current=np.eye(c),
            r_previous=np.eye(c),
            stepsize=int(stepsize),
        )


@dataclass(frozen=True)
class ReconstructionUpdate:
    """Result of one detection step."""

    eigvals: np.ndarray  # (C,) ascending
    eigvecs: np.ndarray  # (C, C) orthonormal columns
    keep: np.ndarray  # (C,) bool, per-component keep flags
    reconstruction: np.ndarray  # (C, C); exactly the identity when nothing rejected
    n_rejected: int


@dataclass(frozen=True)
class PipelineConfig:
    """Runtime configuration; immutable between prepare and release."""

    sampling_rate: float  # Hz
    window_length: float  # seconds
    var_name: str  # name of the input side-channel variable
    calibration_file_name: str  # CSV of clean data, or a saved calibration state
    chunk_capacity: int = 1024  # max samples per streamed chunk
    fifo_capacity: int = 8  # chunks per FIFO
    cutoff: float = 5.0
    blocksize: int = 10
    window_overlap: float = 0.66
    max_dims_fraction: float = 0.66
    stepsize: int = DEFAULT_STEPSIZE
    lookahead: int | None = None  # samples; default round(window_length*srate/2)
    output_var_name: str | None = None  # default "<var_name>_clean"

    def __post_init__(self):
        if self.sampling_rate <= 0:
            raise InvalidValue("SamplingRate", "must be > 0")
        if self.window_length <= 0:
            raise InvalidValue("WindowLength", "must be > 0")
        if not self.var_name:
            raise InvalidValue("VarName", "must be non-empty")
        if not self.calibration_file_name:
            raise InvalidValue("CalibrationFileName", "must be non-empty")
        if self.chunk_capacity < 1:
            raise InvalidValue("ChunkCapacity", "must be >= 1")
        if self.fifo_capacity < 2:
            raise InvalidValue("FifoCapacity", "must be >= 2")
        if self.stepsize < 1:
            raise InvalidValue("Stepsize", "must be >= 1")
        if self.lookahead is not None and self.lookahead < 0:
            raise InvalidValue("Lookahead", "must be >= 0")
        # delegate algorithm-parameter validation
        self.algorithm_params()

    def algorithm_params(self) -> CalibrationParams:
        return CalibrationParams(
            cutoff=self.cutoff,
            blocksize=self.blocksize,
            window_len=self.window_length,
            window_overlap=self.window_overlap,
            max_dims_fraction=self.max_dims_fraction,
        )

    def resolved_lookahead(self) -> int:
        if self.lookahead is not None:
            return self.lookahead
        return round_samples(self.window_length * self.sampling_rate / 2.0)

    def resolved_output_var_name(self) -> str:
        return self.output_var_name or f"{self.var_name}_clean"
