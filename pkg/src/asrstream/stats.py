"""Sliding-window RMS, robust location/scale, robust covariance estimation."""

from __future__ import annotations

import numpy as np
from numpy.lib.stride_tricks import sliding_window_view

from .errors import InsufficientData, InvalidInput
from .linalg import geometric_median

MAD_SCALE = 1.4826  # Gaussian consistency constant for the MAD
MIN_STATS_VALUES = 8


def sliding_rms(
    signal: np.ndarray, srate: float, window_len: float, window_overlap: float
) -> np.ndarray:
    """RMS over windows of round(window_len*srate) samples.

    Window starts advance by ``max(1, round(W*(1-overlap)))`` samples; the
    result has ``(N - W)//stride + 1`` values.
    """
    x = np.asarray(signal, dtype=float)
    if x.ndim != 1:
        raise InvalidInput("signal must be 1-d")
    w = int(round(window_len * srate))
    if w < 2:
        raise InvalidInput("window must span at least 2 samples")
    if not 0 <= window_overlap < 1:
        raise InvalidInput("window_overlap must be in [0, 1)")
    if x.size < w:
        raise InsufficientData(f"need at least {w} samples, got {x.size}")
    stride = max(1, int(round(w * (1.0 - window_overlap))))
    windows = sliding_window_view(x * x, w)[::stride]
    return np.sqrt(windows.mean(axis=1))


def robust_stats(values) -> tuple[float, float]:
    """Median and scaled MAD of a sample: (mu, sigma); sigma may be 0."""
    v = np.asarray(values, dtype=float)
    if v.ndim != 1:
        v = v.ravel()
    if v.size < MIN_STATS_VALUES:
        raise InsufficientData(
            f"need at least {MIN_STATS_VALUES} values for a robust fit, got {v.size}"
        )
    if not np.all(np.isfinite(v)):
        raise InvalidInput("values contain non-finite entries")
    mu = float(np.median(v))
    sigma = MAD_SCALE * float(np.median(np.abs(v - mu)))
    return mu, sigma


def robust_covariance(
    data: np.ndarray,
    blocksize: int,
    *,
    median_tol: float = 1e-13,
    median_max_iter: int = 2000,
) -> np.ndarray:
    """Geometric median of per-block mean outer products, symmetrized.

    Samples are split into ``N // blocksize`` consecutive blocks (any
    remainder is dropped); each block contributes its mean outer product as a
    C*C vector, and the Weiszfeld median of those vectors is the estimate.
    """
    x = np.asarray(data, dtype=float)
    if x.ndim != 2:
        raise InvalidInput("data must be (channels, samples)")
    if not np.all(np.isfinite(x)):
        raise InvalidInput("data contains non-finite values")
    if blocksize < 1:
        raise InvalidInput("blocksize must be >= 1")
    c, n = x.shape
    n_blocks = n // blocksize
    if n_blocks < 1:
        raise InsufficientData(f"need at least one block of {blocksize} samples")
    if n < c:
        raise InsufficientData("need at least as many samples as channels")
    trimmed = x[:, : n_blocks * blocksize].reshape(c, n_blocks, blocksize)
    blocks = np.empty((n_blocks, c * c))
    for k in range(n_blocks):
        xb = trimmed[:, k, :]
        blocks[k] = ((xb @ xb.T) / blocksize).ravel()
    med = geometric_median(blocks, tol=median_tol, max_iter=median_max_iter)
    cov = med.reshape(c, c)
    return (cov + cov.T) / 2.0
