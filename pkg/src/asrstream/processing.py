"""Stateful per-chunk detection and correction.

The per-sample contract, which any partition of the stream into chunks must
reproduce exactly:

1. the raw sample enters the lookahead delay line; the L-delayed raw sample
   comes out,
2. the raw sample is IIR-filtered (carried state) and written into the
   covariance ring at position ``t mod W``,
3. at update instants (every ``stepsize`` samples, i.e. when
   ``(t + 1) % stepsize == 0``) the ring covariance ``sum(y y^T) / n_eff``
   with ``n_eff = min(t + 1, W)`` feeds a detection update and the
   reconstruction pair rotates (previous <- current <- new),
4. the output sample is ``[w R_cur + (1 - w) R_prev] @ delayed`` with the
   raised-cosine weight ``w = (1 - cos(pi (ssu + 1) / stepsize)) / 2``, where
   ``ssu`` counts samples since the last update (0 at an update instant, and
   0 at stream start). When both matrices are the identity the blend is
   skipped and the delayed sample is passed through bit-exactly.

The implementation below vectorizes runs of samples between update instants;
all state is keyed off global sample indices, so chunk boundaries are
invisible to the arithmetic.
"""

from __future__ import annotations

import numpy as np

from .errors import ChannelMismatch, InvalidInput
from .filters import iir_filter
from .linalg import pinv, symmetric_eig
from .types import (
    CalibrationState,
    MultichannelChunk,
    ProcessorState,
    ReconstructionUpdate,
)


def update_reconstruction(
    cov: np.ndarray, calib: CalibrationState, max_dims_fraction: float
) -> ReconstructionUpdate:
    """One detection step: compare covariance eigenvalues against the
    calibration thresholds and build the reconstruction matrix.

    Component j (eigenvalues ascending) is kept iff its eigenvalue stays at
    or below ``sum((threshold @ v_j)**2)``, or j lies below the rejection
    budget ``floor(max_dims_fraction * C)`` counted from the top. With
    nothing rejected the result is exactly the identity; otherwise
    ``R = M @ pinv(keep * (V^T M)) @ V^T`` (all-real arithmetic throughout).
    """
    cov = np.asarray(cov, dtype=float)
    if not np.all(np.isfinite(cov)):
        raise InvalidInput("covariance contains non-finite entries")
    c = calib.channels
    if cov.shape != (c, c):
        raise InvalidInput(f"covariance must be {c}x{c}")
    eigvals, eigvecs = symmetric_eig((cov + cov.T) / 2.0)

    budget = int(np.floor(max_dims_fraction * c))
    protected = np.arange(c) < c - budget  # smallest components, never rejected
    limits = np.sum((calib.threshold @ eigvecs) ** 2, axis=0)
    keep = (eigvals <= limits) | protected
    n_rejected = int(np.count_nonzero(~keep))

    if n_rejected == 0:
        recon = np.eye(c)
    else:
        proj = eigvecs.T @ calib.mixing
        proj[~keep] = 0.0
        recon = calib.mixing @ pinv(proj) @ eigvecs.T
    return ReconstructionUpdate(
        eigvals=eigvals,
        eigvecs=eigvecs,
        keep=keep,
        reconstruction=recon,
        n_rejected=n_rejected,
    )


def _ring_write(ring: np.ndarray, start_index: int, block: np.ndarray) -> None:
    """Write block columns at ring positions start_index..+m-1 (mod W)."""
    w = ring.shape[1]
    m = block.shape[1]
    if m >= w:
        block = block[:, m - w :]
        start_index += m - w
        m = w
    p = start_index % w
    k = min(w - p, m)
    ring[:, p : p + k] = block[:, :k]
    if m > k:
        ring[:, : m - k] = block[:, k:]


def _emit(
    out: np.ndarray,
    delayed: np.ndarray,
    state: ProcessorState,
    a: int,
    b: int,
    ssu_first: int,
) -> None:
    """Blend-and-write output columns [a, b) using the current matrix pair."""
    if state.trivial_current and state.trivial_previous:
        out[:, a:b] = delayed[:, a:b]
        return
    d = delayed[:, a:b]
    ssu = ssu_first + np.arange(b - a)
    w = 0.5 * (1.0 - np.cos(np.pi * (ssu + 1) / state.stepsize))
    out[:, a:b] = (state.r_current @ d) * w + (state.r_previous @ d) * (1.0 - w)


def asr_process_chunk(
    chunk: MultichannelChunk, calib: CalibrationState, state: ProcessorState
) -> tuple[MultichannelChunk, ProcessorState]:
    """Clean one chunk; returns a chunk of identical dimensions plus the
    updated state (mutated in place and returned).

    Output content is the input delayed by exactly ``state.lookahead``
    samples, passed through the blended reconstruction operators. A chunk of
    zero samples is returned unchanged with the state untouched.
    """
    x = np.asarray(chunk.data, dtype=float)
    if x.ndim != 2:
        raise InvalidInput("chunk data must be (channels, samples)")
    c = calib.channels
    if x.shape[0] != c:
        raise ChannelMismatch(
            f"chunk has {x.shape[0]} channels, calibration has {c}"
        )
    if chunk.srate != calib.srate:
        raise InvalidInput(
            f"chunk srate {chunk.srate} does not match calibration srate {calib.srate}"
        )
    n_samples = x.shape[1]
    if n_samples == 0:
        return chunk, state
    if not np.all(np.isfinite(x)):
        raise InvalidInput("chunk contains non-finite values")

    # lookahead delay line (zeros emerge during the first L samples)
    joined = np.concatenate([state.delay_buffer, x], axis=1)
    delayed = joined[:, :n_samples]
    state.delay_buffer = joined[:, n_samples:].copy()

    filtered, state.filter_state = iir_filter(
        x, calib.filter_b, calib.filter_a, state.filter_state
    )

    out = np.empty((c, n_samples))
    t0 = state.total_samples_seen
    step = state.stepsize
    window = state.cov_window.shape[1]
    max_dims = calib.params.max_dims_fraction

    ssu_next = 0 if t0 == 0 else state.samples_since_update + 1
    first_update = (step - 1 - t0) % step
    pos = 0
    for j in range(first_update, n_samples, step):
        if j > pos:
            _ring_write(state.cov_window, t0 + pos, filtered[:, pos:j])
            _emit(out, delayed, state, pos, j, ssu_next)
            ssu_next += j - pos
        # update instant: the ring must already hold this sample's value
        _ring_write(state.cov_window, t0 + j, filtered[:, j : j + 1])
        cov = state.cov_window @ state.cov_window.T
        cov /= min(t0 + j + 1, window)
        upd = update_reconstruction(cov, calib, max_dims)
        state.r_previous = state.r_current
        state.trivial_previous = state.trivial_current
        state.r_current = upd.reconstruction
        state.trivial_current = upd.n_rejected == 0
        state.update_log.append((t0 + j, upd.n_rejected))
        _emit(out, delayed, state, j, j + 1, 0)
        ssu_next = 1
        pos = j + 1
    if pos < n_samples:
        _ring_write(state.cov_window, t0 + pos, filtered[:, pos:n_samples])
        _emit(out, delayed, state, pos, n_samples, ssu_next)
        ssu_next += n_samples - pos

    state.samples_since_update = ssu_next - 1
    state.total_samples_seen = t0 + n_samples
    cleaned = MultichannelChunk(
        data=out, srate=chunk.srate, first_sample_index=chunk.first_sample_index
    )
    return cleaned, state
