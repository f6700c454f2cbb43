"""
Block-fading multipath, carrier frequency offset and AWGN at complex baseband.

The direct-conversion front end is treated as ideal I/Q downconversion; the
only impairment it leaves is the residual offset ``epsilon`` (in subcarrier
spacings), which rotates global sample ``n`` by ``exp(j 2 pi epsilon n / N_c)``.
The received signal is ``r = rot(h * s) + w``.
"""

from dataclasses import dataclass

import numpy as np
from numpy.lib.stride_tricks import sliding_window_view

from ._validation import check_int
from .exceptions import ConfigurationError, InvalidArgumentError
from .waveform import BasebandFrame

__all__ = [
    "ChannelRealization",
    "exponential_pdp",
    "draw_block_fading",
    "apply_multipath",
    "apply_cfo",
    "apply_channel",
    "awgn",
    "snr_to_noise_var",
    "sample_energy",
    "frequency_response",
]


@dataclass(frozen=True)
class ChannelRealization:
    """
    One draw of the propagation channel.

    Attributes
    ----------
    taps : ndarray, shape (n_fading, L_taps) or (K, n_fading, L_taps)
        Impulse response per fading block (and per user on the uplink).
    epsilon : float
        Normalized CFO in subcarrier spacings.
    noise_var : float
        Per-complex-sample noise variance.
    user_delays : tuple of int
        Quasi-synchronous arrival delay of each user in chips.
    """

    taps: np.ndarray
    epsilon: float = 0.0
    noise_var: float = 0.0
    user_delays: tuple = ()

    def __post_init__(self):
        taps = np.asarray(self.taps, dtype=np.complex128)
        if taps.ndim not in (2, 3) or taps.shape[-1] == 0:
            raise InvalidArgumentError(f"taps must be (n_fading, L) or (K, n_fading, L), got {taps.shape}")
        if self.noise_var < 0 or not np.isfinite(self.noise_var):
            raise InvalidArgumentError("noise_var must be finite and nonnegative")
        object.__setattr__(self, "taps", taps)
        object.__setattr__(self, "user_delays", tuple(int(d) for d in self.user_delays))

    @property
    def L_taps(self):
        return self.taps.shape[-1]

    def user_taps(self, k):
        return self.taps if self.taps.ndim == 2 else self.taps[k]


def exponential_pdp(L_taps):
    """Tap powers decaying one nat per tap, summing to one."""
    L_taps = check_int(L_taps, "L_taps", minimum=1)
    p = np.exp(-np.arange(L_taps, dtype=np.float64))
    return p / p.sum()


def draw_block_fading(n_fading, L_taps, rng, n_users=None):
    """
    I.i.d. circular Gaussian taps with an exponential profile.

    Returns shape ``(n_fading, L_taps)``, or ``(n_users, n_fading, L_taps)``
    when ``n_users`` is given.  Every fading block is an independent draw.
    """
    n_fading = check_int(n_fading, "n_fading", minimum=1)
    shape = (n_fading, L_taps) if n_users is None else (n_users, n_fading, L_taps)
    amp = np.sqrt(exponential_pdp(L_taps) / 2)
    return (rng.standard_normal(shape) + 1j * rng.standard_normal(shape)) * amp


def frequency_response(taps, N_c):
    """``H[k] = sum_l h[l] exp(-j 2 pi k l / N_c)`` along the last axis."""
    taps = np.asarray(taps)
    return np.fft.fft(taps, n=N_c, axis=-1)


def apply_multipath(blocks, fading_index, taps):
    """
    Convolve each fading block's sample stream with that block's taps.

    Blocks inside one fading block are convolved as a continuous stream; the
    convolution tail is cut at the fading-block boundary.

    Parameters
    ----------
    blocks : ndarray, shape (..., n_blocks, N_f)
    fading_index : ndarray, shape (n_blocks,)
        Nondecreasing fading-block label per block.
    taps : ndarray, shape (..., n_fading, L_taps)
        Indexed by ``fading_index - fading_index[0]``; leading axes broadcast
        against those of ``blocks``.
    """
    blocks = np.asarray(blocks, dtype=np.complex128)
    taps = np.asarray(taps, dtype=np.complex128)
    n_blocks, N_f = blocks.shape[-2:]
    L = taps.shape[-1]
    if L > N_f:
        raise ConfigurationError("channel longer than a block")
    labels = np.asarray(fading_index) - fading_index[0]
    counts = np.bincount(labels)
    if counts.size > 1 and np.all(counts[:-1] == counts[0]) and counts[-1] <= counts[0]:
        return _multipath_uniform(blocks, taps, int(counts[0]), counts.size)
    coeff = taps[..., labels, :]  # (..., n_blocks, L)
    out = blocks * coeff[..., :1]
    if L == 1:
        return out
    lead = np.broadcast_shapes(blocks.shape[:-2], taps.shape[:-2])
    flat = np.broadcast_to(blocks, lead + blocks.shape[-2:]).reshape(lead + (n_blocks * N_f,))
    first = np.flatnonzero(np.diff(labels, prepend=-1))
    for l in range(1, L):
        delayed = np.zeros_like(flat)
        delayed[..., l:] = flat[..., :-l]
        delayed = delayed.reshape(lead + (n_blocks, N_f))
        delayed[..., first, :l] = 0  # no spill-over across fading blocks
        out = out + coeff[..., l : l + 1] * delayed
    return out


def _multipath_uniform(blocks, taps, per_fading, n_fading):
    """Fast path: every fading block (except a shorter last one) has ``per_fading`` blocks."""
    n_blocks, N_f = blocks.shape[-2:]
    lead = np.broadcast_shapes(blocks.shape[:-2], taps.shape[:-2])
    row = per_fading * N_f
    L = taps.shape[-1]
    # each row carries L-1 leading zeros so the sliding window never crosses a fading boundary
    stream = np.zeros(lead + (n_fading, L - 1 + row), dtype=np.complex128)
    body = stream[..., L - 1 :].reshape(lead + (n_fading * row,))
    body[..., : n_blocks * N_f] = np.broadcast_to(blocks, lead + blocks.shape[-2:]).reshape(lead + (-1,))
    stream[..., L - 1 :] = body.reshape(lead + (n_fading, row))
    h = np.broadcast_to(taps[..., :n_fading, ::-1], lead + (n_fading, L))
    window = sliding_window_view(stream, L, axis=-1)  # (..., n_fading, row, L)
    out = np.matmul(window, h[..., None])[..., 0]
    return out.reshape(lead + (-1,))[..., : n_blocks * N_f].reshape(lead + (n_blocks, N_f))


def apply_cfo(frame, epsilon):
    """Rotate global sample ``n`` by ``exp(j 2 pi epsilon n / N_c)``."""
    n = np.arange(frame.blocks.size, dtype=np.float64)
    rot = np.exp(2j * np.pi * float(epsilon) * n / frame.N_c)
    return frame.replace_blocks(frame.blocks * rot.reshape(frame.blocks.shape))


def awgn(shape, noise_var, rng):
    """Circular complex Gaussian noise of per-sample variance ``noise_var``."""
    if noise_var == 0:
        return np.zeros(shape, dtype=np.complex128)
    size = int(np.prod(shape))
    w = rng.standard_normal(2 * size).view(np.complex128).reshape(shape)
    return w * np.sqrt(noise_var / 2)


def apply_channel(frame, realization, rng=None):
    """
    Multipath, then CFO rotation, then additive noise.

    ``frame`` is a :class:`BasebandFrame`, or a sequence of them (one per
    user, each convolved with its own taps before summation).
    """
    frames = [frame] if isinstance(frame, BasebandFrame) else list(frame)
    if not frames:
        raise InvalidArgumentError("no frames given")
    first = frames[0]
    if realization.L_taps > first.N_CP and realization.L_taps > 1:
        raise ConfigurationError(
            f"L_taps={realization.L_taps} exceeds N_CP={first.N_CP}: the prefix does not cover the delay spread"
        )
    n_fading = first.fading_index[-1] - first.fading_index[0] + 1
    if realization.taps.ndim == 3 and realization.taps.shape[0] != len(frames):
        raise InvalidArgumentError("per-user taps do not match the number of frames")
    total = np.zeros_like(first.blocks)
    for k, fr in enumerate(frames):
        taps = realization.user_taps(k)
        if taps.shape[0] < n_fading:
            raise InvalidArgumentError(f"need taps for {n_fading} fading blocks, got {taps.shape[0]}")
        total += apply_multipath(fr.blocks, fr.fading_index, taps)
    out = apply_cfo(first.replace_blocks(total), realization.epsilon)
    if realization.noise_var > 0:
        if rng is None:
            raise InvalidArgumentError("a random generator is required for noisy channels")
        out = out.replace_blocks(out.blocks + awgn(out.blocks.shape, realization.noise_var, rng))
    return out


def sample_energy(frame):
    """Mean ``|s[n]|^2`` over the CP-included samples."""
    blocks = frame.blocks if isinstance(frame, BasebandFrame) else np.asarray(frame)
    return float(np.mean(np.abs(blocks) ** 2))


def snr_to_noise_var(snr_db, signal_energy=1.0):
    """Noise variance giving ``snr_db`` relative to the per-sample signal energy."""
    snr_db = float(snr_db)
    if not np.isfinite(snr_db):
        raise InvalidArgumentError("snr_db must be finite")
    return float(signal_energy) / 10 ** (snr_db / 10)
