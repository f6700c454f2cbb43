"""
MC-DS-CDMA transmit/receive chain and the OFDM baseline.

A multicarrier block carries ``N_c = U * S`` tones and a cyclic prefix of
``N_CP`` samples.  Chips of one symbol occupy ``Q`` consecutive blocks (one
fading block); a frame spans ``M_B`` fading blocks because the frequency code
of length ``S * M_B`` is split across them.  All DFTs are unitary.
"""

from dataclasses import dataclass

import numpy as np

from ._validation import check_blocks, check_int, check_vector
from .exceptions import InvalidArgumentError

__all__ = [
    "BasebandFrame",
    "permutation_index",
    "permutation",
    "spread_tf",
    "modulate_block",
    "demodulate_block",
    "despread_tf",
    "ofdm_modulate",
    "ofdm_demodulate",
    "branch_waveforms",
    "mcdscdma_frames",
    "ofdm_frame",
]


@dataclass(frozen=True)
class BasebandFrame:
    """
    Consecutive CP-included sample blocks.

    Attributes
    ----------
    blocks : ndarray, shape (n_blocks, N_c + N_CP)
        Complex samples; block ``i`` starts at global sample ``i * N_f``.
    fading_index : ndarray, shape (n_blocks,)
        Fading block each sample block belongs to (nondecreasing).
    N_c, N_CP : int
        Tone count and prefix length.
    """

    blocks: np.ndarray
    fading_index: np.ndarray
    N_c: int
    N_CP: int

    def __post_init__(self):
        blocks = check_blocks(self.blocks, self.N_c + self.N_CP)
        fidx = np.asarray(self.fading_index, dtype=np.int64)
        if fidx.shape != (blocks.shape[0],) or np.any(np.diff(fidx) < 0):
            raise InvalidArgumentError("fading_index must be a nondecreasing label per block")
        object.__setattr__(self, "blocks", blocks)
        object.__setattr__(self, "fading_index", fidx)

    @property
    def N_f(self):
        return self.N_c + self.N_CP

    @property
    def n_blocks(self):
        return self.blocks.shape[0]

    @property
    def samples(self):
        return self.blocks.reshape(-1)

    def replace_blocks(self, blocks):
        return BasebandFrame(blocks, self.fading_index, self.N_c, self.N_CP)

    def boundaries(self):
        """Start indices (in blocks) of each fading block, plus the end."""
        starts = np.flatnonzero(np.diff(self.fading_index, prepend=self.fading_index[0] - 1))
        return np.append(starts, self.n_blocks)


def permutation_index(y, U, S):
    """
    Row of the permutation matrix that holds a one in column ``y``.

    Both indices are 1-based:
    ``x = ((y - 1) mod U) * S + floor((y - 1) / U) + 1``.
    """
    U = check_int(U, "U", minimum=1)
    S = check_int(S, "S", minimum=1)
    y = check_int(y, "y", minimum=1, maximum=U * S)
    return ((y - 1) % U) * S + (y - 1) // U + 1


def permutation(U, S):
    """0-based map ``perm`` with ``(gamma @ Z)[perm[y]] = Z[y]``."""
    y = np.arange(U * S)
    return (y % U) * S + y // U


def _check_z(Z, config):
    Z = check_vector(Z, config.N_c, "Z")
    return np.asarray(Z, dtype=np.complex128)


def spread_tf(symbols, user, m, chip, config):
    """
    Time- and frequency-spread vector for fading block ``m`` and chip ``chip``.

    Segment ``u`` (length ``S``) of the result is
    ``c^m * a[chip] * symbols[u]``.  ``m`` is 1-based, ``chip`` 0-based.
    """
    symbols = np.asarray(symbols, dtype=np.complex128)
    if symbols.shape != (config.U,):
        raise InvalidArgumentError(f"expected {config.U} symbols, got shape {symbols.shape}")
    if user.a.size != config.Q or user.c.size != config.freq_code_length:
        raise InvalidArgumentError("user codes do not match the configuration")
    m = check_int(m, "m", minimum=1, maximum=config.M_B)
    chip = check_int(chip, "chip", minimum=0, maximum=config.Q - 1)
    seg = user.segment(m, config.S)
    return (symbols[:, None] * (user.a[chip] * seg)[None, :]).reshape(-1)


def modulate_block(Z, config):
    """
    ``T_CP F^H gamma Z`` for one or more vectors along the last axis.

    Output blocks have length ``N_CP + U * S``.
    """
    Z = _check_z(Z, config)
    binned = np.empty_like(Z)
    binned[..., permutation(config.U, config.S)] = Z
    body = np.fft.ifft(binned, axis=-1, norm="ortho")
    if config.N_CP == 0:
        return body
    return np.concatenate([body[..., -config.N_CP :], body], axis=-1)


def demodulate_block(block, config):
    """``gamma^-1 F R_CP block``: the adjoint (and inverse) of :func:`modulate_block`."""
    block = check_vector(block, config.N_f, "block")
    bins = np.fft.fft(np.asarray(block)[..., config.N_CP :], axis=-1, norm="ortho")
    return bins[..., permutation(config.U, config.S)]


def despread_tf(Y, user, config):
    """
    Recover one user's ``U`` symbols from demodulated vectors.

    Parameters
    ----------
    Y : array_like, shape (M_B, Q, U * S)
        Demodulated vectors per fading block and chip.
    user : UserAssignment
        Codes and delay of the user to despread.

    Returns
    -------
    ndarray, shape (U,)
        Matched-filter outputs normalized so a noiseless flat single-user
        link returns the transmitted symbols.
    """
    Y = np.asarray(Y, dtype=np.complex128)
    expected = (config.M_B, config.Q, config.N_c)
    if Y.shape != expected:
        raise InvalidArgumentError(f"Y must have shape {expected}, got {Y.shape}")
    a = user.delayed_time_code()
    # time-domain correlation first
    per_block = np.einsum("q,mqn->mn", a.conj(), Y)
    per_block = per_block.reshape(config.M_B, config.U, config.S)
    c = user.c.reshape(config.M_B, config.S)
    combined = np.einsum("ms,mus->u", c.conj(), per_block)
    return combined / (np.sum(np.abs(a) ** 2) * np.sum(np.abs(c) ** 2))


def ofdm_modulate(symbols, N_CP):
    """Unitary IDFT plus cyclic prefix; no spreading or permutation."""
    symbols = np.asarray(symbols, dtype=np.complex128)
    if symbols.ndim == 0 or symbols.shape[-1] == 0:
        raise InvalidArgumentError("symbols must have a nonempty last axis")
    N_c = symbols.shape[-1]
    N_CP = check_int(N_CP, "N_CP", minimum=0, maximum=N_c - 1)
    body = np.fft.ifft(symbols, axis=-1, norm="ortho")
    return np.concatenate([body[..., N_c - N_CP :], body], axis=-1)


def ofdm_demodulate(block, N_c, N_CP):
    block = check_vector(block, N_c + N_CP, "block")
    return np.fft.fft(np.asarray(block)[..., N_CP:], axis=-1, norm="ortho")


def branch_waveforms(users, config):
    """
    Per-user, per-fading-block, per-branch transmit blocks for a unit symbol.

    Returns ``W`` of shape ``(K, M_B, U, N_f)``; the block for user ``k``,
    fading block ``m``, chip ``q`` is
    ``a_k[(q - d_k) mod Q] * sum_u b_{k,u} W[k, m, u]``.
    """
    K, U, S = len(users), config.U, config.S
    Z = np.zeros((K, config.M_B, U, U, S), dtype=np.complex128)
    for k, user in enumerate(users):
        c = user.c.reshape(config.M_B, S)
        for u in range(U):
            Z[k, :, u, u, :] = c
    return modulate_block(Z.reshape(K, config.M_B, U, config.N_c), config)


def mcdscdma_frames(symbols, users, config, waveforms=None):
    """
    Transmit frames for all users, returned per user.

    Parameters
    ----------
    symbols : array_like, shape (n_frames, K, U)
        Data symbols; one set of ``U`` per user per frame.
    users : sequence of UserAssignment
        ``K`` users with codes and delays.

    Returns
    -------
    ndarray, shape (K, n_frames * M_B * Q, N_f)
        Block stream of each user before the channel, fading-block major.
    """
    symbols = np.asarray(symbols, dtype=np.complex128)
    K = len(users)
    if symbols.ndim != 3 or symbols.shape[1:] != (K, config.U):
        raise InvalidArgumentError(f"symbols must have shape (n_frames, {K}, {config.U})")
    W = branch_waveforms(users, config) if waveforms is None else waveforms
    chips = np.stack([user.delayed_time_code() for user in users])  # (K, Q)
    base = np.einsum("fku,kmun->kfmn", symbols, W)
    blocks = base[:, :, :, None, :] * chips[:, None, None, :, None]
    return blocks.reshape(K, -1, config.N_f)


def ofdm_frame(symbols, N_CP, blocks_per_fading_block):
    """OFDM blocks from an ``(n_blocks, N_c)`` symbol array as a :class:`BasebandFrame`."""
    symbols = np.asarray(symbols, dtype=np.complex128)
    if symbols.ndim != 2:
        raise InvalidArgumentError("symbols must be (n_blocks, N_c)")
    blocks = ofdm_modulate(symbols, N_CP)
    fidx = np.arange(symbols.shape[0]) // blocks_per_fading_block
    return BasebandFrame(blocks, fidx, symbols.shape[1], N_CP)
