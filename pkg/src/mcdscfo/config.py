"""System dimensions, the QPSK alphabet, and user code assignment."""

from dataclasses import dataclass, field
from functools import lru_cache

import numpy as np

from ._validation import check_int, is_power_of_two
from .exceptions import ConfigurationError, InvalidArgumentError, UnsupportedSizeError
from .zcz import generate_zcz, hadamard

__all__ = [
    "SystemConfig",
    "UserAssignment",
    "QPSK_POINTS",
    "qpsk_map",
    "qpsk_demap",
    "qpsk_slice",
    "qpsk_indices",
    "scrambling_sequence",
    "time_code_family",
    "make_assignments",
]

# Gray-mapped, unit energy; index = 2*b0 + b1, so index order is lexicographic in bits.
QPSK_POINTS = np.array([1 + 1j, 1 - 1j, -1 + 1j, -1 - 1j], dtype=np.complex128) / np.sqrt(2)
QPSK_POINTS.setflags(write=False)

CONSTELLATIONS = {"qpsk": QPSK_POINTS}


def qpsk_map(bits):
    """Map bit pairs (last axis, even length) to QPSK symbols."""
    bits = np.asarray(bits, dtype=np.int64)
    if bits.shape[-1] % 2:
        raise InvalidArgumentError("bit count must be even for QPSK")
    pairs = bits.reshape(*bits.shape[:-1], -1, 2)
    return QPSK_POINTS[2 * pairs[..., 0] + pairs[..., 1]]


def qpsk_indices(symbols):
    """Nearest QPSK point index for each entry."""
    symbols = np.asarray(symbols)
    return 2 * (symbols.real < 0) + (symbols.imag < 0)


def qpsk_slice(symbols):
    """Hard decisions onto the QPSK alphabet."""
    return QPSK_POINTS[qpsk_indices(symbols)]


def qpsk_demap(symbols):
    """Hard-decision bits, two per symbol, along a new trailing axis pair."""
    idx = qpsk_indices(symbols)
    bits = np.stack([idx >> 1, idx & 1], axis=-1)
    return bits.reshape(*idx.shape[:-1], -1) if idx.ndim else bits


@dataclass(frozen=True)
class SystemConfig:
    """
    Waveform dimensions.

    Parameters
    ----------
    U : int
        Parallel branches (symbols per user per frame).
    S : int
        Tones per branch per block.
    M_B : int
        Fading blocks spanned by a frequency-domain code.
    Q : int
        Time-domain spreading length; a fading block holds ``Q`` chip blocks.
    J, P : int
        Time-domain codes and frequency-domain codes per time code.
    N_CP : int
        Cyclic prefix length in samples.
    N_sym : int
        Symbol periods observed per CFO estimate.
    constellation : str
        Symbol alphabet; only ``"qpsk"``.
    """

    U: int = 2
    S: int = 128
    M_B: int = 2
    Q: int = 8
    J: int = 2
    P: int = 2
    N_CP: int = 16
    N_sym: int = 100
    constellation: str = "qpsk"

    def __post_init__(self):
        for name in ("U", "S", "M_B", "Q", "J", "P", "N_sym"):
            try:
                check_int(getattr(self, name), name, minimum=1)
            except InvalidArgumentError as exc:
                raise ConfigurationError(str(exc)) from exc
        try:
            check_int(self.N_CP, "N_CP", minimum=0)
        except InvalidArgumentError as exc:
            raise ConfigurationError(str(exc)) from exc
        if self.N_CP >= self.N_c:
            raise ConfigurationError(f"N_CP={self.N_CP} must be smaller than N_c={self.N_c}")
        if self.constellation not in CONSTELLATIONS:
            raise ConfigurationError(f"unknown constellation {self.constellation!r}")

    @property
    def N_c(self):
        return self.U * self.S

    @property
    def N_f(self):
        return self.N_c + self.N_CP

    @property
    def K(self):
        return self.J * self.P

    @property
    def freq_code_length(self):
        return self.S * self.M_B

    @property
    def blocks_per_frame(self):
        return self.M_B * self.Q

    @property
    def points(self):
        return CONSTELLATIONS[self.constellation]

    def replace(self, **changes):
        values = {name: getattr(self, name) for name in self.__dataclass_fields__}
        values.update(changes)
        return SystemConfig(**values)


@dataclass(frozen=True)
class UserAssignment:
    """
    One user's spreading codes and quasi-synchronous arrival delay.

    ``a`` has length ``Q``; ``c`` has length ``S * M_B`` and its ``m``-th
    length-``S`` segment (1-based) is :meth:`segment`.
    """

    j: int
    p: int
    a: np.ndarray
    c: np.ndarray
    delay_chips: int = 0
    zone: int = field(default=None, compare=False)

    def __post_init__(self):
        a = np.asarray(self.a).astype(np.complex128 if np.iscomplexobj(self.a) else np.float64)
        c = np.asarray(self.c).astype(np.complex128 if np.iscomplexobj(self.c) else np.float64)
        if a.ndim != 1 or c.ndim != 1 or a.size == 0 or c.size == 0:
            raise InvalidArgumentError("codes must be nonempty 1-D sequences")
        delay = check_int(self.delay_chips, "delay_chips", minimum=0)
        if self.zone is not None and delay > self.zone:
            raise InvalidArgumentError(f"delay_chips={delay} exceeds the code zone Z0={self.zone}")
        a.setflags(write=False)
        c.setflags(write=False)
        object.__setattr__(self, "a", a)
        object.__setattr__(self, "c", c)
        object.__setattr__(self, "delay_chips", delay)

    def segment(self, m, S):
        """Frequency-code segment for fading block ``m`` in ``1..M_B``."""
        M_B = self.c.size // S
        m = check_int(m, "m", minimum=1, maximum=M_B)
        return self.c[(m - 1) * S : m * S]

    def delayed_time_code(self):
        """Chip values seen at the receiver: ``a[(q - d) mod Q]``."""
        return np.roll(self.a, self.delay_chips)

    def with_delay(self, delay_chips):
        return UserAssignment(self.j, self.p, self.a, self.c, delay_chips, self.zone)


@lru_cache(maxsize=None)
def scrambling_sequence(n):
    """
    Fixed +-1 scrambler of length ``n`` from a degree-11 maximal LFSR.

    Multiplying every frequency code by the same scrambler keeps the codes
    mutually orthogonal while giving each branch waveform a noise-like
    envelope, so the cyclic prefix always carries signal energy.
    """
    n = check_int(n, "n", minimum=1)
    state = [1] * 11
    out = np.empty(n, dtype=np.int64)
    for i in range(n):
        bit = state[-1]
        out[i] = 1 - 2 * bit
        feedback = state[10] ^ state[8]  # x^11 + x^9 + 1
        state = [feedback] + state[:-1]
    out.setflags(write=False)
    return out


def time_code_family(Q, J):
    """
    Time-domain codes for ``J`` users of length ``Q``.

    Returns ``(codes, Z0)``; codes come from a certified ZCZ family.  A single
    time code with ``Q`` off the ZCZ grid falls back to all-ones with no zone.
    """
    M = 1
    while M < J:
        M *= 2
    try:
        fam = generate_zcz(Q, M)
    except UnsupportedSizeError:
        if J == 1:
            return np.ones((1, Q), dtype=np.int64), 0
        raise ConfigurationError(f"no ZCZ family of length Q={Q} with {J} codes")
    return np.asarray(fam.sequences[:J]), fam.Z0


def make_assignments(config, delays=None, scramble=True):
    """
    Assign codes to all ``K = J * P`` users, ordered ``k = j * P + p``.

    Frequency codes are Hadamard rows of order ``S * M_B`` (times the
    scrambler when ``scramble``); the same ``P`` rows serve every ``j``.
    """
    L_f = config.freq_code_length
    if config.P > 1 and not is_power_of_two(L_f):
        raise ConfigurationError(f"S*M_B={L_f} must be a power of two for P={config.P} frequency codes")
    if config.P > L_f:
        raise ConfigurationError(f"P={config.P} exceeds the frequency code length {L_f}")
    time_codes, zone = time_code_family(config.Q, config.J)
    if config.P == 1:
        rows = np.ones((1, L_f), dtype=np.int64)
    else:
        rows = hadamard(L_f)[: config.P]
    if scramble:
        rows = rows * scrambling_sequence(L_f)[None, :]
    if delays is None:
        delays = [0] * config.K
    if len(delays) != config.K:
        raise InvalidArgumentError(f"expected {config.K} delays, got {len(delays)}")
    users = []
    for j in range(config.J):
        for p in range(config.P):
            k = j * config.P + p
            users.append(UserAssignment(j, p, time_codes[j], rows[p], delays[k], zone))
    return users
