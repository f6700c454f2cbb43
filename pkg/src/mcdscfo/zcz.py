"""
Zero-correlation-zone (ZCZ) spreading sequence families.

A ``(L, M, Z0)`` family holds ``M`` sequences of length ``L`` whose periodic
auto- and cross-correlations vanish for every lag ``1 <= |tau| <= Z0`` and
whose distinct members are orthogonal at ``tau = 0``.

Binary families are generated two ways:

* exhaustive search over all binary families, for ``L <= 16``;
* a recursive construction for larger sizes.  Seeded with the rows of a
  Sylvester-Hadamard matrix of order ``M`` (length-1 sequences), each step
  doubles the length of every element of a complete complementary code by
  pairwise ``(x, y) -> (x | y, x | -y)``.  The elements of each code are then
  concatenated in bit-reversed order.  This yields ``Z0 = L / (2M)``.

Every family returned by :func:`generate_zcz` is certified by
:func:`verify_zcz` with exact integer arithmetic before it is handed out.
"""

from dataclasses import dataclass, field

import numpy as np

from ._validation import check_int, check_sequence, is_power_of_two
from .exceptions import InvalidArgumentError, UnsupportedSizeError

__all__ = [
    "ZczFamily",
    "ZczReport",
    "periodic_correlation",
    "correlation_lags",
    "compute_eta",
    "zcz_bound",
    "generate_zcz",
    "verify_zcz",
    "measured_zone",
    "hadamard",
    "write_family",
    "read_family",
    "SUPPORTED_GRID",
]

EXHAUSTIVE_MAX_LENGTH = 16
MAX_LENGTH = 1 << 16
COMPLEX_TOL = 1e-12

SUPPORTED_GRID = (
    "M_seq = 2**a (a >= 0); L_seq = M_seq * 2**b (b >= 1); 4 <= L_seq <= 65536"
)


def _is_integer_valued(arr):
    if np.issubdtype(arr.dtype, np.integer):
        return True
    if np.iscomplexobj(arr):
        return False
    return bool(np.all(arr == np.round(arr)))


def _as_chips(seq, name="sequence"):
    """Return chips as int64 when integer-valued, complex128 otherwise."""
    arr = check_sequence(seq, name)
    if _is_integer_valued(arr):
        return arr.astype(np.int64)
    return arr.astype(np.complex128)


@dataclass(frozen=True)
class ZczFamily:
    """
    An immutable ZCZ sequence family.

    Parameters
    ----------
    sequences : array_like, shape (M_seq, L_seq)
        Chip sequences, one per row.
    Z0 : int
        Claimed one-sided zone length in chips.
    eta : float, optional
        Amplitude factor.  Computed from the chips when omitted.
    """

    sequences: np.ndarray
    Z0: int
    eta: float = None
    L_seq: int = field(init=False)
    M_seq: int = field(init=False)

    def __post_init__(self):
        seqs = np.asarray(self.sequences)
        if seqs.ndim != 2 or seqs.shape[0] == 0 or seqs.shape[1] == 0:
            raise InvalidArgumentError(f"sequences must be a nonempty 2-D array, got shape {seqs.shape}")
        if not np.all(np.isfinite(seqs)):
            raise InvalidArgumentError("sequences contain non-finite chips")
        seqs = seqs.astype(np.int64) if _is_integer_valued(seqs) else seqs.astype(np.complex128)
        mags = np.abs(seqs)
        if np.any(mags > 1 + 1e-12):
            raise InvalidArgumentError("every chip magnitude must be <= 1")
        M, L = seqs.shape
        z0 = check_int(self.Z0, "Z0", minimum=0)
        limit = L // M - 1 if L >= M else 0
        if z0 > limit:
            raise InvalidArgumentError(f"Z0={z0} exceeds the bound floor(L/M)-1 for L={L}, M={M}")
        eta = self.eta
        if eta is None:
            eta = max(compute_eta(row) for row in seqs)
        eta = float(eta)
        if not 0 < eta <= 1:
            raise InvalidArgumentError(f"eta must lie in (0, 1], got {eta}")
        seqs.setflags(write=False)
        object.__setattr__(self, "sequences", seqs)
        object.__setattr__(self, "Z0", z0)
        object.__setattr__(self, "eta", eta)
        object.__setattr__(self, "L_seq", L)
        object.__setattr__(self, "M_seq", M)

    @property
    def is_binary(self):
        return self.sequences.dtype == np.int64 and bool(np.all(np.abs(self.sequences) == 1))

    def __len__(self):
        return self.M_seq

    def __getitem__(self, q):
        return self.sequences[q]


@dataclass(frozen=True)
class ZczReport:
    """Outcome of :func:`verify_zcz`."""

    passed: bool
    worst: tuple = None
    max_abs_in_zone: float = 0.0
    Z0: int = 0

    def __bool__(self):
        return self.passed


def periodic_correlation(s, r, tau):
    """
    Periodic correlation ``sum_l s[l] * conj(r[(l + tau) mod L])``.

    Integer-valued inputs are correlated in exact integer arithmetic.
    """
    s = _as_chips(s, "s")
    r = _as_chips(r, "r")
    if s.shape != r.shape:
        raise InvalidArgumentError(f"length mismatch: {s.size} vs {r.size}")
    L = s.size
    tau = check_int(tau, "tau", minimum=0, maximum=L - 1)
    rolled = np.roll(r, -tau)
    if np.iscomplexobj(rolled):
        rolled = rolled.conj()
    out = np.dot(s, rolled)
    return int(out) if np.issubdtype(np.asarray(out).dtype, np.integer) else complex(out)


def correlation_lags(sequences, lags):
    """
    Correlations of every ordered pair at the given lags.

    Returns ``C`` of shape ``(M, M, len(lags))`` with
    ``C[q, r, i] = periodic_correlation(seq[q], seq[r], lags[i] mod L)``.
    """
    seqs = np.asarray(sequences)
    L = seqs.shape[1]
    conj = np.iscomplexobj(seqs)
    out = []
    for tau in lags:
        rolled = np.roll(seqs, -(int(tau) % L), axis=1)
        out.append(seqs @ (rolled.conj() if conj else rolled).T)
    return np.stack(out, axis=-1)


def compute_eta(s):
    """Mean chip magnitude ``(1/L) sum |s[l]|``."""
    s = check_sequence(s, "s")
    return float(np.mean(np.abs(s)))


def zcz_bound(L_seq, M_seq):
    """Upper bound ``floor(L_seq / M_seq) - 1`` on the one-sided zone."""
    M_seq = check_int(M_seq, "M_seq", minimum=1)
    L_seq = check_int(L_seq, "L_seq", minimum=M_seq)
    return L_seq // M_seq - 1


def hadamard(n):
    """Sylvester-Hadamard matrix of order ``n`` (a power of two), int64."""
    n = check_int(n, "n", minimum=1)
    if not is_power_of_two(n):
        raise InvalidArgumentError(f"Hadamard order must be a power of two, got {n}")
    H = np.ones((1, 1), dtype=np.int64)
    while H.shape[0] < n:
        H = np.block([[H, H], [H, -H]])
    return H


def _bit_reversal(n):
    bits = n.bit_length() - 1
    if bits == 0:
        return np.zeros(1, dtype=np.int64)
    return np.array([int(format(i, f"0{bits}b")[::-1], 2) for i in range(n)], dtype=np.int64)


def _recursive_family(L, M):
    """Complete-complementary doubling construction; Z0 = L / (2M)."""
    codes = hadamard(M)[:, :, None]  # (set k, element i, chips)
    while codes.shape[2] * M < L:
        even, odd = codes[:, 0::2, :], codes[:, 1::2, :]
        grown = np.empty((M, M, 2 * codes.shape[2]), dtype=np.int64)
        grown[:, 0::2, :] = np.concatenate([even, odd], axis=2)
        grown[:, 1::2, :] = np.concatenate([even, -odd], axis=2)
        codes = grown
    return codes[:, _bit_reversal(M), :].reshape(M, L)


def _all_binary(L):
    """All +-1 sequences of length L with a leading +1 chip."""
    idx = np.arange(1 << (L - 1), dtype=np.int64)
    bits = (idx[:, None] >> np.arange(L - 2, -1, -1)) & 1
    return np.concatenate([np.ones((idx.size, 1), np.int64), 1 - 2 * bits], axis=1)


def _search_family(L, M, Z):
    """First binary (L, M, Z) family in enumeration order, or None."""
    cands = _all_binary(L)
    for tau in range(1, Z + 1):
        auto = np.einsum("ij,ij->i", cands, np.roll(cands, -tau, axis=1))
        cands = cands[auto == 0]
        if cands.shape[0] < M:
            return None
    if M == 1:
        return cands[:1]
    ok = np.ones((cands.shape[0], cands.shape[0]), dtype=bool)
    for tau in range(-Z, Z + 1):
        ok &= (cands @ np.roll(cands, -(tau % L), axis=1).T) == 0
    ok &= ok.T
    n = cands.shape[0]

    def extend(chosen, start):
        if len(chosen) == M:
            return chosen
        for j in range(start, n):
            if all(ok[c, j] for c in chosen):
                found = extend(chosen + [j], j + 1)
                if found is not None:
                    return found
        return None

    picked = extend([], 0)
    return None if picked is None else cands[picked]


def measured_zone(sequences, cap=None):
    """
    Largest ``Z`` for which the rows of ``sequences`` form a ZCZ family.

    Returns ``-1`` when distinct rows are not orthogonal at lag zero.
    """
    fam = np.asarray(sequences)
    M, L = fam.shape
    cap = L // M - 1 if cap is None else cap
    exact = _is_integer_valued(fam)
    tol = 0 if exact else COMPLEX_TOL * L
    c0 = correlation_lags(fam, [0])[:, :, 0]
    off = c0 - np.diag(np.diag(c0))
    if np.any(np.abs(off) > tol):
        return -1
    z = 0
    for tau in range(1, cap + 1):
        c = correlation_lags(fam, [tau, -tau])
        if np.any(np.abs(c) > tol):
            break
        z = tau
    return z


def generate_zcz(L_seq, M_seq):
    """
    Generate a certified binary ZCZ family.

    Parameters
    ----------
    L_seq : int
        Sequence length; a power-of-two multiple (at least 2x) of ``M_seq``.
    M_seq : int
        Family size, a power of two.

    Returns
    -------
    ZczFamily
        Binary family whose ``Z0`` is the largest verified zone.

    Raises
    ------
    UnsupportedSizeError
        If ``(L_seq, M_seq)`` is off the supported grid.
    """
    try:
        L = check_int(L_seq, "L_seq", minimum=1)
        M = check_int(M_seq, "M_seq", minimum=1)
    except InvalidArgumentError as exc:
        raise UnsupportedSizeError(str(exc), SUPPORTED_GRID) from exc
    ratio = L // M if L % M == 0 else 0
    if not (is_power_of_two(M) and ratio >= 2 and is_power_of_two(ratio) and 4 <= L <= MAX_LENGTH):
        raise UnsupportedSizeError(
            f"unsupported ZCZ size (L_seq={L}, M_seq={M}); supported grid: {SUPPORTED_GRID}",
            SUPPORTED_GRID,
        )
    bound = zcz_bound(L, M)
    base = _recursive_family(L, 2)[:1] if M == 1 else _recursive_family(L, M)
    family = base
    if L <= EXHAUSTIVE_MAX_LENGTH:
        base_zone = measured_zone(base)
        for z in range(bound, base_zone, -1):
            found = _search_family(L, M, z)
            if found is not None:
                family = found
                break
    z0 = measured_zone(family, cap=bound)
    fam = ZczFamily(family, Z0=z0, eta=1.0)
    report = verify_zcz(fam)
    if not report.passed or z0 < 1:  # pragma: no cover - construction guarantee
        raise RuntimeError(f"generated family failed certification: {report}")
    return fam


def verify_zcz(family):
    """
    Check a family against its claimed zone.

    Passes iff every pair has zero periodic correlation for
    ``1 <= |tau| <= Z0``, distinct pairs are orthogonal at ``tau = 0``, and
    each autocorrelation peak equals ``eta * L_seq``.  Binary/integer chips
    are checked exactly; complex chips to ``1e-12 * L_seq``.
    """
    seqs = family.sequences
    L, M, Z0 = family.L_seq, family.M_seq, family.Z0
    exact = np.issubdtype(seqs.dtype, np.integer)
    tol = 0.0 if exact else COMPLEX_TOL * L
    lags = [0] + [t for z in range(1, Z0 + 1) for t in (z, -z)]
    C = correlation_lags(seqs, lags)
    target = np.zeros_like(C, dtype=np.complex128)
    target[np.arange(M), np.arange(M), 0] = family.eta * L
    dev = np.abs(C - target)
    zone_mask = np.ones(C.shape, dtype=bool)
    zone_mask[np.arange(M), np.arange(M), 0] = False
    max_in_zone = float(dev[zone_mask].max()) if zone_mask.any() else 0.0
    worst_idx = np.unravel_index(np.argmax(dev), dev.shape)
    worst_dev = float(dev[worst_idx])
    if exact:
        # eta*L may be fractional only for non-unit integer chips
        passed = worst_dev == 0
    else:
        passed = worst_dev <= tol
    worst = None
    if not passed:
        q, r, i = (int(v) for v in worst_idx)
        worst = (q, r, lags[i])
    return ZczReport(passed=passed, worst=worst, max_abs_in_zone=max_in_zone, Z0=Z0)


def _format_chip(value):
    if isinstance(value, (int, np.integer)):
        return str(int(value))
    value = complex(value)
    if value.imag == 0:
        return repr(value.real)
    return f"{value.real!r}{value.imag:+}j"


def _parse_chip(token):
    for kind in (int, float, complex):
        try:
            return kind(token)
        except ValueError:
            continue
    raise InvalidArgumentError(f"cannot parse chip {token!r}")


def write_family(family, path):
    """Write ``family`` as a header ``L M Z0 eta`` plus one row per sequence."""
    lines = [f"{family.L_seq} {family.M_seq} {family.Z0} {family.eta!r}"]
    for row in family.sequences:
        lines.append(" ".join(_format_chip(v) for v in row.tolist()))
    with open(path, "w", encoding="ascii") as fh:
        fh.write("\n".join(lines) + "\n")


def read_family(path):
    """Parse a family written by :func:`write_family`."""
    with open(path, encoding="ascii") as fh:
        rows = [line.split() for line in fh if line.strip()]
    if not rows or len(rows[0]) != 4:
        raise InvalidArgumentError(f"{path}: header must be 'L M Z0 eta'")
    L, M, Z0 = (int(tok) for tok in rows[0][:3])
    eta = float(rows[0][3])
    body = rows[1:]
    if len(body) != M or any(len(row) != L for row in body):
        raise InvalidArgumentError(f"{path}: expected {M} rows of {L} chips")
    chips = [[_parse_chip(tok) for tok in row] for row in body]
    if all(isinstance(c, int) for row in chips for c in row):
        seqs = np.array(chips, dtype=np.int64)
    else:
        seqs = np.array(chips, dtype=np.complex128)
    return ZczFamily(seqs, Z0=Z0, eta=eta)
