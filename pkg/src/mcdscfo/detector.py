"""
Multiuser detection: block linear MMSE and exhaustive maximum likelihood.

The receiver is genie-aided: it knows every user's channel, codes and
arrival delay.  Observations are the demodulated vectors of one frame,
stacked as ``(m, q, n)`` with ``n`` in natural (pre-permutation) order, and
the unknowns are the ``K * U`` symbols ordered ``k * U + u``.
"""

from functools import lru_cache

import numpy as np
from sklearn.base import BaseEstimator
from sklearn.utils.validation import check_is_fitted

from .channel import frequency_response
from .config import QPSK_POINTS, qpsk_slice
from .exceptions import BudgetError, InvalidArgumentError, NumericError
from .waveform import permutation

__all__ = [
    "MAX_HYPOTHESES",
    "build_effective_matrix",
    "build_frame_matrix",
    "mmse_filter",
    "mmse_detect",
    "ml_detect",
    "coupling_components",
    "MMSEDetector",
    "MLDetector",
]

MAX_HYPOTHESES = 2**20
# Gram entries below this fraction of the geometric mean diagonal count as zero.
COUPLING_TOL = 1e-12


def build_effective_matrix(assignments, realization, config, m):
    """
    Map from stacked symbols to the demodulated vectors of fading block ``m``.

    Parameters
    ----------
    assignments : sequence of UserAssignment
        The ``K`` active users, in column order.
    realization : ChannelRealization
        Taps of shape ``(n_fading, L)`` (shared) or ``(K, n_fading, L)``.
    config : SystemConfig
    m : int
        Fading block within the frame, 1-based; taps row ``m - 1`` is used.

    Returns
    -------
    ndarray, shape (Q * N_c, K * U)
    """
    K, U, S, Q, N_c = len(assignments), config.U, config.S, config.Q, config.N_c
    if K == 0:
        raise InvalidArgumentError("no users given")
    if not 1 <= m <= config.M_B:
        raise InvalidArgumentError(f"m={m} outside 1..{config.M_B}")
    taps = realization.taps
    if taps.ndim == 3 and taps.shape[0] != K:
        raise InvalidArgumentError(f"taps for {taps.shape[0]} users, {K} assignments")
    if taps.shape[-2] < m:
        raise InvalidArgumentError(f"no taps for fading block {m}")
    perm = permutation(U, S)
    A = np.zeros((Q, U, S, K, U), dtype=np.complex128)
    for k, user in enumerate(assignments):
        if user.a.size != Q or user.c.size != config.freq_code_length:
            raise InvalidArgumentError(f"user {k} codes do not match the configuration")
        h = realization.user_taps(k)[m - 1]
        H = frequency_response(h, N_c)[perm].reshape(U, S)
        seg = user.segment(m, S)
        chips = user.delayed_time_code()
        for u in range(U):
            A[:, u, :, k, u] = chips[:, None] * (H[u] * seg)[None, :]
    return A.reshape(Q * N_c, K * U)


def build_frame_matrix(assignments, realization, config):
    """Vertical stack of :func:`build_effective_matrix` over ``m = 1..M_B``."""
    return np.vstack(
        [build_effective_matrix(assignments, realization, config, m) for m in range(1, config.M_B + 1)]
    )


def _check_system(y, A):
    A = np.asarray(A, dtype=np.complex128)
    if A.ndim not in (2, 3):
        raise InvalidArgumentError("A must be a matrix or a stack of matrices")
    y = np.asarray(y, dtype=np.complex128)
    if y.shape[-1] != A.shape[-2]:
        raise InvalidArgumentError(f"observation length {y.shape[-1]} does not match A rows {A.shape[-2]}")
    if A.ndim == 3 and y.shape != A.shape[:1] + A.shape[1:2]:
        raise InvalidArgumentError("batched y must be (T, rows) for A of shape (T, rows, cols)")
    if not (np.all(np.isfinite(A)) and np.all(np.isfinite(y))):
        raise InvalidArgumentError("non-finite entries in y or A")
    return y, A


def _gram(A):
    return np.swapaxes(A.conj(), -1, -2) @ A


def mmse_filter(A, noise_var):
    """``(A^H A + noise_var I)^-1 A^H`` (stacked when ``A`` is 3-D)."""
    A = np.asarray(A, dtype=np.complex128)
    if noise_var < 0 or not np.isfinite(noise_var):
        raise InvalidArgumentError("noise_var must be finite and nonnegative")
    R = _gram(A) + noise_var * np.eye(A.shape[-1])
    if noise_var == 0 and np.any(np.linalg.matrix_rank(R) < R.shape[-1]):
        raise NumericError("normal matrix is singular: rank-deficient A with zero noise")
    try:
        return np.linalg.solve(R, np.swapaxes(A.conj(), -1, -2))
    except np.linalg.LinAlgError as exc:
        raise NumericError(f"normal matrix is singular: {exc}") from exc


def mmse_detect(y, A, noise_var, constellation=QPSK_POINTS):
    """
    Linear MMSE estimate followed by per-entry QPSK slicing.

    With a 2-D ``A``, ``y`` may hold several observations along leading
    axes.  With a stack ``A`` of shape ``(T, rows, cols)``, ``y`` is
    ``(T, rows)`` and row ``t`` is detected with ``A[t]``.
    """
    y, A = _check_system(y, A)
    _require_qpsk(constellation)
    W = mmse_filter(A, noise_var)
    if A.ndim == 3:
        return qpsk_slice(np.einsum("tij,tj->ti", W, y))
    return qpsk_slice(y @ W.T)


def _require_qpsk(constellation):
    if not np.array_equal(np.asarray(constellation), QPSK_POINTS):
        raise InvalidArgumentError("only the QPSK alphabet is supported")


@lru_cache(maxsize=16)
def _hypotheses(n):
    """All ``4**n`` QPSK vectors, lexicographic in symbol index order."""
    idx = np.indices((4,) * n).reshape(n, -1).T
    table = QPSK_POINTS[idx]
    table.setflags(write=False)
    return table


def _linked(G, tol):
    d = np.sqrt(np.abs(np.diagonal(G, axis1=-2, axis2=-1)))
    return np.abs(G) > tol * d[..., :, None] * d[..., None, :]


def coupling_components(G, tol=COUPLING_TOL):
    """
    Connected components of the Gram coupling graph, each sorted ascending.

    Columns ``i`` and ``j`` are coupled when
    ``|G_ij| > tol * sqrt(G_ii G_jj)``.  Components are returned in order of
    their smallest member; a zero-energy column forms its own component.
    """
    reach = _reachability(_linked(np.asarray(G), tol))
    comps, seen = [], set()
    for i in range(reach.shape[0]):
        if i not in seen:
            members = [int(j) for j in np.flatnonzero(reach[i])]
            seen.update(members)
            comps.append(members)
    return comps


def _reachability(linked):
    n = linked.shape[-1]
    reach = linked | np.eye(n, dtype=bool)
    for _ in range(max(1, int(np.ceil(np.log2(max(n, 2)))))):
        reach = (reach.astype(np.int32) @ reach.astype(np.int32)) > 0
    return reach


def _ml_solve(z, G, comps):
    n = G.shape[-1]
    flat = z.reshape(-1, n)
    out = np.empty_like(flat)
    for comp in comps:
        B = _hypotheses(len(comp))
        Gc = G[np.ix_(comp, comp)]
        quad = np.einsum("hi,ij,hj->h", B.conj(), Gc, B).real
        metric = quad[None, :] - 2 * (flat[:, comp].conj() @ B.T).real
        out[:, comp] = B[np.argmin(metric, axis=1)]  # first minimum = lexicographic tie-break
    return out.reshape(z.shape)


def _ml_solve_batch(z, G, tol=COUPLING_TOL):
    """Per-row search for stacked ``z (T, n)`` and ``G (T, n, n)``."""
    T, n = z.shape
    reach = _reachability(_linked(G, tol))
    keys = np.packbits(reach.reshape(T, -1), axis=1)
    _, group = np.unique(keys, axis=0, return_inverse=True)
    group = group.reshape(-1)
    out = np.empty_like(z)
    for g in np.unique(group):
        rows = np.flatnonzero(group == g)
        comps = coupling_components(G[rows[0]], tol)
        for comp in comps:
            B = _hypotheses(len(comp))
            Gc = G[rows][:, comp][:, :, comp]
            quad = np.einsum("hi,tij,hj->th", B.conj(), Gc, B).real
            lin = (z[rows][:, comp].conj() @ B.T).real
            best = np.argmin(quad - 2 * lin, axis=1)
            out[np.ix_(rows, comp)] = B[best]
    return out


def ml_detect(y, A, constellation=QPSK_POINTS, max_hypotheses=MAX_HYPOTHESES):
    """
    Exhaustive ``argmin_b ||y - A b||^2`` over QPSK vectors.

    The search is split over independent groups of columns (zero Gram
    coupling), which leaves the minimizer and its lexicographic tie-breaking
    unchanged.  Batching follows :func:`mmse_detect`.

    Raises
    ------
    BudgetError
        If ``4 ** (K*U)`` exceeds ``max_hypotheses``.
    """
    y, A = _check_system(y, A)
    _require_qpsk(constellation)
    n = A.shape[-1]
    if 4**n > max_hypotheses:
        raise BudgetError(f"ML search needs 4**{n} = {4**n} hypotheses, budget is {max_hypotheses}")
    G = _gram(A)
    if A.ndim == 3:
        z = np.einsum("tij,ti->tj", A.conj(), y)
        return _ml_solve_batch(z, G)
    z = y @ A.conj()
    return _ml_solve(z, G, coupling_components(G))


class MMSEDetector(BaseEstimator):
    """
    Block linear MMSE detector.

    ``fit(A)`` builds the filter for an effective system matrix; ``predict``
    returns sliced symbol decisions for rows of observations.
    """

    def __init__(self, noise_var=1.0):
        self.noise_var = noise_var

    def fit(self, A, y=None):
        A = np.asarray(A, dtype=np.complex128)
        self.filter_ = mmse_filter(A, self.noise_var)
        self.n_features_in_ = A.shape[0]
        return self

    def decision_function(self, Y):
        check_is_fitted(self, "filter_")
        Y = np.asarray(Y, dtype=np.complex128)
        if Y.shape[-1] != self.n_features_in_:
            raise InvalidArgumentError(f"expected {self.n_features_in_} observation entries")
        return Y @ self.filter_.T

    def predict(self, Y):
        return qpsk_slice(self.decision_function(Y))


class MLDetector(BaseEstimator):
    """
    Exhaustive maximum-likelihood detector over QPSK vectors.

    ``fit(A)`` checks the hypothesis budget and precomputes the Gram matrix
    and its independent column groups.
    """

    def __init__(self, max_hypotheses=MAX_HYPOTHESES):
        self.max_hypotheses = max_hypotheses

    def fit(self, A, y=None):
        A = np.asarray(A, dtype=np.complex128)
        if A.ndim != 2:
            raise InvalidArgumentError("A must be a matrix")
        n = A.shape[1]
        if 4**n > self.max_hypotheses:
            raise BudgetError(f"ML search needs 4**{n} hypotheses, budget is {self.max_hypotheses}")
        self.A_ = A
        self.gram_ = _gram(A)
        self.components_ = coupling_components(self.gram_)
        self.n_features_in_ = A.shape[0]
        return self

    def predict(self, Y):
        check_is_fitted(self, "gram_")
        Y = np.asarray(Y, dtype=np.complex128)
        if Y.shape[-1] != self.n_features_in_:
            raise InvalidArgumentError(f"expected {self.n_features_in_} observation entries")
        z = Y @ self.A_.conj()
        return _ml_solve(z, self.gram_, self.components_)
