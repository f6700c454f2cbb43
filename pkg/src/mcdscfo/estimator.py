"""
Blind CFO estimation from the averaged power spectrum.

The receiver averages zero-padded periodograms of CP-included blocks and
finds the fractional shift of a known spectral template that best matches
them.  Periodograms with ``N_fft >= 2 N_f - 1`` are exact DFTs of the
aperiodic block autocorrelation, so a frequency shift of ``nu`` subcarriers
is applied exactly as a phase ramp ``exp(j 2 pi nu delta / N_c)`` on lag
``delta``.  No pilots, null tones or CP correlation windows are used.
"""

from dataclasses import dataclass
from functools import lru_cache

import numpy as np
from sklearn.base import BaseEstimator, TransformerMixin
from sklearn.utils.validation import check_is_fitted

from ._validation import check_blocks, check_int
from .exceptions import InvalidArgumentError, NoSignalError

__all__ = [
    "SpectrumEstimate",
    "CfoEstimate",
    "EstimatorStats",
    "power_spectrum",
    "modulation_autocorrelation",
    "spectral_template",
    "template_from_waveforms",
    "estimate_cfo",
    "estimator_statistics",
    "PowerSpectrumCFOEstimator",
    "default_n_fft",
]


@dataclass(frozen=True)
class SpectrumEstimate:
    rho: np.ndarray
    N_sym_used: int
    N_fft: int


@dataclass(frozen=True)
class CfoEstimate:
    epsilon_hat: float
    objective_peak: float
    grid_step: float


@dataclass(frozen=True)
class EstimatorStats:
    bias: float
    variance: float
    mse: float
    count: int


def default_n_fft(N_c, N_CP):
    """Four-fold zero padding of a CP-included block."""
    return 4 * (N_c + N_CP)


def _fast_size(n):
    """Smallest 2-3-5-smooth integer >= n."""
    best = 1 << max(0, (n - 1).bit_length())
    p5 = 1
    while p5 < best:
        p35 = p5
        while p35 < best:
            m = p35
            while m < n:
                m *= 2
            best = min(best, m)
            p35 *= 3
        p5 *= 5
    return best


def power_spectrum(blocks, N_fft):
    """
    Average periodogram ``rho[k] = mean_l |X_l[k]|^2``.

    ``X_l`` is the ``N_fft``-point DFT of block ``l`` zero-padded.  When
    ``N_fft`` exceeds ``2 N_f - 1`` the average is formed at a smaller fast
    size and mapped to ``N_fft`` through the block autocorrelation, which
    gives the same values up to rounding.
    """
    blocks = check_blocks(blocks)
    n_blocks, L = blocks.shape
    N_fft = check_int(N_fft, "N_fft", minimum=L)
    M = _fast_size(2 * L - 1)
    if M >= N_fft:
        X = np.fft.fft(blocks, n=N_fft, axis=1)
        rho = np.mean(X.real**2 + X.imag**2, axis=0)
    else:
        X = np.fft.fft(blocks, n=M, axis=1)
        acf = np.fft.ifft(np.mean(X.real**2 + X.imag**2, axis=0))
        full = np.zeros(N_fft, dtype=np.complex128)
        full[:L] = acf[:L]
        if L > 1:
            full[-(L - 1) :] = acf[-(L - 1) :]
        rho = np.clip(np.fft.fft(full).real, 0.0, None)
    return SpectrumEstimate(rho=rho, N_sym_used=n_blocks, N_fft=N_fft)


def modulation_autocorrelation(delta, N_c, N_CP):
    """
    Expected phase-process correlation at lag ``delta``.

    ``(N_f - |delta|) / N_f`` inside ``|delta| <= N_f`` and zero outside,
    with ``N_f = N_c + N_CP``.  Vectorized over ``delta``.
    """
    N_f = N_c + N_CP
    if N_f <= 0:
        raise InvalidArgumentError("N_c + N_CP must be positive")
    d = np.abs(np.asarray(delta, dtype=np.float64))
    out = np.where(d <= N_f, (N_f - d) / N_f, 0.0)
    return float(out) if out.ndim == 0 else out


def _lags(N_fft):
    idx = np.arange(N_fft)
    return np.where(idx < (N_fft + 1) // 2, idx, idx - N_fft)


def _normalize(template):
    template = np.clip(template, 0.0, None)
    total = template.sum()
    return template / total


@lru_cache(maxsize=64)
def _comb_template(N_c, N_CP, N_fft, active):
    N_f = N_c + N_CP
    delta = _lags(N_fft)
    k = np.arange(N_c) if active is None else np.asarray(active)
    comb = np.exp(2j * np.pi * np.outer(delta, k) / N_c).sum(axis=1)
    acf = N_f * modulation_autocorrelation(delta, N_c, N_CP) * comb
    acf[np.abs(delta) >= N_f] = 0
    template = _normalize(np.fft.fft(acf).real)
    template.setflags(write=False)
    return template


def spectral_template(config, N_fft=None, active=None, waveforms=None):
    """
    Expected received power spectrum at zero CFO, normalized to unit sum.

    With independent unit-energy data on each active tone the spectrum is
    the triangular lag window of :func:`modulation_autocorrelation` applied
    to the tone comb, i.e. a Fejer kernel centred on every active tone.

    Parameters
    ----------
    config : SystemConfig
    N_fft : int, optional
        Analysis size; defaults to ``4 * N_f``.
    active : sequence of int, optional
        Active tone indices; all ``N_c`` tones by default.
    waveforms : ndarray, optional
        Unit-symbol transmit blocks ``(..., N_f)`` whose data symbols are
        independent (e.g. :func:`mcdscfo.waveform.branch_waveforms`).  When
        given, the template is their mean periodogram, which keeps the
        cross-tone structure that known spreading codes impose.
    """
    N_fft = default_n_fft(config.N_c, config.N_CP) if N_fft is None else N_fft
    N_fft = check_int(N_fft, "N_fft", minimum=2 * config.N_f - 1)
    if waveforms is not None:
        return template_from_waveforms(waveforms, N_fft)
    key = None if active is None else tuple(int(k) for k in active)
    return _comb_template(config.N_c, config.N_CP, N_fft, key)


def template_from_waveforms(waveforms, N_fft):
    """Unit-sum mean periodogram of independent unit-symbol waveforms."""
    W = np.asarray(waveforms, dtype=np.complex128)
    W = W.reshape(-1, W.shape[-1])
    X = np.fft.fft(W, n=N_fft, axis=1)
    template = _normalize(np.sum(X.real**2 + X.imag**2, axis=0))
    template.setflags(write=False)
    return template


class _ShiftKernel:
    """Grid evaluation of the shifted-template match in the lag domain."""

    def __init__(self, template, N_c, N_fft):
        acf = np.fft.ifft(template)
        keep = np.abs(acf) > 1e-12 * np.abs(acf).max()
        self.delta = _lags(N_fft)[keep]
        self.index = self.delta % N_fft
        self.acf_conj = acf[keep].conj()
        self.N_c = N_c
        self.N_fft = N_fft
        self.norm = np.linalg.norm(template)

    def __call__(self, spectrum_acf, nu):
        phase = np.exp(-2j * np.pi * np.outer(nu, self.delta) / self.N_c)
        return self.N_fft * (phase @ (spectrum_acf * self.acf_conj)).real


@lru_cache(maxsize=64)
def _kernel(template_bytes, N_c, N_fft):
    template = np.frombuffer(template_bytes, dtype=np.float64)
    return _ShiftKernel(template, N_c, N_fft)


def estimate_cfo(spectrum, template, N_c, window=0.5, grid_step=0.01):
    """
    Fractional CFO by template matching.

    Parameters
    ----------
    spectrum : SpectrumEstimate or ndarray
        Measured average power spectrum over ``N_fft`` bins.
    template : ndarray
        Zero-CFO template over the same bins.
    N_c : int
        DFT size of the multicarrier block (sets the subcarrier spacing).
    window : float
        Search half-width in subcarrier spacings.
    grid_step : float
        Coarse grid resolution; the peak is refined by a three-point parabola.

    Returns
    -------
    CfoEstimate
    """
    rho = spectrum.rho if isinstance(spectrum, SpectrumEstimate) else np.asarray(spectrum, dtype=np.float64)
    template = np.ascontiguousarray(template, dtype=np.float64)
    if rho.shape != template.shape or rho.ndim != 1:
        raise InvalidArgumentError(f"spectrum and template lengths differ: {rho.shape} vs {template.shape}")
    if grid_step <= 0 or window <= 0:
        raise InvalidArgumentError("window and grid_step must be positive")
    total = float(np.sum(rho))
    if not np.isfinite(total) or total <= 0:
        raise NoSignalError("spectrum carries no power")
    N_fft = rho.size
    kernel = _kernel(template.tobytes(), int(N_c), N_fft)
    spectrum_acf = np.fft.ifft(rho)[kernel.index]
    n_half = int(np.floor(window / grid_step + 1e-9))
    grid = np.arange(-n_half, n_half + 1) * grid_step
    J = kernel(spectrum_acf, grid)
    i = int(np.argmax(J))
    nu, peak = grid[i], J[i]
    if 0 < i < grid.size - 1:
        left, mid, right = J[i - 1], J[i], J[i + 1]
        curvature = left - 2 * mid + right
        if curvature < 0:
            offset = 0.5 * (left - right) / curvature
            nu = grid[i] + offset * grid_step
            peak = mid - 0.25 * (left - right) * offset
    score = float(peak) / (np.linalg.norm(rho) * kernel.norm)
    return CfoEstimate(epsilon_hat=float(nu), objective_peak=score, grid_step=float(grid_step))


def estimator_statistics(estimates, epsilon_true):
    """Bias, unbiased variance and MSE of CFO estimates against the truth."""
    values = np.array(
        [e.epsilon_hat if isinstance(e, CfoEstimate) else float(e) for e in estimates],
        dtype=np.float64,
    )
    if values.size == 0:
        raise InvalidArgumentError("no estimates given")
    err = values - float(epsilon_true)
    variance = float(np.var(values, ddof=1)) if values.size > 1 else float("nan")
    return EstimatorStats(
        bias=float(err.mean()),
        variance=variance,
        mse=float(np.mean(err**2)),
        count=int(values.size),
    )


class PowerSpectrumCFOEstimator(TransformerMixin, BaseEstimator):
    """
    Blind fractional CFO estimator with a scikit-learn interface.

    ``fit`` estimates the offset from a stack of received CP-included blocks;
    ``transform`` removes it by counter-rotating the samples.

    Parameters
    ----------
    N_c : int
        Tones per block.
    N_CP : int
        Cyclic prefix length.
    N_fft : int, optional
        Periodogram size, ``4 * (N_c + N_CP)`` by default.
    grid_step : float
        Coarse search step in subcarrier spacings.
    window : float
        Search half-width in subcarrier spacings.
    template : ndarray, optional
        Zero-CFO spectral template; the all-tones comb when omitted.

    Attributes
    ----------
    spectrum_ : SpectrumEstimate
    template_ : ndarray
    epsilon_hat_ : float
    estimate_ : CfoEstimate
    """

    def __init__(self, N_c=256, N_CP=16, N_fft=None, grid_step=0.01, window=0.5, template=None):
        self.N_c = N_c
        self.N_CP = N_CP
        self.N_fft = N_fft
        self.grid_step = grid_step
        self.window = window
        self.template = template

    def _n_fft(self):
        return default_n_fft(self.N_c, self.N_CP) if self.N_fft is None else self.N_fft

    def fit(self, X, y=None):
        X = check_blocks(X, self.N_c + self.N_CP, "X")
        n_fft = self._n_fft()
        if self.template is None:
            template = _comb_template(self.N_c, self.N_CP, n_fft, None)
        else:
            template = np.asarray(self.template, dtype=np.float64)
        self.spectrum_ = power_spectrum(X, n_fft)
        self.template_ = template
        self.estimate_ = estimate_cfo(self.spectrum_, template, self.N_c, self.window, self.grid_step)
        self.epsilon_hat_ = self.estimate_.epsilon_hat
        return self

    def transform(self, X):
        check_is_fitted(self, "epsilon_hat_")
        X = check_blocks(X, self.N_c + self.N_CP, "X")
        n = np.arange(X.size, dtype=np.float64).reshape(X.shape)
        return X * np.exp(-2j * np.pi * self.epsilon_hat_ * n / self.N_c)

    def predict(self, X):
        """CFO estimate for the blocks ``X`` (refits on them)."""
        return self.fit(X).epsilon_hat_
