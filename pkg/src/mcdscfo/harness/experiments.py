"""
Monte Carlo experiments: CFO estimator variance and detector BER.

Every trial draws from its own counter-seeded generator, and trials run in
fixed-size chunks whose results are reduced in (sweep index, trial index)
order.  Output therefore does not depend on the number of workers.
"""

import hashlib
import math
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field
from functools import lru_cache

import numpy as np

from .. import __version__
from ..channel import apply_multipath, awgn, exponential_pdp
from ..config import QPSK_POINTS, make_assignments, qpsk_indices
from ..detector import MAX_HYPOTHESES, ml_detect, mmse_detect
from ..estimator import default_n_fft, estimate_cfo, power_spectrum, spectral_template
from ..exceptions import BudgetError, ConfigurationError
from ..waveform import branch_waveforms, demodulate_block, mcdscdma_frames, ofdm_modulate, permutation
from .seeding import trial_rng

__all__ = [
    "ExperimentSpec",
    "ExperimentReport",
    "Record",
    "make_spec",
    "run_experiment",
    "run_cfo_variance",
    "run_ber",
    "observation_blocks",
    "variance_ci95",
    "wilson_interval",
    "snr_at_ber",
]

SWEEPS = {"ncp": "N_CP", "nsym": "N_sym", "snr": "snr_db"}
_GRID_KEYS = {"ncp": "harness.ncp_grid", "nsym": "harness.nsym_grid", "snr": "harness.snr_grid"}


@dataclass(frozen=True)
class Record:
    sweep: float
    series: str
    value: float
    ci95: float
    trials: int
    seed: int


@dataclass(frozen=True)
class ExperimentReport:
    """
    Result table plus metadata.

    ``samples`` keeps the per-trial values behind each variance record,
    keyed by ``(series, sweep)``; it is not serialized.
    """

    records: tuple = ()
    metadata: dict = field(default_factory=dict)
    samples: dict = field(default_factory=dict, compare=False, repr=False)

    def series(self, name):
        return [r for r in self.records if r.series == name]

    def value(self, series, sweep):
        for r in self.records:
            if r.series == series and r.sweep == sweep:
                return r.value
        raise KeyError((series, sweep))


@dataclass(frozen=True)
class ExperimentSpec:
    """
    One experiment.

    ``kind`` is ``"cfo-variance"`` or ``"ber"``; ``sweep`` is ``"ncp"``,
    ``"nsym"`` or ``"snr"`` (BER always sweeps SNR).
    """

    kind: str
    sweep: str
    grid: tuple
    settings: object
    trials: int
    master_seed: int
    workers: int = 1
    chunk_size: int = 64

    def __post_init__(self):
        if self.kind not in ("cfo-variance", "ber"):
            raise ConfigurationError(f"unknown experiment kind {self.kind!r}")
        if self.sweep not in SWEEPS:
            raise ConfigurationError(f"unknown sweep {self.sweep!r}")
        if self.kind == "ber" and self.sweep != "snr":
            raise ConfigurationError("BER experiments sweep SNR")
        if self.trials < 1 or self.workers < 1 or self.chunk_size < 1:
            raise ConfigurationError("trials, workers and chunk_size must be positive")
        if not self.grid or any(b <= a for a, b in zip(self.grid, self.grid[1:])):
            raise ConfigurationError("sweep grid must be nonempty and strictly increasing")

    @property
    def experiment_id(self):
        return f"{self.kind}-vs-{self.sweep}"


def make_spec(settings, kind, sweep="snr", trials=None, seed=None, workers=None):
    """Build a spec from parsed settings, with optional CLI overrides."""
    opts = settings.options
    grid = opts["harness.ber_snr_grid"] if kind == "ber" else opts[_GRID_KEYS[sweep]]
    return ExperimentSpec(
        kind=kind,
        sweep=sweep,
        grid=tuple(grid),
        settings=settings,
        trials=opts["harness.max_frames" if kind == "ber" else "harness.trials"] if trials is None else trials,
        master_seed=opts["harness.seed"] if seed is None else seed,
        workers=opts["harness.workers"] if workers is None else workers,
        chunk_size=opts["harness.chunk_size"],
    )


# statistics ----------------------------------------------------------------


def variance_ci95(samples):
    """
    Half-width of a normal-theory 95% interval for the sample variance.

    Uses the fourth central moment, so heavy-tailed estimates widen it.
    """
    x = np.asarray(samples, dtype=np.float64)
    n = x.size
    if n < 4:
        return math.nan
    d = x - x.mean()
    s2 = float(np.sum(d**2) / (n - 1))
    m4 = float(np.mean(d**4))
    var_of_s2 = max(m4 - (n - 3) / (n - 1) * s2**2, 0.0) / n
    return 1.959963984540054 * math.sqrt(var_of_s2)


def wilson_interval(errors, n, z=1.959963984540054):
    """Wilson score interval ``(low, high)`` for a binomial proportion."""
    if n <= 0:
        return (0.0, 1.0)
    p = errors / n
    denom = 1 + z * z / n
    centre = (p + z * z / (2 * n)) / denom
    half = z * math.sqrt(p * (1 - p) / n + z * z / (4 * n * n)) / denom
    low = 0.0 if errors == 0 else max(0.0, centre - half)
    high = 1.0 if errors == n else min(1.0, centre + half)
    return (low, high)


# links ---------------------------------------------------------------------


def observation_blocks(series, config, n_sym):
    """
    Multicarrier blocks covering ``n_sym`` symbol periods.

    An OFDM symbol is one block.  An MC-DS-CDMA branch symbol lasts ``Q``
    blocks and ``U`` branches run in parallel, so one symbol period is
    ``Q / U`` blocks.
    """
    if series == "ofdm":
        return n_sym
    return -(-n_sym * config.Q // config.U)


def _taps_for(settings, config):
    L = settings["channel.taps"]
    if L is None:
        L = max(1, config.N_CP // 2)
    if L > 1 and L > config.N_CP:
        raise ConfigurationError(f"channel.taps={L} exceeds N_CP={config.N_CP}")
    return L


def _pdp(profile, L):
    if profile == "uniform":
        return np.full(L, 1.0 / L)
    return exponential_pdp(L)


def _draw_taps(rng, shape, pdp):
    return rng.standard_normal(shape + (2 * pdp.size,)).view(np.complex128) * np.sqrt(pdp / 2)


@dataclass(frozen=True)
class _Link:
    series: str
    config: object
    users: tuple
    W: np.ndarray
    zone: int
    template: np.ndarray
    n_fft: int
    pdp: np.ndarray
    energy: float
    delays: str
    grid_step: float
    window: float


@lru_cache(maxsize=32)
def _link(series, config, n_users, L_taps, profile, template_kind, n_fft, delays, grid_step, window):
    n_fft = default_n_fft(config.N_c, config.N_CP) if n_fft is None else n_fft
    if n_fft < 2 * config.N_f - 1:
        raise ConfigurationError(f"estimator.n_fft={n_fft} is below 2*N_f-1={2 * config.N_f - 1}")
    pdp = _pdp(profile, L_taps)
    if series == "ofdm":
        template = spectral_template(config, n_fft)
        return _Link(series, config, (), None, 0, template, n_fft, pdp, 1.0, delays, grid_step, window)
    if n_users > config.K:
        raise ConfigurationError(f"harness.users={n_users} exceeds K={config.K}")
    users = tuple(make_assignments(config)[:n_users])
    W = branch_waveforms(users, config)
    zone = users[0].zone or 0
    # expected per-sample energy over a frame for unit-energy symbols and chips
    energy = float(np.sum(np.abs(W) ** 2) / (config.M_B * config.N_f))
    if template_kind == "code":
        template = spectral_template(config, n_fft, waveforms=W)
    else:
        template = spectral_template(config, n_fft)
    return _Link(series, config, users, W, zone, template, n_fft, pdp, energy, delays, grid_step, window)


def _link_for(settings, series, config, n_users=None):
    return _link(
        series,
        config,
        settings["harness.users"] if n_users is None else n_users,
        _taps_for(settings, config),
        settings["channel.profile"],
        settings["estimator.template"],
        settings["estimator.n_fft"],
        settings["channel.delays"],
        settings["estimator.grid_step"],
        settings["estimator.window"],
    )


def _noise_var(link, snr_db):
    if math.isinf(snr_db) and snr_db > 0:
        return 0.0
    return link.energy / 10 ** (snr_db / 10)


def _draw_delays(link, rng, n):
    if link.delays == "zero" or link.zone == 0:
        return np.zeros(n, dtype=np.int64)
    return rng.integers(0, link.zone + 1, size=n)


def _qpsk(rng, shape):
    return QPSK_POINTS[rng.integers(0, 4, size=shape)]


def _transmit_mcdscdma(link, n_blocks, rng):
    """Received block stream before CFO and noise, plus per-user details."""
    cfg = link.config
    K = len(link.users)
    n_frames = -(-n_blocks // cfg.blocks_per_frame)
    delays = _draw_delays(link, rng, K)
    users = [u.with_delay(int(d)) for u, d in zip(link.users, delays)]
    symbols = _qpsk(rng, (n_frames, K, cfg.U))
    tx = mcdscdma_frames(symbols, users, cfg, link.W)[:, :n_blocks]
    fidx = np.arange(n_blocks) // cfg.Q
    n_fading = int(fidx[-1]) + 1
    taps = _draw_taps(rng, (K, n_fading), link.pdp)
    rx = np.zeros((n_blocks, cfg.N_f), dtype=np.complex128)
    for k in range(K):
        rx += apply_multipath(tx[k], fidx, taps[k])
    return rx, users, symbols, taps


def _transmit_ofdm(link, n_blocks, rng):
    cfg = link.config
    tx = ofdm_modulate(_qpsk(rng, (n_blocks, cfg.N_c)), cfg.N_CP)
    fidx = np.arange(n_blocks) // cfg.Q
    taps = _draw_taps(rng, (int(fidx[-1]) + 1,), link.pdp)
    return apply_multipath(tx, fidx, taps)


@lru_cache(maxsize=16)
def _ramp(n_blocks, N_f, epsilon, N_c):
    n = np.arange(n_blocks * N_f, dtype=np.float64).reshape(n_blocks, N_f)
    ramp = np.exp(2j * np.pi * epsilon * n / N_c)
    ramp.setflags(write=False)
    return ramp


def _rotate(blocks, epsilon, N_c):
    return blocks * _ramp(blocks.shape[0], blocks.shape[1], float(epsilon), N_c)


def _cfo_trial(link, n_blocks, snr_db, epsilon, rng):
    if link.series == "ofdm":
        rx = _transmit_ofdm(link, n_blocks, rng)
    else:
        rx = _transmit_mcdscdma(link, n_blocks, rng)[0]
    rx = _rotate(rx, epsilon, link.config.N_c)
    nv = _noise_var(link, snr_db)
    if nv > 0:
        rx += awgn(rx.shape, nv, rng)
    spectrum = power_spectrum(rx, link.n_fft)
    return estimate_cfo(spectrum, link.template, link.config.N_c, link.window, link.grid_step).epsilon_hat


# chunked execution ----------------------------------------------------------


def _chunks(n, size):
    return [(start, min(start + size, n)) for start in range(0, n, size)]


def _cfo_chunk(job):
    settings, series, config, snr_db, epsilon, n_sym, seed, exp_id, sweep_index, start, stop = job
    link = _link_for(settings, series, config)
    n_blocks = observation_blocks(series, config, n_sym)
    out = np.empty(stop - start)
    for i, t in enumerate(range(start, stop)):
        rng = trial_rng(seed, exp_id, sweep_index, t)
        out[i] = _cfo_trial(link, n_blocks, snr_db, epsilon, rng)
    return out


def _map(fn, jobs, workers):
    if workers <= 1 or len(jobs) <= 1:
        return [fn(job) for job in jobs]
    with ProcessPoolExecutor(max_workers=workers) as pool:
        return list(pool.map(fn, jobs))


def _point(settings, sweep, value):
    """System config, SNR and N_sym at one sweep point."""
    config = settings.system
    snr_db = settings["channel.snr_db"]
    if sweep == "ncp":
        config = config.replace(N_CP=int(value))
    elif sweep == "nsym":
        config = config.replace(N_sym=int(value))
    else:
        snr_db = float(value)
    return config, snr_db, config.N_sym


def _digest(settings):
    text = repr(sorted((k, repr(v)) for k, v in settings.options.items()))
    return hashlib.sha256(text.encode()).hexdigest()[:16]


def _metadata(spec, **extra):
    meta = {
        "experiment": spec.experiment_id,
        "sweep": spec.sweep,
        "grid": list(spec.grid),
        "master_seed": spec.master_seed,
        "trials": spec.trials,
        "config_digest": _digest(spec.settings),
        "tool_version": __version__,
    }
    meta.update(extra)
    return meta


def _variance_point(spec, series, config, snr_db, n_sym, exp_id, sweep_index, trials):
    jobs = [
        (spec.settings, series, config, snr_db, spec.settings["channel.epsilon"], n_sym,
         spec.master_seed, exp_id, sweep_index, a, b)
        for a, b in _chunks(trials, spec.chunk_size)
    ]
    return np.concatenate(_map(_cfo_chunk, jobs, spec.workers))


def run_cfo_variance(spec):
    """
    Estimator variance per sweep point for each waveform series.

    With ``harness.reference`` on an SNR sweep, a ``<series>-reference``
    row per point gives ``c0 + c1 / snr`` fitted to high-trial runs at the
    ``harness.reference_snr`` points.
    """
    if spec.kind != "cfo-variance":
        raise ConfigurationError("not a CFO-variance spec")
    settings = spec.settings
    series_names = settings["harness.series"]
    points = [_point(settings, spec.sweep, v) for v in spec.grid]
    # validate every point before running anything
    for config, _, _ in points:
        for series in series_names:
            _link_for(settings, series, config)
    records, samples = [], {}
    for series in series_names:
        exp_id = f"{spec.experiment_id}/{series}"
        for i, (value, (config, snr_db, n_sym)) in enumerate(zip(spec.grid, points)):
            est = _variance_point(spec, series, config, snr_db, n_sym, exp_id, i, spec.trials)
            samples[(series, float(value))] = est
            var = float(np.var(est, ddof=1)) if est.size > 1 else math.nan
            records.append(Record(float(value), series, var, variance_ci95(est), spec.trials, spec.master_seed))
    extra = {"epsilon": settings["channel.epsilon"]}
    if settings["harness.reference"] and spec.sweep == "snr":
        ref_records, fits = _reference(spec, series_names, samples)
        records.extend(ref_records)
        extra["reference_fit"] = fits
    return ExperimentReport(tuple(records), _metadata(spec, **extra), samples)


def _reference(spec, series_names, samples):
    settings = spec.settings
    ref_snr = settings["harness.reference_snr"]
    n_ref = settings["harness.reference_trials"]
    config = settings.system
    records, fits = [], {}
    for series in series_names:
        exp_id = f"{spec.experiment_id}/{series}/reference"
        v, se = [], []
        for i, snr_db in enumerate(ref_snr):
            est = _variance_point(spec, series, config, snr_db, config.N_sym, exp_id, i, n_ref)
            samples[(f"{series}-reference", float(snr_db))] = est
            v.append(np.var(est, ddof=1))
            se.append(variance_ci95(est) / 1.959963984540054)
        X = np.column_stack([np.ones(len(ref_snr)), 10 ** (-np.asarray(ref_snr) / 10)])
        pinv = np.linalg.pinv(X)
        coef = pinv @ np.asarray(v)
        cov = pinv @ np.diag(np.square(se)) @ pinv.T
        fits[series] = {"c0": float(coef[0]), "c1": float(coef[1]), "snr_db": list(ref_snr), "trials": n_ref}
        for value in spec.grid:
            x = np.array([1.0, 10 ** (-float(value) / 10)])
            ref = float(x @ coef)
            ci = 1.959963984540054 * math.sqrt(max(float(x @ cov @ x), 0.0))
            records.append(Record(float(value), f"{series}-reference", ref, ci, n_ref, spec.master_seed))
    return records, fits


# BER -----------------------------------------------------------------------


def _frame_matrices(link, chips, taps):
    """
    Effective matrices for every frame of a batch of windows.

    ``chips`` is ``(T, K, Q)``; ``taps`` is ``(T, K, n_frames * M_B, L)``.
    Returns ``(T, n_frames, M_B*Q*N_c, K*U)``.
    """
    cfg = link.config
    T, K = chips.shape[:2]
    M_B, Q, U, S = cfg.M_B, cfg.Q, cfg.U, cfg.S
    F = taps.shape[2] // M_B
    H = np.fft.fft(taps[:, :, : F * M_B], n=cfg.N_c, axis=-1)[..., permutation(U, S)]
    H = H.reshape(T, K, F, M_B, U, S)
    c = np.stack([user.c.reshape(M_B, S) for user in link.users])  # (K, M_B, S)
    A = np.zeros((T, F, M_B, Q, U, S, K, U), dtype=np.complex128)
    for u in range(U):
        A[..., u, :, :, u] = np.einsum("tkq,tkfms,kms->tfmqsk", chips, H[..., u, :], c)
    return A.reshape(T, F, M_B * Q * cfg.N_c, K * U)


def ber_window_frames(config, compensation):
    """Frames per trial: one acquisition window of ``N_sym`` symbol periods."""
    if compensation != "estimated":
        return 1
    return -(-observation_blocks("mcdscdma", config, config.N_sym) // config.blocks_per_frame)


_DETECT_BATCH = 2048


def _ber_batch(link, snr_db, epsilon, compensation, rngs):
    """
    Bit errors of (ML, MMSE) summed over one acquisition window per generator.

    The CFO estimate of a window is applied to all of its frames.  The genie
    channel of each frame is taken at the frame start after compensation, so
    it includes the phase the residual offset has accumulated by then; the
    drift inside the frame is not corrected.
    """
    cfg = link.config
    T, K, U, Q = len(rngs), len(link.users), cfg.U, cfg.Q
    bpf = cfg.blocks_per_frame
    F = ber_window_frames(cfg, compensation)
    n_blocks = F * bpf
    fidx = np.arange(n_blocks) // Q
    n_fading = F * cfg.M_B
    nv = _noise_var(link, snr_db)
    delays = np.empty((T, K), dtype=np.int64)
    symbols = np.empty((T, F, K, U), dtype=np.complex128)
    taps = np.empty((T, K, n_fading, link.pdp.size), dtype=np.complex128)
    noise = np.zeros((T, n_blocks, cfg.N_f), dtype=np.complex128)
    for i, rng in enumerate(rngs):
        delays[i] = _draw_delays(link, rng, K)
        symbols[i] = _qpsk(rng, (F, K, U))
        taps[i] = _draw_taps(rng, (K, n_fading), link.pdp)
        if nv > 0:
            noise[i] = awgn((n_blocks, cfg.N_f), nv, rng)
    a = np.stack([user.a for user in link.users])  # (K, Q)
    chips = a[np.arange(K)[None, :, None], (np.arange(Q)[None, None, :] - delays[:, :, None]) % Q]
    base = np.einsum("tfku,kmun->tkfmn", symbols, link.W)
    tx = (base[:, :, :, :, None, :] * chips[:, :, None, None, :, None]).reshape(T, K, n_blocks, cfg.N_f)
    rx = apply_multipath(tx, fidx, taps).sum(axis=1)
    n = np.arange(n_blocks * cfg.N_f, dtype=np.float64).reshape(n_blocks, cfg.N_f)
    rx = rx * np.exp(2j * np.pi * epsilon * n / cfg.N_c) + noise
    if compensation == "estimated":
        X = np.fft.fft(rx, n=link.n_fft, axis=-1)
        rho = np.mean(X.real**2 + X.imag**2, axis=1)
        eps_hat = np.array(
            [estimate_cfo(r, link.template, cfg.N_c, link.window, link.grid_step).epsilon_hat for r in rho]
        )
    elif compensation == "genie":
        eps_hat = np.full(T, float(epsilon))
    else:
        eps_hat = np.zeros(T)
    rx = rx * np.exp(-2j * np.pi * eps_hat[:, None, None] * n[None] / cfg.N_c)
    y = demodulate_block(rx, cfg).reshape(T * F, -1)
    # common phase accumulated by the residual offset at each frame start
    start = np.arange(F) * bpf * cfg.N_f
    phase = np.exp(2j * np.pi * (epsilon - eps_hat)[:, None] * start[None, :] / cfg.N_c)
    A = (_frame_matrices(link, chips, taps) * phase[:, :, None, None]).reshape(T * F, y.shape[1], K * U)
    truth = qpsk_indices(symbols.reshape(T * F, -1))
    errors = np.zeros(2, dtype=np.int64)
    for lo in range(0, T * F, _DETECT_BATCH):
        sl = slice(lo, lo + _DETECT_BATCH)
        for i, detected in enumerate((ml_detect(y[sl], A[sl]), mmse_detect(y[sl], A[sl], nv))):
            diff = qpsk_indices(detected) ^ truth[sl]
            errors[i] += int(np.sum((diff >> 1) + (diff & 1)))
    return errors


def _ber_chunk(job):
    settings, config, snr_db, seed, exp_id, sweep_index, start, stop = job
    link = _link_for(settings, "mcdscdma", config, n_users=config.K)
    rngs = [trial_rng(seed, exp_id, sweep_index, t) for t in range(start, stop)]
    comp = settings["estimator.compensation"]
    totals = _ber_batch(link, snr_db, settings["channel.epsilon"], comp, rngs)
    return totals, (stop - start) * ber_window_frames(config, comp)


def run_ber(spec):
    """
    ML and MMSE bit error rates over the SNR grid for all ``K`` users.

    Each trial is one CFO acquisition window (a single frame under genie or
    no compensation).  A point stops early, at a chunk boundary, once both
    detectors have ``harness.target_errors`` bit errors; ``spec.trials``
    caps the frame count (rounded up to whole windows).
    """
    if spec.kind != "ber":
        raise ConfigurationError("not a BER spec")
    settings = spec.settings
    config = settings.system
    n_sym = config.K * config.U
    if 4**n_sym > MAX_HYPOTHESES:
        raise BudgetError(f"ML search needs 4**{n_sym} hypotheses per frame, budget is {MAX_HYPOTHESES}")
    _link_for(settings, "mcdscdma", config, n_users=config.K)
    target = settings["harness.target_errors"]
    bits_per_frame = 2 * n_sym
    exp_id = spec.experiment_id
    records, points = [], []
    per_window = ber_window_frames(config, settings["estimator.compensation"])
    n_windows = -(-spec.trials // per_window)
    windows_per_chunk = max(1, spec.chunk_size // per_window)
    for i, snr_db in enumerate(spec.grid):
        chunks = _chunks(n_windows, windows_per_chunk)
        totals = np.zeros(2, dtype=np.int64)
        frames = 0
        pos = 0
        done = False
        while pos < len(chunks) and not done:
            batch = chunks[pos : pos + spec.workers]
            pos += len(batch)
            jobs = [(settings, config, float(snr_db), spec.master_seed, exp_id, i, a, b) for a, b in batch]
            for counts, n in _map(_ber_chunk, jobs, spec.workers):
                totals += counts
                frames += n
                if target and np.all(totals >= target):
                    done = True
                    break
        bits = frames * bits_per_frame
        point = {"snr_db": float(snr_db), "frames": frames, "bits": bits}
        for name, errs in zip(("ml", "mmse"), totals):
            lo, hi = wilson_interval(int(errs), bits)
            records.append(Record(float(snr_db), name, errs / bits, (hi - lo) / 2, frames, spec.master_seed))
            point[name] = {"errors": int(errs), "wilson_low": lo, "wilson_high": hi}
        points.append(point)
    meta = _metadata(
        spec,
        epsilon=settings["channel.epsilon"],
        compensation=settings["estimator.compensation"],
        target_errors=target,
        points=points,
    )
    partial = ExperimentReport(tuple(records))
    crossing = {name: snr_at_ber(partial, name, 1e-4) for name in ("ml", "mmse")}
    meta["snr_db_at_ber_1e-4"] = crossing
    meta["gap_db_at_ber_1e-4"] = crossing["mmse"] - crossing["ml"]
    return ExperimentReport(tuple(records), meta)


def snr_at_ber(report, series, target):
    """
    SNR (dB) where a BER curve crosses ``target``.

    Interpolates ``log10(BER)`` linearly in dB between the first adjacent pair
    of finite grid points that brackets the target.  NaN when none does.
    """
    rows = sorted((r.sweep, r.value) for r in report.series(series) if math.isfinite(r.sweep))
    logt = math.log10(target)
    for (x0, b0), (x1, b1) in zip(rows, rows[1:]):
        if b0 >= target > b1:
            if b1 <= 0:
                return x0 if b0 == target else math.nan
            l0, l1 = math.log10(b0), math.log10(b1)
            return x0 + (l0 - logt) / (l0 - l1) * (x1 - x0)
    return math.nan


def run_experiment(spec):
    return run_ber(spec) if spec.kind == "ber" else run_cfo_variance(spec)
