"""Property-based checks of the invariants each module promises."""

import numpy as np
from hypothesis import assume, given
from hypothesis import strategies as st
from hypothesis.extra.numpy import arrays

from mcdscfo.channel import apply_cfo, apply_multipath
from mcdscfo.config import QPSK_POINTS, SystemConfig, make_assignments
from mcdscfo.detector import ml_detect, mmse_detect
from mcdscfo.estimator import estimate_cfo, modulation_autocorrelation, power_spectrum, spectral_template
from mcdscfo.harness.configfile import parse_config
from mcdscfo.harness.experiments import ExperimentReport, Record
from mcdscfo.harness.report import read_report, render
from mcdscfo.harness.seeding import derive_trial_seed
from mcdscfo.waveform import (
    BasebandFrame,
    demodulate_block,
    despread_tf,
    mcdscdma_frames,
    modulate_block,
    ofdm_modulate,
    permutation_index,
)
from mcdscfo.zcz import ZczFamily, compute_eta, generate_zcz, periodic_correlation, verify_zcz, zcz_bound

from . import oracles

finite = st.floats(-10, 10, allow_nan=False, allow_infinity=False)
powers = st.sampled_from([1, 2, 4, 8])


def complex_vectors(n):
    return st.lists(st.tuples(finite, finite), min_size=n, max_size=n).map(
        lambda xs: np.array([complex(a, b) for a, b in xs])
    )


# zcz ---------------------------------------------------------------------


@given(st.integers(2, 12).flatmap(lambda L: st.tuples(complex_vectors(L), complex_vectors(L), st.integers(0, L - 1))))
def test_correlation_shift_symmetry(args):
    s, r, tau = args
    L = s.size
    lhs = periodic_correlation(s, r, tau)
    rhs = np.conj(periodic_correlation(r, s, (L - tau) % L))
    assert abs(lhs - rhs) <= 1e-9 * (1 + abs(lhs))


@given(st.lists(st.floats(-1, 1, allow_nan=False), min_size=1, max_size=32))
def test_eta_at_most_one(seq):
    assume(any(seq))
    assert compute_eta(seq) <= 1


@given(st.lists(st.sampled_from([-1, 1]), min_size=1, max_size=32))
def test_eta_one_for_binary(seq):
    assert compute_eta(seq) == 1.0


@given(st.sampled_from([(4, 2), (8, 2), (8, 4), (16, 4), (32, 2), (32, 8), (64, 4), (128, 16)]))
def test_generated_families_certified_and_bounded(shape):
    fam = generate_zcz(*shape)
    assert verify_zcz(fam).passed
    assert 1 <= fam.Z0 <= zcz_bound(*shape)
    assert fam.is_binary and fam.eta == 1.0


@given(st.integers(0, 2**32 - 1))
def test_random_binary_pairs_agree_with_oracle(bits):
    rows = [tuple(1 - 2 * ((bits >> (i + 8 * r)) & 1) for i in range(8)) for r in range(2)]
    zone = oracles.family_zone(rows)
    if zone >= 0:
        assert verify_zcz(ZczFamily(np.array(rows), Z0=zone)).passed
        if zone < 3:
            assert not verify_zcz(ZczFamily(np.array(rows), Z0=zone + 1)).passed


# waveform ----------------------------------------------------------------


@given(powers, powers, st.integers(0, 3), st.integers(0, 2**32 - 1))
def test_modulation_round_trip(U, S, cp, seed):
    N = U * S
    cfg = SystemConfig(U=U, S=S, N_CP=min(cp, N - 1))
    rng = np.random.default_rng(seed)
    Z = rng.standard_normal((3, N)) + 1j * rng.standard_normal((3, N))
    block = modulate_block(Z, cfg)
    assert np.max(np.abs(demodulate_block(block, cfg) - Z)) < 1e-10
    assert np.allclose(np.sum(np.abs(block[:, cfg.N_CP:]) ** 2, 1), np.sum(np.abs(Z) ** 2, 1))
    assert np.allclose(block[:, : cfg.N_CP], block[:, N:])


@given(st.sampled_from([1, 2, 4]), st.sampled_from([1, 2, 4, 8]), st.integers(0, 2), st.integers(0, 2**32 - 1))
def test_fast_path_matches_matrix_oracle(U, S, cp, seed):
    N = U * S
    cp = min(cp, N - 1)
    cfg = SystemConfig(U=U, S=S, N_CP=cp)
    rng = np.random.default_rng(seed)
    Z = rng.standard_normal(N) + 1j * rng.standard_normal(N)
    assert np.max(np.abs(modulate_block(Z, cfg) - oracles.explicit_modulator(U, S, cp) @ Z)) < 1e-10


@given(st.integers(1, 8), st.integers(1, 8))
def test_permutation_is_bijection(U, S):
    image = {permutation_index(y, U, S) for y in range(1, U * S + 1)}
    assert image == set(range(1, U * S + 1))


@given(st.integers(0, 3), st.integers(0, 3), st.integers(0, 2**32 - 1))
def test_no_leakage_inside_zone(d0, d1, seed):
    cfg = SystemConfig(U=2, S=4, M_B=2, Q=16, J=2, P=2, N_CP=2)
    users = make_assignments(cfg)
    zone = users[0].zone
    assume(max(d0, d1) <= zone)
    delays = [d0, d0, d1, d1]
    users = [u.with_delay(d) for u, d in zip(users, delays)]
    rng = np.random.default_rng(seed)
    b = QPSK_POINTS[rng.integers(0, 4, (cfg.K, cfg.U))]
    for victim in range(cfg.K):
        others = b.copy()
        others[victim] = 0
        rx = mcdscdma_frames(others[None], users, cfg).sum(axis=0)
        Y = demodulate_block(rx, cfg).reshape(cfg.M_B, cfg.Q, cfg.N_c)
        leak = despread_tf(Y, users[victim], cfg)
        assert np.max(np.abs(leak)) < 1e-10


@given(st.integers(0, 2**32 - 1))
def test_ofdm_is_degenerate_mcdscdma(seed):
    cfg = SystemConfig(U=1, S=8, M_B=1, Q=1, J=1, P=1, N_CP=2)
    Z = np.random.default_rng(seed).standard_normal(8) + 0j
    assert np.allclose(modulate_block(Z, cfg), ofdm_modulate(Z, 2))


# channel -----------------------------------------------------------------


@given(st.floats(-3, 3, allow_nan=False), st.integers(0, 2**32 - 1))
def test_cfo_preserves_energy(eps, seed):
    rng = np.random.default_rng(seed)
    fr = BasebandFrame(rng.standard_normal((4, 10)) + 1j * rng.standard_normal((4, 10)), [0, 0, 1, 1], 8, 2)
    out = apply_cfo(fr, eps)
    assert np.allclose(np.abs(out.blocks), np.abs(fr.blocks))


@given(st.integers(1, 3), st.integers(1, 4), st.integers(0, 2**32 - 1))
def test_multipath_is_blockwise_convolution(L, per_fading, seed):
    rng = np.random.default_rng(seed)
    n_blocks = 2 * per_fading + 1
    blocks = rng.standard_normal((n_blocks, 6)) + 0j
    fidx = np.arange(n_blocks) // per_fading
    taps = rng.standard_normal((fidx[-1] + 1, L)) + 0j
    out = apply_multipath(blocks, fidx, taps)
    for f in range(fidx[-1] + 1):
        seg = blocks[fidx == f].reshape(-1)
        assert np.allclose(out[fidx == f].reshape(-1), np.convolve(seg, taps[f])[: seg.size])


# estimator ---------------------------------------------------------------


@given(st.integers(-400, 400), st.sampled_from([(64, 8), (256, 16), (32, 0)]))
def test_modulation_autocorrelation_shape(delta, dims):
    N_c, N_CP = dims
    r = modulation_autocorrelation(delta, N_c, N_CP)
    assert r == modulation_autocorrelation(-delta, N_c, N_CP)
    assert 0 <= r <= 1
    assert r >= modulation_autocorrelation(abs(delta) + 1, N_c, N_CP)
    if abs(delta) >= N_c + N_CP:
        assert r == 0


@given(st.integers(1, 20), st.integers(2, 40), st.integers(0, 30), st.integers(0, 2**32 - 1))
def test_power_spectrum_matches_direct(n_blocks, L, extra, seed):
    rng = np.random.default_rng(seed)
    x = rng.standard_normal((n_blocks, L)) + 1j * rng.standard_normal((n_blocks, L))
    n_fft = L + extra
    ref = oracles.direct_periodogram(x, n_fft)
    assert np.max(np.abs(power_spectrum(x, n_fft).rho - ref)) <= 1e-9 * ref.max()


@given(st.integers(0, 2**32 - 1))
def test_spectrum_invariant_to_block_phases(seed):
    rng = np.random.default_rng(seed)
    x = rng.standard_normal((5, 12)) + 1j * rng.standard_normal((5, 12))
    ph = np.exp(2j * np.pi * rng.random((5, 1)))
    assert np.allclose(power_spectrum(x, 30).rho, power_spectrum(x * ph, 30).rho)


@given(st.floats(-0.35, 0.35), st.floats(-0.1, 0.1), st.integers(0, 2**16))
def test_estimate_shift_covariance(eps0, delta, seed):
    rng = np.random.default_rng(seed)
    N_c, N_CP = 64, 8
    cfg = SystemConfig(U=1, S=64, M_B=1, Q=1, J=1, P=1, N_CP=N_CP)
    t = spectral_template(cfg)
    x = ofdm_modulate(QPSK_POINTS[rng.integers(0, 4, (60, N_c))], N_CP)
    n = np.arange(x.size).reshape(x.shape)

    def est(e):
        rho = power_spectrum(x * np.exp(2j * np.pi * e * n / N_c), t.size)
        return estimate_cfo(rho, t, N_c).epsilon_hat

    assert abs(est(eps0 + delta) - est(eps0) - delta) <= 0.01


# detector ----------------------------------------------------------------


@given(st.integers(1, 4), st.integers(0, 2**32 - 1), st.floats(0.01, 3))
def test_ml_residual_never_exceeds_mmse(n, seed, nv):
    rng = np.random.default_rng(seed)
    A = rng.standard_normal((n + 2, n)) + 1j * rng.standard_normal((n + 2, n))
    y = A @ QPSK_POINTS[rng.integers(0, 4, n)] + np.sqrt(nv) * rng.standard_normal(n + 2)
    r_ml = np.linalg.norm(y - A @ ml_detect(y, A))
    r_mmse = np.linalg.norm(y - A @ mmse_detect(y, A, nv))
    assert r_ml <= r_mmse + 1e-12


@given(st.permutations(range(4)), st.integers(0, 2**32 - 1))
def test_detectors_permutation_equivariant(perm, seed):
    rng = np.random.default_rng(seed)
    perm = np.array(perm)
    A = rng.standard_normal((7, 4)) + 1j * rng.standard_normal((7, 4))
    y = rng.standard_normal(7) + 1j * rng.standard_normal(7)
    assert np.array_equal(ml_detect(y, A[:, perm]), ml_detect(y, A)[perm])
    assert np.array_equal(mmse_detect(y, A[:, perm], 0.7), mmse_detect(y, A, 0.7)[perm])


@given(st.integers(1, 3), st.integers(0, 2**32 - 1))
def test_ml_matches_brute_force(n, seed):
    rng = np.random.default_rng(seed)
    A = rng.standard_normal((n + 1, n)) + 1j * rng.standard_normal((n + 1, n))
    y = rng.standard_normal(n + 1) + 1j * rng.standard_normal(n + 1)
    assert np.allclose(ml_detect(y, A), oracles.brute_ml(y, A))


# harness -----------------------------------------------------------------


@given(st.integers(0, 2**64 - 1), st.text(max_size=12), st.integers(0, 10**6), st.integers(0, 10**9))
def test_seed_is_64_bit_and_stable(master, exp, sweep, trial):
    s = derive_trial_seed(master, exp, sweep, trial)
    assert 0 <= s < 2**64
    assert s == derive_trial_seed(master, exp, sweep, trial)


record = st.builds(
    Record,
    sweep=st.floats(-100, 1e4, allow_nan=False),
    series=st.sampled_from(["mcdscdma", "ofdm", "ml", "mmse"]),
    value=st.floats(0, 1, allow_nan=False),
    ci95=st.floats(0, 1, allow_nan=False),
    trials=st.integers(1, 10**6),
    seed=st.integers(0, 2**63),
)


@given(st.lists(record, max_size=6), st.sampled_from(["csv", "json"]))
def test_report_round_trip(records, fmt):
    import tempfile
    from pathlib import Path

    report = ExperimentReport(tuple(records))
    with tempfile.TemporaryDirectory() as tmp:
        path = Path(tmp) / f"r.{fmt}"
        path.write_text(render(report, fmt))
        back = read_report(path, fmt)
    assert render(back) == render(report)


@given(st.integers(1, 8), st.integers(0, 7), st.floats(-0.49, 0.49), st.lists(st.integers(1, 500), min_size=1, max_size=5, unique=True))
def test_config_text_round_trip(U, ncp, eps, grid):
    grid = sorted(grid)
    text = (
        f"system.U = {U}\nsystem.S = 8\nsystem.N_CP = {ncp}\nchannel.epsilon = {eps!r}\n"
        f"harness.nsym_grid = {', '.join(map(str, grid))}\n"
    )
    s = parse_config(text)
    assert (s.system.U, s.system.N_CP, s["channel.epsilon"], s["harness.nsym_grid"]) == (U, ncp, eps, tuple(grid))
