import json
import math

import numpy as np
import pytest

from mcdscfo.channel import ChannelRealization
from mcdscfo.config import SystemConfig
from mcdscfo.detector import build_frame_matrix
from mcdscfo.exceptions import BudgetError, ConfigurationError
from mcdscfo.harness.configfile import SCHEMA, load_config, parse_config, settings_from_mapping
from mcdscfo.harness.experiments import (
    ExperimentReport,
    ExperimentSpec,
    Record,
    _frame_matrices,
    _link_for,
    ber_window_frames,
    make_spec,
    observation_blocks,
    run_ber,
    run_cfo_variance,
    run_experiment,
    snr_at_ber,
    variance_ci95,
    wilson_interval,
)
from mcdscfo.harness.report import emit_report, format_number, read_report, render
from mcdscfo.harness.seeding import derive_trial_seed, trial_rng

from . import oracles

SMALL_CFO = {
    "system.N_sym": "25",
    "harness.trials": "40",
    "harness.chunk_size": "16",
    "harness.nsym_grid": "25, 50",
    "harness.snr_grid": "5, 15",
    "harness.ncp_grid": "8, 16",
}
SMALL_BER = {
    "system.S": "2",
    "system.Q": "4",
    "system.N_CP": "3",
    "system.N_sym": "64",
    "channel.taps": "2",
    "harness.max_frames": "600",
    "harness.chunk_size": "64",
    "harness.ber_snr_grid": "4, 10",
}


class TestSeeding:
    def test_pinned_values(self):
        assert derive_trial_seed(20240101, "cfo-variance-vs-nsym/mcdscdma", 2, 17) == 3069526323490629469
        assert derive_trial_seed(0, "", 0, 0) == 14756509255654731004

    def test_repeatable(self):
        assert derive_trial_seed(5, "exp", 1, 2) == derive_trial_seed(5, "exp", 1, 2)
        a = trial_rng(5, "exp", 1, 2).standard_normal(4)
        assert np.array_equal(a, trial_rng(5, "exp", 1, 2).standard_normal(4))

    def test_avalanche(self):
        flips = [
            bin(derive_trial_seed(7, "e", 0, t) ^ derive_trial_seed(7, "e", 0, t + 1)).count("1")
            for t in range(10_000)
        ]
        assert np.mean(flips) >= 20

    def test_domain_separation(self):
        assert derive_trial_seed(1, "a", 0, 0) != derive_trial_seed(1, "b", 0, 0)
        assert derive_trial_seed(1, "a", 0, 1) != derive_trial_seed(1, "a", 1, 0)
        assert derive_trial_seed(1, "ab", 0, 0) != derive_trial_seed(1, "a", 0, 0)

    def test_no_collisions(self):
        seeds = {derive_trial_seed(3, "x", s, t) for s in range(20) for t in range(1000)}
        assert len(seeds) == 20_000


class TestConfigFile:
    def test_defaults(self):
        s = parse_config("")
        assert s.system == SystemConfig()
        assert s["channel.epsilon"] == 0.2 and s["harness.trials"] == 2000
        assert set(s.options) == set(SCHEMA)

    def test_parse_values_and_comments(self):
        s = parse_config(
            "# comment\n\nsystem.N_CP = 8   # trailing\nharness.snr_grid = 0, 10 20\n"
            "channel.snr_db = inf\nharness.reference = yes\nchannel.taps = auto\n"
        )
        assert s.system.N_CP == 8
        assert s["harness.snr_grid"] == (0.0, 10.0, 20.0)
        assert math.isinf(s["channel.snr_db"])
        assert s["harness.reference"] is True
        assert s["channel.taps"] is None

    @pytest.mark.parametrize(
        "text",
        [
            "system.bogus = 1",
            "cfo.epsilon = 0.1",
            "system.U = two",
            "system.U = 1\nsystem.U = 2",
            "no equals sign",
            "system.N_CP = 300",
            "harness.nsym_grid = 50, 25",
            "harness.trials = 0",
            "channel.profile = rician",
            "channel.snr_db = nan",
            "estimator.grid_step = -1",
            "system.U =",
        ],
    )
    def test_errors(self, text):
        with pytest.raises(ConfigurationError):
            parse_config(text)

    def test_line_number_in_message(self):
        with pytest.raises(ConfigurationError, match=":3:"):
            parse_config("system.U = 2\n\nwhat = 1\n")

    def test_missing_file(self, tmp_path):
        with pytest.raises(ConfigurationError):
            load_config(tmp_path / "absent.conf")

    def test_shipped_configs_parse(self):
        from pathlib import Path

        root = Path(__file__).resolve().parent.parent / "configs"
        for path in sorted(root.glob("*.conf")):
            load_config(path)

    def test_replace(self):
        s = settings_from_mapping({})
        t = s.replace(system__N_CP=8)
        assert t.system.N_CP == 8 and s.system.N_CP == 16


class TestSpec:
    def test_validation(self):
        s = settings_from_mapping({})
        with pytest.raises(ConfigurationError):
            ExperimentSpec("cfo-variance", "nsym", (), s, 10, 1)
        with pytest.raises(ConfigurationError):
            ExperimentSpec("cfo-variance", "nsym", (2, 1), s, 10, 1)
        with pytest.raises(ConfigurationError):
            ExperimentSpec("cfo-variance", "nsym", (1, 2), s, 0, 1)
        with pytest.raises(ConfigurationError):
            ExperimentSpec("ber", "nsym", (1, 2), s, 10, 1)
        with pytest.raises(ConfigurationError):
            ExperimentSpec("plot", "snr", (1,), s, 10, 1)

    def test_overrides(self):
        s = settings_from_mapping({})
        spec = make_spec(s, "cfo-variance", "ncp", trials=7, seed=9, workers=3)
        assert (spec.trials, spec.master_seed, spec.workers, spec.grid) == (7, 9, 3, (4, 8, 16, 32, 64))
        assert spec.experiment_id == "cfo-variance-vs-ncp"

    def test_observation_blocks(self):
        cfg = SystemConfig()
        assert observation_blocks("ofdm", cfg, 100) == 100
        assert observation_blocks("mcdscdma", cfg, 100) == 400
        assert observation_blocks("mcdscdma", cfg.replace(Q=3), 5) == 8


class TestStatistics:
    def test_ci_matches_bootstrap(self):
        rng = np.random.default_rng(0)
        for sample in (rng.standard_normal(2000) * 1e-3, rng.standard_t(8, 2000) * 1e-3):
            ours = variance_ci95(sample)
            boot = oracles.bootstrap_variance_halfwidth(sample, 4000, rng)
            assert abs(ours - boot) / boot < 0.10

    def test_ci_on_stored_trial_samples(self):
        settings = settings_from_mapping({**SMALL_CFO, "harness.trials": "600"})
        report = run_cfo_variance(make_spec(settings, "cfo-variance", "nsym"))
        rng = np.random.default_rng(1)
        for record in report.records:
            boot = oracles.bootstrap_variance_halfwidth(report.samples[(record.series, record.sweep)], 3000, rng)
            assert abs(record.ci95 - boot) / boot < 0.10

    def test_ci_small_sample(self):
        assert math.isnan(variance_ci95([1.0, 2.0, 3.0]))

    def test_wilson(self):
        lo, hi = wilson_interval(0, 1000)
        assert lo == 0 and 0 < hi < 0.004
        lo, hi = wilson_interval(50, 100)
        assert lo < 0.5 < hi and hi - 0.5 == pytest.approx(0.5 - lo)

    def test_snr_at_ber(self):
        rec = [Record(0, "a", 1e-2, 0, 1, 1), Record(10, "a", 1e-6, 0, 1, 1)]
        assert snr_at_ber(ExperimentReport(tuple(rec)), "a", 1e-4) == pytest.approx(5.0)
        assert math.isnan(snr_at_ber(ExperimentReport(tuple(rec)), "a", 1e-8))


class TestCfoVariance:
    def test_two_series_per_point(self):
        settings = settings_from_mapping(SMALL_CFO)
        report = run_cfo_variance(make_spec(settings, "cfo-variance", "nsym"))
        assert [(r.series, r.sweep) for r in report.records] == [
            ("mcdscdma", 25.0), ("mcdscdma", 50.0), ("ofdm", 25.0), ("ofdm", 50.0)
        ]
        for r in report.records:
            assert r.value > 0 and r.ci95 > 0 and r.trials == 40
            est = report.samples[(r.series, r.sweep)]
            assert np.var(est, ddof=1) == pytest.approx(r.value)
            assert abs(np.mean(est) - 0.2) < 0.02
        assert report.metadata["experiment"] == "cfo-variance-vs-nsym"
        assert report.metadata["tool_version"]

    def test_rerun_is_byte_identical(self):
        spec = make_spec(settings_from_mapping(SMALL_CFO), "cfo-variance", "ncp")
        assert render(run_experiment(spec)) == render(run_experiment(spec))
        assert render(run_experiment(spec), "json") == render(run_experiment(spec), "json")

    def test_worker_count_invariant(self):
        settings = settings_from_mapping(SMALL_CFO)
        one = run_cfo_variance(make_spec(settings, "cfo-variance", "snr", workers=1))
        two = run_cfo_variance(make_spec(settings, "cfo-variance", "snr", workers=2))
        assert render(one) == render(two)

    def test_seed_changes_output(self):
        settings = settings_from_mapping(SMALL_CFO)
        a = run_cfo_variance(make_spec(settings, "cfo-variance", "snr", seed=1))
        b = run_cfo_variance(make_spec(settings, "cfo-variance", "snr", seed=2))
        assert render(a) != render(b)

    def test_infeasible_config_fails_before_trials(self):
        settings = settings_from_mapping({**SMALL_CFO, "channel.taps": "12"})
        with pytest.raises(ConfigurationError):
            run_cfo_variance(make_spec(settings, "cfo-variance", "ncp"))

    def test_variance_nonincreasing_in_snr(self):
        settings = settings_from_mapping(
            {**SMALL_CFO, "harness.trials": "300", "harness.snr_grid": "0, 10, 20, 30"}
        )
        report = run_cfo_variance(make_spec(settings, "cfo-variance", "snr"))
        for series in ("mcdscdma", "ofdm"):
            rows = report.series(series)
            for a, b in zip(rows, rows[1:]):
                assert b.value <= a.value + a.ci95 + b.ci95

    def test_reference_rows(self):
        settings = settings_from_mapping(
            {**SMALL_CFO, "harness.reference": "true", "harness.reference_trials": "50",
             "harness.series": "mcdscdma"}
        )
        report = run_cfo_variance(make_spec(settings, "cfo-variance", "snr"))
        assert [r.series for r in report.records] == ["mcdscdma"] * 2 + ["mcdscdma-reference"] * 2
        fit = report.metadata["reference_fit"]["mcdscdma"]
        for r in report.series("mcdscdma-reference"):
            assert r.value == pytest.approx(fit["c0"] + fit["c1"] * 10 ** (-r.sweep / 10))

    def test_multiuser_loading(self):
        settings = settings_from_mapping({**SMALL_CFO, "harness.users": "4", "harness.series": "mcdscdma"})
        report = run_cfo_variance(make_spec(settings, "cfo-variance", "snr"))
        assert all(r.value > 0 for r in report.records)
        with pytest.raises(ConfigurationError):
            run_cfo_variance(make_spec(settings.replace(harness__users=5), "cfo-variance", "snr"))


class TestBer:
    def test_frame_matrices_match_detector(self):
        settings = settings_from_mapping(SMALL_BER)
        cfg = settings.system
        link = _link_for(settings, "mcdscdma", cfg, n_users=cfg.K)
        rng = np.random.default_rng(2)
        delays = rng.integers(0, link.zone + 1, (3, cfg.K))
        a = np.stack([u.a for u in link.users])
        chips = np.stack([[np.roll(a[k], d[k]) for k in range(cfg.K)] for d in delays])
        taps = rng.standard_normal((3, cfg.K, 2 * cfg.M_B, 2)) + 1j * rng.standard_normal((3, cfg.K, 2 * cfg.M_B, 2))
        A = _frame_matrices(link, chips, taps)
        for t in range(3):
            users = [u.with_delay(int(d)) for u, d in zip(link.users, delays[t])]
            for f in range(2):
                real = ChannelRealization(taps[t, :, f * cfg.M_B : (f + 1) * cfg.M_B])
                assert np.allclose(A[t, f], build_frame_matrix(users, real, cfg))

    def test_noise_free_point_is_error_free(self):
        settings = settings_from_mapping({**SMALL_BER, "harness.ber_snr_grid": "inf"})
        report = run_ber(make_spec(settings, "ber"))
        assert [r.value for r in report.records] == [0.0, 0.0]

    def test_ml_not_worse_than_mmse(self):
        report = run_ber(make_spec(settings_from_mapping(SMALL_BER), "ber"))
        for snr in (4.0, 10.0):
            assert report.value("ml", snr) <= report.value("mmse", snr)
        point = report.metadata["points"][0]
        assert point["bits"] == point["frames"] * 16
        assert point["ml"]["wilson_low"] <= report.value("ml", 4.0) <= point["ml"]["wilson_high"]

    def test_window_frames(self):
        cfg = SystemConfig(U=2, S=2, Q=4, N_CP=3, N_sym=64)
        assert ber_window_frames(cfg, "estimated") == 16
        assert ber_window_frames(cfg, "genie") == 1

    @pytest.mark.parametrize("comp", ["genie", "none"])
    def test_compensation_modes(self, comp):
        settings = settings_from_mapping({**SMALL_BER, "estimator.compensation": comp, "harness.max_frames": "200",
                                       "harness.target_errors": "0"})
        report = run_ber(make_spec(settings, "ber"))
        assert report.metadata["compensation"] == comp
        assert all(r.trials == 200 for r in report.records)

    def test_early_stop(self):
        settings = settings_from_mapping({**SMALL_BER, "harness.target_errors": "5", "harness.max_frames": "5000"})
        report = run_ber(make_spec(settings, "ber"))
        assert report.metadata["points"][0]["frames"] < 5000

    def test_worker_count_invariant(self):
        settings = settings_from_mapping({**SMALL_BER, "harness.target_errors": "20"})
        one = run_ber(make_spec(settings, "ber", workers=1))
        two = run_ber(make_spec(settings, "ber", workers=2))
        assert render(one) == render(two)

    def test_budget(self):
        settings = settings_from_mapping({**SMALL_BER, "system.J": "4", "system.P": "2", "system.Q": "8"})
        with pytest.raises(BudgetError):
            run_ber(make_spec(settings, "ber"))


class TestReport:
    def _report(self):
        return ExperimentReport(
            (Record(25.0, "ofdm", 1.23456789012e-6, 3.3e-7, 2000, 7), Record(50.0, "ofdm", 0.5, math.nan, 2000, 7)),
            {"note": "x", "values": [np.float64(1.0) / 3, np.int64(4)]},
        )

    def test_header_only(self):
        assert render(ExperimentReport()) == "sweep,series,value,ci95,trials,seed\n"

    def test_nine_significant_digits(self):
        assert format_number(1.23456789012e-6) == "1.23456789e-06"
        assert format_number(25.0) == "25"
        assert format_number(3) == "3"
        assert format_number(float("inf")) == "inf"
        assert render(self._report()).splitlines()[1] == "25,ofdm,1.23456789e-06,3.3e-07,2000,7"

    @pytest.mark.parametrize("fmt", ["csv", "json"])
    def test_round_trip(self, tmp_path, fmt):
        path = tmp_path / f"r.{fmt}"
        emit_report(self._report(), fmt, path)
        back = read_report(path)
        assert render(back) == render(self._report())

    def test_json_and_csv_agree(self, tmp_path):
        report = self._report()
        emit_report(report, "csv", tmp_path / "a.csv")
        emit_report(report, "json", tmp_path / "a.json")
        a, b = read_report(tmp_path / "a.csv"), read_report(tmp_path / "a.json")
        for x, y in zip(a.records, b.records):
            assert x.sweep == y.sweep and x.series == y.series and x.trials == y.trials
            assert x.value == y.value and (x.ci95 == y.ci95 or (math.isnan(x.ci95) and math.isnan(y.ci95)))
        payload = json.loads((tmp_path / "a.json").read_text())
        assert payload["metadata"]["values"] == [0.333333333, 4]

    def test_unwritable_path(self, tmp_path):
        bad = tmp_path / "missing" / "out.csv"
        with pytest.raises(OSError, match="missing"):
            emit_report(self._report(), "csv", bad)
