"""Batch pipeline over the forward-generated synthetic campaign."""

import csv

import pytest

from lbandsm import pipeline, synth
from lbandsm.config import load_campaign


@pytest.fixture(scope="module")
def report(campaign_config, tmp_path_factory):
    out = tmp_path_factory.mktemp("run")
    return pipeline.run_pipeline(campaign_config, output_dir=out)


def truth_map(synthetic_campaign):
    _, truth = synthetic_campaign
    return {(t.site, t.session_id): t for t in truth}


def test_every_session_processed(report, campaign_config):
    n_sessions = sum(len(s.session_paths) for s in campaign_config.sites)
    assert len(report.sessions) == n_sessions
    assert report.ok
    assert not any(r.error for r in report.sessions)


def test_injected_outliers_counted(report):
    from lbandsm.preprocess import QualityFlag
    for row in report.sessions:
        assert row.n_total == 60
        assert row.n_accepted == 57
        assert row.flag_counts[QualityFlag.MAX_EXCEEDED] == 1
        assert row.flag_counts[QualityFlag.MIN_VIOLATED] == 1
        assert row.flag_counts[QualityFlag.POL_ORDER_VIOLATED] == 1


def test_retrievals_cover_all_presets(report, campaign_config):
    presets = {p.name for p in campaign_config.presets}
    for row in report.sessions:
        rows = [r for r in report.retrievals
                if r.site == row.site and r.session_id == row.session_id]
        assert {r.preset for r in rows} == presets
        assert all(r.result is not None for r in rows)


def test_matching_presets_recover_truth(report, synthetic_campaign):
    tm = truth_map(synthetic_campaign)
    for r in report.retrievals:
        if r.preset in ("SCAV", "SCAH"):
            truth = tm[(r.site, r.session_id)]
            assert abs(r.result.sm - truth.sm_true) < 1e-3, (r.site, r.session_id)


def test_session_reference_matching(report, synthetic_campaign):
    tm = truth_map(synthetic_campaign)
    for row in report.sessions:
        truth = tm[(row.site, row.session_id)]
        assert row.t_e_measured == pytest.approx(truth.t_e, abs=1e-5)
        assert row.sm_ref == pytest.approx(truth.sm_true, abs=0.05)


def test_metrics_rows_per_site_and_preset(report, campaign_config):
    assert len(report.metrics_rows) == 2 * len(campaign_config.presets)
    for m in report.metrics_rows:
        assert m.n == 5
        assert m.report is not None
        # presets whose parameters mismatch generation carry a systematic
        # bias, but the bias-removed error stays small and the series
        # track the generating truth
        assert m.report.ubrmse < 0.05
        assert m.report.r > 0.5


def test_artifacts_written(report):
    names = {p.name for p in report.output_dir.iterdir()}
    assert {"sessions.csv", "rejections.csv", "retrievals.csv", "metrics.csv",
            "metrics.txt", "plot_tb_series.csv", "plot_sm_series.csv"} <= names
    table = (report.output_dir / "metrics.txt").read_text().splitlines()
    assert table[0].split() == ["site", "preset", "n", "bias", "rmse",
                                "ubrmse", "r"]
    assert len(table) == 1 + len(report.metrics_rows)


def test_rejection_histogram_artifact(report):
    with open(report.output_dir / "rejections.csv", newline="") as fh:
        rows = list(csv.DictReader(fh))
    counts = {(r["site"], r["session"], r["flag"]): int(r["count"]) for r in rows}
    assert all(v == 1 for v in counts.values())
    flags = {k[2] for k in counts}
    assert flags == {"max_exceeded", "min_violated", "pol_order_violated"}


def test_plot_series_includes_reference_band(report):
    with open(report.output_dir / "plot_sm_series.csv", newline="") as fh:
        rows = list(csv.DictReader(fh))
    assert rows
    for r in rows:
        assert float(r["sm_ref_lo"]) <= float(r["sm_ref"]) <= float(r["sm_ref_hi"])


def test_reruns_byte_identical(campaign_config, tmp_path_factory):
    out1 = tmp_path_factory.mktemp("rerun1")
    out2 = tmp_path_factory.mktemp("rerun2")
    pipeline.run_pipeline(campaign_config, output_dir=out1)
    pipeline.run_pipeline(campaign_config, output_dir=out2)
    names = sorted(p.name for p in out1.iterdir())
    assert names == sorted(p.name for p in out2.iterdir())
    for name in names:
        assert (out1 / name).read_bytes() == (out2 / name).read_bytes(), name


def test_poisoned_session_isolated(tmp_path):
    # one session violating the polarization order everywhere must be
    # flagged without affecting its neighbours
    root = tmp_path / "camp"
    synth.generate_campaign(root, seed=7, n_days=2, n_samples=30,
                            voltage_site=None)
    bad_rows = ["timestamp,tb_h,tb_v"]
    bad_rows += [f"2023-11-20T14:00:{i:02d}Z,260.0,255.0" for i in range(30)]
    (root / "sessions" / "bare_2023-11-20.csv").write_text("\n".join(bad_rows) + "\n")
    cfg = load_campaign(root / "campaign.cfg")
    report = pipeline.run_pipeline(cfg, output_dir=tmp_path / "out")
    assert report.ok
    bad = [s for s in report.sessions if s.session_id == "bare_2023-11-20"]
    assert bad and bad[0].error == "no valid observations in session"
    good = [s for s in report.sessions if s.error is None]
    assert len(good) == 4
    assert any("no valid observations" in w for w in report.warnings)


def test_corrupt_reference_file_isolates_site(tmp_path):
    root = tmp_path / "camp"
    synth.generate_campaign(root, seed=3, n_days=2, n_samples=20,
                            voltage_site=None)
    (root / "ref_bare.csv").write_text(
        "timestamp,sm_1,soil_temp_k\nbroken,0.2,290\n")
    cfg = load_campaign(root / "campaign.cfg")
    report = pipeline.run_pipeline(cfg, output_dir=tmp_path / "out")
    assert not report.ok
    assert any("ref_bare.csv:2" in e for e in report.data_errors)
    assert {s.site for s in report.sessions} == {"grass"}


def test_malformed_session_reported_not_fatal(tmp_path):
    root = tmp_path / "camp"
    synth.generate_campaign(root, seed=9, n_days=2, n_samples=20,
                            voltage_site=None)
    (root / "sessions" / "bare_2023-11-21.csv").write_text(
        "timestamp,tb_h,tb_v\n2023-11-21T14:00:00Z,oops,260\n")
    cfg = load_campaign(root / "campaign.cfg")
    report = pipeline.run_pipeline(cfg, output_dir=tmp_path / "out")
    assert not report.ok
    assert any("bare_2023-11-21.csv:2" in e for e in report.data_errors)
    # the other sessions still ran
    assert len(report.sessions) == 4


def test_empty_campaign_runs_with_warning(tmp_path):
    (tmp_path / "ref.csv").write_text(
        "timestamp,sm_1,soil_temp_k\n2023-11-11T14:05:00Z,0.2,290\n")
    (tmp_path / "campaign.cfg").write_text(
        "presets = DCA0\noutput_dir = out\n"
        "site.a.land_cover = bare_soil\nsite.a.clay_fraction = 0.2\n"
        "site.a.reference = ref.csv\n")
    cfg = load_campaign(tmp_path / "campaign.cfg")
    report = pipeline.run_pipeline(cfg)
    assert report.ok
    assert not report.sessions
    assert any("no session files" in w for w in report.warnings)
    assert (tmp_path / "out" / "metrics.csv").exists()
