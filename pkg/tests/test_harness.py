import json

import numpy as np
import numpy.testing as npt
import pytest

from mcmimo import harness
from mcmimo.harness import (
    ExperimentConfig,
    compute_cdf,
    nearest_rank_percentile,
    run_experiment,
    sweep_target_experiment,
    table1_rows,
    write_run_outputs,
)


def small_cfg(**kw):
    base = dict(num_drops=50, seed=77, criterion="random", pc="off")
    base.update(kw)
    return ExperimentConfig(**base)


def test_compute_cdf_examples():
    values, fracs = compute_cdf([0.0, 0.0, 0.5])
    npt.assert_array_equal(values, [0.0, 0.5])
    npt.assert_allclose(fracs, [2.0 / 3.0, 1.0])

    values, fracs = compute_cdf([3.5, 3.5, 3.5])
    npt.assert_array_equal(values, [3.5])
    npt.assert_array_equal(fracs, [1.0])

    with pytest.raises(ValueError):
        compute_cdf([])


def test_nearest_rank_percentile():
    samples = np.arange(1, 101, dtype=float)
    assert nearest_rank_percentile(samples, 5.0) == 5.0
    assert nearest_rank_percentile(samples, 100.0) == 100.0
    assert nearest_rank_percentile([42.0], 5.0) == 42.0
    # p5 sits exactly where the CDF first reaches 5%
    values, fracs = compute_cdf(samples)
    idx = np.searchsorted(fracs, 0.05)
    assert values[idx] == nearest_rank_percentile(samples, 5.0)


def test_run_experiment_summary_consistency():
    summary = run_experiment(small_cfg())
    assert summary.ber_samples.size == 50 * 4  # central-cell users only
    frac_mid = 100.0 * np.mean(
        (summary.ber_samples > 0.0) & (summary.ber_samples < 0.1)
    )
    total = summary.frac_ber_zero_pct + frac_mid + summary.frac_ber_ge_01_pct
    assert abs(total - 100.0) < 1e-9
    assert summary.p5_rate_mbps <= summary.mean_rate_mbps
    assert np.all(summary.ber_samples >= 0.0)
    assert np.all(np.isfinite(summary.rate_samples))


def test_run_experiment_deterministic_and_parallel_equal():
    cfg = small_cfg(num_drops=40)
    s1 = run_experiment(cfg, workers=1)
    s2 = run_experiment(cfg, workers=1)
    npt.assert_array_equal(s1.ber_samples, s2.ber_samples)
    npt.assert_array_equal(s1.rate_samples, s2.rate_samples)
    s3 = run_experiment(cfg, workers=2)
    npt.assert_array_equal(s1.ber_samples, s3.ber_samples)
    npt.assert_array_equal(s1.sinr_samples, s3.sinr_samples)


def test_single_drop_run():
    summary = run_experiment(small_cfg(num_drops=1))
    assert summary.ber_samples.size == 4
    again = run_experiment(small_cfg(num_drops=1))
    npt.assert_array_equal(summary.ber_samples, again.ber_samples)


def test_pa_and_pc_paths_execute():
    s_pa = run_experiment(small_cfg(num_drops=8, criterion="maxminsinr"))
    s_pc = run_experiment(small_cfg(num_drops=8, pc="opc", zeta_db=6.0))
    s_tpc = run_experiment(small_cfg(num_drops=8, pc="tpc", zeta_db=6.0))
    for s in (s_pa, s_pc, s_tpc):
        assert s.ber_samples.size == 32
    # power control moves the operating point of the same drops
    s_off = run_experiment(small_cfg(num_drops=8))
    assert not np.array_equal(s_pc.sinr_samples, s_off.sinr_samples)
    assert not np.array_equal(s_tpc.sinr_samples, s_pc.sinr_samples)


def test_received_policy_changes_alpha_regime():
    s_t = run_experiment(small_cfg(num_drops=8))
    s_r = run_experiment(small_cfg(num_drops=8, uplink_power_policy="received"))
    assert not np.array_equal(s_t.sinr_samples, s_r.sinr_samples)


def test_config_validation():
    with pytest.raises(ValueError):
        ExperimentConfig(criterion="greedy")
    with pytest.raises(ValueError):
        ExperimentConfig(pc="on")
    with pytest.raises(ValueError):
        ExperimentConfig(num_drops=0)
    with pytest.raises(ValueError):
        ExperimentConfig(uplink_power_policy="max")


def test_outputs_byte_identical(tmp_path):
    cfg = small_cfg(num_drops=30)
    out_a = tmp_path / "a"
    out_b = tmp_path / "b"
    write_run_outputs(out_a, cfg, run_experiment(cfg))
    write_run_outputs(out_b, cfg, run_experiment(cfg))
    names = [
        "metrics.csv",
        "cdf_ber.csv",
        "cdf_sinr_db.csv",
        "cdf_rate_mbps.csv",
        "manifest.json",
    ]
    for name in names:
        assert (out_a / name).read_bytes() == (out_b / name).read_bytes()


def test_manifest_and_json_format(tmp_path):
    cfg = small_cfg(num_drops=5)
    summary = run_experiment(cfg)
    write_run_outputs(tmp_path, cfg, summary, fmt="json")
    manifest = json.loads((tmp_path / "manifest.json").read_text())
    assert manifest["backend"] in ("numba", "numpy")
    assert manifest["config"]["num_drops"] == 5
    metrics = json.loads((tmp_path / "metrics.json").read_text())
    assert abs(metrics["mean_ber_pct"] - summary.mean_ber_pct) < 1e-9


def test_cdf_csv_atom_preserved(tmp_path):
    cfg = small_cfg(num_drops=60)
    summary = run_experiment(cfg)
    write_run_outputs(tmp_path, cfg, summary)
    lines = (tmp_path / "cdf_ber.csv").read_text().strip().splitlines()
    first_value, first_frac = lines[1].split(",")
    assert float(first_value) == 0.0
    npt.assert_allclose(
        100.0 * float(first_frac), summary.frac_ber_zero_pct, atol=1e-6
    )


def test_table1_row_grid():
    rows = table1_rows()
    assert len(rows) == 8
    assert rows[0] == (1, "random", False)
    assert rows[-1] == (3, "maxminsinr", True)
    assert set(harness.REFERENCE_TABLE1) == set(rows)


def test_table1_report_small(tmp_path):
    results = harness.table1_report(num_drops=6, seed=5, out_dir=tmp_path)
    assert len(results) == 8
    for row in results:
        assert "ref_p5_rate_mbps" in row
    text = (tmp_path / "table1.txt").read_text()
    assert "reuse factor 1" in text and "reference" in text
    csv_lines = (tmp_path / "table1.csv").read_text().strip().splitlines()
    assert len(csv_lines) == 9


def test_sweep_experiment_paired(tmp_path):
    cfg = small_cfg(num_drops=12, criterion="maxminsinr", pc="opc")
    best, curve = sweep_target_experiment(cfg, [4.0, 6.0])
    assert best in (4.0, 6.0)
    assert len(curve) == 2
    with pytest.raises(ValueError):
        sweep_target_experiment(small_cfg(pc="off"), [1.0])


def test_convergence_experiment_tiny():
    result = harness.convergence_experiment(
        n_values=(8, 32), num_drops=3, seed=2, trials_floor=400, trials_per_antenna=8
    )
    rows = result["rows"]
    assert {(r["N"], r["precoder"]) for r in rows} == {
        (8, "mf"),
        (8, "zf"),
        (32, "mf"),
        (32, "zf"),
    }
    rec = result["records"][(32, "zf")]
    assert rec["gap_db"].shape == (3, 4)
    for row in rows:
        assert np.isfinite(row["mean_SINR_dB"])
