import math

import numpy as np
import pytest

from reluflow import data, dynamics, harness, network, reports


def tiny_spec(train_mode="both", **kw):
    sgd = dynamics.SgdConfig(eta=5e-4, batch_size=0 or 10**9, steps=1, momentum=0.9)
    defaults = dict(
        n_samples=16,
        d0_values=[4],
        d1_values=[16, 32],
        n_runs=2,
        train_mode=train_mode,
        sgd=sgd,
        max_iters=600,
        log_every=20,
    )
    defaults.update(kw)
    return harness.GridSpec(**defaults)


def test_grid_shapes_and_determinism():
    spec = tiny_spec()
    a = harness.run_grid(spec, master_seed=3)
    b = harness.run_grid(spec, master_seed=3)
    assert len(a.cells) == 2
    for ca, cb in zip(a.cells, b.cells):
        assert ca.result.p_converge == cb.result.p_converge
        for ra, rb in zip(ca.result.runs, cb.result.runs):
            assert ra.final_loss == rb.final_loss
            assert ra.final_zeros == rb.final_zeros
    m = a.matrix("p_converge")
    assert m.shape == (1, 2)


def test_grid_zero_iteration_budget():
    spec = tiny_spec(max_iters=0)
    g = harness.run_grid(spec, master_seed=0)
    for cell in g.cells:
        assert cell.result.p_converge == 0.0


def test_grid_convergence_probability_ceiling():
    # generous width, tiny sample count: every run converges
    sgd = dynamics.SgdConfig(eta=2e-3, batch_size=10**9, steps=1, momentum=0.9)
    spec = harness.GridSpec(
        n_samples=8,
        d0_values=[8],
        d1_values=[128],
        n_runs=3,
        train_mode="both",
        sgd=sgd,
        max_iters=3000,
        log_every=25,
    )
    g = harness.run_grid(spec, master_seed=1)
    assert g.cells[0].result.p_converge == 1.0
    assert g.cells[0].result.avg_final_zeros >= 0.0


def test_run_inputs_shared_across_modes():
    xa, ya, pa = harness._make_run_inputs(12, 4, 8, "both", 5, 0, 0)
    xb, yb, pb = harness._make_run_inputs(12, 4, 8, "w_only", 5, 0, 0)
    np.testing.assert_array_equal(xa, xb)
    np.testing.assert_array_equal(ya, yb)
    np.testing.assert_array_equal(pa.W, pb.W)
    # output layers differ by construction
    assert not np.array_equal(pa.V, pb.V)
    assert np.allclose(np.abs(pb.V), 1.0 / math.sqrt(8))


def test_track_metrics_frozen_trajectory():
    x, y, p0 = harness._make_run_inputs(10, 4, 8, "both", 0, 0, 0)
    cfg = dynamics.SgdConfig(eta=0.0, batch_size=10, steps=100, momentum=0.0)
    ms = harness.track_metrics(x, y, p0, cfg, 10)
    assert np.all(ms.hamming == 0)
    assert np.all(ms.delta_loss == 0.0)
    assert np.all(ms.delta_diff == 0.0)


def test_track_metrics_w_only_fixed_pattern_has_zero_delta_diff():
    # all preactivations strictly positive and only W trained: the Jacobian
    # w.r.t. trainable parameters depends on (pattern, v) only
    rng = np.random.default_rng(0)
    n, d0, d1 = 8, 3, 6
    x = np.abs(data.sample_sphere_rows(n, d0, data.UNIT, seed=1)) + 0.1
    x /= np.linalg.norm(x, axis=1, keepdims=True)
    w0 = np.abs(rng.standard_normal((d0, d1))) + 0.5
    v = rng.choice([-1.0, 1.0], size=(d1, 1)) / math.sqrt(d1)
    y = rng.standard_normal((n, 1))
    p0 = data.Params(w0, v)
    cfg = dynamics.SgdConfig(eta=1e-3, batch_size=n, steps=60, momentum=0.0)
    ms = harness.track_metrics(x, y, p0, cfg, 10, train_layers="w_only")
    log = dynamics.run_sgd(x, y, p0, cfg, "w_only")
    # guard: the pattern really stayed positive throughout
    assert np.all(x @ log.final_params.W > 0)
    assert np.all(ms.delta_diff == 0.0)
    assert np.any(ms.delta_loss > 0.0)


def test_track_metrics_dense_matches_matrix_free():
    x, y, p0 = harness._make_run_inputs(10, 4, 12, "both", 2, 0, 0)
    cfg = dynamics.SgdConfig(eta=1e-3, batch_size=10, steps=80, momentum=0.9)
    dense = harness.track_metrics(x, y, p0, cfg, 20)
    free = harness.track_metrics(x, y, p0, cfg, 20, dense_budget=1)
    np.testing.assert_allclose(dense.delta_diff, free.delta_diff, atol=1e-6)
    with pytest.raises(MemoryError):
        harness.track_metrics(x, y, p0, cfg, 20, dense_budget=1, matrix_free=False)


def test_compare_modes_excludes_unconverged():
    spec = tiny_spec(max_iters=0)  # nothing converges
    cmp = harness.compare_training_modes(spec, master_seed=0)
    assert cmp.ratios == {}
    assert len(cmp.excluded) == 2
    assert math.isnan(cmp.median_ratio)


def test_zeros_ratio_rule():
    # identical counts (a mode compared with itself) give exactly 1,
    # including the all-zero case; a zero denominator gives inf
    assert harness._zeros_ratio(5.0, 5.0) == 1.0
    assert harness._zeros_ratio(0.0, 0.0) == 1.0
    assert harness._zeros_ratio(3.0, 0.0) == math.inf
    assert harness._zeros_ratio(9.0, 3.0) == 3.0


def test_export_and_roundtrip(tmp_path):
    spec = tiny_spec()
    g = harness.run_grid(spec, master_seed=4)
    files = reports.export(g, "csv", tmp_path / "grid")
    cells = reports.read_cells_csv(files[0])
    assert len(cells) == 2
    for rec, cell in zip(cells, g.cells):
        assert rec["d0"] == cell.d0 and rec["d1"] == cell.d1
        assert rec["p_converge"] == cell.result.p_converge
        az = cell.result.avg_final_zeros
        assert rec["avg_final_zeros"] == az or (
            math.isnan(rec["avg_final_zeros"]) and math.isnan(az)
        )
    # byte-stable rewrite
    again = reports.export(g, "csv", tmp_path / "grid2")
    assert files[0].read_bytes() == again[0].read_bytes()


def test_export_svg_heatmaps(tmp_path):
    spec = tiny_spec()
    g = harness.run_grid(spec, master_seed=4)
    files = reports.export(g, "svg", tmp_path / "fig")
    assert len(files) == 2
    content = files[0].read_text()
    assert content.startswith("<svg")
    # heatmap cell count equals |d0_values| * |d1_values|
    assert content.count("<rect") - 1 == 1 * 2  # minus background rect


def test_export_refuses_empty():
    with pytest.raises(ValueError):
        reports.export([], "csv", "nowhere.csv")
    empty = harness.MetricSeries(
        k=np.array([], dtype=int),
        loss=np.array([]),
        zeros=np.array([], dtype=int),
        hamming=np.array([], dtype=int),
        delta_loss=np.array([]),
        delta_diff=None,
    )
    with pytest.raises(ValueError):
        reports.export(empty, "csv", "nowhere.csv")


def test_metrics_csv_roundtrip_values(tmp_path):
    x, y, p0 = harness._make_run_inputs(10, 4, 8, "both", 3, 0, 0)
    cfg = dynamics.SgdConfig(eta=1e-3, batch_size=10, steps=40, momentum=0.9)
    ms = harness.track_metrics(x, y, p0, cfg, 10)
    path = reports.export(ms, "csv", tmp_path / "metrics.csv")[0]
    lines = path.read_text().strip().splitlines()
    assert lines[0] == "k,loss,zeros,hamming,delta_loss,delta_diff"
    assert len(lines) == len(ms.k) + 1
    back_loss = float(lines[1].split(",")[1])
    assert back_loss == ms.loss[0]
