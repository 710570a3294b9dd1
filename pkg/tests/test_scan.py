import re

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

import oracles
from kitaev_vqe.ansatz import AnsatzKind
from kitaev_vqe.model import ChainParams, even_odd_gap
from kitaev_vqe.scan import (
    GridSpec,
    ScanResult,
    cell_seed,
    phase_gap_scan,
    read_csv,
    vqe_error_scan,
    write_csv,
    write_svg_heatmap,
)
from kitaev_vqe.vqe import OptimizerConfig


@pytest.fixture(scope="module")
def gap_scan():
    return phase_gap_scan(GridSpec((-2, 2, 21), (-6, 6, 25)), 5)


@pytest.mark.parametrize(
    "kwargs",
    [
        dict(delta_over_t=(1.0, 1.0, 1), mu_over_t=(0.0, 0.0, 1)),
        dict(delta_over_t=(0.0, 1.0, 1)),
        dict(mu_over_t=(1.0, -1.0, 5)),
        dict(t=0.0),
    ],
)
def test_grid_validation(kwargs):
    with pytest.raises(ValueError):
        GridSpec(**kwargs)


def test_default_grid():
    grid = GridSpec()
    assert grid.shape == (41, 41)
    assert grid.delta_values()[20] == 0.0 and grid.mu_values()[-1] == 4.0
    assert grid.t == -1.0


def test_gap_scan_points(gap_scan):
    deltas, mus = gap_scan.grid.delta_values(), gap_scan.grid.mu_values()
    i, j = np.argmin(abs(deltas - 1)), np.argmin(abs(mus))
    assert abs(gap_scan.values[i, j]) < 1e-10
    j6 = np.argmin(abs(mus - 6))
    assert abs(gap_scan.values[i, j6]) > 0.1


def test_gap_scan_cells_match_model(gap_scan):
    grid = gap_scan.grid
    for i, j in [(0, 0), (3, 17), (20, 24)]:
        expected = even_odd_gap(ChainParams(5, grid.t, grid.delta_values()[i], grid.mu_values()[j]))
        assert gap_scan.values[i, j] == expected


def test_gap_scan_mirror_symmetry(gap_scan):
    np.testing.assert_allclose(gap_scan.values, gap_scan.values[::-1], atol=1e-10)


def test_gap_scan_uses_reference_scale():
    a = phase_gap_scan(GridSpec((-1, 1, 3), (-1, 1, 3), t=-2.0), 4)
    assert a.values[2, 1] == even_odd_gap(ChainParams(4, -2.0, 2.0, 0.0))


def test_gap_scan_rejects_large_n():
    with pytest.raises(ValueError):
        phase_gap_scan(GridSpec((-1, 1, 2), (-1, 1, 2)), 15)


@pytest.mark.parametrize("n", [5, 7, 9])
def test_zero_field_line_odd_chains(n):
    result = phase_gap_scan(GridSpec((-2, 2, 41), (-1, 1, 3)), n)
    deltas = result.grid.delta_values()
    line = result.values[:, 1]
    for d, gap in zip(deltas, line):
        if abs(abs(d) - 1) < 1e-12:
            assert abs(gap) <= 1e-10
        elif d != 0:
            assert abs(gap) <= 1e-6


@pytest.mark.parametrize("delta", [0.5, 0.9, 1.5])
def test_zero_field_splitting_decays_for_even_chains(delta):
    gaps = []
    for n in (6, 8, 10):
        gap = even_odd_gap(ChainParams(n, -1, delta, 0))
        ref = oracles.sector_ground(n, -1, delta, 0, 0) - oracles.sector_ground(n, -1, delta, 0, 1)
        assert gap == pytest.approx(ref, abs=1e-10)
        gaps.append(abs(gap))
    assert gaps[0] > gaps[1] > gaps[2]


def test_csv_two_by_two(tmp_path):
    result = ScanResult(GridSpec((0, 1, 2), (-1, 1, 2)), np.array([[1.0, 2.0], [3.0, 4.0]]), "gap")
    write_csv(result, tmp_path / "s.csv")
    lines = (tmp_path / "s.csv").read_text().splitlines()
    assert lines == ["mu_over_t\\delta_over_t,0,1", "-1,1,3", "1,2,4"]


def test_csv_round_trip(tmp_path, gap_scan):
    write_csv(gap_scan, tmp_path / "a.csv")
    back = read_csv(tmp_path / "a.csv")
    write_csv(back, tmp_path / "b.csv")
    assert (tmp_path / "a.csv").read_bytes() == (tmp_path / "b.csv").read_bytes()
    np.testing.assert_allclose(back.values, gap_scan.values, rtol=1e-11, atol=1e-300)


@settings(max_examples=30, deadline=None)
@given(st.lists(st.floats(-1e6, 1e6, allow_nan=False), min_size=6, max_size=6))
def test_csv_parse_write_identity(tmp_path_factory, values):
    path = tmp_path_factory.mktemp("csv")
    result = ScanResult(GridSpec((0, 1, 2), (-1, 1, 3)), np.reshape(values, (2, 3)), "gap")
    write_csv(result, path / "a.csv")
    back = read_csv(path / "a.csv")
    write_csv(back, path / "b.csv")
    assert back.values.tolist() == read_csv(path / "b.csv").values.tolist()
    assert (path / "a.csv").read_text() == (path / "b.csv").read_text()


def test_csv_analytic_row_contains_zero(tmp_path):
    result = phase_gap_scan(GridSpec(), 5)
    write_csv(result, tmp_path / "g.csv")
    rows = [line.split(",") for line in (tmp_path / "g.csv").read_text().splitlines()]
    header = rows[0]
    mu_zero = next(r for r in rows[1:] if float(r[0]) == 0.0)
    assert abs(float(mu_zero[header.index("1")])) < 1e-10


def test_csv_io_error_has_path(tmp_path):
    result = ScanResult(GridSpec((0, 1, 2), (0, 1, 2)), np.zeros((2, 2)), "gap")
    missing = tmp_path / "nope" / "x.csv"
    with pytest.raises(OSError, match="nope"):
        write_csv(result, missing)


def test_svg_two_by_two(tmp_path):
    result = ScanResult(GridSpec((0, 1, 2), (-1, 1, 2)), np.array([[1.0, 2.0], [3.0, 4.0]]), "gap", {"n": 3})
    write_svg_heatmap(result, tmp_path / "s.svg")
    text = (tmp_path / "s.svg").read_text()
    assert text.count('class="cell"') == 4
    assert "Δ/|t|" in text and "μ/|t|" in text
    assert 'class="colorbar"' in text and "<title>gap (n=3)</title>" in text


def test_svg_constant_matrix_single_fill(tmp_path):
    result = ScanResult(GridSpec((0, 1, 3), (0, 1, 4)), np.full((3, 4), 0.25), "gap")
    write_svg_heatmap(result, tmp_path / "c.svg")
    fills = re.findall(r'class="cell"[^>]*fill="([^"]+)"', (tmp_path / "c.svg").read_text())
    assert len(fills) == 12 and len(set(fills)) == 1


def test_svg_gap_scan_dark_lobe(tmp_path, gap_scan):
    write_svg_heatmap(gap_scan, tmp_path / "g.svg", thresholds=(1e-3,))
    text = (tmp_path / "g.svg").read_text()
    nd, nm = gap_scan.grid.shape
    fills = np.array(re.findall(r'class="cell"[^>]*fill="([^"]+)"', text)).reshape(nd, nm)
    lum = np.vectorize(lambda c: sum(int(c[k:k + 2], 16) for k in (1, 3, 5)))(fills)
    i1 = np.argmin(abs(gap_scan.grid.delta_values() - 1))
    mus = gap_scan.grid.mu_values()
    inside = lum[i1, np.argmin(abs(mus))]
    outside = lum[i1, np.argmin(abs(mus - 6))]
    assert inside < outside
    assert lum[i1, np.argmin(abs(mus + 6))] > inside
    assert 'class="iso"' in text


def test_svg_log_scale_and_failed_cells(tmp_path):
    values = np.array([[1e-8, 1e-2], [np.nan, 1.0]])
    result = ScanResult(GridSpec((0, 1, 2), (0, 1, 2)), values, "relative_error", failures=[(1, 0, "boom")])
    assert not result.complete
    write_svg_heatmap(result, tmp_path / "e.svg", color_scale="log")
    text = (tmp_path / "e.svg").read_text()
    assert "#bbbbbb" in text and "log10" in text and "failed_cells=1" in text
    with pytest.raises(ValueError):
        write_svg_heatmap(result, tmp_path / "x.svg", color_scale="cubic")


def test_result_flags_unreported_nan():
    with pytest.raises(ValueError):
        ScanResult(GridSpec((0, 1, 2), (0, 1, 2)), np.array([[np.nan, 0], [0, 0]]), "gap")
    with pytest.raises(ValueError):
        ScanResult(GridSpec((0, 1, 2), (0, 1, 2)), np.zeros((3, 2)), "gap")


def test_cell_seed_depends_on_coordinates_only():
    assert cell_seed(0, 1, 2) == cell_seed(0, 1, 2)
    assert len({cell_seed(0, i, j) for i in range(5) for j in range(5)}) == 25


def test_error_scan_analytic_point_and_hva_ordering():
    grid = GridSpec((1.0, 2.0, 2), (0.0, 1.0, 2))
    config = OptimizerConfig(restarts=5)
    even = vqe_error_scan(grid, 5, AnsatzKind.EVEN, 2, config)
    hva = vqe_error_scan(grid, 5, AnsatzKind.HVA, 2, config)
    assert even.complete and hva.complete
    assert even.values[0, 0] < 1e-3
    assert hva.values[0, 1] > even.values[0, 1]
    assert np.all(even.values >= 0) and np.all(np.isfinite(even.values))
    assert even.metadata["ansatz"] == "even" and even.metadata["seed"] == 0


def test_error_scan_parallel_matches_serial():
    grid = GridSpec((0.5, 1.5, 2), (-1.0, 1.0, 2))
    config = OptimizerConfig(restarts=2, seed=9)
    serial = vqe_error_scan(grid, 3, AnsatzKind.ODD, 1, config, jobs=1)
    pooled = vqe_error_scan(grid, 3, AnsatzKind.ODD, 1, config, jobs=2)
    assert np.array_equal(serial.values, pooled.values)


def test_error_scan_records_failed_cells(monkeypatch):
    import kitaev_vqe.scan as scan

    def flaky(h, circuit, config):
        raise RuntimeError("optimizer exploded")

    monkeypatch.setattr(scan, "multi_restart", flaky)
    result = vqe_error_scan(GridSpec((0, 1, 2), (0, 1, 2)), 3, AnsatzKind.EVEN, 1, OptimizerConfig(restarts=1))
    assert not result.complete
    assert len(result.failures) == 4 and np.all(np.isnan(result.values))
    assert "optimizer exploded" in result.failures[0][2]
