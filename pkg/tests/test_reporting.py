import csv

import pytest

from vodsim.core import ConfigurationError
from vodsim.engine import run, sweep, table2_scenario
from vodsim.reporting import (
    F5_F8,
    F9_F10,
    F11,
    F12,
    RESULTS_COLUMNS,
    PlotSeries,
    build_series,
    emit_plot_series,
    write_results_csv,
)


@pytest.fixture(scope="module")
def rate_sweep():
    base = table2_scenario()
    values = [0.01, 0.02, 0.04, 0.08]
    on = sweep(base, "rate-scale", values)
    off = sweep(table2_scenario(policy_column=None), "rate-scale", values)
    return on, off


def test_empty_results_csv_is_header_only(tmp_path):
    dest = tmp_path / "r.csv"
    assert write_results_csv([], dest) == 0
    assert dest.read_text() == ",".join(RESULTS_COLUMNS) + "\n"


def test_results_rows_follow_sweep_order(tmp_path, rate_sweep):
    on, _ = rate_sweep
    dest = tmp_path / "r.csv"
    assert write_results_csv(on, dest) == len(on)
    rows = list(csv.DictReader(dest.open()))
    assert [float(r["rate_scale"]) for r in rows] == [0.01, 0.02, 0.04, 0.08]
    first = rows[0]
    assert first["policy_column"] == "2"
    assert int(first["arrivals"]) == int(first["admissions"]) + int(first["blocks_full"]) + int(first["blocks_policy"])


def test_results_csv_is_byte_stable(tmp_path, rate_sweep):
    on, off = rate_sweep
    write_results_csv(on + off, tmp_path / "a.csv")
    write_results_csv(on + off, tmp_path / "b.csv")
    assert (tmp_path / "a.csv").read_bytes() == (tmp_path / "b.csv").read_bytes()


def test_results_csv_na_for_silent_run(tmp_path):
    report = run(table2_scenario(rate_scale=0.0))
    write_results_csv([report], tmp_path / "r.csv")
    row = list(csv.DictReader((tmp_path / "r.csv").open()))[0]
    assert row["blocking_prob"] == "NA" and row["throughput_fraction"] == "NA"


def test_unwritable_destination(tmp_path):
    with pytest.raises(OSError, match="missing"):
        write_results_csv([], tmp_path / "missing" / "r.csv")


def test_f12_strictly_increasing(tmp_path, rate_sweep):
    on, _ = rate_sweep
    (series,) = emit_plot_series(on, F12, tmp_path)
    ys = [y for _, y in series.points]
    assert all(a < b for a, b in zip(ys, ys[1:]))
    assert (tmp_path / series.filename).exists()


def test_f9_pair(tmp_path, rate_sweep):
    on, off = rate_sweep
    series = emit_plot_series(on + off, F9_F10, tmp_path)
    assert [s.series for s in series] == ["policy", "no_policy"]
    policy, nopolicy = (dict(s.points) for s in series)
    knee = min(x for x, y in nopolicy.items() if y > 0)
    for x in nopolicy:
        if x > knee:
            assert nopolicy[x] >= policy[x]


def test_f5_series_per_class(rate_sweep):
    on, _ = rate_sweep
    (series,) = build_series(on[:1], F5_F8)
    assert [x for x, _ in series.points] == pytest.approx([0.01 * (1.0 + 0.5 * i) for i in range(20)])
    assert all(0.0 <= y <= 1.0 for _, y in series.points)


def test_f11_series():
    reports = sweep(table2_scenario(), "population-multiplier", [1, 2, 4])
    (series,) = build_series(reports, F11)
    assert [x for x, _ in series.points] == [1.0, 2.0, 4.0]


@pytest.mark.parametrize(
    "figure, match",
    [(F11, "population_multiplier"), (F12, "rate_scale"), (F9_F10, "policy_column")],
)
def test_missing_axis_coverage(rate_sweep, figure, match):
    on, _ = rate_sweep
    with pytest.raises(ConfigurationError, match=match):
        build_series(on[:1] if figure != F9_F10 else on, figure)


def test_f5_needs_policy(rate_sweep):
    _, off = rate_sweep
    with pytest.raises(ConfigurationError, match="policy_column"):
        build_series(off, F5_F8)


def test_empty_reports_rejected(tmp_path):
    for fig in (F5_F8, F9_F10, F11, F12):
        with pytest.raises(ConfigurationError):
            emit_plot_series([], fig, tmp_path)


def test_plot_file_round_trip(tmp_path, rate_sweep):
    on, off = rate_sweep
    for fig in (F9_F10, F12, F5_F8):
        for s in emit_plot_series(on + off, fig, tmp_path):
            text = (tmp_path / s.filename).read_text()
            assert text.startswith(f"# figure_id: {fig}\n")
            assert PlotSeries.from_text(text) == s


def test_plot_files_are_pure(tmp_path, rate_sweep):
    on, off = rate_sweep
    emit_plot_series(on + off, F9_F10, tmp_path / "a")
    emit_plot_series(on + off, F9_F10, tmp_path / "b")
    for f in (tmp_path / "a").iterdir():
        assert f.read_bytes() == (tmp_path / "b" / f.name).read_bytes()


def test_plot_series_validation():
    with pytest.raises(ConfigurationError):
        PlotSeries(F12, "s", "x", "y", ((2.0, 1.0), (1.0, 1.0)))
    with pytest.raises(ConfigurationError):
        PlotSeries(F12, "s", "", "y", ())
    with pytest.raises(ConfigurationError):
        PlotSeries("F99", "s", "x", "y", ())
