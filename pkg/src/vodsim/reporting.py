"""Results CSV and plain-text plot series."""

from __future__ import annotations

import csv
import io
from dataclasses import dataclass
from pathlib import Path
from typing import Sequence

from .core import ConfigurationError
from .metrics import (
    MetricsReport,
    blocking_probability,
    capacity_blocking,
    throughput,
    traffic_intensity,
)

RESULTS_COLUMNS = (
    "scenario_id",
    "policy_column",
    "rate_scale",
    "population_multiplier",
    "seed",
    "arrivals",
    "admissions",
    "blocks_full",
    "blocks_policy",
    "blocking_prob",
    "throughput_fraction",
    "throughput_rate",
    "intensity",
)

F5_F8 = "F5_F8_policy_blocking"
F9_F10 = "F9_F10_policy_vs_nopolicy"
F11 = "F11_throughput_population"
F12 = "F12_intensity"
FIGURES = (F5_F8, F9_F10, F11, F12)

NA = "NA"


def _fmt(x) -> str:
    if x is None:
        return NA
    if isinstance(x, float):
        return repr(x)
    return str(x)


def results_row(report: MetricsReport) -> list[str]:
    report.check()
    thr = throughput(report)
    return [
        report.scenario_id,
        "none" if report.policy_column is None else str(report.policy_column),
        _fmt(float(report.rate_scale)),
        _fmt(float(report.population_multiplier)),
        str(report.seed),
        str(report.total_arrivals),
        str(report.total_admissions),
        str(report.total_blocks_full),
        str(report.total_blocks_policy),
        _fmt(blocking_probability(report).overall),
        _fmt(thr.fraction),
        _fmt(thr.rate),
        _fmt(traffic_intensity(report)),
    ]


def results_csv(reports: Sequence[MetricsReport]) -> str:
    buf = io.StringIO()
    writer = csv.writer(buf, lineterminator="\n")
    writer.writerow(RESULTS_COLUMNS)
    for r in reports:
        writer.writerow(results_row(r))
    return buf.getvalue()


def write_results_csv(reports: Sequence[MetricsReport], destination: str | Path) -> int:
    text = results_csv(reports)
    try:
        Path(destination).write_text(text)
    except OSError as exc:
        raise OSError(f"cannot write results to {destination}: {exc.strerror}") from exc
    return len(reports)


@dataclass(frozen=True)
class PlotSeries:
    figure_id: str
    series: str
    x_label: str
    y_label: str
    points: tuple[tuple[float, float], ...]

    def __post_init__(self):
        if self.figure_id not in FIGURES:
            raise ConfigurationError(f"unknown figure id {self.figure_id!r}")
        if not self.x_label or not self.y_label:
            raise ConfigurationError("plot labels must be non-empty")
        xs = [x for x, _ in self.points]
        if xs != sorted(xs):
            raise ConfigurationError("plot points must be ordered by x")

    @property
    def filename(self) -> str:
        return f"{self.figure_id}__{self.series}.dat"

    def to_text(self) -> str:
        lines = [
            f"# figure_id: {self.figure_id}",
            f"# series: {self.series}",
            f"# x_label: {self.x_label}",
            f"# y_label: {self.y_label}",
        ]
        lines += [f"{x!r} {y!r}" for x, y in self.points]
        return "\n".join(lines) + "\n"

    @classmethod
    def from_text(cls, text: str) -> "PlotSeries":
        meta, points = {}, []
        for line in text.splitlines():
            if line.startswith("#"):
                key, _, value = line[1:].partition(":")
                meta[key.strip()] = value.strip()
            elif line.strip():
                x, y = line.split()
                points.append((float(x), float(y)))
        return cls(meta["figure_id"], meta["series"], meta["x_label"], meta["y_label"], tuple(points))


def _sorted_points(pairs) -> tuple[tuple[float, float], ...]:
    return tuple(sorted((float(x), float(y)) for x, y in pairs))


def _need_distinct(reports, attr: str, figure_id: str):
    if len({getattr(r, attr) for r in reports}) < 2:
        raise ConfigurationError(f"{figure_id} needs reports sweeping {attr}")


def build_series(reports: Sequence[MetricsReport], figure_id: str) -> list[PlotSeries]:
    """Plot series for one figure layout, without touching the filesystem."""
    if not reports:
        raise ConfigurationError(f"{figure_id}: no reports given")
    if figure_id == F5_F8:
        controlled = [r for r in reports if r.policy_enabled]
        if not controlled:
            raise ConfigurationError(f"{figure_id} needs reports with a policy_column")
        out = []
        for r in controlled:
            per_class = blocking_probability(r).per_class
            pts = [(x, b) for x, b in zip(r.traffic_rates, per_class) if b is not None]
            out.append(PlotSeries(
                F5_F8, f"{r.scenario_id}_col{r.policy_column}",
                "cluster traffic rate (Mb/s)", "blocking probability", _sorted_points(pts),
            ))
        return out
    if figure_id == F9_F10:
        on = [r for r in reports if r.policy_enabled]
        off = [r for r in reports if not r.policy_enabled]
        if not on or not off:
            raise ConfigurationError(f"{figure_id} needs reports with and without policy_column")
        _need_distinct(on, "rate_scale", figure_id)
        _need_distinct(off, "rate_scale", figure_id)
        out = []
        for name, group in (("policy", on), ("no_policy", off)):
            pts = [
                (r.rate_scale, capacity_blocking(r).overall)
                for r in group if r.total_arrivals > 0
            ]
            out.append(PlotSeries(
                F9_F10, name, "rate scale", "capacity blocking probability", _sorted_points(pts),
            ))
        return out
    if figure_id == F11:
        _need_distinct(reports, "population_multiplier", figure_id)
        pts = [
            (r.population_multiplier, throughput(r).fraction)
            for r in reports if r.total_arrivals > 0
        ]
        return [PlotSeries(
            F11, "throughput", "population multiplier", "throughput fraction", _sorted_points(pts),
        )]
    if figure_id == F12:
        _need_distinct(reports, "rate_scale", figure_id)
        pts = [(r.rate_scale, traffic_intensity(r)) for r in reports]
        return [PlotSeries(
            F12, "intensity", "rate scale", "offered erlangs per port", _sorted_points(pts),
        )]
    raise ConfigurationError(f"unknown figure id {figure_id!r}; choose from {', '.join(FIGURES)}")


def emit_plot_series(
    reports: Sequence[MetricsReport], figure_id: str, destination: str | Path
) -> list[PlotSeries]:
    """Write one two-column file per series into ``destination`` and return them."""
    series = build_series(reports, figure_id)
    dest = Path(destination)
    dest.mkdir(parents=True, exist_ok=True)
    for s in series:
        (dest / s.filename).write_text(s.to_text())
    return series
