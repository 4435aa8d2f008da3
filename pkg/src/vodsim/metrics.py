"""Run counters and the figures of merit derived from them."""

from __future__ import annotations

from dataclasses import dataclass
from typing import Sequence

from .core import ConfigurationError, ConsistencyError


@dataclass(frozen=True)
class MetricsReport:
    """Counters measured after warmup for one simulation run.

    Per-class tuples are indexed by traffic class; ``occupancy_time`` is
    indexed by partition and holds port-seconds.
    """

    arrivals: tuple[int, ...]
    admissions: tuple[int, ...]
    blocks_full: tuple[int, ...]
    blocks_policy: tuple[int, ...]
    occupancy_time: tuple[float, ...]
    horizon: float
    offered_rates: tuple[float, ...]
    traffic_rates: tuple[float, ...]
    capacities: tuple[int, ...]
    holding_time: float
    scenario_id: str = "run"
    policy_column: int | None = None
    rate_scale: float = 1.0
    population_multiplier: float = 1.0
    seed: int = 0

    def __post_init__(self):
        self.check()

    def check(self):
        for i, (a, m, bf, bp) in enumerate(
            zip(self.arrivals, self.admissions, self.blocks_full, self.blocks_policy)
        ):
            if a != m + bf + bp:
                raise ConsistencyError(f"class {i}: arrivals {a} != admissions + blocks")
        for j, (area, c) in enumerate(zip(self.occupancy_time, self.capacities)):
            if area < 0 or area > c * self.horizon * (1 + 1e-12) + 1e-9:
                raise ConsistencyError(f"partition {j}: occupancy integral {area} out of bounds")

    @property
    def total_arrivals(self) -> int:
        return sum(self.arrivals)

    @property
    def total_admissions(self) -> int:
        return sum(self.admissions)

    @property
    def total_blocks_full(self) -> int:
        return sum(self.blocks_full)

    @property
    def total_blocks_policy(self) -> int:
        return sum(self.blocks_policy)

    @property
    def total_blocks(self) -> int:
        return self.total_blocks_full + self.total_blocks_policy

    @property
    def policy_enabled(self) -> bool:
        return self.policy_column is not None

    def utilization(self) -> tuple[float, ...]:
        return tuple(
            area / (c * self.horizon) if c > 0 and self.horizon > 0 else 0.0
            for area, c in zip(self.occupancy_time, self.capacities)
        )


@dataclass(frozen=True)
class Blocking:
    per_class: tuple[float | None, ...]
    overall: float | None


@dataclass(frozen=True)
class Throughput:
    fraction: float | None
    rate: float


def _ratio(num: int, den: int) -> float | None:
    return num / den if den > 0 else None


def blocking_probability(report: MetricsReport) -> Blocking:
    """Blocked fraction of arrivals; ``None`` where a class saw no arrivals."""
    per_class = tuple(
        _ratio(bf + bp, a)
        for a, bf, bp in zip(report.arrivals, report.blocks_full, report.blocks_policy)
    )
    return Blocking(per_class, _ratio(report.total_blocks, report.total_arrivals))


def capacity_blocking(report: MetricsReport) -> Blocking:
    """Fraction of arrivals that found every examined partition full.

    Policy rejections are excluded, which is the like-for-like quantity when
    comparing policy-controlled and uncontrolled runs.
    """
    per_class = tuple(_ratio(bf, a) for a, bf in zip(report.arrivals, report.blocks_full))
    return Blocking(per_class, _ratio(report.total_blocks_full, report.total_arrivals))


def throughput(report: MetricsReport) -> Throughput:
    if report.horizon <= 0:
        raise ConfigurationError("throughput needs a positive measurement horizon")
    return Throughput(
        _ratio(report.total_admissions, report.total_arrivals),
        report.total_admissions / report.horizon,
    )


def traffic_intensity(
    report: MetricsReport,
    capacities: Sequence[int] | None = None,
    holding_time: float | None = None,
) -> float:
    """Offered erlangs per port."""
    caps = report.capacities if capacities is None else capacities
    hold = report.holding_time if holding_time is None else holding_time
    total = sum(caps)
    if total <= 0:
        raise ConfigurationError("traffic intensity needs positive total capacity")
    return sum(report.offered_rates) * hold / total
