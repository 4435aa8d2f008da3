"""Discrete-event loop for the partitioned video server."""

from __future__ import annotations

import enum
import heapq
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field, replace
from typing import Callable, NamedTuple, Sequence

from .admission import Admitted, BlockReason, CascadeMode, admit, release
from .core import (
    ConfigurationError,
    ConsistencyError,
    ControlMatrix,
    PolicyVector,
    TrafficClass,
    load_table1,
    new_server_state,
    select_policy_vector,
)
from .metrics import MetricsReport
from .traffic import (
    ClusterRateLadder,
    RateMapping,
    cluster_rates,
    next_interarrival,
    request_rate,
    substream,
)

TABLE2_SECTIONS = 20
TABLE2_PORTS = 10
TABLE2_MIN_RATE = 1.0
TABLE2_MAX_RATE = 10.5
TABLE2_HOLDING = 140.0
TABLE2_SIM_TIME = 460.0
DEFAULT_SEED = 42
DEFAULT_POLICY_COLUMN = 2

# substream purposes
_ARRIVALS, _ADMISSION, _HOLDING = 1, 2, 3

DEPARTURE, ARRIVAL = 0, 1


class HoldingDistribution(enum.Enum):
    DETERMINISTIC = "deterministic"
    EXPONENTIAL = "exponential"


class Event(NamedTuple):
    """Heap entry; tuple order gives time, then departures first, then sequence."""

    time: float
    priority: int  # DEPARTURE or ARRIVAL
    sequence: int
    target: int  # class index for arrivals, partition index for departures
    request: int = -1

    @property
    def is_arrival(self) -> bool:
        return self.priority == ARRIVAL


@dataclass(frozen=True)
class Scenario:
    capacities: tuple[int, ...] = (TABLE2_PORTS,) * TABLE2_SECTIONS
    policy: PolicyVector | None = None
    policy_column: int | None = None
    cascade: CascadeMode = CascadeMode()
    ladder: ClusterRateLadder = field(
        default_factory=lambda: cluster_rates(TABLE2_MIN_RATE, TABLE2_MAX_RATE, TABLE2_SECTIONS)
    )
    mapping: RateMapping = RateMapping()
    rate_scale: float = 1.0
    population_multiplier: float = 1.0
    holding_time: float = TABLE2_HOLDING
    holding_distribution: HoldingDistribution = HoldingDistribution.DETERMINISTIC
    sim_time: float = TABLE2_SIM_TIME
    warmup: float = 0.0
    seed: int = DEFAULT_SEED
    scenario_id: str = "run"

    def validate(self):
        if not self.sim_time > self.warmup >= 0:
            raise ConfigurationError(
                f"need sim_time > warmup >= 0, got sim_time={self.sim_time}, warmup={self.warmup}"
            )
        if not self.holding_time > 0:
            raise ConfigurationError("holding_time must be positive")
        if self.rate_scale < 0 or self.population_multiplier < 0:
            raise ConfigurationError("rate_scale and population_multiplier must be non-negative")
        k = len(self.capacities)
        if k == 0 or any(c < 0 for c in self.capacities):
            raise ConfigurationError(f"invalid capacities {self.capacities}")
        if self.policy is not None and len(self.policy) != k:
            raise ConfigurationError(
                f"policy has {len(self.policy)} entries but there are {k} sections"
            )
        if self.ladder.count != k:
            raise ConfigurationError(
                f"{self.ladder.count} client clusters but {k} sections; each cluster needs a home section"
            )

    def traffic_rates(self) -> tuple[float, ...]:
        """Per-cluster demand in Mb/s after rate scaling."""
        return tuple(self.rate_scale * r for r in self.ladder.rates)

    def arrival_rates(self) -> tuple[float, ...]:
        """Per-class request rates in requests/s."""
        return tuple(
            self.population_multiplier * request_rate(r, self.mapping)
            for r in self.traffic_rates()
        )

    def traffic_classes(self) -> list[TrafficClass]:
        return [TrafficClass(i, lam) for i, lam in enumerate(self.arrival_rates())]


def table2_scenario(
    policy_column: int | None = DEFAULT_POLICY_COLUMN,
    matrix: ControlMatrix | None = None,
    **overrides,
) -> Scenario:
    """Reference configuration: 20 sections of 10 ports, 140 s holding, 460 s run."""
    if policy_column is None:
        policy = None
    else:
        policy = select_policy_vector(matrix or load_table1(), policy_column)
    return Scenario(policy=policy, policy_column=policy_column, **overrides)


def run(
    scenario: Scenario,
    trace: Callable[[Event], None] | None = None,
    check_invariants: bool = False,
) -> MetricsReport:
    """Simulate one scenario; identical scenarios give identical reports.

    Events at or before ``sim_time`` are processed.  Counters only include
    events at or after ``warmup``.
    """
    scenario.validate()
    caps = tuple(scenario.capacities)
    k = len(caps)
    rates = [tc.arrival_rate for tc in scenario.traffic_classes()]
    policy = scenario.policy if scenario.policy is not None else PolicyVector.uniform(k)
    mode = scenario.cascade
    hold = scenario.holding_time
    exp_holding = scenario.holding_distribution is HoldingDistribution.EXPONENTIAL
    warmup, sim_time = scenario.warmup, scenario.sim_time
    seed = scenario.seed

    arr_rng = [substream(seed, _ARRIVALS, i) for i in range(k)]
    adm_rng = [substream(seed, _ADMISSION, i) for i in range(k)]
    hold_rng = [substream(seed, _HOLDING, i) for i in range(k)]

    state = new_server_state(caps)
    occ = state.occupancies
    heap: list[Event] = []
    seq = 0
    for i, lam in enumerate(rates):
        dt = next_interarrival(lam, arr_rng[i])
        if dt is not None:
            heapq.heappush(heap, Event(dt, ARRIVAL, seq, i))
            seq += 1

    arrivals = [0] * k
    admissions = [0] * k
    blocks_full = [0] * k
    blocks_policy = [0] * k
    area = [0.0] * k
    last = [0.0] * k
    # whole-run counters for conservation
    n_arrivals = n_admitted = n_blocked = n_released = 0

    while heap:
        ev = heapq.heappop(heap)
        t = ev.time
        if t > sim_time:
            break
        state.clock = t
        if trace is not None:
            trace(ev)
        if ev.priority == DEPARTURE:
            j = ev.target
            if t > warmup:
                area[j] += occ[j] * (t - max(last[j], warmup))
            last[j] = t
            release(state, j)
            n_released += 1
        else:
            i = ev.target
            n_arrivals += 1
            counted = t >= warmup
            outcome = admit(state, i, policy, mode, adm_rng[i])
            if type(outcome) is Admitted:
                j = outcome.partition
                n_admitted += 1
                if t > warmup:
                    area[j] += (occ[j] - 1) * (t - max(last[j], warmup))
                last[j] = t
                if exp_holding:
                    h = next_interarrival(1.0 / hold, hold_rng[i])
                else:
                    h = hold
                heapq.heappush(heap, Event(t + h, DEPARTURE, seq, j, n_admitted))
                seq += 1
                if counted:
                    admissions[i] += 1
            else:
                n_blocked += 1
                if counted:
                    if outcome.reason is BlockReason.ALL_PARTITIONS_FULL:
                        blocks_full[i] += 1
                    else:
                        blocks_policy[i] += 1
            if counted:
                arrivals[i] += 1
            dt = next_interarrival(rates[i], arr_rng[i])
            heapq.heappush(heap, Event(t + dt, ARRIVAL, seq, i))
            seq += 1
        if check_invariants:
            state.check()

    for j in range(k):
        area[j] += occ[j] * (sim_time - max(last[j], warmup))
    if n_arrivals != n_admitted + n_blocked or n_admitted != n_released + sum(occ):
        raise ConsistencyError("request conservation violated")

    return MetricsReport(
        arrivals=tuple(arrivals),
        admissions=tuple(admissions),
        blocks_full=tuple(blocks_full),
        blocks_policy=tuple(blocks_policy),
        occupancy_time=tuple(area),
        horizon=sim_time - warmup,
        offered_rates=tuple(rates),
        traffic_rates=scenario.traffic_rates(),
        capacities=caps,
        holding_time=hold,
        scenario_id=scenario.scenario_id,
        policy_column=scenario.policy_column if scenario.policy is not None else None,
        rate_scale=scenario.rate_scale,
        population_multiplier=scenario.population_multiplier,
        seed=seed,
    )


SWEEP_AXES = ("rate-scale", "population-multiplier", "policy-column", "seed")


def sweep_scenarios(
    base: Scenario,
    axis: str,
    values: Sequence,
    matrix: ControlMatrix | None = None,
) -> list[Scenario]:
    if axis not in SWEEP_AXES:
        raise ConfigurationError(f"unknown sweep axis {axis!r}; choose from {', '.join(SWEEP_AXES)}")
    out = []
    for v in values:
        sid = f"{axis}={v if v is not None else 'none'}"
        if axis == "rate-scale":
            sc = replace(base, rate_scale=float(v))
        elif axis == "population-multiplier":
            sc = replace(base, population_multiplier=float(v))
        elif axis == "seed":
            sc = replace(base, seed=int(v))
        elif v is None:
            sc = replace(base, policy=None, policy_column=None)
        else:
            if matrix is None:
                matrix = load_table1()
            sc = replace(base, policy=select_policy_vector(matrix, int(v)), policy_column=int(v))
        out.append(replace(sc, scenario_id=sid))
    return out


def run_many(scenarios: Sequence[Scenario], jobs: int = 1) -> list[MetricsReport]:
    """Run independent scenarios, returning reports in input order."""
    if jobs < 1:
        raise ConfigurationError("jobs must be at least 1")
    for sc in scenarios:
        sc.validate()
    if jobs == 1 or len(scenarios) < 2:
        return [run(sc) for sc in scenarios]
    with ProcessPoolExecutor(max_workers=min(jobs, len(scenarios))) as pool:
        return list(pool.map(run, scenarios))


def sweep(
    base: Scenario,
    axis: str,
    values: Sequence,
    matrix: ControlMatrix | None = None,
    jobs: int = 1,
) -> list[MetricsReport]:
    """One independent run per value of ``axis``.

    ``policy-column`` values are 1-based matrix columns, or ``None`` to
    disable the policy.
    """
    return run_many(sweep_scenarios(base, axis, values, matrix), jobs=jobs)
