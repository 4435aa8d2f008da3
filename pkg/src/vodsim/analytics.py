"""Closed-form checks and exact oracles for the partitioned loss system."""

from __future__ import annotations

import itertools
import math
from dataclasses import dataclass
from typing import Sequence

import numpy as np
import scipy.linalg
import scipy.sparse
import scipy.sparse.linalg

from .admission import CascadeMode, OnReject, scan_order
from .core import ConfigurationError, PolicyVector

MAX_CTMC_STATES = 100_000
DENSE_STATE_LIMIT = 2_000
RESIDUAL_TOL = 1e-10


class StateSpaceTooLarge(ConfigurationError):
    pass


def max_streams(disk_rate: float, playback_rate: float) -> int:
    """Streams a server with ``disk_rate`` bandwidth can sustain at ``playback_rate``."""
    if playback_rate <= 0:
        raise ConfigurationError("playback rate must be positive")
    if disk_rate < 0:
        raise ConfigurationError("disk bandwidth must be non-negative")
    return math.floor(disk_rate / playback_rate)


@dataclass(frozen=True)
class ReservedBandwidthParams:
    links: int  # J
    active_links: int  # K
    burst: float  # B_r, Mb
    volume: float  # M, Mb
    duration: float  # gamma, s
    link_bandwidths: tuple[float, ...] = ()

    def __post_init__(self):
        if not 0 <= self.active_links <= self.links:
            raise ConfigurationError("need 0 <= active_links <= links")
        if self.duration <= 0:
            raise ConfigurationError("playback duration must be positive")
        if self.link_bandwidths and len(self.link_bandwidths) != self.links:
            raise ConfigurationError("need one bandwidth per link")
        if any(b < 0 for b in self.link_bandwidths):
            raise ConfigurationError("link bandwidths must be non-negative")


@dataclass(frozen=True)
class ReservedBandwidth:
    rate: float
    feasible: tuple[bool, ...]

    @property
    def infeasible_links(self) -> list[int]:
        return [j for j, ok in enumerate(self.feasible) if not ok]


def reserved_bandwidth(params: ReservedBandwidthParams) -> ReservedBandwidth:
    k, j = params.active_links, params.links
    rate = (k * params.burst + (j - k) * params.volume) / params.duration
    return ReservedBandwidth(rate, tuple(rate <= a for a in params.link_bandwidths))


def erlang_b(servers: int, load: float) -> float:
    """Erlang loss probability via the stable recursion."""
    if servers < 0 or load < 0:
        raise ConfigurationError("servers and load must be non-negative")
    if int(servers) != servers:
        raise ConfigurationError("server count must be an integer")
    b = 1.0
    for c in range(1, int(servers) + 1):
        b = load * b / (c + load * b)
    return b


@dataclass(frozen=True)
class CascadeResult:
    """Admission probability at each scanned partition and in total.

    ``steps`` pairs each partition (in scan order) with the probability the
    request ends up admitted there.
    """

    steps: tuple[tuple[int, float], ...]
    total: float

    def by_partition(self) -> dict[int, float]:
        return dict(self.steps)


def cascade_admit_probability(
    availability: Sequence[float],
    policy: PolicyVector | Sequence[float],
    start_class: int,
    mode: CascadeMode = CascadeMode(),
) -> CascadeResult:
    """Overflow admission probability under independent partition availability.

    A partition is free with probability ``availability[j]`` independently of
    the others, in which case a request reaching it is admitted with
    probability ``policy[j]``.
    """
    probs = tuple(policy)
    k = len(availability)
    if len(probs) != k:
        raise ConfigurationError("availability and policy lengths differ")
    if not 0 <= start_class < k:
        raise ConfigurationError(f"start class {start_class} outside 0..{k - 1}")
    reach = 1.0
    steps = []
    for j in scan_order(k, start_class, mode.scan):
        a, p = availability[j], probs[j]
        step = reach * a * p
        steps.append((j, step))
        if mode.on_policy_reject is OnReject.DROP:
            reach *= 1.0 - a
        else:
            reach *= 1.0 - a * p
    return CascadeResult(tuple(steps), sum(s for _, s in steps))


@dataclass(frozen=True)
class CTMCResult:
    states: tuple[tuple[int, ...], ...]
    distribution: np.ndarray
    class_blocking: tuple[float, ...]
    blocking: float
    residual: float


def _stationary(gen: scipy.sparse.csr_matrix) -> np.ndarray:
    n = gen.shape[0]
    a = gen.T.tolil()
    a[n - 1, :] = np.ones(n)
    a = a.tocsc()
    b = np.zeros(n)
    b[n - 1] = 1.0
    if n <= DENSE_STATE_LIMIT:
        return scipy.linalg.solve(a.toarray(), b)
    ilu = scipy.sparse.linalg.spilu(a, drop_tol=1e-6)
    precond = scipy.sparse.linalg.LinearOperator(a.shape, ilu.solve)
    pi, info = scipy.sparse.linalg.gmres(a, b, M=precond, rtol=1e-13, atol=0.0, restart=50, maxiter=500)
    if info != 0 or np.max(np.abs(gen.T @ pi)) > RESIDUAL_TOL:
        pi = scipy.sparse.linalg.spsolve(a, b)
    return pi


def ctmc_blocking(
    capacities: Sequence[int],
    policy: PolicyVector | Sequence[float],
    rates: Sequence[float],
    mu: float,
    mode: CascadeMode = CascadeMode(),
) -> CTMCResult:
    """Exact per-class blocking with exponential holding times.

    Builds the chain over occupancy vectors, routes each arrival with the
    same cascade as the simulator, and reads blocking off the stationary
    distribution (Poisson arrivals see time averages).
    """
    caps = tuple(int(c) for c in capacities)
    probs = tuple(policy)
    k = len(caps)
    if len(probs) != k or len(rates) != k:
        raise ConfigurationError("capacities, policy and rates must have equal length")
    if mu <= 0:
        raise ConfigurationError("service rate must be positive")
    size = math.prod(c + 1 for c in caps)
    if size > MAX_CTMC_STATES:
        raise StateSpaceTooLarge(
            f"state space has {size} states, limit is {MAX_CTMC_STATES}"
        )

    states = list(itertools.product(*(range(c + 1) for c in caps)))
    strides = [math.prod(c + 1 for c in caps[j + 1:]) for j in range(k)]
    block = np.zeros((size, k))
    rows, cols, vals = [], [], []
    for s, q in enumerate(states):
        avail = [1.0 if q[j] < caps[j] else 0.0 for j in range(k)]
        for i, lam in enumerate(rates):
            routing = cascade_admit_probability(avail, probs, i, mode)
            block[s, i] = 1.0 - routing.total
            if lam <= 0:
                continue
            for j, p in routing.steps:
                if p > 0:
                    rows.append(s)
                    cols.append(s + strides[j])
                    vals.append(lam * p)
        for j in range(k):
            if q[j] > 0:
                rows.append(s)
                cols.append(s - strides[j])
                vals.append(q[j] * mu)
    gen = scipy.sparse.coo_matrix((vals, (rows, cols)), shape=(size, size)).tocsr()
    gen = gen - scipy.sparse.diags(np.asarray(gen.sum(axis=1)).ravel())
    gen = gen.tocsr()

    pi = _stationary(gen)
    pi = np.clip(pi, 0.0, None)
    pi /= pi.sum()
    residual = float(np.max(np.abs(gen.T @ pi)))

    per_class = tuple(float(x) for x in pi @ block)
    total = float(sum(rates))
    overall = sum(lam * b for lam, b in zip(rates, per_class)) / total if total > 0 else 0.0
    return CTMCResult(tuple(states), pi, per_class, overall, residual)
