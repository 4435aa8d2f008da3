"""Cluster traffic ladders, Poisson request streams and random control matrices."""

from __future__ import annotations

import math
import random
from dataclasses import dataclass

import numpy as np

from .core import ConfigurationError, ControlMatrix

DEFAULT_PLAYBACK_RATE = 4.0  # Mb/s per stream

# generated matrix entries are whole hundredths in [MIN_UNITS, MAX_UNITS]
_UNITS = 100
_MIN_UNITS = 1
_MAX_UNITS = 10


@dataclass(frozen=True)
class ClusterRateLadder:
    min_rate: float
    max_rate: float
    count: int
    rates: tuple[float, ...]


@dataclass(frozen=True)
class RateMapping:
    playback_rate: float = DEFAULT_PLAYBACK_RATE
    scale: float = 1.0

    def __post_init__(self):
        if not self.playback_rate > 0:
            raise ConfigurationError(f"playback rate must be positive, got {self.playback_rate}")
        if not self.scale > 0:
            raise ConfigurationError(f"rate mapping scale must be positive, got {self.scale}")


def cluster_rates(min_rate: float, max_rate: float, count: int) -> ClusterRateLadder:
    """Evenly spaced traffic rates (Mb/s), one per client cluster."""
    if count < 1:
        raise ConfigurationError("cluster count must be at least 1")
    if max_rate < min_rate:
        raise ConfigurationError(f"max rate {max_rate} below min rate {min_rate}")
    if min_rate < 0:
        raise ConfigurationError("traffic rates must be non-negative")
    if count == 1:
        if max_rate != min_rate:
            raise ConfigurationError("a single cluster needs min_rate == max_rate")
        rates = (float(min_rate),)
    else:
        step = (max_rate - min_rate) / (count - 1)
        rates = tuple(min_rate + i * step for i in range(count - 1)) + (float(max_rate),)
    return ClusterRateLadder(float(min_rate), float(max_rate), count, rates)


def request_rate(traffic_rate: float, mapping: RateMapping) -> float:
    """Requests per second carried by ``traffic_rate`` Mb/s of demand."""
    if traffic_rate < 0:
        raise ConfigurationError(f"negative traffic rate {traffic_rate}")
    return mapping.scale * traffic_rate / mapping.playback_rate


def interarrival_from_uniform(u: float, rate: float) -> float:
    return -math.log(u) / rate


def next_interarrival(rate: float, rng) -> float | None:
    """Exponential gap with mean ``1/rate``; ``None`` for a silent stream.

    ``rng`` only needs a ``random()`` method returning floats in [0, 1).
    """
    if rate <= 0:
        return None
    u = rng.random()
    while u <= 0.0:
        u = rng.random()
    return -math.log(u) / rate


def substream(seed: int, purpose: int, index: int) -> random.Random:
    """Independent generator keyed on (seed, purpose, index).

    Keys are mixed through ``SeedSequence`` so that each stream is stable
    regardless of how many other streams exist.
    """
    state = np.random.SeedSequence(entropy=int(seed), spawn_key=(purpose, index)).generate_state(4)
    return random.Random(int.from_bytes(state.tobytes(), "little"))


def generate_matrix(k: int, n: int, seed: int) -> ControlMatrix:
    """Random k x n matrix whose columns are compositions of 1.00 in hundredths.

    Every entry lies in [0.01, 0.10].
    """
    if k < 2 or n < 1:
        raise ConfigurationError(f"need k >= 2 and n >= 1, got k={k}, n={n}")
    if k * _MIN_UNITS > _UNITS or k * _MAX_UNITS < _UNITS:
        raise ConfigurationError(
            f"no column of {k} entries in [0.01, 0.10] can sum to 1"
        )
    rng = np.random.default_rng(seed)
    cols = []
    for _ in range(n):
        units = np.full(k, _MIN_UNITS)
        for _ in range(_UNITS - k * _MIN_UNITS):
            open_slots = np.flatnonzero(units < _MAX_UNITS)
            units[rng.choice(open_slots)] += 1
        cols.append(units)
    grid = np.column_stack(cols)
    return ControlMatrix([[round(int(u) / _UNITS, 2) for u in row] for row in grid])
