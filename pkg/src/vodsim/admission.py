"""Probabilistic admission with overflow across server partitions.

A request of class ``i`` first looks at partition ``i``.  Full partitions are
skipped.  At a partition with a free port a Bernoulli draw with that
partition's policy probability decides admission; what happens on a failed
draw depends on :class:`CascadeMode`.
"""

from __future__ import annotations

import enum
from dataclasses import dataclass

from .core import ConsistencyError, PolicyVector, ServerState


class Scan(enum.Enum):
    WRAP_AROUND = "wrap"
    FORWARD_ONLY = "forward"


class OnReject(enum.Enum):
    CONTINUE = "continue"
    DROP = "drop"


@dataclass(frozen=True)
class CascadeMode:
    scan: Scan = Scan.WRAP_AROUND
    on_policy_reject: OnReject = OnReject.CONTINUE


class BlockReason(enum.Enum):
    ALL_PARTITIONS_FULL = "full"
    POLICY_REJECTED = "policy"


@dataclass(frozen=True)
class Admitted:
    partition: int
    probability: float


@dataclass(frozen=True)
class Blocked:
    reason: BlockReason


def scan_order(k: int, start: int, scan: Scan) -> range | list[int]:
    if scan is Scan.FORWARD_ONLY:
        return range(start, k)
    return [(start + s) % k for s in range(k)]


def admit(
    state: ServerState,
    class_index: int,
    policy: PolicyVector,
    mode: CascadeMode,
    rng,
) -> Admitted | Blocked:
    """Try to place one request of ``class_index`` and update ``state``.

    Probabilities of exactly 0 or 1 are decided without consuming a draw.
    """
    k = len(state.capacities)
    if not 0 <= class_index < k:
        raise IndexError(f"class {class_index} outside 0..{k - 1}")
    occ = state.occupancies
    caps = state.capacities
    saw_free = False
    for j in scan_order(k, class_index, mode.scan):
        if occ[j] >= caps[j]:
            continue
        saw_free = True
        p = policy.probs[j]
        if p >= 1.0 or (p > 0.0 and rng.random() < p):
            occ[j] += 1
            return Admitted(j, p)
        if mode.on_policy_reject is OnReject.DROP:
            return Blocked(BlockReason.POLICY_REJECTED)
    if saw_free:
        return Blocked(BlockReason.POLICY_REJECTED)
    return Blocked(BlockReason.ALL_PARTITIONS_FULL)


def release(state: ServerState, partition_index: int) -> ServerState:
    if state.occupancies[partition_index] < 1:
        raise ConsistencyError(f"release on empty partition {partition_index}")
    state.occupancies[partition_index] -= 1
    return state
