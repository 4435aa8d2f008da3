import functools
import itertools
import random
from collections import defaultdict
from fractions import Fraction

import pytest
from hypothesis import given
from hypothesis import strategies as st

from vodsim.admission import (
    Admitted,
    Blocked,
    BlockReason,
    CascadeMode,
    OnReject,
    Scan,
    admit,
    release,
)
from vodsim.analytics import cascade_admit_probability
from vodsim.core import ConsistencyError, PolicyVector, new_server_state

# policy grid: every probability is a multiple of 1/CELLS, so the outcome of
# ``u < p`` only depends on which of CELLS equal cells u lands in
CELLS = 4
GRID = [Fraction(m, CELLS) for m in range(CELLS + 1)]
MODES = [CascadeMode(s, r) for s in Scan for r in OnReject]


class _NeedDraw(Exception):
    pass


class _Script:
    def __init__(self, cells):
        self.cells = list(cells)
        self.used = 0

    def random(self):
        if self.used == len(self.cells):
            raise _NeedDraw
        u = self.cells[self.used] / CELLS
        self.used += 1
        return u


def _key(outcome):
    if isinstance(outcome, Admitted):
        return ("admit", outcome.partition)
    return ("block", outcome.reason)


def explore(caps, occ, cls, probs, mode):
    """Exact outcome distribution of ``admit`` by branching on every draw it makes."""
    dist = defaultdict(Fraction)
    stack = [()]
    while stack:
        prefix = stack.pop()
        state = new_server_state(caps)
        state.occupancies[:] = occ
        rng = _Script(prefix)
        try:
            out = admit(state, cls, PolicyVector(tuple(float(p) for p in probs)), mode, rng)
        except _NeedDraw:
            stack.extend(prefix + (c,) for c in range(CELLS))
            continue
        assert rng.used == len(prefix)
        expected = list(occ)
        if isinstance(out, Admitted):
            expected[out.partition] += 1
        assert state.occupancies == expected
        state.check()
        dist[_key(out)] += Fraction(1, CELLS ** len(prefix))
    return dict(dist)


def oracle(full, cls, probs, mode):
    """Enumerate a pre-drawn Bernoulli outcome for every partition."""
    k = len(full)
    if mode.scan is Scan.WRAP_AROUND:
        order = [(cls + s) % k for s in range(k)]
    else:
        order = list(range(cls, k))
    dist = defaultdict(Fraction)
    for bits in itertools.product((0, 1), repeat=k):
        w = Fraction(1)
        for b, p in zip(bits, probs):
            w *= p if b else 1 - p
        if w == 0:
            continue
        free = [j for j in order if not full[j]]
        key = ("block", BlockReason.ALL_PARTITIONS_FULL)
        for j in free:
            if bits[j]:
                key = ("admit", j)
                break
            key = ("block", BlockReason.POLICY_REJECTED)
            if mode.on_policy_reject is OnReject.DROP:
                break
        dist[key] += w
    return dict(dist)


def _cases():
    for k in (1, 2, 3):
        cap_sets = [(1,) * k, (2,) * k, tuple(2 - (j % 2) for j in range(k))]
        for caps in cap_sets:
            for full in itertools.product((False, True), repeat=k):
                occ = [c if f else c - 1 for c, f in zip(caps, full)]
                yield k, caps, occ, full


def _policies(k):
    grid = GRID if k < 3 else [GRID[0], GRID[1], GRID[3], GRID[4]]
    return itertools.product(grid, repeat=k)


def test_admit_matches_exhaustive_enumeration():
    checked = 0
    for k, caps, occ, full in _cases():
        for probs in _policies(k):
            for cls in range(k):
                for mode in MODES:
                    got = explore(caps, occ, cls, probs, mode)
                    want = oracle(full, cls, probs, mode)
                    assert got == want, (caps, occ, cls, probs, mode)
                    assert sum(got.values()) == 1
                    checked += 1
    assert checked > 5000


def test_enumeration_agrees_with_cascade_formula():
    for k, caps, occ, full in _cases():
        avail = [0.0 if f else 1.0 for f in full]
        for probs in _policies(k):
            for cls in range(k):
                for mode in MODES:
                    want = oracle(full, cls, probs, mode)
                    res = cascade_admit_probability(avail, [float(p) for p in probs], cls, mode)
                    for j, p in res.steps:
                        assert Fraction(p) == want.get(("admit", j), 0)


@functools.cache
def _admit_total(full, cls, probs, mode):
    return sum(v for (kind, _), v in oracle(full, cls, probs, mode).items() if kind == "admit")


def test_admission_monotone_in_policy():
    for k, caps, occ, full in _cases():
        for probs in _policies(k):
            for cls in range(k):
                for mode in MODES:
                    base = _admit_total(full, cls, probs, mode)
                    for j in range(k):
                        for higher in (p for p in GRID if p > probs[j]):
                            raised = probs[:j] + (higher,) + probs[j + 1:]
                            assert _admit_total(full, cls, raised, mode) >= base


def test_certain_admission_at_home():
    state = new_server_state([3, 3])
    out = admit(state, 0, PolicyVector((1.0, 1.0)), CascadeMode(), random.Random(0))
    assert out == Admitted(0, 1.0)
    assert state.occupancies == [1, 0]


def test_everything_full_blocks():
    state = new_server_state([1, 2])
    state.occupancies[:] = [1, 2]
    for mode in MODES:
        out = admit(state, 1, PolicyVector((0.3, 0.9)), mode, random.Random(0))
        assert out == Blocked(BlockReason.ALL_PARTITIONS_FULL)
    assert state.occupancies == [1, 2]


def test_hand_traced_overflow():
    state = new_server_state([1, 1])
    state.occupancies[:] = [1, 0]
    rng = _Script([])
    rng.random = lambda: 0.3
    out = admit(state, 0, PolicyVector((0.5, 0.5)), CascadeMode(Scan.WRAP_AROUND, OnReject.CONTINUE), rng)
    assert out == Admitted(1, 0.5)
    assert state.occupancies == [1, 1]


def test_forward_only_does_not_wrap():
    state = new_server_state([1, 1])
    state.occupancies[:] = [0, 1]
    out = admit(state, 1, PolicyVector((1.0, 1.0)), CascadeMode(Scan.FORWARD_ONLY), random.Random(0))
    assert out == Blocked(BlockReason.ALL_PARTITIONS_FULL)
    out = admit(state, 1, PolicyVector((1.0, 1.0)), CascadeMode(Scan.WRAP_AROUND), random.Random(0))
    assert out == Admitted(0, 1.0)


@given(
    caps=st.lists(st.integers(0, 3), min_size=1, max_size=5),
    data=st.data(),
)
def test_pure_loss_blocks_iff_all_full(caps, data):
    state = new_server_state(caps)
    state.occupancies[:] = [data.draw(st.integers(0, c)) for c in caps]
    cls = data.draw(st.integers(0, len(caps) - 1))
    all_full = all(q == c for q, c in zip(state.occupancies, caps))
    out = admit(state, cls, PolicyVector.uniform(len(caps)), CascadeMode(), random.Random(0))
    assert isinstance(out, Blocked) == all_full


@given(caps=st.lists(st.integers(0, 3), min_size=1, max_size=5), seed=st.integers(0, 100))
def test_zero_policy_never_admits(caps, seed):
    state = new_server_state(caps)
    rng = random.Random(seed)
    for mode in MODES:
        for cls in range(len(caps)):
            assert isinstance(admit(state, cls, PolicyVector.uniform(len(caps), 0.0), mode, rng), Blocked)
    assert state.occupancies == [0] * len(caps)


def test_release():
    state = new_server_state([2])
    state.occupancies[0] = 1
    release(state, 0)
    assert state.occupancies == [0]
    with pytest.raises(ConsistencyError):
        release(state, 0)


@given(caps=st.lists(st.integers(1, 3), min_size=1, max_size=4), seed=st.integers(0, 1000))
def test_admit_then_release_restores_state(caps, seed):
    state = new_server_state(caps)
    rng = random.Random(seed)
    held = []
    for step in range(20):
        out = admit(state, step % len(caps), PolicyVector.uniform(len(caps), 0.5), CascadeMode(), rng)
        if isinstance(out, Admitted):
            held.append(out.partition)
        state.check()
    for j in held:
        release(state, j)
        state.check()
    assert state.occupancies == [0] * len(caps)
