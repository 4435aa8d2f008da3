"""Partitioned server state and the admission control matrix.

Matrix coordinates (rows, policy columns) are 1-based, matching how the
control table is printed and addressed on the command line.  Partition and
class indices used by the simulator are 0-based.
"""

from __future__ import annotations

import io
from dataclasses import dataclass, field
from importlib import resources
from pathlib import Path
from typing import Iterable

import numpy as np

DEFAULT_COLUMN_TOLERANCE = 0.05
# slack for float summation of two-decimal entries
_SUM_EPS = 1e-9


class ConfigurationError(ValueError):
    """Invalid user-supplied configuration or argument."""


class ConsistencyError(RuntimeError):
    """Internal simulation invariant broken; the run must abort."""


class ControlMatrix:
    """k sections by n policy columns of admission probabilities."""

    def __init__(self, entries):
        arr = np.array(entries, dtype=float)
        if arr.ndim != 2 or arr.shape[0] < 1 or arr.shape[1] < 1:
            raise ConfigurationError(
                f"control matrix must be a non-empty 2-D grid, got shape {arr.shape}"
            )
        arr.setflags(write=False)
        self._entries = arr

    @property
    def entries(self) -> np.ndarray:
        return self._entries

    @property
    def k(self) -> int:
        return self._entries.shape[0]

    @property
    def n(self) -> int:
        return self._entries.shape[1]

    def __eq__(self, other):
        if not isinstance(other, ControlMatrix):
            return NotImplemented
        return np.array_equal(self._entries, other._entries)

    def __repr__(self):
        return f"ControlMatrix(k={self.k}, n={self.n})"

    @classmethod
    def from_csv(cls, text: str) -> "ControlMatrix":
        rows = []
        for lineno, line in enumerate(text.splitlines(), start=1):
            if not line.strip():
                continue
            try:
                rows.append([float(tok) for tok in line.split(",")])
            except ValueError:
                raise ConfigurationError(f"line {lineno}: non-numeric entry in {line!r}") from None
        if not rows:
            raise ConfigurationError("control matrix file is empty")
        widths = {len(r) for r in rows}
        if len(widths) != 1:
            raise ConfigurationError(f"ragged control matrix rows (widths {sorted(widths)})")
        return cls(rows)

    def to_csv(self) -> str:
        buf = io.StringIO()
        for row in self._entries:
            buf.write(",".join(repr(float(x)) for x in row))
            buf.write("\n")
        return buf.getvalue()


@dataclass(frozen=True)
class PolicyVector:
    """Per-partition admission probabilities, one column of a control matrix."""

    probs: tuple[float, ...]

    def __post_init__(self):
        probs = tuple(float(p) for p in self.probs)
        for j, p in enumerate(probs):
            if not 0.0 <= p <= 1.0:
                raise ConfigurationError(f"policy entry {j} = {p} outside [0, 1]")
        object.__setattr__(self, "probs", probs)

    @classmethod
    def uniform(cls, k: int, p: float = 1.0) -> "PolicyVector":
        return cls((p,) * k)

    def __len__(self):
        return len(self.probs)

    def __getitem__(self, j):
        return self.probs[j]

    def __iter__(self):
        return iter(self.probs)


@dataclass
class ServerState:
    capacities: tuple[int, ...]
    occupancies: list[int] = field(default_factory=list)
    clock: float = 0.0

    @property
    def total_capacity(self) -> int:
        return sum(self.capacities)

    @property
    def k(self) -> int:
        return len(self.capacities)

    def is_full(self, j: int) -> bool:
        return self.occupancies[j] >= self.capacities[j]

    def check(self):
        for j, (q, c) in enumerate(zip(self.occupancies, self.capacities)):
            if not 0 <= q <= c:
                raise ConsistencyError(f"partition {j} occupancy {q} outside [0, {c}]")


@dataclass(frozen=True)
class TrafficClass:
    index: int
    arrival_rate: float

    def __post_init__(self):
        if self.arrival_rate < 0:
            raise ConfigurationError(f"class {self.index} has negative arrival rate")


@dataclass(frozen=True)
class Violation:
    kind: str  # "out_of_range" or "column_sum"
    column: int
    value: float
    row: int | None = None

    def __str__(self):
        if self.kind == "out_of_range":
            return f"entry ({self.row}, {self.column}) = {self.value!r} outside [0, 1]"
        return f"column {self.column} sums to {self.value:.6g}"


def new_server_state(capacities: Iterable[int]) -> ServerState:
    caps = tuple(int(c) for c in capacities)
    if not caps:
        raise ConfigurationError("at least one section is required")
    if any(c < 0 for c in caps):
        raise ConfigurationError(f"negative section capacity in {caps}")
    return ServerState(capacities=caps, occupancies=[0] * len(caps))


def validate_control_matrix(
    matrix: ControlMatrix, tolerance: float = DEFAULT_COLUMN_TOLERANCE
) -> list[Violation]:
    """List out-of-range entries and columns whose sum strays from 1.

    An empty list means the matrix is valid.  Violations are returned, never
    raised.
    """
    report = []
    entries = matrix.entries
    for r, c in zip(*np.nonzero((entries < 0.0) | (entries > 1.0))):
        report.append(Violation("out_of_range", int(c) + 1, float(entries[r, c]), int(r) + 1))
    for c in range(matrix.n):
        s = float(np.sum(entries[:, c]))
        if abs(s - 1.0) > tolerance + _SUM_EPS:
            report.append(Violation("column_sum", c + 1, s))
    return report


def select_policy_vector(matrix: ControlMatrix, column_index: int) -> PolicyVector:
    """Return policy column ``column_index`` (1-based) in row order."""
    if not 1 <= column_index <= matrix.n:
        raise ConfigurationError(
            f"policy column {column_index} out of range 1..{matrix.n}"
        )
    col = matrix.entries[:, column_index - 1]
    if np.any((col < 0) | (col > 1)):
        raise ConfigurationError(f"policy column {column_index} has entries outside [0, 1]")
    return PolicyVector(tuple(float(x) for x in col))


def table1_text() -> str:
    return resources.files("vodsim").joinpath("data/table1.csv").read_text()


def load_table1() -> ControlMatrix:
    """The 20 x 10 reference control matrix shipped with the package."""
    return ControlMatrix.from_csv(table1_text())


def read_matrix(path: str | Path) -> ControlMatrix:
    try:
        text = Path(path).read_text()
    except OSError as exc:
        raise ConfigurationError(f"cannot read matrix file {path}: {exc.strerror}") from None
    return ControlMatrix.from_csv(text)


def write_matrix(matrix: ControlMatrix, path: str | Path) -> None:
    Path(path).write_text(matrix.to_csv())
