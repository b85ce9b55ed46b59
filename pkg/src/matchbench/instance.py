"""Valuation instances, matchings, generators and instance file I/O."""

from __future__ import annotations

import enum
import json
from dataclasses import dataclass
from pathlib import Path

import numpy as np

from .errors import ArgumentError, ParseError, StructuralError, ValidationError

UNASSIGNED = -1


class PreferenceClass(str, enum.Enum):
    DICHOTOMOUS = "dichotomous"
    NORMALIZED = "normalized"
    UNIT_RANGE = "unit_range"

    @classmethod
    def parse(cls, text):
        if isinstance(text, cls):
            return text
        key = str(text).strip().lower().replace("-", "_")
        for member in cls:
            if member.value == key:
                return member
        raise ArgumentError(f"unknown preference class {text!r}")


def _check_class(values, pref_class):
    if pref_class is PreferenceClass.DICHOTOMOUS:
        if not np.all((values == 0.0) | (values == 1.0)):
            raise ValidationError("dichotomous instance has an entry outside {0, 1}")
    elif pref_class is PreferenceClass.NORMALIZED:
        if not np.all((values >= 0.0) & (values <= 1.0)):
            raise ValidationError("normalized instance has an entry outside [0, 1]")
    elif pref_class is PreferenceClass.UNIT_RANGE:
        if values.shape[0] < 2:
            raise ValidationError("unit-range instances need n >= 2")
        if not np.all((values >= 0.0) & (values <= 1.0)):
            raise ValidationError("unit-range instance has an entry outside [0, 1]")
        if not (np.all(values.max(axis=1) == 1.0) and np.all(values.min(axis=1) == 0.0)):
            raise ValidationError("unit-range rows must have max exactly 1 and min exactly 0")


@dataclass(frozen=True, eq=False)
class Instance:
    """An n-by-n valuation matrix tagged with its preference class.

    ``values[a, i]`` is the value agent ``a`` has for item ``i``.  The matrix
    is copied to a read-only float64 array and validated on construction.
    """

    values: np.ndarray
    pref_class: PreferenceClass = PreferenceClass.NORMALIZED

    def __post_init__(self):
        values = np.array(self.values, dtype=np.float64, copy=True)
        if values.ndim != 2 or values.shape[0] != values.shape[1] or values.shape[0] < 1:
            raise StructuralError(f"values must be a non-empty square matrix, got shape {values.shape}")
        if not np.all(np.isfinite(values)):
            raise ValidationError("values must be finite")
        pref_class = PreferenceClass.parse(self.pref_class)
        _check_class(values, pref_class)
        values.setflags(write=False)
        object.__setattr__(self, "values", values)
        object.__setattr__(self, "pref_class", pref_class)

    @property
    def n(self) -> int:
        return self.values.shape[0]

    @property
    def is_dichotomous(self) -> bool:
        return self.pref_class is PreferenceClass.DICHOTOMOUS

    def __eq__(self, other):
        if not isinstance(other, Instance):
            return NotImplemented
        return self.pref_class is other.pref_class and np.array_equal(self.values, other.values)

    def __hash__(self):
        return hash((self.pref_class, self.values.tobytes()))

    def __repr__(self):
        return f"Instance(n={self.n}, class={self.pref_class.value})"

    def rows(self):
        """Values as nested Python lists (fast element access in pure Python)."""
        return self.values.tolist()

    def one_graph(self):
        """Adjacency lists of the graph of 1-valued (agent, item) pairs."""
        return [[i for i in range(self.n) if self.values[a, i] == 1.0] for a in range(self.n)]


@dataclass(frozen=True)
class Matching:
    """Assignment of items to agents; ``assignment[a]`` is an item or ``UNASSIGNED``."""

    assignment: tuple

    def __post_init__(self):
        assignment = tuple(int(i) for i in self.assignment)
        used = [i for i in assignment if i != UNASSIGNED]
        if any(i < 0 or i >= len(assignment) for i in used):
            raise StructuralError("matching references an item outside 0..n-1")
        if len(set(used)) != len(used):
            raise StructuralError("matching assigns an item twice")
        object.__setattr__(self, "assignment", assignment)

    @classmethod
    def empty(cls, n):
        return cls((UNASSIGNED,) * n)

    @property
    def n(self) -> int:
        return len(self.assignment)

    @property
    def is_complete(self) -> bool:
        return UNASSIGNED not in self.assignment

    @property
    def size(self) -> int:
        return sum(1 for i in self.assignment if i != UNASSIGNED)

    def pairs(self):
        return [(a, i) for a, i in enumerate(self.assignment) if i != UNASSIGNED]

    def __getitem__(self, agent):
        return self.assignment[agent]

    def __iter__(self):
        return iter(self.assignment)

    def __len__(self):
        return len(self.assignment)


def complete_lowest_index(assignment):
    """Pair unassigned agents with free items, both in ascending index order."""
    assignment = list(assignment)
    n = len(assignment)
    used = set(i for i in assignment if i != UNASSIGNED)
    free = iter(i for i in range(n) if i not in used)
    for a in range(n):
        if assignment[a] == UNASSIGNED:
            assignment[a] = next(free)
    return tuple(assignment)


def social_welfare(inst: Instance, m) -> float:
    """Sum of ``values[a, m[a]]`` over assigned agents, accumulated in agent order."""
    assignment = m.assignment if isinstance(m, Matching) else tuple(m)
    if len(assignment) != inst.n:
        raise StructuralError(f"matching has {len(assignment)} agents, instance has {inst.n}")
    if not isinstance(m, Matching):
        Matching(assignment)
    total = 0.0
    for a, i in enumerate(assignment):
        if i != UNASSIGNED:
            total += float(inst.values[a, i])
    return total


# --- generators -------------------------------------------------------------


def gen_fact_instance(k: int, z: int) -> Instance:
    """Dichotomous instance on which RSD loses a factor of about 2.28.

    With 1-based indices, agent ``a`` 1-values item ``i`` when ``a == i <= k``
    or when ``a <= k/2`` and ``k/2 <= i <= k``.  The ``z`` remaining agents
    and items are worthless to everyone.
    """
    if k < 2 or k % 2:
        raise ArgumentError(f"k must be an even integer >= 2, got {k}")
    if z < 0:
        raise ArgumentError(f"z must be nonnegative, got {z}")
    n = k + z
    values = np.zeros((n, n))
    idx = np.arange(k)
    values[idx, idx] = 1.0
    half = k // 2
    # 1-based band {k/2, ..., k} is 0-based columns half-1 .. k-1
    values[:half, half - 1:k] = 1.0
    return Instance(values, PreferenceClass.DICHOTOMOUS)


def gen_hardness_chunked(n: int, k: int, eps: float) -> Instance:
    """k diagonal copies of the indistinguishable-agents gadget.

    In every chunk of ``n/k`` agents and items, the chunk's first agent values
    the chunk's first item 1, the other agents value it ``eps/k``, and
    everything else is 0.
    """
    if n < 1 or k < 1:
        raise ArgumentError("n and k must be positive")
    if n % k:
        raise ArgumentError(f"k={k} does not divide n={n}")
    if not eps > 0:
        raise ArgumentError("eps must be positive")
    small = eps / k
    if small >= 1:
        raise ArgumentError("eps/k must be below 1")
    size = n // k
    values = np.zeros((n, n))
    for c in range(k):
        first = c * size
        values[first:first + size, first] = small
        values[first, first] = 1.0
    return Instance(values, PreferenceClass.NORMALIZED)


def gen_random(n: int, pref_class, density: float = 0.5, seed: int = 0) -> Instance:
    """Random instance; a pure function of its arguments.

    Dichotomous entries are 1 with probability ``density``; normalized entries
    are uniform on [0, 1]; unit-range rows are uniform rows stretched affinely
    onto [0, 1], with constant rows redrawn.
    """
    pref_class = PreferenceClass.parse(pref_class)
    if n < 1:
        raise ArgumentError("n must be positive")
    rng = np.random.default_rng(seed & ((1 << 64) - 1))
    if pref_class is PreferenceClass.DICHOTOMOUS:
        if not 0.0 <= density <= 1.0:
            raise ArgumentError("density must lie in [0, 1]")
        values = (rng.random((n, n)) < density).astype(np.float64)
    elif pref_class is PreferenceClass.NORMALIZED:
        values = rng.random((n, n))
    else:
        if n < 2:
            raise ArgumentError("unit-range instances need n >= 2")
        values = np.empty((n, n))
        for a in range(n):
            while True:
                row = rng.random(n)
                lo, hi = row.min(), row.max()
                if hi > lo:
                    break
            row = (row - lo) / (hi - lo)
            # pin the extremes exactly; rounding could leave 0.9999999999999999
            row[np.argmin(row)] = 0.0
            row[np.argmax(row)] = 1.0
            values[a] = np.clip(row, 0.0, 1.0)
    return Instance(values, pref_class)


# --- file I/O ---------------------------------------------------------------

_KEYS = {"n", "class", "values"}


def instance_to_dict(inst: Instance) -> dict:
    return {"n": inst.n, "class": inst.pref_class.value, "values": inst.values.tolist()}


def dumps(inst: Instance) -> str:
    # json writes floats with repr(), which round-trips exactly
    rows = ",\n".join("    " + json.dumps(row) for row in inst.values.tolist())
    return (
        "{\n"
        f'  "n": {inst.n},\n'
        f'  "class": {json.dumps(inst.pref_class.value)},\n'
        f'  "values": [\n{rows}\n  ]\n'
        "}\n"
    )


def save(inst: Instance, path) -> None:
    Path(path).write_text(dumps(inst))


def _field_line(text, field):
    marker = f'"{field}"'
    for lineno, line in enumerate(text.splitlines(), start=1):
        if marker in line:
            return lineno
    return None


def loads(text: str) -> Instance:
    try:
        doc = json.loads(text)
    except json.JSONDecodeError as exc:
        raise ParseError(f"invalid JSON: {exc.msg}", line=exc.lineno) from None
    if not isinstance(doc, dict):
        raise ParseError("instance file must hold a JSON object", line=1)
    extra = set(doc) - _KEYS
    if extra:
        name = sorted(extra)[0]
        raise ParseError("unexpected top-level key", field=name, line=_field_line(text, name))
    for key in ("n", "class", "values"):
        if key not in doc:
            raise ParseError("missing top-level key", field=key)
    n = doc["n"]
    if not isinstance(n, int) or isinstance(n, bool) or n < 1:
        raise ParseError("n must be a positive integer", field="n", line=_field_line(text, "n"))
    if not isinstance(doc["class"], str):
        raise ParseError("class must be a string", field="class", line=_field_line(text, "class"))
    try:
        pref_class = PreferenceClass.parse(doc["class"])
    except ArgumentError:
        raise ParseError(f"unknown class {doc['class']!r}", field="class",
                         line=_field_line(text, "class")) from None
    rows = doc["values"]
    values_line = _field_line(text, "values")
    if not isinstance(rows, list) or len(rows) != n:
        raise ParseError(f"values must be a list of {n} rows", field="values", line=values_line)
    for a, row in enumerate(rows):
        line = values_line + 1 + a if values_line is not None else None
        if not isinstance(row, list) or len(row) != n:
            raise ParseError(f"row {a} must hold {n} numbers", field=f"values[{a}]", line=line)
        for i, v in enumerate(row):
            if not isinstance(v, (int, float)) or isinstance(v, bool):
                raise ParseError("entry is not a number", field=f"values[{a}][{i}]", line=line)
    return Instance(np.array(rows, dtype=np.float64), pref_class)


def load(path) -> Instance:
    return loads(Path(path).read_text())
