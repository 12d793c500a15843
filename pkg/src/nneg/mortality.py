"""Mortality tables and cohort death schedules.

One period is one year. Tables are read from a two-column CSV
(``age,qx``) with one row per integer age and a terminal age where
``qx == 1``.
"""

from __future__ import annotations

import csv
import io
from dataclasses import dataclass, field
from importlib import resources
from typing import Iterable, TextIO

from .errors import TableError

SAMPLE_TABLE = "sample_mortality.csv"


@dataclass(frozen=True)
class MortalityTable:
    ages: tuple[int, ...]
    qx: tuple[float, ...]
    _index: dict = field(init=False, repr=False, compare=False)

    def __post_init__(self) -> None:
        if not self.ages:
            raise TableError("empty mortality table")
        if len(self.ages) != len(self.qx):
            raise TableError("ages and qx differ in length")
        for a, b in zip(self.ages, self.ages[1:]):
            if b != a + 1:
                raise TableError(f"ages not contiguous after {a}", age=a)
        for a, q in zip(self.ages, self.qx):
            if not (0.0 <= q <= 1.0):
                raise TableError(f"qx={q} at age {a} outside [0, 1]", age=a)
        if self.qx[-1] != 1.0:
            raise TableError(
                f"terminal age {self.ages[-1]} has qx={self.qx[-1]}, need 1",
                age=self.ages[-1],
            )
        object.__setattr__(self, "_index", {a: i for i, a in enumerate(self.ages)})

    @classmethod
    def from_mapping(cls, entries: dict[int, float]) -> MortalityTable:
        ages = tuple(sorted(entries))
        return cls(ages, tuple(float(entries[a]) for a in ages))

    @classmethod
    def constant(cls, start_age: int, qx: float, length: int) -> MortalityTable:
        """Flat table of ``length`` ages followed by a terminal age."""
        entries = {start_age + i: qx for i in range(length)}
        entries[start_age + length] = 1.0
        return cls.from_mapping(entries)

    @property
    def min_age(self) -> int:
        return self.ages[0]

    @property
    def terminal_age(self) -> int:
        return self.ages[-1]

    def __contains__(self, age: int) -> bool:
        return age in self._index

    def __getitem__(self, age: int) -> float:
        return period_death_prob(self, age)


@dataclass
class CohortState:
    n_alive: int
    age: int
    t: int = 0

    def __post_init__(self) -> None:
        if self.n_alive < 0:
            raise ValueError("n_alive must be nonnegative")


def _parse_rows(rows: Iterable[list[str]]) -> MortalityTable:
    it = iter(rows)
    try:
        header = next(it)
    except StopIteration:
        raise TableError("empty input", line=1) from None
    if [h.strip().lower() for h in header] != ["age", "qx"]:
        raise TableError(f"expected header 'age,qx', got {','.join(header)!r}", line=1)
    ages: list[int] = []
    qx: list[float] = []
    for lineno, row in enumerate(it, start=2):
        if not row or all(not c.strip() for c in row):
            continue
        if len(row) != 2:
            raise TableError(f"expected 2 fields, got {len(row)}", line=lineno)
        try:
            age = int(row[0].strip())
            q = float(row[1].strip())
        except ValueError as exc:
            raise TableError(f"cannot parse row {row!r}: {exc}", line=lineno) from None
        if not (0.0 <= q <= 1.0):
            raise TableError(
                f"probability {q} out of range at age {age}", line=lineno, age=age
            )
        if ages and age != ages[-1] + 1:
            raise TableError(f"gap or disorder: age {age} after {ages[-1]}", line=lineno, age=age)
        ages.append(age)
        qx.append(q)
    return MortalityTable(tuple(ages), tuple(qx))


def load_table(source: TextIO | str) -> MortalityTable:
    """Parse a mortality CSV from a text stream or a string of CSV text."""
    if isinstance(source, str):
        source = io.StringIO(source)
    return _parse_rows(csv.reader(source))


def load_sample_table() -> MortalityTable:
    """The synthetic Gompertz table shipped with the package (ages 70-110)."""
    text = resources.files("nneg.data").joinpath(SAMPLE_TABLE).read_text("utf-8")
    return load_table(text)


def period_death_prob(table: MortalityTable, age: int) -> float:
    try:
        return table.qx[table._index[age]]
    except KeyError:
        raise KeyError(
            f"age {age} outside table range {table.min_age}-{table.terminal_age}"
        ) from None


def survival_curve(table: MortalityTable, start_age: int, horizon: int) -> list[float]:
    """Probabilities of surviving ``t`` periods, t = 0..horizon."""
    out = [1.0]
    for t in range(horizon):
        out.append(out[-1] * (1.0 - period_death_prob(table, start_age + t)))
    return out


def max_horizon(table: MortalityTable, start_age: int) -> int:
    period_death_prob(table, start_age)
    return table.terminal_age - start_age + 1


def expected_deaths_schedule(
    table: MortalityTable, start_age: int, n: float, horizon: int | None = None
) -> list[float]:
    """Expected deaths per period for a cohort of ``n`` lives aged ``start_age``.

    The horizon is truncated at the terminal age of the table.
    """
    full = max_horizon(table, start_age)
    horizon = full if horizon is None else min(horizon, full)
    if horizon < 0:
        raise ValueError("horizon must be nonnegative")
    surv = survival_curve(table, start_age, horizon)
    return [
        n * surv[t] * period_death_prob(table, start_age + t) for t in range(horizon)
    ]
