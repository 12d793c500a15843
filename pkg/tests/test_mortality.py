import io

import pytest

from nneg.errors import TableError
from nneg.mortality import (
    CohortState,
    MortalityTable,
    expected_deaths_schedule,
    load_sample_table,
    load_table,
    max_horizon,
    period_death_prob,
    survival_curve,
)


def test_minimal_table():
    t = load_table("age,qx\n70,0.02\n71,1.0")
    assert t.ages == (70, 71)
    assert period_death_prob(t, 70) == 0.02
    assert t[71] == 1.0


def test_stream_input():
    t = load_table(io.StringIO("age,qx\n1,0.5\n2,1\n"))
    assert t.terminal_age == 2


@pytest.mark.parametrize(
    "text,line",
    [
        ("age,qx\n70,1.2", 2),
        ("age,qx\n70,0.1\n72,1", 3),
        ("age,qx\n70,abc\n71,1", 2),
        ("age,qx\n70,0.1,3\n71,1", 2),
        ("years,prob\n70,1", 1),
        ("", 1),
    ],
)
def test_parse_errors_carry_line(text, line):
    with pytest.raises(TableError) as info:
        load_table(text)
    assert info.value.line == line
    assert f"line {line}" in str(info.value)


def test_missing_terminal_age():
    with pytest.raises(TableError) as info:
        load_table("age,qx\n70,0.1\n71,0.2")
    assert info.value.age == 71


def test_sample_table():
    t = load_sample_table()
    assert (t.min_age, t.terminal_age) == (70, 110)
    assert t[110] == 1.0
    assert t[70] == pytest.approx(0.020765)
    assert all(a < b for a, b in zip(t.qx, t.qx[1:]))


def test_lookup_out_of_range():
    with pytest.raises(KeyError):
        period_death_prob(load_sample_table(), 69)


def test_expected_deaths_examples():
    flat = MortalityTable.constant(60, 0.5, 5)
    assert expected_deaths_schedule(flat, 60, 4, 2) == [2.0, 1.0]
    assert expected_deaths_schedule(flat, 60, 0, 3) == [0.0, 0.0, 0.0]
    sample = load_sample_table()
    sched = expected_deaths_schedule(sample, 70, 100)
    assert len(sched) == max_horizon(sample, 70) == 41
    assert sum(sched) == pytest.approx(100, abs=1e-9)
    assert min(sched) >= 0


def test_survival_non_increasing():
    s = survival_curve(load_sample_table(), 75, 30)
    assert s[0] == 1.0
    assert all(a >= b for a, b in zip(s, s[1:]))


def test_cohort_state():
    assert CohortState(3, 70).t == 0
    with pytest.raises(ValueError):
        CohortState(-1, 70)


def test_sample_table_generator_matches_shipped_file():
    import runpy
    from pathlib import Path

    script = Path(__file__).resolve().parents[1] / "scripts" / "make_sample_table.py"
    buf = io.StringIO()
    runpy.run_path(str(script))["main"](out=buf)
    assert load_table(buf.getvalue()) == load_sample_table()
