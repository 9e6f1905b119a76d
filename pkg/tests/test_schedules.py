import pytest
from hypothesis import given, strategies as st

from localpower import schedules as S
from localpower.errors import ConfigError, HorizonNotMultiple, InvalidParameter


def test_every_p_full():
    assert S.every_p(10, 1).steps == tuple(range(1, 11))


def test_every_p_two():
    assert S.every_p(10, 2).steps == (2, 4, 6, 8, 10)


def test_every_p_not_multiple():
    with pytest.raises(HorizonNotMultiple):
        S.every_p(10, 3)


def test_every_p_append_final():
    sched = S.every_p(10, 3, append_final=True)
    assert sched.steps == (3, 6, 9, 10)
    assert S.gap(sched) == 3


def test_decay_example():
    assert S.decay(12, 3).steps == (3, 5, 6, 7, 8, 9, 10, 11, 12)


def test_decay_one_is_full():
    assert S.decay(17, 1).steps == S.every_p(17, 1).steps


def test_decay_overshoot():
    assert S.decay(4, 8).steps == (4,)


def test_decay_truncated_mid_interval():
    assert S.decay(7, 4).steps == (4, 7)


def test_oneshot():
    sched = S.oneshot(5)
    assert sched.steps == (5,)
    assert S.gap(sched) == 5
    assert len(S.oneshot(100)) == 1


def test_gap_examples():
    assert S.gap(S.every_p(10, 2)) == 2
    assert S.gap(S.explicit(10, [3, 10])) == 7
    assert S.gap(S.every_p(37, 1)) == 1


def test_membership_and_last_sync():
    sched = S.explicit(10, [3, 10])
    assert 3 in sched and 4 not in sched
    assert [S.last_sync(sched, t) for t in (1, 3, 9, 10)] == [0, 3, 3, 10]


@pytest.mark.parametrize("steps", [[], [2, 5], [0, 10], [3, 11]])
def test_invalid_steps(steps):
    with pytest.raises(InvalidParameter):
        S.SyncSchedule(10, tuple(steps))


def test_non_increasing_rejected():
    with pytest.raises(InvalidParameter):
        S.SyncSchedule(10, (5, 3, 10))


def test_parse():
    assert S.parse_schedule("full", 4).steps == (1, 2, 3, 4)
    assert S.parse_schedule("every:2", 4).steps == (2, 4)
    assert S.parse_schedule("decay:3", 12).steps == S.decay(12, 3).steps
    assert S.parse_schedule(" oneshot ", 9).steps == (9,)
    assert S.parse_schedule("steps:3,5,9", 9).steps == (3, 5, 9)
    with pytest.raises(ConfigError):
        S.parse_schedule("sometimes", 9)
    with pytest.raises(ConfigError):
        S.parse_schedule("every:x", 9)
    with pytest.raises(HorizonNotMultiple):
        S.parse_schedule("every:4", 9)


@given(st.integers(1, 40), st.integers(1, 40))
def test_every_p_properties(q, p):
    T = p * q
    sched = S.every_p(T, p)
    assert S.gap(sched) == p
    assert len(sched) == T // p


@given(st.integers(1, 12), st.integers(0, 200))
def test_decay_properties(p, extra):
    T = p * (p + 1) // 2 + extra
    sched = S.decay(T, p)
    assert S.gap(sched) == p
    diffs = [b - a for a, b in zip((0,) + sched.steps, sched.steps)]
    assert all(b <= a for a, b in zip(diffs, diffs[1:]))


@given(st.integers(1, 60), st.data())
def test_pigeonhole(T, data):
    steps = data.draw(st.sets(st.integers(1, T - 1), max_size=T - 1)) if T > 1 else set()
    sched = S.explicit(T, steps | {T})
    g = S.gap(sched)
    assert 1 <= g <= T
    assert len(sched) >= T / g
    assert sched.steps[-1] == T
