"""Synchronization schedules: which iterations aggregate across workers."""
from dataclasses import dataclass

from .errors import ConfigError, HorizonNotMultiple, InvalidParameter


@dataclass(frozen=True)
class SyncSchedule:
    horizon: int
    steps: tuple

    def __post_init__(self):
        steps = tuple(int(s) for s in self.steps)
        if self.horizon < 1:
            raise InvalidParameter("horizon must be >= 1")
        if not steps:
            raise InvalidParameter("schedule must contain at least one step")
        if any(b <= a for a, b in zip(steps, steps[1:])):
            raise InvalidParameter("steps must be strictly increasing")
        if steps[0] < 1 or steps[-1] != self.horizon:
            raise InvalidParameter(f"steps must lie in [1, {self.horizon}] and end at the horizon")
        object.__setattr__(self, "steps", steps)
        object.__setattr__(self, "_stepset", frozenset(steps))

    def __contains__(self, t):
        return t in self._stepset

    def __len__(self):
        return len(self.steps)

    def __iter__(self):
        return iter(self.steps)


def every_p(T, p, append_final=False):
    """Every ``p``-th iteration.

    A horizon that is not a multiple of ``p`` is rejected unless
    ``append_final`` is set, in which case ``T`` becomes a final, shorter
    interval.
    """
    if T < 1 or p < 1:
        raise InvalidParameter("T and p must be >= 1")
    steps = tuple(range(p, T + 1, p))
    if T % p:
        if not append_final:
            raise HorizonNotMultiple(f"T={T} is not a multiple of p={p}")
        steps = steps + (T,)
    return SyncSchedule(T, steps)


def full(T):
    return every_p(T, 1)


def decay(T, p):
    """Partial sums of ``max(p - i, 1)``, truncated at ``T`` (``T`` always included)."""
    if T < 1 or p < 1:
        raise InvalidParameter("T and p must be >= 1")
    steps = []
    t = 0
    i = 0
    while True:
        t += max(p - i, 1)
        if t > T:
            break
        steps.append(t)
        i += 1
    if not steps or steps[-1] != T:
        steps.append(T)
    return SyncSchedule(T, tuple(steps))


def oneshot(T):
    return SyncSchedule(T, (T,))


def explicit(T, steps):
    return SyncSchedule(T, tuple(sorted(set(int(s) for s in steps))))


def gap(sched):
    """Longest run of iterations between consecutive synchronizations (``i_0 = 0``)."""
    prev = 0
    worst = 0
    for s in sched.steps + (sched.horizon,):
        worst = max(worst, s - prev)
        prev = s
    return worst


def last_sync(sched, t):
    """Most recent sync step ``<= t`` (0 when none, i.e. the shared start)."""
    best = 0
    for s in sched.steps:
        if s > t:
            break
        best = s
    return best


def parse_schedule(text, T):
    """Build a schedule from ``full``, ``every:<p>``, ``decay:<p>``, ``oneshot`` or ``steps:a,b,...``."""
    text = text.strip()
    head, _, arg = text.partition(":")
    head = head.strip().lower()
    try:
        if head == "full" and not arg:
            return full(T)
        if head == "oneshot" and not arg:
            return oneshot(T)
        if head == "every":
            return every_p(T, int(arg))
        if head == "decay":
            return decay(T, int(arg))
        if head == "steps":
            return explicit(T, [int(x) for x in arg.split(",") if x.strip()])
    except ValueError as exc:
        if isinstance(exc, InvalidParameter):
            raise
        raise ConfigError(f"bad schedule {text!r}: {exc}") from None
    raise ConfigError(f"unknown schedule {text!r}")

