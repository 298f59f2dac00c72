"""Machine state transitions.

A machine is in one of four states per period (0 = inoperative, 1..3 = number
of work shifts operated).  A transition ``e = (s, s')`` records the state in
the previous and current period and is labelled ``e = 4*s + s'``.
"""
from __future__ import annotations

from enum import Enum

STATES = (0, 1, 2, 3)
N_STATES = len(STATES)
TRANSITIONS = tuple(range(N_STATES * N_STATES))


class StatePartition(str, Enum):
    E0 = "E0"  # stays inoperative
    E1 = "E1"  # purchase / enter operation
    E2 = "E2"  # keeps operating
    E3 = "E3"  # discard


def transition(tail: int, head: int) -> int:
    if tail not in STATES or head not in STATES:
        raise ValueError(f"invalid state pair ({tail}, {head})")
    return N_STATES * tail + head


def tail(e: int) -> int:
    """State in the previous period."""
    _check(e)
    return e // N_STATES


def head(e: int) -> int:
    """State in the current period."""
    _check(e)
    return e % N_STATES


def classify(e: int) -> StatePartition:
    t, h = tail(e), head(e)
    if t == 0:
        return StatePartition.E0 if h == 0 else StatePartition.E1
    return StatePartition.E3 if h == 0 else StatePartition.E2


def shifts_opened(e: int) -> int:
    return max(0, head(e) - tail(e))


def shifts_closed(e: int) -> int:
    return max(0, tail(e) - head(e))


def members(*classes: StatePartition) -> tuple[int, ...]:
    wanted = set(classes)
    return tuple(e for e in TRANSITIONS if classify(e) in wanted)


def _check(e: int) -> None:
    if not 0 <= e < N_STATES * N_STATES:
        raise ValueError(f"invalid transition index {e}")


E0 = members(StatePartition.E0)
E1 = members(StatePartition.E1)
E2 = members(StatePartition.E2)
E3 = members(StatePartition.E3)
OPERATING = E1 + E2  # transitions whose head state is a working state
