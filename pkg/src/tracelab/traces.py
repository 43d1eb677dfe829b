"""States, traces, finite trace sets and their algebra.

A state is a tuple of ints aligned with a fixed, sorted variable list; a trace is
a non-empty tuple of states.  Trace sets are plain ``frozenset`` objects.
"""
from __future__ import annotations

import itertools
from dataclasses import dataclass
from typing import Callable, Iterable, Mapping, Sequence

State = tuple[int, ...]
Trace = tuple[State, ...]
TraceSet = frozenset


@dataclass(frozen=True)
class Bounds:
    variables: tuple[str, ...]
    initial_states: tuple[State, ...]
    max_len: int

    def __post_init__(self):
        if self.max_len < 2:
            raise ValueError("max_len must be at least 2")
        width = len(self.variables)
        for s in self.initial_states:
            if len(s) != width:
                raise ValueError(f"state {s} does not match variables {self.variables}")

    @classmethod
    def grid(cls, ranges: Mapping[str, Iterable[int]], max_len: int) -> "Bounds":
        """Cartesian product of per-variable value ranges, variables sorted by name."""
        names = tuple(sorted(ranges))
        values = [list(ranges[n]) for n in names]
        states = tuple(itertools.product(*values))
        return cls(names, states, max_len)

    def with_max_len(self, max_len: int) -> "Bounds":
        return Bounds(self.variables, self.initial_states, max_len)

    def index(self) -> dict[str, int]:
        return {v: i for i, v in enumerate(self.variables)}

    def to_json(self) -> dict:
        return {
            "variables": list(self.variables),
            "initial_states": [list(s) for s in self.initial_states],
            "max_len": self.max_len,
        }

    @classmethod
    def from_json(cls, data: Mapping) -> "Bounds":
        return cls(
            tuple(data["variables"]),
            tuple(tuple(s) for s in data["initial_states"]),
            int(data["max_len"]),
        )


def update(s: State, i: int, value: int) -> State:
    return s[:i] + (value,) + s[i + 1:]


def chop_sets(a: Iterable[Trace], b: Iterable[Trace]) -> TraceSet:
    by_start: dict[State, list[Trace]] = {}
    for t in b:
        by_start.setdefault(t[0], []).append(t)
    return frozenset(
        ta + tb[1:] for ta in a for tb in by_start.get(ta[-1], ())
    )


def restrict(a: Iterable[Trace], pred: Callable[[State], bool]) -> TraceSet:
    return frozenset(t for t in a if pred(t[0]))


def sharp(a: Iterable[Trace]) -> TraceSet:
    return frozenset((t[0],) + t for t in a)


def stutter_normalize(trace: Sequence[State]) -> Trace:
    out = [trace[0]]
    for s in trace[1:]:
        if s != out[-1]:
            out.append(s)
    return tuple(out)


def normalize_set(a: Iterable[Trace]) -> TraceSet:
    return frozenset(stutter_normalize(t) for t in a)


def format_state(s: State, variables: Sequence[str]) -> str:
    return "{" + ",".join(f"{v}={x}" for v, x in zip(variables, s)) + "}"


def format_trace(t: Trace, variables: Sequence[str]) -> str:
    return " -> ".join(format_state(s, variables) for s in t)


def dump(traces: Iterable[Trace], variables: Sequence[str]) -> str:
    lines = [format_trace(t, variables) for t in sorted(traces)]
    return "".join(line + "\n" for line in lines)
