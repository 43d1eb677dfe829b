"""Randomized checks of the trace-set algebra, shared by tests and the CLI."""
from __future__ import annotations

import random
from typing import Callable

from .traces import TraceSet, chop_sets, restrict, sharp

ALPHABET = (0, 1, 2)


def random_trace_set(rng: random.Random, max_traces: int = 20, max_len: int = 5) -> TraceSet:
    """A small set over one variable; the tiny alphabet makes junctions match often."""
    n = rng.randint(0, max_traces)
    return frozenset(
        tuple((rng.choice(ALPHABET),) for _ in range(rng.randint(1, max_len))) for _ in range(n)
    )


def _subset(rng: random.Random, a: TraceSet) -> TraceSet:
    return frozenset(t for t in a if rng.random() < 0.5)


def _positive(s) -> bool:
    return s[0] > 0


LAWS: dict[str, Callable[[random.Random], bool]] = {}


def _law(name):
    def register(fn):
        LAWS[name] = fn
        return fn
    return register


@_law("chop distributes over union (right)")
def _right(rng):
    a, b, c = (random_trace_set(rng) for _ in range(3))
    return chop_sets(a, b | c) == chop_sets(a, b) | chop_sets(a, c)


@_law("chop distributes over union (left)")
def _left(rng):
    a, b, c = (random_trace_set(rng) for _ in range(3))
    return chop_sets(a | b, c) == chop_sets(a, c) | chop_sets(b, c)


@_law("chop is monotone")
def _mono(rng):
    b, c = random_trace_set(rng), random_trace_set(rng)
    a = _subset(rng, b)
    return chop_sets(a, c) <= chop_sets(b, c)


@_law("restriction commutes with chop")
def _restrict(rng):
    a, b = random_trace_set(rng), random_trace_set(rng)
    return restrict(chop_sets(a, b), _positive) == chop_sets(restrict(a, _positive), b)


@_law("sharp commutes with chop")
def _sharp(rng):
    a, b = random_trace_set(rng), random_trace_set(rng)
    return sharp(chop_sets(a, b)) == chop_sets(sharp(a), b)


def check_laws(rng: random.Random, samples: int) -> dict[str, list[int]]:
    """Sample indices at which each law failed (empty lists when all hold)."""
    failures: dict[str, list[int]] = {name: [] for name in LAWS}
    for i in range(samples):
        for name, law in LAWS.items():
            if not law(rng):
                failures[name].append(i)
    return failures
