"""Min-flooding agreement: per-process state machine and round budgets.

Each process keeps the smallest value it has seen, broadcasts it every
round, and decides it either after a fixed budget of rounds (known bound
on n) or after a run of rounds with no neighbors (unknown n).
"""

from __future__ import annotations

import math
from dataclasses import dataclass, replace
from fractions import Fraction
from typing import Iterable, Union


@dataclass(frozen=True)
class ProcessState:
    input: int
    current_min: int
    decided: int | None = None
    quiet_rounds: int = 0

    @classmethod
    def initial(cls, value: int) -> ProcessState:
        return cls(input=value, current_min=value)


@dataclass(frozen=True)
class KnownBound:
    """Decide current_min once `gamma` rounds have elapsed."""

    gamma: int

    def __post_init__(self):
        if self.gamma < 0:
            raise ValueError(f"gamma must be nonnegative, got {self.gamma}")


@dataclass(frozen=True)
class UnknownSize:
    """Decide current_min after `quiet_period` consecutive rounds hearing nothing."""

    quiet_period: int

    def __post_init__(self):
        if self.quiet_period < 1:
            raise ValueError(f"quiet_period must be positive, got {self.quiet_period}")


ProtocolVariant = Union[KnownBound, UnknownSize]


def as_fraction(x) -> Fraction:
    """Exact rational from int, Fraction, decimal string or float (via its repr)."""
    if isinstance(x, Fraction):
        return x
    if isinstance(x, float):
        return Fraction(repr(x))
    return Fraction(x)


def budget_p_agreement(n: int, p: int) -> int:
    """Rounds after which min-flooding leaves at most p distinct minima."""
    if n < 1 or p < 1:
        raise ValueError(f"need n >= 1 and p >= 1, got n={n}, p={p}")
    return max(0, p * (n - p - 1) + 1)


def k_for_epsilon(p: int, epsilon) -> int:
    return math.ceil((1 + as_fraction(epsilon)) * p)


def budget_k_agreement(n: int, p: int, epsilon) -> tuple[int, int]:
    """Return (gamma, k) for k = ceil((1+eps) p).

    gamma = ceil(1 + k(n-k-1) / (1 + k eps/(1+eps))), clamped at 0.
    Evaluated in exact rationals so the ceiling is never off by float noise.
    """
    if n < 1 or p < 1:
        raise ValueError(f"need n >= 1 and p >= 1, got n={n}, p={p}")
    eps = as_fraction(epsilon)
    if eps <= 0:
        raise ValueError(f"epsilon must be positive, got {epsilon}")
    k = math.ceil((1 + eps) * p)
    per_round = 1 + k * eps / (1 + eps)
    gamma = math.ceil(1 + Fraction(k * (n - k - 1)) / per_round)
    return max(0, gamma), k


def outgoing_message(state: ProcessState) -> int:
    return state.current_min


def step(
    state: ProcessState,
    received: Iterable[int],
    variant: ProtocolVariant,
    round: int,
) -> ProcessState:
    """Advance one process through round `round` given its neighbors' messages.

    Decided states are returned unchanged.
    """
    if state.decided is not None:
        return state
    received = list(received)
    if received:
        new = replace(state, current_min=min(state.current_min, min(received)), quiet_rounds=0)
    else:
        new = replace(state, quiet_rounds=state.quiet_rounds + 1)

    if isinstance(variant, KnownBound):
        if round + 1 >= variant.gamma:
            new = replace(new, decided=new.current_min)
    elif isinstance(variant, UnknownSize):
        if new.quiet_rounds >= variant.quiet_period:
            new = replace(new, decided=new.current_min)
    else:
        raise TypeError(f"unknown protocol variant {variant!r}")
    return new
