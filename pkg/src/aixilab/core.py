"""Shared vocabulary: alphabets, interaction histories, horizon policies.

An interaction cycle k consists of an agent action y_k followed by an
environment percept x_k = (credit c_k, observation x'_k).  Credits are exact
rationals; all value and probability arithmetic in this package is done with
`fractions.Fraction` so that identities (e.g. the credit/error identity for
sequence prediction) can be checked with zero tolerance.  Floats appear only
in logging and plotting.

Actions and observations are represented as indices into finite ordered sets;
"lexicographically smallest" tie-breaking throughout the package means
smallest index (smallest credit first for percepts).
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from fractions import Fraction
from typing import Iterator, NamedTuple, Union


class OutOfLifetimeError(ValueError):
    """Raised when a cycle index lies beyond the configured lifetime."""


class HistoryParseError(ValueError):
    """Raised when a token stream is not a valid encoded history."""


class Percept(NamedTuple):
    """One environment reply: a credit and an observation index."""

    credit: Fraction
    obs: int


@dataclass(frozen=True)
class Alphabet:
    """Finite I/O spaces: actions Y, credits C and observations X'.

    The percept space is the product X = C x X'.  Percepts are ordered
    credit-major (by position in `credits`, then by observation index);
    this order defines percept indices used by transducer tables.
    """

    num_actions: int
    credits: tuple[Fraction, ...]
    num_obs: int = 1

    def __post_init__(self):
        if self.num_actions < 1 or self.num_obs < 1:
            raise ValueError("action and observation sets must be non-empty")
        if not self.credits:
            raise ValueError("credit set must be non-empty")
        creds = tuple(Fraction(c) for c in self.credits)
        if len(set(creds)) != len(creds):
            raise ValueError("credit set has duplicates")
        object.__setattr__(self, "credits", creds)

    @property
    def num_percepts(self) -> int:
        return len(self.credits) * self.num_obs

    @property
    def credit_bound(self) -> Fraction:
        """B such that C is contained in [-B, B]."""
        return max(abs(c) for c in self.credits)

    def actions(self) -> range:
        return range(self.num_actions)

    def percepts(self) -> Iterator[Percept]:
        for c in self.credits:
            for o in range(self.num_obs):
                yield Percept(c, o)

    def percept_index(self, x: Percept) -> int:
        try:
            ci = self.credits.index(x.credit)
        except ValueError:
            raise ValueError(f"credit {x.credit} not in alphabet") from None
        if not 0 <= x.obs < self.num_obs:
            raise ValueError(f"observation index {x.obs} out of range")
        return ci * self.num_obs + x.obs

    def percept(self, index: int) -> Percept:
        ci, o = divmod(index, self.num_obs)
        return Percept(self.credits[ci], o)

    def contains_percept(self, x: Percept) -> bool:
        return x.credit in self.credits and 0 <= x.obs < self.num_obs


@dataclass(frozen=True)
class History:
    """Chronological record y1 x1 y2 x2 ... of completed cycles.

    Immutable and hashable; used directly as a memoization key by the
    expectimax planner.  len(h) is the number of completed cycles.
    """

    steps: tuple[tuple[int, Percept], ...] = ()

    def __len__(self) -> int:
        return len(self.steps)

    def __iter__(self):
        return iter(self.steps)

    def extended(self, y: int, x: Percept) -> "History":
        return History(self.steps + ((y, x),))

    def prefix(self, n: int) -> "History":
        return History(self.steps[:n])

    def actions(self) -> tuple[int, ...]:
        return tuple(y for y, _ in self.steps)

    def percepts(self) -> tuple[Percept, ...]:
        return tuple(x for _, x in self.steps)

    def credits(self) -> tuple[Fraction, ...]:
        return tuple(x.credit for _, x in self.steps)

    def total_credit(self) -> Fraction:
        return sum((x.credit for _, x in self.steps), Fraction(0))


EMPTY_HISTORY = History()


# ---------------------------------------------------------------------------
# Horizon policies
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class FixedLifetime:
    """Optimize up to the known lifetime T: m_k = T."""


@dataclass(frozen=True)
class MovingHorizon:
    """Optimize the next m credits: m_k = min(k + m - 1, T)."""

    m: int

    def __post_init__(self):
        if self.m < 1:
            raise ValueError("moving horizon window must be >= 1")


@dataclass(frozen=True)
class Proportional:
    """Farsightedness proportional to age: m_k = min(k + ceil(beta*k) - 1, T)."""

    beta: Fraction

    def __post_init__(self):
        b = Fraction(self.beta)
        if b <= 0:
            raise ValueError("beta must be positive")
        object.__setattr__(self, "beta", b)


HorizonPolicy = Union[FixedLifetime, MovingHorizon, Proportional]


def horizon_end(policy: HorizonPolicy, k: int, lifetime: int) -> int:
    """Last cycle m_k whose credit is optimized in cycle k.

    Guarantees k <= m_k <= lifetime for 1 <= k <= lifetime (h_k >= 1).
    """
    if k < 1 or k > lifetime:
        raise OutOfLifetimeError(f"cycle {k} outside lifetime 1..{lifetime}")
    if isinstance(policy, FixedLifetime):
        return lifetime
    if isinstance(policy, MovingHorizon):
        return min(k + policy.m - 1, lifetime)
    if isinstance(policy, Proportional):
        return min(k + math.ceil(policy.beta * k) - 1, lifetime)
    raise TypeError(f"unknown horizon policy {policy!r}")


def parse_horizon(text: str) -> HorizonPolicy:
    """Parse harness config syntax: 'lifetime' | 'moving:<m>' | 'proportional:<beta>'."""
    if text == "lifetime":
        return FixedLifetime()
    kind, _, arg = text.partition(":")
    if kind == "moving":
        return MovingHorizon(int(arg))
    if kind == "proportional":
        return Proportional(Fraction(arg))
    raise ValueError(f"unknown horizon policy {text!r}")


def format_horizon(policy: HorizonPolicy) -> str:
    if isinstance(policy, FixedLifetime):
        return "lifetime"
    if isinstance(policy, MovingHorizon):
        return f"moving:{policy.m}"
    if isinstance(policy, Proportional):
        return f"proportional:{policy.beta}"
    raise TypeError(f"unknown horizon policy {policy!r}")


# ---------------------------------------------------------------------------
# Canonical text encoding of histories
# ---------------------------------------------------------------------------
#
# Whitespace-separated tokens `y:<idx>` and `x:<credit>/<obs-idx>`; credits
# print as exact fractions ("1", "-3/2").  The obs index is split off at the
# last '/' so fractional credits stay unambiguous.


def encode_history(h: History) -> list[str]:
    words = []
    for y, x in h:
        words.append(f"y:{y}")
        words.append(f"x:{x.credit}/{x.obs}")
    return words


def decode_history(words: list[str], alphabet: Alphabet) -> History:
    steps: list[tuple[int, Percept]] = []
    pending_action: int | None = None
    for pos, word in enumerate(words):
        if word.startswith("y:"):
            if pending_action is not None:
                raise HistoryParseError(f"token {pos}: action follows action")
            try:
                y = int(word[2:])
            except ValueError:
                raise HistoryParseError(f"token {pos}: bad action {word!r}") from None
            if not 0 <= y < alphabet.num_actions:
                raise HistoryParseError(f"token {pos}: action {y} out of alphabet")
            pending_action = y
        elif word.startswith("x:"):
            if pending_action is None:
                raise HistoryParseError(f"token {pos}: percept before action")
            body = word[2:]
            credit_text, sep, obs_text = body.rpartition("/")
            if not sep:
                raise HistoryParseError(f"token {pos}: bad percept {word!r}")
            try:
                x = Percept(Fraction(credit_text), int(obs_text))
            except (ValueError, ZeroDivisionError):
                raise HistoryParseError(f"token {pos}: bad percept {word!r}") from None
            if not alphabet.contains_percept(x):
                raise HistoryParseError(f"token {pos}: percept {word!r} out of alphabet")
            steps.append((pending_action, x))
            pending_action = None
        else:
            raise HistoryParseError(f"token {pos}: unknown token {word!r}")
    if pending_action is not None:
        raise HistoryParseError("trailing action without percept")
    return History(tuple(steps))
