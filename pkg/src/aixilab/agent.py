"""Exact expectimax planners and the specialized baseline agents.

The planner computes the optimal expected credit-to-go

    C*_{km}(h) = max_y sum_x [c(x) + C*_{k+1,m}(h + (y,x))] * rho(x | h, y)

with C*_{m+1,m} = 0, entirely in rational arithmetic, and acts by the
lexicographically smallest maximizer.  Instantiating rho with the true
environment gives the informed agent; instantiating it with a mixture or a
program class gives the universal learners.  Sub-normalized models simply
lose the missing mass: the sum runs over the support only, so the evidence
gap contributes zero continuation value.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from fractions import Fraction
from typing import Protocol

from .core import (
    FixedLifetime,
    History,
    HorizonPolicy,
    OutOfLifetimeError,
    horizon_end,
)
from .envs import FMEnv, GameTree
from .semimeasure import ChronologicalSemimeasure

ZERO = Fraction(0)


class Policy(Protocol):
    """Anything that maps a history to an action."""

    def act(self, h: History) -> int: ...


def expectimax_value(
    model: ChronologicalSemimeasure,
    h: History,
    k: int,
    m: int,
    memo: dict | None = None,
) -> Fraction:
    """Optimal expected credit over cycles k..m from history h (C*_{km}).

    Requires k = len(h) + 1 and k <= m + 1; the base case C*_{m+1,m} is 0.
    """
    if k != len(h) + 1:
        raise ValueError(f"cycle {k} does not match history length {len(h)}")
    if k > m + 1:
        raise ValueError(f"cycle {k} beyond horizon end {m}")
    if memo is None:
        memo = {}
    return _cstar(model, h, m, memo)


def _cstar(model, h, m, memo) -> Fraction:
    if len(h) >= m:
        return ZERO
    key = (h, m)
    if key not in memo:
        memo[key] = max(_qvalue(model, h, y, m, memo) for y in model.alphabet.actions())
    return memo[key]


def _qvalue(model, h, y, m, memo) -> Fraction:
    total = ZERO
    for x, p in model.cond(h, y).items():
        if p:
            total += (x.credit + _cstar(model, h.extended(y, x), m, memo)) * p
    return total


@dataclass
class ExpectimaxAgent:
    """AI-rho: deterministic expectimax policy for a model and horizon."""

    model: ChronologicalSemimeasure
    horizon: HorizonPolicy = field(default_factory=FixedLifetime)
    lifetime: int = 1
    name: str = "expectimax"

    def __post_init__(self):
        if self.lifetime < 0:
            raise ValueError("lifetime must be non-negative")
        self._memo: dict = {}

    def horizon_cycle(self, k: int) -> int:
        return horizon_end(self.horizon, k, self.lifetime)

    def action_values(self, h: History, m: int | None = None) -> list[tuple[int, Fraction]]:
        """(action, C*_{k m_k} given that action) for the current cycle."""
        k = len(h) + 1
        if m is None:
            m = self.horizon_cycle(k)
        elif m > self.lifetime:
            raise OutOfLifetimeError(f"horizon {m} beyond lifetime {self.lifetime}")
        return [(y, _qvalue(self.model, h, y, m, self._memo)) for y in self.model.alphabet.actions()]

    def act(self, h: History, m: int | None = None) -> int:
        values = self.action_values(h, m)
        best_y, best_v = values[0]
        for y, v in values[1:]:
            if v > best_v:
                best_y, best_v = y, v
        return best_y

    def value(self, h: History, m: int | None = None) -> Fraction:
        """C*_{k m}(h) for the current cycle k = len(h)+1."""
        k = len(h) + 1
        if m is None:
            m = self.horizon_cycle(k)
        return expectimax_value(self.model, h, k, m, self._memo)


def act(agent: ExpectimaxAgent, h: History) -> int:
    return agent.act(h)


@dataclass(frozen=True)
class Unstable:
    """stabilized_act found horizon-dependent actions; holds the witnessed set."""

    actions: tuple[int, ...]


def stabilized_act(agent: ExpectimaxAgent, h: History, m_lo: int, m_hi: int):
    """Action common to every horizon end in [m_lo, m_hi], else Unstable.

    This approximates the infinite-horizon intersection construction from a
    finite sweep; stability over the sweep does not certify the true limit.
    """
    k = len(h) + 1
    if not k <= m_lo <= m_hi <= agent.lifetime:
        raise ValueError("need k <= m_lo <= m_hi <= lifetime")
    seen = []
    for m in range(m_lo, m_hi + 1):
        y = agent.act(h, m)
        if y not in seen:
            seen.append(y)
    if len(seen) == 1:
        return seen[0]
    return Unstable(tuple(sorted(seen)))


# ---------------------------------------------------------------------------
# Specialized baselines
# ---------------------------------------------------------------------------


def sp_predict(measure, prefix: tuple[int, ...]) -> int | None:
    """Deterministic prediction of the next bit; None signals a refusal.

    Predicts the bit whose conditional exceeds 1/2; an exact tie of a proper
    conditional predicts 0.  A strict semimeasure may leave both conditionals
    at or below 1/2, in which case the predictor refuses.
    """
    p0, p1 = measure.cond(tuple(prefix))
    if p0 == p1 == 0:
        raise ValueError("prefix has zero mass")
    half = Fraction(1, 2)
    if p1 > half:
        return 1
    if p0 > half:
        return 0
    if p0 + p1 == 1:
        return 0  # p0 == p1 == 1/2
    return None


def greedy_fm_act(env: FMEnv, h: History) -> int:
    """Minimize the expected next function value; smallest action on ties."""
    best_y, best = 0, None
    for y in env.alphabet.actions():
        v = env.expected_z(h, y)
        if best is None or v < best:
            best_y, best = y, v
    return best_y


def minimax_move(tree: GameTree, moves: tuple[int, ...]) -> int:
    """Maximin move at an agent node; smallest index on ties."""
    if tree.is_terminal(moves):
        raise ValueError("no move at a terminal node")
    if len(moves) % 2 != 0:
        raise ValueError("not an agent node")
    best_y, best = 0, None
    for y in range(tree.y_branch):
        v = tree.value(moves + (y,))
        if best is None or v > best:
            best_y, best = y, v
    return best_y


@dataclass
class FixedPolicy:
    """Replays a fixed action sequence (cycling); the `fixed:<seq>` agent."""

    sequence: tuple[int, ...]
    name: str = "fixed"

    def act(self, h: History) -> int:
        return self.sequence[len(h) % len(self.sequence)]


@dataclass
class RandomPolicy:
    """Pseudo-random but pure policy: the action is a keyed hash of the history.

    Purity (same history -> same action) keeps rollout-based comparisons
    well defined while still exercising arbitrary behavior.
    """

    num_actions: int
    seed: int = 0
    name: str = "random"

    def act(self, h: History) -> int:
        from hashlib import sha256

        from .core import encode_history

        digest = sha256(f"{self.seed}|{' '.join(encode_history(h))}".encode()).digest()
        return int.from_bytes(digest[:4], "big") % self.num_actions
