"""True-environment builders: every worked problem class as a proper measure.

Each builder returns a ChronologicalSemimeasure whose conditionals sum to
exactly 1 (proper chronological probability distributions), covering:

* sequence prediction (credit 1 for a correct bit prediction),
* heaven/hell and the needle-in-a-haystack class (credit-bound counterexamples),
* strictly competitive alternating games against a minimax opponent,
* function minimization with weighted credit schedules,
* supervised learning by examples over candidate relations,
* the delayed-switch rule rewarding long earned runs,
* products of independent episode factors.
"""

from __future__ import annotations

import math
from abc import ABC, abstractmethod
from dataclasses import dataclass, field
from fractions import Fraction
from typing import Iterable, Sequence, Union

import numpy as np

from .core import Alphabet, History, Percept
from .semimeasure import ChronologicalSemimeasure, EvidenceExhaustedError, sample_from

ZERO = Fraction(0)
ONE = Fraction(1)


# ---------------------------------------------------------------------------
# Sequence measures (binary, over the predicted string itself)
# ---------------------------------------------------------------------------


class SequenceMeasure(ABC):
    """Distribution over binary sequences; may be a strict semimeasure."""

    @abstractmethod
    def cond(self, prefix: tuple[int, ...]) -> tuple[Fraction, Fraction]:
        """(P(next=0 | prefix), P(next=1 | prefix))."""

    def joint(self, bits: Sequence[int]) -> Fraction:
        mass = ONE
        prefix: tuple[int, ...] = ()
        for b in bits:
            mass *= self.cond(prefix)[b]
            prefix += (b,)
        return mass


@dataclass(frozen=True)
class PeriodicSequence(SequenceMeasure):
    """Point mass on the infinite repetition of `pattern`."""

    pattern: tuple[int, ...]

    def __post_init__(self):
        if not self.pattern or any(b not in (0, 1) for b in self.pattern):
            raise ValueError("pattern must be a non-empty bit tuple")

    def bit(self, k: int) -> int:
        return self.pattern[k % len(self.pattern)]

    def cond(self, prefix):
        if any(b != self.bit(i) for i, b in enumerate(prefix)):
            raise EvidenceExhaustedError("prefix has zero mass under the point sequence")
        nxt = self.bit(len(prefix))
        return (ONE, ZERO) if nxt == 0 else (ZERO, ONE)


@dataclass(frozen=True)
class Bernoulli(SequenceMeasure):
    theta: Fraction

    def __post_init__(self):
        t = Fraction(self.theta)
        if not 0 <= t <= 1:
            raise ValueError("theta must lie in [0, 1]")
        object.__setattr__(self, "theta", t)

    def cond(self, prefix):
        return (ONE - self.theta, self.theta)


class MixtureSequenceMeasure(SequenceMeasure):
    """Weighted mixture of sequence measures; a strict semimeasure when the
    prior weights 2^-K sum below one."""

    def __init__(self, components: Sequence[tuple[SequenceMeasure, int]]):
        if not components:
            raise ValueError("mixture needs at least one component")
        self.components = tuple((m, k) for m, k in components)
        self.weights = tuple(Fraction(1, 2**k) for _, k in self.components)
        if sum(self.weights, ZERO) > 1:
            raise ValueError("prior weights exceed 1")

    def joint(self, bits: Sequence[int]) -> Fraction:
        return sum(
            (w * m.joint(bits) for (m, _), w in zip(self.components, self.weights)), ZERO
        )

    def cond(self, prefix: tuple[int, ...]) -> tuple[Fraction, Fraction]:
        prefix = tuple(prefix)
        denom = self.joint(prefix)
        if denom == 0:
            raise EvidenceExhaustedError("prefix excluded by all components")
        return (self.joint(prefix + (0,)) / denom, self.joint(prefix + (1,)) / denom)


@dataclass(frozen=True)
class TableSequenceMeasure(SequenceMeasure):
    """Explicit conditional table for prefixes shorter than `depth`."""

    depth: int
    table: dict[tuple[int, ...], tuple[Fraction, Fraction]]

    def cond(self, prefix):
        if len(prefix) >= self.depth:
            raise ValueError(f"prefix length {len(prefix)} >= table depth {self.depth}")
        return self.table[tuple(prefix)]

    @classmethod
    def random(cls, depth: int, rng, grain: int = 16) -> "TableSequenceMeasure":
        """Random proper measure with conditionals on a 1/grain grid."""
        table = {}
        prefixes: list[tuple[int, ...]] = [()]
        for _ in range(depth):
            nxt = []
            for p in prefixes:
                p1 = Fraction(int(rng.integers(1, grain)), grain)
                table[p] = (ONE - p1, p1)
                nxt.extend([p + (0,), p + (1,)])
            prefixes = nxt
        return cls(depth, table)


# ---------------------------------------------------------------------------
# Environment classes
# ---------------------------------------------------------------------------

BINARY_CREDIT_ALPHABET = Alphabet(num_actions=2, credits=(Fraction(0), Fraction(1)), num_obs=1)


class SPEnv(ChronologicalSemimeasure):
    """Prediction environment: c_k = 1 iff y_k equals the k-th sequence bit.

    The observation is empty (single dummy value); the true bit is always
    recoverable from (y_k, c_k).
    """

    def __init__(self, measure: SequenceMeasure):
        self.measure = measure
        self.alphabet = BINARY_CREDIT_ALPHABET

    @staticmethod
    def bits_from_history(h: History) -> tuple[int, ...]:
        # z_k = 1 iff prediction and credit agree
        return tuple(1 if (y == int(x.credit)) else 0 for y, x in h)

    def cond(self, h: History, y: int) -> dict[Percept, Fraction]:
        p0, p1 = self.measure.cond(self.bits_from_history(h))
        correct = p1 if y == 1 else p0
        wrong = p0 if y == 1 else p1
        dist = {}
        if wrong:
            dist[Percept(ZERO, 0)] = wrong
        if correct:
            dist[Percept(ONE, 0)] = correct
        return dist


class HeavenHellEnv(ChronologicalSemimeasure):
    """First action decides: c_k = 1 for all k iff y_1 equals the secret i."""

    def __init__(self, i: int):
        if i not in (0, 1):
            raise ValueError("heaven index must be 0 or 1")
        self.i = i
        self.alphabet = BINARY_CREDIT_ALPHABET

    def cond(self, h: History, y: int) -> dict[Percept, Fraction]:
        first = y if len(h) == 0 else h.steps[0][0]
        credit = ONE if first == self.i else ZERO
        if len(h) and any(x.credit != credit for _, x in h):
            raise EvidenceExhaustedError("history inconsistent with this heaven/hell index")
        return {Percept(credit, 0): ONE}


class NeedleEnv(ChronologicalSemimeasure):
    """One action is correct (c=1), the other N-1 are wrong (c=0)."""

    def __init__(self, num_actions: int, target: int):
        if not 0 <= target < num_actions:
            raise ValueError("target action out of range")
        self.target = target
        self.alphabet = Alphabet(num_actions, (Fraction(0), Fraction(1)), 1)

    def cond(self, h: History, y: int) -> dict[Percept, Fraction]:
        for ya, x in h:
            want = ONE if ya == self.target else ZERO
            if x.credit != want:
                raise EvidenceExhaustedError("history inconsistent with this needle target")
        credit = ONE if y == self.target else ZERO
        return {Percept(credit, 0): ONE}


# -- strategic games ---------------------------------------------------------


@dataclass(frozen=True)
class GameTree:
    """Alternating fixed-depth game: agent moves, opponent replies, repeat.

    `payoffs[moves]` is the terminal value after `rounds` full (y, x) rounds,
    from the agent's point of view (agent maximizes, opponent minimizes).
    """

    rounds: int
    y_branch: int
    x_branch: int
    payoffs: dict[tuple[int, ...], Fraction]

    def __post_init__(self):
        want = (self.y_branch * self.x_branch) ** self.rounds
        if len(self.payoffs) != want:
            raise ValueError(f"expected {want} terminal payoffs, got {len(self.payoffs)}")

    def payoff(self, moves: tuple[int, ...]) -> Fraction:
        return self.payoffs[moves]

    def is_terminal(self, moves: tuple[int, ...]) -> bool:
        return len(moves) == 2 * self.rounds

    def branch(self, moves: tuple[int, ...]) -> int:
        return self.y_branch if len(moves) % 2 == 0 else self.x_branch

    def value(self, moves: tuple[int, ...]) -> Fraction:
        """Minimax value of the node reached by `moves` (backward induction)."""
        if self.is_terminal(moves):
            return self.payoff(moves)
        children = [self.value(moves + (m,)) for m in range(self.branch(moves))]
        return max(children) if len(moves) % 2 == 0 else min(children)

    def opponent_reply(self, moves: tuple[int, ...]) -> int:
        """Minimizing reply after the agent's move, smallest index on ties."""
        if len(moves) % 2 != 1:
            raise ValueError("opponent replies only after an agent move")
        best, best_x = None, 0
        for x in range(self.x_branch):
            v = self.value(moves + (x,))
            if best is None or v < best:
                best, best_x = v, x
        return best_x

    @classmethod
    def random(cls, rounds: int, y_branch: int, x_branch: int, rng,
               values: tuple[int, ...] = (-1, 0, 1)) -> "GameTree":
        payoffs = {}
        for leaf in _move_sequences(rounds, y_branch, x_branch):
            payoffs[leaf] = Fraction(int(rng.choice(values)))
        return cls(rounds, y_branch, x_branch, payoffs)


def _move_sequences(rounds: int, y_branch: int, x_branch: int) -> Iterable[tuple[int, ...]]:
    seqs: list[tuple[int, ...]] = [()]
    for _ in range(rounds):
        seqs = [s + (y,) for s in seqs for y in range(y_branch)]
        seqs = [s + (x,) for s in seqs for x in range(x_branch)]
    return seqs


def parse_game_tree(text: str, y_branch: int = 2, x_branch: int = 2) -> GameTree:
    """Nested-parenthesis terminal payoffs, e.g. '((1 -1)(0 0))' for one round.

    Nesting alternates agent/opponent levels; leaves are rationals.
    """

    def parse(tokens: list[str], pos: int):
        if tokens[pos] == "(":
            pos += 1
            children = []
            while tokens[pos] != ")":
                node, pos = parse(tokens, pos)
                children.append(node)
            return children, pos + 1
        return Fraction(tokens[pos]), pos + 1

    tokens = text.replace("(", " ( ").replace(")", " ) ").split()
    tree, pos = parse(tokens, 0)
    if pos != len(tokens):
        raise ValueError("trailing tokens after game tree")

    payoffs: dict[tuple[int, ...], Fraction] = {}
    depth_holder = {"d": None}

    def flatten(node, moves: tuple[int, ...]):
        if isinstance(node, Fraction):
            if depth_holder["d"] is None:
                depth_holder["d"] = len(moves)
            if len(moves) != depth_holder["d"] or len(moves) % 2 != 0:
                raise ValueError("leaves must sit at one even depth")
            payoffs[moves] = node
            return
        want = y_branch if len(moves) % 2 == 0 else x_branch
        if len(node) != want:
            raise ValueError(f"node at depth {len(moves)} has {len(node)} children, wants {want}")
        for i, child in enumerate(node):
            flatten(child, moves + (i,))

    flatten(tree, ())
    return GameTree(depth_holder["d"] // 2, y_branch, x_branch, payoffs)


def format_game_tree(tree: GameTree) -> str:
    def emit(moves: tuple[int, ...]) -> str:
        if tree.is_terminal(moves):
            return str(tree.payoff(moves))
        parts = [emit(moves + (m,)) for m in range(tree.branch(moves))]
        return "(" + " ".join(parts) + ")"

    return emit(())


class MinimaxGameEnv(ChronologicalSemimeasure):
    """Game against a perfect minimizing opponent; credit only at game end.

    The observation carries the opponent's move; c_k = 0 before the final
    round and the terminal payoff at round n.
    """

    def __init__(self, tree: GameTree):
        self.tree = tree
        credits = sorted({ZERO} | set(tree.payoffs.values()))
        self.alphabet = Alphabet(tree.y_branch, tuple(credits), tree.x_branch)

    def _moves(self, h: History) -> tuple[int, ...]:
        moves: tuple[int, ...] = ()
        for k, (y, x) in enumerate(h, start=1):
            moves += (y,)
            reply = self.tree.opponent_reply(moves)
            want_credit = self.tree.payoff(moves + (reply,)) if k == self.tree.rounds else ZERO
            if x.obs != reply or x.credit != want_credit:
                raise EvidenceExhaustedError("history deviates from the minimax opponent")
            moves += (x.obs,)
        return moves

    def cond(self, h: History, y: int) -> dict[Percept, Fraction]:
        k = len(h) + 1
        if k > self.tree.rounds:
            raise ValueError(f"cycle {k} beyond game length {self.tree.rounds}")
        moves = self._moves(h) + (y,)
        reply = self.tree.opponent_reply(moves)
        credit = self.tree.payoff(moves + (reply,)) if k == self.tree.rounds else ZERO
        return {Percept(credit, reply): ONE}


# -- function minimization ---------------------------------------------------


def fm_weights(variant: str, lifetime: int, decay: Fraction | None = None) -> tuple[Fraction, ...]:
    """Credit weights alpha_1..alpha_T for the final/sum/exponential schedules.

    The exponential schedule uses a rational per-step decay b (alpha_k =
    b^(T-k)); b -> 0 recovers the final-only schedule, b = 1 the sum schedule.
    """
    if variant == "fmf":
        return tuple(Fraction(int(k == lifetime)) for k in range(1, lifetime + 1))
    if variant == "fms":
        return tuple(ONE for _ in range(lifetime))
    if variant == "fme":
        if decay is None or not 0 < decay <= 1:
            raise ValueError("fme needs a rational decay in (0, 1]")
        return tuple(Fraction(decay) ** (lifetime - k) for k in range(1, lifetime + 1))
    raise ValueError(f"unknown weighting variant {variant!r}")


class FMEnv(ChronologicalSemimeasure):
    """Random function instance: percepts report z_k = f(y_k), c_k = -alpha_k z_k."""

    def __init__(
        self,
        functions: Sequence[tuple[tuple[int, ...], Fraction]],
        z_values: tuple[Fraction, ...],
        weights: tuple[Fraction, ...],
        drop_obs: bool = False,
    ):
        if not functions:
            raise ValueError("function class must be non-empty")
        if sum((p for _, p in functions), ZERO) != 1:
            raise ValueError("function probabilities must sum to 1")
        num_actions = len(functions[0][0])
        for f, _ in functions:
            if len(f) != num_actions or any(not 0 <= z < len(z_values) for z in f):
                raise ValueError("malformed function table")
        if drop_obs and any(a == 0 for a in weights):
            raise ValueError("dropping the observation needs all weights non-zero")
        self.functions = tuple((tuple(f), Fraction(p)) for f, p in functions)
        self.z_values = tuple(Fraction(z) for z in z_values)
        self.weights = tuple(Fraction(a) for a in weights)
        self.drop_obs = drop_obs
        credits = sorted({-a * z for a in self.weights for z in self.z_values} | {ZERO})
        self.alphabet = Alphabet(num_actions, tuple(credits), 1 if drop_obs else len(z_values))

    @property
    def lifetime(self) -> int:
        return len(self.weights)

    def _z_index(self, cycle: int, x: Percept) -> int:
        if not self.drop_obs:
            return x.obs
        value = -x.credit / self.weights[cycle - 1]
        return self.z_values.index(value)

    def consistent_functions(self, h: History) -> list[tuple[tuple[int, ...], Fraction]]:
        observed = [(y, self._z_index(i + 1, x)) for i, (y, x) in enumerate(h)]
        return [(f, p) for f, p in self.functions if all(f[y] == z for y, z in observed)]

    def cond(self, h: History, y: int) -> dict[Percept, Fraction]:
        k = len(h) + 1
        if k > self.lifetime:
            raise ValueError(f"cycle {k} beyond the {self.lifetime}-cycle schedule")
        alive = self.consistent_functions(h)
        denom = sum((p for _, p in alive), ZERO)
        if denom == 0:
            raise EvidenceExhaustedError("no function matches the observed values")
        by_z: dict[int, Fraction] = {}
        for f, p in alive:
            by_z[f[y]] = by_z.get(f[y], ZERO) + p
        dist = {}
        for z, p in sorted(by_z.items()):
            credit = -self.weights[k - 1] * self.z_values[z]
            dist[Percept(credit, 0 if self.drop_obs else z)] = p / denom
        return dist

    def expected_z(self, h: History, y: int) -> Fraction:
        """mu-expected function value of trying y next; used by the greedy baseline."""
        alive = self.consistent_functions(h)
        denom = sum((p for _, p in alive), ZERO)
        if denom == 0:
            raise EvidenceExhaustedError("no function matches the observed values")
        return sum((p * self.z_values[f[y]] for f, p in alive), ZERO) / denom


def all_functions_instance(weights: tuple[Fraction, ...], drop_obs: bool = False) -> FMEnv:
    """The 16 equiprobable functions {0,1} -> {1,2,3,4}."""
    functions = [((a, b), Fraction(1, 16)) for a in range(4) for b in range(4)]
    return FMEnv(functions, (Fraction(1), Fraction(2), Fraction(3), Fraction(4)), weights, drop_obs)


# -- supervised learning by examples ----------------------------------------


class EXEnv(ChronologicalSemimeasure):
    """Relation learning: percepts present examples, credits grade answers.

    Percept observation encodes (z, v) with v in V or '?'; the credit in
    cycle k grades the action against the z shown in cycle k-1 (cycle 1's
    credit is a dummy 0).  Wrong examples never occur: presentation mass is
    zero outside R union (Z x {?}).
    """

    def __init__(
        self,
        relations: Sequence[frozenset[tuple[int, int]]],
        sigma: Sequence[Fraction],
        num_z: int,
        num_v: int,
        question_prob: Fraction,
    ):
        if len(relations) != len(sigma) or not relations:
            raise ValueError("need matching non-empty relations and prior")
        if sum((Fraction(s) for s in sigma), ZERO) != 1:
            raise ValueError("relation prior must sum to 1")
        if not 0 <= Fraction(question_prob) <= 1:
            raise ValueError("question probability must lie in [0, 1]")
        for R in relations:
            if not R and Fraction(question_prob) < 1:
                raise ValueError("empty relation cannot present examples")
            if any(not (0 <= z < num_z and 0 <= v < num_v) for z, v in R):
                raise ValueError("relation pair out of range")
        self.relations = tuple(frozenset(R) for R in relations)
        self.sigma = tuple(Fraction(s) for s in sigma)
        self.num_z = num_z
        self.num_v = num_v
        self.question_prob = Fraction(question_prob)
        self.alphabet = Alphabet(num_v, (Fraction(0), Fraction(1)), num_z * (num_v + 1))

    QUESTION = -1

    def decode_obs(self, obs: int) -> tuple[int, int]:
        """(z, v) with v = QUESTION for a '?' presentation."""
        z, v = divmod(obs, self.num_v + 1)
        return z, (self.QUESTION if v == self.num_v else v)

    def encode_obs(self, z: int, v: int) -> int:
        return z * (self.num_v + 1) + (self.num_v if v == self.QUESTION else v)

    def _presented(self, R: frozenset, obs: int) -> Fraction:
        z, v = self.decode_obs(obs)
        if v == self.QUESTION:
            return self.question_prob / self.num_z
        if (z, v) in R:
            return (ONE - self.question_prob) / len(R)
        return ZERO

    def _posterior(self, h: History) -> list[Fraction]:
        masses = []
        for R, prior in zip(self.relations, self.sigma):
            mass = prior
            prev_z: int | None = None
            for i, (y, x) in enumerate(h, start=1):
                want_credit = ZERO if prev_z is None else Fraction(int((prev_z, y) in R))
                if x.credit != want_credit:
                    mass = ZERO
                    break
                mass *= self._presented(R, x.obs)
                prev_z, _ = self.decode_obs(x.obs)
            masses.append(mass)
        return masses

    def cond(self, h: History, y: int) -> dict[Percept, Fraction]:
        masses = self._posterior(h)
        denom = sum(masses, ZERO)
        if denom == 0:
            raise EvidenceExhaustedError("no candidate relation matches the history")
        prev_z = self.decode_obs(h.steps[-1][1].obs)[0] if len(h) else None
        dist: dict[Percept, Fraction] = {}
        for R, mass in zip(self.relations, masses):
            if mass == 0:
                continue
            credit = ZERO if prev_z is None else Fraction(int((prev_z, y) in R))
            for obs in range(self.alphabet.num_obs):
                p = self._presented(R, obs)
                if p:
                    key = Percept(credit, obs)
                    dist[key] = dist.get(key, ZERO) + mass * p
        return {x: p / denom for x, p in dist.items()}


def relation_from_function(values: Sequence[int]) -> frozenset[tuple[int, int]]:
    return frozenset((z, v) for z, v in enumerate(values))


# -- delayed switch ----------------------------------------------------------


def _ceil_sqrt(n: int) -> int:
    r = math.isqrt(n)
    return r if r * r == n else r + 1


class DelayedSwitchEnv(ChronologicalSemimeasure):
    """Ones pay off only after a long-enough earlier run of zeros.

    Output 1 in cycle k earns credit 1 iff some l >= 1 exists with actions
    k-l-ceil(sqrt(l)) .. k-l all zero (and in range); output 0 earns 0.
    """

    def __init__(self, lifetime: int):
        if lifetime < 1:
            raise ValueError("lifetime must be positive")
        self.lifetime = lifetime
        self.alphabet = BINARY_CREDIT_ALPHABET

    @staticmethod
    def one_pays(actions: Sequence[int], k: int) -> bool:
        """Whether outputting 1 in cycle k pays, given actions for cycles < k."""
        for l in range(1, k):
            lo = k - l - _ceil_sqrt(l)
            hi = k - l
            if lo < 1:
                continue
            if all(actions[j - 1] == 0 for j in range(lo, hi + 1)):
                return True
        return False

    @classmethod
    def credit(cls, actions: Sequence[int], k: int) -> Fraction:
        if actions[k - 1] == 0:
            return ZERO
        return ONE if cls.one_pays(actions, k) else ZERO

    @classmethod
    def total_credit(cls, actions: Sequence[int]) -> Fraction:
        return sum((cls.credit(actions, k) for k in range(1, len(actions) + 1)), ZERO)

    def cond(self, h: History, y: int) -> dict[Percept, Fraction]:
        actions = h.actions() + (y,)
        for k, (_, x) in enumerate(h, start=1):
            if x.credit != self.credit(actions, k):
                raise EvidenceExhaustedError("history inconsistent with the switch rule")
        return {Percept(self.credit(actions, len(h) + 1), 0): ONE}


# -- products of independent episodes ----------------------------------------


class EpisodicEnv(ChronologicalSemimeasure):
    """Factorizable measure: independent factors over consecutive episodes."""

    def __init__(self, factors: Sequence[ChronologicalSemimeasure], lengths: Sequence[int]):
        if len(factors) != len(lengths) or not factors:
            raise ValueError("need matching non-empty factors and lengths")
        if any(l < 1 for l in lengths):
            raise ValueError("episode lengths must be positive")
        alphabets = {f.alphabet for f in factors}
        if len(alphabets) != 1:
            raise ValueError("episode factors must share one alphabet")
        self.factors = tuple(factors)
        self.lengths = tuple(lengths)
        self.alphabet = self.factors[0].alphabet
        self.boundaries = [0]
        for l in lengths:
            self.boundaries.append(self.boundaries[-1] + l)

    @property
    def lifetime(self) -> int:
        return self.boundaries[-1]

    def episode_of(self, k: int) -> int:
        """Episode index r with n_r < k <= n_{r+1}."""
        for r in range(len(self.factors)):
            if self.boundaries[r] < k <= self.boundaries[r + 1]:
                return r
        raise ValueError(f"cycle {k} beyond the {self.lifetime}-cycle schedule")

    def local_history(self, h: History, r: int) -> History:
        return History(h.steps[self.boundaries[r] : self.boundaries[r + 1]])

    def cond(self, h: History, y: int) -> dict[Percept, Fraction]:
        k = len(h) + 1
        r = self.episode_of(k)
        return self.factors[r].cond(self.local_history(h, r), y)


# ---------------------------------------------------------------------------
# Specs and the builder
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class HeavenHellSpec:
    i: int


@dataclass(frozen=True)
class SPSpec:
    measure: SequenceMeasure


@dataclass(frozen=True)
class NeedleSpec:
    num_actions: int
    target: int


@dataclass(frozen=True)
class MinimaxGameSpec:
    tree: GameTree


@dataclass(frozen=True)
class RepeatedGameSpec:
    inner: MinimaxGameSpec
    episodes: int


@dataclass(frozen=True)
class FMSpec:
    functions: tuple[tuple[tuple[int, ...], Fraction], ...]
    z_values: tuple[Fraction, ...]
    weights: tuple[Fraction, ...]
    drop_obs: bool = False


@dataclass(frozen=True)
class EXSpec:
    relations: tuple[frozenset, ...]
    sigma: tuple[Fraction, ...]
    num_z: int
    num_v: int
    question_prob: Fraction


@dataclass(frozen=True)
class DelayedSwitchSpec:
    lifetime: int


@dataclass(frozen=True)
class EpisodicSpec:
    factors: tuple["EnvSpec", ...]
    lengths: tuple[int, ...]


EnvSpec = Union[
    HeavenHellSpec,
    SPSpec,
    NeedleSpec,
    MinimaxGameSpec,
    RepeatedGameSpec,
    FMSpec,
    EXSpec,
    DelayedSwitchSpec,
    EpisodicSpec,
]


def build_mu(spec: EnvSpec) -> ChronologicalSemimeasure:
    """Construct the true environment measure for a problem spec."""
    if isinstance(spec, HeavenHellSpec):
        return HeavenHellEnv(spec.i)
    if isinstance(spec, SPSpec):
        return SPEnv(spec.measure)
    if isinstance(spec, NeedleSpec):
        return NeedleEnv(spec.num_actions, spec.target)
    if isinstance(spec, MinimaxGameSpec):
        return MinimaxGameEnv(spec.tree)
    if isinstance(spec, RepeatedGameSpec):
        game = MinimaxGameEnv(spec.inner.tree)
        return EpisodicEnv([game] * spec.episodes, [spec.inner.tree.rounds] * spec.episodes)
    if isinstance(spec, FMSpec):
        return FMEnv(spec.functions, spec.z_values, spec.weights, spec.drop_obs)
    if isinstance(spec, EXSpec):
        return EXEnv(spec.relations, spec.sigma, spec.num_z, spec.num_v, spec.question_prob)
    if isinstance(spec, DelayedSwitchSpec):
        return DelayedSwitchEnv(spec.lifetime)
    if isinstance(spec, EpisodicSpec):
        return EpisodicEnv([build_mu(f) for f in spec.factors], list(spec.lengths))
    raise TypeError(f"unknown environment spec {spec!r}")


# ---------------------------------------------------------------------------
# Sampling
# ---------------------------------------------------------------------------


def rand_below(rng: np.random.Generator, n: int) -> int:
    """Uniform integer in [0, n) for arbitrarily large n (rejection on bits)."""
    if n <= 1:
        return 0
    k = (n - 1).bit_length()
    while True:
        u = 0
        remaining = k
        while remaining > 0:
            take = min(32, remaining)
            u = (u << take) | (int(rng.integers(0, 1 << 32)) >> (32 - take))
            remaining -= take
        if u < n:
            return u


def sample_percept(
    env: ChronologicalSemimeasure, h: History, y: int, rng: np.random.Generator
) -> Percept:
    """Draw the environment's reply; exact and deterministic given the seed."""
    return sample_from(env.cond(h, y), lambda n: rand_below(rng, n))
