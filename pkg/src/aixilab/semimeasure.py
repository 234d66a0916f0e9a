"""Chronological semimeasures: conditional environment models.

A chronological semimeasure rho assigns mass to percept sequences conditioned
on interleaved actions, with

    sum_x rho(yx_{<k} y x_k)  <=  rho(yx_{<k})      and   rho(empty) <= 1.

Proper environments are the equality case.  Three families live here:

* explicit weighted mixtures xi = sum_i 2^{-K_i} rho_i over a finite
  registered class (the K_i are declared code lengths, never estimated
  complexities),
* program-based xi over an enumerated class of self-delimiting finite-state
  transducers, weighted 2^{-l(q)} per encoding string,
* the conversion of an arbitrary approximator table into a chronological
  semimeasure, monotone in its recursion parameter.

All masses are exact `Fraction`s.
"""

from __future__ import annotations

import math
from abc import ABC, abstractmethod
from dataclasses import dataclass, field
from fractions import Fraction
from typing import Callable, Iterable, Mapping, Sequence

from .core import Alphabet, History, Percept

ZERO = Fraction(0)
ONE = Fraction(1)


class EvidenceExhaustedError(RuntimeError):
    """No remaining model mass is consistent with the conditioning history."""


class ChronologicalSemimeasure(ABC):
    """Conditional model interface shared by true environments and beliefs."""

    alphabet: Alphabet

    def prior_mass(self) -> Fraction:
        """Mass of the empty history, rho(empty) <= 1."""
        return ONE

    @abstractmethod
    def cond(self, h: History, y: int) -> dict[Percept, Fraction]:
        """Distribution of the next percept given history h and action y.

        Only percepts with positive mass appear as keys; entries sum to at
        most 1.  Raises EvidenceExhaustedError when h itself has zero mass.
        """

    def joint(self, h: History) -> Fraction:
        """rho(y x_{1:n}) via the chain rule rho(empty) * prod_k cond."""
        mass = self.prior_mass()
        prefix = History()
        for y, x in h:
            if mass == 0:
                return ZERO
            mass *= self.cond(prefix, y).get(x, ZERO)
            prefix = prefix.extended(y, x)
        return mass

    def evidence_gap(self, h: History, y: int) -> Fraction:
        """Lost mass 1 - sum_x cond(h, y); zero for proper environments."""
        return ONE - sum(self.cond(h, y).values(), ZERO)


def sample_from(dist: Mapping[Percept, Fraction], rand_below: Callable[[int], int]) -> Percept:
    """Exact draw from a rational distribution via a uniform-integer source.

    `rand_below(n)` must return a uniform integer in [0, n).  Percepts are
    visited in a deterministic (sorted) order so replays are bit-exact.
    Sub-normalized distributions are sampled conditional on their own mass.
    """
    items = sorted(dist.items())
    total = sum((p for _, p in items), ZERO)
    if total <= 0:
        raise EvidenceExhaustedError("cannot sample from zero-mass conditional")
    denom = math.lcm(*(p.denominator for _, p in items))
    scaled = [(x, int(p * denom)) for x, p in items]
    u = rand_below(int(total * denom))
    acc = 0
    for x, w in scaled:
        acc += w
        if u < acc:
            return x
    return scaled[-1][0]


# ---------------------------------------------------------------------------
# Explicit mixtures
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class MixtureComponent:
    """A model plus its declared code length K_i in bits (weight 2^-K_i)."""

    model: ChronologicalSemimeasure
    codelength: int
    ident: str = ""

    def __post_init__(self):
        if self.codelength < 0:
            raise ValueError("code length must be non-negative")

    @property
    def weight(self) -> Fraction:
        return Fraction(1, 2**self.codelength)


class MixtureModel(ChronologicalSemimeasure):
    """xi = sum_i 2^{-K_i} rho_i over a finite component registry.

    Dominates every component exactly: xi(h) >= 2^{-K_i} rho_i(h).
    """

    def __init__(self, components: Sequence[MixtureComponent]):
        if not components:
            raise ValueError("mixture needs at least one component")
        total = sum((c.weight for c in components), ZERO)
        if total > 1:
            raise ValueError(f"prior weights sum to {total} > 1")
        alphabets = {c.model.alphabet for c in components}
        if len(alphabets) != 1:
            raise ValueError("mixture components must share one alphabet")
        self.components = tuple(components)
        self.alphabet = self.components[0].model.alphabet
        self._joint_cache: list[dict[History, Fraction]] = [{} for _ in self.components]

    def prior_mass(self) -> Fraction:
        return sum((c.weight * c.model.prior_mass() for c in self.components), ZERO)

    def component_joint(self, i: int, h: History) -> Fraction:
        cache = self._joint_cache[i]
        if h not in cache:
            cache[h] = self.components[i].model.joint(h)
        return cache[h]

    def weighted_joints(self, h: History) -> list[Fraction]:
        return [c.weight * self.component_joint(i, h) for i, c in enumerate(self.components)]

    def joint(self, h: History) -> Fraction:
        return sum(self.weighted_joints(h), ZERO)

    def cond(self, h: History, y: int) -> dict[Percept, Fraction]:
        masses = self.weighted_joints(h)
        denom = sum(masses, ZERO)
        if denom == 0:
            raise EvidenceExhaustedError("all mixture components exclude this history")
        dist: dict[Percept, Fraction] = {}
        for mass, comp in zip(masses, self.components):
            if mass == 0:
                continue
            for x, p in comp.model.cond(h, y).items():
                if p:
                    dist[x] = dist.get(x, ZERO) + mass * p
        return {x: p / denom for x, p in dist.items() if p}

    def posterior_weights(self, h: History) -> tuple[Fraction, ...]:
        """Normalized posterior w_i(h) proportional to 2^{-K_i} rho_i(h)."""
        masses = self.weighted_joints(h)
        denom = sum(masses, ZERO)
        if denom == 0:
            raise EvidenceExhaustedError("all mixture components exclude this history")
        return tuple(m / denom for m in masses)


def mixture_cond(mix: MixtureModel, h: History, y: int) -> dict[Percept, Fraction]:
    return mix.cond(h, y)


def posterior_weights(mix: MixtureModel, h: History) -> tuple[Fraction, ...]:
    return mix.posterior_weights(h)


# ---------------------------------------------------------------------------
# Self-delimiting transducer programs
# ---------------------------------------------------------------------------
#
# Encoding: unary state count (k ones, then a zero), then the transition
# table row-major over (state, action), each entry packing a next-state index
# and a percept index with fixed widths.  The code is prefix free, so
# sum_q 2^{-l(q)} <= 1 over all decodable strings (Kraft).  Weights attach to
# strings: distinct encodings of equal-behavior machines both count.


def _bits_for(n: int) -> int:
    return max(n - 1, 0).bit_length()


@dataclass(frozen=True)
class Transducer:
    """Deterministic environment program: one table step per cycle."""

    bits: str
    num_states: int
    table: tuple[tuple[tuple[int, int], ...], ...]  # [state][action] -> (next, percept)

    def __len__(self) -> int:
        return len(self.bits)

    def length(self) -> int:
        return len(self.bits)

    @property
    def weight(self) -> Fraction:
        return Fraction(1, 2 ** len(self.bits))

    def step(self, state: int, y: int) -> tuple[int, int]:
        return self.table[state][y]

    def respond(self, actions: Iterable[int]) -> list[int]:
        """Percept indices emitted on the given action sequence."""
        state, out = 0, []
        for y in actions:
            state, x = self.table[state][y]
            out.append(x)
        return out

    def state_after(self, actions: Iterable[int]) -> int:
        state = 0
        for y in actions:
            state = self.table[state][y]
        return state


def transducer_code_length(num_states: int, alphabet: Alphabet) -> int:
    entry = _bits_for(num_states) + _bits_for(alphabet.num_percepts)
    return (num_states + 1) + num_states * alphabet.num_actions * entry


def encode_transducer(table: Sequence[Sequence[tuple[int, int]]], alphabet: Alphabet) -> Transducer:
    """Build a Transducer (with its canonical bit string) from a table."""
    k = len(table)
    sb = _bits_for(k)
    pb = _bits_for(alphabet.num_percepts)
    bits = ["1" * k + "0"]
    for row in table:
        if len(row) != alphabet.num_actions:
            raise ValueError("table row arity must equal the action count")
        for nxt, pi in row:
            if not (0 <= nxt < k and 0 <= pi < alphabet.num_percepts):
                raise ValueError("table entry out of range")
            bits.append(format(nxt, f"0{sb}b") if sb else "")
            bits.append(format(pi, f"0{pb}b") if pb else "")
    return Transducer("".join(bits), k, tuple(tuple(row) for row in table))


def decode_transducer(bits: str, alphabet: Alphabet, max_states: int | None = None) -> Transducer | None:
    """Decode a bit string; None when it is not a complete valid code word."""
    zero = bits.find("0")
    if zero <= 0:
        return None  # needs k >= 1 leading ones
    k = zero
    if max_states is not None and k > max_states:
        return None
    sb = _bits_for(k)
    pb = _bits_for(alphabet.num_percepts)
    entry = sb + pb
    body = bits[zero + 1 :]
    if len(body) != k * alphabet.num_actions * entry:
        return None
    table = []
    pos = 0
    for _ in range(k):
        row = []
        for _ in range(alphabet.num_actions):
            nxt = int(body[pos : pos + sb], 2) if sb else 0
            pos += sb
            pi = int(body[pos : pos + pb], 2) if pb else 0
            pos += pb
            if nxt >= k or pi >= alphabet.num_percepts:
                return None
            row.append((nxt, pi))
        table.append(tuple(row))
    return Transducer(bits, k, tuple(table))


@dataclass
class TransducerClass:
    """All decodable transducers with l(q) <= max_len over one alphabet."""

    alphabet: Alphabet
    max_len: int
    programs: tuple[Transducer, ...]

    _ENUMERATION_LIMIT = 1 << 20

    @classmethod
    def enumerate(cls, alphabet: Alphabet, max_len: int, max_states: int | None = None) -> "TransducerClass":
        programs: list[Transducer] = []
        k = 1
        while True:
            if max_states is not None and k > max_states:
                break
            total = transducer_code_length(k, alphabet)
            if total > max_len:
                break
            body_bits = total - (k + 1)
            if 2**body_bits > cls._ENUMERATION_LIMIT:
                raise ValueError(
                    f"enumeration of {2**body_bits} bodies for {k} states exceeds the desk-scale limit"
                )
            header = "1" * k + "0"
            for code in range(2**body_bits):
                body = format(code, f"0{body_bits}b") if body_bits else ""
                q = decode_transducer(header + body, alphabet, max_states)
                if q is not None:
                    programs.append(q)
            k += 1
        return cls(alphabet, max_len, tuple(programs))

    def total_weight(self) -> Fraction:
        return sum((q.weight for q in self.programs), ZERO)

    def consistent(self, h: History) -> list[Transducer]:
        want = [self.alphabet.percept_index(x) for x in h.percepts()]
        acts = h.actions()
        return [q for q in self.programs if q.respond(acts) == want]

    def save_manifest(self, path) -> None:
        """One `<bitlen>:<hex>` line per program (bit strings keep length)."""
        with open(path, "w") as fh:
            for q in self.programs:
                fh.write(f"{len(q.bits)}:{_bits_to_hex(q.bits)}\n")

    @classmethod
    def load_manifest(cls, path, alphabet: Alphabet) -> "TransducerClass":
        programs = []
        max_len = 0
        with open(path) as fh:
            for lineno, line in enumerate(fh, 1):
                line = line.strip()
                if not line or line.startswith("#"):
                    continue
                bits = _hex_to_bits(line, lineno)
                q = decode_transducer(bits, alphabet)
                if q is None:
                    raise ValueError(f"line {lineno}: undecodable transducer bits")
                programs.append(q)
                max_len = max(max_len, len(bits))
        return cls(alphabet, max_len, tuple(programs))


def _bits_to_hex(bits: str) -> str:
    padded = bits + "0" * (-len(bits) % 4)
    return "".join(format(int(padded[i : i + 4], 2), "x") for i in range(0, len(padded), 4)) or "0"


def _hex_to_bits(line: str, lineno: int = 0) -> str:
    length_text, sep, hex_text = line.partition(":")
    if not sep:
        raise ValueError(f"line {lineno}: expected <bitlen>:<hex>")
    n = int(length_text)
    raw = "".join(format(int(c, 16), "04b") for c in hex_text.strip())
    if len(raw) < n:
        raise ValueError(f"line {lineno}: fewer than {n} bits present")
    return raw[:n]


class ProgramXi(ChronologicalSemimeasure):
    """xi(yx_{1:n}) = sum over consistent transducers of 2^{-l(q)}."""

    def __init__(self, cls: TransducerClass):
        if not cls.programs:
            raise ValueError("transducer class is empty")
        self.transducers = cls
        self.alphabet = cls.alphabet
        # consistent-set cache grows along extending histories
        self._consistent: dict[History, tuple[tuple[Transducer, int], ...]] = {
            History(): tuple((q, 0) for q in cls.programs)
        }

    def prior_mass(self) -> Fraction:
        return self.transducers.total_weight()

    def _survivors(self, h: History) -> tuple[tuple[Transducer, int], ...]:
        """(program, current state) pairs consistent with h."""
        if h in self._consistent:
            return self._consistent[h]
        parent = self._survivors(h.prefix(len(h) - 1))
        y, x = h.steps[-1]
        want = self.alphabet.percept_index(x)
        survivors = []
        for q, state in parent:
            nxt, emitted = q.step(state, y)
            if emitted == want:
                survivors.append((q, nxt))
        result = tuple(survivors)
        self._consistent[h] = result
        return result

    def joint(self, h: History) -> Fraction:
        return sum((q.weight for q, _ in self._survivors(h)), ZERO)

    def cond(self, h: History, y: int) -> dict[Percept, Fraction]:
        survivors = self._survivors(h)
        denom = sum((q.weight for q, _ in survivors), ZERO)
        if denom == 0:
            raise EvidenceExhaustedError("no transducer is consistent with this history")
        by_percept: dict[int, Fraction] = {}
        for q, state in survivors:
            _, emitted = q.step(state, y)
            by_percept[emitted] = by_percept.get(emitted, ZERO) + q.weight
        return {self.alphabet.percept(i): w / denom for i, w in sorted(by_percept.items())}


def program_xi_cond(cls: TransducerClass, h: History, y: int) -> dict[Percept, Fraction]:
    return ProgramXi(cls).cond(h, y)


# ---------------------------------------------------------------------------
# Conversion of approximator tables into chronological semimeasures
# ---------------------------------------------------------------------------


@dataclass
class ChronologizedTable:
    """Finite table phi_hat(h, t), chronological for every t and monotone in t."""

    alphabet: Alphabet
    depth: int
    t_max: int
    values: dict[tuple[History, int], Fraction] = field(default_factory=dict)

    def value(self, h: History, t: int) -> Fraction:
        return self.values[(h, t)]

    def histories(self, depth: int) -> list[History]:
        level = [History()]
        for _ in range(depth):
            nxt = []
            for h in level:
                for y in self.alphabet.actions():
                    for x in self.alphabet.percepts():
                        nxt.append(h.extended(y, x))
            level = nxt
        return level


def chronologize(
    phi: Callable[[History, int], Fraction],
    alphabet: Alphabet,
    depth: int,
    t_max: int,
) -> ChronologizedTable:
    """Turn an arbitrary non-negative table into a chronological semimeasure.

    The raw table is first truncated (entries whose last percept index is
    >= the recursion parameter become 0; parameter 0 is identically 0) and
    then regularized to be monotone in the parameter -- the same
    preprocessing an enumeration from below provides for free.  Each level
    is then capped so that sibling sums never exceed the parent value; the
    capping index is shared across siblings, which is what makes the output
    chronological even for adversarial inputs.
    """
    table = ChronologizedTable(alphabet, depth, t_max)

    def phi_prime(h: History, i: int) -> Fraction:
        if i == 0:
            return ZERO
        if len(h) and alphabet.percept_index(h.steps[-1][1]) >= i:
            return ZERO
        v = Fraction(phi(h, i))
        if v < 0:
            raise ValueError("approximator values must be non-negative")
        return v

    def monotone_row(h: History) -> list[Fraction]:
        row, best = [], ZERO
        for i in range(t_max + 1):
            best = max(best, phi_prime(h, i))
            row.append(best)
        return row

    root_row = monotone_row(History())
    for t in range(t_max + 1):
        best = ZERO
        for i in range(t + 1):
            if root_row[i] <= 1:
                best = root_row[i]  # row is monotone, so the last admissible i wins
        table.values[(History(), t)] = best

    level = [History()]
    for _ in range(depth):
        nxt = []
        for parent in level:
            for y in alphabet.actions():
                children = [parent.extended(y, x) for x in alphabet.percepts()]
                rows = [monotone_row(c) for c in children]
                sums = [sum((row[i] for row in rows), ZERO) for i in range(t_max + 1)]
                for t in range(t_max + 1):
                    bound = table.values[(parent, t)]
                    i_star = 0
                    for i in range(t + 1):
                        if sums[i] <= bound:
                            i_star = i
                    for child, row in zip(children, rows):
                        table.values[(child, t)] = row[i_star]
                nxt.extend(children)
        level = nxt
    return table
