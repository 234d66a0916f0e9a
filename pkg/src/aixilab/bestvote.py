"""Time-bounded best-vote agent over a pool of self-rating programs.

Pool members are extended chronological programs: each cycle they emit a
claimed credit w_k and an action y_k before seeing the cycle's percept.  The
best-vote agent runs every member (step-budgeted), clamps each claim to the
program's class-expected credit so that no member ever overrates itself
(validity by construction), and plays the action of the highest valid claim,
ties resolved by program encoding order.

Bytecode members run on a minimal register VM: 4 wrapping 32-bit registers,
load/add/negate, reads of the previous cycle's action/credit/observation,
a forward conditional jump, rating+action emission, and halt.  Encodings are
self-delimiting (prefix-free opcodes, explicit end marker), so "all decodable
strings of length <= l_bits" is a well-defined finite pool.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from fractions import Fraction
from typing import Callable, Sequence

from .core import Alphabet, History, HorizonPolicy, FixedLifetime, horizon_end
from .semimeasure import Transducer, TransducerClass

ZERO = Fraction(0)
RATING_DENOM = 2**16

REG_COUNT = 4
_REG_MOD = 1 << 32
_REG_HALF = 1 << 31

# opcode -> (mnemonic, operand bit widths)
_OPCODES_3 = {
    "000": ("OUT", (3, 2)),     # emit w=const, y=const
    "001": ("OUTR", (2, 2)),    # emit w=reg, y=const
    "010": ("LDI", (2, 4)),     # reg := imm
    "011": ("ADD", (2, 2)),     # reg += reg
}
_OPCODES_4 = {
    "1000": ("NEG", (2,)),      # reg := -reg
    "1001": ("RDC", (2,)),      # reg := floor(previous credit)
    "1010": ("RDA", (2,)),      # reg := previous executed action
    "1011": ("RDO", (2,)),      # reg := previous observation index
    "1100": ("JNZ", (2, 4)),    # skip n instructions if reg != 0
    "1101": ("OUTRR", (2, 2)),  # emit w=reg, y=reg mod |Y|
    "1110": ("HALT", ()),
    "1111": ("END", ()),
}

Instr = tuple


def decode_program(bits: str) -> tuple[Instr, ...] | None:
    """Parse a bit string into instructions; None unless it is one complete
    program (an END marker exactly at the end)."""
    instrs: list[Instr] = []
    pos, n = 0, len(bits)
    while True:
        if pos + 3 > n:
            return None
        if bits[pos] == "0":
            op, widths = _OPCODES_3[bits[pos : pos + 3]]
            pos += 3
        else:
            if pos + 4 > n:
                return None
            op, widths = _OPCODES_4[bits[pos : pos + 4]]
            pos += 4
        args = []
        for w in widths:
            if pos + w > n:
                return None
            args.append(int(bits[pos : pos + w], 2))
            pos += w
        instrs.append((op, *args))
        if op == "END":
            return tuple(instrs) if pos == n else None


def encode_program(instrs: Sequence[Instr]) -> str:
    """Inverse of decode_program for building known test programs."""
    rev3 = {name: (code, widths) for code, (name, widths) in _OPCODES_3.items()}
    rev4 = {name: (code, widths) for code, (name, widths) in _OPCODES_4.items()}
    out = []
    for instr in instrs:
        name, *args = instr
        code, widths = rev3.get(name) or rev4[name]
        out.append(code)
        for w, a in zip(widths, args):
            out.append(format(a, f"0{w}b"))
    return "".join(out)


def _wrap_reg(v: int) -> int:
    return (v + _REG_HALF) % _REG_MOD - _REG_HALF


@dataclass(frozen=True)
class CycleContext:
    """What a program may read before emitting in cycle k."""

    prev_action: int = 0
    prev_credit_floor: int = 0
    prev_obs: int = 0

    @classmethod
    def from_history(cls, h: History) -> "CycleContext":
        if len(h) == 0:
            return cls()
        y, x = h.steps[-1]
        return cls(y, math.floor(x.credit), x.obs)


class ProgramRun:
    """One incremental execution; fork() snapshots the state for rollouts."""

    def cycle(self, h: History, t_budget: int) -> tuple[Fraction | None, int | None, int]:
        raise NotImplementedError

    def fork(self) -> "ProgramRun":
        raise NotImplementedError


@dataclass(frozen=True)
class VmProgram:
    """Self-delimiting bytecode member; identity = the encoding itself."""

    bits: str
    instrs: tuple[Instr, ...]
    num_actions: int

    @property
    def ident(self) -> str:
        return "q:" + self.bits

    def __len__(self) -> int:
        return len(self.bits)

    def start(self) -> "VmRun":
        return VmRun(self)

    @classmethod
    def from_bits(cls, bits: str, num_actions: int) -> "VmProgram | None":
        instrs = decode_program(bits)
        if instrs is None:
            return None
        return cls(bits, instrs, num_actions)


class VmRun(ProgramRun):
    def __init__(self, program: VmProgram, regs: list[int] | None = None):
        self.program = program
        self.regs = [0] * REG_COUNT if regs is None else list(regs)

    def fork(self) -> "VmRun":
        return VmRun(self.program, self.regs)

    def cycle(self, h: History, t_budget: int):
        ctx = CycleContext.from_history(h)
        regs = self.regs
        instrs = self.program.instrs
        pc = steps = 0
        while steps < t_budget and pc < len(instrs):
            op = instrs[pc]
            steps += 1
            name = op[0]
            if name == "OUT":
                return Fraction(op[1]), op[2] % self.program.num_actions, steps
            if name == "OUTR":
                return Fraction(regs[op[1]]), op[2] % self.program.num_actions, steps
            if name == "OUTRR":
                return Fraction(regs[op[1]]), regs[op[2]] % self.program.num_actions, steps
            if name == "LDI":
                regs[op[1]] = op[2]
            elif name == "ADD":
                regs[op[1]] = _wrap_reg(regs[op[1]] + regs[op[2]])
            elif name == "NEG":
                regs[op[1]] = _wrap_reg(-regs[op[1]])
            elif name == "RDC":
                regs[op[1]] = ctx.prev_credit_floor
            elif name == "RDA":
                regs[op[1]] = ctx.prev_action
            elif name == "RDO":
                regs[op[1]] = ctx.prev_obs
            elif name == "JNZ":
                if regs[op[1]] != 0:
                    pc += op[2]
            elif name in ("HALT", "END"):
                return None, None, steps
            pc += 1
        return None, None, steps  # budget exhausted or fell off the end


@dataclass(frozen=True)
class NativeProgram:
    """Injected non-bytecode member (e.g. an informed-agent oracle).

    Must be a pure function of the extended history; natives are charged one
    VM step per cycle in the cost counters.
    """

    ident: str
    act_fn: Callable[[History], int]
    claim_fn: Callable[[History], Fraction]

    def start(self) -> "NativeRun":
        return NativeRun(self)


class NativeRun(ProgramRun):
    def __init__(self, program: NativeProgram):
        self.program = program

    def fork(self) -> "NativeRun":
        return self  # pure in the history, nothing to snapshot

    def cycle(self, h: History, t_budget: int):
        return Fraction(self.program.claim_fn(h)), self.program.act_fn(h), 1


def quantize_rating(w: Fraction) -> Fraction:
    """Round down onto the fixed claim grid (denominator 2^16)."""
    return Fraction(math.floor(w * RATING_DENOM), RATING_DENOM)


@dataclass
class WrappedProgram:
    """Timeout/bounds wrapper: no output means (w=0, default action)."""

    program: VmProgram | NativeProgram
    default_action: int = 0

    @property
    def ident(self) -> str:
        return self.program.ident

    def start(self) -> ProgramRun:
        return self.program.start()

    def wrapped_cycle(self, run: ProgramRun, h: History, t_budget: int, bound: Fraction):
        w, y, steps = run.cycle(h, t_budget)
        if w is None or y is None:
            return ZERO, self.default_action, steps
        w = quantize_rating(w)
        w = max(-bound, min(bound, w))
        return w, y, steps


# ---------------------------------------------------------------------------
# Class-expected credit of a program (the clamp and the order relation)
# ---------------------------------------------------------------------------


def estimate_credit(
    wrapped: WrappedProgram,
    h: History,
    cls: TransducerClass,
    k: int,
    m: int,
    t_budget: int,
    alphabet: Alphabet | None = None,
    step_sink: list | None = None,
) -> Fraction:
    """Unnormalized class-expected credit sum_q 2^-l(q) C_{km}(p, q).

    Rolls the program out from cycle k to m against every transducer
    consistent with h, continuing the given history (the program's own past
    suggestions are irrelevant; it reads the actual history).  An empty
    consistent set yields 0.
    """
    if k != len(h) + 1:
        raise ValueError("estimate_credit needs k = len(h) + 1")
    alphabet = alphabet or cls.alphabet
    base = wrapped.start()
    steps_used = 0
    for j in range(len(h)):
        _, _, s = base.cycle(h.prefix(j), t_budget)
        steps_used += s
    total = ZERO
    for q in cls.consistent(h):
        run = base.fork()
        qstate = q.state_after(h.actions())
        cur = h
        credit = ZERO
        for _ in range(k, m + 1):
            _, y, s = wrapped.wrapped_cycle(run, cur, t_budget, _no_bound)
            steps_used += s
            qstate, pi = q.step(qstate, y)
            x = alphabet.percept(pi)
            credit += x.credit
            cur = cur.extended(y, x)
        total += q.weight * credit
    if step_sink is not None:
        step_sink.append(steps_used)
    return total


_no_bound = Fraction(1 << 62)  # rollouts only need actions; claims stay raw


# ---------------------------------------------------------------------------
# The pool and the vote
# ---------------------------------------------------------------------------


@dataclass
class PoolClaim:
    member: int
    w: Fraction
    y: int
    raw_w: Fraction
    steps: int


@dataclass
class Pool:
    """Wrapped programs plus the clamp context making every claim valid."""

    members: tuple[WrappedProgram, ...]
    l_bits: int
    t_steps: int
    clamp_class: TransducerClass
    horizon: HorizonPolicy
    lifetime: int
    alphabet: Alphabet
    setup_strings_examined: int = 0
    select_steps_last_cycle: int = 0
    clamp_steps_last_cycle: int = 0

    @property
    def rating_bound(self) -> Fraction:
        return self.alphabet.credit_bound * self.lifetime

    def horizon_cycle(self, k: int) -> int:
        return horizon_end(self.horizon, k, max(self.lifetime, k))

    def claims(self, h: History, runs: list[ProgramRun] | None = None) -> list[PoolClaim]:
        """Clamped (w_k, y_k) for every member at cycle k = len(h)+1.

        With `runs` given, each member advances incrementally (one budgeted
        cycle per member); otherwise members replay the whole history.
        """
        k = len(h) + 1
        m = self.horizon_cycle(k)
        select_steps = 0
        clamp_steps: list[int] = []
        out = []
        for idx, member in enumerate(self.members):
            if runs is None:
                run = member.start()
                for j in range(len(h)):
                    run.cycle(h.prefix(j), self.t_steps)
            else:
                run = runs[idx]
            raw_w, y, steps = member.wrapped_cycle(run, h, self.t_steps, self.rating_bound)
            select_steps += steps
            est = estimate_credit(
                member, h, self.clamp_class, k, m, self.t_steps, self.alphabet, clamp_steps
            )
            out.append(PoolClaim(idx, min(raw_w, est), y, raw_w, steps))
        self.select_steps_last_cycle = select_steps
        self.clamp_steps_last_cycle = sum(clamp_steps)
        return out


@dataclass
class BestVoteChoice:
    action: int
    claim: Fraction
    selected: int | None
    claims: list[PoolClaim]


def bestvote_cycle(pool: Pool, h: History, runs: list[ProgramRun] | None = None) -> BestVoteChoice:
    """Run every member, pick the highest valid claim (earliest member wins
    ties; members are ordered natives-first then by encoding).  An empty pool
    falls back to action 0 with claim 0."""
    claims = pool.claims(h, runs)
    if not claims:
        return BestVoteChoice(0, ZERO, None, [])
    best = max(range(len(claims)), key=lambda i: (claims[i].w, -i))
    return BestVoteChoice(claims[best].y, claims[best].w, best, claims)


def build_pool(
    l_bits: int,
    t_steps: int,
    clamp_class: TransducerClass,
    horizon: HorizonPolicy | None = None,
    lifetime: int = 1,
    alphabet: Alphabet | None = None,
    extra: Sequence[NativeProgram] = (),
) -> Pool:
    """Enumerate all decodable bytecode of length <= l_bits and wrap it.

    Injected `extra` programs precede the bytecode members in the tie-break
    order.  Setup examines at most 2^(l_bits+1) strings.
    """
    if l_bits < 1 or t_steps < 1:
        raise ValueError("pool bounds must be positive")
    alphabet = alphabet or clamp_class.alphabet
    examined = 0
    bytecode: list[VmProgram] = []
    for length in range(1, l_bits + 1):
        for code in range(1 << length):
            examined += 1
            bits = format(code, f"0{length}b")
            prog = VmProgram.from_bits(bits, alphabet.num_actions)
            if prog is not None:
                bytecode.append(prog)
    bytecode.sort(key=lambda p: p.bits)
    members = [WrappedProgram(p) for p in extra] + [WrappedProgram(p) for p in bytecode]
    return Pool(
        members=tuple(members),
        l_bits=l_bits,
        t_steps=t_steps,
        clamp_class=clamp_class,
        horizon=horizon or FixedLifetime(),
        lifetime=lifetime,
        alphabet=alphabet,
        setup_strings_examined=examined,
    )


def save_pool_manifest(pool: Pool, path) -> None:
    """Bytecode members only, one `<bitlen>:<hex>` line each."""
    from .semimeasure import _bits_to_hex

    with open(path, "w") as fh:
        for member in pool.members:
            if isinstance(member.program, VmProgram):
                bits = member.program.bits
                fh.write(f"{len(bits)}:{_bits_to_hex(bits)}\n")


def load_pool_programs(path, num_actions: int) -> list[VmProgram]:
    from .semimeasure import _hex_to_bits

    programs = []
    with open(path) as fh:
        for lineno, line in enumerate(fh, 1):
            line = line.strip()
            if not line or line.startswith("#"):
                continue
            prog = VmProgram.from_bits(_hex_to_bits(line, lineno), num_actions)
            if prog is None:
                raise ValueError(f"line {lineno}: undecodable program bits")
            programs.append(prog)
    return programs


class BestVoteAgent:
    """Harness-facing policy: incremental per-member runs across one episode."""

    name = "bestvote"

    def __init__(self, pool: Pool):
        self.pool = pool
        self._runs: list[ProgramRun] | None = None
        self._seen = History()
        self.last_choice: BestVoteChoice | None = None

    def act(self, h: History) -> int:
        if self._runs is None or len(h) < len(self._seen) or h.steps[: len(self._seen)] != self._seen.steps:
            self._runs = [m.start() for m in self.pool.members]
            self._seen = History()
        # catch up: each run consumes every completed cycle exactly once
        for j in range(len(self._seen), len(h)):
            for run in self._runs:
                run.cycle(h.prefix(j), self.pool.t_steps)
        # emit on forks so the current cycle is not consumed twice
        choice = bestvote_cycle(self.pool, h, [run.fork() for run in self._runs])
        self._seen = h
        self.last_choice = choice
        return choice.action


# ---------------------------------------------------------------------------
# Effective intelligence order
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class CompareResult:
    holds: bool
    violation: tuple[int, int] | None = None  # (history index, cycle)

    def __bool__(self) -> bool:
        return self.holds


def claims_along(
    wrapped: WrappedProgram,
    h: History,
    pool: Pool | None = None,
    t_steps: int = 64,
    bound: Fraction | None = None,
) -> list[Fraction]:
    """Claimed credits w_1..w_{len(h)+1} along a history.

    Pool members are validity-clamped exactly as in the vote; a program from
    outside the pool answers for its own emissions (raw bounded claims).
    """
    out = []
    run = wrapped.start()
    bound = bound if bound is not None else _no_bound
    is_member = pool is not None and any(wrapped is m for m in pool.members)
    for k in range(1, len(h) + 2):
        prefix = h.prefix(k - 1)
        fork = run.fork()
        w, _, _ = wrapped.wrapped_cycle(fork, prefix, t_steps, bound)
        if is_member:
            m = pool.horizon_cycle(k)
            w = min(w, estimate_credit(wrapped, prefix, pool.clamp_class, k, m, pool.t_steps, pool.alphabet))
        if k <= len(h):
            run.cycle(prefix, t_steps)
        out.append(w)
    return out


def effective_compare(
    p: WrappedProgram,
    p_prime: WrappedProgram,
    histories: Sequence[History],
    pool: Pool | None = None,
    t_steps: int = 64,
) -> CompareResult:
    """Does p claim at least as much credit as p' at every supplied cycle?"""
    for hi, h in enumerate(histories):
        ws = claims_along(p, h, pool, t_steps)
        ws_prime = claims_along(p_prime, h, pool, t_steps)
        for k, (w, wp) in enumerate(zip(ws, ws_prime), start=1):
            if w < wp:
                return CompareResult(False, (hi, k))
    return CompareResult(True)
