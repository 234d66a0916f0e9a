"""Run logs and the bound/convergence/agreement diagnostics over them.

Everything here is a pure function of (logs, models): error counts by
exhaustive enumeration, the prediction-excess bound check, the cumulative
squared-distance convergence sum, agreement deficits between a learner's
trajectory and the informed agent's choices, the deterministic prediction
bound relative to an enumerated program class, and the rollout-based
intelligence order over policies.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from fractions import Fraction
from typing import Callable, Sequence

from .agent import ExpectimaxAgent, _qvalue
from .bestvote import NativeProgram, WrappedProgram, estimate_credit
from .core import Alphabet, History, HorizonPolicy, Percept, horizon_end
from .semimeasure import ChronologicalSemimeasure, MixtureModel, TransducerClass

ZERO = Fraction(0)
ONE = Fraction(1)


# ---------------------------------------------------------------------------
# Run logs
# ---------------------------------------------------------------------------

CSV_COLUMNS = ("k", "action", "credit", "obs", "root_value", "posterior", "steps")


@dataclass
class RunRow:
    k: int
    action: int
    credit: Fraction
    obs: int
    root_value: Fraction | None = None
    posterior: tuple[Fraction, ...] | None = None
    steps: int | None = None


@dataclass
class RunLog:
    """Append-only per-cycle record; bit-exact replayable from seed + config."""

    header: dict[str, str]
    rows: list[RunRow] = field(default_factory=list)

    def append(self, row: RunRow) -> None:
        self.rows.append(row)

    def total_credit(self) -> Fraction:
        return sum((r.credit for r in self.rows), ZERO)

    def credits(self) -> list[Fraction]:
        return [r.credit for r in self.rows]

    def history(self) -> History:
        steps = tuple((r.action, Percept(r.credit, r.obs)) for r in self.rows)
        return History(steps)

    def to_csv(self) -> str:
        render = _render_float if self.header.get("arithmetic") == "float" else _render_exact
        lines = [f"# {key} = {value}" for key, value in sorted(self.header.items())]
        lines.append(",".join(CSV_COLUMNS))
        for r in self.rows:
            posterior = "" if r.posterior is None else ";".join(render(w) for w in r.posterior)
            lines.append(
                ",".join(
                    [
                        str(r.k),
                        str(r.action),
                        render(r.credit),
                        str(r.obs),
                        "" if r.root_value is None else render(r.root_value),
                        posterior,
                        "" if r.steps is None else str(r.steps),
                    ]
                )
            )
        return "\n".join(lines) + "\n"

    @classmethod
    def from_csv(cls, text: str) -> "RunLog":
        header: dict[str, str] = {}
        rows: list[RunRow] = []
        saw_columns = False
        for line in text.splitlines():
            if not line.strip():
                continue
            if line.startswith("#"):
                key, _, value = line[1:].partition("=")
                header[key.strip()] = value.strip()
                continue
            if not saw_columns:
                if tuple(line.split(",")) != CSV_COLUMNS:
                    raise ValueError(f"unexpected column header {line!r}")
                saw_columns = True
                continue
            cells = line.split(",")
            rows.append(
                RunRow(
                    k=int(cells[0]),
                    action=int(cells[1]),
                    credit=Fraction(cells[2]),
                    obs=int(cells[3]),
                    root_value=Fraction(cells[4]) if cells[4] else None,
                    posterior=tuple(Fraction(w) for w in cells[5].split(";")) if cells[5] else None,
                    steps=int(cells[6]) if cells[6] else None,
                )
            )
        return cls(header, rows)


def _render_exact(v: Fraction) -> str:
    return str(v)


def _render_float(v: Fraction) -> str:
    return repr(float(v))


# ---------------------------------------------------------------------------
# Prediction error counts and bounds
# ---------------------------------------------------------------------------

Predictor = Callable[[tuple[int, ...]], tuple[Fraction, Fraction]]


def theta_predictor(measure) -> Predictor:
    """Deterministic predictor of the higher-probability bit as a one-hot
    prediction distribution; a refusal assigns probability 0 to both bits."""
    from .agent import sp_predict

    def predict(prefix: tuple[int, ...]) -> tuple[Fraction, Fraction]:
        bit = sp_predict(measure, prefix)
        if bit is None:
            return (ZERO, ZERO)
        return (ONE, ZERO) if bit == 0 else (ZERO, ONE)

    return predict


def measure_predictor(measure) -> Predictor:
    """Probabilistic predictor that predicts bit b with the measure's own
    conditional probability."""

    def predict(prefix: tuple[int, ...]) -> tuple[Fraction, Fraction]:
        return measure.cond(tuple(prefix))

    return predict


def error_count(predictor: Predictor, mu, n: int) -> Fraction:
    """Expected number of wrong predictions in the first n bits, exactly.

    mu is the true sequence measure; enumeration is exhaustive over all
    length-<=n prefixes with positive mu mass.
    """
    total = ZERO

    def walk(prefix: tuple[int, ...], mass: Fraction):
        nonlocal total
        if len(prefix) >= n:
            return
        m0, m1 = mu.cond(prefix)
        q0, q1 = predictor(prefix)
        total += mass * (m0 * (ONE - q0) + m1 * (ONE - q1))
        if m0:
            walk(prefix + (0,), mass * m0)
        if m1:
            walk(prefix + (1,), mass * m1)

    walk((), ONE)
    return total


def sp_excess_bound(e_rho: Fraction, k_mu: int) -> float:
    """H + sqrt(4 E H + H^2) with H = ln2 * K, the allowed prediction excess."""
    h = math.log(2) * k_mu
    return h + math.sqrt(4 * float(e_rho) * h + h * h)


def sp_excess_check(e_rho: Fraction, e_xi: Fraction, k_mu: int) -> float:
    """Slack of the excess-error bound; non-negative when the bound holds."""
    return sp_excess_bound(e_rho, k_mu) - float(e_xi - e_rho)


# ---------------------------------------------------------------------------
# Convergence of a mixture to its components
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class L2Result:
    """Cumulative mu-expected squared conditional distance and its bound."""

    lhs: Fraction
    bound: float
    per_cycle: tuple[Fraction, ...]

    @property
    def holds(self) -> bool:
        return float(self.lhs) <= self.bound + 1e-9


def l2_convergence(
    mix: MixtureModel,
    mu: ChronologicalSemimeasure,
    actions: Sequence[int],
    n: int,
) -> L2Result:
    """Exact sum over cycles k <= n and all percept realizations under mu,
    for a fixed action sequence, of mu-joint * (mu_cond - xi_cond)^2; the
    bound is ln(2)/2 times the component's declared code length."""
    idx = [i for i, c in enumerate(mix.components) if c.model is mu]
    if not idx:
        raise ValueError("mu must be one of the mixture's component models")
    k_mu = mix.components[idx[0]].codelength
    per_cycle = [ZERO] * n

    def walk(h: History, mass: Fraction, k: int):
        if k > n or mass == 0:
            return
        y = actions[k - 1]
        mu_dist = mu.cond(h, y)
        xi_dist = mix.cond(h, y)
        for x, p in mu_dist.items():
            diff = p - xi_dist.get(x, ZERO)
            per_cycle[k - 1] += mass * p * diff * diff
            walk(h.extended(y, x), mass * p, k + 1)

    walk(History(), ONE, 1)
    return L2Result(sum(per_cycle, ZERO), 0.5 * math.log(2) * k_mu, tuple(per_cycle))


# ---------------------------------------------------------------------------
# Agreement deficit between a learner's trajectory and the informed agent
# ---------------------------------------------------------------------------


@dataclass
class DeficitSeries:
    """Per-cycle disagreement indicators and their value-gap weighting."""

    disagreements: tuple[int, ...]
    value_gaps: tuple[Fraction, ...]

    @property
    def cumulative(self) -> tuple[int, ...]:
        out, acc = [], 0
        for d in self.disagreements:
            acc += d
            out.append(acc)
        return tuple(out)

    @property
    def ratios(self) -> tuple[Fraction, ...]:
        return tuple(Fraction(c, k) for k, c in enumerate(self.cumulative, start=1))

    @property
    def total(self) -> int:
        return sum(self.disagreements)

    @property
    def total_value_gap(self) -> Fraction:
        return sum(self.value_gaps, ZERO)


def agreement_deficit(
    trajectory: History,
    mu: ChronologicalSemimeasure,
    horizon: HorizonPolicy,
    lifetime: int,
) -> DeficitSeries:
    """Replay the learner's own trajectory; count cycles where the informed
    agent would have chosen differently, and the mu-value it gave up."""
    informed = ExpectimaxAgent(mu, horizon, lifetime, name="aimu")
    flags: list[int] = []
    gaps: list[Fraction] = []
    for k in range(1, len(trajectory) + 1):
        prefix = trajectory.prefix(k - 1)
        chosen = trajectory.steps[k - 1][0]
        best = informed.act(prefix)
        m = horizon_end(horizon, k, lifetime)
        q_best = _qvalue(mu, prefix, best, m, informed._memo)
        q_chosen = _qvalue(mu, prefix, chosen, m, informed._memo)
        flags.append(int(best != chosen))
        gaps.append(q_best - q_chosen)
    return DeficitSeries(tuple(flags), tuple(gaps))


def average_deficits(series: Sequence[DeficitSeries]) -> tuple[Fraction, ...]:
    """Monte-Carlo estimate of the expected cumulative deficit."""
    if not series:
        return ()
    n = min(len(s.disagreements) for s in series)
    out = []
    for k in range(n):
        out.append(Fraction(sum(s.cumulative[k] for s in series), len(series)))
    return tuple(out)


# ---------------------------------------------------------------------------
# Deterministic prediction bound relative to an enumerated class
# ---------------------------------------------------------------------------


@dataclass
class DetBoundReport:
    errors: int
    generator_length: int | None
    alpha: Fraction | None

    @property
    def bound(self) -> Fraction | None:
        return None if self.alpha is None else 1 / self.alpha

    @property
    def holds(self) -> bool:
        return self.bound is not None and self.errors < self.bound


def find_generator_length(cls: TransducerClass, pattern: Sequence[int], n: int) -> int | None:
    """Shortest encoding in the class that implements the prediction
    environment for the given bit pattern over n cycles (credit = correct
    prediction, empty observation), for every action sequence."""
    alphabet = cls.alphabet
    best: int | None = None
    for q in cls.programs:
        if best is not None and len(q.bits) >= best:
            continue
        states = {0}
        ok = True
        for k in range(1, n + 1):
            z = pattern[(k - 1) % len(pattern)]
            nxt = set()
            for s in states:
                for y in range(alphabet.num_actions):
                    s2, pi = q.step(s, y)
                    want = alphabet.percept_index(Percept(ONE if y == z else ZERO, 0))
                    if pi != want:
                        ok = False
                        break
                    nxt.add(s2)
                if not ok:
                    break
            if not ok:
                break
            states = nxt
        if ok:
            best = len(q.bits)
    return best


def det_sp_bound_check(log: RunLog, cls: TransducerClass, pattern: Sequence[int]) -> DetBoundReport:
    """Wrong-prediction count of a logged run against the 1/alpha bound,
    alpha = 2^-l of the shortest in-class generator."""
    errors = sum(1 for r in log.rows if r.credit == 0)
    length = find_generator_length(cls, pattern, len(log.rows))
    alpha = None if length is None else Fraction(1, 2**length)
    return DetBoundReport(errors, length, alpha)


# ---------------------------------------------------------------------------
# Intelligence order over policies
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class OrderResult:
    holds: bool
    violation: tuple[int, int] | None = None  # (history index, cycle)

    def __bool__(self) -> bool:
        return self.holds


def policy_program(policy, ident: str | None = None) -> WrappedProgram:
    """Adapt a plain policy to the rollout interface (claims are irrelevant
    for the order comparison and default to 0)."""
    name = ident if ident is not None else getattr(policy, "name", "policy")
    return WrappedProgram(NativeProgram(name, policy.act, lambda h: ZERO))


def xi_expected_credit(
    policy,
    h: History,
    cls: TransducerClass,
    k: int,
    m: int,
) -> Fraction:
    """Unnormalized class-expected credit of running a policy from cycle k.

    Histories the policy would not itself have produced are conditioned on
    as-is: only the current and future cycles are the policy's own.
    """
    return estimate_credit(policy_program(policy), h, cls, k, m, t_budget=1)


def order_compare(
    p,
    p_prime,
    cls: TransducerClass,
    histories: Sequence[History],
    horizon: HorizonPolicy,
    lifetime: int,
) -> OrderResult:
    """Does p's class-expected credit dominate p' at every supplied cycle?"""
    for hi, h in enumerate(histories):
        for k in range(1, len(h) + 2):
            prefix = h.prefix(k - 1)
            m = horizon_end(horizon, k, max(lifetime, k))
            c_p = xi_expected_credit(p, prefix, cls, k, m)
            c_q = xi_expected_credit(p_prime, prefix, cls, k, m)
            if c_p < c_q:
                return OrderResult(False, (hi, k))
    return OrderResult(True)
