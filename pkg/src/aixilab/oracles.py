"""Independent brute-force oracles the experiments check themselves against.

These deliberately avoid the production code paths: no memoization, policies
enumerated as explicit tables, values recomputed from first principles.
"""

from __future__ import annotations

from fractions import Fraction
from itertools import product

from .core import History
from .envs import DelayedSwitchEnv, FMEnv, GameTree
from .semimeasure import ChronologicalSemimeasure

ZERO = Fraction(0)
ONE = Fraction(1)


def brute_force_value(model: ChronologicalSemimeasure, h: History, m: int) -> Fraction:
    """Expected credit-to-go by plain full-tree expansion (no memo)."""
    if len(h) >= m:
        return ZERO
    best = None
    for y in model.alphabet.actions():
        total = ZERO
        for x, p in model.cond(h, y).items():
            if p:
                total += (x.credit + brute_force_value(model, h.extended(y, x), m)) * p
        best = total if best is None else max(best, total)
    return best


def maximin_by_strategy_enumeration(tree: GameTree) -> Fraction:
    """Game value as max over explicit agent strategies of the min over
    explicit opponent strategies of the induced payoff."""
    agent_nodes = _nodes(tree, agent=True)
    opp_nodes = _nodes(tree, agent=False)
    agent_strats = list(_strategies(agent_nodes, tree.y_branch))
    opp_strats = list(_strategies(opp_nodes, tree.x_branch))
    best = None
    for pa in agent_strats:
        worst = None
        for po in opp_strats:
            v = _playout(tree, pa, po)
            worst = v if worst is None else min(worst, v)
        best = worst if best is None else max(best, worst)
    return best


def _nodes(tree: GameTree, agent: bool) -> list[tuple[int, ...]]:
    out, frontier = [], [()]
    while frontier:
        nxt = []
        for moves in frontier:
            if tree.is_terminal(moves):
                continue
            if (len(moves) % 2 == 0) == agent:
                out.append(moves)
            for mv in range(tree.branch(moves)):
                nxt.append(moves + (mv,))
        frontier = nxt
    return out


def _strategies(nodes: list[tuple[int, ...]], branch: int):
    for choice in product(range(branch), repeat=len(nodes)):
        yield dict(zip(nodes, choice))


def _playout(tree: GameTree, agent_strat, opp_strat) -> Fraction:
    moves: tuple[int, ...] = ()
    while not tree.is_terminal(moves):
        strat = agent_strat if len(moves) % 2 == 0 else opp_strat
        moves += (strat[moves],)
    return tree.payoff(moves)


def fm_best_policy_value(env: FMEnv) -> Fraction:
    """Best achievable expected weighted credit sum over explicit policies.

    Policies are enumerated as observation-indexed action tables for all
    cycles but the last; the final cycle is completed exactly per reachable
    observation branch (choices at distinct branches are independent).
    Returns the expected sum of credits c_k = -alpha_k z_k.
    """
    T = env.lifetime
    z_count = len(env.z_values)
    actions = range(env.alphabet.num_actions)

    def policy_tables(upto: int):
        """All action tables for cycles 1..upto, keyed by z-histories."""
        if upto == 0:
            yield {}
            return
        keys = list(product(range(z_count), repeat=upto - 1))
        for prev in policy_tables(upto - 1):
            for choice in product(actions, repeat=len(keys)):
                table = dict(prev)
                for key, y in zip(keys, choice):
                    table[key] = y
                yield table

    best = None
    for table in policy_tables(T - 1) if T > 1 else [{}]:
        value = ZERO
        # walk reachable z-branches; complete the last cycle exactly
        frontier = [((), ONE, History())]
        for k in range(1, T + 1):
            nxt = []
            for zs, mass, h in frontier:
                if k < T:
                    y = table[zs]
                    for x, p in env.cond(h, y).items():
                        z_idx = env._z_index(k, x)
                        value += mass * p * x.credit
                        nxt.append((zs + (z_idx,), mass * p, h.extended(y, x)))
                else:
                    completion = None
                    for y in actions:
                        exp_credit = ZERO
                        for x, p in env.cond(h, y).items():
                            exp_credit += p * x.credit
                        completion = exp_credit if completion is None else max(completion, exp_credit)
                    value += mass * completion
            frontier = nxt
        best = value if best is None else max(best, value)
    return best


def delayed_switch_optimum(lifetime: int) -> tuple[Fraction, tuple[int, ...]]:
    """Exhaustive maximum total credit over all 2^T output sequences."""
    best, best_seq = None, None
    for code in range(2**lifetime):
        seq = tuple((code >> i) & 1 for i in range(lifetime))
        total = DelayedSwitchEnv.total_credit(seq)
        if best is None or total > best:
            best, best_seq = total, seq
    return best, best_seq


def value_iteration_value(model: ChronologicalSemimeasure, m: int) -> Fraction:
    """Optimal value via explicit state-space value iteration.

    States are histories; transition mass from state h under action y to
    state h+(y,x) is the model conditional, reward is the credit carried by
    the destination state.  Returns U(empty) computed by sweeping states in
    decreasing length (each state occurs at most once, so one sweep settles
    the fixed point).
    """
    levels: list[list[History]] = [[History()]]
    for _ in range(m):
        nxt = []
        for h in levels[-1]:
            for y in model.alphabet.actions():
                for x, p in model.cond(h, y).items():
                    if p:
                        nxt.append(h.extended(y, x))
        levels.append(nxt)
    utility: dict[History, Fraction] = {h: ZERO for h in levels[m]}
    for depth in range(m - 1, -1, -1):
        for h in levels[depth]:
            best = None
            for y in model.alphabet.actions():
                total = ZERO
                for x, p in model.cond(h, y).items():
                    if p:
                        total += p * (x.credit + utility[h.extended(y, x)])
                best = total if best is None else max(best, total)
            utility[h] = best
    return utility[History()]
