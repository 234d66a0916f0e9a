"""Experiment runner: flat-file configs, the seeded interaction loop, logs.

Config files are flat `key = value` text; the CLI may override any key with
`--set key=value`.  A run executes the strict chronological protocol: the
agent writes y_k, the environment replies x_k drawn from its conditional with
a counter-based generator (Philox) named in the log header, so identical
(config, seed) pairs reproduce byte-identical logs.
"""

from __future__ import annotations

import os
from dataclasses import dataclass, field, fields
from fractions import Fraction
from typing import Callable

import numpy as np

from .agent import ExpectimaxAgent, FixedPolicy, RandomPolicy, greedy_fm_act, minimax_move
from .bestvote import BestVoteAgent, build_pool
from .core import (
    History,
    format_horizon,
    parse_horizon,
)
from .envs import (
    DelayedSwitchSpec,
    EXSpec,
    EnvSpec,
    FMEnv,
    FMSpec,
    GameTree,
    HeavenHellSpec,
    MinimaxGameEnv,
    MinimaxGameSpec,
    NeedleSpec,
    PeriodicSequence,
    Bernoulli,
    RepeatedGameSpec,
    SPSpec,
    TableSequenceMeasure,
    all_functions_instance,
    build_mu,
    fm_weights,
    relation_from_function,
    sample_percept,
)
from .metrics import RunLog, RunRow
from .semimeasure import (
    ChronologicalSemimeasure,
    EvidenceExhaustedError,
    MixtureComponent,
    MixtureModel,
    ProgramXi,
    TransducerClass,
)

RNG_ALGORITHM = "philox"

CONFIG_KEYS = {
    "env",
    "agent",
    "horizon",
    "lifetime",
    "seed",
    "out",
    "mixture",
    "class_max_len",
    "pool_lbits",
    "pool_tsteps",
    "arithmetic",
}


@dataclass
class ExperimentConfig:
    env: str = "heavenhell:1"
    agent: str = "aimu"
    horizon: str = "lifetime"
    lifetime: int = 5
    seed: int = 0
    out: str = ""
    mixture: str = ""
    class_max_len: int = 11
    pool_lbits: int = 12
    pool_tsteps: int = 64
    arithmetic: str = "exact"

    def __post_init__(self):
        parse_horizon(self.horizon)  # validate
        if self.lifetime < 0:
            raise ValueError("lifetime must be non-negative")
        if self.arithmetic not in ("exact", "float"):
            raise ValueError("arithmetic must be 'exact' or 'float'")


def parse_config(text: str, overrides: list[str] | None = None) -> ExperimentConfig:
    """Flat `key = value` lines; '#' comments; overrides as 'key=value'."""
    values: dict[str, str] = {}
    for lineno, raw in enumerate(text.splitlines(), 1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        key, sep, value = line.partition("=")
        if not sep:
            raise ValueError(f"line {lineno}: expected key = value")
        values[key.strip()] = value.strip()
    for item in overrides or []:
        key, sep, value = item.partition("=")
        if not sep:
            raise ValueError(f"override {item!r}: expected key=value")
        values[key.strip()] = value.strip()
    unknown = set(values) - CONFIG_KEYS
    if unknown:
        raise ValueError(f"unknown config keys: {sorted(unknown)}")
    kwargs: dict = {}
    for f in fields(ExperimentConfig):
        if f.name in values:
            raw = values[f.name]
            kwargs[f.name] = int(raw) if f.type == "int" else raw
    return ExperimentConfig(**kwargs)


# ---------------------------------------------------------------------------
# Environment spec strings
# ---------------------------------------------------------------------------

EX4_RELATIONS = tuple(
    relation_from_function(values)
    for values in ((0, 1, 2, 0), (1, 2, 0, 2), (2, 0, 1, 1), (0, 2, 1, 2))
)


def parse_env_spec(text: str, seed: int = 0) -> EnvSpec:
    kind, _, rest = text.partition(":")
    args = rest.split(":") if rest else []
    if kind == "heavenhell":
        return HeavenHellSpec(int(args[0]))
    if kind == "sp-seq":
        return SPSpec(PeriodicSequence(tuple(int(b) for b in args[0])))
    if kind == "sp-bernoulli":
        return SPSpec(Bernoulli(Fraction(args[0])))
    if kind == "sp-random":
        depth = int(args[0])
        table_seed = int(args[1]) if len(args) > 1 else seed
        rng = np.random.Generator(np.random.Philox(table_seed))
        return SPSpec(TableSequenceMeasure.random(depth, rng))
    if kind == "needle":
        return NeedleSpec(int(args[0]), int(args[1]))
    if kind == "game-random":
        rounds = int(args[0])
        tree_seed = int(args[1]) if len(args) > 1 else seed
        rng = np.random.Generator(np.random.Philox(tree_seed))
        return MinimaxGameSpec(GameTree.random(rounds, 2, 2, rng))
    if kind == "game":
        from .envs import parse_game_tree

        return MinimaxGameSpec(parse_game_tree(rest))
    if kind == "repeated-game":
        episodes, rounds = int(args[0]), int(args[1])
        tree_seed = int(args[2]) if len(args) > 2 else seed
        rng = np.random.Generator(np.random.Philox(tree_seed))
        return RepeatedGameSpec(MinimaxGameSpec(GameTree.random(rounds, 2, 2, rng)), episodes)
    if kind == "fm16":
        variant = args[0]
        lifetime = int(args[1])
        decay = Fraction(args[2]) if variant == "fme" else None
        drop = len(args) > 2 and args[-1] == "drop-obs"
        weights = fm_weights(variant, lifetime, decay)
        env = all_functions_instance(weights, drop)
        return FMSpec(env.functions, env.z_values, env.weights, drop)
    if kind == "ex4":
        true_r = int(args[0])
        q = Fraction(args[1]) if len(args) > 1 else Fraction(1, 2)
        return EXSpec((EX4_RELATIONS[true_r],), (Fraction(1),), 4, 3, q)
    if kind == "delayed-switch":
        return DelayedSwitchSpec(int(args[0]))
    raise ValueError(f"unknown environment spec {text!r}")


# ---------------------------------------------------------------------------
# Agent construction
# ---------------------------------------------------------------------------


def build_agent(config: ExperimentConfig, env: ChronologicalSemimeasure, env_spec: EnvSpec):
    horizon = parse_horizon(config.horizon)
    name, _, arg = config.agent.partition(":")
    if name == "aimu":
        return ExpectimaxAgent(env, horizon, config.lifetime, name="aimu")
    if name == "aixi-mixture":
        mix = build_mixture(config)
        if mix.alphabet != env.alphabet:
            raise ValueError("mixture alphabet does not match the environment")
        return ExpectimaxAgent(mix, horizon, config.lifetime, name="aixi-mixture")
    if name == "aixi-program":
        cls = TransducerClass.enumerate(env.alphabet, config.class_max_len)
        return ExpectimaxAgent(ProgramXi(cls), horizon, config.lifetime, name="aixi-program")
    if name == "greedy-fm":
        if not isinstance(env, FMEnv):
            raise ValueError("greedy-fm needs a function-minimization environment")
        return _GreedyFM(env)
    if name == "minimax":
        if not isinstance(env, MinimaxGameEnv):
            raise ValueError("minimax needs a game environment")
        return _MinimaxPolicy(env)
    if name == "random":
        return RandomPolicy(env.alphabet.num_actions, int(arg) if arg else config.seed)
    if name == "fixed":
        return FixedPolicy(tuple(int(c) for c in arg))
    if name == "bestvote":
        clamp = TransducerClass.enumerate(env.alphabet, config.class_max_len)
        pool = build_pool(
            config.pool_lbits,
            config.pool_tsteps,
            clamp,
            horizon,
            config.lifetime,
            env.alphabet,
        )
        return BestVoteAgent(pool)
    raise ValueError(f"unknown agent spec {config.agent!r}")


def build_mixture(config: ExperimentConfig) -> MixtureModel:
    """Components from `mixture = spec@K; spec@K; ...` (env specs + bits)."""
    if not config.mixture:
        raise ValueError("aixi-mixture needs a `mixture` config entry")
    components = []
    for item in config.mixture.split(";"):
        item = item.strip()
        if not item:
            continue
        spec_text, _, bits = item.rpartition("@")
        model = build_mu(parse_env_spec(spec_text, config.seed))
        components.append(MixtureComponent(model, int(bits), ident=spec_text))
    return MixtureModel(components)


class _GreedyFM:
    name = "greedy-fm"

    def __init__(self, env: FMEnv):
        self.env = env

    def act(self, h: History) -> int:
        return greedy_fm_act(self.env, h)


class _MinimaxPolicy:
    name = "minimax"

    def __init__(self, env: MinimaxGameEnv):
        self.env = env

    def act(self, h: History) -> int:
        moves: tuple[int, ...] = ()
        for y, x in h:
            moves += (y, x.obs)
        k = len(h) % self.env.tree.rounds  # per-episode replay for repeated play
        if len(h) and k == 0:
            moves = ()
        else:
            moves = moves[len(moves) - 2 * k :]
        return minimax_move(self.env.tree, moves)


# ---------------------------------------------------------------------------
# The interaction loop
# ---------------------------------------------------------------------------


def run(config: ExperimentConfig) -> RunLog:
    env_spec = parse_env_spec(config.env, config.seed)
    env = build_mu(env_spec)
    agent = build_agent(config, env, env_spec)
    return run_interaction(env, agent, config)


def run_interaction(env: ChronologicalSemimeasure, agent, config: ExperimentConfig) -> RunLog:
    rng = np.random.Generator(np.random.Philox(config.seed))
    header = {
        "env": config.env,
        "agent": getattr(agent, "name", config.agent),
        "horizon": config.horizon,
        "lifetime": str(config.lifetime),
        "seed": str(config.seed),
        "rng": RNG_ALGORITHM,
        "arithmetic": config.arithmetic,
    }
    log = RunLog(header)
    h = History()
    for k in range(1, config.lifetime + 1):
        try:
            y = agent.act(h)
            x = sample_percept(env, h, y, rng)
        except EvidenceExhaustedError as err:
            header["aborted"] = f"evidence-exhausted at cycle {k}: {err}"
            break
        h = h.extended(y, x)
        root_value = None
        posterior = None
        steps = None
        if isinstance(agent, ExpectimaxAgent):
            root_value = agent.value(h.prefix(k - 1))
            if isinstance(agent.model, MixtureModel):
                posterior = agent.model.posterior_weights(h)
        elif isinstance(agent, BestVoteAgent) and agent.last_choice is not None:
            root_value = agent.last_choice.claim
            steps = agent.pool.select_steps_last_cycle
        log.append(RunRow(k, y, x.credit, x.obs, root_value, posterior, steps))
    return log


def output_dir(config_out: str = "") -> str:
    return os.environ.get("AIXI_LAB_OUT") or config_out or "out"


# the named-experiment registry lives alongside the scenarios
from .experiments import EXPERIMENTS, ExperimentReport, experiment  # noqa: E402,F401
