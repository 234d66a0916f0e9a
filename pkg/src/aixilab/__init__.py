"""Desk-scale laboratory for exact expectimax agents over known and
universal-mixture environment models, with oracle-verified experiments."""

from .core import (
    Alphabet,
    FixedLifetime,
    History,
    HorizonPolicy,
    MovingHorizon,
    Percept,
    Proportional,
    decode_history,
    encode_history,
    horizon_end,
)
from .semimeasure import (
    ChronologicalSemimeasure,
    MixtureComponent,
    MixtureModel,
    ProgramXi,
    Transducer,
    TransducerClass,
    chronologize,
)
from .envs import build_mu, sample_percept
from .agent import ExpectimaxAgent, expectimax_value, greedy_fm_act, minimax_move, sp_predict, stabilized_act
from .bestvote import BestVoteAgent, Pool, bestvote_cycle, build_pool, effective_compare, estimate_credit
from .metrics import RunLog, agreement_deficit, error_count, l2_convergence, order_compare
from .harness import ExperimentConfig, experiment, parse_config, run

__version__ = "0.1.0"
