"""skipq: Q-learning with a two-level action-repeat action space.

Every basis action of an environment is exposed twice to the agent: once
with a short repeat count and once with a long one, so the policy itself
decides how coarsely to act in each state.  The package bundles the pieces
needed to study that mechanism at desk scale: a from-scratch dense/conv
network with manual backprop and RMSProp, FIFO experience replay, tabular
and neural agents, two deterministic toy environments, an exact
value-iteration oracle, and a reproducible train/eval harness with a CLI.
"""

from .actions import ExtendedAction, ExtendedActionSpace, decode, execute_repeated, long_action_fraction
from .agent import AgentConfig, NetworkQ, TabularQ, epsilon_at, select_action, td_targets
from .errors import CheckpointError, ConfigError
from .optim import OptimizerConfig
from .replay import ReplayBuffer, Transition

__version__ = "0.1.0"

__all__ = [
    "AgentConfig",
    "CheckpointError",
    "ConfigError",
    "ExtendedAction",
    "ExtendedActionSpace",
    "NetworkQ",
    "OptimizerConfig",
    "ReplayBuffer",
    "TabularQ",
    "Transition",
    "decode",
    "epsilon_at",
    "execute_repeated",
    "long_action_fraction",
    "select_action",
    "td_targets",
]
