"""Deterministic desk-scale environments.

All environments share a small duck-typed protocol:

    reset(seed=None) -> observation   start a new episode
    step(basis)      -> (observation, reward, terminal)
    done             -> bool, episode over (death or frame cap)
    terminal         -> bool, true episode end only (never the frame cap)
    frames           -> frames executed this episode
    action_count     -> number of basis actions
    observe()        -> current observation
    state_digest()   -> short string identifying the current state

``MdpEnv`` runs an explicit finite MDP table; ``chain_persist`` builds the
corridor/hazard chain where long repeats are provably optimal away from
hazards.  ``ToyDiver`` is a miniature grid diver with oxygen, targets, and
bouncing enemies.  Frame stacking for network agents lives in ``frames``.
"""

from .diver import ToyDiver
from .frames import FrameStack, stack_frames
from .mdp import MdpEnv, MdpSpec, chain_persist, mdp_env_step
from .trajectory import DecisionRecord, format_record, parse_record, read_trajectory, write_trajectory

__all__ = [
    "DecisionRecord",
    "FrameStack",
    "MdpEnv",
    "MdpSpec",
    "ToyDiver",
    "chain_persist",
    "format_record",
    "mdp_env_step",
    "parse_record",
    "read_trajectory",
    "stack_frames",
    "write_trajectory",
]


def make_env(env_id: str):
    """Instantiate a built-in environment by id."""
    if env_id == "chain_persist":
        return MdpEnv(chain_persist())
    if env_id == "toy_diver":
        return ToyDiver()
    raise ValueError(f"unknown environment id {env_id!r}")
