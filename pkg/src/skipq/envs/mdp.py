"""Explicit finite MDPs and the chain environment built on them."""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

CHAIN_LENGTH = 24
CHAIN_HAZARDS = (7, 15)
CHAIN_ADVANCE_REWARD = 0.1
CHAIN_DODGE_REWARD = -0.1
CHAIN_HAZARD_ADVANCE_REWARD = -1.0
CHAIN_HAZARD_DODGE_REWARD = 0.1
CHAIN_GOAL_REWARD = 1.0

ADVANCE = 0
DODGE = 1


@dataclass(frozen=True)
class MdpSpec:
    """Deterministic finite MDP as dense lookup tables.

    ``transition[s, a]`` and ``reward[s, a]`` are total over non-terminal
    states; terminal states absorb (self-loop, zero reward).
    """

    transition: np.ndarray
    reward: np.ndarray
    terminal: np.ndarray
    start_state: int = 0

    def __post_init__(self):
        s, a = self.transition.shape
        if self.reward.shape != (s, a):
            raise ValueError("transition and reward tables must have identical shapes")
        if self.terminal.shape != (s,):
            raise ValueError("terminal flag vector must have one entry per state")
        if not ((self.transition >= 0) & (self.transition < s)).all():
            raise ValueError("transition targets out of range")
        if not 0 <= self.start_state < s:
            raise ValueError("start_state out of range")
        if self.terminal[self.start_state]:
            raise ValueError("start_state must be non-terminal")
        term = np.where(self.terminal)[0]
        if not (self.transition[term] == term[:, None]).all() or self.reward[term].any():
            raise ValueError("terminal states must absorb with zero reward")

    @property
    def state_count(self) -> int:
        return self.transition.shape[0]

    @property
    def basis_action_count(self) -> int:
        return self.transition.shape[1]


def make_mdp(transition, reward, terminal, start_state: int = 0) -> MdpSpec:
    """Build an MdpSpec, normalizing terminal rows to absorb."""
    transition = np.asarray(transition, dtype=np.int64).copy()
    reward = np.asarray(reward, dtype=np.float64).copy()
    terminal = np.asarray(terminal, dtype=bool).copy()
    term = np.where(terminal)[0]
    transition[term] = term[:, None]
    reward[term] = 0.0
    return MdpSpec(transition=transition, reward=reward, terminal=terminal, start_state=start_state)


def mdp_env_step(spec: MdpSpec, state: int, basis: int) -> tuple:
    """One frame: exact table lookup, (next_state, reward, terminal)."""
    if spec.terminal[state]:
        raise ValueError(f"state {state} is terminal")
    if not 0 <= basis < spec.basis_action_count:
        raise ValueError(f"basis action {basis} out of range")
    nxt = int(spec.transition[state, basis])
    return nxt, float(spec.reward[state, basis]), bool(spec.terminal[nxt])


def chain_persist(length: int = CHAIN_LENGTH, hazards=CHAIN_HAZARDS) -> MdpSpec:
    """Corridor chain where both actions move forward and only reward differs.

    Corridor states pay +0.1 per frame for advance and -0.1 for dodge;
    hazard states invert that (-1.0 advance, +0.1 dodge).  Reaching state
    ``length`` ends the episode with a +1.0 bonus on top of the per-frame
    reward.  Long repeats are optimal through hazard-free stretches, short
    ones next to hazards.
    """
    hazards = set(hazards)
    if not all(0 <= h < length for h in hazards):
        raise ValueError("hazards must lie inside [0, length)")
    states = length + 1
    transition = np.zeros((states, 2), dtype=np.int64)
    reward = np.zeros((states, 2), dtype=np.float64)
    terminal = np.zeros(states, dtype=bool)
    terminal[length] = True
    for s in range(length):
        transition[s, ADVANCE] = s + 1
        transition[s, DODGE] = s + 1
        if s in hazards:
            reward[s, ADVANCE] = CHAIN_HAZARD_ADVANCE_REWARD
            reward[s, DODGE] = CHAIN_HAZARD_DODGE_REWARD
        else:
            reward[s, ADVANCE] = CHAIN_ADVANCE_REWARD
            reward[s, DODGE] = CHAIN_DODGE_REWARD
        if s + 1 == length:
            reward[s] += CHAIN_GOAL_REWARD
    return make_mdp(transition, reward, terminal, start_state=0)


class MdpEnv:
    """Single-owner mutable runtime for an MdpSpec."""

    def __init__(self, spec: MdpSpec):
        self.spec = spec
        self.state = spec.start_state
        self.frames = 0

    @property
    def action_count(self) -> int:
        return self.spec.basis_action_count

    @property
    def terminal(self) -> bool:
        return bool(self.spec.terminal[self.state])

    @property
    def done(self) -> bool:
        return self.terminal

    def reset(self, seed=None):
        self.state = self.spec.start_state
        self.frames = 0
        return self.state

    def observe(self):
        return self.state

    def step(self, basis: int):
        nxt, reward, terminal = mdp_env_step(self.spec, self.state, basis)
        self.state = nxt
        self.frames += 1
        return nxt, reward, terminal

    def state_digest(self) -> str:
        return str(self.state)
