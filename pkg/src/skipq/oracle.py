"""Exact ground truth: value iteration over the extended-action MDP.

Repeating a basis action ``r`` times inside a deterministic MDP induces a
new MDP over the same states whose actions are the extended actions.  Each
(state, extended action) pair is rolled out once into (next state,
accumulated reward, effective discount, frames used); synchronous Bellman
sweeps on those tables then converge to the optimal Q function.

Two discount modes are supported:
    per_decision  one factor of gamma per decision, rewards summed
                  undiscounted inside the repeat;
    per_frame     rewards discounted frame by frame and gamma^frames
                  applied to the bootstrap (the semi-MDP-correct form).
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .actions import ExtendedActionSpace, decode
from .envs.mdp import MdpSpec

PER_DECISION = "per_decision"
PER_FRAME = "per_frame"
DISCOUNT_MODES = (PER_DECISION, PER_FRAME)


class ValueIterationError(RuntimeError):
    """Raised when the sweep budget is exhausted; carries the last residual."""

    def __init__(self, message: str, residual: float):
        super().__init__(message)
        self.residual = residual


@dataclass(frozen=True)
class ExtendedMdp:
    """Rolled-out tables over (state, extended action)."""

    next_state: np.ndarray
    reward: np.ndarray
    discount: np.ndarray
    frames: np.ndarray
    terminal: np.ndarray
    space: ExtendedActionSpace
    gamma: float
    mode: str


@dataclass
class OracleResult:
    q: np.ndarray
    v: np.ndarray
    policy: np.ndarray
    iterations: int
    residual: float
    space: ExtendedActionSpace
    gamma: float
    mode: str

    def greedy_action(self, state: int) -> int:
        return int(self.policy[state])


def roll_out(spec: MdpSpec, space: ExtendedActionSpace, state: int, k: int, gamma: float, mode: str):
    """Execute extended action ``k`` from ``state`` against the tables.

    Returns (next state, accumulated reward, effective discount, frames
    used).  Stops early at a terminal state.
    """
    if mode not in DISCOUNT_MODES:
        raise ValueError(f"unknown discount mode {mode!r}")
    if spec.terminal[state]:
        raise ValueError(f"state {state} is terminal")
    _, repeat = decode(space, k)
    basis = k % space.basis_count
    s = state
    reward = 0.0
    frames = 0
    for t in range(repeat):
        r = float(spec.reward[s, basis])
        reward += r if mode == PER_DECISION else gamma**t * r
        s = int(spec.transition[s, basis])
        frames += 1
        if spec.terminal[s]:
            break
    discount = gamma if mode == PER_DECISION else gamma**frames
    return s, reward, discount, frames


def build_extended_mdp(spec: MdpSpec, space: ExtendedActionSpace, gamma: float, mode: str = PER_DECISION) -> ExtendedMdp:
    if space.basis_count != spec.basis_action_count:
        raise ValueError(
            f"space has {space.basis_count} basis actions, MDP has {spec.basis_action_count}"
        )
    n, k = spec.state_count, space.size
    next_state = np.zeros((n, k), dtype=np.int64)
    reward = np.zeros((n, k))
    discount = np.zeros((n, k))
    frames = np.zeros((n, k), dtype=np.int64)
    for s in range(n):
        if spec.terminal[s]:
            next_state[s] = s
            continue
        for a in range(k):
            next_state[s, a], reward[s, a], discount[s, a], frames[s, a] = roll_out(
                spec, space, s, a, gamma, mode
            )
    return ExtendedMdp(
        next_state=next_state,
        reward=reward,
        discount=discount,
        frames=frames,
        terminal=spec.terminal.copy(),
        space=space,
        gamma=gamma,
        mode=mode,
    )


def value_iteration(ext: ExtendedMdp, tolerance: float = 1e-9, max_iters: int = 200_000) -> OracleResult:
    """Synchronous sweeps until the max-norm change drops below tolerance."""
    if tolerance <= 0:
        raise ValueError("tolerance must be > 0")
    q = np.zeros_like(ext.reward)
    residual = np.inf
    for it in range(1, max_iters + 1):
        v = np.where(ext.terminal, 0.0, q.max(axis=1))
        q_new = ext.reward + ext.discount * v[ext.next_state]
        q_new[ext.terminal] = 0.0
        residual = float(np.abs(q_new - q).max())
        q = q_new
        if residual < tolerance:
            v = np.where(ext.terminal, 0.0, q.max(axis=1))
            return OracleResult(
                q=q,
                v=v,
                policy=q.argmax(axis=1),
                iterations=it,
                residual=residual,
                space=ext.space,
                gamma=ext.gamma,
                mode=ext.mode,
            )
    raise ValueIterationError(
        f"no convergence to {tolerance} within {max_iters} sweeps (residual {residual:.3e})",
        residual=residual,
    )


def solve(spec: MdpSpec, space: ExtendedActionSpace, gamma: float, mode: str = PER_DECISION,
          tolerance: float = 1e-9, max_iters: int = 200_000) -> OracleResult:
    """Convenience: build the extended MDP and run value iteration."""
    return value_iteration(build_extended_mdp(spec, space, gamma, mode), tolerance, max_iters)


def greedy_decisions(spec: MdpSpec, space: ExtendedActionSpace, result: OracleResult, max_decisions: int = 10_000) -> list:
    """Extended-action indices along the greedy-policy trajectory from start."""
    s = spec.start_state
    gamma, mode = result.gamma, result.mode
    decisions = []
    for _ in range(max_decisions):
        if spec.terminal[s]:
            break
        k = result.greedy_action(s)
        decisions.append(k)
        s, _, _, _ = roll_out(spec, space, s, k, gamma, mode)
    return decisions


def greedy_visited_states(spec: MdpSpec, space: ExtendedActionSpace, result: OracleResult, max_decisions: int = 10_000) -> list:
    """Non-terminal states visited by the greedy policy, in order."""
    s = spec.start_state
    states = []
    for _ in range(max_decisions):
        if spec.terminal[s]:
            break
        states.append(s)
        k = result.greedy_action(s)
        s, _, _, _ = roll_out(spec, space, s, k, result.gamma, result.mode)
    return states


def write_q_table(path, result: OracleResult) -> None:
    """Emit the Q table as text: state, extended_action, q_value (12 sig digits)."""
    with open(path, "w", encoding="utf-8", newline="\n") as fh:
        fh.write("state,extended_action,q_value\n")
        n, k = result.q.shape
        for s in range(n):
            for a in range(k):
                fh.write(f"{s},{a},{result.q[s, a]:.12g}\n")


def read_q_table(path) -> dict:
    """Parse a Q-table file into {(state, extended_action): q_value}."""
    table = {}
    with open(path, "r", encoding="utf-8") as fh:
        for line in fh:
            line = line.strip()
            if not line or line.startswith(("state", "#")):
                continue
            s, a, v = line.split(",")
            table[(int(s), int(a))] = float(v)
    return table
