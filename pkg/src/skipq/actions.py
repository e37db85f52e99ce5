"""Extended action space: every basis action at a short and a long repeat.

An environment with ``n`` basis actions is driven through ``2n`` extended
actions.  Index ``k`` plays basis action ``k mod n``; it is repeated ``r1``
times when ``k < n`` and ``r2`` times when ``k >= n``.  A static-skip agent
is the degenerate case ``r1 == r2``.
"""

from __future__ import annotations

from dataclasses import dataclass


@dataclass(frozen=True)
class ExtendedActionSpace:
    basis_count: int
    r1: int
    r2: int

    def __post_init__(self):
        if self.basis_count < 1:
            raise ValueError("basis_count must be >= 1")
        if self.r1 < 1 or self.r2 < 1:
            raise ValueError("repeat counts must be >= 1")

    @property
    def size(self) -> int:
        """Number of extended actions (2 per basis action)."""
        return 2 * self.basis_count

    def action(self, k: int) -> "ExtendedAction":
        basis, repeat = decode(self, k)
        return ExtendedAction(index=k, basis=basis, repeat=repeat)

    def all_actions(self) -> list:
        return [self.action(k) for k in range(self.size)]

    def is_long(self, k: int) -> bool:
        if not 0 <= k < self.size:
            raise ValueError(f"action index {k} out of range [0, {self.size})")
        return k >= self.basis_count

    def to_dict(self) -> dict:
        return {"basis_count": self.basis_count, "r1": self.r1, "r2": self.r2}

    @staticmethod
    def from_dict(d: dict) -> "ExtendedActionSpace":
        return ExtendedActionSpace(basis_count=d["basis_count"], r1=d["r1"], r2=d["r2"])


@dataclass(frozen=True)
class ExtendedAction:
    """An action index together with its decoded basis action and repeat."""

    index: int
    basis: int
    repeat: int


@dataclass(frozen=True)
class RepeatOutcome:
    """Result of executing one basis action for up to ``repeat`` frames.

    ``reward`` is the undiscounted sum over the frames actually executed;
    ``frame_rewards`` keeps the per-frame values for discount modes that
    need them.  ``terminal`` is true when the episode ended inside the
    repeat (death or frame cap), in which case ``frames_used`` may be less
    than the requested repeat.
    """

    reward: float
    next_observation: object
    terminal: bool
    frames_used: int
    frame_rewards: tuple


def decode(space: ExtendedActionSpace, k: int) -> tuple:
    """Map an extended action index to (basis action, repeat count)."""
    if not 0 <= k < space.size:
        raise ValueError(f"action index {k} out of range [0, {space.size})")
    basis = k % space.basis_count
    repeat = space.r1 if k < space.basis_count else space.r2
    return basis, repeat


def execute_repeated(env, basis: int, repeat: int) -> RepeatOutcome:
    """Step ``env`` with ``basis`` up to ``repeat`` times, stopping early
    when the episode ends."""
    if env.done:
        raise RuntimeError("execute_repeated called on a finished episode")
    rewards = []
    obs = None
    for _ in range(repeat):
        obs, reward, _ = env.step(basis)
        rewards.append(float(reward))
        if env.done:
            break
    return RepeatOutcome(
        reward=float(sum(rewards)),
        next_observation=obs,
        terminal=env.done,
        frames_used=len(rewards),
        frame_rewards=tuple(rewards),
    )


def long_action_fraction(decisions, space: ExtendedActionSpace) -> float:
    """Fraction of decisions that picked a long-repeat action."""
    decisions = list(decisions)
    if not decisions:
        raise ValueError("long_action_fraction needs a non-empty decision sequence")
    long = sum(1 for a in decisions if a.index >= space.basis_count)
    return long / len(decisions)
