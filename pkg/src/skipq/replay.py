"""Fixed-capacity FIFO experience replay with uniform sampling."""

from __future__ import annotations

from dataclasses import dataclass

from .actions import ExtendedAction


@dataclass(frozen=True)
class Transition:
    """One decision step.

    ``reward`` is the undiscounted sum over the repeated frames;
    ``frame_rewards`` retains the per-frame values so per-frame discounting
    stays possible.  ``terminal`` marks a true episode end (not a frame-cap
    truncation), so bootstrapping is suppressed only where it should be.
    """

    state: object
    action: ExtendedAction
    reward: float
    next_state: object
    terminal: bool
    frames_used: int = 1
    frame_rewards: tuple = ()


class ReplayBuffer:
    """Ring buffer: once full, each push evicts the oldest transition."""

    def __init__(self, capacity: int):
        if capacity < 1:
            raise ValueError("capacity must be >= 1")
        self.capacity = capacity
        self._storage = []
        self._next = 0

    def __len__(self) -> int:
        return len(self._storage)

    def push(self, t: Transition) -> None:
        if len(self._storage) < self.capacity:
            self._storage.append(t)
        else:
            self._storage[self._next] = t
        self._next = (self._next + 1) % self.capacity

    def contents(self) -> list:
        """Current transitions, oldest first."""
        if len(self._storage) < self.capacity:
            return list(self._storage)
        return self._storage[self._next :] + self._storage[: self._next]

    def sample(self, batch_size: int, rng) -> list:
        """Uniform sample with replacement; deterministic given rng state."""
        if batch_size < 1:
            raise ValueError("batch_size must be >= 1")
        if len(self._storage) < batch_size:
            raise ValueError(f"buffer holds {len(self._storage)} transitions, need {batch_size}")
        idx = rng.integers(0, len(self._storage), size=batch_size)
        return [self._storage[i] for i in idx]
