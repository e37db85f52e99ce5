"""Frame stacking: the agent state is the last 4 observations, channelwise."""

from __future__ import annotations

from collections import deque

import numpy as np

STACK_DEPTH = 4


def stack_frames(history, new) -> np.ndarray:
    """Concatenate the newest ``STACK_DEPTH`` observations along the channel axis.

    ``history`` holds earlier observations oldest-first; at episode start
    (empty history) the first observation is replicated into every slot.
    """
    new = np.asarray(new, dtype=np.float64)
    frames = list(history)[-(STACK_DEPTH - 1) :] + [new]
    while len(frames) < STACK_DEPTH:
        frames.insert(0, frames[0])
    return np.concatenate(frames, axis=-1)


class FrameStack:
    """Rolling window over observations; owns the per-episode history."""

    def __init__(self, depth: int = STACK_DEPTH):
        self.depth = depth
        self._history = deque(maxlen=depth)

    def reset(self, obs) -> np.ndarray:
        obs = np.asarray(obs, dtype=np.float64)
        self._history.clear()
        for _ in range(self.depth):
            self._history.append(obs)
        return self.state()

    def push(self, obs) -> np.ndarray:
        self._history.append(np.asarray(obs, dtype=np.float64))
        return self.state()

    def state(self) -> np.ndarray:
        return np.concatenate(list(self._history), axis=-1)
