"""Miniature diver gridworld.

An agent swims in a WIDTH x DEPTH grid.  Staying below the surface row
drains one oxygen point per frame; the meter refills instantly at the
surface.  Two targets sit underwater and pay +1 when collected, respawning
at positions drawn from the per-episode RNG stream.  Two enemies patrol
fixed rows, bouncing off the side walls; touching one ends the episode with
-1, as does running out of oxygen.  Episodes are capped at 1000 frames; the
cap ends the episode without counting as a true terminal.

Everything random (enemy phase, target spawns) comes from the single seed
given to ``reset``, so trajectories are bit-reproducible.
"""

from __future__ import annotations

import numpy as np

WIDTH = 8
DEPTH = 10
OXYGEN_MAX = 40
FRAME_CAP = 1000
ENEMY_ROWS = (3, 6)
TARGET_COUNT = 2
START_X = WIDTH // 2
START_Y = 0

UP, DOWN, LEFT, RIGHT, NOOP = range(5)
ACTION_NAMES = ("up", "down", "left", "right", "noop")


class ToyDiver:
    """Deterministic grid diver; observations are float grids in [0, 1]."""

    action_count = 5
    observation_shape = (DEPTH, WIDTH, 4)

    def __init__(self, seed=None):
        self.reset(seed)

    def reset(self, seed=None):
        self._rng = np.random.default_rng(seed)
        self.x = START_X
        self.y = START_Y
        self.oxygen = OXYGEN_MAX
        self.frames = 0
        self.terminal = False
        self.truncated = False
        # enemies: [row, x, dx]
        self.enemies = [
            [row, int(self._rng.integers(WIDTH)), int(self._rng.choice((-1, 1)))] for row in ENEMY_ROWS
        ]
        self.targets = []
        for _ in range(TARGET_COUNT):
            self.targets.append(self._spawn_target())
        return self.observe()

    @property
    def done(self) -> bool:
        return self.terminal or self.truncated

    def _spawn_target(self):
        while True:
            ty = int(self._rng.integers(1, DEPTH))
            tx = int(self._rng.integers(WIDTH))
            if (ty, tx) == (self.y, self.x):
                continue
            if (ty, tx) in self.targets:
                continue
            return (ty, tx)

    def step(self, basis: int):
        if self.done:
            raise RuntimeError("step called on a finished episode")
        if not 0 <= basis < self.action_count:
            raise ValueError(f"basis action {basis} out of range")
        self.frames += 1
        reward = 0.0

        if basis == UP:
            self.y = max(0, self.y - 1)
        elif basis == DOWN:
            self.y = min(DEPTH - 1, self.y + 1)
        elif basis == LEFT:
            self.x = max(0, self.x - 1)
        elif basis == RIGHT:
            self.x = min(WIDTH - 1, self.x + 1)

        for enemy in self.enemies:
            nx = enemy[1] + enemy[2]
            if nx < 0 or nx >= WIDTH:
                enemy[2] = -enemy[2]
                nx = enemy[1] + enemy[2]
            enemy[1] = nx

        if any(enemy[0] == self.y and enemy[1] == self.x for enemy in self.enemies):
            reward -= 1.0
            self.terminal = True
        elif (self.y, self.x) in self.targets:
            reward += 1.0
            self.targets.remove((self.y, self.x))
            self.targets.append(self._spawn_target())

        if not self.terminal:
            if self.y == 0:
                self.oxygen = OXYGEN_MAX
            else:
                self.oxygen -= 1
                if self.oxygen <= 0:
                    self.oxygen = 0
                    reward -= 1.0
                    self.terminal = True

        if not self.terminal and self.frames >= FRAME_CAP:
            self.truncated = True

        return self.observe(), reward, self.terminal

    def observe(self) -> np.ndarray:
        obs = np.zeros(self.observation_shape, dtype=np.float64)
        obs[self.y, self.x, 0] = 1.0
        for row, x, _ in self.enemies:
            obs[row, x, 1] = 1.0
        for ty, tx in self.targets:
            obs[ty, tx, 2] = 1.0
        obs[:, :, 3] = self.oxygen / OXYGEN_MAX
        return obs

    def state_digest(self) -> str:
        enemies = ";".join(f"{r},{x},{dx:+d}" for r, x, dx in self.enemies)
        targets = ";".join(f"{ty},{tx}" for ty, tx in sorted(self.targets))
        return f"a{self.x},{self.y} o{self.oxygen} e[{enemies}] t[{targets}]"
