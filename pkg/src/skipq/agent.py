"""Q-learning over the extended action space.

Behavior is epsilon-greedy over all ``2n`` extended actions; learning fits
the bootstrapped target ``r + gamma * max Q_target(s', .)`` with the TD
error optionally clipped before it becomes a gradient.  Two Q-function
backends share one interface: a tabular map keyed by environment state id
and a network evaluated on stacked observations.  A static-skip baseline is
just the degenerate configuration ``r1 == r2``.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .actions import ExtendedAction, ExtendedActionSpace
from .errors import ConfigError
from .nets import Gradients, NetworkParams, backward, copy_params, forward
from .optim import TD_ERROR_CLIP, OptimizerConfig, rmsprop_step
from .oracle import PER_DECISION, PER_FRAME, DISCOUNT_MODES
from .replay import ReplayBuffer, Transition

# Annealing horizon used in the original large-scale setting; desk-scale
# configs default to something that fits in a coffee break.
PAPER_SCALE_EPS_ANNEAL_STEPS = 2_000_000
DESK_EPS_ANNEAL_STEPS = 50_000


@dataclass(frozen=True)
class AgentConfig:
    gamma: float = 0.99
    eps_start: float = 1.0
    eps_end: float = 0.1
    eps_anneal_steps: int = DESK_EPS_ANNEAL_STEPS
    batch_size: int = 32
    learn_start: int = 1_000
    target_sync_interval: int = 1_000
    eps_test: float = 0.05
    discount_mode: str = PER_DECISION
    reward_clip: bool = False

    def __post_init__(self):
        if not 0.0 <= self.gamma < 1.0:
            raise ConfigError("gamma must be in [0, 1)")
        for name in ("eps_start", "eps_end", "eps_test"):
            v = getattr(self, name)
            if not 0.0 <= v <= 1.0:
                raise ConfigError(f"{name} must be in [0, 1]")
        if self.eps_start < self.eps_end:
            raise ConfigError("eps_start must be >= eps_end")
        if self.eps_anneal_steps < 1:
            raise ConfigError("eps_anneal_steps must be >= 1")
        if self.batch_size < 1 or self.learn_start < 1 or self.target_sync_interval < 1:
            raise ConfigError("batch_size, learn_start and target_sync_interval must be >= 1")
        if self.discount_mode not in DISCOUNT_MODES:
            raise ConfigError(f"unknown discount_mode {self.discount_mode!r}")


class TabularQ:
    """Q table keyed by state id; unseen entries read as zero."""

    def __init__(self, action_count: int):
        self.action_count = action_count
        self.table = {}

    def q_values(self, state) -> np.ndarray:
        row = self.table.get(state)
        if row is None:
            return np.zeros(self.action_count)
        return row.copy()

    def row(self, state) -> np.ndarray:
        row = self.table.get(state)
        if row is None:
            row = np.zeros(self.action_count)
            self.table[state] = row
        return row

    def update(self, state, action_index: int, delta: float) -> None:
        self.row(state)[action_index] += delta

    def set_row(self, state, values) -> None:
        values = np.asarray(values, dtype=np.float64)
        if values.shape != (self.action_count,):
            raise ValueError(f"row must have length {self.action_count}")
        self.table[state] = values.copy()

    def copy(self) -> "TabularQ":
        out = TabularQ(self.action_count)
        out.table = {s: row.copy() for s, row in self.table.items()}
        return out

    def sync_from(self, other: "TabularQ") -> None:
        self.table = {s: row.copy() for s, row in other.table.items()}


class NetworkQ:
    """Network-backed Q function over stacked observations."""

    def __init__(self, params: NetworkParams):
        self.params = params

    @property
    def action_count(self) -> int:
        return self.params.output_count

    def q_values(self, state) -> np.ndarray:
        return forward(self.params, state)

    def copy(self) -> "NetworkQ":
        return NetworkQ(copy_params(self.params))

    def sync_from(self, other: "NetworkQ") -> None:
        self.params = copy_params(other.params)


def epsilon_at(cfg: AgentConfig, step: int) -> float:
    """Linear anneal from eps_start to eps_end, then constant."""
    if step <= 0:
        return cfg.eps_start
    if step >= cfg.eps_anneal_steps:
        return cfg.eps_end
    frac = step / cfg.eps_anneal_steps
    return cfg.eps_start + (cfg.eps_end - cfg.eps_start) * frac


def greedy_index(values) -> int:
    """Argmax with ties broken by lowest index."""
    return int(np.argmax(values))


def select_action_with_values(q, state, space: ExtendedActionSpace, eps: float, rng):
    """Pick an action and return it together with the Q row it saw."""
    values = q.q_values(state)
    if rng.random() < eps:
        k = int(rng.integers(space.size))
    else:
        k = greedy_index(values)
    return space.action(k), values


def select_action(q, state, space: ExtendedActionSpace, eps: float, rng) -> ExtendedAction:
    """Epsilon-greedy: uniform over all extended actions with prob eps,
    otherwise greedy with lowest-index tie-breaking."""
    action, _ = select_action_with_values(q, state, space, eps, rng)
    return action


def _mode_reward(t: Transition, cfg: AgentConfig) -> float:
    if cfg.discount_mode == PER_DECISION:
        return t.reward
    if not t.frame_rewards:
        raise ValueError("per_frame discounting needs frame_rewards on the transition")
    return float(sum(cfg.gamma**i * r for i, r in enumerate(t.frame_rewards)))


def td_targets(batch, target_q, cfg: AgentConfig) -> np.ndarray:
    """Bootstrapped regression targets for a batch of transitions.

    Terminal transitions never bootstrap.  In per_decision mode the
    bootstrap is discounted by one factor of gamma; in per_frame mode the
    within-repeat rewards are discounted frame by frame and the bootstrap
    by gamma**frames_used.
    """
    if not batch:
        raise ValueError("td_targets needs a non-empty batch")
    targets = np.zeros(len(batch))
    for i, t in enumerate(batch):
        r = _mode_reward(t, cfg)
        if t.terminal:
            targets[i] = r
        else:
            bootstrap = float(np.max(target_q.q_values(t.next_state)))
            if cfg.discount_mode == PER_DECISION:
                targets[i] = r + cfg.gamma * bootstrap
            else:
                targets[i] = r + cfg.gamma**t.frames_used * bootstrap
    return targets


def clip_td_error(delta: float, opt_cfg: OptimizerConfig) -> float:
    if opt_cfg.clip_mode == TD_ERROR_CLIP:
        return float(np.clip(delta, -opt_cfg.clip_value, opt_cfg.clip_value))
    return delta


@dataclass
class TdBatch:
    """One training step's batch, kept for metrics."""

    states: list
    actions: list
    targets: np.ndarray
    predicted: np.ndarray
    td_errors: np.ndarray

    @property
    def loss(self) -> float:
        return float(np.mean(self.td_errors**2))


def train_step(online, target, buf: ReplayBuffer, cfg: AgentConfig, opt_cfg: OptimizerConfig, rng):
    """Sample a batch and apply one update; returns None while the buffer
    is still below learn_start (a no-op, not an error).

    The squared-error gradient flows only through the taken action's
    output: d(0.5 * delta^2)/d q_a = -delta, with delta clipped first in
    td_error_clip mode.  The network backend averages gradients over the
    batch and takes one RMSProp step; the tabular backend reduces to
    Q(s,a) += alpha * delta with alpha = learning_rate.
    """
    if len(buf) < max(cfg.batch_size, cfg.learn_start):
        return None
    batch = buf.sample(cfg.batch_size, rng)
    targets = td_targets(batch, target, cfg)
    predicted = np.zeros(len(batch))

    if isinstance(online, TabularQ):
        deltas = np.zeros(len(batch))
        for i, t in enumerate(batch):
            predicted[i] = online.q_values(t.state)[t.action.index]
            deltas[i] = targets[i] - predicted[i]
            online.update(t.state, t.action.index, opt_cfg.learning_rate * clip_td_error(deltas[i], opt_cfg))
    else:
        params = online.params
        total = Gradients(
            weights=[np.zeros_like(w) for w in params.weights],
            biases=[np.zeros_like(b) for b in params.biases],
        )
        deltas = np.zeros(len(batch))
        for i, t in enumerate(batch):
            row = forward(params, t.state)
            predicted[i] = row[t.action.index]
            deltas[i] = targets[i] - predicted[i]
            out_grad = np.zeros(params.output_count)
            out_grad[t.action.index] = -clip_td_error(deltas[i], opt_cfg)
            g = backward(params, t.state, out_grad)
            for acc, gw in zip(total.weights, g.weights):
                acc += gw
            for acc, gb in zip(total.biases, g.biases):
                acc += gb
        scale = 1.0 / len(batch)
        total.weights = [w * scale for w in total.weights]
        total.biases = [b * scale for b in total.biases]
        rmsprop_step(params, total, opt_cfg)

    return TdBatch(
        states=[t.state for t in batch],
        actions=[t.action.index for t in batch],
        targets=targets,
        predicted=predicted,
        td_errors=deltas,
    )


def maybe_sync_target(online, target, step: int, cfg: AgentConfig) -> bool:
    """Copy online into target every target_sync_interval steps."""
    if step > 0 and step % cfg.target_sync_interval == 0:
        target.sync_from(online)
        return True
    return False


def tabular_q_learning(env_spec, space: ExtendedActionSpace, cfg: AgentConfig, episodes: int,
                       alpha=1.0, rng=None, max_decisions=None) -> TabularQ:
    """Classic online Q-learning over extended actions on a finite MDP.

    ``alpha`` is either a constant or a callable on the global decision
    step.  Epsilon follows the config's anneal schedule.  Stops after
    ``episodes`` episodes or ``max_decisions`` decisions, whichever comes
    first.
    """
    from .actions import execute_repeated
    from .envs.mdp import MdpEnv

    if rng is None:
        rng = np.random.default_rng(0)
    alpha_fn = alpha if callable(alpha) else (lambda step: alpha)
    q = TabularQ(space.size)
    env = MdpEnv(env_spec)
    step = 0
    for _ in range(episodes):
        if max_decisions is not None and step >= max_decisions:
            break
        env.reset()
        while not env.done:
            if max_decisions is not None and step >= max_decisions:
                break
            state = env.state
            action = select_action(q, state, space, epsilon_at(cfg, step), rng)
            outcome = execute_repeated(env, action.basis, action.repeat)
            t = Transition(
                state=state,
                action=action,
                reward=outcome.reward,
                next_state=env.state,
                terminal=env.terminal,
                frames_used=outcome.frames_used,
                frame_rewards=outcome.frame_rewards,
            )
            y = td_targets([t], q, cfg)[0]
            delta = y - q.q_values(state)[action.index]
            q.update(state, action.index, alpha_fn(step) * delta)
            step += 1
    return q
