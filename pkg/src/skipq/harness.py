"""Training/testing protocol, metrics, and the report path.

A run alternates training epochs (epsilon annealed, learning on) and
testing epochs (epsilon = eps_test, learning off, nothing mutated), both
measured in decisions (action selections), not frames.  Each testing epoch
yields one EpochReport; averages cover complete episodes only, so an
episode straddling the epoch boundary is dropped from that epoch's
numbers.  Every source of randomness derives from the run seed, which
makes metrics and checkpoints byte-reproducible.  Wall-clock timing is only
recorded when the config asks for it, precisely so reruns stay
byte-identical.

Because epoch budgets count decisions, an agent that favors long repeats
consumes more frames per epoch than a short-repeat one; comparisons below
are per-decision-budget by construction.
"""

from __future__ import annotations

import os
import time
from dataclasses import dataclass, replace

import numpy as np

from . import checkpoint as ckpt_mod
from .actions import ExtendedActionSpace, execute_repeated
from .agent import (
    NetworkQ,
    TabularQ,
    clip_td_error,
    epsilon_at,
    maybe_sync_target,
    select_action_with_values,
    td_targets,
    train_step,
)
from .config import RunConfig
from .envs import FrameStack, MdpEnv, make_env
from .envs.trajectory import DecisionRecord, write_trajectory
from .errors import CheckpointError, ConfigError
from .nets import build_network, conv, dense, rectifier
from .replay import ReplayBuffer, Transition

METRICS_HEADER = "epoch,avg_score,episodes,avg_q,long_action_frac,seconds"
COMPARE_HEADER = "config,seeds,best_mean,best_min,best_max"

# Sub-stream tags so init, training, replay, env seeding, testing, and eval
# never share a random sequence.
_STREAM_INIT = 0
_STREAM_TRAIN = 1
_STREAM_REPLAY = 2
_STREAM_ENV = 3
_STREAM_TEST = 4
_STREAM_EVAL = 5


@dataclass
class EpochReport:
    epoch: int
    avg_score: float
    episodes: int
    avg_q: float
    long_action_fraction: float
    seconds: float

    def csv_row(self) -> str:
        return (
            f"{self.epoch},{self.avg_score:.6f},{self.episodes},"
            f"{self.avg_q:.6f},{self.long_action_fraction:.6f},{self.seconds:.3f}"
        )


@dataclass
class EpochStats:
    """Raw epoch bookkeeping before it becomes an EpochReport."""

    scores: list
    episode_long_fractions: list
    q_mean_sum: float
    decisions: int
    records: list
    histogram: np.ndarray

    @property
    def episodes(self) -> int:
        return len(self.scores)

    @property
    def avg_score(self) -> float:
        return float(np.mean(self.scores)) if self.scores else 0.0

    @property
    def avg_q(self) -> float:
        return self.q_mean_sum / self.decisions if self.decisions else 0.0

    @property
    def long_action_fraction(self) -> float:
        if not self.episode_long_fractions:
            return 0.0
        return float(np.mean(self.episode_long_fractions))


def episode_score(rewards) -> float:
    """Plain sum of unclipped rewards."""
    return float(sum(rewards))


def best_epoch(reports):
    """Report with the highest average episode score; earliest on ties."""
    reports = list(reports)
    if not reports:
        raise ValueError("best_epoch needs at least one report")
    best = reports[0]
    for r in reports[1:]:
        if r.avg_score > best.avg_score:
            best = r
    return best


def _network_for(cfg: RunConfig, input_shape, output_count: int):
    if cfg.backend == "dense":
        layers = [dense(cfg.hidden_units), rectifier(), dense(output_count)]
    else:
        layers = [conv(8, 3, 1), rectifier(), dense(cfg.hidden_units), rectifier(), dense(output_count)]
    seed_rng = np.random.default_rng((cfg.seed, _STREAM_INIT))
    return build_network(layers, input_shape, output_count, int(seed_rng.integers(2**31)))


def _stacked_shape(env) -> tuple:
    shape = list(np.asarray(env.observe()).shape)
    shape[-1] *= FrameStack().depth
    return tuple(shape)


class Runner:
    """Mutable state of one run: env, Q functions, replay, counters, RNGs."""

    def __init__(self, cfg: RunConfig):
        cfg.validate()
        self.cfg = cfg
        self.agent_cfg = cfg.agent_config()
        self.opt_cfg = cfg.optimizer_config()
        self.env = make_env(cfg.env)
        self.space = cfg.space_for(self.env.action_count)
        self.tabular = cfg.backend == "tabular"
        self.stack = None if self.tabular else FrameStack()
        if self.tabular:
            self.online = TabularQ(self.space.size)
            self.target = TabularQ(self.space.size)
        else:
            params = _network_for(cfg, _stacked_shape(self.env), self.space.size)
            self.online = NetworkQ(params)
            self.target = self.online.copy()
        self.buf = ReplayBuffer(cfg.replay_capacity)
        self.train_rng = np.random.default_rng((cfg.seed, _STREAM_TRAIN))
        self.replay_rng = np.random.default_rng((cfg.seed, _STREAM_REPLAY))
        self.train_steps = 0
        self.episode_counter = 0

    def _reset_episode(self):
        obs = self.env.reset(seed=(self.cfg.seed, _STREAM_ENV, self.episode_counter))
        self.episode_counter += 1
        if self.stack is not None:
            self.stack.reset(obs)

    def _agent_state(self):
        return self.env.state if self.tabular else self.stack.state()

    def _learn(self, transition: Transition):
        if self.tabular:
            # classic online Q-learning: self-bootstrapped target, step size
            # alpha, TD error clipped per the optimizer config
            y = td_targets([transition], self.online, self.agent_cfg)[0]
            delta = y - self.online.q_values(transition.state)[transition.action.index]
            self.online.update(
                transition.state,
                transition.action.index,
                self.cfg.alpha * clip_td_error(delta, self.opt_cfg),
            )
        else:
            self.buf.push(transition)
            train_step(self.online, self.target, self.buf, self.agent_cfg, self.opt_cfg, self.replay_rng)
        self.train_steps += 1
        if not self.tabular:
            maybe_sync_target(self.online, self.target, self.train_steps, self.agent_cfg)

    def play_epoch(self, steps: int, learning: bool, rng, record: bool = False) -> EpochStats:
        """Run one epoch of ``steps`` decisions; ``learning`` toggles updates."""
        stats = _new_stats(self.space)
        self._reset_episode()
        episode = _EpisodeTally()
        for i in range(steps):
            state = self._agent_state()
            digest = self.env.state_digest()
            eps = epsilon_at(self.agent_cfg, self.train_steps) if learning else self.agent_cfg.eps_test
            action, values = select_action_with_values(self.online, state, self.space, eps, rng)
            outcome = execute_repeated(self.env, action.basis, action.repeat)
            _tally(stats, episode, self.space, action, values, outcome, i, digest, record)

            if learning:
                frame_rewards = outcome.frame_rewards
                if self.agent_cfg.reward_clip:
                    frame_rewards = tuple(float(np.clip(r, -1.0, 1.0)) for r in frame_rewards)
                next_state = self._agent_state() if self.tabular else self.stack.push(outcome.next_observation)
                self._learn(
                    Transition(
                        state=state,
                        action=action,
                        reward=float(sum(frame_rewards)),
                        next_state=next_state,
                        terminal=self.env.terminal,
                        frames_used=outcome.frames_used,
                        frame_rewards=frame_rewards,
                    )
                )
            elif self.stack is not None and not self.env.done:
                self.stack.push(outcome.next_observation)

            if self.env.done:
                _close_episode(stats, episode)
                episode = _EpisodeTally()
                self._reset_episode()
        return stats

    def snapshot(self) -> ckpt_mod.Checkpoint:
        rng_state = ckpt_mod.rng_state_of(self.train_rng)
        if self.tabular:
            return ckpt_mod.from_tabular(self.online, self.space, step=self.train_steps, rng_state=rng_state)
        return ckpt_mod.from_network(self.online.params, self.space, step=self.train_steps, rng_state=rng_state)


class _EpisodeTally:
    def __init__(self):
        self.reward = 0.0
        self.long = 0
        self.decisions = 0
        self.actions = []


def _new_stats(space: ExtendedActionSpace) -> EpochStats:
    return EpochStats(
        scores=[],
        episode_long_fractions=[],
        q_mean_sum=0.0,
        decisions=0,
        records=[],
        histogram=np.zeros(space.size, dtype=np.int64),
    )


def _tally(stats, episode, space, action, values, outcome, step, digest, record):
    stats.q_mean_sum += float(values.mean())
    stats.decisions += 1
    episode.reward += outcome.reward
    episode.long += int(space.is_long(action.index))
    episode.decisions += 1
    episode.actions.append(action.index)
    if record:
        stats.records.append(
            DecisionRecord(
                step=step,
                digest=digest,
                action_index=action.index,
                basis=action.basis,
                repeat=action.repeat,
                reward=outcome.reward,
                terminal=outcome.terminal,
            )
        )


def _close_episode(stats: EpochStats, episode: _EpisodeTally) -> None:
    stats.scores.append(episode.reward)
    stats.episode_long_fractions.append(episode.long / episode.decisions)
    for k in episode.actions:
        stats.histogram[k] += 1


def write_metrics_csv(path, reports) -> None:
    with open(path, "w", encoding="utf-8", newline="\n") as fh:
        fh.write(METRICS_HEADER + "\n")
        for r in reports:
            fh.write(r.csv_row() + "\n")


def run_training(cfg: RunConfig, on_epoch=None):
    """Full protocol: alternate train/test epochs, emit reports and artifacts.

    Writes metrics.csv, checkpoint.bin (final), checkpoint_best.bin (best
    testing epoch so far), trajectory.txt (final testing epoch), and, when
    figures are enabled, the report figures, all under cfg.out_dir.
    Returns the list of EpochReports.
    """
    cfg.validate()
    os.makedirs(cfg.out_dir, exist_ok=True)
    runner = Runner(cfg)
    reports = []
    best_score = None
    last_records = []
    for epoch in range(1, cfg.epoch_count + 1):
        t0 = time.perf_counter()
        runner.play_epoch(cfg.train_epoch_steps, learning=True, rng=runner.train_rng)
        test_rng = np.random.default_rng((cfg.seed, _STREAM_TEST, epoch))
        stats = runner.play_epoch(cfg.test_epoch_steps, learning=False, rng=test_rng, record=True)
        elapsed = time.perf_counter() - t0
        report = EpochReport(
            epoch=epoch,
            avg_score=stats.avg_score,
            episodes=stats.episodes,
            avg_q=stats.avg_q,
            long_action_fraction=stats.long_action_fraction,
            seconds=elapsed if cfg.record_timing else 0.0,
        )
        reports.append(report)
        last_records = stats.records
        if best_score is None or report.avg_score > best_score:
            best_score = report.avg_score
            ckpt_mod.save_checkpoint(runner.snapshot(), os.path.join(cfg.out_dir, "checkpoint_best.bin"))
        if on_epoch is not None:
            on_epoch(report)
    ckpt_mod.save_checkpoint(runner.snapshot(), os.path.join(cfg.out_dir, "checkpoint.bin"))
    write_metrics_csv(os.path.join(cfg.out_dir, "metrics.csv"), reports)
    if last_records:
        write_trajectory(os.path.join(cfg.out_dir, "trajectory.txt"), last_records)
    if cfg.figures and reports:
        from . import plots

        plots.save_training_figures(reports, cfg.out_dir)
    return reports


def _check_compat(ckpt: ckpt_mod.Checkpoint, env) -> None:
    if ckpt.space.basis_count != env.action_count:
        raise CheckpointError(
            f"checkpoint has {ckpt.space.basis_count} basis actions, env has {env.action_count}"
        )
    if ckpt.backend == ckpt_mod.TABULAR and not isinstance(env, MdpEnv):
        raise CheckpointError("tabular checkpoint needs a finite-MDP environment")
    if ckpt.backend == ckpt_mod.NETWORK and _stacked_shape(env) != ckpt.network.input_shape:
        raise CheckpointError(
            f"checkpoint expects input {ckpt.network.input_shape}, env stacks to {_stacked_shape(env)}"
        )


def rollout(q, space: ExtendedActionSpace, env, steps: int, eps: float, seed: int = 0, rng=None) -> EpochStats:
    """Run a fixed policy for ``steps`` decisions without learning."""
    if rng is None:
        rng = np.random.default_rng((seed, _STREAM_EVAL))
    tabular = isinstance(q, TabularQ)
    stack = None if tabular else FrameStack()
    stats = _new_stats(space)
    episode_idx = 0

    def reset():
        nonlocal episode_idx
        obs = env.reset(seed=(seed, _STREAM_EVAL, episode_idx))
        episode_idx += 1
        if stack is not None:
            stack.reset(obs)

    reset()
    episode = _EpisodeTally()
    for i in range(steps):
        state = env.state if tabular else stack.state()
        digest = env.state_digest()
        action, values = select_action_with_values(q, state, space, eps, rng)
        outcome = execute_repeated(env, action.basis, action.repeat)
        _tally(stats, episode, space, action, values, outcome, i, digest, record=True)
        if stack is not None and not env.done:
            stack.push(outcome.next_observation)
        if env.done:
            _close_episode(stats, episode)
            episode = _EpisodeTally()
            reset()
    return stats


@dataclass
class StatsResult:
    """Greedy-policy action statistics over completed episodes."""

    long_action_fraction: float
    histogram: np.ndarray
    episodes: int
    decisions: int
    records: list
    space: ExtendedActionSpace


def stats_run(ckpt, env, steps: int = 10_000, eps_test: float = 0.05, seed: int = 0) -> StatsResult:
    """Action-usage statistics of a stored policy.

    Runs the checkpoint's policy (greedy with eps_test exploration) for the
    given number of decisions; the long-action fraction and the histogram
    cover completed episodes only.
    """
    if not isinstance(ckpt, ckpt_mod.Checkpoint):
        ckpt = ckpt_mod.load_checkpoint(ckpt)
    _check_compat(ckpt, env)
    stats = rollout(ckpt.q_function(), ckpt.space, env, steps, eps_test, seed=seed)
    return StatsResult(
        long_action_fraction=stats.long_action_fraction,
        histogram=stats.histogram,
        episodes=stats.episodes,
        decisions=stats.decisions,
        records=stats.records,
        space=ckpt.space,
    )


def evaluate_checkpoint(ckpt, env, steps: int, eps_test: float = 0.05, seed: int = 0):
    """One testing epoch on a stored policy; returns (EpochReport, EpochStats)."""
    if not isinstance(ckpt, ckpt_mod.Checkpoint):
        ckpt = ckpt_mod.load_checkpoint(ckpt)
    _check_compat(ckpt, env)
    stats = rollout(ckpt.q_function(), ckpt.space, env, steps, eps_test, seed=seed)
    report = EpochReport(
        epoch=0,
        avg_score=stats.avg_score,
        episodes=stats.episodes,
        avg_q=stats.avg_q,
        long_action_fraction=stats.long_action_fraction,
        seconds=0.0,
    )
    return report, stats


@dataclass
class CompareRow:
    label: str
    seeds: tuple
    best_scores: tuple

    @property
    def best_mean(self) -> float:
        return float(np.mean(self.best_scores))

    @property
    def best_min(self) -> float:
        return float(np.min(self.best_scores))

    @property
    def best_max(self) -> float:
        return float(np.max(self.best_scores))

    def csv_row(self) -> str:
        seeds = ";".join(str(s) for s in self.seeds)
        return f"{self.label},{seeds},{self.best_mean:.6f},{self.best_min:.6f},{self.best_max:.6f}"


def write_compare_csv(path, rows) -> None:
    with open(path, "w", encoding="utf-8", newline="\n") as fh:
        fh.write(COMPARE_HEADER + "\n")
        for row in rows:
            fh.write(row.csv_row() + "\n")


def compare_runs(cfgs, seeds=None, out_dir=None, on_epoch=None) -> list:
    """Run each config over its seeds and tabulate best scores.

    Rows follow the input config order.  Each run gets its own subdirectory
    of ``out_dir``, so runs share nothing else.
    """
    cfgs = list(cfgs)
    if len(cfgs) < 2:
        raise ConfigError("compare needs at least 2 configs")
    rows = []
    for i, cfg in enumerate(cfgs):
        label = cfg.label or f"cfg{i}"
        run_seeds = tuple(seeds) if seeds else (cfg.seed,)
        bests = []
        for sd in run_seeds:
            sub_dir = os.path.join(out_dir or cfg.out_dir, f"{label}_seed{sd}")
            sub = replace(cfg, seed=sd, out_dir=sub_dir, figures=False, label=label)
            if sub.epoch_count < 1:
                raise ConfigError(f"{label}: compare needs epoch_count >= 1")
            reports = run_training(sub, on_epoch=on_epoch)
            bests.append(best_epoch(reports).avg_score)
        rows.append(CompareRow(label=label, seeds=run_seeds, best_scores=tuple(bests)))
    return rows
