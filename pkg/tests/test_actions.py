import numpy as np
import pytest

from skipq.actions import ExtendedActionSpace, decode, execute_repeated, long_action_fraction
from skipq.envs.mdp import MdpEnv, chain_persist, make_mdp


class ScriptedEnv:
    """Constant per-frame reward, optional terminal after a fixed frame."""

    action_count = 1

    def __init__(self, reward_per_frame=0.1, terminal_after=None):
        self.reward_per_frame = reward_per_frame
        self.terminal_after = terminal_after
        self.frames = 0
        self.terminal = False

    @property
    def done(self):
        return self.terminal

    def step(self, basis):
        self.frames += 1
        if self.terminal_after is not None and self.frames >= self.terminal_after:
            self.terminal = True
        return self.frames, self.reward_per_frame, self.terminal


class TestDecode:
    def test_short_variant(self):
        space = ExtendedActionSpace(18, 4, 20)
        assert decode(space, 3) == (3, 4)

    def test_long_variant(self):
        space = ExtendedActionSpace(18, 4, 20)
        assert decode(space, 21) == (3, 20)

    def test_two_action_space(self):
        space = ExtendedActionSpace(2, 1, 6)
        assert decode(space, 0) == (0, 1)

    @pytest.mark.parametrize("k", [-1, 36, 100])
    def test_out_of_range(self, k):
        space = ExtendedActionSpace(18, 4, 20)
        with pytest.raises(ValueError):
            decode(space, k)

    @pytest.mark.parametrize("basis_count,r1,r2", [(2, 1, 6), (18, 4, 20), (5, 1, 4), (1, 3, 3)])
    def test_partition_property(self, basis_count, r1, r2):
        # every basis action appears exactly twice: once at r1, once at r2
        space = ExtendedActionSpace(basis_count, r1, r2)
        pairs = [decode(space, k) for k in range(space.size)]
        for b in range(basis_count):
            repeats = sorted(rep for basis, rep in pairs if basis == b)
            assert repeats == sorted([r1, r2])
        assert len(pairs) == 2 * basis_count

    def test_invalid_space(self):
        with pytest.raises(ValueError):
            ExtendedActionSpace(0, 1, 1)
        with pytest.raises(ValueError):
            ExtendedActionSpace(2, 0, 1)


class TestExecuteRepeated:
    def test_accumulates_over_full_repeat(self):
        env = ScriptedEnv(reward_per_frame=0.1)
        out = execute_repeated(env, 0, 4)
        assert out.reward == pytest.approx(0.4)
        assert out.frames_used == 4
        assert not out.terminal
        assert out.frame_rewards == (0.1, 0.1, 0.1, 0.1)

    def test_stops_at_terminal(self):
        env = ScriptedEnv(reward_per_frame=1.0, terminal_after=2)
        out = execute_repeated(env, 0, 6)
        assert out.reward == pytest.approx(2.0)
        assert out.frames_used == 2
        assert out.terminal

    def test_repeat_one_is_single_step(self):
        env_a = ScriptedEnv()
        out = execute_repeated(env_a, 0, 1)
        env_b = ScriptedEnv()
        obs, reward, terminal = env_b.step(0)
        assert out.reward == reward
        assert out.frames_used == 1
        assert out.next_observation == obs

    def test_rejects_finished_env(self):
        env = ScriptedEnv(terminal_after=1)
        env.step(0)
        with pytest.raises(RuntimeError):
            execute_repeated(env, 0, 2)

    def test_frame_accounting_on_chain(self):
        # summed frames_used over an episode equals env frames elapsed
        env = MdpEnv(chain_persist())
        space = ExtendedActionSpace(2, 1, 6)
        rng = np.random.default_rng(0)
        env.reset()
        total = 0
        while not env.done:
            k = int(rng.integers(space.size))
            basis, repeat = decode(space, k)
            out = execute_repeated(env, basis, repeat)
            total += out.frames_used
        assert total == env.frames

    def test_partial_reward_on_early_terminal(self):
        # two-state chain: +1 then terminal; long repeat stops after 2 frames
        spec = make_mdp(
            transition=[[1], [2], [2]],
            reward=[[1.0], [1.0], [0.0]],
            terminal=[False, False, True],
        )
        env = MdpEnv(spec)
        out = execute_repeated(env, 0, 6)
        assert out.frames_used == 2
        assert out.reward == pytest.approx(2.0)
        assert out.terminal


class TestLongActionFraction:
    def setup_method(self):
        self.space = ExtendedActionSpace(2, 1, 6)

    def test_mixed(self):
        acts = [self.space.action(k) for k in [0, 2, 3, 2, 1, 3, 2, 2, 1, 2]]
        assert long_action_fraction(acts, self.space) == pytest.approx(0.7)

    def test_all_short(self):
        acts = [self.space.action(0)] * 5
        assert long_action_fraction(acts, self.space) == 0.0

    def test_all_long(self):
        acts = [self.space.action(3)] * 5
        assert long_action_fraction(acts, self.space) == 1.0

    def test_empty_rejected(self):
        with pytest.raises(ValueError):
            long_action_fraction([], self.space)
