import numpy as np
import pytest

from skipq.envs import FrameStack, MdpEnv, ToyDiver, chain_persist, make_env, mdp_env_step, stack_frames
from skipq.envs.diver import DOWN, FRAME_CAP, LEFT, NOOP, OXYGEN_MAX, RIGHT, UP, WIDTH, DEPTH
from skipq.envs.mdp import make_mdp
from skipq.envs.trajectory import DecisionRecord, format_record, parse_record, read_trajectory, write_trajectory


class TestChainPersist:
    def setup_method(self):
        self.spec = chain_persist()

    def test_corridor_advance(self):
        assert mdp_env_step(self.spec, 0, 0) == (1, pytest.approx(0.1), False)

    def test_hazard_advance(self):
        assert mdp_env_step(self.spec, 7, 0) == (8, pytest.approx(-1.0), False)

    def test_hazard_dodge(self):
        assert mdp_env_step(self.spec, 7, 1) == (8, pytest.approx(0.1), False)

    def test_corridor_dodge(self):
        assert mdp_env_step(self.spec, 3, 1) == (4, pytest.approx(-0.1), False)

    def test_goal_step_includes_bonus(self):
        nxt, reward, terminal = mdp_env_step(self.spec, 23, 0)
        assert (nxt, terminal) == (24, True)
        assert reward == pytest.approx(1.1)  # corridor advance + goal bonus

    def test_terminal_state_rejected(self):
        with pytest.raises(ValueError):
            mdp_env_step(self.spec, 24, 0)

    def test_terminal_absorbs(self):
        assert self.spec.transition[24, 0] == 24
        assert self.spec.reward[24].sum() == 0.0

    def test_hazards_must_be_inside(self):
        with pytest.raises(ValueError):
            chain_persist(length=10, hazards=(12,))


class TestMdpEnv:
    def test_episode_walkthrough(self):
        env = MdpEnv(chain_persist())
        env.reset()
        total = 0.0
        while not env.done:
            _, r, _ = env.step(0)
            total += r
        assert env.frames == 24
        assert env.state == 24
        # two hazards advanced through: 22 * 0.1 - 2 * 1.0 + 1.0
        assert total == pytest.approx(22 * 0.1 - 2.0 + 1.0)

    def test_reset_restores_start(self):
        env = MdpEnv(chain_persist())
        env.step(0)
        env.reset()
        assert env.state == 0 and env.frames == 0

    def test_digest_is_state_id(self):
        env = MdpEnv(chain_persist())
        env.step(0)
        assert env.state_digest() == "1"

    def test_make_mdp_normalizes_terminal_rows(self):
        spec = make_mdp(transition=[[1], [0]], reward=[[1.0], [5.0]], terminal=[False, True])
        assert spec.transition[1, 0] == 1
        assert spec.reward[1, 0] == 0.0


class TestToyDiver:
    def test_dive_consumes_oxygen(self):
        env = ToyDiver(seed=0)
        env.step(DOWN)
        assert env.y == 1
        assert env.oxygen == OXYGEN_MAX - 1

    def test_surface_refills(self):
        env = ToyDiver(seed=0)
        env.step(DOWN)
        env.step(DOWN)
        assert env.oxygen == OXYGEN_MAX - 2
        env.step(UP)
        env.step(UP)
        assert env.y == 0
        assert env.oxygen == OXYGEN_MAX

    def test_oxygen_exhaustion_terminal(self):
        env = ToyDiver(seed=0)
        env.enemies = []  # keep the test about oxygen only
        env.targets = []
        env.step(DOWN)
        env.oxygen = 1
        _, reward, terminal = env.step(NOOP)
        assert terminal
        assert env.oxygen == 0
        assert reward == pytest.approx(-1.0)

    def test_oxygen_never_negative_and_conserved(self):
        # oxygen drops exactly 1 per underwater frame and only refills at surface
        env = ToyDiver(seed=3)
        env.enemies = []
        env.targets = []
        rng = np.random.default_rng(0)
        prev = env.oxygen
        for _ in range(300):
            if env.done:
                break
            env.step(int(rng.integers(5)))
            assert 0 <= env.oxygen <= OXYGEN_MAX
            if env.y == 0:
                assert env.oxygen == OXYGEN_MAX
            else:
                assert env.oxygen == prev - 1
            prev = env.oxygen

    def test_target_collection_and_respawn(self):
        env = ToyDiver(seed=1)
        env.enemies = []
        ty, tx = env.targets[0]
        env.x, env.y = tx, ty - 1
        env.oxygen = OXYGEN_MAX
        _, reward, _ = env.step(DOWN)
        assert reward == pytest.approx(1.0)
        assert (ty, tx) not in env.targets or env.targets.count((ty, tx)) <= 1
        assert len(env.targets) == 2

    def test_enemy_contact_terminal(self):
        env = ToyDiver(seed=0)
        row, x, dx = env.enemies[0]
        # stand where the enemy will move to
        env.y = row
        env.x = (x + dx) if 0 <= x + dx < WIDTH else (x - dx)
        _, reward, terminal = env.step(NOOP)
        assert terminal
        assert reward == pytest.approx(-1.0)

    def test_enemies_bounce_inside_grid(self):
        env = ToyDiver(seed=5)
        env.targets = []
        env.oxygen = OXYGEN_MAX
        for _ in range(50):
            if env.done:
                break
            env.step(NOOP)
            for row, x, dx in env.enemies:
                assert 0 <= x < WIDTH
                assert dx in (-1, 1)

    def test_frame_cap_truncates_without_terminal(self):
        env = ToyDiver(seed=0)
        env.enemies = []
        env.targets = []
        for _ in range(FRAME_CAP):
            env.step(NOOP)  # stays at the surface, oxygen full
        assert env.done
        assert env.truncated
        assert not env.terminal

    def test_observation_channels(self):
        env = ToyDiver(seed=2)
        obs = env.observe()
        assert obs.shape == (DEPTH, WIDTH, 4)
        assert obs.min() >= 0.0 and obs.max() <= 1.0
        assert obs[env.y, env.x, 0] == 1.0
        assert obs[:, :, 3].max() == env.oxygen / OXYGEN_MAX
        assert obs[:, :, 1].sum() == len(env.enemies)
        assert obs[:, :, 2].sum() == len(env.targets)

    def test_determinism_bit_exact(self):
        def run(seed):
            env = ToyDiver(seed=seed)
            rng = np.random.default_rng(9)
            trace = []
            for _ in range(200):
                if env.done:
                    env.reset(seed=seed + 1)
                obs, r, t = env.step(int(rng.integers(5)))
                trace.append((obs.tobytes(), r, t))
            return trace

        assert run(123) == run(123)

    def test_moves_clamped_to_grid(self):
        env = ToyDiver(seed=0)
        env.enemies = []
        env.targets = []
        for _ in range(WIDTH + 2):
            env.step(LEFT)
        assert env.x == 0
        for _ in range(WIDTH + 2):
            env.step(RIGHT)
        assert env.x == WIDTH - 1


class TestFrameStacking:
    def test_first_frame_replicated(self):
        f = np.ones((2, 2, 3))
        stacked = stack_frames([], f)
        assert stacked.shape == (2, 2, 12)
        assert np.all(stacked == 1.0)

    def test_sliding_window(self):
        frames = [np.full((1, 1, 1), i, dtype=float) for i in range(1, 6)]
        stacked = stack_frames(frames[:4], frames[4])
        assert list(stacked.reshape(-1)) == [2.0, 3.0, 4.0, 5.0]

    def test_stack_shape_is_4x_channels(self):
        obs = np.zeros((10, 8, 4))
        assert stack_frames([], obs).shape == (10, 8, 16)

    def test_frame_stack_object(self):
        stack = FrameStack()
        s0 = stack.reset(np.full((1, 1, 1), 7.0))
        assert list(s0.reshape(-1)) == [7.0] * 4
        s1 = stack.push(np.full((1, 1, 1), 8.0))
        assert list(s1.reshape(-1)) == [7.0, 7.0, 7.0, 8.0]


class TestTrajectoryFormat:
    def test_round_trip(self, tmp_path):
        records = [
            DecisionRecord(step=0, digest="0", action_index=2, basis=0, repeat=6, reward=0.6, terminal=False),
            DecisionRecord(step=1, digest="6", action_index=0, basis=0, repeat=1, reward=0.1, terminal=True),
        ]
        path = tmp_path / "trajectory.txt"
        write_trajectory(path, records)
        assert read_trajectory(path) == records

    def test_line_format(self):
        r = DecisionRecord(step=3, digest="a1,2 o40", action_index=5, basis=1, repeat=20, reward=-1.25, terminal=True)
        line = format_record(r)
        assert line == "3\ta1,2 o40\t5\t1\t20\t-1.25\t1"
        assert parse_record(line) == r

    def test_malformed_line_rejected(self):
        with pytest.raises(ValueError):
            parse_record("1\t2\t3")


def test_make_env_ids():
    assert isinstance(make_env("chain_persist"), MdpEnv)
    assert isinstance(make_env("toy_diver"), ToyDiver)
    with pytest.raises(ValueError):
        make_env("atari")
