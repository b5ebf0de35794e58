"""Environment facade contract: call ordering, validation, key-set invariants."""

import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from envlink import make_env
from envlink.envs import GridworldAdapter, GridworldConfig
from envlink.errors import (
    EnvClosed,
    EpisodeOver,
    MissingAgent,
    NotReset,
    SpaceMismatch,
)
from envlink.model import Environment
from envlink.prng import SplitMix64
from envlink.spaces import contains, sample
from envlink.values import Tensor

RIGHT, STAY = 3, 4


def test_step_before_reset_is_rejected():
    env = make_env("gridworld:3x3:n1")
    with pytest.raises(NotReset):
        env.step({"agent0": STAY})


def test_close_is_idempotent():
    env = make_env("gridworld:3x3:n1")
    env.close()
    env.close()


def test_operations_after_close_error():
    env = make_env("gridworld:3x3:n1")
    env.reset()
    env.close()
    with pytest.raises(EnvClosed):
        env.step({"agent0": STAY})
    with pytest.raises(EnvClosed):
        env.reset()
    with pytest.raises(EnvClosed):
        env.observation_space
    with pytest.raises(EnvClosed):
        env.action_space


def test_action_keys_must_equal_agent_set():
    env = make_env("gridworld:3x3:n2")
    env.reset()
    with pytest.raises(MissingAgent):
        env.step({"agent0": STAY})
    with pytest.raises(MissingAgent):
        env.step({"agent0": STAY, "agent1": STAY, "agent2": STAY})
    with pytest.raises(MissingAgent):
        env.step({})


def test_actions_validated_against_spaces():
    env = make_env("gridworld:3x3:n1")
    env.reset()
    with pytest.raises(SpaceMismatch):
        env.step({"agent0": 5})
    with pytest.raises(SpaceMismatch):
        env.step({"agent0": Tensor([1.0])})
    env2 = make_env("pendulum")
    env2.reset(0)
    with pytest.raises(SpaceMismatch):
        env2.step({"agent0": Tensor([2.5])})  # outside the torque bounds
    with pytest.raises(SpaceMismatch):
        env2.step({"agent0": 1})


def test_last_action_echoes_submitted_map():
    env = make_env("gridworld:3x3:n2")
    env.reset()
    actions = {"agent0": RIGHT, "agent1": STAY}
    result = env.step(actions)
    assert result.last_action == actions


def test_step_after_episode_end_raises():
    adapter = GridworldAdapter(GridworldConfig(2, 2, max_steps=1))
    env = Environment(adapter)
    env.reset()
    result = env.step({"agent0": STAY})
    assert result.all_done
    with pytest.raises(EpisodeOver):
        env.step({"agent0": STAY})
    env.reset()
    env.step({"agent0": STAY})  # fresh episode steps again


def test_seed_must_be_u64():
    env = make_env("gridworld:3x3:n1")
    with pytest.raises(ValueError):
        env.reset(-1)
    with pytest.raises(ValueError):
        env.reset(1 << 64)


def test_two_agent_space_maps_share_keys():
    env = make_env("gridworld:4x4:n2")
    assert set(env.observation_space) == {"agent0", "agent1"}
    assert set(env.action_space) == {"agent0", "agent1"}
    assert env.agents == ("agent0", "agent1")


@settings(max_examples=40, deadline=None)
@given(
    width=st.integers(min_value=2, max_value=6),
    height=st.integers(min_value=2, max_value=6),
    agents=st.integers(min_value=1, max_value=3),
    seed=st.integers(min_value=0, max_value=2**32),
    steps=st.integers(min_value=1, max_value=12),
)
def test_result_maps_share_the_agent_key_set(width, height, agents, seed, steps):
    env = make_env(f"gridworld:{width}x{height}:n{agents}")
    agent_set = set(env.agents)
    obs, _ = env.reset(seed)
    assert set(obs) == agent_set
    rng = SplitMix64(seed)
    spaces = env.action_space
    for _ in range(steps):
        actions = {a: sample(spaces[a], rng) for a in sorted(agent_set)}
        result = env.step(actions)
        assert set(result.observation) == agent_set
        assert set(result.reward) == agent_set
        assert set(result.done) == agent_set
        assert set(result.last_action) == agent_set
        for a in agent_set:
            assert contains(env.observation_space[a], result.observation[a])
        if result.all_done:
            break
    env.close()


@pytest.mark.parametrize("spec", ["gridworld:5x5:n1", "gridworld:3x3:n2", "pendulum"])
def test_seeded_runs_are_bit_identical(spec):
    def run(seed):
        env = make_env(spec)
        rng = SplitMix64(seed)
        trace = [env.reset(seed)]
        spaces = env.action_space
        for _ in range(50):
            actions = {a: sample(spaces[a], rng) for a in env.agents}
            result = env.step(actions)
            trace.append((result.observation, result.reward, result.done))
            if result.all_done:
                env.reset(seed)
        env.close()
        return trace

    assert run(7) == run(7)
