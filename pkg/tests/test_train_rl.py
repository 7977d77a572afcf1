import numpy as np
import pytest
from scipy import stats

from policy import HistoryWindow, PolicyArch, PolicyParams, forward
from records import STATUS_FAILED, STATUS_OK, RunRecord
from train_rl import (
    ExperienceMemory,
    MemorySample,
    NonFiniteGradientError,
    RunAbortedError,
    TrainerConfig,
    advantages,
    ascend,
    clip_gradient,
    online_loop,
    reinforce_update,
    run_online,
    train_episodes,
)
from world import Action, GatewayMessage, SearchEnvironment, Step, Trajectory

MSG = GatewayMessage(-100.0, 20.0, 0.0, 0.0)


def sample_with(rewards, actions=None, window=2, start=0):
    actions = actions or [Action.E] * len(rewards)
    steps = tuple(Step(a, MSG, float(r)) for a, r in zip(actions, rewards))
    return MemorySample(HistoryWindow.start(window, MSG), Trajectory(start, steps))


@pytest.fixture
def small_params():
    return PolicyParams.initialize(PolicyArch(window=2, hidden=6, dense=6, latent=0), 0)


def test_returns_to_go_without_baseline():
    cfg = TrainerConfig(discount=0.5, baseline_enabled=False)
    (adv,) = advantages([sample_with([1.0, 1.0])], cfg)
    np.testing.assert_allclose(adv, [1.5, 1.0])


def test_whole_return_mode_uses_episodic_return():
    cfg = TrainerConfig(discount=0.5, baseline_enabled=False, return_mode="whole")
    (adv,) = advantages([sample_with([1.0, 2.0])], cfg)
    np.testing.assert_allclose(adv, [1.0, 1.0])


def test_baseline_is_per_step_offset_batch_mean():
    cfg = TrainerConfig(discount=1.0)
    adv = advantages([sample_with([1.0, 0.0]), sample_with([3.0, 2.0]), sample_with([5.0])], cfg)
    np.testing.assert_allclose(adv[0], [1.0 - 3.0, 0.0 - 1.0])
    np.testing.assert_allclose(adv[1], [5.0 - 3.0, 2.0 - 1.0])
    np.testing.assert_allclose(adv[2], [5.0 - 3.0])


def test_equal_returns_give_a_zero_update(small_params):
    batch = [sample_with([-90.0, -91.0], [Action(i % 5), Action.N]) for i in range(6)]
    updated = reinforce_update(small_params, batch, TrainerConfig(alpha_rl=0.1))
    np.testing.assert_allclose(updated.vector, small_params.vector, atol=1e-12)


def test_constant_reward_shift_leaves_update_unchanged(small_params, rng):
    rewards = rng.uniform(-120, -60, size=(8, 3))
    actions = [[Action(int(a)) for a in row] for row in rng.integers(5, size=(8, 3))]
    cfg = TrainerConfig(alpha_rl=0.05)
    base = reinforce_update(small_params, [sample_with(r, a) for r, a in zip(rewards, actions)], cfg)
    shifted = reinforce_update(small_params, [sample_with(r + 37.0, a) for r, a in zip(rewards, actions)], cfg)
    np.testing.assert_allclose(base.vector, shifted.vector, rtol=1e-9, atol=1e-12)


def test_zero_learning_rate_is_a_no_op(small_params, rng):
    batch = [sample_with(rng.uniform(-120, -60, 3), [Action.N, Action.E, Action.H]) for _ in range(4)]
    updated = reinforce_update(small_params, batch, TrainerConfig(alpha_rl=0.0))
    np.testing.assert_array_equal(updated.vector, small_params.vector)
    grad = rng.normal(size=small_params.arch.size)
    np.testing.assert_array_equal(ascend(small_params.vector, grad, 0.0, 10.0), small_params.vector)


def test_update_ignores_the_order_of_the_batch(small_params, rng):
    rewards = rng.uniform(-120, -60, size=(6, 3))
    actions = [[Action(int(a)) for a in row] for row in rng.integers(5, size=(6, 3))]
    batch = [sample_with(r, a) for r, a in zip(rewards, actions)]
    cfg = TrainerConfig(alpha_rl=0.05)
    forward_order = reinforce_update(small_params, batch, cfg)
    reversed_order = reinforce_update(small_params, batch[::-1], cfg)
    np.testing.assert_allclose(forward_order.vector, reversed_order.vector, rtol=0, atol=1e-12)


def test_empty_batch_is_rejected(small_params):
    with pytest.raises(ValueError):
        reinforce_update(small_params, [], TrainerConfig())


def test_non_finite_gradient_aborts_the_update():
    with pytest.raises(NonFiniteGradientError):
        ascend(np.zeros(3), np.array([0.0, np.nan, 1.0]), 0.1, 10.0)
    with pytest.raises(NonFiniteGradientError):
        ascend(np.zeros(2), np.array([1e308, 1e308]), 1e10, 0.0)


def test_non_finite_rewards_raise(small_params):
    with pytest.raises(NonFiniteGradientError):
        reinforce_update(small_params, [sample_with([np.inf]), sample_with([1.0])], TrainerConfig())


def test_clip_gradient_bounds_the_norm():
    grad = np.array([30.0, 40.0])
    np.testing.assert_allclose(clip_gradient(grad, 10.0), [6.0, 8.0])
    np.testing.assert_array_equal(clip_gradient(grad, 100.0), grad)


def test_bandit_policy_learns_the_rewarded_action():
    params = PolicyParams.initialize(PolicyArch(window=1, hidden=8, dense=8, latent=0), 0)
    cfg = TrainerConfig(alpha_rl=5e-2, max_grad_norm=10.0)
    rng = np.random.default_rng(0)
    hist = HistoryWindow.start(1, MSG)
    z = np.zeros(0)
    start = forward(params, hist, z)[Action.E]
    for _ in range(300):
        probs = forward(params, hist, z)
        picks = rng.choice(5, size=32, p=probs)
        batch = [sample_with([1.0 if a == Action.E else 0.0], [Action(int(a))], window=1) for a in picks]
        params = reinforce_update(params, batch, cfg)
    assert forward(params, hist, z)[Action.E] > max(0.5, start + 0.2)


def test_memory_is_a_bounded_fifo():
    memory = ExperienceMemory(capacity=3)
    samples = [sample_with([float(i)]) for i in range(5)]
    for s in samples:
        memory.add(s)
    assert len(memory) == 3
    assert list(memory) == samples[2:]


def test_memory_sampling_is_without_replacement(rng):
    memory = ExperienceMemory(capacity=10)
    for i in range(10):
        memory.add(sample_with([float(i)]))
    indices = memory.sample_indices(10, rng)
    assert sorted(indices) == list(range(10))
    assert len(memory.sample(32, rng)) == 10
    with pytest.raises(ValueError):
        memory.sample_indices(11, rng)


def test_memory_sampling_is_uniform():
    memory = ExperienceMemory(capacity=50)
    for i in range(50):
        memory.add(sample_with([float(i)]))
    rng = np.random.default_rng(2024)
    counts = np.bincount(
        np.concatenate([memory.sample_indices(5, rng) for _ in range(2000)]), minlength=50
    )
    expected = 2000 * 5 / 50
    chi2 = float(np.sum((counts - expected) ** 2 / expected))
    assert chi2 < stats.chi2.ppf(0.999, df=49)


def test_memory_sample_dict_round_trip():
    sample = sample_with([-90.5, -89.25], [Action.N, Action.W], start=7)
    restored = MemorySample.from_dict(sample.to_dict())
    assert restored.window == sample.window
    assert restored.trajectory == sample.trajectory


def test_step_windows_slide_over_the_trajectory():
    sample = sample_with([1.0, 2.0, 3.0], [Action.N, Action.E, Action.S], window=2)
    windows = sample.step_windows()
    assert windows.shape == (3, 2, 3)
    assert windows[1, -1, 2] == float(Action.N)
    assert windows[2, -1, 2] == float(Action.E)


def test_run_online_records_every_slot_and_sample(short_scenario):
    params = PolicyParams.initialize(PolicyArch(window=3, hidden=6, dense=6, latent=2), 0)
    cfg = TrainerConfig(horizon=4, batch_size=4, xi=1.0)
    memory = ExperienceMemory()
    updated, record = run_online(SearchEnvironment(short_scenario), params, cfg, seed=5, memory=memory)
    assert record.status == STATUS_OK
    assert [row.slot for row in record.rows] == list(range(1, 21))
    assert len(memory) == len(record.samples) == 20
    assert sorted(s.trajectory.start_slot for s in record.samples) == list(range(20))
    assert [len(s.trajectory) for s in record.samples[-4:]] == [4, 3, 2, 1]
    assert not np.array_equal(updated.vector, params.vector)


def test_run_online_is_deterministic_per_seed(short_scenario):
    params = PolicyParams.initialize(PolicyArch(window=3, hidden=6, dense=6, latent=0), 0)
    cfg = TrainerConfig(horizon=4, batch_size=4, xi=0.5)
    first = run_online(SearchEnvironment(short_scenario), params, cfg, seed=9)
    second = run_online(SearchEnvironment(short_scenario), params, cfg, seed=9)
    assert first[1].rows == second[1].rows
    np.testing.assert_array_equal(first[0].vector, second[0].vector)


def test_failing_training_phase_aborts_with_partial_record(short_scenario, small_params, rng):
    env = SearchEnvironment(short_scenario)
    env.reset(0)
    record = RunRecord.for_env(env, "rl", 0)

    def broken(params, z, gen):
        raise RuntimeError("boom")

    with pytest.raises(RunAbortedError) as info:
        online_loop(env, small_params, np.zeros(0), TrainerConfig(horizon=2), rng, ExperienceMemory(), record,
                    broken, 1.0)
    assert info.value.record is record
    assert record.status == STATUS_FAILED
    assert record.slots == 2
    assert "boom" in record.error


def test_non_finite_update_is_skipped(short_scenario, small_params, rng):
    env = SearchEnvironment(short_scenario)
    env.reset(0)
    record = RunRecord.for_env(env, "rl", 0)

    def diverging(params, z, gen):
        raise NonFiniteGradientError("diverged")

    params, _ = online_loop(env, small_params, np.zeros(0), TrainerConfig(horizon=2), rng, ExperienceMemory(),
                            record, diverging, 1.0)
    assert record.status == STATUS_OK
    assert record.slots == 20
    assert params is small_params


def test_train_episodes_persists_memory_across_episodes(short_scenario):
    params = PolicyParams.initialize(PolicyArch(window=2, hidden=4, dense=4, latent=0), 0)
    cfg = TrainerConfig(horizon=3, batch_size=4, xi=0.3)
    _, records, memory = train_episodes(SearchEnvironment(short_scenario), params, cfg, seed=1, episodes=3)
    assert len(records) == 3
    assert len(memory) == sum(r.slots for r in records)
    assert len({r.seed for r in records}) == 3


def test_trainer_config_validation():
    with pytest.raises(ValueError):
        TrainerConfig(xi=1.5)
    with pytest.raises(ValueError):
        TrainerConfig(return_mode="episode")


def test_zero_training_probability_freezes_the_policy(short_scenario, small_params):
    cfg = TrainerConfig(horizon=4, batch_size=4, xi=0.0, alpha_rl=0.1)
    updated, record = run_online(SearchEnvironment(short_scenario), small_params, cfg, seed=2)
    assert record.slots == 20
    np.testing.assert_array_equal(updated.vector, small_params.vector)
