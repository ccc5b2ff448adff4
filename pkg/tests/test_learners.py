"""Tests for the online learners."""
import numpy as np
import pytest
from pydantic import ValidationError

from ucwhittle.core.kernel import RewardTable, TransitionKernel
from ucwhittle.core.solver import solve_penalized_mdp
from ucwhittle.domains.generators import generate_wide
from ucwhittle.harness.experiment import run_learner
from ucwhittle.harness.simulator import RmabSimulator
from ucwhittle.learners import LEARNERS, WIQL, ActionSet, EpisodePlan, Oracle, create_learner
from ucwhittle.learning.confidence import ConfidenceRegion, Transition
from ucwhittle.models import ExperimentConfig, LearnerConfig
from ucwhittle.planning.whittle import search_interval


def small_config(**overrides):
    values = dict(num_arms=4, budget=2, horizon=5, episodes=3, seeds=[0], check_optimism=False)
    values.update(overrides)
    return ExperimentConfig(**values)


def run(name, instance, config, seed=0, **kwargs):
    learner = create_learner(
        name, instance.rewards, instance.num_arms, instance.budget, config.learner_config(), seed,
        kernels=instance.kernels, **kwargs,
    )
    simulator = RmabSimulator(instance, seed, config.episodes, config.horizon)
    return learner, run_learner(learner, instance, simulator, config, seed, record_actions=True)


class TestActionSet:
    """Test cases for action sets."""

    def test_budget_enforced(self):
        """More pulls than budget are refused."""
        with pytest.raises(ValidationError):
            ActionSet(pulled=frozenset({0, 1, 2}), budget=2, num_arms=4)
        with pytest.raises(ValidationError):
            ActionSet(pulled=frozenset({4}), budget=2, num_arms=4)

    def test_as_array(self):
        """Pulled arms become ones."""
        actions = ActionSet(pulled=frozenset({1, 3}), budget=2, num_arms=4)
        np.testing.assert_array_equal(actions.as_array(), [0, 1, 0, 1])


class TestLearnerInterface:
    """Test cases shared by every learner."""

    def setup_method(self):
        """Set up test cases."""
        self.instance = generate_wide(4, 3, budget=2)
        self.config = small_config()

    @pytest.mark.parametrize("name", sorted(LEARNERS))
    def test_budget_and_determinism(self, name):
        """Every step respects the budget, and reruns act identically."""
        _, first = run(name, self.instance, self.config)
        _, second = run(name, self.instance, self.config)
        assert first.actions == second.actions
        assert first.episode_rewards == second.episode_rewards
        for episode in first.actions:
            assert len(episode) == self.config.horizon
            for pulled in episode:
                assert len(pulled) <= self.instance.budget

    @pytest.mark.parametrize("name", ["ucw-value", "ucw-penalty", "extreme", "random", "wiql"])
    def test_initial_penalty_is_uniform_draw(self, name):
        """The starting penalty is drawn from [0, 1]."""
        learner = create_learner(name, self.instance.rewards, 4, 2, seed=5)
        assert 0.0 <= learner.state.current_penalty <= 1.0

    def test_act_before_plan(self):
        """Acting needs an episode plan."""
        learner = create_learner("random", self.instance.rewards, 4, 2)
        with pytest.raises(RuntimeError):
            learner.act([0, 0, 0, 0])

    def test_rejects_bad_states(self):
        """States must be in range with one per arm."""
        learner = create_learner("random", self.instance.rewards, 4, 2)
        with pytest.raises(ValueError):
            learner.begin_episode([0, 0, 0], 1)
        with pytest.raises(ValueError):
            learner.begin_episode([0, 0, 0, 2], 1)
        with pytest.raises(ValueError):
            learner.begin_episode([0, 0, 0, 0], 0)

    def test_random_full_budget(self):
        """Random with K = N pulls every arm."""
        learner = create_learner("random", self.instance.rewards, 4, 4)
        learner.begin_episode([0, 1, 0, 1], 1)
        assert learner.act([0, 1, 0, 1]).pulled == frozenset(range(4))

    def test_observe_records_counts(self):
        """Observations land in the transition counts."""
        learner = create_learner("ucw-value", self.instance.rewards, 4, 2)
        learner.observe([Transition(2, 0, 1, 1)], [0.0])
        assert learner.state.counts.counts[2, 0, 1, 1] == 1
        learner.observe([], [])
        assert learner.state.counts.counts.sum() == 1
        with pytest.raises(ValueError):
            learner.observe([Transition(0, 0, 1, 1)], [0.0, 1.0])

    def test_factory_errors(self):
        """Unknown names and kernel-less oracles are refused."""
        with pytest.raises(ValueError):
            create_learner("thompson", self.instance.rewards, 4, 2)
        with pytest.raises(ValueError):
            create_learner("oracle", self.instance.rewards, 4, 2)
        with pytest.raises(ValueError):
            create_learner("random", self.instance.rewards, 4, 5)


class TestPenaltyUpdate:
    """Test cases for the K-th-index penalty rule."""

    def test_fixture_penalty(self, fixture_table, binary_rewards):
        """K = 3 on the reference indices moves lambda to 0.28."""
        learner = create_learner("ucw-value", binary_rewards, 8, 3)
        learner.plan = EpisodePlan(episode=1, initial_states=np.zeros(8, dtype=int), penalty=0.0, table=fixture_table)
        learner.end_episode()
        assert learner.state.current_penalty == pytest.approx(0.28)

    def test_full_budget_takes_smallest(self, fixture_table, binary_rewards):
        """K = N moves lambda to the smallest index."""
        learner = create_learner("extreme", binary_rewards, 8, 8)
        learner.plan = EpisodePlan(episode=1, initial_states=np.zeros(8, dtype=int), penalty=0.0, table=fixture_table)
        learner.end_episode()
        assert learner.state.current_penalty == pytest.approx(0.0)

    def test_fixture_selection(self, fixture_table, binary_rewards):
        """An index learner pulls the three largest reference indices."""
        learner = create_learner("ucw-penalty", binary_rewards, 8, 3)
        learner.plan = EpisodePlan(episode=1, initial_states=np.zeros(8, dtype=int), penalty=0.0, table=fixture_table)
        assert learner.act(np.zeros(8, dtype=int)).pulled == frozenset({0, 1, 2})

    def test_penalty_stays_in_interval(self):
        """Learned penalties stay inside the index search interval."""
        instance = generate_wide(4, 8, budget=2)
        config = small_config()
        lower, upper = search_interval(instance.rewards, config.gamma)
        for name in ("ucw-value", "ucw-penalty", "extreme"):
            learner, _ = run(name, instance, config)
            assert lower <= learner.state.current_penalty <= upper

    def test_penalty_settles_under_fixed_indices(self):
        """With fixed indices lambda stops moving after the first episode."""
        instance = generate_wide(4, 9, budget=2)
        region = ConfidenceRegion.point(instance.kernels)
        learner = create_learner("ucw-value", instance.rewards, 4, 2, pinned_region=region)
        penalties = []
        for t in range(1, 4):
            learner.begin_episode(instance.initial_states, t)
            learner.end_episode()
            penalties.append(learner.state.current_penalty)
        assert penalties[0] == penalties[1] == penalties[2]


class TestUCWhittle:
    """Test cases for the confidence-region learners."""

    def test_first_episode_is_fully_optimistic(self, small_instance):
        """With no data every optimistic row moves to the good state."""
        learner = create_learner("ucw-value", small_instance.rewards, 4, 2)
        plan = learner.begin_episode(small_instance.initial_states, 1)
        for kernel in plan.kernels:
            np.testing.assert_allclose(kernel.probs[:, :, 1], 1.0)
        assert plan.optimistic_values.shape == (4, 2)

    def test_point_region_reproduces_oracle(self):
        """Planning on a zero-radius region at P* acts exactly like the oracle."""
        config = small_config(num_arms=6, budget=2, horizon=10, episodes=3)
        for seed in range(10):
            instance = generate_wide(6, seed, budget=2)
            _, oracle = run("oracle", instance, config, seed)
            _, pinned = run("ucw-value", instance, config, seed, pinned_region=ConfidenceRegion.point(instance.kernels))
            assert pinned.actions == oracle.actions

    def test_parallel_planning_matches_serial(self, small_instance):
        """Per-arm threads do not change the plan."""
        serial = create_learner("ucw-value", small_instance.rewards, 4, 2, seed=1)
        threaded = create_learner("ucw-value", small_instance.rewards, 4, 2, LearnerConfig(planning_workers=3), seed=1)
        a = serial.begin_episode(small_instance.initial_states, 2)
        b = threaded.begin_episode(small_instance.initial_states, 2)
        np.testing.assert_array_equal(a.optimistic_values, b.optimistic_values)

    @pytest.mark.parametrize("name", ["ucw-value", "ucw-penalty"])
    def test_equal_indices_go_to_least_pulled_arms(self, small_instance, name):
        """Among equal optimistic indices the arms pulled least in their state win."""
        learner = create_learner(name, small_instance.rewards, 4, 2)
        learner.begin_episode([0, 0, 0, 0], 1)
        learner.observe([Transition(0, 0, 1, 1), Transition(1, 0, 1, 0)], [0.0, 0.0])
        assert learner.act([0, 0, 0, 0]).pulled == frozenset({2, 3})

    @pytest.mark.parametrize("name", ["ucw-value", "extreme"])
    def test_plain_ties_go_to_lowest_ids(self, small_instance, name):
        """Without the visit rule, and for ExtremeWhittle, ties fall to the lowest ids."""
        learner = create_learner(name, small_instance.rewards, 4, 2, LearnerConfig(visit_ties=False))
        learner.begin_episode([0, 0, 0, 0], 1)
        learner.observe([Transition(0, 0, 1, 1), Transition(1, 0, 1, 0)], [0.0, 0.0])
        assert learner.act([0, 0, 0, 0]).pulled == frozenset({0, 1})


class TestWIQL:
    """Test cases for Whittle-index Q-learning."""

    def setup_method(self):
        """Set up test cases."""
        self.rewards = RewardTable.binary()

    def test_first_update(self):
        """A first visit with reward 1 from zero Q sets Q to 1."""
        learner = WIQL(self.rewards, 1, 1)
        learner.begin_episode([0], 1)
        learner.observe([Transition(0, 0, 1, 1)], [1.0])
        assert learner.state.q_table[0, 0, 1] == pytest.approx(1.0)
        assert learner.state.visits[0, 0, 1] == 1

    def test_greedy_top_k(self):
        """With zero exploration WIQL pulls the largest Q-gaps."""
        learner = WIQL(self.rewards, 3, 2, LearnerConfig(wiql_epsilon=0.0))
        q = np.zeros((3, 2, 2))
        q[:, 0, 1] = [0.1, 0.5, 0.3]
        learner.state.q_table = q
        learner.begin_episode([0, 0, 0], 1)
        for _ in range(5):
            assert learner.act([0, 0, 0]).pulled == frozenset({1, 2})

    def test_epsilon_decays(self):
        """Exploration falls as N / (N + steps)."""
        learner = WIQL(self.rewards, 4, 1)
        learner.begin_episode([0] * 4, 1)
        assert learner.epsilon() == 1.0
        for _ in range(4):
            learner.act([0] * 4)
        assert learner.epsilon() == pytest.approx(0.5)

    def test_visits_match_counts(self):
        """Every observed transition is one Q visit."""
        instance = generate_wide(6, 21, budget=2)
        config = small_config(num_arms=6, budget=2, horizon=10, episodes=4)
        learner, _ = run("wiql", instance, config)
        assert learner.state.visits.sum() == 6 * 10 * 4
        np.testing.assert_array_equal(learner.state.visits, learner.state.counts.counts.sum(axis=3))
        assert learner.q_gaps().indices.shape == (6, 2)

    def test_q_gap_sign_matches_exact_gap(self):
        """After a thousand updates on a fixed arm the Q-gaps agree in sign with the solved gaps."""
        kernel = TransitionKernel.from_good_probs(0.1, 0.9, 0.3, 0.95)
        learner = WIQL(self.rewards, 1, 1)
        learner.begin_episode([0], 1)
        rng = np.random.default_rng(31)
        s = 0
        for _ in range(1000):
            a = int(rng.integers(2))
            s_next = int(rng.random() < kernel.probs[s, a, 1])
            learner.observe([Transition(0, s, a, s_next)], [float(s)])
            s = s_next
        exact = solve_penalized_mdp(kernel, self.rewards, 0.0, learner.config.gamma)
        learned = learner.q_gaps().indices[0]
        for state in (0, 1):
            assert exact.gap(state) > 0.0
            assert np.sign(learned[state]) == np.sign(exact.gap(state))


class TestOracle:
    """Test cases for the full-information oracle."""

    def test_beats_random(self):
        """Mean oracle reward is at least random's over thirty seeds."""
        config = small_config(num_arms=8, budget=3, horizon=20, episodes=3)
        oracle_rewards, random_rewards = [], []
        for seed in range(30):
            instance = generate_wide(8, seed, budget=3)
            oracle_rewards.extend(run("oracle", instance, config, seed)[1].episode_rewards)
            random_rewards.extend(run("random", instance, config, seed)[1].episode_rewards)
        assert np.mean(oracle_rewards) >= np.mean(random_rewards)

    def test_table_shared_across_episodes(self, small_instance, binary_rewards):
        """The oracle plans on one cached table and never moves lambda."""
        oracle = Oracle(binary_rewards, 4, 2, kernels=small_instance.kernels)
        first = oracle.begin_episode(small_instance.initial_states, 1)
        penalty = oracle.state.current_penalty
        oracle.end_episode()
        second = oracle.begin_episode(small_instance.initial_states, 2)
        assert first.table is second.table
        assert oracle.state.current_penalty == penalty
