import itertools
import json

import numpy as np
import pytest

from infodisorder.abm import Simulation, advance
from infodisorder.config import DQNConfig, SimConfig
from infodisorder.harness import simulate
from infodisorder.metrics import Observation
from infodisorder.superagent import (
    Action,
    Adam,
    CheckpointError,
    EpisodeFlags,
    QNetwork,
    ReplayBuffer,
    Transition,
    action_result,
    action_weight,
    checkpoint_dict,
    constant_policy,
    forward,
    load_checkpoint,
    loss_and_grads,
    reward,
    run_episode,
    save_checkpoint,
    select_action,
    td_targets,
    train,
    train_step,
)
from oracles import numerical_grads, rel_error, table_reward

OBS = Observation(0.3, 0.4, 0.5)


def net_with_output_bias(q) -> QNetwork:
    net = QNetwork.zeros()
    net.biases[-1][:] = q
    return net


def random_batch(rng, size, terminal_every=0):
    out = []
    for i in range(size):
        s = Observation(*rng.uniform(size=3))
        s2 = Observation(*rng.uniform(size=3))
        term = bool(terminal_every) and i % terminal_every == 0
        out.append(Transition(s, Action(int(rng.integers(4))), float(rng.normal()), s2, term))
    return out


class TestForward:
    def test_zero_net(self):
        assert np.array_equal(forward(QNetwork.zeros(), OBS), np.zeros(4))

    def test_zero_input_zero_bias(self, rng):
        net = QNetwork.initialize(rng)
        for b in net.biases:
            b[:] = 0
        assert np.array_equal(forward(net, Observation(0, 0, 0)), np.zeros(4))

    def test_hand_computed_chain(self):
        net = QNetwork.zeros()
        # unit path: input 1 -> hidden1 unit 0 -> hidden2 unit 0 -> output 2
        net.weights[0][0, 1] = 2.0
        net.biases[0][0] = 0.5
        net.weights[1][0, 0] = 3.0
        net.biases[1][0] = -1.0
        net.weights[2][2, 0] = 0.5
        net.biases[2][:] = [0.0, 0.0, 0.25, -1.0]
        obs = Observation(0.9, 0.4, 0.1)
        h1 = max(2.0 * 0.4 + 0.5, 0)
        h2 = max(3.0 * h1 - 1.0, 0)
        expected = [0.0, 0.0, 0.5 * h2 + 0.25, -1.0]
        assert np.allclose(forward(net, obs), expected)

    def test_relu_cuts_negative_path(self):
        net = QNetwork.zeros()
        net.weights[0][0, 0] = -1.0
        net.weights[1][0, 0] = 1.0
        net.weights[2][0, 0] = 1.0
        assert forward(net, Observation(0.5, 0, 0))[0] == 0.0

    def test_output_shape_and_batch(self, rng):
        net = QNetwork.initialize(rng)
        batch = rng.uniform(size=(7, 3))
        q = net(batch)
        assert q.shape == (7, 4)
        assert np.allclose(q[3], forward(net, Observation(*batch[3])))

    def test_argmax_invariant_under_output_scaling(self, rng):
        for _ in range(50):
            net = QNetwork.initialize(rng)
            obs = Observation(*rng.uniform(size=3))
            q = forward(net, obs)
            c = float(rng.uniform(0.1, 10))
            net.weights[-1] *= c
            net.biases[-1] *= c
            q2 = forward(net, obs)
            assert np.allclose(q2, c * q)
            assert select_action(net, obs, 0.0, rng) == Action(int(np.argmax(q)))

    def test_init_bounds(self, rng):
        net = QNetwork.initialize(rng)
        for w in net.weights:
            assert np.abs(w).max() <= 1 / np.sqrt(w.shape[1])

    def test_layer_sizes(self, rng):
        assert QNetwork.initialize(rng).layer_sizes == (3, 24, 12, 4)


class TestRewardParts:
    @pytest.mark.parametrize("gom, mia, aw", [(0.5, 0.5, 4.0), (1, 1, 2.0), (0, 0, 200.0)])
    def test_action_weight(self, gom, mia, aw):
        assert action_weight(gom, mia) == pytest.approx(aw)

    @pytest.mark.parametrize("now, prev, ar", [(0.3, 0.4, -0.1), (0.4, 0.4, 0.0), (0.5, 0.3, 0.2)])
    def test_action_result(self, now, prev, ar):
        assert action_result(now, prev) == pytest.approx(ar)

    def test_reward_examples(self):
        fresh = EpisodeFlags()
        assert reward(-0.1, 4.0, Action.WARNING, fresh, 0.4) == pytest.approx(3.1)
        assert reward(0.2, 4.0, Action.WARNING, fresh, 0.4) == pytest.approx(1.8)
        done = EpisodeFlags(warning_done=True)
        assert reward(-0.1, 4.0, Action.WARNING, done, 0.6) == 0.0
        assert reward(-0.1, 4.0, Action.WARNING, done, 0.3) == 1.0

    def test_reiterate_never_penalised(self):
        flags = EpisodeFlags(True, True)
        assert reward(0.0, 2.0, Action.REITERATING, flags, 0.9) == 2.0

    def test_flags_monotone(self):
        flags = EpisodeFlags()
        flags.mark(Action.FORCING)
        for a in Action:
            flags.mark(a)
        assert flags.warning_done and flags.forcing_done

    def test_matches_table_oracle(self):
        ars = np.linspace(-0.5, 0.5, 5)
        aws = [2.0, 4.0, 200.0, 7.5, 3.3]
        gcs = [0.0, 0.5, 0.51, 1.0]
        grid = list(itertools.product(ars, aws, gcs, Action, [False, True], [False, True]))
        for ar, aw, gc, action, wd, fd in grid:
            got = reward(ar, aw, action, EpisodeFlags(wd, fd), gc)
            assert got == table_reward(ar, aw, int(action), wd, fd, gc)


class TestSelectAction:
    def test_greedy(self, rng):
        assert select_action(net_with_output_bias([1, 5, 2, 0]), OBS, 0.0, rng) == Action.REITERATING

    def test_tie_goes_lowest(self, rng):
        assert select_action(net_with_output_bias([3, 3, 1, 0]), OBS, 0.0, rng) == Action.WARNING

    def test_uniform_exploration(self, rng):
        net = net_with_output_bias([0, 0, 0, 9])
        counts = np.bincount([select_action(net, OBS, 1.0, rng) for _ in range(10_000)], minlength=4)
        assert np.all(np.abs(counts / 10_000 - 0.25) <= 0.02)

    def test_rejects_bad_epsilon(self, rng):
        with pytest.raises(ValueError):
            select_action(QNetwork.zeros(), OBS, 1.5, rng)


class TestReplay:
    def test_ring(self):
        buf = ReplayBuffer(5)
        ts = [Transition(OBS, Action.OBSERVING, float(i), OBS, False) for i in range(8)]
        for t in ts:
            buf.push(t)
        assert len(buf) == 5
        assert sorted(t.reward for t in buf) == [3.0, 4.0, 5.0, 6.0, 7.0]

    def test_sample_distinct(self, rng):
        buf = ReplayBuffer(50)
        for i in range(50):
            buf.push(Transition(OBS, Action.WARNING, float(i), OBS, False))
        sample = buf.sample(50, rng)
        assert len({t.reward for t in sample}) == 50
        with pytest.raises(ValueError):
            buf.sample(51, rng)


class TestTrainStep:
    def test_terminal_target_is_reward(self, rng):
        target = QNetwork.initialize(rng)
        batch = random_batch(rng, 6, terminal_every=1)
        assert np.array_equal(td_targets(target, batch, 0.95), [t.reward for t in batch])

    def test_non_terminal_target(self, rng):
        target = QNetwork.initialize(rng)
        batch = random_batch(rng, 4)
        expected = [t.reward + 0.9 * forward(target, t.next_state).max() for t in batch]
        assert np.allclose(td_targets(target, batch, 0.9), expected)

    def test_zero_loss_leaves_parameters(self, rng):
        net = net_with_output_bias([0.5, -1.0, 2.0, 0.0])
        batch = [Transition(Observation(*rng.uniform(size=3)), Action(a), float(q), OBS, True)
                 for a, q in enumerate([0.5, -1.0, 2.0, 0.0])]
        before = [p.copy() for p in net.params]
        loss = train_step(net, net.copy(), batch, 0.95, Adam(net.params))
        assert loss == 0.0
        for a, b in zip(before, net.params):
            assert np.array_equal(a, b)

    def test_rejects_empty_batch(self, rng):
        net = QNetwork.initialize(rng)
        with pytest.raises(ValueError):
            train_step(net, net.copy(), [], 0.9, Adam(net.params))

    def test_gradient_against_finite_differences(self, rng):
        for _ in range(10):
            net = QNetwork.initialize(rng)
            states = rng.uniform(size=(5, 3))
            actions = rng.integers(0, 4, size=5)
            targets = rng.normal(size=5)
            _, grads = loss_and_grads(net, states, actions, targets)
            numeric = numerical_grads(lambda: loss_and_grads(net, states, actions, targets)[0], net.params)
            for g, n in zip(grads, numeric):
                assert rel_error(g, n) < 1e-4

    def test_loss_decreases_on_fixed_batch(self, rng):
        net = QNetwork.initialize(rng)
        target = net.copy()
        batch = random_batch(rng, 32, terminal_every=1)
        opt = Adam(net.params, lr=1e-2)
        first = train_step(net, target, batch, 0.95, opt)
        for _ in range(200):
            last = train_step(net, target, batch, 0.95, opt)
        assert last < first


class TestEpisode:
    @pytest.mark.parametrize("delay, decisions", [(5, 20), (4, 25), (2, 50), (100, 1), (101, 0)])
    def test_decision_count(self, delay, decisions):
        result = run_episode(SimConfig(seed=2, sa_delay=delay), constant_policy(Action.OBSERVING))
        assert len(result.actions) == decisions
        assert len(result.record.gc_trace) == 101
        if decisions:
            assert result.transitions[-1].terminal
            assert not any(t.terminal for t in result.transitions[:-1])

    def test_observing_equals_baseline(self):
        for seed in range(20):
            for delay in (2, 4, 5):
                cfg = SimConfig(seed=seed, p_n=(seed % 11) / 10, sa_delay=delay)
                sa = run_episode(cfg, constant_policy(Action.OBSERVING)).record
                base = simulate(cfg)
                assert sa.gc_trace == base.gc_trace

    def test_observing_equals_baseline_state(self):
        cfg = SimConfig(seed=9, sa_delay=2)
        ref = Simulation.from_config(cfg)
        advance(ref, 100)
        ep = run_episode(cfg, constant_policy(Action.OBSERVING))
        assert ep.record.final_gc == ref.is_a_active.mean()

    def test_forcing_lowers_cascade(self):
        finals = [run_episode(SimConfig(seed=s, sa_delay=2), constant_policy(Action.FORCING)).record.final_gc
                  for s in range(20)]
        base = [simulate(SimConfig(seed=s)).final_gc for s in range(20)]
        assert np.mean(finals) < np.mean(base)

    def test_repeat_penalty_applied(self):
        ep = run_episode(SimConfig(seed=4, sa_delay=5), constant_policy(Action.WARNING))
        for t in ep.transitions[1:]:
            assert t.reward == (0.0 if t.next_state.gc > 0.5 else 1.0)

    def test_agent_needs_rng(self):
        with pytest.raises(ValueError):
            run_episode(SimConfig())


SMALL_DQN = DQNConfig(batch_size=16, replay_capacity=200, target_sync_steps=10, episodes=3)


class TestTraining:
    def test_checkpoint_round_trip(self, tmp_path):
        agent = train(SimConfig(total_ticks=20), 1, seed=5, dqn=SMALL_DQN)
        path = save_checkpoint(agent, tmp_path / "a.json")
        loaded = load_checkpoint(path)
        assert checkpoint_dict(loaded) == checkpoint_dict(agent)
        for a, b in zip(loaded.net.params, agent.net.params):
            assert np.array_equal(a, b)

    def test_deterministic(self, tmp_path):
        a = train(SimConfig(total_ticks=30), 3, seed=11, dqn=SMALL_DQN, p_n_values=[0.2, 0.8])
        b = train(SimConfig(total_ticks=30), 3, seed=11, dqn=SMALL_DQN, p_n_values=[0.2, 0.8])
        pa = save_checkpoint(a, tmp_path / "a.json")
        pb = save_checkpoint(b, tmp_path / "b.json")
        assert pa.read_bytes() == pb.read_bytes()
        assert a.train_steps > 0

    def test_epsilon_schedule(self):
        agent = train(SimConfig(total_ticks=10), 3, seed=0, dqn=SMALL_DQN)
        assert agent.epsilon == pytest.approx(0.995 ** 3)
        assert agent.episode == 3

    def test_parameters_stay_finite(self):
        agent = train(SimConfig(total_ticks=40, sa_delay=2), 3, seed=1, dqn=SMALL_DQN)
        assert agent.net.all_finite() and agent.target_net.all_finite()

    def test_architecture_mismatch(self, tmp_path):
        agent = train(SimConfig(total_ticks=10), 1, seed=0, dqn=SMALL_DQN)
        data = checkpoint_dict(agent)
        data["layer_sizes"] = [3, 16, 4]
        path = tmp_path / "bad.json"
        path.write_text(json.dumps(data))
        with pytest.raises(CheckpointError, match="architecture"):
            load_checkpoint(path)

    def test_missing_checkpoint_names_path(self, tmp_path):
        with pytest.raises(CheckpointError, match="missing.ckpt"):
            load_checkpoint(tmp_path / "missing.ckpt")
