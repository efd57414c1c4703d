import math

import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from oracles import critic_scalar, lstm_scalar
from vransplit import benchmark
from vransplit.errors import ShapeMismatch
from vransplit.nn import autodiff as ad
from vransplit.nn.layers import (GATES, AttentionParams, LstmCellParams, ParamSet, attention, critic_forward,
                                 init_critic, init_policy, lstm_step, min_max, policy_forward, raw_features,
                                 scenario_features)


def policy(seed=0, hidden=8, embed=6):
    return init_policy(np.random.default_rng(seed), hidden, embed)


def feats(n=4, b=1, seed=1):
    return np.random.default_rng(seed).random((b, n, 5))


def zero_cell(hidden, inp):
    ps = ParamSet({f"l.W_{g}": ad.tensor(np.zeros((hidden, hidden + inp))) for g in GATES})
    ps.update({f"l.b_{g}": ad.tensor(np.zeros(hidden)) for g in GATES})
    return ps


class TestLstm:
    def test_zero_weights(self):
        ps = ParamSet({f"l.W_{g}": ad.tensor(np.zeros((2, 5))) for g in GATES})
        ps.update({f"l.b_{g}": ad.tensor(np.zeros(2)) for g in GATES})
        h, c = lstm_step(LstmCellParams.view(ps, "l"), np.zeros(2), np.ones(2), np.ones(3))
        # f = r = o = 0.5, candidate 0
        np.testing.assert_allclose(c.value, 0.5)
        np.testing.assert_allclose(h.value, 0.5 * math.tanh(0.5))

    def test_zero_network_from_rest(self):
        ps = zero_cell(2, 3)
        h, c = lstm_step(LstmCellParams.view(ps, "l"), np.zeros(2), np.zeros(2), np.array([5.0, -1.0, 2.0]))
        np.testing.assert_array_equal(c.value, 0.0)
        np.testing.assert_array_equal(h.value, 0.0)

    def test_saturated_forget_gate_keeps_cell(self):
        ps = zero_cell(2, 3)
        ps["l.b_f"].value[:] = 50.0
        c_prev = np.array([0.7, -1.3])
        _, c = lstm_step(LstmCellParams.view(ps, "l"), np.zeros(2), c_prev, np.ones(3))
        np.testing.assert_allclose(c.value, c_prev, rtol=1e-12)

    @given(st.integers(0, 10_000))
    def test_matches_scalar(self, seed):
        rng = np.random.default_rng(seed)
        W = {g: rng.normal(size=(3, 5)) for g in GATES}
        b = {g: rng.normal(size=3) for g in GATES}
        ps = ParamSet({f"l.W_{g}": ad.tensor(W[g]) for g in GATES})
        ps.update({f"l.b_{g}": ad.tensor(b[g]) for g in GATES})
        h0, c0, s = rng.normal(size=3), rng.normal(size=3), rng.normal(size=2)
        h, c = lstm_step(LstmCellParams.view(ps, "l"), h0, c0, s)
        hw, cw = lstm_scalar({g: W[g].tolist() for g in GATES}, {g: b[g].tolist() for g in GATES}, h0, c0, s)
        np.testing.assert_allclose(h.value, hw, rtol=1e-12)
        np.testing.assert_allclose(c.value, cw, rtol=1e-12)

    def test_shape_check(self):
        ps = policy()
        with pytest.raises(ShapeMismatch):
            lstm_step(LstmCellParams.view(ps, "enc"), np.zeros(8), np.zeros(8), np.zeros(5))


class TestAttention:
    def test_identical_states_give_uniform_weights(self):
        ps = policy()
        states = np.tile(np.random.default_rng(0).normal(size=8), (1, 5, 1))
        ctx, w = attention(np.ones((1, 8)), states, AttentionParams.view(ps))
        np.testing.assert_allclose(w.value, 0.2)
        np.testing.assert_allclose(ctx.value[0], states[0, 0])

    def test_weights_are_distribution(self):
        ps = policy()
        rng = np.random.default_rng(2)
        _, w = attention(rng.normal(size=(3, 8)), rng.normal(size=(3, 6, 8)), AttentionParams.view(ps), T=0.3)
        assert np.all(w.value >= 0)
        assert np.max(np.abs(w.value.sum(axis=1) - 1.0)) <= 1e-12

    def test_single_state(self):
        states = np.random.default_rng(1).normal(size=(2, 1, 8))
        ctx, w = attention(np.ones((2, 8)), states, AttentionParams.view(policy()))
        np.testing.assert_array_equal(w.value, 1.0)
        np.testing.assert_allclose(ctx.value, states[:, 0])

    def test_hot_temperature_is_uniform(self):
        rng = np.random.default_rng(3)
        _, w = attention(rng.normal(size=(1, 8)), rng.normal(size=(1, 4, 8)), AttentionParams.view(policy()),
                         T=1e6)
        assert np.max(np.abs(w.value - 0.25)) < 1e-6

    def test_bad_temperature(self):
        with pytest.raises(ValueError):
            attention(np.ones((1, 8)), np.ones((1, 2, 8)), AttentionParams.view(policy()), T=0.0)


class TestPolicy:
    def test_zero_head_is_uniform(self):
        ps = policy()
        ps["out.W"].value[:] = 0
        ps["out.b"].value[:] = 0
        out = policy_forward(ps, feats(5), "greedy")
        np.testing.assert_allclose(out.probs, 0.25)
        assert out.log_prob.value[0] == pytest.approx(5 * math.log(0.25))

    def test_sampling_frequencies(self):
        ps = policy(seed=4)
        ps["out.W"].value[:] = 0
        ps["out.b"].value[:] = [0.0, 1.0, -0.5, 0.3]
        draws = 100_000
        with ad.no_grad():
            out = policy_forward(ps, np.broadcast_to(feats(3), (draws, 3, 5)), "sample",
                                 rng=np.random.default_rng(9))
        p = ad.softmax_values(ps["out.b"].value[None])[0]
        for n in range(3):
            counts = np.bincount(out.actions[:, n], minlength=4)
            sigma = np.sqrt(draws * p * (1 - p))
            assert np.all(np.abs(counts - draws * p) <= 3 * sigma)

    def test_forced_log_prob_matches_probs(self):
        ps = policy(seed=2)
        f = feats(6, b=4)
        out = policy_forward(ps, f, "sample", rng=np.random.default_rng(0))
        again = policy_forward(ps, f, "forced", actions=out.actions)
        np.testing.assert_allclose(again.log_prob.value, out.log_prob.value)
        picked = np.take_along_axis(out.probs, out.actions[..., None], axis=2)[..., 0]
        np.testing.assert_allclose(np.log(picked).sum(axis=1), out.log_prob.value)

    def test_greedy_ignores_temperature(self):
        ps = policy(seed=5)
        f = feats(7, b=3)
        base = policy_forward(ps, f, "greedy", T=1.0).actions
        for T in (1e-3, 0.5, 15.0, 1e3):
            np.testing.assert_array_equal(policy_forward(ps, f, "greedy", T=T).actions, base)

    def test_temperature_flattens(self):
        ps = policy(seed=5)
        p1 = policy_forward(ps, feats(3), "greedy", T=1.0).probs
        p2 = policy_forward(ps, feats(3), "greedy", T=100.0).probs
        assert np.all(p2.max(axis=2) <= p1.max(axis=2) + 1e-12)

    def test_gradient_reaches_every_parameter(self):
        ps = policy(seed=1)
        out = policy_forward(ps, feats(4, b=2), "sample", rng=np.random.default_rng(1))
        ad.total(out.log_prob).backward()
        assert all(g is not None and np.any(g != 0) for g in ps.grads().values())

    def test_bad_inputs(self):
        ps = policy()
        with pytest.raises(ShapeMismatch):
            policy_forward(ps, np.zeros((1, 3, 4)))
        with pytest.raises(ValueError):
            policy_forward(ps, feats(), "sample")
        with pytest.raises(ValueError):
            policy_forward(ps, feats(), T=0.0)


class TestCritic:
    def test_zero_params(self):
        ps = init_critic(np.random.default_rng(0), 4, 3)
        for t in ps.values():
            t.value[:] = 0
        np.testing.assert_array_equal(critic_forward(ps, feats(5, b=3)).value, 0.0)

    @pytest.mark.parametrize("seed", range(3))
    def test_matches_scalar(self, seed):
        ps = init_critic(np.random.default_rng(seed), 4, 3)
        f = feats(5, b=2, seed=seed)
        out = critic_forward(ps, f).value
        for k in range(2):
            assert out[k] == pytest.approx(critic_scalar(ps, f[k]), rel=1e-10, abs=1e-12)


class TestFeatures:
    def test_min_max(self):
        x = np.array([[1.0, 5.0], [3.0, 5.0], [2.0, 5.0]])
        np.testing.assert_allclose(min_max(x), [[0, 0], [1, 0], [0.5, 0]])

    def test_columns(self):
        sc = benchmark.toy6()
        raw = raw_features(sc)
        assert raw.shape == (6, 5)
        np.testing.assert_allclose(raw[:, 0], sc.traffic)
        np.testing.assert_allclose(raw[:, 1], [p.routing_cost for p in sc.paths])
        f = scenario_features(sc)
        assert f.min() >= 0 and f.max() <= 1
