"""LSTM encoder-decoder policy with additive attention, and the critic network.

Parameters live in flat ``{name: Tensor}`` dictionaries (:class:`ParamSet`) so
they can be checkpointed and handed to the optimizer by name. Shapes follow
the usual ``(out, in)`` convention, e.g. each LSTM gate matrix is
``H x (H + E)`` acting on ``[h_prev; s_n]``.
"""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from ..errors import ShapeMismatch
from ..model import N_SPLITS, Scenario
from . import autodiff as ad
from .autodiff import Tensor

N_FEATURES = 5
GATES = ("f", "r", "c", "o")


class ParamSet(dict):
    """Ordered ``name -> Tensor`` mapping of learnable parameters."""

    def arrays(self) -> dict:
        return {k: t.value for k, t in self.items()}

    def load_arrays(self, arrays: dict) -> None:
        for k, t in self.items():
            v = np.asarray(arrays[k], dtype=np.float64)
            if v.shape != t.shape:
                raise ShapeMismatch(f"{k}: expected {t.shape}, got {v.shape}")
            t.value = v.copy()

    def zero_grad(self) -> None:
        for t in self.values():
            t.grad = None

    def grads(self) -> dict:
        return {k: (t.grad if t.grad is not None else np.zeros_like(t.value)) for k, t in self.items()}

    def copy(self) -> "ParamSet":
        return ParamSet({k: Tensor(t.value.copy(), True, k) for k, t in self.items()})


def _uniform(rng, shape, fan_in):
    bound = 1.0 / np.sqrt(fan_in)
    return rng.uniform(-bound, bound, shape)


def _add_lstm(ps: ParamSet, prefix: str, hidden: int, inp: int, rng) -> None:
    for g in GATES:
        ps[f"{prefix}.W_{g}"] = Tensor(_uniform(rng, (hidden, hidden + inp), hidden + inp), True)
    for g in GATES:
        b = _uniform(rng, (hidden,), hidden + inp)
        if g == "f":
            b = b + 1.0
        ps[f"{prefix}.b_{g}"] = Tensor(b, True)


def _add_linear(ps: ParamSet, prefix: str, out: int, inp: int, rng, bias=True) -> None:
    ps[f"{prefix}.W"] = Tensor(_uniform(rng, (out, inp), inp), True)
    if bias:
        ps[f"{prefix}.b"] = Tensor(_uniform(rng, (out,), inp), True)


def _name_tensors(ps: ParamSet) -> ParamSet:
    for k, t in ps.items():
        t.name = k
    return ps


@dataclass
class LstmCellParams:
    W_f: Tensor
    W_r: Tensor
    W_c: Tensor
    W_o: Tensor
    b_f: Tensor
    b_r: Tensor
    b_c: Tensor
    b_o: Tensor

    @classmethod
    def view(cls, ps: ParamSet, prefix: str) -> "LstmCellParams":
        return cls(*(ps[f"{prefix}.W_{g}"] for g in GATES), *(ps[f"{prefix}.b_{g}"] for g in GATES))

    @property
    def hidden(self) -> int:
        return self.W_f.shape[0]

    @property
    def input_size(self) -> int:
        return self.W_f.shape[1] - self.W_f.shape[0]


def lstm_step(p: LstmCellParams, h_prev, c_prev, s):
    """One LSTM step; returns ``(h, c)``.

    forget f = sig(W_f [h; s] + b_f), input r = sig(W_r [h; s] + b_r),
    candidate = tanh(W_c [h; s] + b_c), c = f * c_prev + r * candidate,
    output o = sig(W_o [h; s] + b_o), h = o * tanh(c).
    """
    h_prev, c_prev, s = ad._wrap(h_prev), ad._wrap(c_prev), ad._wrap(s)
    H = p.hidden
    if h_prev.shape[-1] != H or c_prev.shape[-1] != H or s.shape[-1] != p.input_size:
        raise ShapeMismatch(
            f"lstm_step: h {h_prev.shape}, c {c_prev.shape}, s {s.shape} for hidden {H}, input {p.input_size}")
    hs = ad.concat([h_prev, s])
    f = ad.sigmoid(ad.linear(hs, p.W_f, p.b_f))
    r = ad.sigmoid(ad.linear(hs, p.W_r, p.b_r))
    cand = ad.tanh(ad.linear(hs, p.W_c, p.b_c))
    c = ad.add(ad.mul(f, c_prev), ad.mul(r, cand))
    o = ad.sigmoid(ad.linear(hs, p.W_o, p.b_o))
    h = ad.mul(o, ad.tanh(c))
    return h, c


@dataclass
class AttentionParams:
    v_a: Tensor
    w_1: Tensor
    w_2: Tensor

    @classmethod
    def view(cls, ps: ParamSet, prefix: str = "att") -> "AttentionParams":
        return cls(ps[f"{prefix}.v"], ps[f"{prefix}.w1"], ps[f"{prefix}.w2"])


def attention(h_t, encoder_states, params: AttentionParams, T: float = 1.0, keys=None):
    """Additive attention; returns ``(context, weights)``.

    ``encoder_states`` is ``(B, N, H)``. ``keys`` may carry a precomputed
    ``w_2 h_k`` projection to avoid recomputing it every decoder step.
    """
    if T <= 0:
        raise ValueError("temperature must be positive")
    h_t, encoder_states = ad._wrap(h_t), ad._wrap(encoder_states)
    if encoder_states.value.ndim != 3 or h_t.shape[-1] != encoder_states.shape[-1]:
        raise ShapeMismatch(f"attention: query {h_t.shape} vs states {encoder_states.shape}")
    if keys is None:
        keys = ad.linear(encoder_states, params.w_2)
    query = ad.linear(h_t, params.w_1)
    scores = ad.additive_scores(query, keys, params.v_a)
    weights = ad.softmax(scores, T)
    return ad.weighted_sum(weights, encoder_states), weights


# --------------------------------------------------------------------------- policy


def init_policy(rng: np.random.Generator, hidden: int = 32, embed: int = 32,
                n_features: int = N_FEATURES) -> ParamSet:
    ps = ParamSet()
    _add_linear(ps, "embed", embed, n_features, rng)
    _add_lstm(ps, "enc", hidden, embed, rng)
    _add_lstm(ps, "dec", hidden, embed + hidden, rng)
    ps["att.v"] = Tensor(_uniform(rng, (hidden,), hidden), True)
    ps["att.w1"] = Tensor(_uniform(rng, (hidden, hidden), hidden), True)
    ps["att.w2"] = Tensor(_uniform(rng, (hidden, hidden), hidden), True)
    ps["dec_embed"] = Tensor(rng.uniform(-1.0, 1.0, (N_SPLITS, embed)), True)
    ps["dec_start"] = Tensor(rng.uniform(-1.0, 1.0, (embed,)), True)
    # the output head also sees the BS embedding directly
    _add_linear(ps, "out", N_SPLITS, 2 * hidden + embed, rng)
    return _name_tensors(ps)


def policy_dims(ps: ParamSet) -> dict:
    return {"hidden": ps["enc.W_f"].shape[0], "embed": ps["embed.W"].shape[0],
            "n_features": ps["embed.W"].shape[1]}


@dataclass
class PolicyOutput:
    actions: np.ndarray  # (B, N) split per step
    log_prob: Tensor  # (B,)
    probs: np.ndarray  # (B, N, 4) per-step distributions


def _encode(ps: ParamSet, prefix: str, embed_prefix: str, feats: np.ndarray):
    B, N, _ = feats.shape
    cell = LstmCellParams.view(ps, prefix)
    s_all = ad.linear(feats, ps[f"{embed_prefix}.W"], ps[f"{embed_prefix}.b"])  # (B, N, E)
    h = ad.tensor(np.zeros((B, cell.hidden)))
    c = ad.tensor(np.zeros((B, cell.hidden)))
    states = []
    for n in range(N):
        s = _step_slice(s_all, n)
        h, c = lstm_step(cell, h, c, s)
        states.append(h)
    return states, h, c, s_all


def _step_slice(a: Tensor, n: int) -> Tensor:
    value = a.value[:, n, :]
    shape = a.shape

    def back(g):
        out = np.zeros(shape)
        out[:, n, :] = g
        return (out,)

    return ad._make(value, (a,), back)


def policy_forward(ps: ParamSet, features, mode: str = "greedy", T: float = 1.0,
                   rng: np.random.Generator | None = None, actions=None) -> PolicyOutput:
    """Decode one split per BS in presentation order.

    ``mode`` is ``"sample"`` (needs ``rng``), ``"greedy"`` (argmax, ties to the
    lowest split) or ``"forced"`` (score the given ``actions``). ``T`` is the
    softmax temperature of the output distribution.
    """
    if T <= 0:
        raise ValueError("temperature must be positive")
    feats = np.asarray(features, dtype=float)
    if feats.ndim == 2:
        feats = feats[None]
    dims = policy_dims(ps)
    if feats.ndim != 3 or feats.shape[2] != dims["n_features"]:
        raise ShapeMismatch(f"features must be (B, N, {dims['n_features']}), got {feats.shape}")
    B, N, _ = feats.shape
    if N < 1:
        raise ShapeMismatch("at least one BS is required")
    if mode == "sample" and rng is None:
        raise ValueError("sampling needs an rng")
    if mode == "forced":
        actions = np.asarray(actions, dtype=np.int64).reshape(B, N)

    enc_states, h, c, s_all = _encode(ps, "enc", "embed", feats)
    hbar = ad.stack(enc_states, axis=1)  # (B, N, H)
    att = AttentionParams.view(ps)
    keys = ad.linear(hbar, att.w_2)
    dec = LstmCellParams.view(ps, "dec")

    chosen = np.zeros((B, N), dtype=np.int64)
    probs = np.zeros((B, N, N_SPLITS))
    step_logps = []
    prev = _broadcast_row(ps["dec_start"], B)
    for n in range(N):
        h, c = lstm_step(dec, h, c, ad.concat([prev, enc_states[n]]))
        ctx, _ = attention(h, hbar, att, 1.0, keys=keys)
        logits = ad.linear(ad.concat([h, ctx, _step_slice(s_all, n)]), ps["out.W"], ps["out.b"])
        logp = ad.log_softmax(logits, T)
        p = np.exp(logp.value)
        probs[:, n, :] = p
        if mode == "sample":
            u = rng.random(B)
            a = np.minimum((u[:, None] >= np.cumsum(p, axis=1)).sum(axis=1), N_SPLITS - 1)
        elif mode == "greedy":
            a = np.argmax(logits.value, axis=1)
        elif mode == "forced":
            a = actions[:, n]
        else:
            raise ValueError(f"unknown decoding mode {mode!r}")
        chosen[:, n] = a
        step_logps.append(ad.pick(logp, a))
        prev = ad.take_rows(ps["dec_embed"], a)
    log_prob = ad.sum_last(ad.stack(step_logps, axis=1))
    return PolicyOutput(chosen, log_prob, probs)


def _broadcast_row(row: Tensor, B: int) -> Tensor:
    value = np.broadcast_to(row.value, (B,) + row.shape).copy()
    return ad._make(value, (row,), lambda g: (g.sum(axis=0),))


# --------------------------------------------------------------------------- critic


def init_critic(rng: np.random.Generator, hidden: int = 32, embed: int = 32,
                n_features: int = N_FEATURES) -> ParamSet:
    ps = ParamSet()
    _add_linear(ps, "critic.embed", embed, n_features, rng)
    _add_lstm(ps, "critic.enc", hidden, embed, rng)
    _add_linear(ps, "critic.mlp1", hidden, hidden, rng)
    _add_linear(ps, "critic.mlp2", 1, hidden, rng)
    return _name_tensors(ps)


def critic_forward(ps: ParamSet, features) -> Tensor:
    """Baseline estimate per input sequence, shape ``(B,)``.

    The encoder is order-sensitive: permuting the BSs generally changes the output.
    """
    feats = np.asarray(features, dtype=float)
    if feats.ndim == 2:
        feats = feats[None]
    if feats.ndim != 3 or feats.shape[2] != ps["critic.embed.W"].shape[1]:
        raise ShapeMismatch(f"critic features must be (B, N, F), got {feats.shape}")
    _, h, _, _ = _encode(ps, "critic.enc", "critic.embed", feats)
    z = ad.relu(ad.linear(h, ps["critic.mlp1.W"], ps["critic.mlp1.b"]))
    out = ad.linear(z, ps["critic.mlp2.W"], ps["critic.mlp2.b"])  # (B, 1)
    return ad.reshape(out, (feats.shape[0],))


# --------------------------------------------------------------------------- features


def raw_features(scenario: Scenario) -> np.ndarray:
    """Per-BS ``[load, routing cost, path delay, min link capacity on path, DU capacity]``."""
    t = scenario.tables
    rows = []
    for n, path in enumerate(scenario.paths):
        min_cap = min(scenario.topology.links[e].capacity_mbps for e in path.edges)
        rows.append([scenario.traffic[n], path.routing_cost, path.delay_ms, min_cap, t.du_cap[n]])
    return np.array(rows, dtype=float).reshape(-1, N_FEATURES)


def min_max(x: np.ndarray) -> np.ndarray:
    """Column-wise min-max scaling to [0, 1]; constant columns map to 0."""
    lo, hi = x.min(axis=0), x.max(axis=0)
    span = np.where(hi > lo, hi - lo, 1.0)
    return np.where(hi > lo, (x - lo) / span, 0.0)


def scenario_features(scenario: Scenario) -> np.ndarray:
    return min_max(raw_features(scenario))
