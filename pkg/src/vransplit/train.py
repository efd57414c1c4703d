"""Constrained policy-gradient training with a learned baseline.

Each epoch draws a batch of differently ordered (and optionally rescaled)
views of the scenario, samples one split vector per view, scores it with the
penalized cost ``L = J + sum_i mu_i C_i`` and takes one Adam step on the policy
(advantage ``L - critic``) and one on the critic (squared error to ``L``).
``mode="adaptive"`` additionally moves ``mu`` by projected gradient ascent on the
batch-mean dissatisfaction.
"""
from __future__ import annotations

import csv
import io
from dataclasses import asdict, dataclass, field, fields
from pathlib import Path
from typing import Callable

import numpy as np

from .errors import NonFiniteLoss
from .model import FAMILIES, Scenario, evaluate_batch
from .nn import autodiff as ad
from .nn import checkpoint
from .nn.layers import (ParamSet, critic_forward, init_critic, init_policy, policy_forward,
                        scenario_features)
from .nn.optim import Adam, clip_by_norm

LOG_COLUMNS = ("epoch", "loss", "J", "xi", "L", "mu_cu", "mu_du", "mu_link", "mu_delay", "critic_loss")
FIXED, ADAPTIVE = "fixed", "adaptive"


@dataclass
class TrainConfig:
    epochs: int = 2000
    batch: int = 128
    lr_agent: float = 1e-4
    lr_critic: float = 5e-3
    mode: str = FIXED
    mu: float | tuple = 1.0
    eta_d: float = 1e-3
    seed: int = 0
    hidden: int = 32
    embed: int = 32
    augment: bool = True
    clip_norm: float | None = None
    checkpoint_every: int = 0

    def __post_init__(self):
        if self.batch < 1 or self.epochs < 0:
            raise ValueError("batch must be >= 1 and epochs >= 0")
        if self.lr_agent <= 0 or self.lr_critic <= 0 or self.eta_d < 0:
            raise ValueError("learning rates must be positive")
        if self.mode not in (FIXED, ADAPTIVE):
            raise ValueError(f"mode must be {FIXED!r} or {ADAPTIVE!r}")
        mu = np.broadcast_to(np.asarray(self.mu, dtype=float), (len(FAMILIES),))
        if np.any(mu < 0):
            raise ValueError("mu must be non-negative")
        self.mu = tuple(float(m) for m in mu)

    def to_dict(self) -> dict:
        d = asdict(self)
        d["mu"] = list(self.mu)
        return d

    @classmethod
    def from_dict(cls, d: dict) -> "TrainConfig":
        known = {f.name for f in fields(cls)}
        return cls(**{k: (tuple(v) if k == "mu" else v) for k, v in d.items() if k in known})


@dataclass
class TrainLog:
    rows: list = field(default_factory=list)

    def append(self, row: dict) -> None:
        self.rows.append(row)

    def column(self, name: str) -> np.ndarray:
        return np.array([r[name] for r in self.rows], dtype=float)

    def __len__(self):
        return len(self.rows)

    def to_csv(self) -> str:
        buf = io.StringIO()
        w = csv.writer(buf, lineterminator="\n")
        w.writerow(LOG_COLUMNS)
        for r in self.rows:
            w.writerow(format_row(r))
        return buf.getvalue()

    def write(self, path) -> None:
        Path(path).write_text(self.to_csv())


def format_row(r: dict) -> list:
    return [str(r["epoch"])] + [repr(float(r[c])) for c in LOG_COLUMNS[1:]]


@dataclass
class TrainState:
    config: TrainConfig
    policy: ParamSet
    critic: ParamSet
    opt_policy: Adam
    opt_critic: Adam
    mu: np.ndarray
    epoch: int
    data_rng: np.random.Generator
    sample_rng: np.random.Generator
    log: TrainLog = field(default_factory=TrainLog)


def seed_streams(seed: int):
    init, data, sample = np.random.SeedSequence(seed).spawn(3)
    return (np.random.Generator(np.random.PCG64(init)), np.random.Generator(np.random.PCG64(data)),
            np.random.Generator(np.random.PCG64(sample)))


def init_state(config: TrainConfig) -> TrainState:
    init_rng, data_rng, sample_rng = seed_streams(config.seed)
    policy = init_policy(init_rng, config.hidden, config.embed)
    critic = init_critic(init_rng, config.hidden, config.embed)
    return TrainState(config, policy, critic, Adam(policy, config.lr_agent), Adam(critic, config.lr_critic),
                      np.array(config.mu, dtype=float), 0, data_rng, sample_rng)


def batch_views(base: np.ndarray, B: int, rng: np.random.Generator, augment: bool):
    """``B`` random orderings of the per-BS feature rows; returns ``(features, perms)``."""
    N = base.shape[0]
    perms = np.argsort(rng.random((B, N)), axis=1, kind="stable")
    feats = base[perms]
    if augment:
        scales = rng.random((B, 2))
        feats[:, :, 0] *= scales[:, 0:1]
        feats[:, :, 1] *= scales[:, 1:2]
    return feats, perms


def unpermute(actions: np.ndarray, perms: np.ndarray) -> np.ndarray:
    x = np.empty_like(actions)
    np.put_along_axis(x, perms, actions, axis=1)
    return x


def penalized(J: np.ndarray, C: np.ndarray, mu: np.ndarray) -> tuple:
    xi = np.zeros_like(J)
    for i in range(len(FAMILIES)):
        xi = xi + mu[i] * C[:, i]
    return xi, J + xi


def train_epoch(state: TrainState, scenario: Scenario) -> dict:
    cfg = state.config
    base = scenario_features(scenario)
    feats, perms = batch_views(base, cfg.batch, state.data_rng, cfg.augment)

    out = policy_forward(state.policy, feats, "sample", 1.0, state.sample_rng)
    x = unpermute(out.actions, perms)
    ev = evaluate_batch(scenario.tables, x)
    mu = state.mu.copy()
    xi, L = penalized(ev.total_cost, ev.violations, mu)

    baseline = critic_forward(state.critic, feats)
    adv = L - baseline.value
    agent_loss = ad.mean(ad.mul(out.log_prob, adv))
    critic_loss = ad.mean(ad.square(ad.sub(baseline, L)))
    if not (np.isfinite(agent_loss.value) and np.isfinite(critic_loss.value)):
        raise NonFiniteLoss(f"non-finite loss at epoch {state.epoch}",
                            dump={"epoch": state.epoch, "assignments": x.tolist(), "L": L.tolist(),
                                  "baseline": baseline.value.tolist()})

    state.policy.zero_grad()
    agent_loss.backward()
    grads = state.policy.grads()
    if cfg.clip_norm:
        grads = clip_by_norm(grads, cfg.clip_norm)
    state.opt_policy.step(grads)

    state.critic.zero_grad()
    critic_loss.backward()
    cgrads = state.critic.grads()
    if cfg.clip_norm:
        cgrads = clip_by_norm(cgrads, cfg.clip_norm)
    state.opt_critic.step(cgrads)

    if cfg.mode == ADAPTIVE:
        state.mu = np.maximum(0.0, mu + cfg.eta_d * ev.violations.mean(axis=0))

    row = {"epoch": state.epoch, "loss": float(agent_loss.value), "J": float(ev.total_cost.mean()),
           "xi": float(xi.mean()), "L": float(L.mean()), "critic_loss": float(critic_loss.value),
           # kept in memory only, for judging the baseline
           "L_var": float(L.var()), "adv": float(adv.mean()), "adv_var": float(adv.var())}
    row.update({f"mu_{f}": float(m) for f, m in zip(FAMILIES, mu)})
    state.epoch += 1
    state.log.append(row)
    return row


ScenarioSource = Scenario | Callable[[np.random.Generator], Scenario]


def train(config: TrainConfig, source: ScenarioSource, resume=None, checkpoint_path=None,
          log_path=None, progress: Callable[[dict], None] | None = None) -> TrainState:
    """Run (or continue) training up to ``config.epochs`` epochs.

    ``source`` is a fixed :class:`Scenario` or a callable drawing one scenario per
    epoch from the data stream. ``resume`` is a checkpoint path or a
    :class:`TrainState`; resuming replays bit for bit what an uninterrupted run
    would have produced.
    """
    if resume is None:
        state = init_state(config)
    elif isinstance(resume, TrainState):
        state = resume
        state.config = config
    else:
        state = load_state(resume, config)
    stream = open(log_path, "a" if state.epoch else "w", newline="") if log_path else None
    try:
        if stream and not state.epoch:
            csv.writer(stream, lineterminator="\n").writerow(LOG_COLUMNS)
        while state.epoch < config.epochs:
            scenario = source if isinstance(source, Scenario) else source(state.data_rng)
            row = train_epoch(state, scenario)
            if stream:
                csv.writer(stream, lineterminator="\n").writerow(format_row(row))
            if progress:
                progress(row)
            if checkpoint_path and config.checkpoint_every and state.epoch % config.checkpoint_every == 0:
                save_state(state, checkpoint_path)
    finally:
        if stream:
            stream.close()
    if checkpoint_path:
        save_state(state, checkpoint_path)
    return state


# --------------------------------------------------------------------------- persistence


def state_tensors(state: TrainState) -> dict:
    tensors = {f"policy/{k}": v for k, v in state.policy.arrays().items()}
    tensors.update({f"critic/{k}": v for k, v in state.critic.arrays().items()})
    tensors.update(state.opt_policy.state_arrays("adam_policy"))
    tensors.update(state.opt_critic.state_arrays("adam_critic"))
    return tensors


def save_state(state: TrainState, path) -> None:
    meta = {"config": state.config.to_dict(), "mu": [float(m) for m in state.mu], "epoch": state.epoch,
            "adam_policy_t": state.opt_policy.t, "adam_critic_t": state.opt_critic.t,
            "rng_data": state.data_rng.bit_generator.state, "rng_sample": state.sample_rng.bit_generator.state}
    checkpoint.save(path, state_tensors(state), meta)


def _rng_from(st: dict) -> np.random.Generator:
    bg = np.random.PCG64()
    bg.state = st
    return np.random.Generator(bg)


def load_state(path, config: TrainConfig | None = None) -> TrainState:
    tensors, meta = checkpoint.load(path)
    saved = TrainConfig.from_dict(meta["config"])
    cfg = config or saved
    rng = np.random.default_rng(0)  # shapes only; values are overwritten below
    policy = init_policy(rng, saved.hidden, saved.embed)
    critic = init_critic(rng, saved.hidden, saved.embed)
    policy.load_arrays({k[len("policy/"):]: v for k, v in tensors.items() if k.startswith("policy/")})
    critic.load_arrays({k[len("critic/"):]: v for k, v in tensors.items() if k.startswith("critic/")})
    opt_p, opt_c = Adam(policy, cfg.lr_agent), Adam(critic, cfg.lr_critic)
    opt_p.load_state(tensors, "adam_policy", meta["adam_policy_t"])
    opt_c.load_state(tensors, "adam_critic", meta["adam_critic_t"])
    return TrainState(cfg, policy, critic, opt_p, opt_c, np.array(meta["mu"], dtype=float), meta["epoch"],
                      _rng_from(meta["rng_data"]), _rng_from(meta["rng_sample"]))


def load_policy(path) -> ParamSet:
    return load_state(path).policy


# --------------------------------------------------------------------------- ensembles


def derived_seed(seed: int, index: int) -> int:
    if index == 0:
        return int(seed)
    return int(np.random.SeedSequence([int(seed), int(index)]).generate_state(1)[0])


def pretrain_ensemble(config: TrainConfig, source: ScenarioSource, n_models: int, out_dir,
                      prefix: str = "model", progress=None) -> list:
    """Train ``n_models`` independently seeded copies; returns their checkpoint paths."""
    if n_models < 1:
        raise ValueError("need at least one model")
    out_dir = Path(out_dir)
    out_dir.mkdir(parents=True, exist_ok=True)
    paths = []
    for i in range(n_models):
        cfg = TrainConfig.from_dict({**config.to_dict(), "seed": derived_seed(config.seed, i)})
        path = out_dir / f"{prefix}{i}.ckpt"
        train(cfg, source, checkpoint_path=path, log_path=out_dir / f"{prefix}{i}.csv", progress=progress)
        paths.append(path)
    return paths
