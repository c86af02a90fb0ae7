"""Training loops for policy subspaces and the baselines.

One ``Learner`` covers every method.  Methods differ only in how many anchor
parameter vectors the policy owns, how a lane's latent is drawn, what (if
anything) is appended to the observation, and which auxiliary term is added:

- ``single``/``ensemble``: one anchor, no latent.
- ``lop``/``cop``/``bop``: 2-3 anchors mixed per lane, critic sees the weights,
  squared-cosine penalty between anchors.
- ``diayn_r``: one-hot skill appended to the observation, categorical
  discriminator reward.
- ``diayn_r_cont``: scalar latent appended, Gaussian density model reward.
- ``lc``: scalar latent appended, Gaussian density model on
  ``(state, policy mean)`` trained jointly with the policy.
"""

from __future__ import annotations

import io
import json
import logging
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from ..envs import FAMILIES, VecEnv, make_variant, rollout
from ..nn import (MlpSpec, categorical_entropy, categorical_log_prob_grad, categorical_sample,
                  check_finite, deterministic_action, dump_record, init_params, load_record,
                  log_softmax, mlp_backward, mlp_forward, squashed_gaussian_log_prob_grad,
                  squashed_gaussian_sample)
from ..subspace import collapse_metrics, cosine_sq_penalty, grid_weights, sample_simplex_weight, \
    scalar_grid
from .config import TrainConfig, default_config
from .gae import compute_gae
from .losses import critic_loss, diayn_reward, gaussian_log_density, ppo_clip_objective, \
    policy_gradient_objective
from .optim import Adam, clip_grad_norm

log = logging.getLogger(__name__)

METHODS = {
    "single": dict(n_anchors=1, mode="single", cond="none", disc=None),
    "ensemble": dict(n_anchors=1, mode="single", cond="none", disc=None),
    "lop": dict(n_anchors=2, mode="convex", cond="none", disc=None),
    "cop": dict(n_anchors=3, mode="convex", cond="none", disc=None),
    "bop": dict(n_anchors=3, mode="bezier3", cond="none", disc=None),
    "diayn_r": dict(n_anchors=1, mode="single", cond="skill", disc="skill"),
    "diayn_r_cont": dict(n_anchors=1, mode="single", cond="scalar", disc="state"),
    "lc": dict(n_anchors=1, mode="single", cond="scalar", disc="action"),
}

# named rng streams; fixed indices keep streams stable across methods
_ANCHORS, _CRITIC, _DISC, _ENV, _LATENT, _ACT, _MINIBATCH = range(7)


def _stream(entropy, *key) -> np.random.SeedSequence:
    return np.random.SeedSequence(entropy, spawn_key=key)


@dataclass
class Latents:
    """Per-lane latent for one acquisition segment."""
    weights: np.ndarray     # (n, N) anchor mixing weights
    cond: np.ndarray        # (n, c) appended to the policy input
    critic_z: np.ndarray    # (n, k) extra critic input
    labels: np.ndarray      # (n,) skill index or scalar latent

    @property
    def tags(self) -> np.ndarray:
        return np.concatenate([self.weights, self.cond], axis=1)


@dataclass
class Candidate:
    """One concrete policy offered to test-time selection."""
    params: np.ndarray
    cond: np.ndarray
    label: str


@dataclass
class TrainedModel:
    method: str
    family: str
    policy_spec: MlpSpec
    anchors: np.ndarray
    mode: str
    conditioning: str
    critic_spec: MlpSpec
    critic: np.ndarray
    beta: float = 0.0
    n_skills: int = 0
    disc_spec: MlpSpec | None = None
    disc: np.ndarray | None = None
    env_steps: int = 0

    def candidates(self, k: int) -> list[Candidate]:
        """``k`` candidate policies spread over whatever the method learned."""
        if k < 1:
            raise ValueError("K must be >= 1")
        empty = np.zeros(0)
        if self.mode in ("convex", "bezier3"):
            out = []
            for w in grid_weights(self.mode, len(self.anchors), k):
                label = f"z={w.scalar_z:.4g}" if w.scalar_z is not None else \
                    "w=(" + ",".join(f"{x:.3g}" for x in w.w) + ")"
                out.append(Candidate(_mix(self.anchors, w.w), empty, label))
            return out
        if self.method == "ensemble":
            return [Candidate(self.anchors[i], empty, f"member={i}")
                    for i in range(min(k, len(self.anchors)))]
        if self.conditioning == "skill":
            return [Candidate(self.anchors[0], np.eye(self.n_skills)[s], f"skill={s}")
                    for s in range(min(k, self.n_skills))]
        if self.conditioning == "scalar":
            return [Candidate(self.anchors[0], np.array([z]), f"z={z:.4g}") for z in scalar_grid(k)]
        return [Candidate(self.anchors[0], empty, "single")]

    def act_fn(self, candidate: Candidate):
        spec = self.policy_spec

        def act(obs):
            x = obs if candidate.cond.size == 0 else np.concatenate(
                [obs, np.broadcast_to(candidate.cond, (len(obs), candidate.cond.size))], axis=1)
            out, _ = mlp_forward(spec, candidate.params, x)
            return deterministic_action(spec, out)
        return act

    # checkpoint: a run of parameter records, see nn.dump_record
    def dumps(self) -> bytes:
        buf = io.BytesIO()
        meta = dict(kind="model", method=self.method, family=self.family, mode=self.mode,
                    conditioning=self.conditioning, beta=self.beta, n_skills=self.n_skills,
                    env_steps=self.env_steps)
        dump_record(buf, self.policy_spec, self.anchors, name="policy", **meta)
        dump_record(buf, self.critic_spec, self.critic, name="critic")
        if self.disc is not None:
            dump_record(buf, self.disc_spec, self.disc, name="discriminator")
        return buf.getvalue()

    @classmethod
    def loads(cls, data: bytes) -> "TrainedModel":
        buf = io.BytesIO(data)
        records = {}
        while (rec := load_record(buf)) is not None:
            spec, values, meta = rec
            records[meta["name"]] = (spec, values, meta)
        pspec, anchors, meta = records["policy"]
        cspec, critic, _ = records["critic"]
        dspec, disc = (records["discriminator"][:2] if "discriminator" in records
                       else (None, None))
        return cls(meta["method"], meta["family"], pspec, anchors, meta["mode"],
                   meta["conditioning"], cspec, critic[0], meta["beta"], meta["n_skills"],
                   dspec, None if disc is None else disc[0], meta["env_steps"])

    def save(self, path) -> None:
        Path(path).write_bytes(self.dumps())

    @classmethod
    def load(cls, path) -> "TrainedModel":
        return cls.loads(Path(path).read_bytes())


def _mix(anchors: np.ndarray, w: np.ndarray) -> np.ndarray:
    out = w[0] * anchors[0]
    for k in range(1, len(anchors)):
        out = out + w[k] * anchors[k]
    return out


@dataclass
class TrainResult:
    model: TrainedModel
    log: list = field(default_factory=list)
    env_steps: int = 0


class Learner:
    def __init__(self, family: str, config: TrainConfig, method: str = "single",
                 conditioning: str | None = None, seed=None):
        if method not in METHODS:
            raise ValueError(f"unknown method {method!r}")
        fam = FAMILIES[family]
        m = METHODS[method]
        self.family, self.method, self.config = family, method, config
        self.fam = fam
        self.n_anchors, self.mode = m["n_anchors"], m["mode"]
        self.conditioning = conditioning or m["cond"]
        self.disc_kind = m["disc"]
        if self.disc_kind == "action" and fam.action_kind != "continuous":
            raise ValueError("the latent-conditioned baseline only supports continuous actions")
        self.entropy_seed = config.seed if seed is None else seed
        e = self.entropy_seed

        self.cond_dim = {"none": 0, "skill": config.n_skills, "scalar": 1}[self.conditioning]
        self.critic_z_dim = 0 if self.n_anchors == 1 else (1 if self.n_anchors == 2
                                                           else self.n_anchors)
        if fam.action_kind == "discrete":
            head = dict(head="categorical", n_out=fam.n_actions)
        else:
            head = dict(head="gaussian", n_out=fam.n_actions, std=config.action_std)
        self.policy_spec = MlpSpec(fam.obs_dim + self.cond_dim, config.policy_hidden, **head)
        self.anchors = np.stack([
            init_params(self.policy_spec, np.random.default_rng(_stream(e, _ANCHORS, k)),
                        config.policy_init_scale)
            for k in range(self.n_anchors)])
        self.critic_spec = MlpSpec(fam.obs_dim + self.cond_dim + self.critic_z_dim,
                                   config.critic_hidden, "scalar")
        self.critic = init_params(self.critic_spec, np.random.default_rng(_stream(e, _CRITIC)),
                                  config.critic_init_scale)
        self.disc_spec = self.disc = None
        if self.disc_kind == "skill":
            self.disc_spec = MlpSpec(fam.obs_dim, config.discriminator_hidden, "categorical",
                                     config.n_skills)
        elif self.disc_kind == "state":
            self.disc_spec = MlpSpec(fam.obs_dim, config.discriminator_hidden, "scalar")
        elif self.disc_kind == "action":
            self.disc_spec = MlpSpec(fam.obs_dim + fam.n_actions, config.discriminator_hidden,
                                     "scalar")
        if self.disc_spec is not None:
            self.disc = init_params(self.disc_spec, np.random.default_rng(_stream(e, _DISC)))

        self.policy_opt = Adam(self.anchors, config.lr_policy)
        self.critic_opt = Adam(self.critic, config.lr_critic)
        self.disc_opt = Adam(self.disc, config.lr_discriminator) if self.disc is not None else None
        self.latent_rng = np.random.default_rng(_stream(e, _LATENT))
        self.act_rng = np.random.default_rng(_stream(e, _ACT))
        self.mb_rng = np.random.default_rng(_stream(e, _MINIBATCH))
        self.env_steps = 0
        self.updates = 0

    @property
    def is_subspace(self) -> bool:
        return self.n_anchors > 1

    # -- latents ------------------------------------------------------------

    def sample_latents(self, n: int, rng: np.random.Generator | None = None) -> Latents:
        rng = rng or self.latent_rng
        if self.n_anchors == 1:
            weights = np.ones((n, 1))
        else:
            weights = np.stack([sample_simplex_weight(self.mode, self.n_anchors, rng).w
                                for _ in range(n)])
        return self._latents(weights, rng, n)

    def fixed_latents(self, weights: np.ndarray) -> Latents:
        weights = np.asarray(weights, dtype=np.float64)
        return self._latents(weights, self.latent_rng, len(weights))

    def _latents(self, weights, rng, n) -> Latents:
        critic_z = weights[:, :1] if self.n_anchors == 2 else (
            weights if self.n_anchors > 2 else np.zeros((n, 0)))
        if self.conditioning == "skill":
            labels = rng.integers(self.config.n_skills, size=n)
            cond = np.eye(self.config.n_skills)[labels]
        elif self.conditioning == "scalar":
            labels = rng.uniform(0.0, 1.0, size=n)
            cond = labels[:, None]
        else:
            labels = np.zeros(n)
            cond = np.zeros((n, 0))
        return Latents(weights, cond, critic_z, labels)

    # -- networks -----------------------------------------------------------

    def policy_forward(self, anchors, x, weights):
        if self.n_anchors == 1:
            out, cache = mlp_forward(self.policy_spec, anchors[0], x)
        else:
            out, cache = mlp_forward(self.policy_spec, anchors, x, weights)
        return out, cache

    def policy_backward(self, anchors, cache, g_out):
        if self.n_anchors == 1:
            g, gx = mlp_backward(self.policy_spec, anchors[0], cache, g_out)
            return g[None], gx
        return mlp_backward(self.policy_spec, anchors, cache, g_out)

    def critic_values(self, critic, x):
        out, _ = mlp_forward(self.critic_spec, critic, x)
        return out[:, 0]

    def disc_log_prob(self, disc, obs, labels, policy_action=None):
        """log q(label | input) with the discriminator's density model."""
        cfg = self.config
        if self.disc_kind == "skill":
            out, _ = mlp_forward(self.disc_spec, disc, obs)
            return np.take_along_axis(log_softmax(out), labels.astype(np.int64)[:, None], 1)[:, 0]
        x = obs if self.disc_kind == "state" else np.concatenate([obs, policy_action], axis=1)
        out, _ = mlp_forward(self.disc_spec, disc, x)
        return gaussian_log_density(labels, out[:, 0], cfg.latent_std)[0]

    # -- acting -------------------------------------------------------------

    def lane_agent(self, latents: Latents, deterministic: bool = False):
        return _LaneAgent(self, latents, deterministic)

    # -- objectives (pure in the parameters passed in) -----------------------

    def policy_loss(self, anchors, x, weights, actions, logp_old, adv, labels=None, disc=None):
        """Loss to minimize for the policy anchors, with its gradient."""
        cfg = self.config
        out, cache = self.policy_forward(anchors, x, weights)
        stats = {}
        if self.policy_spec.head == "categorical":
            logp, dlogp = categorical_log_prob_grad(out, actions)
            ent, dent = categorical_entropy(out)
        else:
            logp, dlogp = squashed_gaussian_log_prob_grad(out, self.policy_spec.std, actions)
            ent, dent = np.zeros(len(x)), np.zeros_like(out)
        if cfg.algo == "ppo":
            surrogate, dsur = ppo_clip_objective(logp, logp_old, adv, cfg.clip_eps)
        else:
            surrogate, dsur = policy_gradient_objective(logp, adv)
        objective = surrogate + cfg.entropy_coef * float(ent.mean())
        g_out = dsur[:, None] * dlogp + (cfg.entropy_coef / len(x)) * dent
        if self.disc_kind == "action":
            obs = x[:, :self.fam.obs_dim]
            mean_action = np.tanh(out)
            dx = np.concatenate([obs, mean_action], axis=1)
            q_out, q_cache = mlp_forward(self.disc_spec, disc, dx)
            logq, dlogq = gaussian_log_density(labels, q_out[:, 0], cfg.latent_std)
            stats["aux_logq"] = float(logq.mean())
            scale = cfg.beta / len(x)
            _, g_dx = mlp_backward(self.disc_spec, disc, q_cache, (scale * dlogq)[:, None])
            g_out = g_out + g_dx[:, self.fam.obs_dim:] * (1.0 - mean_action**2)
            objective = objective + cfg.beta * float(logq.mean())
        check_finite(policy_objective=objective)
        grad, _ = self.policy_backward(anchors, cache, -g_out)
        loss = -objective
        if self.is_subspace and cfg.beta > 0:
            penalty, dpen = cosine_sq_penalty(anchors)
            loss += cfg.beta * penalty
            grad = grad + cfg.beta * dpen
            stats["penalty"] = penalty
        stats.update(surrogate=surrogate, entropy=float(ent.mean()))
        return loss, grad, stats

    def critic_loss(self, critic, x, returns):
        out, cache = mlp_forward(self.critic_spec, critic, x)
        mse, dpred = critic_loss(out[:, 0], returns)
        check_finite(critic_loss=mse)
        grad, _ = mlp_backward(self.critic_spec, critic, cache,
                               (self.config.critic_coef * dpred)[:, None])
        return self.config.critic_coef * mse, grad

    def disc_loss(self, disc, obs, labels, policy_action=None):
        """Negative log-likelihood of the latent under the discriminator."""
        if self.disc_kind == "skill":
            out, cache = mlp_forward(self.disc_spec, disc, obs)
            logp, dlogp = categorical_log_prob_grad(out, labels.astype(np.int64))
            g_out = -dlogp / len(obs)
        else:
            x = obs if self.disc_kind == "state" else np.concatenate([obs, policy_action], axis=1)
            out, cache = mlp_forward(self.disc_spec, disc, x)
            logp, dmean = gaussian_log_density(labels, out[:, 0], self.config.latent_std)
            g_out = (-dmean / len(obs))[:, None]
        nll = -float(logp.mean())
        check_finite(discriminator_loss=nll)
        grad, _ = mlp_backward(self.disc_spec, disc, cache, g_out)
        return nll, grad

    # -- training -----------------------------------------------------------

    def update(self, batch, latents: Latents) -> dict:
        cfg = self.config
        T, n = batch.n_steps, batch.n_envs
        obs_dim = self.fam.obs_dim
        obs = batch.obs.reshape(T * n, obs_dim)
        lane = np.tile(np.arange(n), T)
        labels = latents.labels[lane]
        rewards = batch.rewards
        if cfg.bootstrap_truncation and batch.truncated is not None:
            # a time limit is not a terminal state: bootstrap from the last observation
            rewards = rewards + cfg.gamma * np.where(batch.truncated, batch.final_values, 0.0)
        stats = {}
        if self.disc_kind in ("skill", "state"):
            logq = self.disc_log_prob(self.disc, obs, labels).reshape(T, n)
            rewards = diayn_reward(rewards, cfg.beta, logq)
            stats["intrinsic"] = float(logq.mean())
        est = compute_gae(rewards, batch.values, batch.dones, batch.bootstrap,
                          cfg.gamma, cfg.gae_lambda)
        adv_all = est.advantages.reshape(-1)
        ret_all = est.returns.reshape(-1)
        x = np.concatenate([obs, latents.cond[lane]], axis=1)
        xc = np.concatenate([x, latents.critic_z[lane]], axis=1)
        w = latents.weights[lane]
        actions = batch.actions.reshape((T * n,) + batch.actions.shape[2:])
        logp_old = batch.logp.reshape(-1)

        if cfg.lr_schedule == "linear":
            frac = 1.0 - self.updates / cfg.n_updates
            self.policy_opt.lr = cfg.lr_policy * frac
            self.critic_opt.lr = cfg.lr_critic * frac
            if self.disc_opt is not None:
                self.disc_opt.lr = cfg.lr_discriminator * frac
        totals: dict[str, list] = {}
        for _ in range(cfg.update_epochs):
            order = (self.mb_rng.permutation(T * n) if cfg.n_minibatches > 1
                     else np.arange(T * n))
            for idx in np.array_split(order, cfg.n_minibatches):
                adv = adv_all[idx]
                if cfg.algo == "ppo" and cfg.normalize_advantages and len(idx) > 1:
                    adv = (adv - adv.mean()) / (adv.std() + 1e-8)
                loss, grad, pstats = self.policy_loss(
                    self.anchors, x[idx], w[idx], actions[idx], logp_old[idx], adv,
                    labels[idx], self.disc)
                grad, gnorm = clip_grad_norm(grad, cfg.grad_clip)
                self.policy_opt.step(grad)
                closs, cgrad = self.critic_loss(self.critic, xc[idx], ret_all[idx])
                cgrad, _ = clip_grad_norm(cgrad, cfg.grad_clip)
                self.critic_opt.step(cgrad)
                entry = dict(policy_loss=loss, critic_loss=closs, grad_norm=gnorm, **pstats)
                if self.disc is not None:
                    pa = None
                    if self.disc_kind == "action":
                        out, _ = self.policy_forward(self.anchors, x[idx], w[idx])
                        pa = np.tanh(out)
                    dloss, dgrad = self.disc_loss(self.disc, obs[idx], labels[idx], pa)
                    dgrad, _ = clip_grad_norm(dgrad, cfg.grad_clip)
                    self.disc_opt.step(dgrad)
                    entry["disc_loss"] = dloss
                for k, v in entry.items():
                    totals.setdefault(k, []).append(v)
        stats.update({k: float(np.mean(v)) for k, v in totals.items()})
        self.updates += 1
        return stats

    def train(self, env: VecEnv | None = None, callback=None) -> TrainResult:
        cfg = self.config
        if env is None:
            env = VecEnv(make_variant(self.family, "train"), cfg.n_envs,
                         _stream(self.entropy_seed, _ENV))
        obs = env.reset()
        records = []
        for epoch in range(cfg.n_updates):
            latents = self.sample_latents(cfg.n_envs)
            agent = self.lane_agent(latents)
            batch, obs = rollout(env, agent, cfg.n_acq_steps, self.act_rng, obs)
            self.env_steps += len(batch)
            stats = self.update(batch, latents)
            if epoch % cfg.log_every == 0 or epoch == cfg.n_updates - 1:
                rets = [r for _, r, _ in batch.episodes]
                rec = {"epoch": epoch, "env_steps": self.env_steps,
                       "mean_return": float(np.mean(rets)) if rets else None,
                       "n_episodes": len(rets), **stats}
                if self.is_subspace:
                    rec["cos2"] = collapse_metrics(self.anchors)["cos2"].tolist()
                records.append(rec)
                if callback:
                    callback(rec)
        return TrainResult(self.model(), records, self.env_steps)

    def model(self) -> TrainedModel:
        return TrainedModel(self.method, self.family, self.policy_spec, self.anchors.copy(),
                            self.mode, self.conditioning, self.critic_spec, self.critic.copy(),
                            self.config.beta, self.config.n_skills if self.conditioning == "skill"
                            else 0, self.disc_spec,
                            None if self.disc is None else self.disc.copy(), self.env_steps)


class _LaneAgent:
    def __init__(self, learner: Learner, latents: Latents, deterministic: bool):
        self.learner = learner
        self.latents = latents
        self.deterministic = deterministic
        self.tags = latents.tags

    def _inputs(self, obs):
        return np.concatenate([obs, self.latents.cond], axis=1)

    def act(self, obs, rng):
        ln = self.learner
        out, _ = ln.policy_forward(ln.anchors, self._inputs(obs), self.latents.weights)
        spec = ln.policy_spec
        if spec.head == "categorical":
            actions = np.argmax(out, 1) if self.deterministic else categorical_sample(out, rng)
            logp, _ = categorical_log_prob_grad(out, actions)
        else:
            actions = (np.tanh(out) if self.deterministic
                       else squashed_gaussian_sample(out, spec.std, rng))
            logp, _ = squashed_gaussian_log_prob_grad(out, spec.std, actions)
        return actions, logp

    def value(self, obs):
        ln = self.learner
        x = np.concatenate([self._inputs(obs), self.latents.critic_z], axis=1)
        return ln.critic_values(ln.critic, x)


# -- public entry points ----------------------------------------------------

def _config(family, config):
    return config if config is not None else default_config(family)


def train_subspace(family: str, config: TrainConfig | None = None, n_anchors: int = 2,
                   mode: str = "convex", algo: str | None = None, callback=None) -> TrainResult:
    """Learn ``n_anchors`` anchors whose mixtures all solve the train variant."""
    cfg = _config(family, config)
    if algo:
        cfg = cfg.replace(algo=algo)
    if mode == "bezier3":
        method = "bop"
    elif n_anchors == 2:
        method = "lop"
    elif n_anchors == 3:
        method = "cop"
    else:
        raise ValueError("supported subspaces: 2-anchor line, 3-anchor simplex, 3-anchor curve")
    return Learner(family, cfg, method).train(callback=callback)


def train_single(family: str, config: TrainConfig | None = None, algo: str | None = None,
                 conditioning: str = "none", seed=None, callback=None) -> TrainResult:
    """One policy; ``conditioning`` appends a random latent it never uses for reward."""
    cfg = _config(family, config)
    if algo:
        cfg = cfg.replace(algo=algo)
    return Learner(family, cfg, "single", conditioning=conditioning, seed=seed).train(
        callback=callback)


def train_ensemble(family: str, config: TrainConfig | None = None, k: int = 5,
                   algo: str | None = None) -> TrainResult:
    """``k`` independently seeded single policies; consumes ``k`` times the budget."""
    if k < 2:
        raise ValueError("an ensemble needs K >= 2 members")
    cfg = _config(family, config)
    if algo:
        cfg = cfg.replace(algo=algo)
    results = [train_single(family, cfg, seed=[cfg.seed, i]) for i in range(k)]
    first = results[0].model
    steps = sum(r.env_steps for r in results)
    model = TrainedModel("ensemble", family, first.policy_spec,
                         np.stack([r.model.anchors[0] for r in results]), "single", "none",
                         first.critic_spec, first.critic, 0.0, env_steps=steps)
    logs = [dict(rec, member=i) for i, r in enumerate(results) for rec in r.log]
    return TrainResult(model, logs, steps)


def train_diayn_r(family: str, config: TrainConfig | None = None, continuous: bool = False,
                  algo: str | None = None, callback=None) -> TrainResult:
    cfg = _config(family, config)
    if algo:
        cfg = cfg.replace(algo=algo)
    method = "diayn_r_cont" if continuous else "diayn_r"
    return Learner(family, cfg, method).train(callback=callback)


def train_lc(family: str, config: TrainConfig | None = None, callback=None) -> TrainResult:
    cfg = _config(family, config)
    if cfg.algo != "ppo":
        cfg = cfg.replace(algo="ppo")
    return Learner(family, cfg, "lc").train(callback=callback)


def train_method(method: str, family: str, config: TrainConfig | None = None,
                 ensemble_k: int = 5, callback=None) -> TrainResult:
    if method == "single":
        return train_single(family, config, callback=callback)
    if method == "lop":
        return train_subspace(family, config, 2, "convex", callback=callback)
    if method == "cop":
        return train_subspace(family, config, 3, "convex", callback=callback)
    if method == "bop":
        return train_subspace(family, config, 3, "bezier3", callback=callback)
    if method == "ensemble":
        return train_ensemble(family, config, ensemble_k)
    if method == "diayn_r":
        return train_diayn_r(family, config, callback=callback)
    if method == "diayn_r_cont":
        return train_diayn_r(family, config, continuous=True, callback=callback)
    if method == "lc":
        return train_lc(family, config, callback=callback)
    raise ValueError(f"unknown method {method!r}")


def write_log(records, path) -> None:
    with open(path, "w") as fh:
        for rec in records:
            fh.write(json.dumps(rec, sort_keys=True) + "\n")


def read_log(path) -> list[dict]:
    with open(path) as fh:
        return [json.loads(line) for line in fh if line.strip()]
