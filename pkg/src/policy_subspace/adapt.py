"""K-shot test-time policy selection and post-hoc analyses."""

from __future__ import annotations

import dataclasses
from dataclasses import dataclass

import numpy as np

from .algos.optim import Adam
from .algos.trainer import TrainedModel
from .envs import EnvVariant, VecEnv, run_episodes
from .nn import (MlpSpec, categorical_log_prob_grad, categorical_sample, init_params,
                 mlp_backward, mlp_forward)


def _seed_sequence(seed) -> np.random.SeedSequence:
    if isinstance(seed, np.random.SeedSequence):
        return seed
    if isinstance(seed, np.random.Generator):
        return np.random.SeedSequence(int(seed.integers(2**63)))
    return np.random.SeedSequence(seed)


@dataclass
class AdaptReport:
    method: str
    variant: str
    k: int
    episodes_per_policy: int
    labels: list
    adaptation_returns: list
    selected: int
    episodes_consumed: int
    perf_mean: float
    perf_std: float
    perf_episodes: int
    seed: int | None = None

    @property
    def best_adaptation_return(self) -> float:
        return self.adaptation_returns[self.selected]

    def to_dict(self) -> dict:
        return dataclasses.asdict(self)

    @classmethod
    def from_dict(cls, d: dict) -> "AdaptReport":
        return cls(**d)


def select_best(returns) -> int:
    """Index of the highest return; ties go to the lowest index."""
    returns = np.asarray(returns, dtype=np.float64)
    if returns.size == 0:
        raise ValueError("no candidates")
    return int(np.flatnonzero(returns == returns.max())[0])


def perf_estimate(act, variant: EnvVariant, n_episodes: int, seed=0) -> tuple[float, float]:
    """Mean and (population) std of returns over fresh episodes."""
    if n_episodes < 1:
        raise ValueError("need at least one episode")
    returns = run_episodes(variant, act, n_episodes, _seed_sequence(seed))
    return float(returns.mean()), float(returns.std())


def k_shot_select(model: TrainedModel, variant: EnvVariant, k: int,
                  episodes_per_policy: int | None = None, seed=0,
                  perf_episodes: int = 100) -> AdaptReport:
    """Try ``k`` candidates for E episodes each and keep the best one.

    E defaults to 1 on deterministic variants and 10 otherwise.  On a
    deterministic variant every fresh episode repeats the adaptation episode,
    so the post-selection estimate reuses it instead of replaying it.
    """
    if k < 1:
        raise ValueError("K must be >= 1")
    e = episodes_per_policy or (1 if variant.deterministic else 10)
    cands = model.candidates(k)
    ss = _seed_sequence(seed)
    streams = ss.spawn(len(cands) + 1)
    returns = [float(run_episodes(variant, model.act_fn(c), e, s).mean())
               for c, s in zip(cands, streams)]
    best = select_best(returns)
    if variant.deterministic:
        mean, std, n_perf = returns[best], 0.0, 0
    else:
        mean, std = perf_estimate(model.act_fn(cands[best]), variant, perf_episodes, streams[-1])
        n_perf = perf_episodes
    return AdaptReport(model.method, variant.name, k, e, [c.label for c in cands], returns,
                       best, len(cands) * e, mean, std, n_perf,
                       seed if isinstance(seed, int) else None)


def selection_histogram(reports, k: int | None = None) -> np.ndarray:
    """Count how often each candidate index was selected."""
    reports = list(reports)
    ks = {r.k for r in reports} | ({k} if k else set())
    if len(ks) != 1:
        raise ValueError(f"reports mix different K: {sorted(ks)}")
    (k,) = ks
    counts = np.zeros(k, dtype=np.int64)
    for r in reports:
        counts[r.selected] += 1
    return counts


def selection_histograms(grouped: dict) -> dict:
    """Per-seed histograms from ``{seed: [AdaptReport, ...]}``."""
    return {seed: selection_histogram(reps) for seed, reps in grouped.items()}


# -- diversity probe ----------------------------------------------------------

@dataclass
class ProbeResult:
    train_accuracy: float
    heldout_accuracy: float
    chance: float
    n_samples: int


def collect_probe_dataset(model: TrainedModel, variant: EnvVariant, k: int, dataset_size: int,
                          seed=0, stochastic: bool = True) -> tuple[np.ndarray, np.ndarray]:
    """States visited by each of the ``k`` candidates, labelled by candidate index."""
    cands = model.candidates(k)
    per = max(1, dataset_size // len(cands))
    ss = _seed_sequence(seed)
    xs, ys = [], []
    for idx, (cand, s) in enumerate(zip(cands, ss.spawn(len(cands)))):
        env_ss, act_ss = s.spawn(2)
        act_rng = np.random.default_rng(act_ss)
        lanes = 8
        env = VecEnv(variant, lanes, env_ss)
        obs = env.reset()
        spec = model.policy_spec
        det = model.act_fn(cand)
        got = []
        while sum(len(o) for o in got) < per:
            got.append(obs)
            if stochastic and spec.head == "categorical":
                x = obs if cand.cond.size == 0 else np.concatenate(
                    [obs, np.broadcast_to(cand.cond, (lanes, cand.cond.size))], axis=1)
                out, _ = mlp_forward(spec, cand.params, x)
                actions = categorical_sample(out, act_rng)
            else:
                actions = det(obs)
            obs, *_ = env.step(actions)
        xs.append(np.concatenate(got)[:per])
        ys.append(np.full(per, idx))
    return np.concatenate(xs), np.concatenate(ys)


def train_classifier(x: np.ndarray, y: np.ndarray, n_classes: int, seed=0,
                     hidden=(16, 16), epochs: int = 200, lr: float = 1e-3,
                     batch_size: int = 256) -> tuple[MlpSpec, np.ndarray]:
    ss = _seed_sequence(seed)
    init_ss, mb_ss = ss.spawn(2)
    spec = MlpSpec(x.shape[1], tuple(hidden), "categorical", n_classes)
    params = init_params(spec, np.random.default_rng(init_ss))
    opt = Adam(params, lr)
    rng = np.random.default_rng(mb_ss)
    for _ in range(epochs):
        order = rng.permutation(len(x))
        for start in range(0, len(x), batch_size):
            idx = order[start:start + batch_size]
            out, cache = mlp_forward(spec, params, x[idx])
            _, dlogp = categorical_log_prob_grad(out, y[idx])
            grad, _ = mlp_backward(spec, params, cache, -dlogp / len(idx))
            opt.step(grad)
    return spec, params


def classifier_accuracy(spec: MlpSpec, params: np.ndarray, x: np.ndarray, y: np.ndarray) -> float:
    out, _ = mlp_forward(spec, params, x)
    return float(np.mean(np.argmax(out, 1) == y))


def diversity_probe(model: TrainedModel, variant: EnvVariant, k: int, dataset_size: int = 4000,
                    seed=0, epochs: int = 200, stochastic: bool = True) -> ProbeResult:
    """Held-out accuracy of a small classifier recovering which candidate visited a state."""
    x, y = collect_probe_dataset(model, variant, k, dataset_size, seed, stochastic)
    n_classes = int(y.max()) + 1
    if n_classes < 2:
        raise ValueError("the probe needs at least two candidate policies")
    ss = _seed_sequence(seed).spawn(2)[1]
    split_ss, fit_ss = ss.spawn(2)
    order = np.random.default_rng(split_ss).permutation(len(x))
    cut = len(x) // 2
    tr, te = order[:cut], order[cut:]
    spec, params = train_classifier(x[tr], y[tr], n_classes, fit_ss, epochs=epochs)
    return ProbeResult(classifier_accuracy(spec, params, x[tr], y[tr]),
                       classifier_accuracy(spec, params, x[te], y[te]), 1.0 / n_classes, len(x))
