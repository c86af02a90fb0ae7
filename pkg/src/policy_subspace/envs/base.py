"""Environment variants, single-env stepping and vectorized lanes."""

from __future__ import annotations

import re
import zlib
from dataclasses import dataclass, field
from typing import Any, ClassVar

import numpy as np


class EpisodeDoneError(RuntimeError):
    """Raised when stepping an episode that already terminated."""


class Family:
    """Batched dynamics for one environment family.

    Subclasses operate on ``(B, state_dim)`` arrays so the same code backs
    the single-env API and the vectorized rollout lanes.
    """

    name: ClassVar[str]
    obs_dim: ClassVar[int]
    action_kind: ClassVar[str]          # "discrete" | "continuous"
    n_actions: ClassVar[int]            # discrete action count / continuous action dim
    horizon: ClassVar[int]
    deterministic: ClassVar[bool]
    knobs: ClassVar[dict[str, Any]]
    variants: ClassVar[dict[str, dict[str, Any]]]

    def __init__(self, variant: "EnvVariant"):
        self.variant = variant
        self.p = {**self.knobs, **variant.overrides}

    def reset_state(self, rng: np.random.Generator) -> np.ndarray:
        raise NotImplementedError

    def step_batch(self, states: np.ndarray, actions: np.ndarray):
        """Return ``(next_states, rewards, terminated)``."""
        raise NotImplementedError

    def observe(self, states: np.ndarray) -> np.ndarray:
        raise NotImplementedError

    def check_actions(self, actions: np.ndarray) -> np.ndarray:
        if self.action_kind == "discrete":
            actions = np.asarray(actions)
            if not np.issubdtype(actions.dtype, np.integer) or np.any(actions < 0) \
                    or np.any(actions >= self.n_actions):
                raise ValueError(f"{self.name} actions must be integers in [0, {self.n_actions})")
            return actions
        actions = np.asarray(actions, dtype=np.float64)
        if actions.shape[-1] != self.n_actions or np.any(np.abs(actions) > 1.0):
            raise ValueError(f"{self.name} actions must lie in [-1, 1]^{self.n_actions}")
        return actions


FAMILIES: dict[str, type[Family]] = {}


def register_family(cls: type[Family]) -> type[Family]:
    FAMILIES[cls.name] = cls
    return cls


@dataclass(frozen=True)
class EnvVariant:
    family: str
    name: str
    overrides: dict = field(default_factory=dict)
    obs_mask: tuple[int, ...] = ()
    horizon: int = 200
    deterministic: bool = False

    def __post_init__(self):
        fam = FAMILIES[self.family]
        unknown = set(self.overrides) - set(fam.knobs)
        if unknown:
            raise ValueError(f"unknown {self.family} knobs: {sorted(unknown)}")
        if any(not 0 <= i < fam.obs_dim for i in self.obs_mask):
            raise ValueError("masked index out of range")
        if self.horizon <= 0:
            raise ValueError("horizon must be positive")

    @property
    def key(self) -> str:
        return f"{self.family}/{self.name}"

    def dynamics(self) -> Family:
        return FAMILIES[self.family](self)

    @property
    def obs_dim(self) -> int:
        return FAMILIES[self.family].obs_dim


_MASK_RE = re.compile(r"^(?P<base>.+?)-mask(?P<pct>\d+)$")


def mask_indices(family: str, base: str, pct: int) -> tuple[int, ...]:
    obs_dim = FAMILIES[family].obs_dim
    count = min(obs_dim, max(1, round(pct / 100 * obs_dim))) if pct > 0 else 0
    rng = np.random.default_rng(zlib.crc32(f"{family}/{base}/{pct}".encode()))
    return tuple(sorted(int(i) for i in rng.choice(obs_dim, size=count, replace=False)))


def make_variant(family: str, name: str = "train") -> EnvVariant:
    """Look up a registered variant; ``<name>-mask<P>`` adds a fixed P% sensor mask."""
    if "/" in family and name == "train":
        family, name = family.split("/", 1)
    if family not in FAMILIES:
        raise KeyError(f"unknown environment family {family!r}")
    fam = FAMILIES[family]
    base, mask = name, ()
    m = _MASK_RE.match(name)
    if m:
        base = m["base"]
        mask = mask_indices(family, base, int(m["pct"]))
    if base not in fam.variants:
        raise KeyError(f"unknown {family} variant {base!r}; known: {sorted(fam.variants)}")
    return EnvVariant(family, name, dict(fam.variants[base]), mask,
                      fam.horizon, fam.deterministic)


def variant_names(family: str) -> list[str]:
    return list(FAMILIES[family].variants)


def held_out_variants(family: str) -> list[str]:
    return [n for n in FAMILIES[family].variants if n != "train"]


# -- single environment -----------------------------------------------------

@dataclass
class EnvState:
    variant: EnvVariant
    physics: np.ndarray
    t: int
    rng: np.random.Generator
    dynamics: Family
    done: bool = False


@dataclass
class StepResult:
    obs: np.ndarray
    reward: float
    done: bool
    info: dict = field(default_factory=dict)


def _masked(variant: EnvVariant, obs: np.ndarray) -> np.ndarray:
    if variant.obs_mask:
        obs = obs.copy()
        obs[..., list(variant.obs_mask)] = 0.0
    return obs


def env_reset(variant: EnvVariant, rng: np.random.Generator) -> tuple[EnvState, np.ndarray]:
    dyn = variant.dynamics()
    physics = dyn.reset_state(rng)
    state = EnvState(variant, physics, 0, rng, dyn)
    return state, _masked(variant, dyn.observe(physics[None])[0])


def env_step(state: EnvState, action) -> StepResult:
    """Advance ``state`` in place by one step."""
    if state.done:
        raise EpisodeDoneError("episode is done; call env_reset")
    dyn = state.dynamics
    actions = dyn.check_actions(np.asarray(action)[None])
    nxt, rew, term = dyn.step_batch(state.physics[None], actions)
    state.physics = nxt[0]
    state.t += 1
    truncated = state.t >= state.variant.horizon and not term[0]
    state.done = bool(term[0]) or truncated
    obs = _masked(state.variant, dyn.observe(nxt)[0])
    return StepResult(obs, float(rew[0]), state.done,
                      {"terminated": bool(term[0]), "truncated": truncated, "t": state.t})


# -- vectorized lanes -------------------------------------------------------

class VecEnv:
    """``n`` independent copies of one variant with auto-reset.

    Every lane owns an rng stream spawned from ``seed`` so lanes never share
    mutable state and trajectories depend only on ``(variant, n, seed)``.
    """

    def __init__(self, variant: EnvVariant, n: int, seed: int | np.random.SeedSequence):
        self.variant = variant
        self.n = n
        self.dyn = variant.dynamics()
        ss = seed if isinstance(seed, np.random.SeedSequence) else np.random.SeedSequence(seed)
        self.rngs = [np.random.default_rng(s) for s in ss.spawn(n)]
        self.states = None
        self.t = np.zeros(n, dtype=np.int64)
        self.ep_return = np.zeros(n)
        self.final_obs = None

    @property
    def obs_dim(self) -> int:
        return self.dyn.obs_dim

    def _observe(self) -> np.ndarray:
        return _masked(self.variant, self.dyn.observe(self.states))

    def reset(self) -> np.ndarray:
        self.states = np.stack([self.dyn.reset_state(r) for r in self.rngs])
        self.t[:] = 0
        self.ep_return[:] = 0.0
        return self._observe()

    def step(self, actions):
        """Step all lanes; finished lanes are reset and report their return."""
        actions = self.dyn.check_actions(actions)
        nxt, rew, term = self.dyn.step_batch(self.states, actions)
        self.t += 1
        self.ep_return += rew
        done = term | (self.t >= self.variant.horizon)
        finished = []
        if done.any():
            # observation reached just before the automatic reset
            self.final_obs = _masked(self.variant, self.dyn.observe(nxt))
        for i in np.flatnonzero(done):
            finished.append((int(i), float(self.ep_return[i]), int(self.t[i])))
            nxt[i] = self.dyn.reset_state(self.rngs[i])
            self.t[i] = 0
            self.ep_return[i] = 0.0
        self.states = nxt
        return self._observe(), rew, done, term, finished


def run_episodes(variant: EnvVariant, act, n_episodes: int,
                 seed: int | np.random.SeedSequence) -> np.ndarray:
    """Returns of ``n_episodes`` episodes run side by side, one per lane.

    ``act(obs)`` maps a ``(lanes, obs_dim)`` batch to actions.
    """
    env = VecEnv(variant, n_episodes, seed)
    obs = env.reset()
    returns = np.full(n_episodes, np.nan)
    active = np.ones(n_episodes, dtype=bool)
    dyn = env.dyn
    states = env.states
    t = 0
    total = np.zeros(n_episodes)
    while active.any():
        idx = np.flatnonzero(active)
        actions = dyn.check_actions(act(obs[idx]))
        nxt, rew, term = dyn.step_batch(states[idx], actions)
        t += 1
        total[idx] += rew
        states[idx] = nxt
        done = term | (t >= variant.horizon)
        returns[idx[done]] = total[idx[done]]
        active[idx[done]] = False
        obs = _masked(variant, dyn.observe(states))
    return returns
