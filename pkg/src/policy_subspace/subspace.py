"""Anchor sets, simplex weights and the anchor-divergence penalty."""

from __future__ import annotations

import io
import itertools
import math
from dataclasses import dataclass

import numpy as np

from .nn import MlpSpec, dump_record, load_record

MIX_MODES = ("convex", "bezier3")


@dataclass(frozen=True)
class SimplexWeight:
    w: np.ndarray
    scalar_z: float | None = None

    def __post_init__(self):
        w = np.asarray(self.w, dtype=np.float64)
        if w.ndim != 1 or np.any(w < 0) or np.any(w > 1) or abs(w.sum() - 1.0) > 1e-12:
            raise ValueError(f"not a point of the simplex: {w}")
        object.__setattr__(self, "w", w)

    def __len__(self):
        return len(self.w)


@dataclass
class AnchorSet:
    anchors: np.ndarray
    mode: str = "convex"
    beta: float = 1.0

    def __post_init__(self):
        self.anchors = np.array(self.anchors, dtype=np.float64)
        if self.anchors.ndim != 2 or self.anchors.shape[0] < 2:
            raise ValueError("an anchor set needs at least two anchors of equal length")
        if self.mode not in MIX_MODES:
            raise ValueError(f"unknown mix mode {self.mode!r}")
        if self.mode == "bezier3" and self.n != 3:
            raise ValueError("bezier3 mixing needs exactly 3 anchors")
        if self.beta < 0:
            raise ValueError("beta must be >= 0")

    @property
    def n(self) -> int:
        return self.anchors.shape[0]

    def dumps(self, spec: MlpSpec | None = None) -> bytes:
        buf = io.BytesIO()
        dump_record(buf, spec, self.anchors, kind="anchor_set", mode=self.mode, beta=self.beta)
        return buf.getvalue()

    @classmethod
    def loads(cls, data: bytes) -> "AnchorSet":
        _, values, meta = load_record(io.BytesIO(data))
        return cls(values, meta["mode"], meta["beta"])


def mix_anchors(anchor_set: AnchorSet, weight: SimplexWeight) -> np.ndarray:
    w = weight.w if isinstance(weight, SimplexWeight) else np.asarray(weight, dtype=np.float64)
    if w.shape != (anchor_set.n,):
        raise ValueError(f"weight of length {w.shape} for {anchor_set.n} anchors")
    out = w[0] * anchor_set.anchors[0]
    for k in range(1, anchor_set.n):
        out = out + w[k] * anchor_set.anchors[k]
    return out


def bezier3_weights(z: float) -> SimplexWeight:
    """Bernstein basis of degree 2 at ``z``."""
    if not 0.0 <= z <= 1.0:
        raise ValueError(f"z={z} outside [0, 1]")
    a = 1.0 - z
    return SimplexWeight(np.array([a * a, 2.0 * a * z, z * z]), scalar_z=float(z))


def _scalar_weight(mode: str, n: int, z: float) -> SimplexWeight:
    if mode == "bezier3":
        return bezier3_weights(z)
    if n != 2:
        raise ValueError("a scalar z only parameterizes two-anchor lines")
    return SimplexWeight(np.array([z, 1.0 - z]), scalar_z=float(z))


def sample_simplex_weight(mode: str, n: int, rng: np.random.Generator) -> SimplexWeight:
    if n < 2:
        raise ValueError("need at least two anchors")
    if mode == "bezier3" or n == 2:
        return _scalar_weight(mode, n, float(rng.uniform(0.0, 1.0)))
    w = rng.dirichlet(np.ones(n))
    # dirichlet output can miss the unit sum by an ulp or two
    w = w / w.sum()
    return SimplexWeight(w)


def scalar_grid(k: int) -> np.ndarray:
    if k < 1:
        raise ValueError("K must be >= 1")
    if k == 1:
        return np.array([0.5])
    return np.arange(k) / (k - 1)


def _lattice(n: int, k: int) -> list[np.ndarray]:
    if k == 1:
        return [np.full(n, 1.0 / n)]
    m = 1
    while math.comb(m + n - 1, n - 1) < k:
        m += 1
    nodes = [np.array(c, dtype=np.float64) / m
             for c in itertools.product(range(m + 1), repeat=n) if sum(c) == m]
    nodes.sort(key=lambda v: tuple(-v))
    pick = np.unique(np.round(np.linspace(0, len(nodes) - 1, k)).astype(int))
    return [nodes[i] for i in pick]


def grid_weights(mode: str, n: int, k: int) -> list[SimplexWeight]:
    """K candidate weights spread over the simplex, endpoints included."""
    if k < 1:
        raise ValueError("K must be >= 1")
    if mode == "bezier3" or n == 2:
        return [_scalar_weight(mode, n, float(z)) for z in scalar_grid(k)]
    return [SimplexWeight(w) for w in _lattice(n, k)]


def _cos_and_grads(a: np.ndarray, b: np.ndarray) -> tuple[float, np.ndarray, np.ndarray]:
    na, nb = np.linalg.norm(a), np.linalg.norm(b)
    c = float(a @ b) / (na * nb)
    da = b / (na * nb) - c * a / na**2
    db = a / (na * nb) - c * b / nb**2
    return c, da, db


def cosine_sq_penalty(anchor_set: AnchorSet | np.ndarray) -> tuple[float, np.ndarray]:
    """Sum of squared cosines over unordered anchor pairs, and its gradient."""
    anchors = anchor_set.anchors if isinstance(anchor_set, AnchorSet) else np.asarray(anchor_set)
    norms = np.linalg.norm(anchors, axis=1)
    if np.any(norms == 0):
        raise ValueError("cosine similarity is undefined for a zero-norm anchor")
    total = 0.0
    grads = np.zeros_like(anchors)
    for i, j in itertools.combinations(range(len(anchors)), 2):
        c, da, db = _cos_and_grads(anchors[i], anchors[j])
        total += c * c
        grads[i] += 2 * c * da
        grads[j] += 2 * c * db
    return total, grads


def collapse_metrics(anchor_set: AnchorSet | np.ndarray) -> dict[str, np.ndarray]:
    anchors = anchor_set.anchors if isinstance(anchor_set, AnchorSet) else np.asarray(anchor_set)
    n = len(anchors)
    norms = np.linalg.norm(anchors, axis=1)
    cos2 = np.ones((n, n))
    l2 = np.zeros((n, n))
    for i, j in itertools.combinations(range(n), 2):
        denom = norms[i] * norms[j]
        c2 = (anchors[i] @ anchors[j] / denom) ** 2 if denom > 0 else float("nan")
        cos2[i, j] = cos2[j, i] = c2
        l2[i, j] = l2[j, i] = np.linalg.norm(anchors[i] - anchors[j])
    return {"cos2": cos2, "l2": l2}
