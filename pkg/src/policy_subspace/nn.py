"""Small numpy MLP engine with exact reverse-mode gradients.

Parameters of one network live in a flat float64 vector laid out as
``(W_1, b_1, W_2, b_2, ...)`` with each ``W_i`` stored row-major with shape
``(fan_in, fan_out)``.  Forward/backward passes also accept a *stack* of
parameter vectors ``(N, P)`` together with per-sample mixing weights
``(B, N)``; every layer is linear in its weights, so the output equals the
output of the network whose parameters are ``sum_k w_bk * params_k``.  This is
what lets the subspace trainer evaluate a different mixed policy for every
sample without materialising the mixed vectors.
"""

from __future__ import annotations

import io
import json
import math
from dataclasses import dataclass, field
from typing import Callable

import numpy as np

HEADS = ("categorical", "gaussian", "scalar")

# keeps atanh finite for actions produced by tanh in float64
_ACTION_EDGE = 1.0 - 1e-12


class NonFiniteLossError(FloatingPointError):
    """A loss term evaluated to inf/nan."""

    def __init__(self, term: str, value):
        self.term = term
        self.value = value
        super().__init__(f"non-finite value in loss term {term!r}: {value!r}")


@dataclass(frozen=True)
class MlpSpec:
    input_dim: int
    hidden: tuple[int, ...] = ()
    head: str = "categorical"
    n_out: int = 1
    std: float | None = None

    def __post_init__(self):
        object.__setattr__(self, "hidden", tuple(int(h) for h in self.hidden))
        if self.head not in HEADS:
            raise ValueError(f"unknown head {self.head!r}")
        if self.input_dim < 1 or self.n_out < 1 or any(h < 1 for h in self.hidden):
            raise ValueError(f"all dimensions must be >= 1: {self}")
        if self.head == "gaussian":
            if self.std is None or not self.std > 0:
                raise ValueError("gaussian head needs std > 0")
        if self.head == "scalar" and self.n_out != 1:
            raise ValueError("scalar head has exactly one output")

    @property
    def layer_dims(self) -> list[tuple[int, int]]:
        dims = [self.input_dim, *self.hidden, self.n_out]
        return list(zip(dims[:-1], dims[1:]))

    @property
    def n_params(self) -> int:
        return sum(i * o + o for i, o in self.layer_dims)

    def layer_slices(self) -> list[tuple[slice, slice, int, int]]:
        out, pos = [], 0
        for i, o in self.layer_dims:
            w = slice(pos, pos + i * o)
            b = slice(pos + i * o, pos + i * o + o)
            out.append((w, b, i, o))
            pos += i * o + o
        return out

    def to_dict(self) -> dict:
        return {"input_dim": self.input_dim, "hidden": list(self.hidden),
                "head": self.head, "n_out": self.n_out, "std": self.std}

    @classmethod
    def from_dict(cls, d: dict) -> "MlpSpec":
        return cls(d["input_dim"], tuple(d["hidden"]), d["head"], d["n_out"], d.get("std"))


def init_params(spec: MlpSpec, rng: np.random.Generator, out_scale: float = 1.0) -> np.ndarray:
    """Uniform(-1/sqrt(fan_in), 1/sqrt(fan_in)) for weights and biases.

    ``out_scale`` multiplies the output layer, e.g. to start a policy close
    to uniform or a critic at zero.
    """
    params = np.empty(spec.n_params)
    slices = spec.layer_slices()
    for n, (w, b, i, o) in enumerate(slices):
        bound = 1.0 / math.sqrt(i)
        scale = out_scale if n == len(slices) - 1 else 1.0
        params[w] = scale * rng.uniform(-bound, bound, size=i * o)
        params[b] = scale * rng.uniform(-bound, bound, size=o)
    return params


def _as_stack(spec: MlpSpec, params: np.ndarray) -> np.ndarray:
    params = np.asarray(params, dtype=np.float64)
    if params.ndim == 1:
        params = params[None]
    if params.ndim != 2 or params.shape[1] != spec.n_params:
        raise ValueError(f"params of shape {params.shape} do not match spec with "
                         f"{spec.n_params} parameters")
    return params


@dataclass
class _Cache:
    inputs: list = field(default_factory=list)   # input to each layer
    pre: list = field(default_factory=list)      # pre-activation of hidden layers
    weights: np.ndarray | None = None
    squeeze: bool = False


def mlp_forward(spec: MlpSpec, params: np.ndarray, x: np.ndarray,
                weights: np.ndarray | None = None) -> tuple[np.ndarray, _Cache]:
    """Forward pass returning raw head outputs and a cache for ``mlp_backward``.

    ``params`` is ``(P,)`` or a stack ``(N, P)``; with a stack, ``weights`` of
    shape ``(B, N)`` gives the per-sample mixing coefficients.
    """
    stack = _as_stack(spec, params)
    n = stack.shape[0]
    x = np.asarray(x, dtype=np.float64)
    squeeze = x.ndim == 1
    if squeeze:
        x = x[None]
    if x.ndim != 2 or x.shape[1] != spec.input_dim:
        raise ValueError(f"input of shape {x.shape} does not match input_dim={spec.input_dim}")
    if weights is None:
        if n != 1:
            raise ValueError("a parameter stack needs per-sample mixing weights")
    else:
        weights = np.asarray(weights, dtype=np.float64)
        if weights.ndim == 1:
            weights = np.broadcast_to(weights, (x.shape[0], n))
        if weights.shape != (x.shape[0], n):
            raise ValueError(f"mixing weights of shape {weights.shape}, expected {(x.shape[0], n)}")

    cache = _Cache(weights=weights, squeeze=squeeze)
    h = x
    layers = spec.layer_slices()
    for idx, (ws, bs, i, o) in enumerate(layers):
        cache.inputs.append(h)
        if weights is None:
            y = h @ stack[0, ws].reshape(i, o) + stack[0, bs]
        else:
            W = stack[:, ws].reshape(n, i, o).transpose(1, 0, 2).reshape(i, n * o)
            y = (h @ W).reshape(-1, n, o) + stack[:, bs][None]
            y = np.einsum("bn,bno->bo", weights, y)
        if idx < len(layers) - 1:
            cache.pre.append(y)
            h = np.maximum(y, 0.0)
        else:
            h = y
    return (h[0] if squeeze else h), cache


def mlp_backward(spec: MlpSpec, params: np.ndarray, cache: _Cache,
                 grad_out: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
    """Vector-Jacobian product of the forward pass.

    Returns ``(grad_params, grad_input)``; ``grad_params`` has the shape of
    ``params`` as passed to ``mlp_forward``.
    """
    flat = np.asarray(params).ndim == 1
    stack = _as_stack(spec, params)
    n = stack.shape[0]
    g = np.asarray(grad_out, dtype=np.float64)
    if cache.squeeze:
        g = g[None]
    weights = cache.weights
    grads = np.zeros_like(stack)
    layers = spec.layer_slices()
    for idx in range(len(layers) - 1, -1, -1):
        ws, bs, i, o = layers[idx]
        h = cache.inputs[idx]
        if weights is None:
            W = stack[0, ws].reshape(i, o)
            grads[0, ws] = (h.T @ g).ravel()
            grads[0, bs] = g.sum(0)
            g = g @ W.T
        else:
            scaled = (weights[:, :, None] * g[:, None, :]).reshape(-1, n * o)
            gw = (h.T @ scaled).reshape(i, n, o).transpose(1, 0, 2)
            grads[:, ws] = gw.reshape(n, i * o)
            grads[:, bs] = scaled.sum(0).reshape(n, o)
            W = stack[:, ws].reshape(n, i, o).transpose(1, 0, 2).reshape(i, n * o)
            g = scaled @ W.T
        if idx > 0:
            g = g * (cache.pre[idx - 1] > 0)
    grad_x = g[0] if cache.squeeze else g
    return (grads[0] if flat else grads), grad_x


def forward_policy(spec: MlpSpec, params: np.ndarray, obs: np.ndarray) -> np.ndarray:
    """Distribution parameters: logits, pre-squash Gaussian mean, or a value."""
    out, _ = mlp_forward(spec, params, obs)
    if spec.head == "scalar":
        return out[..., 0]
    return out


def backprop(spec: MlpSpec, params: np.ndarray, obs: np.ndarray,
             loss: Callable[[np.ndarray], tuple[float, np.ndarray]]) -> tuple[float, np.ndarray]:
    """Gradient of ``loss(head_outputs)`` with respect to ``params``.

    ``loss`` maps the raw network outputs to ``(value, d value / d outputs)``.
    """
    out, cache = mlp_forward(spec, params, obs)
    value, g_out = loss(out)
    check_finite(loss=value)
    grad, _ = mlp_backward(spec, params, cache, g_out)
    return value, grad


def check_finite(**terms) -> None:
    for name, value in terms.items():
        if not np.all(np.isfinite(value)):
            raise NonFiniteLossError(name, value)


# -- categorical head -------------------------------------------------------

def log_softmax(logits: np.ndarray) -> np.ndarray:
    logits = np.asarray(logits, dtype=np.float64)
    m = logits.max(axis=-1, keepdims=True)
    shifted = logits - m
    return shifted - np.log(np.exp(shifted).sum(axis=-1, keepdims=True))


def categorical_log_prob(logits: np.ndarray, actions) -> np.ndarray:
    logits = np.asarray(logits, dtype=np.float64)
    actions = np.asarray(actions)
    n = logits.shape[-1]
    if np.any(actions < 0) or np.any(actions >= n) or not np.issubdtype(actions.dtype, np.integer):
        raise ValueError(f"actions must be integers in [0, {n})")
    logp = log_softmax(logits)
    return np.take_along_axis(logp, actions[..., None], axis=-1)[..., 0]


def categorical_log_prob_grad(logits: np.ndarray, actions) -> tuple[np.ndarray, np.ndarray]:
    """Log-probabilities and their gradient w.r.t. the logits."""
    logp_all = log_softmax(logits)
    actions = np.asarray(actions)
    logp = categorical_log_prob(logits, actions)
    grad = -np.exp(logp_all)
    np.put_along_axis(grad, actions[..., None],
                      np.take_along_axis(grad, actions[..., None], axis=-1) + 1.0, axis=-1)
    return logp, grad


def categorical_entropy(logits: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
    """Entropy per row and its gradient w.r.t. the logits."""
    logp = log_softmax(logits)
    p = np.exp(logp)
    ent = -(p * logp).sum(-1)
    grad = -p * (logp + ent[..., None])
    return ent, grad


def categorical_sample(logits: np.ndarray, rng: np.random.Generator) -> np.ndarray:
    p = np.exp(log_softmax(logits))
    u = rng.random(p.shape[:-1])
    idx = (np.cumsum(p, axis=-1) < u[..., None]).sum(-1)
    return np.minimum(idx, p.shape[-1] - 1)


# -- squashed Gaussian head -------------------------------------------------

def _log1m_tanh_sq(u: np.ndarray) -> np.ndarray:
    # log(1 - tanh(u)^2) without cancellation
    return 2.0 * (math.log(2.0) - u - np.logaddexp(0.0, -2.0 * u))


def squashed_gaussian_log_prob(mean: np.ndarray, std: float, actions: np.ndarray) -> np.ndarray:
    return squashed_gaussian_log_prob_grad(mean, std, actions)[0]


def squashed_gaussian_log_prob_grad(mean: np.ndarray, std: float,
                                    actions: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
    """Log-density of ``a = tanh(u)``, ``u ~ N(mean, std)``, summed over action dims."""
    a = np.asarray(actions, dtype=np.float64)
    if np.any(np.abs(a) >= 1.0):
        raise ValueError("squashed-Gaussian actions must lie strictly inside (-1, 1)")
    u = np.arctanh(np.clip(a, -_ACTION_EDGE, _ACTION_EDGE))
    diff = u - mean
    logn = -0.5 * (diff / std) ** 2 - math.log(std) - 0.5 * math.log(2 * math.pi)
    logp = (logn - _log1m_tanh_sq(u)).sum(-1)
    grad = diff / std**2
    return logp, grad


def squashed_gaussian_sample(mean: np.ndarray, std: float, rng: np.random.Generator) -> np.ndarray:
    u = mean + std * rng.standard_normal(np.shape(mean))
    return np.clip(np.tanh(u), -_ACTION_EDGE, _ACTION_EDGE)


def log_prob_and_sample(spec: MlpSpec, dist_params: np.ndarray,
                        rng: np.random.Generator | None = None, action=None):
    """Sample (when ``action`` is None) and score an action under the head."""
    if spec.head == "categorical":
        if action is None:
            action = categorical_sample(dist_params, rng)
        return action, categorical_log_prob(dist_params, action)
    if spec.head == "gaussian":
        if action is None:
            action = squashed_gaussian_sample(dist_params, spec.std, rng)
        return action, squashed_gaussian_log_prob(dist_params, spec.std, action)
    raise ValueError("scalar head has no action distribution")


def deterministic_action(spec: MlpSpec, dist_params: np.ndarray) -> np.ndarray:
    if spec.head == "categorical":
        return np.argmax(dist_params, axis=-1)
    if spec.head == "gaussian":
        return np.tanh(dist_params)
    raise ValueError("scalar head has no action distribution")


# -- finite differences -----------------------------------------------------

@dataclass(frozen=True)
class GradCheck:
    max_rel_error: float
    index: int
    analytic: float
    numeric: float


def finite_diff_check(params: np.ndarray,
                      loss_fn: Callable[[np.ndarray], tuple[float, np.ndarray]],
                      h: float = 1e-5) -> GradCheck:
    """Compare ``loss_fn``'s analytic gradient with central differences.

    Error per coordinate is ``|analytic - numeric| / max(1, |numeric|)``.
    """
    if not h > 0:
        raise ValueError("step must be positive")
    params = np.array(params, dtype=np.float64)
    _, analytic = loss_fn(params.copy())
    analytic = np.asarray(analytic, dtype=np.float64).reshape(params.shape)
    flat = params.reshape(-1)
    numeric = np.empty(flat.size)
    for j in range(flat.size):
        plus = flat.copy()
        plus[j] += h
        minus = flat.copy()
        minus[j] -= h
        fp, _ = loss_fn(plus.reshape(params.shape))
        fm, _ = loss_fn(minus.reshape(params.shape))
        numeric[j] = (fp - fm) / (2 * h)
    a = analytic.reshape(-1)
    err = np.abs(a - numeric) / np.maximum(1.0, np.abs(numeric))
    j = int(np.argmax(err))
    return GradCheck(float(err[j]), j, float(a[j]), float(numeric[j]))


# -- serialization ----------------------------------------------------------
#
# A record is two text lines followed by raw data:
#   #paramvector v1
#   {"spec": {...}, "count": N, "length": P, "meta": {...}}
#   <N * P little-endian float64 values>
# Checkpoint files are concatenations of records.

_MAGIC = b"#paramvector v1\n"


def dump_record(out: io.BufferedIOBase, spec: MlpSpec | None, values: np.ndarray,
                **meta) -> None:
    values = np.atleast_2d(np.asarray(values, dtype=np.float64))
    header = {"spec": spec.to_dict() if spec else None, "count": values.shape[0],
              "length": values.shape[1], "meta": meta}
    if spec is not None and values.shape[1] != spec.n_params:
        raise ValueError("values do not match spec")
    out.write(_MAGIC)
    out.write(json.dumps(header, sort_keys=True).encode() + b"\n")
    out.write(values.astype("<f8").tobytes())


def load_record(inp: io.BufferedIOBase) -> tuple[MlpSpec | None, np.ndarray, dict] | None:
    magic = inp.readline()
    if not magic:
        return None
    if magic != _MAGIC:
        raise ValueError(f"bad record header {magic!r}")
    header = json.loads(inp.readline())
    count, length = header["count"], header["length"]
    raw = inp.read(8 * count * length)
    if len(raw) != 8 * count * length:
        raise ValueError("truncated parameter record")
    values = np.frombuffer(raw, dtype="<f8").astype(np.float64).reshape(count, length)
    spec = MlpSpec.from_dict(header["spec"]) if header["spec"] else None
    return spec, values, header["meta"]


def dumps_params(spec: MlpSpec, params: np.ndarray) -> bytes:
    buf = io.BytesIO()
    dump_record(buf, spec, params)
    return buf.getvalue()


def loads_params(data: bytes) -> tuple[MlpSpec, np.ndarray]:
    spec, values, _ = load_record(io.BytesIO(data))
    return spec, values[0]

