"""Minimal neural-network kernel backed by numpy float64.

Small fixed vocabulary, exact gradients: affine layers with tanh/identity
activations, three output transforms (none, softmax, scaled tanh), focal and
MSE losses returning analytic gradients, a bias-corrected Adam optimizer, and
a central-finite-difference gradient checker. Everything is deterministic for
a fixed seed; all arithmetic is 64-bit so gradient checks at 1e-4 relative
tolerance are meaningful.

Parameter sets are plain ``dict[str, np.ndarray]`` keyed ``W0, b0, W1, ...``
per layer. Weights are (fan_in, fan_out); inputs are row vectors, so a batch
is (B, fan_in) and ``y = x @ W + b``.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Callable

import numpy as np

Params = dict[str, np.ndarray]

HIDDEN_ACTIVATIONS = ("tanh", "identity")
OUTPUT_TRANSFORMS = ("none", "softmax", "scaled_tanh")


@dataclass(frozen=True)
class MlpSpec:
    """Architecture of one multi-layer perceptron.

    ``widths`` lists (input, hidden..., output) sizes; the hidden activation
    applies to every layer but the last, which gets ``output`` instead.
    ``output_scale`` is the bound s of the scaled tanh, y = s * tanh(z).
    """

    widths: tuple[int, ...]
    hidden: str = "tanh"
    output: str = "none"
    output_scale: float = 1.0

    def __post_init__(self) -> None:
        if len(self.widths) < 2 or any(w < 1 for w in self.widths):
            raise ValueError(f"bad layer widths: {self.widths}")
        if self.hidden not in HIDDEN_ACTIVATIONS:
            raise ValueError(f"unknown hidden activation: {self.hidden}")
        if self.output not in OUTPUT_TRANSFORMS:
            raise ValueError(f"unknown output transform: {self.output}")
        if self.output == "scaled_tanh" and self.output_scale <= 0:
            raise ValueError("scaled_tanh needs a positive output_scale")

    @property
    def n_layers(self) -> int:
        return len(self.widths) - 1

    def param_shapes(self) -> dict[str, tuple[int, ...]]:
        shapes: dict[str, tuple[int, ...]] = {}
        for l in range(self.n_layers):
            shapes[f"W{l}"] = (self.widths[l], self.widths[l + 1])
            shapes[f"b{l}"] = (self.widths[l + 1],)
        return shapes


def xavier_uniform(shape: tuple[int, int], rng: np.random.Generator) -> np.ndarray:
    fan_in, fan_out = shape
    bound = np.sqrt(6.0 / (fan_in + fan_out))
    return rng.uniform(-bound, bound, size=shape)


def init_mlp_params(
    spec: MlpSpec,
    rng: np.random.Generator,
    layer_init: dict[int, str] | None = None,
) -> Params:
    """Allocate parameters: Xavier-uniform weights, zero biases.

    ``layer_init`` overrides individual layers: "zero" pins W and b to zero,
    "identity" pins a square W to the identity (bias zero).
    """
    overrides = layer_init or {}
    params: Params = {}
    for l in range(spec.n_layers):
        shape = (spec.widths[l], spec.widths[l + 1])
        mode = overrides.get(l, "xavier")
        if mode == "xavier":
            w = xavier_uniform(shape, rng)
        elif mode == "zero":
            w = np.zeros(shape)
        elif mode == "identity":
            if shape[0] != shape[1]:
                raise ValueError(f"identity init needs a square layer, got {shape}")
            w = np.eye(shape[0])
        else:
            raise ValueError(f"unknown layer init: {mode}")
        params[f"W{l}"] = w
        params[f"b{l}"] = np.zeros(shape[1])
    return params


def softmax(z: np.ndarray) -> np.ndarray:
    """Row-wise softmax with max subtraction for overflow safety."""
    z = np.asarray(z, dtype=np.float64)
    shifted = z - z.max(axis=-1, keepdims=True)
    e = np.exp(shifted)
    return e / e.sum(axis=-1, keepdims=True)


@dataclass
class MlpCache:
    """Intermediates retained by :func:`mlp_apply` for backprop."""

    spec: MlpSpec
    inputs: list[np.ndarray]  # input to each layer, (B, width_l)
    activations: list[np.ndarray]  # post-activation hidden outputs
    output: np.ndarray  # (B, out) after the output transform
    single: bool  # input arrived as a 1-D vector


def _as_batch(x: np.ndarray) -> tuple[np.ndarray, bool]:
    x = np.asarray(x, dtype=np.float64)
    if x.ndim == 1:
        return x[None, :], True
    if x.ndim == 2:
        return x, False
    raise ValueError(f"expected a vector or batch of vectors, got shape {x.shape}")


def mlp_apply(spec: MlpSpec, params: Params, x: np.ndarray) -> tuple[np.ndarray, MlpCache]:
    """Run the affine+activation composition; cache intermediates.

    Accepts a single vector (width_in,) or a batch (B, width_in); the output
    matches (single vectors come back as vectors).
    """
    xb, single = _as_batch(x)
    if xb.shape[1] != spec.widths[0]:
        raise ValueError(f"input width {xb.shape[1]} != spec input {spec.widths[0]}")
    inputs: list[np.ndarray] = []
    activations: list[np.ndarray] = []
    h = xb
    for l in range(spec.n_layers):
        inputs.append(h)
        z = h @ params[f"W{l}"] + params[f"b{l}"]
        if l < spec.n_layers - 1:
            h = np.tanh(z) if spec.hidden == "tanh" else z
            activations.append(h)
        else:
            if spec.output == "softmax":
                y = softmax(z)
            elif spec.output == "scaled_tanh":
                y = spec.output_scale * np.tanh(z)
            else:
                y = z
    cache = MlpCache(spec, inputs, activations, y, single)
    return (y[0] if single else y), cache


def mlp_backprop(
    spec: MlpSpec, params: Params, cache: MlpCache, d_out: np.ndarray
) -> tuple[Params, np.ndarray]:
    """Exact reverse-mode gradients of :func:`mlp_apply`.

    Returns (parameter gradients, gradient w.r.t. the input). For a softmax
    output the upstream gradient must already be w.r.t. the pre-softmax
    logits (the losses in this module hand that back directly).
    """
    if cache.spec is not spec and cache.spec != spec:
        raise ValueError("cache does not belong to this spec")
    if len(cache.inputs) != spec.n_layers:
        raise ValueError("stale cache: layer count mismatch")
    g, single = _as_batch(d_out)
    if g.shape != cache.output.shape:
        raise ValueError(f"upstream gradient shape {g.shape} != output {cache.output.shape}")

    grads: Params = {}
    for l in range(spec.n_layers - 1, -1, -1):
        if l == spec.n_layers - 1:
            if spec.output == "scaled_tanh":
                s = spec.output_scale
                dz = g * (s - cache.output**2 / s)
            else:  # "none", or "softmax" with logit-space upstream gradient
                dz = g
        else:
            a = cache.activations[l]
            dz = g * (1.0 - a**2) if spec.hidden == "tanh" else g
        x_l = cache.inputs[l]
        if x_l.shape[1] != params[f"W{l}"].shape[0]:
            raise ValueError("stale cache: input width mismatch")
        grads[f"W{l}"] = x_l.T @ dz
        grads[f"b{l}"] = dz.sum(axis=0)
        g = dz @ params[f"W{l}"].T
    return grads, (g[0] if cache.single else g)


# ---------------------------------------------------------------------------
# Losses


def _check_probs(probs: np.ndarray) -> None:
    sums = probs.sum(axis=-1)
    if np.any(np.abs(sums - 1.0) > 1e-6):
        raise ValueError("probabilities are not normalized (|sum - 1| > 1e-6)")


def focal_loss_batch(
    probs: np.ndarray,
    targets: np.ndarray,
    alpha: np.ndarray,
    gamma: float,
) -> tuple[float, np.ndarray]:
    """Mean focal loss over a batch plus its gradient w.r.t. the logits.

    FL(p_t) = -alpha_t * (1 - p_t)^gamma * log(p_t) with p = softmax(z).
    ``probs`` is (B, K) softmax output, ``targets`` (B,) class indices,
    ``alpha`` a positive (K,) class weighting. gamma = 0 with unit alpha
    reduces to plain cross-entropy.
    """
    probs = np.asarray(probs, dtype=np.float64)
    if probs.ndim != 2:
        raise ValueError("probs must be (B, K)")
    _check_probs(probs)
    alpha = np.asarray(alpha, dtype=np.float64)
    if alpha.shape != (probs.shape[1],) or np.any(alpha <= 0):
        raise ValueError("alpha must be a positive vector of length K")
    if gamma < 0:
        raise ValueError("gamma must be >= 0")
    targets = np.asarray(targets)
    b = probs.shape[0]
    rows = np.arange(b)
    pt = np.clip(probs[rows, targets], 1e-300, 1.0)
    at = alpha[targets]
    one_minus = 1.0 - pt
    w = one_minus**gamma
    loss = float(np.mean(-at * w * np.log(pt)))

    # dL/dz_j = alpha_t (p_j - delta_tj) (w - u),
    # u = gamma * p_t * (1-p_t)^(gamma-1) * log(p_t); u -> 0 as p_t -> 1.
    if gamma == 0.0:
        u = np.zeros_like(pt)
    else:
        safe = np.where(one_minus > 0.0, one_minus, 1.0)
        u = np.where(one_minus > 0.0, gamma * pt * safe ** (gamma - 1.0) * np.log(pt), 0.0)
    factor = at * (w - u)  # (B,)
    delta = np.zeros_like(probs)
    delta[rows, targets] = 1.0
    d_logits = factor[:, None] * (probs - delta) / b
    return loss, d_logits


def focal_loss(
    probs: np.ndarray, target: int, alpha: np.ndarray, gamma: float
) -> tuple[float, np.ndarray]:
    """Single-sample focal loss; returns (loss, dLoss/dLogits)."""
    probs = np.asarray(probs, dtype=np.float64)
    loss, d = focal_loss_batch(probs[None, :], np.array([target]), alpha, gamma)
    return loss, d[0]


def mse_loss_batch(pred: np.ndarray, target: np.ndarray) -> tuple[float, np.ndarray]:
    """Mean over samples of the per-sample componentwise MSE.

    Gradient w.r.t. pred is 2/(n*B) * (pred - target) for n components.
    """
    pred = np.asarray(pred, dtype=np.float64)
    target = np.asarray(target, dtype=np.float64)
    if pred.shape != target.shape or pred.ndim != 2:
        raise ValueError(f"pred/target must be matching (B, n), got {pred.shape} / {target.shape}")
    diff = pred - target
    b, n = pred.shape
    loss = float(np.sum(diff**2) / (b * n))
    return loss, 2.0 * diff / (b * n)


def mse_loss(pred: np.ndarray, target: np.ndarray) -> tuple[float, np.ndarray]:
    """Single-sample MSE: mean of squared componentwise differences."""
    pred = np.asarray(pred, dtype=np.float64)
    target = np.asarray(target, dtype=np.float64)
    loss, d = mse_loss_batch(pred[None, :], target[None, :])
    return loss, d[0]


# ---------------------------------------------------------------------------
# Adam


@dataclass
class AdamState:
    """Optimizer state: step count plus moment accumulators shaped like the
    parameters they update."""

    lr: float = 1e-3
    beta1: float = 0.9
    beta2: float = 0.999
    eps: float = 1e-8
    step: int = 0
    m: Params = field(default_factory=dict)
    v: Params = field(default_factory=dict)


def adam_init(
    params: Params,
    lr: float = 1e-3,
    beta1: float = 0.9,
    beta2: float = 0.999,
    eps: float = 1e-8,
) -> AdamState:
    state = AdamState(lr=lr, beta1=beta1, beta2=beta2, eps=eps)
    state.m = {k: np.zeros_like(p) for k, p in params.items()}
    state.v = {k: np.zeros_like(p) for k, p in params.items()}
    return state


def adam_step(params: Params, grads: Params, state: AdamState) -> tuple[Params, AdamState]:
    """Standard bias-corrected Adam update, in place on ``params``."""
    state.step += 1
    t = state.step
    c1 = 1.0 - state.beta1**t
    c2 = 1.0 - state.beta2**t
    for name, p in params.items():
        g = grads[name]
        if g.shape != p.shape:
            raise ValueError(f"gradient shape {g.shape} != param shape {p.shape} for {name}")
        m = state.m[name]
        v = state.v[name]
        m *= state.beta1
        m += (1.0 - state.beta1) * g
        v *= state.beta2
        v += (1.0 - state.beta2) * g**2
        p -= state.lr * (m / c1) / (np.sqrt(v / c2) + state.eps)
    return params, state


# ---------------------------------------------------------------------------
# Finite-difference gradient verification


@dataclass(frozen=True)
class GradCheckReport:
    max_rel_error: float
    tolerance: float
    checked_coords: int
    total_coords: int
    worst: tuple[str, int, float, float] | None  # (param, flat index, analytic, numeric)

    @property
    def passed(self) -> bool:
        return self.max_rel_error < self.tolerance


def gradient_check(
    loss_and_grads: Callable[[Params], tuple[float, Params]],
    params: Params,
    tolerance: float = 1e-4,
    eps: float = 1e-5,
    max_coords: int = 10_000,
    seed: int = 0,
) -> GradCheckReport:
    """Compare analytic gradients against central finite differences.

    The closure evaluates (loss, gradients) at given parameters. Every
    coordinate is perturbed by +/- eps; above ``max_coords`` total
    coordinates a seeded random subset is checked instead. The relative
    error denominator is floored at 1e-4 so near-zero coordinates are
    compared absolutely at tolerance * 1e-4.
    """
    _, analytic = loss_and_grads(params)
    names = sorted(params)
    coords = [(name, i) for name in names for i in range(params[name].size)]
    total = len(coords)
    if total > max_coords:
        rng = np.random.default_rng(seed)
        picked = rng.choice(total, size=max_coords, replace=False)
        coords = [coords[int(i)] for i in sorted(picked)]

    max_err = 0.0
    worst = None
    for name, i in coords:
        flat = params[name].reshape(-1)
        orig = flat[i]
        flat[i] = orig + eps
        up, _ = loss_and_grads(params)
        flat[i] = orig - eps
        down, _ = loss_and_grads(params)
        flat[i] = orig
        numeric = (up - down) / (2.0 * eps)
        a = float(analytic[name].reshape(-1)[i])
        err = abs(a - numeric) / max(abs(a), abs(numeric), 1e-4)
        if err > max_err:
            max_err = err
            worst = (name, i, a, float(numeric))
    return GradCheckReport(max_err, tolerance, len(coords), total, worst)
