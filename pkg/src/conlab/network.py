"""Minimal feed-forward network stack on plain numpy arrays.

One :class:`Network` models a single scalar-output head: an input layer,
a stack of equally treated hidden layers with a selectable activation,
and a linear output layer (internal variables are unbounded, so the
head must not squash).  Besides the forward pass the module provides

* exact reverse-mode gradients of any batch-scalar loss w.r.t. all
  weights and biases (:func:`backprop` / :func:`param_gradients`),
* the forward-mode Jacobian of the outputs w.r.t. the inputs
  (:func:`input_jacobian`), which tangent operators are built from,
* a reverse sweep through the forward-mode pass
  (:func:`backprop_with_input_derivative`) for losses that contain the
  input derivative of the network itself,
* a standard bias-corrected Adam update.

Everything is deterministic: initialisation draws from a seeded
generator and no call mutates a network in place.
"""

import math
from dataclasses import dataclass, field
from typing import List

import numpy as np

from .errors import DimensionMismatchError, InvalidShapeError, UnknownKindError

__all__ = [
    "ACTIVATIONS",
    "Network",
    "AdamState",
    "TrainingConfig",
    "activation",
    "activation_prime",
    "activation_second",
    "init_network",
    "forward",
    "forward_batch",
    "backprop",
    "param_gradients",
    "forward_with_input_tangent",
    "backprop_with_tangent",
    "input_jacobian",
    "input_jacobian_batch",
    "zero_grads",
    "adam_init",
    "adam_update",
]

ACTIVATIONS = ("relu", "tanh", "sigmoid", "softplus", "swish")


# --------------------------------------------------------------------------
# activations
# --------------------------------------------------------------------------

def _sigmoid(x):
    # Split by sign to avoid overflow in exp for large |x|.
    out = np.empty_like(x, dtype=float)
    pos = x >= 0
    out[pos] = 1.0 / (1.0 + np.exp(-x[pos]))
    ex = np.exp(x[~pos])
    out[~pos] = ex / (1.0 + ex)
    return out


def _softplus(x):
    return np.logaddexp(0.0, x)


def activation(kind, x, r=1.0):
    """Activation value. ``r`` is the sharpness of the swish gate."""
    x = np.asarray(x, dtype=float)
    if kind == "relu":
        return np.maximum(x, 0.0)
    if kind == "tanh":
        return np.tanh(x)
    if kind == "sigmoid":
        return _sigmoid(x)
    if kind == "softplus":
        return _softplus(x)
    if kind == "swish":
        return x * _sigmoid(r * x)
    raise UnknownKindError(f"unknown activation {kind!r}, expected one of {ACTIVATIONS}")


def activation_prime(kind, x, r=1.0):
    """First derivative; the relu subgradient at 0 is taken as 0."""
    x = np.asarray(x, dtype=float)
    if kind == "relu":
        return (x > 0.0).astype(float)
    if kind == "tanh":
        t = np.tanh(x)
        return 1.0 - t * t
    if kind == "sigmoid":
        s = _sigmoid(x)
        return s * (1.0 - s)
    if kind == "softplus":
        return _sigmoid(x)
    if kind == "swish":
        s = _sigmoid(r * x)
        return s + r * x * s * (1.0 - s)
    raise UnknownKindError(f"unknown activation {kind!r}, expected one of {ACTIVATIONS}")


def activation_second(kind, x, r=1.0):
    """Second derivative (zero almost everywhere for relu)."""
    x = np.asarray(x, dtype=float)
    if kind == "relu":
        return np.zeros_like(x)
    if kind == "tanh":
        t = np.tanh(x)
        return -2.0 * t * (1.0 - t * t)
    if kind == "sigmoid":
        s = _sigmoid(x)
        return s * (1.0 - s) * (1.0 - 2.0 * s)
    if kind == "softplus":
        s = _sigmoid(x)
        return s * (1.0 - s)
    if kind == "swish":
        s = _sigmoid(r * x)
        sp = s * (1.0 - s)
        spp = sp * (1.0 - 2.0 * s)
        return 2.0 * r * sp + r * r * x * spp
    raise UnknownKindError(f"unknown activation {kind!r}, expected one of {ACTIVATIONS}")


# --------------------------------------------------------------------------
# network container
# --------------------------------------------------------------------------

@dataclass
class Network:
    """Weights and biases of one fully connected head.

    ``weights[l]`` maps layer l inputs to layer l outputs (rows index
    the receiving neuron), ``biases[l]`` matches its row count.  All
    layers up to the last apply ``hidden_activation``; the last layer
    is linear.
    """

    layer_sizes: List[int]
    weights: List[np.ndarray]
    biases: List[np.ndarray]
    hidden_activation: str = "relu"
    swish_r: float = 1.0

    @property
    def n_inputs(self):
        return self.layer_sizes[0]

    @property
    def n_outputs(self):
        return self.layer_sizes[-1]

    def copy(self):
        return Network(
            layer_sizes=list(self.layer_sizes),
            weights=[w.copy() for w in self.weights],
            biases=[b.copy() for b in self.biases],
            hidden_activation=self.hidden_activation,
            swish_r=self.swish_r,
        )


def init_network(layer_sizes, hidden_activation="relu", seed=0, swish_r=1.0):
    """Build a network with fan-balanced uniform weights and zero biases.

    Weights are drawn from U(-a, a) with a = sqrt(6 / (fan_in + fan_out)),
    which keeps signal scale roughly constant across the widths used
    here.  Deterministic for a given seed.
    """
    layer_sizes = [int(n) for n in layer_sizes]
    if len(layer_sizes) < 2:
        raise InvalidShapeError("a network needs at least an input and an output layer")
    if any(n < 1 for n in layer_sizes):
        raise InvalidShapeError("all layer widths must be at least 1")
    if hidden_activation not in ACTIVATIONS:
        raise UnknownKindError(
            f"unknown activation {hidden_activation!r}, expected one of {ACTIVATIONS}")
    rng = np.random.default_rng(seed)
    weights = []
    biases = []
    for fan_in, fan_out in zip(layer_sizes[:-1], layer_sizes[1:]):
        bound = math.sqrt(6.0 / (fan_in + fan_out))
        weights.append(rng.uniform(-bound, bound, size=(fan_out, fan_in)))
        biases.append(np.zeros(fan_out))
    return Network(
        layer_sizes=layer_sizes,
        weights=weights,
        biases=biases,
        hidden_activation=hidden_activation,
        swish_r=swish_r,
    )


# --------------------------------------------------------------------------
# forward / reverse passes
# --------------------------------------------------------------------------

def forward(net, x):
    """Evaluate the network on a single input vector."""
    x = np.asarray(x, dtype=float)
    if x.shape != (net.n_inputs,):
        raise DimensionMismatchError(
            f"expected input of shape ({net.n_inputs},), got {x.shape}")
    z = x
    kind, r = net.hidden_activation, net.swish_r
    for w, b in zip(net.weights[:-1], net.biases[:-1]):
        z = activation(kind, w @ z + b, r)
    return net.weights[-1] @ z + net.biases[-1]


def forward_batch(net, inputs):
    """Evaluate a batch; returns (outputs, cache) for a later reverse pass.

    ``inputs`` has shape (n, n_inputs); outputs (n, n_outputs).  The
    cache keeps per-layer pre-activations and activations.
    """
    inputs = np.asarray(inputs, dtype=float)
    if inputs.ndim != 2 or inputs.shape[1] != net.n_inputs:
        raise DimensionMismatchError(
            f"expected batch of shape (n, {net.n_inputs}), got {inputs.shape}")
    kind, r = net.hidden_activation, net.swish_r
    zs = [inputs]
    pre = []
    z = inputs
    for w, b in zip(net.weights[:-1], net.biases[:-1]):
        u = z @ w.T + b
        pre.append(u)
        z = activation(kind, u, r)
        zs.append(z)
    out = z @ net.weights[-1].T + net.biases[-1]
    return out, (zs, pre)


def backprop(net, cache, d_out):
    """Parameter gradients given d(loss)/d(outputs) for a cached batch.

    Returns (weight_grads, bias_grads) shaped like the network's
    parameter lists.
    """
    zs, pre = cache
    kind, r = net.hidden_activation, net.swish_r
    n_layers = len(net.weights)
    d_w = [None] * n_layers
    d_b = [None] * n_layers
    g = np.asarray(d_out, dtype=float)
    d_w[-1] = g.T @ zs[-1]
    d_b[-1] = g.sum(axis=0)
    g = g @ net.weights[-1]
    for layer in range(n_layers - 2, -1, -1):
        g = g * activation_prime(kind, pre[layer], r)
        d_w[layer] = g.T @ zs[layer]
        d_b[layer] = g.sum(axis=0)
        if layer > 0:
            g = g @ net.weights[layer]
    return d_w, d_b


def param_gradients(net, inputs, loss):
    """Reverse-mode gradients of a batch-scalar loss.

    ``loss`` maps the output batch to ``(value, d_value_d_outputs)``;
    the function returns ``(value, (weight_grads, bias_grads))``.
    """
    out, cache = forward_batch(net, inputs)
    value, d_out = loss(out)
    return value, backprop(net, cache, np.asarray(d_out, dtype=float))


def forward_with_input_tangent(net, inputs, input_index=0):
    """Forward pass plus its tangent along one input coordinate.

    Returns ``(outputs, d_outputs, cache)`` where ``d_outputs`` is
    d(outputs)/d(input_index) row by row and the cache serves
    :func:`backprop_with_tangent`.
    """
    inputs = np.asarray(inputs, dtype=float)
    if inputs.ndim != 2 or inputs.shape[1] != net.n_inputs:
        raise DimensionMismatchError(
            f"expected batch of shape (n, {net.n_inputs}), got {inputs.shape}")
    kind, r = net.hidden_activation, net.swish_r
    zs = [inputs]
    dzs = [np.zeros_like(inputs)]
    dzs[0][:, input_index] = 1.0
    pre = []
    dpre = []
    z, dz = zs[0], dzs[0]
    for w, b in zip(net.weights[:-1], net.biases[:-1]):
        u = z @ w.T + b
        du = dz @ w.T
        z = activation(kind, u, r)
        dz = activation_prime(kind, u, r) * du
        pre.append(u)
        dpre.append(du)
        zs.append(z)
        dzs.append(dz)
    out = z @ net.weights[-1].T + net.biases[-1]
    d_out = dz @ net.weights[-1].T
    return out, d_out, (zs, dzs, pre, dpre)


def backprop_with_tangent(net, cache, d_out, d_dout):
    """Parameter gradients of a loss seen through the tangent pass.

    ``d_out`` is the cotangent w.r.t. the outputs, ``d_dout`` the one
    w.r.t. their input derivative (both (n, n_out)).  Reverse-sweeping
    the forward-tangent program needs the activation's second
    derivative, so this is only meaningful for smooth activations.
    """
    zs, dzs, pre, dpre = cache
    kind, r = net.hidden_activation, net.swish_r
    n_layers = len(net.weights)
    d_w = [np.zeros_like(w) for w in net.weights]
    d_b = [np.zeros_like(b) for b in net.biases]

    lam = np.asarray(d_out, dtype=float)      # adjoint of z
    mu = np.asarray(d_dout, dtype=float)      # adjoint of dz
    d_w[-1] += lam.T @ zs[-1] + mu.T @ dzs[-1]
    d_b[-1] += lam.sum(axis=0)
    lam = lam @ net.weights[-1]
    mu = mu @ net.weights[-1]
    for layer in range(n_layers - 2, -1, -1):
        a1 = activation_prime(kind, pre[layer], r)
        a2 = activation_second(kind, pre[layer], r)
        u_bar = lam * a1 + mu * a2 * dpre[layer]
        du_bar = mu * a1
        d_w[layer] += u_bar.T @ zs[layer] + du_bar.T @ dzs[layer]
        d_b[layer] += u_bar.sum(axis=0)
        if layer > 0:
            lam = u_bar @ net.weights[layer]
            mu = du_bar @ net.weights[layer]
    return d_w, d_b


def input_jacobian(net, x):
    """Exact d(outputs)/d(inputs) at one point, shape (n_out, n_in)."""
    x = np.asarray(x, dtype=float)
    if x.shape != (net.n_inputs,):
        raise DimensionMismatchError(
            f"expected input of shape ({net.n_inputs},), got {x.shape}")
    kind, r = net.hidden_activation, net.swish_r
    z = x
    jac = np.eye(net.n_inputs)
    for w, b in zip(net.weights[:-1], net.biases[:-1]):
        u = w @ z + b
        jac = activation_prime(kind, u, r)[:, None] * (w @ jac)
        z = activation(kind, u, r)
    return net.weights[-1] @ jac


def input_jacobian_batch(net, inputs):
    """Batched input Jacobian, shape (n, n_out, n_in)."""
    inputs = np.asarray(inputs, dtype=float)
    if inputs.ndim != 2 or inputs.shape[1] != net.n_inputs:
        raise DimensionMismatchError(
            f"expected batch of shape (n, {net.n_inputs}), got {inputs.shape}")
    kind, r = net.hidden_activation, net.swish_r
    n = inputs.shape[0]
    z = inputs
    jac = np.broadcast_to(np.eye(net.n_inputs), (n, net.n_inputs, net.n_inputs)).copy()
    for w, b in zip(net.weights[:-1], net.biases[:-1]):
        u = z @ w.T + b
        jac = activation_prime(kind, u, r)[:, :, None] * np.einsum("ij,njk->nik", w, jac)
        z = activation(kind, u, r)
    return np.einsum("ij,njk->nik", net.weights[-1], jac)


# --------------------------------------------------------------------------
# Adam
# --------------------------------------------------------------------------

@dataclass
class AdamState:
    """First/second moment accumulators plus the step counter."""

    m_w: List[np.ndarray]
    m_b: List[np.ndarray]
    v_w: List[np.ndarray]
    v_b: List[np.ndarray]
    step: int = 0


@dataclass
class TrainingConfig:
    """Optimiser and loop settings shared by all training tasks.

    ``smoothing_r`` is the sharpness used when the loss switches are
    smoothed (swish gate / sigmoid sign); it has no effect in hard
    switch mode.
    """

    learning_rate: float = 1e-4
    epochs: int = 1000
    batch_size: int = 500
    seed: int = 0
    beta1: float = 0.9
    beta2: float = 0.999
    eps_adam: float = 1e-8
    smoothing_r: float = 300.0

    def __post_init__(self):
        if self.learning_rate <= 0.0:
            raise ValueError("learning rate must be positive")
        if self.epochs < 0:
            raise ValueError("epochs must be non-negative")
        if self.batch_size < 1:
            raise ValueError("batch size must be at least 1")


def zero_grads(net):
    """Zero-filled gradient lists shaped like ``net``'s parameters."""
    return [np.zeros_like(w) for w in net.weights], [np.zeros_like(b) for b in net.biases]


def adam_init(net):
    """Fresh Adam state matching the network's parameter shapes."""
    return AdamState(
        m_w=[np.zeros_like(w) for w in net.weights],
        m_b=[np.zeros_like(b) for b in net.biases],
        v_w=[np.zeros_like(w) for w in net.weights],
        v_b=[np.zeros_like(b) for b in net.biases],
    )


def adam_update(net, grads, state, cfg):
    """One bias-corrected Adam step; returns (new_net, new_state).

    Neither the incoming network nor state is mutated.
    """
    d_w, d_b = grads
    t = state.step + 1
    b1, b2, eps = cfg.beta1, cfg.beta2, cfg.eps_adam
    corr1 = 1.0 - b1 ** t
    corr2 = 1.0 - b2 ** t
    new_w, new_b = [], []
    m_w, m_b, v_w, v_b = [], [], [], []
    for w, g, m, v in zip(net.weights, d_w, state.m_w, state.v_w):
        m = b1 * m + (1.0 - b1) * g
        v = b2 * v + (1.0 - b2) * g * g
        new_w.append(w - cfg.learning_rate * (m / corr1) / (np.sqrt(v / corr2) + eps))
        m_w.append(m)
        v_w.append(v)
    for b, g, m, v in zip(net.biases, d_b, state.m_b, state.v_b):
        m = b1 * m + (1.0 - b1) * g
        v = b2 * v + (1.0 - b2) * g * g
        new_b.append(b - cfg.learning_rate * (m / corr1) / (np.sqrt(v / corr2) + eps))
        m_b.append(m)
        v_b.append(v)
    new_net = Network(
        layer_sizes=list(net.layer_sizes),
        weights=new_w,
        biases=new_b,
        hidden_activation=net.hidden_activation,
        swish_r=net.swish_r,
    )
    return new_net, AdamState(m_w=m_w, m_b=m_b, v_w=v_w, v_b=v_b, step=t)
