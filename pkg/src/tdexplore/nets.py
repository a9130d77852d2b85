"""Feed-forward network core: manual backprop, Adam, and soft target updates.

All networks in this package are plain 2-hidden-layer MLPs, so instead of a
general autodiff graph this module implements reverse-mode gradients by hand
for one fixed topology. `backward` also returns the gradient with respect to
the *input*, which the deterministic-policy-gradient chain needs in order to
differentiate a critic through its action input and keep backpropagating into
the policy or explorer that produced the action.

Everything is float64; single vectors and (batch, dim) matrices are both
accepted. For batched calls, parameter gradients are summed over the batch
(scale the upstream by 1/N to get means).
"""

from dataclasses import dataclass

import numpy as np

from .errors import ConfigError, DivergenceError, ShapeError

HIDDEN_ACTIVATIONS = ("relu", "tanh")
OUTPUT_ACTIVATIONS = ("identity", "tanh", "scaled_tanh")


@dataclass
class Mlp:
    """Weights, biases, and activation spec of one feed-forward network.

    `weights[i]` has shape (layer_sizes[i+1], layer_sizes[i]); `biases[i]`
    has length layer_sizes[i+1]. `output_scale` only matters for the
    scaled_tanh output activation, whose components lie in [-scale, scale].
    """

    layer_sizes: list
    weights: list
    biases: list
    hidden_activation: str = "relu"
    output_activation: str = "identity"
    output_scale: float = 1.0

    @property
    def input_dim(self) -> int:
        return self.layer_sizes[0]

    @property
    def output_dim(self) -> int:
        return self.layer_sizes[-1]

    @property
    def hidden_sizes(self) -> tuple:
        return tuple(self.layer_sizes[1:-1])


@dataclass
class Gradients:
    """Per-parameter gradients mirroring an Mlp, plus the input gradient."""

    weights: list
    biases: list
    input_gradient: np.ndarray


def init_mlp(layer_sizes, rng: np.random.Generator, hidden_activation="relu",
             output_activation="identity", output_scale=1.0) -> Mlp:
    """Create an Mlp with uniform fan-in initialization.

    Weights and biases of each layer are sampled uniformly from
    [-1/sqrt(fan_in), +1/sqrt(fan_in)], which keeps initial outputs small.
    Deterministic given the generator state.
    """
    sizes = [int(s) for s in layer_sizes]
    if len(sizes) < 2 or any(s <= 0 for s in sizes):
        raise ConfigError(f"layer_sizes must be >= 2 positive integers, got {sizes}")
    if hidden_activation not in HIDDEN_ACTIVATIONS:
        raise ValueError(f"unknown hidden activation {hidden_activation!r}")
    if output_activation not in OUTPUT_ACTIVATIONS:
        raise ValueError(f"unknown output activation {output_activation!r}")
    weights, biases = [], []
    for fan_in, fan_out in zip(sizes[:-1], sizes[1:]):
        bound = 1.0 / np.sqrt(fan_in)
        weights.append(rng.uniform(-bound, bound, size=(fan_out, fan_in)))
        biases.append(rng.uniform(-bound, bound, size=fan_out))
    return Mlp(sizes, weights, biases, hidden_activation, output_activation,
               float(output_scale))


def copy_mlp(net: Mlp) -> Mlp:
    return Mlp(list(net.layer_sizes), [w.copy() for w in net.weights],
               [b.copy() for b in net.biases], net.hidden_activation,
               net.output_activation, net.output_scale)


def parameters(net: Mlp) -> list:
    """Flat parameter list [W0, b0, W1, b1, ...]; arrays are live views."""
    out = []
    for w, b in zip(net.weights, net.biases):
        out.append(w)
        out.append(b)
    return out


def gradient_list(grads: Gradients) -> list:
    """Gradients in the same interleaved order as `parameters`."""
    out = []
    for gw, gb in zip(grads.weights, grads.biases):
        out.append(gw)
        out.append(gb)
    return out


def _hidden_act(name, z):
    if name == "relu":
        return np.maximum(z, 0.0)
    return np.tanh(z)


def _hidden_act_deriv(name, z):
    if name == "relu":
        return (z > 0.0).astype(float)
    t = np.tanh(z)
    return 1.0 - t * t


def _as_batch(x, dim, what):
    x = np.asarray(x, dtype=float)
    single = x.ndim == 1
    if single:
        x = x[None, :]
    if x.ndim != 2 or x.shape[1] != dim:
        raise ShapeError(f"{what}: expected last dimension {dim}, got shape {x.shape}")
    return x, single


def forward(net: Mlp, x):
    """Evaluate the network on a vector or a (batch, input_dim) matrix."""
    h, single = _as_batch(x, net.input_dim, "forward input")
    last = len(net.weights) - 1
    for i, (w, b) in enumerate(zip(net.weights, net.biases)):
        z = h @ w.T + b
        if i < last:
            h = _hidden_act(net.hidden_activation, z)
        elif net.output_activation == "identity":
            h = z
        elif net.output_activation == "tanh":
            h = np.tanh(z)
        else:
            h = net.output_scale * np.tanh(z)
    return h[0] if single else h


def backward(net: Mlp, x, upstream) -> Gradients:
    """Reverse-mode gradients of `sum(upstream * forward(net, x))`.

    Returns parameter gradients (summed over the batch for matrix inputs)
    and the gradient with respect to the input, shaped like `x`.
    """
    h, single = _as_batch(x, net.input_dim, "backward input")
    g, gsingle = _as_batch(upstream, net.output_dim, "backward upstream")
    if single != gsingle or h.shape[0] != g.shape[0]:
        raise ShapeError("backward: input and upstream batch shapes disagree")

    # Forward pass, caching each layer's pre-activation input.
    inputs = []  # activation entering layer i
    zs = []      # pre-activation of layer i
    last = len(net.weights) - 1
    a = h
    for i, (w, b) in enumerate(zip(net.weights, net.biases)):
        inputs.append(a)
        z = a @ w.T + b
        zs.append(z)
        if i < last:
            a = _hidden_act(net.hidden_activation, z)

    if net.output_activation == "identity":
        dz = g
    elif net.output_activation == "tanh":
        t = np.tanh(zs[last])
        dz = g * (1.0 - t * t)
    else:
        t = np.tanh(zs[last])
        dz = g * net.output_scale * (1.0 - t * t)

    grad_w = [None] * len(net.weights)
    grad_b = [None] * len(net.biases)
    for i in range(last, -1, -1):
        grad_w[i] = dz.T @ inputs[i]
        grad_b[i] = dz.sum(axis=0)
        da = dz @ net.weights[i]
        if i > 0:
            dz = da * _hidden_act_deriv(net.hidden_activation, zs[i - 1])
    input_grad = da[0] if single else da
    return Gradients(grad_w, grad_b, input_grad)


def soft_update(target: Mlp, source: Mlp, tau: float) -> Mlp:
    """In-place convex update of every parameter: p' <- tau*p + (1-tau)*p'."""
    if target.layer_sizes != source.layer_sizes:
        raise ShapeError("soft_update: target and source shapes differ")
    for tw, sw in zip(target.weights, source.weights):
        tw *= 1.0 - tau
        tw += tau * sw
    for tb, sb in zip(target.biases, source.biases):
        tb *= 1.0 - tau
        tb += tau * sb
    return target


class Adam:
    """Adam over a fixed list of parameter arrays, with bias correction.

    The moment arrays are created at construction and must stay congruent
    with the parameter list passed to every `step` call. One `step` call
    advances `step_count` by exactly 1.
    """

    def __init__(self, params, learning_rate, beta1=0.9, beta2=0.999, epsilon=1e-8):
        self.learning_rate = float(learning_rate)
        self.beta1 = float(beta1)
        self.beta2 = float(beta2)
        self.epsilon = float(epsilon)
        self.step_count = 0
        self.first_moment = [np.zeros_like(p) for p in params]
        self.second_moment = [np.zeros_like(p) for p in params]

    def step(self, params, grads):
        if len(params) != len(self.first_moment):
            raise ShapeError("Adam.step: parameter list length changed")
        for g in grads:
            # a single reduction: any nan/inf entry poisons the sum
            if not np.isfinite(np.sum(g)):
                raise DivergenceError("non-finite gradient entries in Adam step")
        self.step_count += 1
        b1, b2 = self.beta1, self.beta2
        c1 = 1.0 - b1 ** self.step_count
        c2 = 1.0 - b2 ** self.step_count
        for p, g, m, v in zip(params, grads, self.first_moment, self.second_moment):
            if p.shape != g.shape:
                raise ShapeError(f"Adam.step: gradient shape {g.shape} != parameter shape {p.shape}")
            m *= b1
            m += (1.0 - b1) * g
            v *= b2
            v += (1.0 - b2) * g * g
            p -= self.learning_rate * (m / c1) / (np.sqrt(v / c2) + self.epsilon)


def adam_for_net(net: Mlp, learning_rate, **kw) -> Adam:
    return Adam(parameters(net), learning_rate, **kw)


def adam_step(net: Mlp, grads: Gradients, opt: Adam) -> None:
    """Apply one Adam update to the network's parameters in place."""
    opt.step(parameters(net), gradient_list(grads))


def clip_global_norm(grads, max_norm: float) -> float:
    """Scale a list of gradient arrays so their joint L2 norm is <= max_norm.

    Returns the pre-clip norm. No-op when already within the bound.
    """
    total = 0.0
    for g in grads:
        total += float(np.sum(g * g))
    norm = float(np.sqrt(total))
    if norm > max_norm and norm > 0.0:
        scale = max_norm / norm
        for g in grads:
            g *= scale
    return norm


def finite_diff_gradient(f, point, eps: float = 1e-5) -> np.ndarray:
    """Central-difference gradient of a scalar function of a vector."""
    if eps <= 0:
        raise ValueError("eps must be positive")
    x = np.asarray(point, dtype=float)
    grad = np.zeros_like(x)
    flat = x.ravel()
    gflat = grad.ravel()
    for i in range(flat.size):
        orig = flat[i]
        flat[i] = orig + eps
        fp = f(x)
        flat[i] = orig - eps
        fm = f(x)
        flat[i] = orig
        gflat[i] = (fp - fm) / (2.0 * eps)
    return grad
