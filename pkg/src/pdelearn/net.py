"""Fully-connected network u(x,t) ~ NN(x,t) with sum-of-squares training.

The network is a plain numpy MLP: hidden layers z_l = act(W_l z_{l-1} + b_l)
and a final affine map with no activation.  Training minimizes the plain
sum of squared residuals over the sample set (not the mean) with Adam;
an optional quasi-Newton refinement stage (L-BFGS on the same objective)
can be enabled when a rough Adam solution is not accurate enough.

Inputs are affinely mapped to [-1, 1]^2 before the first layer by
default; the map is stored on the network and the derivative modules
undo it by the chain rule, so everything downstream works in problem
units.
"""

import copy
from dataclasses import dataclass, field

import numpy as np
from scipy.optimize import minimize


class TrainingError(RuntimeError):
    """Training loss became non-finite; .step holds the Adam step index."""

    def __init__(self, message, step):
        super().__init__(message)
        self.step = step


ACTIVATIONS = ("tanh", "sin")


@dataclass
class Network:
    """Weights, biases, activation, and the input-scaling box.

    layer_sizes runs input(2) .. hidden .. output(1).  weights[l] has
    shape (layer_sizes[l+1], layer_sizes[l]).  input_box is
    (x_lo, x_hi, t_lo, t_hi) or None for unscaled inputs.
    """

    layer_sizes: tuple
    activation: str
    weights: list = field(default_factory=list)
    biases: list = field(default_factory=list)
    input_box: tuple | None = None
    freq_factor: float = 1.0

    def copy(self) -> "Network":
        return copy.deepcopy(self)

    @property
    def n_params(self) -> int:
        return sum(w.size for w in self.weights) + sum(b.size for b in self.biases)


@dataclass
class TrainConfig:
    learning_rate: float = 1e-3
    beta1: float = 0.9
    beta2: float = 0.999
    eps: float = 1e-8
    iterations: int = 50000
    batch: int | None = None  # None = full batch
    seed: int = 0
    input_scaling: str = "unit_box"  # or "none"
    lbfgs_iterations: int = 0  # quasi-Newton refinement after Adam
    log_every: int = 100
    stop_window: int = 2000
    stop_delta: float = 1e-10

    def __post_init__(self):
        if not (0 < self.beta1 < 1 and 0 < self.beta2 < 1):
            raise ValueError("Adam betas must lie in (0, 1)")
        if self.learning_rate <= 0:
            raise ValueError("learning_rate must be positive")
        if self.input_scaling not in ("unit_box", "none"):
            raise ValueError(f"unknown input_scaling {self.input_scaling!r}")


def init(layer_sizes, activation="tanh", seed=0, freq_factor=1.0) -> Network:
    """Fresh network: weights ~ N(0, 1/fan_in), biases zero.

    For the sin activation the first-layer weights are multiplied by
    freq_factor, which sets the base frequency content of the network.
    """
    layer_sizes = tuple(int(n) for n in layer_sizes)
    if len(layer_sizes) < 3:
        raise ValueError("need at least one hidden layer")
    if layer_sizes[0] != 2 or layer_sizes[-1] != 1:
        raise ValueError("network maps (x, t) to a scalar: sizes must be 2 .. 1")
    if any(n < 1 for n in layer_sizes):
        raise ValueError("all layer sizes must be >= 1")
    if activation not in ACTIVATIONS:
        raise ValueError(f"unknown activation {activation!r}")
    rng = np.random.default_rng(seed)
    weights, biases = [], []
    for fan_in, fan_out in zip(layer_sizes[:-1], layer_sizes[1:]):
        weights.append(rng.normal(0.0, 1.0 / np.sqrt(fan_in), (fan_out, fan_in)))
        biases.append(np.zeros(fan_out))
    if activation == "sin":
        weights[0] = weights[0] * freq_factor
    return Network(layer_sizes, activation, weights, biases, None, freq_factor)


def scale_inputs(net: Network, x, t):
    """Map problem-unit coordinates into the network's input box."""
    x = np.asarray(x, dtype=float)
    t = np.asarray(t, dtype=float)
    if net.input_box is None:
        return x, t
    x_lo, x_hi, t_lo, t_hi = net.input_box
    return 2 * (x - x_lo) / (x_hi - x_lo) - 1, 2 * (t - t_lo) / (t_hi - t_lo) - 1


def input_scale_factors(net: Network):
    """(dxhat/dx, dthat/dt) chain-rule factors of the input map."""
    if net.input_box is None:
        return 1.0, 1.0
    x_lo, x_hi, t_lo, t_hi = net.input_box
    return 2 / (x_hi - x_lo), 2 / (t_hi - t_lo)


def _act(net: Network, a):
    return np.tanh(a) if net.activation == "tanh" else np.sin(a)


def _act_deriv(net: Network, a, out):
    if net.activation == "tanh":
        return 1.0 - out**2
    return np.cos(a)


def _forward_all(net: Network, X):
    """Forward pass keeping layer inputs and preactivations for backprop."""
    zs = [X]
    pres = []
    z = X
    for W, b in zip(net.weights[:-1], net.biases[:-1]):
        a = z @ W.T + b
        z = _act(net, a)
        pres.append(a)
        zs.append(z)
    out = z @ net.weights[-1].T + net.biases[-1]
    return out[:, 0], zs, pres


def forward(net: Network, x, t):
    """Evaluate the network at problem-unit (x, t); shape follows inputs."""
    xs, ts = scale_inputs(net, x, t)
    X = np.column_stack([np.atleast_1d(xs).ravel(), np.atleast_1d(ts).ravel()])
    out, _, _ = _forward_all(net, X)
    if np.isscalar(x) or np.ndim(x) == 0:
        return float(out[0])
    return out.reshape(np.shape(x))


def loss(net: Network, samples) -> float:
    """Sum of squared residuals over the sample set."""
    if len(samples.u) == 0:
        raise ValueError("empty sample set")
    pred = forward(net, samples.x, samples.t)
    r = pred - samples.u
    return float(r @ r)


def _pack(net: Network):
    return np.concatenate([w.ravel() for w in net.weights] + list(net.biases))


def _unpack(net: Network, theta):
    o = 0
    for l, w in enumerate(net.weights):
        net.weights[l] = theta[o : o + w.size].reshape(w.shape)
        o += w.size
    for l, b in enumerate(net.biases):
        net.biases[l] = theta[o : o + b.size]
        o += b.size


def _loss_grad(net: Network, X, y):
    """Objective and flat gradient for the scaled design matrix X."""
    out, zs, pres = _forward_all(net, X)
    r = out - y
    L = float(r @ r)
    n_layers = len(net.weights)
    gws = [None] * n_layers
    gbs = [None] * n_layers
    delta = 2.0 * r[:, None]
    gws[-1] = delta.T @ zs[-1]
    gbs[-1] = delta.sum(axis=0)
    for l in range(n_layers - 2, -1, -1):
        delta = (delta @ net.weights[l + 1]) * _act_deriv(net, pres[l], zs[l + 1])
        gws[l] = delta.T @ zs[l]
        gbs[l] = delta.sum(axis=0)
    return L, np.concatenate([g.ravel() for g in gws] + gbs)


def train(net: Network, samples, config: TrainConfig):
    """Adam on the sum-of-squares loss; returns (trained copy, history).

    history is a list of (step, loss) pairs recorded every
    config.log_every steps plus the final step.  Full-batch runs stop
    early once the loss improves by less than config.stop_delta over
    config.stop_window steps.  If config.lbfgs_iterations > 0, an
    L-BFGS refinement of the same objective follows the Adam stage.
    """
    net = net.copy()
    if config.input_scaling == "unit_box" and net.input_box is None:
        x_lo, x_hi = float(np.min(samples.x)), float(np.max(samples.x))
        t_lo, t_hi = float(np.min(samples.t)), float(np.max(samples.t))
        if x_hi <= x_lo or t_hi <= t_lo:
            raise ValueError("samples must span a nondegenerate (x, t) box")
        net.input_box = (x_lo, x_hi, t_lo, t_hi)

    xs, ts = scale_inputs(net, samples.x, samples.t)
    X = np.column_stack([xs, ts])
    y = np.asarray(samples.u, dtype=float)

    theta = _pack(net)
    m = np.zeros_like(theta)
    v = np.zeros_like(theta)
    lr, b1, b2, eps = config.learning_rate, config.beta1, config.beta2, config.eps

    full_batch = config.batch is None or config.batch >= len(y)
    rng = np.random.default_rng(config.seed)
    perm = None
    cursor = 0

    history = []
    window_loss = None
    cur_loss = None
    last_step = 0
    for step in range(1, config.iterations + 1):
        last_step = step
        if full_batch:
            Xb, yb = X, y
        else:
            if perm is None or cursor + config.batch > len(y):
                perm = rng.permutation(len(y))
                cursor = 0
            idx = perm[cursor : cursor + config.batch]
            cursor += config.batch
            Xb, yb = X[idx], y[idx]
        _unpack(net, theta)
        L, g = _loss_grad(net, Xb, yb)
        if not np.isfinite(L):
            raise TrainingError(f"loss diverged at Adam step {step}", step)
        m = b1 * m + (1 - b1) * g
        v = b2 * v + (1 - b2) * g * g
        theta = theta - lr * (m / (1 - b1**step)) / (np.sqrt(v / (1 - b2**step)) + eps)
        cur_loss = L
        if step % config.log_every == 0 or step == config.iterations:
            history.append((step, L))
        if full_batch and step % config.stop_window == 0:
            if window_loss is not None and window_loss - L < config.stop_delta:
                break
            window_loss = L
    _unpack(net, theta)
    if cur_loss is not None and (not history or history[-1][0] != last_step):
        history.append((last_step, cur_loss))
    adam_steps = last_step

    if config.lbfgs_iterations > 0:
        evals = [0]

        def objective(th):
            _unpack(net, th)
            L, g = _loss_grad(net, X, y)
            evals[0] += 1
            if evals[0] % config.log_every == 0:
                history.append((adam_steps + evals[0], L))
            return L, g

        res = minimize(
            objective,
            _pack(net),
            jac=True,
            method="L-BFGS-B",
            options=dict(
                maxiter=config.lbfgs_iterations,
                maxfun=10 * config.lbfgs_iterations,
                ftol=1e-18,
                gtol=0.0,
                maxcor=20,
            ),
        )
        _unpack(net, res.x)
        history.append((adam_steps + evals[0], float(res.fun)))
    return net, history


def save_network(net: Network, path) -> None:
    from .grids import fmt

    lines = [
        "# network v1",
        "layer_sizes " + " ".join(str(n) for n in net.layer_sizes),
        f"activation {net.activation}",
        f"freq_factor {fmt(net.freq_factor)}",
    ]
    if net.input_box is None:
        lines.append("input_box none")
    else:
        lines.append("input_box " + " ".join(fmt(v) for v in net.input_box))
    for l, (W, b) in enumerate(zip(net.weights, net.biases)):
        lines.append(f"layer {l}")
        for row in W:
            lines.append("W " + " ".join(fmt(v) for v in row))
        lines.append("b " + " ".join(fmt(v) for v in b))
    with open(path, "w") as fh:
        fh.write("\n".join(lines) + "\n")


def load_network(path) -> Network:
    with open(path) as fh:
        magic = fh.readline().strip()
        if magic != "# network v1":
            raise ValueError(f"{path}: not a network file")
        layer_sizes = tuple(int(n) for n in fh.readline().split()[1:])
        activation = fh.readline().split()[1]
        freq_factor = float(fh.readline().split()[1])
        box_tok = fh.readline().split()[1:]
        input_box = None if box_tok == ["none"] else tuple(float(v) for v in box_tok)
        weights, biases = [], []
        rows = []
        for line in fh:
            parts = line.split()
            if parts[0] == "layer":
                rows = []
            elif parts[0] == "W":
                rows.append([float(v) for v in parts[1:]])
            elif parts[0] == "b":
                weights.append(np.array(rows))
                biases.append(np.array([float(v) for v in parts[1:]]))
    net = Network(layer_sizes, activation, weights, biases, input_box, freq_factor)
    return net
