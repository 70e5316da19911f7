"""Multilayer perceptrons, Adam, and checkpoint IO on top of the autodiff engine."""

from __future__ import annotations

import json
from dataclasses import dataclass, field

import numpy as np

from . import autodiff as ad
from .autodiff import Tensor
from .errors import CapabilityError, DomainError, NumericError, ShapeError

ACTIVATIONS = {
    "linear": lambda x, a: x,
    "relu": lambda x, a: ad.relu(x),
    "leaky_relu": lambda x, a: ad.leaky_relu(x, a),
    "selu": lambda x, a: ad.selu(x),
    "sigmoid": lambda x, a: ad.sigmoid(x),
    "tanh": lambda x, a: ad.tanh(x),
    "softmax": lambda x, a: ad.softmax(x),
}

# activations with an almost-everywhere-defined second derivative along the
# double-backprop path (ReLU/SeLU vjps use constant local slopes and are
# therefore excluded from gradient-penalty critics)
SECOND_ORDER_ACTIVATIONS = {"linear", "leaky_relu", "tanh", "sigmoid"}


def glorot_uniform(fan_in: int, fan_out: int, rng: np.random.Generator) -> np.ndarray:
    bound = np.sqrt(6.0 / (fan_in + fan_out))
    return rng.uniform(-bound, bound, size=(fan_in, fan_out))


@dataclass
class Layer:
    weight: Tensor
    bias: Tensor
    activation: str


class MLP:
    """Fully connected network: dims[0] -> ... -> dims[-1].

    ``activations`` has one tag per weight layer (len(dims) - 1).
    """

    def __init__(self, dims, activations, rng: np.random.Generator | None = None,
                 leaky_slope: float = 0.2, zero_init_last: bool = False):
        if len(activations) != len(dims) - 1:
            raise ShapeError("need one activation per layer")
        for act in activations:
            if act not in ACTIVATIONS:
                raise ValueError(f"unknown activation {act!r}")
        if rng is None:
            rng = np.random.default_rng(0)
        self.leaky_slope = leaky_slope
        self.layers: list[Layer] = []
        for i, act in enumerate(activations):
            fan_in, fan_out = dims[i], dims[i + 1]
            if zero_init_last and i == len(activations) - 1:
                w = np.zeros((fan_in, fan_out))
            else:
                w = glorot_uniform(fan_in, fan_out, rng)
            self.layers.append(
                Layer(Tensor(w, requires_grad=True),
                      Tensor(np.zeros(fan_out), requires_grad=True), act)
            )

    @property
    def input_dim(self) -> int:
        return self.layers[0].weight.shape[0]

    @property
    def output_dim(self) -> int:
        return self.layers[-1].weight.shape[1]

    def parameters(self) -> list[Tensor]:
        out = []
        for layer in self.layers:
            out.extend((layer.weight, layer.bias))
        return out

    def forward(self, x) -> Tensor:
        x = ad.as_tensor(x)
        if x.ndim != 2 or x.shape[1] != self.input_dim:
            raise ShapeError(
                f"expected batch of shape (n, {self.input_dim}), got {x.shape}")
        if not np.isfinite(x.data).all():
            raise DomainError("non-finite network input")
        for layer in self.layers:
            x = ACTIVATIONS[layer.activation](
                ad.add(ad.matmul(x, layer.weight), layer.bias), self.leaky_slope)
        return x

    __call__ = forward

    def predict(self, x: np.ndarray) -> np.ndarray:
        """Inference without graph recording."""
        with ad.no_grad():
            return self.forward(x).data


def input_gradient(mlp: MLP, x: Tensor) -> Tensor:
    """d(sum of outputs)/dx as a graph node, so a loss built from it
    backpropagates into the network parameters (double backprop)."""
    for layer in mlp.layers:
        if layer.activation not in SECOND_ORDER_ACTIVATIONS:
            raise CapabilityError(
                f"activation {layer.activation!r} unsupported on second-order paths")
    if not x.requires_grad:
        x = Tensor(x.data, requires_grad=True)
    out = mlp.forward(x)
    return ad.grad(ad.sum_(out), [x], create_graph=True)[0]


@dataclass
class AdamState:
    lr: float = 0.001
    beta1: float = 0.9
    beta2: float = 0.999
    eps: float = 1e-8
    t: int = 0
    m: list = field(default_factory=list)
    v: list = field(default_factory=list)


class Adam:
    """Bias-corrected Adam over a fixed parameter list."""

    def __init__(self, params, lr=0.001, betas=(0.9, 0.999), eps=1e-8):
        self.params = list(params)
        self.state = AdamState(lr=lr, beta1=betas[0], beta2=betas[1], eps=eps,
                               m=[np.zeros(p.shape) for p in self.params],
                               v=[np.zeros(p.shape) for p in self.params])

    def zero_grad(self):
        for p in self.params:
            p.grad = None

    def set_lr(self, lr: float):
        self.state.lr = lr

    def step(self):
        s = self.state
        for p in self.params:
            if p.grad is not None and not np.isfinite(p.grad).all():
                raise NumericError("NaN/inf gradient; update rejected")
        s.t += 1
        bc1 = 1.0 - s.beta1 ** s.t
        bc2 = 1.0 - s.beta2 ** s.t
        for i, p in enumerate(self.params):
            g = p.grad
            if g is None:
                g = np.zeros(p.shape)
            s.m[i] = s.beta1 * s.m[i] + (1.0 - s.beta1) * g
            s.v[i] = s.beta2 * s.v[i] + (1.0 - s.beta2) * g * g
            m_hat = s.m[i] / bc1
            v_hat = s.v[i] / bc2
            p.data = p.data - s.lr * m_hat / (np.sqrt(v_hat) + s.eps)


# -- checkpoints -----------------------------------------------------------
# JSON map {layer index -> weight/bias/activation/dims}; Python's repr-based
# float serialization round-trips binary64 exactly.

def mlp_to_dict(mlp: MLP) -> dict:
    return {
        "format": "invbench-mlp-v1",
        "leaky_slope": mlp.leaky_slope,
        "layers": {
            str(i): {
                "in": layer.weight.shape[0],
                "out": layer.weight.shape[1],
                "activation": layer.activation,
                "weight": layer.weight.data.tolist(),
                "bias": layer.bias.data.tolist(),
            }
            for i, layer in enumerate(mlp.layers)
        },
    }


def mlp_from_dict(d: dict) -> MLP:
    if d.get("format") != "invbench-mlp-v1":
        raise ValueError("unrecognized checkpoint format")
    idx = sorted(d["layers"], key=int)
    dims = [d["layers"][idx[0]]["in"]] + [d["layers"][i]["out"] for i in idx]
    acts = [d["layers"][i]["activation"] for i in idx]
    mlp = MLP(dims, acts, rng=np.random.default_rng(0),
              leaky_slope=d.get("leaky_slope", 0.2))
    for i, key in enumerate(idx):
        rec = d["layers"][key]
        w = np.asarray(rec["weight"], dtype=np.float64)
        b = np.asarray(rec["bias"], dtype=np.float64)
        if w.shape != mlp.layers[i].weight.shape:
            raise ShapeError("checkpoint dims inconsistent")
        mlp.layers[i].weight.data = w
        mlp.layers[i].bias.data = b
    return mlp


def save_mlp(mlp: MLP, path):
    with open(path, "w") as fh:
        json.dump(mlp_to_dict(mlp), fh)


def load_mlp(path) -> MLP:
    with open(path) as fh:
        return mlp_from_dict(json.load(fh))


def get_weights(mlp: MLP) -> list[np.ndarray]:
    return [p.data.copy() for p in mlp.parameters()]


def set_weights(mlp: MLP, weights) -> None:
    for p, w in zip(mlp.parameters(), weights):
        p.data = w.copy()
