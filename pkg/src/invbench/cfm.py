"""Conditional flow matching: a time/condition-dependent vector field trained
by regression on linear interpolation paths, sampled via fixed-step RK4."""

from __future__ import annotations

import json
from dataclasses import dataclass
from pathlib import Path

import numpy as np

from . import autodiff as ad
from . import nn
from .autodiff import Tensor
from .errors import DivergenceError, NumericError, RangeError
from .problem import Dataset, snap_h

DIM = 6
LABEL_DIM = 3

# fixed affine condition scaling: label ranges of the design space mapped to
# roughly [-1, 1] so all three conditioning coordinates carry comparable signal
LABEL_LOC = np.array([0.10, 0.040, 0.0])
LABEL_SCALE = np.array([0.08, 0.010, 1.0])


@dataclass
class CFMConfig:
    hidden: tuple = (500, 500, 500, 500, 500)
    activation: str = "selu"
    epochs: int = 4800
    lr: float = 1e-3
    lr_drops: tuple = (1600, 3200)
    batch_size: int = 500
    integration_steps: int = 100
    ema_decay: float = 0.999  # 0 disables weight averaging


class VectorFieldNet:
    """MLP field v(x, t, y): R^6 x [0,1] x R^3 -> R^6."""

    def __init__(self, config: CFMConfig | None = None, seed: int = 0):
        self.config = config or CFMConfig()
        rng = np.random.default_rng([seed, 0])
        dims = [DIM + 1 + LABEL_DIM, *self.config.hidden, DIM]
        acts = [self.config.activation] * len(self.config.hidden) + ["linear"]
        self.net = nn.MLP(dims, acts, rng=rng)
        self.seed = seed

    def forward(self, x, t, y) -> Tensor:
        """Graph-recording evaluation; ``t`` is scalar or (n, 1)."""
        x = ad.as_tensor(x)
        n = x.shape[0]
        t_arr = np.broadcast_to(np.asarray(t, dtype=np.float64).reshape(-1, 1), (n, 1))
        y_arr = np.broadcast_to(np.asarray(y, dtype=np.float64).reshape(-1, LABEL_DIM),
                                (n, LABEL_DIM))
        y_arr = (y_arr - LABEL_LOC) / LABEL_SCALE
        inp = ad.concat([x, Tensor(t_arr.copy()), Tensor(y_arr)], axis=1)
        return self.net.forward(inp)

    def __call__(self, x: np.ndarray, t: float, y: np.ndarray) -> np.ndarray:
        with ad.no_grad():
            return self.forward(x, t, y).data

    def generate(self, y_target, n: int, rng: np.random.Generator,
                 steps: int | None = None) -> np.ndarray:
        if n == 0:
            return np.empty((0, DIM))
        z0 = rng.standard_normal((n, DIM))
        y = np.repeat(np.asarray(y_target, dtype=np.float64).reshape(1, LABEL_DIM), n, axis=0)
        return integrate(self, y, z0, steps or self.config.integration_steps)

    def save(self, directory):
        directory = Path(directory)
        directory.mkdir(parents=True, exist_ok=True)
        nn.save_mlp(self.net, directory / "field.json")
        with open(directory / "manifest.json", "w") as fh:
            json.dump({"config": self.config.__dict__ | {
                           "hidden": list(self.config.hidden),
                           "lr_drops": list(self.config.lr_drops)},
                       "seed": self.seed}, fh, indent=2)

    @classmethod
    def load(cls, directory) -> "VectorFieldNet":
        directory = Path(directory)
        with open(directory / "manifest.json") as fh:
            manifest = json.load(fh)
        cfg_d = manifest["config"]
        cfg = CFMConfig(**{**cfg_d, "hidden": tuple(cfg_d["hidden"]),
                           "lr_drops": tuple(cfg_d["lr_drops"])})
        model = cls(cfg, seed=manifest["seed"])
        model.net = nn.load_mlp(directory / "field.json")
        return model


def sample_path(x0, x1, t):
    """Linear interpolation x_t = t*x1 + (1-t)*x0."""
    t = np.asarray(t, dtype=np.float64)
    if np.any(t < 0) or np.any(t > 1):
        raise RangeError("path time outside [0,1]")
    x0 = np.asarray(x0, dtype=np.float64)
    x1 = np.asarray(x1, dtype=np.float64)
    return t * x1 + (1 - t) * x0


def target_field(x0, x1):
    """Conditional target field u = x1 - x0 (time-independent)."""
    return np.asarray(x1, dtype=np.float64) - np.asarray(x0, dtype=np.float64)


def cfm_loss(model: VectorFieldNet, x1, y, rng: np.random.Generator) -> Tensor:
    """Mean per-sample squared norm ||v(x_t, t, y) - (x1 - x0)||^2 with
    x0 ~ N(0, I) and t ~ U[0,1]."""
    x1 = np.asarray(x1, dtype=np.float64)
    n = x1.shape[0]
    x0 = rng.standard_normal(x1.shape)
    t = rng.uniform(size=(n, 1))
    xt = sample_path(x0, x1, t)
    pred = model.forward(xt, t, y)
    err = ad.add(pred, -target_field(x0, x1))
    return ad.mean(ad.sum_(ad.square(err), axis=1))


def integrate(field, y, z0, steps: int, raw: bool = False) -> np.ndarray:
    """Fixed-step RK4 for dx/dt = field(x, t, y) from t=0 to 1.

    ``field`` is any callable (x, t, y) -> dx/dt over a batch.  The result is
    clipped to the design domain unless ``raw`` is set.
    """
    if steps < 1:
        raise ValueError("steps must be >= 1")
    x = np.asarray(z0, dtype=np.float64).copy()
    y = np.asarray(y, dtype=np.float64)
    h = 1.0 / steps
    for i in range(steps):
        t = i * h
        k1 = field(x, t, y)
        k2 = field(x + 0.5 * h * k1, t + 0.5 * h, y)
        k3 = field(x + 0.5 * h * k2, t + 0.5 * h, y)
        k4 = field(x + h * k3, t + h, y)
        x = x + (h / 6.0) * (k1 + 2 * k2 + 2 * k3 + k4)
        if not np.isfinite(x).all():
            raise NumericError("ODE state became non-finite")
    if raw:
        return x
    x = np.clip(x, 0.0, 1.0)
    x[:, 1] = snap_h(x[:, 1])
    return x


def train_cfm(dataset: Dataset, config: CFMConfig | None = None, seed: int = 0,
              log=None) -> VectorFieldNet:
    if len(dataset) == 0:
        raise ValueError("empty dataset")
    cfg = config or CFMConfig()
    model = VectorFieldNet(cfg, seed=seed)
    opt = nn.Adam(model.net.parameters(), lr=cfg.lr)
    rng = np.random.default_rng([seed, 1])
    n = len(dataset)
    batch = min(cfg.batch_size, n)
    params = model.net.parameters()
    ema = [p.data.copy() for p in params] if cfg.ema_decay > 0 else None
    for epoch in range(cfg.epochs):
        opt.set_lr(cfg.lr * (0.1 ** sum(epoch >= d for d in cfg.lr_drops)))
        order = rng.permutation(n)
        for start in range(0, n - batch + 1, batch):
            idx = order[start:start + batch]
            loss = cfm_loss(model, dataset.x[idx], dataset.y[idx], rng)
            if not np.isfinite(loss.item()):
                raise DivergenceError(f"CFM loss NaN at epoch {epoch}")
            opt.zero_grad()
            ad.backward(loss, params)
            opt.step()
            if ema is not None:
                d_ = cfg.ema_decay
                for e, p in zip(ema, params):
                    e *= d_
                    e += (1.0 - d_) * p.data
        if log is not None and epoch % max(1, cfg.epochs // 20) == 0:
            log(epoch, loss.item())
    if ema is not None:
        for e, p in zip(ema, params):
            p.data = e
    return model
