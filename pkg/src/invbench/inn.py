"""Invertible neural network: affine coupling blocks with fixed coordinate
permutations, mapping designs x in R^6 to [labels y, latents z] in R^3 x R^3.

Trained by alternating a forward loss (label MSE + joint MMD) and a reverse
loss (design-space MMD) per batch.
"""

from __future__ import annotations

import json
from dataclasses import dataclass
from pathlib import Path

import numpy as np

from . import autodiff as ad
from . import nn
from .autodiff import Tensor
from .errors import DivergenceError
from .mmd import mmd2
from .problem import Dataset, snap_h

DIM = 6
LABEL_DIM = 3
SPLIT = 3


@dataclass
class INNConfig:
    blocks: int = 10
    subnet_hidden: tuple = (115, 115)
    clamp: float = 2.0
    lambda_x: float = 20.0
    lambda_y: float = 40.0
    lambda_z: float = 4.0
    epochs: int = 4800
    lr: float = 1e-3
    lr_drops: tuple = (1600, 3200)  # lr /= 10 after these epochs
    batch_size: int = 50


def _subnet(rng, hidden) -> nn.MLP:
    dims = [SPLIT, *hidden, SPLIT]
    acts = ["relu"] * len(hidden) + ["linear"]
    # zero output head: a fresh model starts as the permutation composition
    return nn.MLP(dims, acts, rng=rng, zero_init_last=True)


@dataclass
class CouplingBlock:
    s1: nn.MLP
    s2: nn.MLP
    t1: nn.MLP
    t2: nn.MLP
    clamp: float = 2.0

    def _scale(self, raw: Tensor) -> Tensor:
        c = self.clamp
        return ad.mul(ad.tanh(ad.mul(raw, 1.0 / c)), c)

    def forward(self, x: Tensor, with_log_det: bool = False):
        u1, u2 = x[:, :SPLIT], x[:, SPLIT:]
        s2 = self._scale(self.s2.forward(u2))
        v1 = ad.add(ad.mul(u1, ad.exp(s2)), self.t2.forward(u2))
        s1 = self._scale(self.s1.forward(v1))
        v2 = ad.add(ad.mul(u2, ad.exp(s1)), self.t1.forward(v1))
        out = ad.concat([v1, v2], axis=1)
        if with_log_det:
            log_det = ad.add(ad.sum_(s2, axis=1), ad.sum_(s1, axis=1))
            return out, log_det
        return out

    def inverse(self, v: Tensor) -> Tensor:
        v1, v2 = v[:, :SPLIT], v[:, SPLIT:]
        s1 = self._scale(self.s1.forward(v1))
        u2 = ad.mul(ad.add(v2, ad.mul(self.t1.forward(v1), -1.0)), ad.exp(ad.mul(s1, -1.0)))
        s2 = self._scale(self.s2.forward(u2))
        u1 = ad.mul(ad.add(v1, ad.mul(self.t2.forward(u2), -1.0)), ad.exp(ad.mul(s2, -1.0)))
        return ad.concat([u1, u2], axis=1)

    def parameters(self):
        out = []
        for net in (self.s1, self.s2, self.t1, self.t2):
            out.extend(net.parameters())
        return out


class INNModel:
    """Coupling blocks interleaved with fixed random coordinate permutations."""

    def __init__(self, config: INNConfig | None = None, seed: int = 0):
        self.config = config or INNConfig()
        self.seed = seed
        rng = np.random.default_rng([seed, 0])
        self.blocks = [
            CouplingBlock(*(_subnet(rng, self.config.subnet_hidden) for _ in range(4)),
                          clamp=self.config.clamp)
            for _ in range(self.config.blocks)
        ]
        # one permutation ahead of each block, fixed at init
        self.perms = [rng.permutation(DIM) for _ in range(self.config.blocks)]
        self.inv_perms = [np.argsort(p) for p in self.perms]

    def parameters(self):
        out = []
        for b in self.blocks:
            out.extend(b.parameters())
        return out

    def forward(self, x) -> Tensor:
        x = ad.as_tensor(x)
        for perm, block in zip(self.perms, self.blocks):
            x = x[:, perm]
            x = block.forward(x)
        return x

    def inverse(self, yz) -> Tensor:
        x = ad.as_tensor(yz)
        for inv_perm, block in zip(reversed(self.inv_perms), reversed(self.blocks)):
            x = block.inverse(x)
            x = x[:, inv_perm]
        return x

    def generate(self, y_target, n: int, rng: np.random.Generator) -> np.ndarray:
        y_target = np.asarray(y_target, dtype=np.float64).reshape(1, LABEL_DIM)
        if n == 0:
            return np.empty((0, DIM))
        z = rng.standard_normal((n, DIM - LABEL_DIM))
        yz = np.hstack([np.repeat(y_target, n, axis=0), z])
        with ad.no_grad():
            x = self.inverse(yz).data
        x = np.clip(x, 0.0, 1.0)
        x[:, 1] = snap_h(x[:, 1])
        return x

    # -- checkpointing -----------------------------------------------------
    def save(self, directory):
        directory = Path(directory)
        directory.mkdir(parents=True, exist_ok=True)
        for i, block in enumerate(self.blocks):
            for name in ("s1", "s2", "t1", "t2"):
                nn.save_mlp(getattr(block, name), directory / f"block{i}_{name}.json")
        with open(directory / "manifest.json", "w") as fh:
            json.dump({"config": self.config.__dict__ | {
                           "subnet_hidden": list(self.config.subnet_hidden),
                           "lr_drops": list(self.config.lr_drops)},
                       "seed": self.seed,
                       "perms": [p.tolist() for p in self.perms]}, fh, indent=2)

    @classmethod
    def load(cls, directory) -> "INNModel":
        directory = Path(directory)
        with open(directory / "manifest.json") as fh:
            manifest = json.load(fh)
        cfg_d = manifest["config"]
        cfg = INNConfig(**{**cfg_d,
                           "subnet_hidden": tuple(cfg_d["subnet_hidden"]),
                           "lr_drops": tuple(cfg_d["lr_drops"])})
        model = cls(cfg, seed=manifest["seed"])
        model.perms = [np.asarray(p) for p in manifest["perms"]]
        model.inv_perms = [np.argsort(p) for p in model.perms]
        for i, block in enumerate(model.blocks):
            for name in ("s1", "s2", "t1", "t2"):
                setattr(block, name, nn.load_mlp(directory / f"block{i}_{name}.json"))
        return model


def loss_forward(model: INNModel, x, y, z_draw) -> Tensor:
    """lambda_Y * MSE(y-head, y) + lambda_Z * MMD(joint output, [y, z])."""
    cfg = model.config
    out = model.forward(x)
    y_head = out[:, :LABEL_DIM]
    mse = ad.mean(ad.square(ad.add(y_head, -np.asarray(y))))
    ref = np.hstack([np.asarray(y), np.asarray(z_draw)])
    return ad.add(ad.mul(mse, cfg.lambda_y), ad.mul(mmd2(out, ref), cfg.lambda_z))


def loss_reverse(model: INNModel, x, y, z_draw) -> Tensor:
    """lambda_X * MMD(inverse([y, z]), x)."""
    yz = np.hstack([np.asarray(y), np.asarray(z_draw)])
    x_gen = model.inverse(yz)
    return ad.mul(mmd2(x_gen, np.asarray(x)), model.config.lambda_x)


def train_inn(dataset: Dataset, config: INNConfig | None = None, seed: int = 0,
              log=None) -> INNModel:
    """Alternating forward/reverse optimization with Adam and a step lr drop."""
    if len(dataset) == 0:
        raise ValueError("empty dataset")
    cfg = config or INNConfig()
    model = INNModel(cfg, seed=seed)
    opt = nn.Adam(model.parameters(), lr=cfg.lr)
    rng = np.random.default_rng([seed, 1])
    n = len(dataset)
    batch = min(cfg.batch_size, n)
    params = model.parameters()
    for epoch in range(cfg.epochs):
        lr = cfg.lr * (0.1 ** sum(epoch >= d for d in cfg.lr_drops))
        opt.set_lr(lr)
        order = rng.permutation(n)
        for start in range(0, n - batch + 1, batch):
            idx = order[start:start + batch]
            xb, yb = dataset.x[idx], dataset.y[idx]
            z = rng.standard_normal((len(idx), DIM - LABEL_DIM))
            lf = loss_forward(model, xb, yb, z)
            if not np.isfinite(lf.item()):
                raise DivergenceError(f"INN forward loss NaN at epoch {epoch}")
            opt.zero_grad()
            ad.backward(lf, params)
            opt.step()

            z = rng.standard_normal((len(idx), DIM - LABEL_DIM))
            lr_loss = loss_reverse(model, xb, yb, z)
            if not np.isfinite(lr_loss.item()):
                raise DivergenceError(f"INN reverse loss NaN at epoch {epoch}")
            opt.zero_grad()
            ad.backward(lr_loss, params)
            opt.step()
        if log is not None and (epoch % max(1, cfg.epochs // 20) == 0):
            log(epoch, lf.item(), lr_loss.item())
    return model
