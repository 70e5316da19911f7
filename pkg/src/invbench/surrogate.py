"""Label-wise surrogate MLPs used as the MCMC likelihood forward model."""

from __future__ import annotations

import json
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from . import autodiff as ad
from . import nn
from .errors import DivergenceError
from .problem import Dataset, LABEL_NAMES


@dataclass
class SurrogateConfig:
    hidden: tuple = (200, 200, 200, 200)
    activation: str = "relu"
    steps: int = 12_000
    batch_sizes: tuple = (100,)  # grid searched; lowest test MSE wins
    lr: float = 1e-3
    betas: tuple = (0.9, 0.999)
    eval_every: int = 1000


@dataclass
class SurrogateSet:
    """One MLP per performance label, each mapping [0,1]^6 -> R."""

    models: list  # three MLPs in LABEL_NAMES order
    train_size: int = 0
    seed: int | None = None
    test_mae: np.ndarray = field(default_factory=lambda: np.full(3, np.nan))

    def predict(self, x: np.ndarray) -> np.ndarray:
        x = np.atleast_2d(np.asarray(x, dtype=np.float64))
        return np.column_stack([m.predict(x)[:, 0] for m in self.models])

    def save(self, directory):
        directory = Path(directory)
        directory.mkdir(parents=True, exist_ok=True)
        for name, model in zip(LABEL_NAMES, self.models):
            nn.save_mlp(model, directory / f"surrogate_{name}.json")
        with open(directory / "manifest.json", "w") as fh:
            json.dump({"labels": list(LABEL_NAMES),
                       "train_size": self.train_size,
                       "seed": self.seed,
                       "test_mae": [float(v) for v in self.test_mae]}, fh, indent=2)

    @classmethod
    def load(cls, directory) -> "SurrogateSet":
        directory = Path(directory)
        with open(directory / "manifest.json") as fh:
            manifest = json.load(fh)
        models = [nn.load_mlp(directory / f"surrogate_{name}.json")
                  for name in LABEL_NAMES]
        return cls(models, train_size=manifest["train_size"],
                   seed=manifest["seed"],
                   test_mae=np.asarray(manifest["test_mae"]))


def _mse(model: nn.MLP, x: np.ndarray, y: np.ndarray) -> float:
    pred = model.predict(x)[:, 0]
    return float(np.mean((pred - y) ** 2))


def _train_one(x_tr, y_tr, x_te, y_te, cfg: SurrogateConfig, batch: int,
               rng: np.random.Generator) -> tuple[nn.MLP, float]:
    dims = [6, *cfg.hidden, 1]
    acts = [cfg.activation] * len(cfg.hidden) + ["linear"]
    model = nn.MLP(dims, acts, rng=rng)
    opt = nn.Adam(model.parameters(), lr=cfg.lr, betas=cfg.betas)
    n = x_tr.shape[0]
    batch = min(batch, n)
    best_mse = _mse(model, x_te, y_te)
    best_weights = nn.get_weights(model)
    for step in range(1, cfg.steps + 1):
        idx = rng.integers(0, n, size=batch)
        pred = model.forward(x_tr[idx])
        err = ad.add(pred, -y_tr[idx, None])
        loss = ad.mean(ad.square(err))
        if not np.isfinite(loss.item()):
            raise DivergenceError("surrogate training diverged")
        opt.zero_grad()
        ad.backward(loss, model.parameters())
        opt.step()
        if step % cfg.eval_every == 0 or step == cfg.steps:
            mse = _mse(model, x_te, y_te)
            if mse < best_mse:
                best_mse = mse
                best_weights = nn.get_weights(model)
    nn.set_weights(model, best_weights)
    return model, best_mse


def train_surrogates(train: Dataset, test: Dataset, config: SurrogateConfig | None = None,
                     seed: int = 0) -> SurrogateSet:
    """Train one MLP per label; the checkpoint (and batch size) with the lowest
    test MSE is retained."""
    if len(train) == 0:
        raise ValueError("empty training set")
    if len(test) == 0:
        raise ValueError("empty test set")
    cfg = config or SurrogateConfig()
    models = []
    for i in range(3):
        best = None
        for bi, batch in enumerate(cfg.batch_sizes):
            rng = np.random.default_rng([seed, i, bi])
            model, mse = _train_one(train.x, train.y[:, i], test.x, test.y[:, i],
                                    cfg, batch, rng)
            if best is None or mse < best[1]:
                best = (model, mse)
        models.append(best[0])
    out = SurrogateSet(models, train_size=len(train), seed=seed)
    out.test_mae = surrogate_mae(out, test)
    return out


def surrogate_mae(s: SurrogateSet, test: Dataset) -> np.ndarray:
    """Per-label mean absolute error on a test set."""
    if len(test) == 0:
        raise ValueError("empty test set")
    return np.abs(s.predict(test.x) - test.y).mean(axis=0)
