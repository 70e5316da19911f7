"""Conditional Wasserstein GAN with gradient penalty.

The generator emits five sigmoid-bounded continuous parameters plus a 9-way
softmax over the hole-count category; the critic scores (design encoding,
condition) pairs and is regularized toward unit input-gradient norm on
real/fake interpolates (double backprop through the autodiff engine).
"""

from __future__ import annotations

import json
from dataclasses import dataclass
from pathlib import Path

import numpy as np

from . import autodiff as ad
from . import nn
from .autodiff import Tensor
from .errors import CapabilityError, DivergenceError
from .problem import Dataset, forward_model

DIM = 6
LABEL_DIM = 3
CONT_IDX = [0, 2, 3, 4, 5]  # (a, m, d, l, p); h is the categorical slot
N_CAT = 9
ENC_DIM = len(CONT_IDX) + N_CAT


@dataclass
class GPConfig:
    latent_dim: int = 8
    gen_hidden: tuple = (1500, 1500, 1500, 1500, 1500)
    critic_hidden: tuple = (64, 64, 64)
    leaky_slope: float = 0.2
    penalty_coeff: float = 10.0
    critic_steps: int = 5  # critic updates per generator update
    gen_updates: int = 20_000
    lr: float = 2e-4
    betas: tuple = (0.0, 0.9)
    batch_size: int = 500
    val_every: int = 200


def encode_design(x: np.ndarray) -> np.ndarray:
    """(n, 6) normalized designs -> (n, 14) critic encoding with one-hot h."""
    x = np.atleast_2d(np.asarray(x, dtype=np.float64))
    cat = np.rint(x[:, 1] * 8).astype(int)
    onehot = np.eye(N_CAT)[cat]
    return np.hstack([x[:, CONT_IDX], onehot])


def decode_design(cont: np.ndarray, cat_idx: np.ndarray) -> np.ndarray:
    out = np.empty((cont.shape[0], DIM))
    out[:, CONT_IDX] = cont
    out[:, 1] = cat_idx / 8.0
    return out


class Generator:
    def __init__(self, config: GPConfig, seed: int = 0):
        self.config = config
        rng = np.random.default_rng([seed, 0])
        dims = [config.latent_dim + LABEL_DIM, *config.gen_hidden, ENC_DIM]
        acts = ["relu"] * len(config.gen_hidden) + ["linear"]
        self.net = nn.MLP(dims, acts, rng=rng)
        self.seed = seed

    def forward(self, z, y) -> Tensor:
        """Graph-recording pass; returns the (n, 14) relaxed encoding
        (sigmoid continuous block, softmax category block)."""
        inp = np.hstack([np.asarray(z, dtype=np.float64),
                         np.asarray(y, dtype=np.float64)])
        raw = self.net.forward(inp)
        cont = ad.sigmoid(raw[:, : len(CONT_IDX)])
        cat = ad.softmax(raw[:, len(CONT_IDX):])
        return ad.concat([cont, cat], axis=1)

    def generate(self, y_target, n: int, rng: np.random.Generator) -> np.ndarray:
        if n == 0:
            return np.empty((0, DIM))
        z = rng.standard_normal((n, self.config.latent_dim))
        y = np.repeat(np.asarray(y_target, dtype=np.float64).reshape(1, LABEL_DIM),
                      n, axis=0)
        with ad.no_grad():
            enc = self.forward(z, y).data
        cont = enc[:, : len(CONT_IDX)]
        cat_idx = np.argmax(enc[:, len(CONT_IDX):], axis=1)
        return decode_design(cont, cat_idx)

    def save(self, directory):
        directory = Path(directory)
        directory.mkdir(parents=True, exist_ok=True)
        nn.save_mlp(self.net, directory / "generator.json")
        with open(directory / "manifest.json", "w") as fh:
            json.dump({"config": self.config.__dict__ | {
                           "gen_hidden": list(self.config.gen_hidden),
                           "critic_hidden": list(self.config.critic_hidden),
                           "betas": list(self.config.betas)},
                       "seed": self.seed}, fh, indent=2)

    @classmethod
    def load(cls, directory) -> "Generator":
        directory = Path(directory)
        with open(directory / "manifest.json") as fh:
            manifest = json.load(fh)
        cfg_d = manifest["config"]
        cfg = GPConfig(**{**cfg_d, "gen_hidden": tuple(cfg_d["gen_hidden"]),
                          "critic_hidden": tuple(cfg_d["critic_hidden"]),
                          "betas": tuple(cfg_d["betas"])})
        model = cls(cfg, seed=manifest["seed"])
        model.net = nn.load_mlp(directory / "generator.json")
        return model


class Critic:
    def __init__(self, config: GPConfig, seed: int = 0):
        self.config = config
        rng = np.random.default_rng([seed, 1])
        dims = [ENC_DIM + LABEL_DIM, *config.critic_hidden, 1]
        acts = ["leaky_relu"] * len(config.critic_hidden) + ["linear"]
        self.net = nn.MLP(dims, acts, rng=rng, leaky_slope=config.leaky_slope)

    def score(self, x_enc, y) -> Tensor:
        x_enc = ad.as_tensor(x_enc)
        y_t = ad.as_tensor(y)
        return self.net.forward(ad.concat([x_enc, y_t], axis=1))


def gradient_penalty(critic: Critic, x_real_enc: np.ndarray, x_fake_enc: np.ndarray,
                     y: np.ndarray, rng: np.random.Generator,
                     coeff: float | None = None) -> Tensor:
    """coeff * mean (||grad_x critic(x_tilde, y)||_2 - 1)^2 on per-sample
    uniform interpolates between real and fake encodings."""
    for layer in critic.net.layers:
        if layer.activation not in nn.SECOND_ORDER_ACTIVATIONS:
            raise CapabilityError(
                f"critic activation {layer.activation!r} unsupported for gradient penalty")
    if coeff is None:
        coeff = critic.config.penalty_coeff
    eps = rng.uniform(size=(x_real_enc.shape[0], 1))
    interp = eps * x_real_enc + (1.0 - eps) * x_fake_enc
    xt = Tensor(interp, requires_grad=True)
    out = critic.score(xt, np.asarray(y, dtype=np.float64))
    gx = ad.grad(ad.sum_(out), [xt], create_graph=True)[0]
    return ad.mul(ad.mean(ad.square(ad.add(ad.rownorm(gx), -1.0))), coeff)


def critic_loss(critic: Critic, x_real_enc, x_fake_enc, y,
                rng: np.random.Generator) -> Tensor:
    """Negated Wasserstein objective plus gradient penalty (minimized)."""
    wass = ad.add(ad.mean(critic.score(x_real_enc, y)),
                  ad.mul(ad.mean(critic.score(x_fake_enc, y)), -1.0))
    pen = gradient_penalty(critic, np.asarray(x_real_enc), np.asarray(x_fake_enc),
                           y, rng)
    return ad.add(ad.mul(wass, -1.0), pen)


def generator_loss(critic: Critic, generator: Generator, y, z) -> Tensor:
    fake = generator.forward(z, y)
    return ad.mul(ad.mean(critic.score(fake, y)), -1.0)


def _validation_mse(generator: Generator, val_targets: np.ndarray,
                    rng: np.random.Generator) -> float:
    # one design per target, generated in a single batched pass
    n = val_targets.shape[0]
    z = rng.standard_normal((n, generator.config.latent_dim))
    with ad.no_grad():
        enc = generator.forward(z, val_targets).data
    cont = enc[:, : len(CONT_IDX)]
    cat_idx = np.argmax(enc[:, len(CONT_IDX):], axis=1)
    x = decode_design(cont, cat_idx)
    achieved = forward_model(x, sigma=0.0)
    return float(np.mean((achieved - val_targets) ** 2))


def train_cwgan(dataset: Dataset, val_targets: np.ndarray,
                config: GPConfig | None = None, seed: int = 0,
                log_path=None) -> Generator:
    """5:1 critic/generator schedule; the generator with the lowest validation
    MSE (oracle labels of generated designs vs targets) is retained."""
    if len(dataset) == 0:
        raise ValueError("empty dataset")
    val_targets = np.asarray(val_targets, dtype=np.float64)
    if val_targets.size == 0:
        raise ValueError("empty validation set")
    cfg = config or GPConfig()
    gen = Generator(cfg, seed=seed)
    critic = Critic(cfg, seed=seed)
    opt_g = nn.Adam(gen.net.parameters(), lr=cfg.lr, betas=cfg.betas)
    opt_c = nn.Adam(critic.net.parameters(), lr=cfg.lr, betas=cfg.betas)
    rng = np.random.default_rng([seed, 2])
    n = len(dataset)
    batch = min(cfg.batch_size, n)
    enc_real_all = encode_design(dataset.x)

    best_val = np.inf
    best_weights = nn.get_weights(gen.net)
    log_fh = open(log_path, "w") if log_path else None
    if log_fh:
        log_fh.write("step,critic_loss,gen_loss,penalty,val_mse\n")
    c_loss_val = g_loss_val = pen_val = float("nan")
    try:
        for step in range(1, cfg.gen_updates + 1):
            for _ in range(cfg.critic_steps):
                idx = rng.integers(0, n, size=batch)
                y = dataset.y[idx]
                z = rng.standard_normal((batch, cfg.latent_dim))
                with ad.no_grad():
                    fake = gen.forward(z, y).data
                pen = gradient_penalty(critic, enc_real_all[idx], fake, y, rng)
                wass = ad.add(ad.mean(critic.score(enc_real_all[idx], y)),
                              ad.mul(ad.mean(critic.score(fake, y)), -1.0))
                loss_c = ad.add(ad.mul(wass, -1.0), pen)
                if not np.isfinite(loss_c.item()):
                    raise DivergenceError(f"critic loss NaN at step {step}")
                opt_c.zero_grad()
                ad.backward(loss_c, critic.net.parameters())
                opt_c.step()
                c_loss_val, pen_val = loss_c.item(), pen.item()

            idx = rng.integers(0, n, size=batch)
            y = dataset.y[idx]
            z = rng.standard_normal((batch, cfg.latent_dim))
            loss_g = generator_loss(critic, gen, y, z)
            if not np.isfinite(loss_g.item()):
                raise DivergenceError(f"generator loss NaN at step {step}")
            opt_g.zero_grad()
            ad.backward(loss_g, gen.net.parameters())
            opt_g.step()
            g_loss_val = loss_g.item()

            val_mse = ""
            if step % cfg.val_every == 0 or step == cfg.gen_updates:
                vm = _validation_mse(gen, val_targets, np.random.default_rng([seed, 3, step]))
                val_mse = f"{vm:.8g}"
                if vm < best_val:
                    best_val = vm
                    best_weights = nn.get_weights(gen.net)
            if log_fh:
                log_fh.write(f"{step},{c_loss_val:.8g},{g_loss_val:.8g},{pen_val:.8g},{val_mse}\n")
    finally:
        if log_fh:
            log_fh.close()
    nn.set_weights(gen.net, best_weights)
    return gen
