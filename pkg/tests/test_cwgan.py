"""Conditional WGAN-GP tests: encodings, gradient penalty, training smoke."""

import numpy as np
import pytest

from invbench import autodiff as ad
from invbench import nn
from invbench.cwgan import (CONT_IDX, ENC_DIM, Critic, Generator, GPConfig,
                            critic_loss, decode_design, encode_design,
                            generator_loss, gradient_penalty, train_cwgan)
from invbench.errors import CapabilityError
from invbench.problem import make_dataset

TINY = GPConfig(latent_dim=4, gen_hidden=(24, 24), critic_hidden=(16, 16),
                gen_updates=3, batch_size=16, val_every=2)


class TestEncoding:
    def test_round_trip(self):
        x = make_dataset(50, seed=0).x
        enc = encode_design(x)
        assert enc.shape == (50, ENC_DIM)
        cat = np.argmax(enc[:, len(CONT_IDX):], axis=1)
        back = decode_design(enc[:, : len(CONT_IDX)], cat)
        np.testing.assert_allclose(back, x, atol=1e-12)

    def test_one_hot_rows(self):
        enc = encode_design(make_dataset(30, seed=1).x)
        onehot = enc[:, len(CONT_IDX):]
        np.testing.assert_array_equal(onehot.sum(axis=1), np.ones(30))
        assert set(np.unique(onehot)) <= {0.0, 1.0}


def linear_critic(weight_vec):
    """Critic whose score is weight_vec . [x_enc, y] (single linear layer)."""
    cfg = GPConfig(critic_hidden=())
    critic = Critic.__new__(Critic)
    critic.config = cfg
    critic.net = nn.MLP([ENC_DIM + 3, 1], ["linear"], rng=np.random.default_rng(0))
    critic.net.layers[0].weight.data = np.asarray(weight_vec, dtype=np.float64).reshape(-1, 1)
    critic.net.layers[0].bias.data = np.zeros(1)
    return critic


class TestGradientPenalty:
    def setup_method(self):
        rng = np.random.default_rng(0)
        self.rng = rng
        self.real = rng.uniform(size=(8, ENC_DIM))
        self.fake = rng.uniform(size=(8, ENC_DIM))
        self.y = rng.uniform(size=(8, 3))

    def test_unit_slope_gives_zero(self):
        w = np.zeros(ENC_DIM + 3)
        w[0] = 1.0  # gradient w.r.t. design encoding has norm exactly 1
        pen = gradient_penalty(linear_critic(w), self.real, self.fake, self.y,
                               self.rng, coeff=10.0)
        assert pen.item() == pytest.approx(0.0, abs=1e-24)

    def test_double_slope_gives_coeff(self):
        w = np.zeros(ENC_DIM + 3)
        w[0] = 2.0
        pen = gradient_penalty(linear_critic(w), self.real, self.fake, self.y,
                               self.rng, coeff=10.0)
        assert pen.item() == pytest.approx(10.0, rel=1e-12)

    def test_constant_critic_gives_coeff(self):
        pen = gradient_penalty(linear_critic(np.zeros(ENC_DIM + 3)), self.real,
                               self.fake, self.y, self.rng, coeff=10.0)
        assert pen.item() == pytest.approx(10.0, rel=1e-12)

    def test_label_slope_not_penalized(self):
        # only the design-encoding gradient enters the norm
        w = np.zeros(ENC_DIM + 3)
        w[0] = 1.0
        w[-1] = 5.0
        pen = gradient_penalty(linear_critic(w), self.real, self.fake, self.y,
                               self.rng, coeff=10.0)
        assert pen.item() == pytest.approx(0.0, abs=1e-24)

    def test_relu_critic_rejected(self):
        critic = Critic(TINY, seed=0)
        critic.net.layers[0].activation = "relu"
        with pytest.raises(CapabilityError):
            gradient_penalty(critic, self.real, self.fake, self.y, self.rng)

    def test_parameter_gradient_matches_finite_difference(self):
        cfg = GPConfig(critic_hidden=(6,))
        critic = Critic(cfg, seed=1)
        rng_state = np.random.default_rng(5)
        eps_draw = rng_state.uniform(size=(8, 1))

        class FixedRng:
            def uniform(self, size):
                return eps_draw

        def value():
            return gradient_penalty(critic, self.real, self.fake, self.y,
                                    FixedRng(), coeff=10.0)

        pen = value()
        params = critic.net.parameters()
        grads = ad.grad(pen, params)
        eps = 1e-6
        for p, g in zip(params, grads):
            flat = p.data.ravel()
            orig = flat[0]
            flat[0] = orig + eps
            up = value().item()
            flat[0] = orig - eps
            down = value().item()
            flat[0] = orig
            fd = (up - down) / (2 * eps)
            assert abs(g.data.ravel()[0] - fd) < 1e-4 * max(1.0, abs(fd))


class TestLosses:
    def test_critic_loss_finite(self):
        ds = make_dataset(16, seed=0)
        critic = Critic(TINY, seed=0)
        gen = Generator(TINY, seed=0)
        rng = np.random.default_rng(0)
        z = rng.standard_normal((16, TINY.latent_dim))
        with ad.no_grad():
            fake = gen.forward(z, ds.y).data
        val = critic_loss(critic, encode_design(ds.x), fake, ds.y, rng).item()
        assert np.isfinite(val)

    def test_generator_loss_finite(self):
        ds = make_dataset(16, seed=0)
        critic = Critic(TINY, seed=0)
        gen = Generator(TINY, seed=0)
        z = np.random.default_rng(0).standard_normal((16, TINY.latent_dim))
        assert np.isfinite(generator_loss(critic, gen, ds.y, z).item())


class TestTraining:
    def test_train_generate_and_log(self, tmp_path):
        ds = make_dataset(64, seed=0)
        val_targets = make_dataset(10, seed=1).y
        log = tmp_path / "log.csv"
        gen = train_cwgan(ds, val_targets, TINY, seed=0, log_path=log)
        out = gen.generate(ds.y[0], 12, np.random.default_rng(0))
        assert out.shape == (12, 6)
        assert (out >= 0).all() and (out <= 1).all()
        assert np.isin(np.round(out[:, 1] * 8), np.arange(9)).all()
        lines = log.read_text().splitlines()
        assert lines[0] == "step,critic_loss,gen_loss,penalty,val_mse"
        assert len(lines) == 1 + TINY.gen_updates

    def test_empty_validation_rejected(self):
        ds = make_dataset(16, seed=0)
        with pytest.raises(ValueError):
            train_cwgan(ds, np.empty((0, 3)), TINY)


class TestCheckpoint:
    def test_save_load_exact(self, tmp_path):
        gen = Generator(TINY, seed=4)
        gen.save(tmp_path / "gan")
        back = Generator.load(tmp_path / "gan")
        z = np.random.default_rng(0).standard_normal((5, TINY.latent_dim))
        y = np.zeros((5, 3))
        with ad.no_grad():
            np.testing.assert_array_equal(gen.forward(z, y).data,
                                          back.forward(z, y).data)
        assert back.config == gen.config
