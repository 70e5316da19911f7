"""Invertible network tests: bijectivity, log-determinants, training smoke."""

import numpy as np
import pytest

from invbench import autodiff as ad
from invbench.autodiff import Tensor
from invbench.inn import (CouplingBlock, INNConfig, INNModel, _subnet,
                          loss_forward, loss_reverse, train_inn)
from invbench.problem import make_dataset

TINY = INNConfig(blocks=3, subnet_hidden=(16,), epochs=3, lr_drops=(1, 2),
                 batch_size=16)


def fresh_block(seed=0, hidden=(12,)):
    rng = np.random.default_rng(seed)
    nets = [_subnet(rng, hidden) for _ in range(4)]
    for net in nets:  # non-trivial transforms for log-det checks
        net.layers[-1].weight.data = rng.normal(size=net.layers[-1].weight.shape) * 0.3
    return CouplingBlock(*nets)


class TestBijectivity:
    def test_fresh_model_round_trip(self):
        model = INNModel(TINY, seed=0)
        x = np.random.default_rng(1).uniform(size=(1000, 6))
        with ad.no_grad():
            back = model.inverse(model.forward(x)).data
        assert np.abs(back - x).max() < 1e-8

    def test_block_round_trip(self):
        block = fresh_block()
        x = Tensor(np.random.default_rng(2).normal(size=(50, 6)))
        with ad.no_grad():
            back = block.inverse(block.forward(x)).data
        assert np.abs(back - x.data).max() < 1e-10

    def test_fresh_model_is_permutation_composition(self):
        # zero-initialized subnet heads make every block the identity
        model = INNModel(TINY, seed=3)
        x = np.random.default_rng(4).uniform(size=(10, 6))
        expected = x.copy()
        for perm in model.perms:
            expected = expected[:, perm]
        with ad.no_grad():
            np.testing.assert_allclose(model.forward(x).data, expected, atol=1e-14)


class TestLogDet:
    def test_matches_finite_difference_jacobian(self):
        block = fresh_block(seed=5)
        x0 = np.random.default_rng(6).normal(size=6)
        with ad.no_grad():
            _, log_det = block.forward(Tensor(x0[None, :]), with_log_det=True)
        eps = 1e-6
        jac = np.empty((6, 6))
        for j in range(6):
            xp, xm = x0.copy(), x0.copy()
            xp[j] += eps
            xm[j] -= eps
            with ad.no_grad():
                fp = block.forward(Tensor(xp[None, :])).data[0]
                fm = block.forward(Tensor(xm[None, :])).data[0]
            jac[:, j] = (fp - fm) / (2 * eps)
        sign, ref = np.linalg.slogdet(jac)
        assert sign == 1.0
        assert log_det.data[0] == pytest.approx(ref, rel=1e-4)

    def test_identity_block_zero_log_det(self):
        rng = np.random.default_rng(0)
        block = CouplingBlock(*(_subnet(rng, (8,)) for _ in range(4)))
        with ad.no_grad():
            _, log_det = block.forward(Tensor(np.ones((4, 6))), with_log_det=True)
        np.testing.assert_array_equal(log_det.data, np.zeros(4))


class TestLosses:
    def test_forward_loss_finite_positive(self):
        ds = make_dataset(32, seed=0)
        model = INNModel(TINY, seed=0)
        z = np.random.default_rng(0).standard_normal((32, 3))
        val = loss_forward(model, ds.x, ds.y, z).item()
        assert np.isfinite(val) and val > 0

    def test_reverse_loss_finite_positive(self):
        ds = make_dataset(32, seed=0)
        model = INNModel(TINY, seed=0)
        z = np.random.default_rng(0).standard_normal((32, 3))
        val = loss_reverse(model, ds.x, ds.y, z).item()
        assert np.isfinite(val) and val > 0


class TestTraining:
    def test_train_and_generate(self):
        ds = make_dataset(64, seed=1)
        model = train_inn(ds, TINY, seed=0)
        out = model.generate(ds.y[0], 25, np.random.default_rng(0))
        assert out.shape == (25, 6)
        assert (out >= 0).all() and (out <= 1).all()
        assert np.isin(np.round(out[:, 1] * 8), np.arange(9)).all()

    def test_trained_round_trip_stays_exact(self):
        ds = make_dataset(64, seed=1)
        model = train_inn(ds, TINY, seed=0)
        x = np.random.default_rng(2).uniform(size=(200, 6))
        with ad.no_grad():
            back = model.inverse(model.forward(x)).data
        assert np.abs(back - x).max() < 1e-8

    def test_empty_dataset_rejected(self):
        with pytest.raises(ValueError):
            train_inn(make_dataset(1, seed=0).__class__(np.empty((0, 6)),
                                                        np.empty((0, 3))), TINY)

    def test_generate_zero(self):
        model = INNModel(TINY, seed=0)
        assert model.generate(np.zeros(3), 0, np.random.default_rng(0)).shape == (0, 6)


class TestCheckpoint:
    def test_save_load_exact(self, tmp_path):
        ds = make_dataset(40, seed=2)
        model = train_inn(ds, TINY, seed=1)
        model.save(tmp_path / "inn")
        back = INNModel.load(tmp_path / "inn")
        x = np.random.default_rng(3).uniform(size=(20, 6))
        with ad.no_grad():
            assert np.array_equal(model.forward(x).data, back.forward(x).data)
        assert [p.tolist() for p in back.perms] == [p.tolist() for p in model.perms]
