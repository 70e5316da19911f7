"""Evaluation-harness tests: target grids, MAE accounting, report exports."""

import json

import numpy as np
import pytest

from invbench import evalsuite
from invbench.cfm import CFMConfig, train_cfm
from invbench.config import desk_profile
from invbench.problem import forward_model, make_dataset


class PerfectModel:
    """Test double: returns stored designs whose oracle labels are the targets."""

    def __init__(self, designs):
        self.designs = np.atleast_2d(designs)
        self.calls = 0

    def generate(self, y, n, rng):
        out = self.designs[self.calls % len(self.designs)][None, :]
        self.calls += 1
        return np.repeat(out, n, axis=0)


class TestTargets:
    def test_diversity_grid(self):
        t = evalsuite.DIVERSITY_TARGETS
        assert t.shape == (27, 3)
        assert len({tuple(row) for row in t}) == 27
        assert set(np.unique(t[:, 0])) == {0.02, 0.06, 0.10}
        assert set(np.unique(t[:, 1])) == {0.033, 0.040, 0.045}
        assert set(np.unique(t[:, 2])) == {-0.5, 0.0, 0.5}

    def test_make_test_targets_deterministic(self):
        p = desk_profile()
        a = evalsuite.make_test_targets(p, 0)
        b = evalsuite.make_test_targets(p, 0)
        assert np.array_equal(a, b)
        assert a.shape == (p.test_targets_n, 3)
        assert not np.array_equal(a, evalsuite.make_test_targets(p, 1))


class TestAccuracy:
    def test_perfect_model_zero_mae(self):
        designs = make_dataset(10, seed=0).x
        targets = forward_model(designs)
        model = PerfectModel(designs)
        mae, achieved, out = evalsuite.accuracy_mae(model, targets,
                                                    np.random.default_rng(0))
        np.testing.assert_allclose(mae, np.zeros(3), atol=1e-14)
        np.testing.assert_allclose(achieved, targets, atol=1e-14)
        assert out.shape == (10, 6)

    def test_known_offset_mae(self):
        designs = np.tile(np.full(6, 0.5), (4, 1))
        targets = forward_model(designs) + np.array([0.01, -0.002, 0.05])
        mae, _, _ = evalsuite.accuracy_mae(PerfectModel(designs), targets,
                                           np.random.default_rng(0))
        np.testing.assert_allclose(mae, [0.01, 0.002, 0.05], rtol=1e-10)

    def test_empty_targets_rejected(self):
        with pytest.raises(ValueError):
            evalsuite.accuracy_mae(PerfectModel(np.full(6, 0.5)),
                                   np.empty((0, 3)), np.random.default_rng(0))

    def test_batched_dispatch_for_cfm(self):
        ds = make_dataset(48, seed=0)
        model = train_cfm(ds, CFMConfig(hidden=(16,), epochs=2, lr_drops=(1, 2),
                                        batch_size=16, integration_steps=5),
                          seed=0)
        mae, achieved, designs = evalsuite.accuracy_mae(
            model, ds.y[:5], np.random.default_rng(0))
        assert designs.shape == (5, 6)
        assert np.isfinite(mae).all()

    def test_sweep_rejects_off_grid_sizes(self):
        with pytest.raises(ValueError):
            evalsuite.dataset_size_sweep(["cfm"], [123], desk_profile())


class TestDiversity:
    def test_study_summaries(self):
        designs = make_dataset(5, seed=1).x
        model = PerfectModel(designs)
        targets = forward_model(designs)[:2]
        cells = evalsuite.diversity_study({"fake": model}, desk_profile(),
                                          targets=targets, count=9)
        assert len(cells) == 2
        for cell in cells:
            assert cell.samples.shape == (9, 6)
            assert cell.labels.shape == (9, 3)
            np.testing.assert_allclose(cell.std, np.zeros(3), atol=1e-14)
            np.testing.assert_allclose(cell.mean, forward_model(cell.samples[0]),
                                       atol=1e-14)


class TestExports:
    def make_cells(self):
        targets = np.array([[0.1, 0.04, 0.0], [0.05, 0.035, 0.5]])
        achieved = targets + 0.001
        return [evalsuite.AccuracyCell(model="cfm", d=100, seed=0,
                                       mae=np.array([1e-3, 2e-3, 3e-3]),
                                       targets=targets, achieved=achieved,
                                       runtime=1.5, cfg_hash="abc")]

    def test_accuracy_schema(self, tmp_path):
        path = tmp_path / "acc.csv"
        evalsuite.export_accuracy(self.make_cells(), path)
        lines = path.read_text().splitlines()
        assert lines[0] == "model,d,label,mae"
        assert len(lines) == 4
        assert lines[1].startswith("cfm,100,u_m,")
        assert float(lines[1].split(",")[-1]) == 1e-3

    def test_parity_schema(self, tmp_path):
        path = tmp_path / "parity.csv"
        evalsuite.export_parity(self.make_cells(), path)
        lines = path.read_text().splitlines()
        assert lines[0] == "model,d,label,target,achieved"
        assert len(lines) == 1 + 3 * 2

    def test_meta_export(self, tmp_path):
        path = tmp_path / "meta.json"
        evalsuite.export_accuracy_meta(self.make_cells(), path)
        meta = json.loads(path.read_text())
        assert meta[0]["model"] == "cfm" and meta[0]["config_hash"] == "abc"

    def test_diversity_schema(self, tmp_path):
        cell = evalsuite.DiversityCell(model="bi", target=np.array([0.1, 0.04, 0.0]),
                                       mean=np.zeros(3), std=np.zeros(3),
                                       samples=np.zeros((2, 6)),
                                       labels=np.zeros((2, 3)))
        path = tmp_path / "div.csv"
        evalsuite.export_diversity([cell], path)
        lines = path.read_text().splitlines()
        assert lines[0] == "model,target_um,target_dp,target_g,label,mean,std"
        assert len(lines) == 4

    def test_parameter_dump(self, tmp_path):
        cell = evalsuite.DiversityCell(model="cfm", target=np.array([0.1, 0.04, 0.0]),
                                       mean=np.zeros(3), std=np.zeros(3),
                                       samples=make_dataset(4, seed=0).x,
                                       labels=np.zeros((4, 3)))
        path = evalsuite.export_parameter_dump(cell, tmp_path)
        lines = path.read_text().splitlines()
        assert lines[0] == "a,h,m,d,l,p"
        assert len(lines) == 5

    def test_exports_idempotent(self, tmp_path):
        path = tmp_path / "acc.csv"
        cells = self.make_cells()
        evalsuite.export_accuracy(cells, path)
        first = path.read_text()
        evalsuite.export_accuracy(cells, path)
        assert path.read_text() == first


def test_config_hash_stable_and_distinct():
    a = CFMConfig()
    b = CFMConfig(epochs=1)
    assert evalsuite.config_hash(a) == evalsuite.config_hash(CFMConfig())
    assert evalsuite.config_hash(a) != evalsuite.config_hash(b)
