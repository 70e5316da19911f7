"""Profile, batch-table, and seed-derivation tests."""

import numpy as np
import pytest

from invbench.config import (BATCH_TABLE, COMPONENT_IDS, DATASET_SIZES,
                             MODEL_FAMILIES, PROFILES, batch_size_for,
                             desk_profile, full_profile, sub_rng, sub_seed)


class TestBatchTable:
    def test_published_values(self):
        assert BATCH_TABLE["inn"] == {100: 5, 500: 5, 1000: 20, 5000: 50,
                                      10000: 500, 50000: 1000, 100000: 1000}
        assert BATCH_TABLE["cfm"] == {100: 50, 500: 100, 1000: 100, 5000: 500,
                                      10000: 500, 50000: 2500, 100000: 5000}
        assert BATCH_TABLE["cwgan"] == {100: 50, 500: 50, 1000: 50, 5000: 500,
                                        10000: 500, 50000: 1000, 100000: 1000}

    def test_exact_lookup(self):
        for fam, table in BATCH_TABLE.items():
            for d, b in table.items():
                assert batch_size_for(fam, d) == b

    def test_nearest_in_log_space(self):
        assert batch_size_for("cfm", 700) == BATCH_TABLE["cfm"][500]
        assert batch_size_for("cfm", 3000) == BATCH_TABLE["cfm"][5000]

    def test_sizes_cover_study_grid(self):
        for table in BATCH_TABLE.values():
            assert set(table) == set(DATASET_SIZES)


class TestSeeds:
    def test_sub_seed_structure(self):
        assert sub_seed(7, "cfm", 5000, 1) == [7, COMPONENT_IDS["cfm"], 5000, 1]

    def test_streams_differ_between_components(self):
        a = sub_rng(0, "inn").uniform(size=4)
        b = sub_rng(0, "cfm").uniform(size=4)
        assert not np.array_equal(a, b)

    def test_streams_reproducible(self):
        assert np.array_equal(sub_rng(3, "eval", 9).uniform(size=4),
                              sub_rng(3, "eval", 9).uniform(size=4))

    def test_unknown_component_rejected(self):
        with pytest.raises(KeyError):
            sub_seed(0, "nope")


class TestProfiles:
    def test_registry(self):
        assert set(PROFILES) == {"desk", "full"}

    def test_full_uses_published_scale(self):
        p = full_profile()
        assert p.sizes == DATASET_SIZES
        assert p.inn.epochs == 4800 and p.cfm.epochs == 4800
        assert p.inn.blocks == 10
        assert p.cfm.hidden == (500,) * 5
        assert p.cwgan.gen_hidden == (1500,) * 5
        assert p.mcmc_accuracy.burn_in == 10_000
        assert p.mcmc_accuracy.iterations == 60_000

    def test_desk_is_reduced(self):
        p = desk_profile()
        f = full_profile()
        assert p.cfm.epochs <= f.cfm.epochs
        assert p.inn.blocks <= f.inn.blocks
        assert p.mcmc_accuracy.iterations < f.mcmc_accuracy.iterations
        assert set(p.sizes) <= set(DATASET_SIZES)

    def test_family_config_applies_batch_table(self):
        p = desk_profile()
        for fam in ("inn", "cfm"):
            cfg = p.family_config(fam, 5000)
            assert cfg.batch_size == BATCH_TABLE[fam][5000]

    def test_family_config_unknown(self):
        with pytest.raises(ValueError):
            desk_profile().family_config("vae", 100)

    def test_families_constant(self):
        assert MODEL_FAMILIES == ("inn", "cfm", "cwgan", "bi")
