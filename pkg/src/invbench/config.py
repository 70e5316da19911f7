"""Run profiles, published batch-size defaults, and seed derivation."""

from __future__ import annotations

from dataclasses import dataclass, field, replace

import numpy as np

from .bayes import MCMCConfig
from .cfm import CFMConfig
from .cwgan import GPConfig
from .inn import INNConfig
from .surrogate import SurrogateConfig

MODEL_FAMILIES = ("inn", "cfm", "cwgan", "bi")

# published training batch sizes by dataset size
BATCH_TABLE = {
    "inn": {100: 5, 500: 5, 1000: 20, 5000: 50, 10000: 500, 50000: 1000, 100000: 1000},
    "cfm": {100: 50, 500: 100, 1000: 100, 5000: 500, 10000: 500, 50000: 2500, 100000: 5000},
    "cwgan": {100: 50, 500: 50, 1000: 50, 5000: 500, 10000: 500, 50000: 1000, 100000: 1000},
}

DATASET_SIZES = (100, 500, 1000, 5000, 10000, 50000, 100000)

# counter-based seed derivation: global seed -> per-component streams.
# Appending new components never perturbs existing streams.
COMPONENT_IDS = {
    "dataset": 0,
    "test-targets": 1,
    "surrogate": 2,
    "inn": 3,
    "cfm": 4,
    "cwgan": 5,
    "bi": 6,
    "eval": 7,
    "diversity": 8,
}


def sub_seed(global_seed: int, component: str, *extra: int) -> list[int]:
    """Seed-sequence key for a component's rng stream."""
    return [int(global_seed), COMPONENT_IDS[component], *map(int, extra)]


def sub_rng(global_seed: int, component: str, *extra: int) -> np.random.Generator:
    return np.random.default_rng(sub_seed(global_seed, component, *extra))


def batch_size_for(family: str, d: int) -> int:
    """Published batch size for the dataset size (nearest listed size in log
    space when ``d`` is not tabulated)."""
    table = BATCH_TABLE[family]
    if d in table:
        return table[d]
    keys = np.array(sorted(table))
    nearest = keys[np.argmin(np.abs(np.log(keys) - np.log(d)))]
    return table[int(nearest)]


@dataclass
class Profile:
    """One benchmark scale: dataset sizes, seeds, and per-family training
    configurations."""

    name: str
    sizes: tuple
    seeds: tuple = (0, 1, 2)
    test_targets_n: int = 1000
    sigma: float = 0.0
    diversity_count: int = 5000
    inn: INNConfig = field(default_factory=INNConfig)
    cfm: CFMConfig = field(default_factory=CFMConfig)
    cwgan: GPConfig = field(default_factory=GPConfig)
    surrogate: SurrogateConfig = field(default_factory=SurrogateConfig)
    mcmc_accuracy: MCMCConfig = field(default_factory=MCMCConfig)
    mcmc_diversity: MCMCConfig = field(default_factory=MCMCConfig)

    def family_config(self, family: str, d: int):
        """Training config for one benchmark cell, with the tabulated batch size."""
        if family == "inn":
            return replace(self.inn, batch_size=batch_size_for("inn", d))
        if family == "cfm":
            return replace(self.cfm, batch_size=batch_size_for("cfm", d))
        if family == "cwgan":
            return replace(self.cwgan,
                           batch_size=min(batch_size_for("cwgan", d), self.cwgan.batch_size))
        if family == "bi":
            return self.surrogate
        raise ValueError(f"unknown model family {family!r}")


def full_profile() -> Profile:
    """Published hyperparameters throughout; intended for long cluster runs."""
    return Profile(name="full", sizes=DATASET_SIZES,
                   cwgan=GPConfig(gen_updates=150_000),
                   surrogate=SurrogateConfig(steps=40_000, batch_sizes=(5, 50, 200, 1000)))


def desk_profile() -> Profile:
    """Laptop-scale profile: same protocols, reduced widths/epochs/chains."""
    return Profile(
        name="desk",
        sizes=(100, 1000, 5000, 10000),
        test_targets_n=200,
        inn=INNConfig(blocks=4, subnet_hidden=(32,), epochs=30, lr_drops=(10, 20)),
        cfm=CFMConfig(hidden=(128, 128, 128), epochs=4800, lr_drops=(1600, 3200)),
        cwgan=GPConfig(gen_hidden=(256, 256, 256), gen_updates=1200,
                       batch_size=128, val_every=100),
        surrogate=SurrogateConfig(hidden=(16, 16), steps=1500,
                                  batch_sizes=(100,), eval_every=500),
        mcmc_accuracy=MCMCConfig(burn_in=100, iterations=400),
        mcmc_diversity=MCMCConfig(burn_in=500, iterations=10_500),
    )


PROFILES = {"desk": desk_profile, "full": full_profile}
